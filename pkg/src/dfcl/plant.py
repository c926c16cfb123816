"""Scalar plant with a linearly parameterized one-step model.

The output obeys y(k+1) = theta^T phi(k) + w(k) where the regressor
phi(k) = [phi_f(y-history); phi_g * u(k)] stacks output-dependent basis
terms and a known input gain slot, and w is a bounded disturbance.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SignalCorruptionError

DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class BasisTerm:
    """One output-dependent entry of phi_f.

    kind "lag" reads y(k - lag) directly, "gauss" applies
    exp(-(y(k - lag) - center)^2 / width) to it, and "const" is a fixed
    value (useful for bias terms and for degenerate test plants).
    """

    kind: str
    lag: int = 0
    center: float = 0.0
    width: float = 1.0
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("lag", "gauss", "const"):
            raise ConfigError(f"unknown basis term kind {self.kind!r}")
        if self.lag < 0:
            raise ConfigError("basis term lag must be >= 0")
        if self.kind == "gauss" and self.width <= 0:
            raise ConfigError("gauss basis term needs width > 0")


@dataclass(frozen=True)
class BasisConfig:
    """Regressor structure: the phi_f terms plus the input gain phi_g."""

    terms: tuple
    phi_g: float = 1.0

    def __post_init__(self):
        if not self.terms:
            raise ConfigError("basis needs at least one term")
        if not np.isfinite(self.phi_g) or self.phi_g == 0.0:
            raise ConfigError("phi_g must be finite and nonzero")

    @property
    def n(self):
        """Total regressor dimension including the input slot."""
        return len(self.terms) + 1

    @property
    def depth(self):
        """How many past outputs the basis needs (at least one)."""
        return max(term.lag for term in self.terms) + 1

    def output_terms(self, history):
        """Evaluate phi_f given history[j] = y(k - j)."""
        vals = np.empty(len(self.terms))
        for i, term in enumerate(self.terms):
            if term.kind == "const":
                vals[i] = term.value
                continue
            y = history[term.lag]
            if term.kind == "lag":
                vals[i] = y
            else:
                vals[i] = np.exp(-((y - term.center) ** 2) / term.width)
        return vals


@dataclass(frozen=True)
class TrueParameters:
    """Ground-truth theta and the known lower bound on the input gain.

    theta's last entry multiplies phi_g * u, so theta[-1] * phi_g is the
    effective control gain; its magnitude must stay >= g_lower.
    """

    theta: tuple
    g_lower: float

    def __post_init__(self):
        if self.g_lower <= 0 or not np.isfinite(self.g_lower):
            raise ConfigError("g_lower must be a positive finite number")
        if not all(np.isfinite(v) for v in self.theta):
            raise ConfigError("theta must be finite")

    @property
    def theta_vec(self):
        return np.asarray(self.theta, dtype=float)


def check_gain_bound(params, basis):
    """Raise unless the true control gain respects the declared bound."""
    gain = params.theta[-1] * basis.phi_g
    if abs(gain) < params.g_lower:
        raise ConfigError(
            f"true input gain {gain} is below the declared bound {params.g_lower}"
        )


@dataclass(frozen=True)
class DisturbanceSpec:
    """Bounded disturbance entering y(k+1).

    Kinds:
      zero                         w = 0 everywhere
      piecewise_output_dependent   w = amplitude * sin(y(k)) while
                                   k < switch_step, zero afterwards
      bounded_custom               either a user callable (k, y) -> w or,
                                   when none is given, seeded uniform
                                   noise in [-amplitude, amplitude]

    bound is the declared worst case W used by the analysis; samples are
    checked against it.
    """

    kind: str = "zero"
    amplitude: float = 0.0
    switch_step: int = 0
    bound: float = 0.0
    seed: int = 0
    custom: object = None

    def __post_init__(self):
        if self.kind not in ("zero", "piecewise_output_dependent", "bounded_custom"):
            raise ConfigError(f"unknown disturbance kind {self.kind!r}")
        if self.bound < 0 or not np.isfinite(self.bound):
            raise ConfigError("disturbance bound must be finite and >= 0")
        if self.kind != "zero":
            if abs(self.amplitude) > self.bound:
                raise ConfigError("disturbance amplitude exceeds the declared bound")
        if self.custom is not None and self.kind != "bounded_custom":
            raise ConfigError("custom disturbance callables require kind bounded_custom")


def disturbance_sample(spec, k, y):
    """Disturbance w(k) as a function of the step index and current output."""
    if spec.kind == "zero":
        return 0.0
    if spec.kind == "piecewise_output_dependent":
        if k < spec.switch_step:
            return spec.amplitude * float(np.sin(y))
        return 0.0
    if spec.custom is not None:
        w = float(spec.custom(k, y))
        if not np.isfinite(w) or abs(w) > spec.bound:
            raise SignalCorruptionError(
                f"custom disturbance returned {w} at step {k}, outside |w| <= {spec.bound}"
            )
        return w
    rng = np.random.default_rng((spec.seed, k))
    return spec.amplitude * (2.0 * rng.random() - 1.0)


@dataclass
class PlantState:
    """Rolling output history, history[0] being the newest sample."""

    history: deque
    k: int = 0

    @classmethod
    def initial(cls, y_init, depth):
        """Seed the history with y(0), y(-1), ... padding older taps with zero."""
        vals = list(y_init) + [0.0] * max(0, depth - len(y_init))
        return cls(history=deque(vals[:depth], maxlen=depth))

    def push(self, y_next):
        self.history.appendleft(y_next)
        self.k += 1


def build_regressor(state, u, basis):
    """Assemble phi(k) = [phi_f(history); phi_g * u(k)].

    Raises SignalCorruptionError when the history or input is not finite;
    a regressor built from corrupted signals would poison the recorded
    data pool, not just the current step.
    """
    hist = list(state.history)
    if len(hist) < basis.depth:
        raise SignalCorruptionError("output history shorter than the basis depth")
    if not np.all(np.isfinite(hist)) or not np.isfinite(u):
        raise SignalCorruptionError("non-finite signal while building the regressor")
    phi = np.empty(basis.n)
    phi[:-1] = basis.output_terms(hist)
    phi[-1] = basis.phi_g * u
    return phi


def plant_step(params, phi, w):
    """One-step model: y(k+1) = theta^T phi(k) + w(k)."""
    theta = params.theta_vec
    if theta.shape != phi.shape:
        raise ConfigError(
            f"theta has dimension {theta.shape[0]} but phi has {phi.shape[0]}"
        )
    return float(theta @ phi) + w
