"""Reference model, tracking controller, and reference signal kinds.

The reference model is the stable first-order lag
y_m(k+1) = -a_m y_m(k) + b_m r(k) with b_m = 1 + a_m so its DC gain is
one. The controller inverts the estimated model to place the next
tracking error at gamma_e times the current one; whenever the estimates
were exact and the disturbance zero, e(k+1) = gamma_e e(k) holds
identically.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass
class ReferenceModel:
    """First-order reference dynamics with unit DC gain."""

    a_m: float
    b_m: float = None
    y_m: float = 0.0

    def __post_init__(self):
        if abs(self.a_m) >= 1.0:
            raise ConfigError("reference model needs |a_m| < 1")
        if self.b_m is None:
            self.b_m = 1.0 + self.a_m
        elif abs(self.b_m - (1.0 + self.a_m)) > 1e-12:
            raise ConfigError("b_m must equal 1 + a_m (unit DC gain)")


def reference_step(model, r):
    """y_m(k+1) = -a_m y_m(k) + b_m r(k)."""
    return -model.a_m * model.y_m + model.b_m * r


@dataclass(frozen=True)
class ControllerConfig:
    """Error contraction rate and the gain clamp floor."""

    gamma_e: float
    g_lower: float

    def __post_init__(self):
        if not 0.0 < self.gamma_e < 1.0:
            raise ConfigError("gamma_e must lie in (0, 1)")
        if self.g_lower <= 0:
            raise ConfigError("g_lower must be > 0")


def clamp_gain(g_hat, g_lower):
    """Push an estimated gain away from zero, keeping its sign.

    sign(0) counts as positive, so a zero estimate clamps to +g_lower.
    Returns (g_safe, clamped).
    """
    sign = 1.0 if g_hat >= 0.0 else -1.0
    g_safe = sign * max(abs(g_hat), g_lower)
    return g_safe, g_safe != g_hat


def control(e, f_hat, g_hat, y_m_next, cfg):
    """Certainty-equivalence input u(k) = (gamma_e e - f_hat + y_m(k+1)) / g_safe.

    Returns (u, clamped) where clamped flags that g_hat was inside the
    clamp region. The division is always by g_safe, never by g_hat, so
    the input stays finite for any estimate.
    """
    if not all(np.isfinite(v) for v in (e, f_hat, g_hat, y_m_next)):
        raise ConfigError("controller inputs must be finite")
    g_safe, clamped = clamp_gain(g_hat, cfg.g_lower)
    u = (cfg.gamma_e * e - f_hat + y_m_next) / g_safe
    return u, clamped


def ideal_control(e, f_true, g_true, w, y_m_next, gamma_e, g_lower):
    """Input a controller with perfect knowledge would apply.

    Cancels f, the disturbance sample, and inverts the true gain, which
    must respect the declared bound. Yields e(k+1) = gamma_e e(k) exactly.
    """
    if abs(g_true) < g_lower:
        raise ConfigError("true gain is below the declared lower bound")
    return (gamma_e * e - f_true - w + y_m_next) / g_true


@dataclass(frozen=True)
class ReferenceSpec:
    """Reference signal r(k): zero, constant, square, or sine."""

    kind: str = "square"
    amplitude: float = 1.0
    period: int = 200

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "square", "sine"):
            raise ConfigError(f"unknown reference kind {self.kind!r}")
        if self.kind in ("square", "sine") and self.period < 2:
            raise ConfigError("periodic reference needs period >= 2")
        if not np.isfinite(self.amplitude):
            raise ConfigError("reference amplitude must be finite")


def reference_signal(spec, k):
    """Evaluate r(k)."""
    if spec.kind == "zero":
        return 0.0
    if spec.kind == "constant":
        return spec.amplitude
    if spec.kind == "square":
        return spec.amplitude if (k % spec.period) < spec.period // 2 else -spec.amplitude
    return spec.amplitude * float(np.sin(2.0 * np.pi * k / spec.period))
