"""Scenario configuration: TOML loading, validation, presets.

A scenario file has exactly five sections (plant, disturbance,
estimator, controller, simulation). Unknown sections or keys are
rejected rather than ignored; a typo that silently falls back to a
default would invalidate whatever the run was meant to show.
"""

import math
from dataclasses import dataclass, field, fields

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .controller import ControllerConfig, ReferenceModel, ReferenceSpec
from .errors import ConfigError
from .plant import BasisConfig, BasisTerm, DisturbanceSpec, TrueParameters, check_gain_bound


@dataclass(frozen=True)
class PlantSection:
    theta: tuple
    basis: tuple
    phi_g: float = 1.0
    g_lower: float = 0.1
    y_init: tuple = (0.0, 0.0)


@dataclass(frozen=True)
class DisturbanceSection:
    kind: str = "zero"
    amplitude: float = 0.0
    switch_step: int = 0
    bound: float = 0.0


@dataclass(frozen=True)
class EstimatorSection:
    kind: str = "df_cl"
    mu: float = 0.7
    alpha: float = 1.0
    eta_policy: str = "half_of_max"
    eta: float = 0.1
    theta0: tuple = None
    tol: float = 1e-3
    capacity: int = 20
    eps_rank: float = 1e-9
    eps_div: float = 1e-12


@dataclass(frozen=True)
class ControllerSection:
    gamma_e: float = 0.5
    a_m: float = -0.5
    b_m: float = None
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)


@dataclass(frozen=True)
class SimulationSection:
    horizon: int = 1000
    seed: int = 0
    diagnostics: bool = False
    csv: str = None
    plot: str = None


@dataclass(frozen=True)
class ScenarioConfig:
    plant: PlantSection
    disturbance: DisturbanceSection = field(default_factory=DisturbanceSection)
    estimator: EstimatorSection = field(default_factory=EstimatorSection)
    controller: ControllerSection = field(default_factory=ControllerSection)
    simulation: SimulationSection = field(default_factory=SimulationSection)

    @property
    def n(self):
        return len(self.plant.theta)

    def basis_config(self):
        return BasisConfig(terms=self.plant.basis, phi_g=self.plant.phi_g)

    def true_parameters(self):
        return TrueParameters(theta=self.plant.theta, g_lower=self.plant.g_lower)

    def disturbance_spec(self):
        d = self.disturbance
        return DisturbanceSpec(
            kind=d.kind, amplitude=d.amplitude, switch_step=d.switch_step,
            bound=d.bound, seed=self.simulation.seed,
        )

    def controller_config(self):
        return ControllerConfig(
            gamma_e=self.controller.gamma_e, g_lower=self.plant.g_lower
        )

    def reference_model(self):
        return ReferenceModel(a_m=self.controller.a_m, b_m=self.controller.b_m)

    def theta0(self):
        t0 = self.estimator.theta0
        if t0 is None:
            t0 = (0.0,) * (self.n - 1) + (1.0,)
        return t0


_SECTION_KEYS = {
    "plant": ("theta", "basis", "phi_g", "g_lower", "y_init"),
    "disturbance": ("kind", "amplitude", "switch_step", "bound"),
    "estimator": ("kind", "mu", "alpha", "eta_policy", "eta", "theta0", "tol",
                  "capacity", "eps_rank", "eps_div"),
    "controller": ("gamma_e", "a_m", "b_m", "reference"),
    "simulation": ("horizon", "seed", "diagnostics", "csv", "plot"),
}

_REFERENCE_KEYS = ("kind", "amplitude", "period")


def _check_keys(table, allowed, where):
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{where}]")


def _num(table, key, where, default=None, integer=False, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"[{where}] is missing required key {key!r}")
        return default
    val = table[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"[{where}] key {key!r} must be a number")
    if integer:
        if isinstance(val, float) and not val.is_integer():
            raise ConfigError(f"[{where}] key {key!r} must be an integer")
        return int(val)
    if not math.isfinite(val):
        raise ConfigError(f"[{where}] key {key!r} must be finite")
    return float(val)


def _numlist(table, key, where, required=False, default=None):
    if key not in table:
        if required:
            raise ConfigError(f"[{where}] is missing required key {key!r}")
        return default
    val = table[key]
    if not isinstance(val, (list, tuple)) or not val:
        raise ConfigError(f"[{where}] key {key!r} must be a non-empty list of numbers")
    out = []
    for v in val:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"[{where}] key {key!r} must contain finite numbers")
        out.append(float(v))
    return tuple(out)


def _string(table, key, where, default=None, choices=None):
    if key not in table:
        return default
    val = table[key]
    if not isinstance(val, str):
        raise ConfigError(f"[{where}] key {key!r} must be a string")
    if choices is not None and val not in choices:
        raise ConfigError(f"[{where}] key {key!r} must be one of {sorted(choices)}")
    return val


def _parse_basis(raw):
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ConfigError("[plant] basis must be a non-empty list of term tables")
    terms = []
    for i, item in enumerate(raw):
        if isinstance(item, BasisTerm):
            terms.append(item)
            continue
        if not isinstance(item, dict):
            raise ConfigError(f"[plant] basis entry {i} must be a table")
        where = f"plant.basis[{i}]"
        _check_keys(item, ("kind", "lag", "center", "width", "value"), where)
        kind = _string(item, "kind", where, choices=("lag", "gauss", "const"))
        if kind is None:
            raise ConfigError(f"[{where}] needs a kind")
        terms.append(BasisTerm(
            kind=kind,
            lag=_num(item, "lag", where, default=0, integer=True),
            center=_num(item, "center", where, default=0.0),
            width=_num(item, "width", where, default=1.0),
            value=_num(item, "value", where, default=1.0),
        ))
    return tuple(terms)


def parse_config(data, source="config"):
    """Build a validated ScenarioConfig from a parsed TOML mapping."""
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a table")
    for section, table in data.items():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"{source}: unknown section [{section}]")
        if not isinstance(table, dict):
            raise ConfigError(f"{source}: [{section}] must be a table")
    if "plant" not in data:
        raise ConfigError(f"{source}: missing required section [plant]")

    raw = data["plant"]
    _check_keys(raw, _SECTION_KEYS["plant"], "plant")
    if "basis" not in raw:
        raise ConfigError("[plant] is missing required key 'basis'")
    plant = PlantSection(
        theta=_numlist(raw, "theta", "plant", required=True),
        basis=_parse_basis(raw["basis"]),
        phi_g=_num(raw, "phi_g", "plant", default=1.0),
        g_lower=_num(raw, "g_lower", "plant", default=0.1),
        y_init=_numlist(raw, "y_init", "plant", default=(0.0, 0.0)),
    )

    raw = data.get("disturbance", {})
    _check_keys(raw, _SECTION_KEYS["disturbance"], "disturbance")
    disturbance = DisturbanceSection(
        kind=_string(raw, "kind", "disturbance", default="zero",
                     choices=("zero", "piecewise_output_dependent", "bounded_custom")),
        amplitude=_num(raw, "amplitude", "disturbance", default=0.0),
        switch_step=_num(raw, "switch_step", "disturbance", default=0, integer=True),
        bound=_num(raw, "bound", "disturbance", default=0.0),
    )

    raw = data.get("estimator", {})
    _check_keys(raw, _SECTION_KEYS["estimator"], "estimator")
    estimator = EstimatorSection(
        kind=_string(raw, "kind", "estimator", default="df_cl",
                     choices=("df_cl", "stack_manager", "cond_number")),
        mu=_num(raw, "mu", "estimator", default=0.7),
        alpha=_num(raw, "alpha", "estimator", default=1.0),
        eta_policy=_string(raw, "eta_policy", "estimator", default="half_of_max",
                           choices=("half_of_max", "fixed")),
        eta=_num(raw, "eta", "estimator", default=0.1),
        theta0=_numlist(raw, "theta0", "estimator"),
        tol=_num(raw, "tol", "estimator", default=1e-3),
        capacity=_num(raw, "capacity", "estimator", default=20, integer=True),
        eps_rank=_num(raw, "eps_rank", "estimator", default=1e-9),
        eps_div=_num(raw, "eps_div", "estimator", default=1e-12),
    )

    raw = data.get("controller", {})
    _check_keys(raw, _SECTION_KEYS["controller"], "controller")
    ref_raw = raw.get("reference", {})
    if not isinstance(ref_raw, dict):
        raise ConfigError("[controller] reference must be a table")
    _check_keys(ref_raw, _REFERENCE_KEYS, "controller.reference")
    reference = ReferenceSpec(
        kind=_string(ref_raw, "kind", "controller.reference", default="square",
                     choices=("zero", "constant", "square", "sine")),
        amplitude=_num(ref_raw, "amplitude", "controller.reference", default=1.0),
        period=_num(ref_raw, "period", "controller.reference", default=200, integer=True),
    )
    controller = ControllerSection(
        gamma_e=_num(raw, "gamma_e", "controller", default=0.5),
        a_m=_num(raw, "a_m", "controller", default=-0.5),
        b_m=_num(raw, "b_m", "controller", default=None),
        reference=reference,
    )

    raw = data.get("simulation", {})
    _check_keys(raw, _SECTION_KEYS["simulation"], "simulation")
    diag = raw.get("diagnostics", False)
    if not isinstance(diag, bool):
        raise ConfigError("[simulation] diagnostics must be a boolean")
    simulation = SimulationSection(
        horizon=_num(raw, "horizon", "simulation", default=1000, integer=True),
        seed=_num(raw, "seed", "simulation", default=0, integer=True),
        diagnostics=diag,
        csv=_string(raw, "csv", "simulation"),
        plot=_string(raw, "plot", "simulation"),
    )

    cfg = ScenarioConfig(
        plant=plant, disturbance=disturbance, estimator=estimator,
        controller=controller, simulation=simulation,
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    """Cross-field checks; raises ConfigError on the first violation."""
    n = cfg.n
    basis = cfg.basis_config()
    if n != basis.n:
        raise ConfigError(
            f"theta has {n} entries but the basis implies {basis.n} (terms + input slot)"
        )
    check_gain_bound(cfg.true_parameters(), basis)
    cfg.disturbance_spec()
    cfg.controller_config()
    cfg.reference_model()
    est = cfg.estimator
    if not 0.0 < est.mu <= 1.0:
        raise ConfigError("[estimator] mu must lie in (0, 1]")
    if est.alpha <= 0:
        raise ConfigError("[estimator] alpha must be > 0")
    if est.eta_policy == "fixed" and est.eta <= 0:
        raise ConfigError("[estimator] fixed eta must be > 0")
    if est.tol <= 0:
        raise ConfigError("[estimator] tol must be > 0")
    if est.capacity < 1:
        raise ConfigError("[estimator] capacity must be >= 1")
    if est.eps_rank <= 0 or est.eps_div < 0:
        raise ConfigError("[estimator] eps_rank must be > 0 and eps_div >= 0")
    if len(cfg.theta0()) != n:
        raise ConfigError(f"[estimator] theta0 must have {n} entries")
    sim = cfg.simulation
    if sim.horizon < 1:
        raise ConfigError("[simulation] horizon must be >= 1")
    if sim.seed < 0:
        raise ConfigError("[simulation] seed must be >= 0")
    d = cfg.disturbance
    if d.switch_step < 0:
        raise ConfigError("[disturbance] switch_step must be >= 0")
    return cfg


def load_config(path):
    """Read and validate a scenario TOML file."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return parse_config(data, source=str(path))


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, tuple):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return repr(value)


def echo_lines(cfg):
    """Render the resolved config as TOML-style lines for CSV comments."""
    lines = []
    for section_name in ("plant", "disturbance", "estimator", "controller", "simulation"):
        section = getattr(cfg, section_name)
        lines.append(f"[{section_name}]")
        for f in fields(section):
            value = getattr(section, f.name)
            if value is None:
                continue
            if f.name == "basis":
                rendered = "[" + ", ".join(
                    "{kind=%s, lag=%d, center=%s, width=%s, value=%s}" % (
                        _fmt(t.kind), t.lag, _fmt(t.center), _fmt(t.width), _fmt(t.value))
                    for t in value
                ) + "]"
                lines.append(f"basis = {rendered}")
            elif f.name == "reference":
                lines.append(
                    "reference = {kind=%s, amplitude=%s, period=%d}"
                    % (_fmt(value.kind), _fmt(value.amplitude), value.period)
                )
            else:
                lines.append(f"{f.name} = {_fmt(value)}")
    return lines


def _fig1_plant():
    return {
        "theta": [-2.0, 0.5, 1.0, 1.0],
        "basis": [
            {"kind": "lag", "lag": 0},
            {"kind": "lag", "lag": 1},
            {"kind": "gauss", "center": math.pi / 2.0, "width": 4.0},
        ],
        "phi_g": 1.0,
        "g_lower": 0.1,
        "y_init": [0.0, 0.0],
    }


def fig1_config(kind, horizon=1000, diagnostics=False):
    """Benchmark scenario: mildly nonlinear plant, sinusoidal output
    disturbance active for the first half of the run, square reference.

    kind picks the estimator memory ("df_cl", "stack_manager",
    "cond_number"); everything else is shared so runs are comparable.
    """
    data = {
        "plant": _fig1_plant(),
        "disturbance": {
            "kind": "piecewise_output_dependent",
            "amplitude": 1.0,
            "switch_step": min(horizon // 2, 500),
            "bound": 1.0,
        },
        "estimator": {
            "kind": kind,
            "mu": 0.7,
            "alpha": 1.0,
            "eta_policy": "half_of_max",
            "theta0": [0.0, 0.0, 0.0, 1.0],
            "tol": 1e-3,
            "capacity": 20,
        },
        "controller": {
            "gamma_e": 0.5,
            "a_m": -0.5,
            "reference": {"kind": "square", "amplitude": 1.0, "period": 200},
        },
        "simulation": {"horizon": horizon, "seed": 0},
    }
    return parse_config(data, source=f"fig1:{kind}")


def fig1_configs(horizon=1000):
    """The three comparison scenarios, df_cl first."""
    return tuple(
        fig1_config(kind, horizon=horizon)
        for kind in ("df_cl", "stack_manager", "cond_number")
    )
