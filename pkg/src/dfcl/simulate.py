"""Closed-loop simulation harness and method comparison.

One step runs, in order: reference sample, reference model advance,
control from the current estimate, regressor assembly, disturbance
sample, plant advance, estimate update against the new measurement,
and finally the memory update. The estimate update therefore always
sees the memory as it stood at the start of the step.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import plant as plant_mod
from .baselines import CondNumberStack, DataStack, cond_stack_admit, stack_manager_admit
from .config import validate_config
from .controller import control, reference_signal, reference_step
from .errors import ConfigError, DivergenceError
from .estimator import (
    EstimatorState,
    cl_step,
    df_update_information,
    information_state,
    normalization,
)
from .plant import (
    PlantState,
    build_regressor,
    disturbance_sample,
    plant_step,
)


@dataclass
class StepRecord:
    """State at step k plus the signals produced during step k.

    q is the prediction error revealed by the step-k measurement, i.e.
    q(k+1); theta_hat, the memory rank and the spectrum all describe the
    start of the step, before the update that measurement triggered.
    """

    k: int
    r: float
    y_m: float
    y: float
    u: float
    e: float
    q: float
    theta_hat: np.ndarray
    theta_err_norm: float
    rank_omega: int
    lambda_min_omega: float
    lambda_max_omega: float
    clamp_active: bool
    diagnostics: object = None


@dataclass
class Trace:
    """Dense arrays over the run.

    State arrays (y, y_m, e, theta_hat, omega, m_vec, spectra, rank)
    have horizon + 1 entries; per-step arrays (u, w, r, q, phi, m, eta,
    clamp, df_branch) have horizon entries. omega[k] is the memory the
    step-k update saw.
    """

    y: np.ndarray
    y_m: np.ndarray
    e: np.ndarray
    theta_hat: np.ndarray
    omega: np.ndarray
    m_vec: np.ndarray
    lam_min: np.ndarray
    lam_max: np.ndarray
    rank: np.ndarray
    u: np.ndarray
    w: np.ndarray
    r: np.ndarray
    q: np.ndarray
    phi: np.ndarray
    m: np.ndarray
    eta: np.ndarray
    clamp: np.ndarray
    df_branch: np.ndarray


@dataclass
class RunResult:
    config: object
    records: list
    trace: Trace
    k_e: int
    clamp_count: int
    diverged_at: int = None
    report: object = None
    wall_time: float = 0.0

    @property
    def horizon(self):
        return len(self.records)

    @property
    def final_theta_err(self):
        return float(np.linalg.norm(self.trace.theta_hat[-1] - np.asarray(self.config.plant.theta)))

    @property
    def final_abs_e(self):
        return float(abs(self.trace.e[-1]))


class _Memory:
    """Uniform facade over the three memory kinds."""

    def __init__(self, cfg, n):
        est = cfg.estimator
        self.kind = est.kind
        self.tol = est.tol
        if est.kind == "df_cl":
            self.state = information_state(
                n, est.mu, est.alpha, eps_rank=est.eps_rank, eps_div=est.eps_div
            )
        elif est.kind == "stack_manager":
            self.state = DataStack(n=n, capacity=est.capacity, eps_rank=est.eps_rank)
        else:
            self.state = CondNumberStack(n=n, capacity=est.capacity, eps_rank=est.eps_rank)

    def ingest(self, phi, y_next, m, step):
        if self.kind == "df_cl":
            self.state = df_update_information(self.state, phi, y_next, m, step=step)
        elif self.kind == "stack_manager":
            self.state = stack_manager_admit(self.state, phi, y_next, m, self.tol)
        else:
            self.state = cond_stack_admit(self.state, phi, y_next, m)


def _snapshot(trace, k, mem, est, y, y_m):
    trace.y[k] = y
    trace.y_m[k] = y_m
    trace.e[k] = y - y_m
    trace.theta_hat[k] = est.theta_hat
    trace.omega[k] = mem.state.omega
    trace.m_vec[k] = mem.state.m_vec
    trace.lam_min[k] = mem.state.lam_min
    trace.lam_max[k] = mem.state.lam_max
    trace.rank[k] = mem.state.rank


def _truncate(trace, steps):
    return Trace(
        y=trace.y[: steps + 1], y_m=trace.y_m[: steps + 1], e=trace.e[: steps + 1],
        theta_hat=trace.theta_hat[: steps + 1], omega=trace.omega[: steps + 1],
        m_vec=trace.m_vec[: steps + 1], lam_min=trace.lam_min[: steps + 1],
        lam_max=trace.lam_max[: steps + 1], rank=trace.rank[: steps + 1],
        u=trace.u[:steps], w=trace.w[:steps], r=trace.r[:steps], q=trace.q[:steps],
        phi=trace.phi[:steps], m=trace.m[:steps], eta=trace.eta[:steps],
        clamp=trace.clamp[:steps], df_branch=trace.df_branch[:steps],
    )


def _build_records(cfg, trace, steps):
    theta = np.asarray(cfg.plant.theta, dtype=float)
    records = []
    for k in range(steps):
        records.append(StepRecord(
            k=k,
            r=float(trace.r[k]),
            y_m=float(trace.y_m[k]),
            y=float(trace.y[k]),
            u=float(trace.u[k]),
            e=float(trace.e[k]),
            q=float(trace.q[k]),
            theta_hat=trace.theta_hat[k].copy(),
            theta_err_norm=float(np.linalg.norm(trace.theta_hat[k] - theta)),
            rank_omega=int(trace.rank[k]),
            lambda_min_omega=float(trace.lam_min[k]),
            lambda_max_omega=float(trace.lam_max[k]),
            clamp_active=bool(trace.clamp[k]),
        ))
    return records


def run_scenario(cfg):
    """Simulate one scenario to completion.

    Raises DivergenceError when |y| exceeds the representable-range
    guard or the estimate stops being finite; the exception carries the
    partial RunResult covering every completed step.
    """
    validate_config(cfg)
    n = cfg.n
    horizon = cfg.simulation.horizon
    basis = cfg.basis_config()
    params = cfg.true_parameters()
    dspec = cfg.disturbance_spec()
    ref_spec = cfg.controller.reference
    ref_model = cfg.reference_model()
    ctl = cfg.controller_config()
    phi_g = cfg.plant.phi_g

    pstate = PlantState.initial(cfg.plant.y_init, basis.depth)
    est = EstimatorState(
        theta_hat=np.asarray(cfg.theta0(), dtype=float),
        eta_policy=cfg.estimator.eta_policy,
        eta_fixed=cfg.estimator.eta,
    )
    mem = _Memory(cfg, n)

    trace = Trace(
        y=np.zeros(horizon + 1), y_m=np.zeros(horizon + 1), e=np.zeros(horizon + 1),
        theta_hat=np.zeros((horizon + 1, n)), omega=np.zeros((horizon + 1, n, n)),
        m_vec=np.zeros((horizon + 1, n)), lam_min=np.zeros(horizon + 1),
        lam_max=np.zeros(horizon + 1), rank=np.zeros(horizon + 1, dtype=int),
        u=np.zeros(horizon), w=np.zeros(horizon), r=np.zeros(horizon),
        q=np.zeros(horizon), phi=np.zeros((horizon, n)), m=np.zeros(horizon),
        eta=np.zeros(horizon), clamp=np.zeros(horizon, dtype=bool),
        df_branch=np.zeros(horizon, dtype=bool),
    )

    y = float(cfg.plant.y_init[0]) if cfg.plant.y_init else 0.0
    y_m = 0.0
    started = time.perf_counter()

    for k in range(horizon):
        _snapshot(trace, k, mem, est, y, y_m)
        try:
            r_k = reference_signal(ref_spec, k)
            y_m_next = reference_step(ref_model, r_k)
            phi_f = basis.output_terms(list(pstate.history))
            f_hat = float(est.theta_hat[:-1] @ phi_f)
            g_hat = float(est.theta_hat[-1]) * phi_g
            if not (np.isfinite(f_hat) and np.isfinite(g_hat)):
                raise DivergenceError(k, f"model prediction overflowed at step {k}")
            u, clamped = control(trace.e[k], f_hat, g_hat, y_m_next, ctl)
            phi = build_regressor(pstate, u, basis)
            m = normalization(phi, cfg.estimator.alpha)
            w = disturbance_sample(dspec, k, y)
            y_next = plant_step(params, phi, w)
            if not np.isfinite(y_next) or abs(y_next) > plant_mod.DIVERGENCE_LIMIT:
                raise DivergenceError(k, f"|y| exceeded {plant_mod.DIVERGENCE_LIMIT:g} at step {k}")
            est_next = cl_step(est, mem.state, phi, y_next, m, step=k)
        except DivergenceError as exc:
            partial = RunResult(
                config=cfg, records=_build_records(cfg, trace, k),
                trace=_truncate(trace, k), k_e=mem.state.k_e,
                clamp_count=int(trace.clamp[:k].sum()), diverged_at=k,
                wall_time=time.perf_counter() - started,
            )
            raise DivergenceError(exc.step if exc.step is not None else k,
                                  str(exc), result=partial) from None

        trace.r[k] = r_k
        trace.u[k] = u
        trace.w[k] = w
        trace.q[k] = float(est.theta_hat @ phi) - y_next
        trace.phi[k] = phi
        trace.m[k] = m
        trace.eta[k] = est_next.eta
        trace.clamp[k] = clamped
        mem.ingest(phi, y_next, m, k)
        trace.df_branch[k] = mem.state.last_branch == "forget"
        est = est_next
        ref_model.y_m = y_m_next
        pstate.push(y_next)
        y = y_next
        y_m = y_m_next

    _snapshot(trace, horizon, mem, est, y, y_m)
    records = _build_records(cfg, trace, horizon)
    result = RunResult(
        config=cfg, records=records, trace=trace, k_e=mem.state.k_e,
        clamp_count=int(trace.clamp.sum()),
        wall_time=time.perf_counter() - started,
    )
    if cfg.simulation.diagnostics:
        from .analysis import diagnose

        result.report = diagnose(result)
        for rec, diag in zip(result.records, result.report.records):
            rec.diagnostics = diag
    return result


def window_rmse(records, lo, hi):
    """Root-mean-square tracking error over steps lo <= k < hi."""
    vals = [rec.e for rec in records if lo <= rec.k < hi]
    if not vals:
        return float("inf")
    arr = np.asarray(vals)
    return float(np.sqrt(np.mean(arr * arr)))


@dataclass(frozen=True)
class MethodMetrics:
    kind: str
    label: str
    rmse: tuple
    max_abs_e: float
    final_theta_err: float
    k_e: int
    clamp_count: int
    diverged_at: int = None


@dataclass
class ComparisonSummary:
    windows: tuple
    rows: list

    def ranked(self):
        """Rows best-first by final-window RMSE, diverged runs last."""
        return sorted(
            self.rows,
            key=lambda row: (row.diverged_at is not None, row.rmse[-1]),
        )


def _shared_sections_match(configs):
    base = configs[0]
    for cfg in configs[1:]:
        same = (
            cfg.plant == base.plant
            and cfg.disturbance == base.disturbance
            and cfg.controller == base.controller
            and cfg.simulation.horizon == base.simulation.horizon
            and cfg.simulation.seed == base.simulation.seed
        )
        if not same:
            raise ConfigError(
                "comparison configs must share plant, disturbance, controller "
                "and simulation settings; only the estimator may differ"
            )


def compare(configs, windows=None):
    """Run several estimator configs against the identical scenario.

    Returns (summary, results). A run that diverges contributes a row
    with its metrics computed over the completed steps and diverged_at
    set; it never aborts the comparison.
    """
    configs = list(configs)
    if not configs:
        raise ConfigError("compare needs at least one config")
    _shared_sections_match(configs)
    horizon = configs[0].simulation.horizon
    if windows is None:
        half = horizon // 2
        windows = ((0, half), (half, horizon)) if half else ((0, horizon),)
    for lo, hi in windows:
        if not (0 <= lo < hi <= horizon):
            raise ConfigError(f"window ({lo}, {hi}) outside 0..{horizon}")

    labels = []
    counts = {}
    for cfg in configs:
        kind = cfg.estimator.kind
        counts[kind] = counts.get(kind, 0) + 1
        labels.append(kind if counts[kind] == 1 else f"{kind}-{counts[kind]}")

    results = []
    rows = []
    for cfg, label in zip(configs, labels):
        diverged_at = None
        try:
            result = run_scenario(cfg)
        except DivergenceError as exc:
            result = exc.result
            diverged_at = exc.step
        results.append(result)
        recs = result.records
        rows.append(MethodMetrics(
            kind=cfg.estimator.kind,
            label=label,
            rmse=tuple(window_rmse(recs, lo, hi) for lo, hi in windows),
            max_abs_e=max((abs(rec.e) for rec in recs), default=float("inf")),
            final_theta_err=recs[-1].theta_err_norm if recs else float("inf"),
            k_e=result.k_e,
            clamp_count=result.clamp_count,
            diverged_at=diverged_at,
        ))
    return ComparisonSummary(windows=tuple(windows), rows=rows), results
