"""Runtime verification of the stability argument behind the estimator.

Every quantity the closed-loop guarantees rest on is recomputed here
from recorded trajectories, at the exact step indices where it is
claimed to hold. Conventions fixed by this implementation:

* theta_err means theta_hat - theta.
* The recorded-data defect is w_omega(k) = Omega(k) theta - M(k). With
  clean data it is identically zero; each disturbed sample shifts it by
  -phi w / m^2 along the sample direction.
* The estimate error obeys, exactly,
      theta_err(k+1) = P(k) theta_err(k) + eta(k) carry(k)
  with P = I - eta (phi phi^T / m^2 + Omega) and
  carry = phi w / m^2 - w_omega. The per-step inequalities below are
  stated against this recursion.
* Per-step energy comparisons freeze the gain: both V(k) and V(k+1) are
  weighted by 1/eta(k). The gain varies slowly under the half-of-max
  policy but not slowly enough for a literal 1/eta(k+1) weighting to
  survive roundoff-tight checks at every step.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

DEFAULT_TOL = 1e-8


def disturbance_term(omega, m_vec, theta):
    """w_omega = Omega theta - M, the recorded-data defect vector."""
    theta = np.asarray(theta, dtype=float)
    return omega @ theta - m_vec


def w_bound_asymptotic(n, w_bound, mu, alpha):
    """Worst-case steady defect norm: sqrt(n) W / (mu sqrt(alpha))."""
    if not 0.0 < mu <= 1.0:
        raise ConfigError("mu must lie in (0, 1]")
    if alpha <= 0:
        raise ConfigError("alpha must be > 0")
    if w_bound < 0:
        raise ConfigError("disturbance bound must be >= 0")
    return np.sqrt(n) * w_bound / (mu * np.sqrt(alpha))


def pre_rank_bound(k_e, w_bound, alpha):
    """Defect norm cap while rank was still filling: k_e W / sqrt(alpha)."""
    if k_e is None or k_e < 1:
        raise ConfigError("k_e must be a positive integer")
    if alpha <= 0:
        raise ConfigError("alpha must be > 0")
    return k_e * w_bound / np.sqrt(alpha)


def lyapunov_quantities(theta_err, e, eta, beta5):
    """Energy split: (V_theta, V_e, beta5 V_theta + V_e)."""
    if eta <= 0:
        raise ConfigError("eta must be > 0")
    theta_err = np.asarray(theta_err, dtype=float)
    v_theta = float(theta_err @ theta_err) / eta
    v_e = e * e
    return v_theta, v_e, beta5 * v_theta + v_e


def default_epsilon(gamma_e):
    """Midpoint of the feasible interval (0, (1 - gamma_e^2) / gamma_e^2)."""
    if not 0.0 < gamma_e < 1.0:
        raise ConfigError("gamma_e must lie in (0, 1)")
    return (1.0 - gamma_e * gamma_e) / (2.0 * gamma_e * gamma_e)


@dataclass(frozen=True)
class StabilityConstants:
    """Per-step contraction and input-to-state constants.

    beta1 contracts the estimate energy once Omega has full rank, beta3
    and beta4 split the tracking error recursion, beta5 couples the two
    energies, beta6 = max(beta4, beta1) drives the combined decay, and
    (a, b, c) define the quadratic whose positive root theta_uub is the
    ultimate bound on the augmented error norm. theta_uub is inf when
    a >= 0 (no contraction certificate at this step, e.g. rank-deficient
    Omega making beta1 = 1).
    """

    beta1: float
    beta2: float
    beta3: float
    beta4: float
    beta5: float
    beta6: float
    epsilon: float
    eta: float
    eta_bar: float
    a: float
    b: float
    c: float
    theta_uub: float


def uub_radius(a, b, c):
    """Positive root of a x^2 + b x + c with a < 0: (-b - sqrt(b^2 - 4ac)) / 2a."""
    if a >= 0:
        raise ConfigError("uub radius needs a < 0")
    if b < 0 or c < 0:
        raise ConfigError("uub radius expects b >= 0 and c >= 0")
    disc = b * b - 4.0 * a * c
    return float((-b - np.sqrt(disc)) / (2.0 * a))


def _constants(phi_sq, lam_min, lam_max, m2, eta, gamma_e, n, w_bound, mu, alpha,
               eta_bar, epsilon):
    lam_min = max(lam_min, 0.0)
    if epsilon <= 0 or gamma_e * gamma_e * (1.0 + epsilon) >= 1.0:
        raise ConfigError("epsilon outside (0, (1 - gamma_e^2) / gamma_e^2)")
    beta1 = 1.0 - eta * lam_min * (2.0 - 2.0 * eta * phi_sq / m2 - eta * lam_max)
    beta2 = 2.0 - eta * phi_sq / m2
    beta4 = gamma_e * gamma_e * (1.0 + epsilon)
    beta3 = 1.0 - beta4
    beta5 = m2 * (1.0 + epsilon) * (1.0 + 1.0 / epsilon) / beta2
    beta6 = max(beta4, beta1)
    root_n = np.sqrt(n)
    carry_bound = (mu + root_n) * w_bound / (mu * np.sqrt(alpha))
    p_bound = root_n + eta_bar * (1.0 + lam_max * root_n)
    b = beta5 * 2.0 * p_bound * carry_bound
    c = beta5 * eta_bar * carry_bound * carry_bound \
        + (1.0 + 1.0 / epsilon) ** 2 * w_bound * w_bound
    a = beta6 - 1.0
    theta_uub = uub_radius(a, b, c) if a < 0.0 else np.inf
    return StabilityConstants(
        beta1=beta1, beta2=beta2, beta3=beta3, beta4=beta4, beta5=beta5,
        beta6=beta6, epsilon=epsilon, eta=eta, eta_bar=eta_bar,
        a=a, b=b, c=c, theta_uub=theta_uub,
    )


def stability_constants(phi, omega, m, eta, gamma_e, n, w_bound, mu, alpha,
                        eta_bar, epsilon=None):
    """Evaluate the full constant set at one step.

    eta_bar is the largest gain used over the run (the input-to-state
    terms are stated against it, not the per-step gain). epsilon
    defaults to the midpoint of its feasible interval.
    """
    phi = np.asarray(phi, dtype=float)
    eigs = np.linalg.eigvalsh(omega)
    if epsilon is None:
        epsilon = default_epsilon(gamma_e)
    return _constants(
        float(phi @ phi), float(eigs[0]), float(eigs[-1]), m * m, eta,
        gamma_e, n, w_bound, mu, alpha, eta_bar, epsilon,
    )


def df_direction_eigs(omega, phi, mu):
    """Eigenvalues of the forgetting map U = mu Omega phi phi^T / (phi^T Omega phi).

    U is rank one, so its spectrum is {mu, 0, ..., 0}: both the trace
    and the spectral radius equal mu whenever the branch is taken.
    Returned sorted by decreasing magnitude.
    """
    phi = np.asarray(phi, dtype=float)
    denom = float(phi @ omega @ phi)
    if denom <= 0.0:
        raise ConfigError("df_direction_eigs needs phi^T Omega phi > 0")
    u_map = (mu / denom) * np.outer(omega @ phi, phi)
    eigs = np.linalg.eigvals(u_map)
    eigs = np.real_if_close(eigs, tol=1e6)
    order = np.argsort(-np.abs(eigs))
    return np.real(eigs[order])


@dataclass
class DiagnosticsRecord:
    """Everything verified at one step k.

    lemma2_residual and lemma3_residual are (left side - right side) of
    the respective per-step inequalities, so nonpositive values up to
    roundoff mean the inequality held. theorem2_contraction is the
    frozen-gain ratio V(k+1) / V(k), nan when V(k) = 0. u_eigs is None
    on steps where the forgetting branch did not run.
    """

    k: int
    w_omega_term: np.ndarray
    v_theta: float
    v_e: float
    v_combined: float
    lemma2_residual: float
    lemma3_residual: float
    theorem2_contraction: float
    u_eigs: np.ndarray
    constants: StabilityConstants

    @property
    def w_omega_norm(self):
        return float(np.linalg.norm(self.w_omega_term))


@dataclass
class AnalysisReport:
    """Per-step diagnostics plus the run-level constant set."""

    records: list
    epsilon: float
    eta_bar: float
    beta5: float
    beta6: float
    a: float
    b: float
    c: float
    theta_uub: float
    w_bound_asymptotic: float
    pre_rank_bound: float
    k_e: int
    aug_err: np.ndarray

    @property
    def uub_envelope(self):
        """max(initial augmented error norm, theta_uub)."""
        return max(float(self.aug_err[0]), self.theta_uub)


def diagnose(result, epsilon=None):
    """Recompute every verified quantity along a finished run.

    Works for any estimator kind: the gain update has the same shape for
    all three, only the memory policy differs. Records cover steps
    0 .. horizon-1; each needs the k+1 state, which the trace carries.
    """
    cfg = result.config
    trace = result.trace
    theta = np.asarray(cfg.plant.theta, dtype=float)
    gamma_e = cfg.controller.gamma_e
    mu = cfg.estimator.mu
    alpha = cfg.estimator.alpha
    w_bound = cfg.disturbance.bound
    n = theta.shape[0]
    if epsilon is None:
        epsilon = default_epsilon(gamma_e)
    horizon = trace.u.shape[0]
    theta_err = trace.theta_hat - theta
    err_norms_sq = np.einsum("ij,ij->i", theta_err, theta_err)
    aug_err = np.sqrt(err_norms_sq + trace.e * trace.e)
    eta_bar = float(np.max(trace.eta)) if horizon else 0.0
    lam_max_bar = float(np.max(trace.lam_max)) if horizon else 0.0

    records = []
    beta5_run = 0.0
    beta6_run = 0.0
    k_e = result.k_e
    for k in range(horizon):
        phi = trace.phi[k]
        m2 = trace.m[k] ** 2
        eta = trace.eta[k]
        omega = trace.omega[k]
        consts = _constants(
            float(phi @ phi), trace.lam_min[k], trace.lam_max[k], m2, eta,
            gamma_e, n, w_bound, mu, alpha, eta_bar, epsilon,
        )
        beta5_run = max(beta5_run, consts.beta5)
        if k_e is not None and k >= k_e:
            beta6_run = max(beta6_run, consts.beta6)

        w_omega = omega @ theta - trace.m_vec[k]
        err_k = theta_err[k]
        err_next = theta_err[k + 1]
        carry = phi * (trace.w[k] / m2) - w_omega
        p_mat = np.eye(n) - eta * (np.outer(phi, phi) / m2 + omega)
        e_vec = p_mat @ carry
        e_w = eta * float(carry @ carry)
        q_clean = float(err_k @ phi)
        lhs2 = float(err_next @ err_next) / eta
        rhs2 = (
            consts.beta1 * float(err_k @ err_k) / eta
            + 2.0 * float(err_k @ e_vec)
            + e_w
            - consts.beta2 * q_clean * q_clean / m2
        )
        lemma2 = lhs2 - rhs2

        e_k = trace.e[k]
        e_next = trace.e[k + 1]
        lemma3 = (
            e_next * e_next
            - consts.beta4 * e_k * e_k
            - (1.0 + epsilon) * (1.0 + 1.0 / epsilon) * q_clean * q_clean
            - (1.0 + 1.0 / epsilon) ** 2 * trace.w[k] * trace.w[k]
        )

        u_eigs = None
        if trace.df_branch[k]:
            u_eigs = df_direction_eigs(omega, phi, mu)

        records.append(
            DiagnosticsRecord(
                k=k,
                w_omega_term=w_omega,
                v_theta=float(err_k @ err_k) / eta,
                v_e=e_k * e_k,
                v_combined=np.nan,
                lemma2_residual=lemma2,
                lemma3_residual=lemma3,
                theorem2_contraction=np.nan,
                u_eigs=u_eigs,
                constants=consts,
            )
        )

    # second pass: energies need the run-level beta5
    for rec in records:
        k = rec.k
        eta = trace.eta[k]
        v_k = beta5_run * rec.v_theta + rec.v_e
        v_next = (
            beta5_run * float(theta_err[k + 1] @ theta_err[k + 1]) / eta
            + trace.e[k + 1] ** 2
        )
        rec.v_combined = v_k
        rec.theorem2_contraction = v_next / v_k if v_k > 0.0 else np.nan

    root_n = np.sqrt(n)
    carry_bound = (mu + root_n) * w_bound / (mu * np.sqrt(alpha))
    p_bound = root_n + eta_bar * (1.0 + lam_max_bar * root_n)
    b = beta5_run * 2.0 * p_bound * carry_bound
    c = beta5_run * eta_bar * carry_bound ** 2 \
        + (1.0 + 1.0 / epsilon) ** 2 * w_bound ** 2
    a = beta6_run - 1.0 if k_e is not None else 0.0
    theta_uub = uub_radius(a, b, c) if a < 0.0 else np.inf

    return AnalysisReport(
        records=records,
        epsilon=epsilon,
        eta_bar=eta_bar,
        beta5=beta5_run,
        beta6=beta6_run,
        a=a,
        b=b,
        c=c,
        theta_uub=theta_uub,
        w_bound_asymptotic=w_bound_asymptotic(n, w_bound, mu, alpha),
        pre_rank_bound=pre_rank_bound(k_e, w_bound, alpha) if k_e else np.nan,
        k_e=k_e,
        aug_err=aug_err,
    )
