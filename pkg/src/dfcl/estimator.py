"""Directional-forgetting concurrent-learning estimator.

The estimate moves under two pulls: the instantaneous normalized
prediction error, and a recorded-data term Omega * theta_hat - M built
from past regressors. Omega and M are updated once per step. When the
incoming regressor adds numerical rank, its outer product is simply
accumulated. Once it is linearly dependent on what Omega already spans,
a fraction mu of Omega's action along that direction is first removed:

    Omega <- Omega - mu * (Omega phi)(Omega phi)^T / (phi^T Omega phi)
                   + phi phi^T / m^2

with the matching correction on M. This forgets stale data only in the
direction currently being re-excited, so the estimator tracks without
persistent excitation and without eroding rank: Omega stays symmetric
positive semidefinite and its rank never drops.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DivergenceError

EPS_RANK = 1e-9
EPS_DIV = 1e-12


def normalization(phi, alpha):
    """m(k) = sqrt(alpha + phi^T phi), the gradient normalizer."""
    if alpha <= 0:
        raise ConfigError("normalization offset alpha must be > 0")
    return float(np.sqrt(alpha + phi @ phi))


def prediction_error(theta_hat, phi, y_next):
    """q(k+1) = theta_hat^T phi(k) - y(k+1).

    Note the sign: q is prediction minus measurement, so the estimator
    subtracts eta * phi * q / m^2.
    """
    return float(theta_hat @ phi) - y_next


def numerical_rank(eigvals, eps_rank=EPS_RANK):
    """Count eigenvalues above eps_rank * max(1, largest eigenvalue)."""
    eigvals = np.asarray(eigvals)
    if eigvals.size == 0:
        return 0
    lam_max = float(eigvals[-1])
    return int(np.sum(eigvals > eps_rank * max(1.0, lam_max)))


@dataclass
class InformationState:
    """Recorded-data summary: Omega, M, and cached spectral data.

    eigvals are ascending, matching numpy's eigh. updates counts how
    many samples have been folded in; k_e records the count at which
    Omega first reached full numerical rank and never unsets.
    """

    omega: np.ndarray
    m_vec: np.ndarray
    mu: float
    alpha: float
    eigvals: np.ndarray
    eigvecs: np.ndarray
    rank: int = 0
    k_e: int = None
    updates: int = 0
    last_branch: str = "none"
    eps_rank: float = EPS_RANK
    eps_div: float = EPS_DIV

    @property
    def n(self):
        return self.omega.shape[0]

    @property
    def lam_min(self):
        return float(self.eigvals[0])

    @property
    def lam_max(self):
        return float(self.eigvals[-1])


def information_state(n, mu, alpha, eps_rank=EPS_RANK, eps_div=EPS_DIV):
    """Fresh empty memory: Omega = 0, M = 0."""
    if not 0.0 < mu <= 1.0:
        raise ConfigError("forgetting factor mu must lie in (0, 1]")
    if alpha <= 0:
        raise ConfigError("alpha must be > 0")
    return InformationState(
        omega=np.zeros((n, n)),
        m_vec=np.zeros(n),
        mu=mu,
        alpha=alpha,
        eigvals=np.zeros(n),
        eigvecs=np.eye(n),
        rank=0,
        eps_rank=eps_rank,
        eps_div=eps_div,
    )


def rank_would_increase(info, phi, m=1.0):
    """Would folding phi phi^T / m^2 into Omega raise its numerical rank?

    Scaling by m cannot change the answer (it is accepted and validated
    for interface symmetry with the update itself). The test projects phi
    onto the orthogonal complement of Omega's numerical column space and
    compares the leftover energy against eps_rank * ||phi||^2.
    """
    if m <= 0:
        raise ConfigError("normalization m must be > 0")
    phi = np.asarray(phi, dtype=float)
    phi_sq = float(phi @ phi)
    if phi_sq == 0.0:
        return False
    if info.rank == info.n:
        return False
    thresh = info.eps_rank * max(1.0, info.lam_max)
    cols = info.eigvecs[:, info.eigvals > thresh]
    if cols.shape[1] == 0:
        return True
    perp = phi - cols @ (cols.T @ phi)
    return float(perp @ perp) > info.eps_rank * phi_sq


def df_update_information(info, phi, y_next, m, step=None):
    """Fold one sample (phi, y_next) into the recorded-data pair.

    Rank-adding regressors go through plain accumulation. Dependent ones
    take the directional-forgetting branch, guarded so that a vanishing
    phi^T Omega phi (phi numerically in Omega's kernel despite the rank
    test, or phi = 0) falls back to accumulation instead of dividing by
    zero. Returns a new InformationState; the input is not mutated.
    """
    phi = np.asarray(phi, dtype=float)
    if m <= 0:
        raise ConfigError("normalization m must be > 0")
    if not np.all(np.isfinite(phi)) or not np.isfinite(y_next):
        raise DivergenceError(step, "non-finite sample passed to the memory update")
    omega, m_vec = info.omega, info.m_vec
    m2 = m * m
    grows = rank_would_increase(info, phi, m)
    omega_phi = omega @ phi
    phi_om_phi = float(phi @ omega_phi)
    guard = info.eps_div * float(phi @ phi) * max(1.0, info.lam_max)
    if grows or phi_om_phi <= guard:
        omega_new = omega + np.outer(phi, phi) / m2
        m_new = m_vec + phi * (y_next / m2)
        branch = "accumulate"
    else:
        scale = info.mu / phi_om_phi
        omega_new = omega - scale * np.outer(omega_phi, omega_phi) + np.outer(phi, phi) / m2
        m_new = m_vec - scale * float(phi @ m_vec) * omega_phi + phi * (y_next / m2)
        branch = "forget"
    # symmetrize to keep roundoff from accumulating across thousands of steps
    omega_new = 0.5 * (omega_new + omega_new.T)
    eigvals, eigvecs = np.linalg.eigh(omega_new)
    rank = numerical_rank(eigvals, info.eps_rank)
    updates = info.updates + 1
    k_e = info.k_e
    if k_e is None and rank == info.n:
        k_e = updates
    return replace(
        info,
        omega=omega_new,
        m_vec=m_new,
        eigvals=eigvals,
        eigvecs=eigvecs,
        rank=rank,
        k_e=k_e,
        updates=updates,
        last_branch=branch,
    )


def eta_max_cl(phi, omega, m, lam_max=None):
    """Stability ceiling on the gain: 2 m^2 / (2 ||phi||^2 + lam_max(Omega) m^2).

    Returns inf when the denominator vanishes (phi = 0 and Omega = 0),
    in which case the update is a no-op and any finite gain is safe.
    """
    if lam_max is None:
        lam_max = float(np.linalg.eigvalsh(omega)[-1])
    m2 = m * m
    denom = 2.0 * float(phi @ phi) + lam_max * m2
    if denom <= 0.0:
        return np.inf
    return 2.0 * m2 / denom


@dataclass
class EstimatorState:
    """Current estimate plus the gain policy.

    eta_policy "half_of_max" re-derives the ceiling every step and uses
    half of it; "fixed" uses eta as given (warning when it exceeds the
    ceiling, since every guarantee downstream assumes it does not).
    """

    theta_hat: np.ndarray
    eta: float = 0.0
    eta_policy: str = "half_of_max"
    eta_fixed: float = 0.1

    def __post_init__(self):
        if self.eta_policy not in ("half_of_max", "fixed"):
            raise ConfigError(f"unknown eta policy {self.eta_policy!r}")
        self.theta_hat = np.asarray(self.theta_hat, dtype=float)


def cl_step(est, info, phi, y_next, m, step=None):
    """One estimate update against the sample (phi, y_next).

    theta_hat <- theta_hat - eta phi q / m^2 - eta (Omega theta_hat - M)

    with q the prediction error. Returns a new EstimatorState carrying
    the gain actually used. Call before folding the sample into info:
    the update must see Omega(k), not Omega(k+1).
    """
    q = prediction_error(est.theta_hat, phi, y_next)
    ceiling = eta_max_cl(phi, info.omega, m, lam_max=info.lam_max)
    if est.eta_policy == "half_of_max":
        eta = 0.5 * ceiling if np.isfinite(ceiling) else 1.0
    else:
        eta = est.eta_fixed
        if eta >= ceiling:
            warnings.warn(
                f"fixed gain eta={eta} is at or above the stability ceiling {ceiling:.6g}",
                RuntimeWarning,
                stacklevel=2,
            )
    m2 = m * m
    theta_new = (
        est.theta_hat
        - eta * phi * (q / m2)
        - eta * (info.omega @ est.theta_hat - info.m_vec)
    )
    if not np.all(np.isfinite(theta_new)):
        raise DivergenceError(step, "parameter estimate diverged")
    return EstimatorState(
        theta_hat=theta_new,
        eta=eta,
        eta_policy=est.eta_policy,
        eta_fixed=est.eta_fixed,
    )
