"""Conventional concurrent-learning memories for comparison runs.

Both baselines keep an explicit stack of recorded samples (phi, y_next, m)
and rebuild Omega = sum phi phi^T / m^2 and M = sum phi y / m^2 from it,
so positive semidefiniteness is inherited from the sum structure. They
differ only in the admission rule. Neither can forget directionally:
once the stack saturates with stale data, tracking a parameter change
depends on wholesale eviction.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DivergenceError
from .estimator import EPS_RANK, numerical_rank


def _rebuild(entries, n):
    omega = np.zeros((n, n))
    m_vec = np.zeros(n)
    for phi, y_next, m in entries:
        m2 = m * m
        omega += np.outer(phi, phi) / m2
        m_vec += phi * (y_next / m2)
    return 0.5 * (omega + omega.T), m_vec


def _invcond(eigvals):
    lam_max = float(eigvals[-1])
    if lam_max <= 0.0:
        return 0.0
    return max(float(eigvals[0]), 0.0) / lam_max


@dataclass
class DataStack:
    """Fixed-capacity sample stack with derived Omega, M and spectral cache."""

    n: int
    capacity: int
    entries: list = field(default_factory=list)
    omega: np.ndarray = None
    m_vec: np.ndarray = None
    eigvals: np.ndarray = None
    eigvecs: np.ndarray = None
    rank: int = 0
    k_e: int = None
    updates: int = 0
    last_phi: np.ndarray = None
    last_action: str = "none"
    eps_rank: float = EPS_RANK

    def __post_init__(self):
        if self.capacity < 1:
            raise ConfigError("stack capacity must be >= 1")
        if self.omega is None:
            self.omega = np.zeros((self.n, self.n))
            self.m_vec = np.zeros(self.n)
            self.eigvals = np.zeros(self.n)
            self.eigvecs = np.eye(self.n)

    @property
    def lam_min(self):
        return float(self.eigvals[0])

    @property
    def lam_max(self):
        return float(self.eigvals[-1])

    @property
    def last_branch(self):
        return self.last_action


def _adds_rank(stack, phi):
    phi_sq = float(phi @ phi)
    if phi_sq == 0.0 or stack.rank == stack.n:
        return False
    thresh = stack.eps_rank * max(1.0, stack.lam_max)
    cols = stack.eigvecs[:, stack.eigvals > thresh]
    if cols.shape[1] == 0:
        return True
    perp = phi - cols @ (cols.T @ phi)
    return float(perp @ perp) > stack.eps_rank * phi_sq


def _refresh(stack, action):
    omega, m_vec = _rebuild(stack.entries, stack.n)
    eigvals, eigvecs = np.linalg.eigh(omega)
    rank = numerical_rank(eigvals, stack.eps_rank)
    k_e = stack.k_e
    if k_e is None and rank == stack.n:
        k_e = stack.updates
    return replace(
        stack,
        omega=omega,
        m_vec=m_vec,
        eigvals=eigvals,
        eigvecs=eigvecs,
        rank=rank,
        k_e=k_e,
        last_action=action,
    )


def _entry_rank(entries, n, eps_rank):
    if not entries:
        return 0
    omega, _ = _rebuild(entries, n)
    return numerical_rank(np.linalg.eigh(omega)[0], eps_rank)


def stack_manager_admit(stack, phi, y_next, m, tol):
    """Novelty-gated admission with oldest-first eviction.

    Admits when the stack's Omega is rank-deficient and phi adds rank,
    or when phi differs from the last admitted regressor by a relative
    margin of at least tol. A zero regressor is never admitted. At
    capacity, the oldest entry whose removal does not drop rank is
    evicted (the plain oldest one if every entry is rank-critical).
    Returns a new stack; the input is untouched.
    """
    if m <= 0:
        raise ConfigError("normalization m must be > 0")
    if tol <= 0:
        raise ConfigError("novelty tolerance must be > 0")
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)) or not np.isfinite(y_next):
        raise DivergenceError(None, "non-finite sample offered to the stack")
    stack = replace(stack, updates=stack.updates + 1)
    phi_norm = float(np.linalg.norm(phi))
    if phi_norm == 0.0:
        return replace(stack, last_action="reject")
    admit = stack.rank < stack.n and _adds_rank(stack, phi)
    if not admit and stack.last_phi is not None:
        novelty = float(np.linalg.norm(phi - stack.last_phi)) / phi_norm
        admit = novelty >= tol
    if not admit:
        return replace(stack, last_action="reject")
    entries = list(stack.entries)
    if len(entries) >= stack.capacity:
        evict = 0
        for i in range(len(entries)):
            trial = entries[:i] + entries[i + 1 :]
            if _entry_rank(trial, stack.n, stack.eps_rank) == stack.rank:
                evict = i
                break
        entries.pop(evict)
    entries.append((phi.copy(), float(y_next), float(m)))
    stack = replace(stack, entries=entries, last_phi=phi.copy())
    return _refresh(stack, "admit")


def cond_number_admit(omega, m_vec, phi, y_next, m, eps_rank=EPS_RANK):
    """Conditioning-gated admission applied directly to (Omega, M).

    Accepts the sample when the candidate Omega + phi phi^T / m^2 has a
    strictly better inverse condition number lam_min / lam_max, or when
    Omega is rank-deficient and the sample adds numerical rank. Returns
    (omega, m_vec, accepted) with fresh arrays on acceptance.
    """
    if m <= 0:
        raise ConfigError("normalization m must be > 0")
    phi = np.asarray(phi, dtype=float)
    m2 = m * m
    cur_eigs = np.linalg.eigvalsh(omega)
    cand = omega + np.outer(phi, phi) / m2
    cand = 0.5 * (cand + cand.T)
    cand_eigs = np.linalg.eigvalsh(cand)
    cur_rank = numerical_rank(cur_eigs, eps_rank)
    cand_rank = numerical_rank(cand_eigs, eps_rank)
    accept = _invcond(cand_eigs) > _invcond(cur_eigs)
    if not accept and cur_rank < omega.shape[0]:
        accept = cand_rank > cur_rank
    if not accept:
        return omega, m_vec, False
    return cand, m_vec + phi * (y_next / m2), True


@dataclass
class CondNumberStack(DataStack):
    """Stack variant scored purely on Omega's inverse condition number."""

    def admit(self, phi, y_next, m):
        return cond_stack_admit(self, phi, y_next, m)


def cond_stack_admit(stack, phi, y_next, m):
    """Conditioning-gated admission with greedy single-swap at capacity.

    Under capacity this is cond_number_admit against the stack's Omega.
    At capacity, every single swap of an existing entry for the new
    sample is scored and the best one is taken if it beats the current
    inverse condition number (or raises rank while Omega is deficient).
    """
    if m <= 0:
        raise ConfigError("normalization m must be > 0")
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)) or not np.isfinite(y_next):
        raise DivergenceError(None, "non-finite sample offered to the stack")
    stack = replace(stack, updates=stack.updates + 1)
    if float(phi @ phi) == 0.0:
        return replace(stack, last_action="reject")
    entry = (phi.copy(), float(y_next), float(m))
    if len(stack.entries) < stack.capacity:
        _, _, accepted = cond_number_admit(
            stack.omega, stack.m_vec, phi, y_next, m, stack.eps_rank
        )
        if not accepted:
            return replace(stack, last_action="reject")
        stack = replace(stack, entries=stack.entries + [entry], last_phi=phi.copy())
        return _refresh(stack, "admit")
    m2 = m * m
    new_outer = np.outer(phi, phi) / m2
    cur_score = (_invcond(stack.eigvals), stack.rank)
    best = None
    for i, (phi_i, _, m_i) in enumerate(stack.entries):
        cand = stack.omega - np.outer(phi_i, phi_i) / (m_i * m_i) + new_outer
        eigs = np.linalg.eigvalsh(0.5 * (cand + cand.T))
        score = (_invcond(eigs), numerical_rank(eigs, stack.eps_rank))
        if best is None or score > best[0]:
            best = (score, i)
    score, idx = best
    better = score[0] > cur_score[0]
    if not better and stack.rank < stack.n:
        better = score[1] > cur_score[1]
    if not better:
        return replace(stack, last_action="reject")
    entries = list(stack.entries)
    entries[idx] = entry
    stack = replace(stack, entries=entries, last_phi=phi.copy())
    return _refresh(stack, "swap")
