"""Stack-based memories: novelty gate and conditioning gate."""

import numpy as np
import pytest

from dfcl import ConfigError, CondNumberStack, DataStack, cond_number_admit
from dfcl.baselines import cond_stack_admit, stack_manager_admit
from dfcl.estimator import normalization


def _admit(stack, phi, y=1.0, tol=1e-3):
    return stack_manager_admit(stack, phi, y, normalization(phi, 1.0), tol)


def test_stack_first_sample_admitted():
    stack = DataStack(n=2, capacity=5)
    stack = _admit(stack, np.array([1.0, 0.0]))
    assert stack.last_action == "admit"
    assert len(stack.entries) == 1 and stack.rank == 1
    np.testing.assert_allclose(stack.omega, [[0.5, 0.0], [0.0, 0.0]])


def test_stack_rejects_repeat_and_zero():
    stack = DataStack(n=2, capacity=5)
    e1 = np.array([1.0, 0.0])
    stack = _admit(stack, e1)
    stack = _admit(stack, e1)
    assert stack.last_action == "reject" and len(stack.entries) == 1
    stack = _admit(stack, np.zeros(2))
    assert stack.last_action == "reject" and len(stack.entries) == 1


def test_stack_novelty_gate():
    stack = DataStack(n=2, capacity=5)
    e1 = np.array([1.0, 0.0])
    stack = _admit(stack, e1)
    # relative change of 0.5 clears tol = 1e-3 even though rank is unchanged
    stack = _admit(stack, np.array([1.5, 0.0]))
    assert stack.last_action == "admit" and len(stack.entries) == 2
    # change below tol is rejected
    stack = _admit(stack, np.array([1.5 + 1e-6, 0.0]))
    assert stack.last_action == "reject"


def test_stack_rank_gate_beats_novelty():
    stack = DataStack(n=2, capacity=5)
    stack = _admit(stack, np.array([1.0, 0.0]))
    stack = _admit(stack, np.array([0.0, 1.0]), tol=10.0)  # impossible novelty bar
    assert stack.last_action == "admit" and stack.rank == 2


def test_stack_eviction_preserves_rank():
    stack = DataStack(n=2, capacity=3)
    rng = np.random.default_rng(2)
    stack = _admit(stack, np.array([1.0, 0.0]))
    stack = _admit(stack, np.array([0.0, 1.0]))
    for _ in range(20):
        stack = _admit(stack, rng.normal(size=2))
        assert len(stack.entries) <= 3
        assert stack.rank == 2


def test_stack_k_e_and_updates():
    stack = DataStack(n=2, capacity=5)
    stack = _admit(stack, np.array([1.0, 0.0]))
    stack = _admit(stack, np.array([1.0, 0.0]))  # rejected, still counts a step
    stack = _admit(stack, np.array([0.0, 2.0]))
    assert stack.updates == 3
    assert stack.k_e == 3


def test_stack_validation():
    with pytest.raises(ConfigError):
        DataStack(n=2, capacity=0)
    stack = DataStack(n=2, capacity=2)
    with pytest.raises(ConfigError):
        stack_manager_admit(stack, np.ones(2), 1.0, 0.0, 1e-3)
    with pytest.raises(ConfigError):
        stack_manager_admit(stack, np.ones(2), 1.0, 1.0, 0.0)


def test_cond_admit_from_empty():
    omega = np.zeros((2, 2))
    m_vec = np.zeros(2)
    omega, m_vec, ok = cond_number_admit(omega, m_vec, np.array([1.0, 0.0]), 1.0, 1.0)
    assert ok
    np.testing.assert_allclose(omega, [[1.0, 0.0], [0.0, 0.0]])
    np.testing.assert_allclose(m_vec, [1.0, 0.0])


def test_cond_admit_rejects_conditioning_loss():
    # identity is perfectly conditioned; reinforcing one axis only hurts
    omega = np.eye(2)
    m_vec = np.zeros(2)
    _, _, ok = cond_number_admit(omega, m_vec, np.array([1.0, 0.0]), 0.0, 1.0)
    assert not ok


def test_cond_admit_accepts_conditioning_gain():
    omega = np.diag([1.0, 0.1])
    m_vec = np.zeros(2)
    phi = np.array([0.0, 3.0])  # adds 9/10 = 0.9 to the weak axis
    m = normalization(phi, 1.0)
    omega2, _, ok = cond_number_admit(omega, m_vec, phi, 0.0, m)
    assert ok
    assert omega2[1, 1] == pytest.approx(1.0)


def test_cond_stack_swap_at_capacity():
    stack = CondNumberStack(n=2, capacity=2)
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    stack = cond_stack_admit(stack, e1, 1.0, normalization(e1, 1.0))
    stack = cond_stack_admit(stack, 0.2 * e2, 1.0, normalization(0.2 * e2, 1.0))
    assert stack.rank == 2
    before = stack.lam_min / stack.lam_max
    # a strong second-axis sample should displace the weak one
    stack = cond_stack_admit(stack, e2, 1.0, normalization(e2, 1.0))
    assert stack.last_action == "swap"
    assert len(stack.entries) == 2
    assert stack.lam_min / stack.lam_max > before


def test_cond_stack_rejects_pointless_swap():
    stack = CondNumberStack(n=2, capacity=2)
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    stack = cond_stack_admit(stack, e1, 1.0, normalization(e1, 1.0))
    stack = cond_stack_admit(stack, e2, 1.0, normalization(e2, 1.0))
    stack = cond_stack_admit(stack, e1, 1.0, normalization(e1, 1.0))
    assert stack.last_action == "reject"


def test_both_stacks_stay_psd_and_consistent():
    rng = np.random.default_rng(31)
    theta = np.array([0.5, -1.5, 2.0])
    for make in (lambda: DataStack(n=3, capacity=4), lambda: CondNumberStack(n=3, capacity=4)):
        stack = make()
        for k in range(200):
            phi = rng.normal(size=3)
            if k % 4 == 0:
                phi = np.zeros(3)
            m = normalization(phi, 1.0)
            y = float(theta @ phi)
            if isinstance(stack, CondNumberStack):
                stack = cond_stack_admit(stack, phi, y, m)
            else:
                stack = stack_manager_admit(stack, phi, y, m, 1e-3)
            lam = np.linalg.eigvalsh(stack.omega)
            assert lam[0] >= -1e-12 * max(1.0, lam[-1])
            assert np.linalg.norm(stack.omega - stack.omega.T) <= 1e-12
            # clean data: M = Omega theta regardless of what is in the stack
            assert np.linalg.norm(stack.omega @ theta - stack.m_vec) <= 1e-9
