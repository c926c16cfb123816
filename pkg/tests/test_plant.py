"""Regressor assembly, plant advance, and disturbance kinds."""

import math

import numpy as np
import pytest

from dfcl import (
    BasisConfig,
    BasisTerm,
    ConfigError,
    DisturbanceSpec,
    PlantState,
    SignalCorruptionError,
    TrueParameters,
    build_regressor,
    disturbance_sample,
    plant_step,
)

BENCH_BASIS = BasisConfig(
    terms=(
        BasisTerm(kind="lag", lag=0),
        BasisTerm(kind="lag", lag=1),
        BasisTerm(kind="gauss", center=math.pi / 2.0, width=4.0),
    ),
    phi_g=1.0,
)


def test_regressor_at_rest():
    state = PlantState.initial((0.0, 0.0), BENCH_BASIS.depth)
    phi = build_regressor(state, 0.0, BENCH_BASIS)
    expected_gauss = math.exp(-(math.pi / 2.0) ** 2 / 4.0)
    assert phi.shape == (4,)
    np.testing.assert_allclose(phi, [0.0, 0.0, expected_gauss, 0.0], atol=1e-15)
    assert phi[2] == pytest.approx(0.53964, abs=1e-4)


def test_regressor_at_gauss_center():
    state = PlantState.initial((math.pi / 2.0, 0.0), BENCH_BASIS.depth)
    phi = build_regressor(state, 1.0, BENCH_BASIS)
    np.testing.assert_allclose(phi, [math.pi / 2.0, 0.0, 1.0, 1.0], atol=1e-15)


def test_regressor_input_slot():
    basis = BasisConfig(terms=(BasisTerm(kind="lag", lag=0),), phi_g=1.0)
    state = PlantState.initial((0.0,), basis.depth)
    phi = build_regressor(state, 1.0, basis)
    np.testing.assert_allclose(phi, [0.0, 1.0])
    basis2 = BasisConfig(terms=(BasisTerm(kind="lag", lag=0),), phi_g=-2.0)
    phi2 = build_regressor(state, 3.0, basis2)
    assert phi2[-1] == -6.0


def test_regressor_history_ordering():
    # history[0] is the newest sample; lag 1 must read the older one
    basis = BasisConfig(
        terms=(BasisTerm(kind="lag", lag=0), BasisTerm(kind="lag", lag=1))
    )
    state = PlantState.initial((5.0, 7.0), basis.depth)
    phi = build_regressor(state, 0.0, basis)
    np.testing.assert_allclose(phi[:2], [5.0, 7.0])
    state.push(9.0)
    phi = build_regressor(state, 0.0, basis)
    np.testing.assert_allclose(phi[:2], [9.0, 5.0])


def test_const_term():
    basis = BasisConfig(terms=(BasisTerm(kind="const", value=2.5),))
    state = PlantState.initial((0.0,), basis.depth)
    phi = build_regressor(state, 0.0, basis)
    assert phi[0] == 2.5


def test_regressor_rejects_corruption():
    state = PlantState.initial((0.0, 0.0), BENCH_BASIS.depth)
    with pytest.raises(SignalCorruptionError):
        build_regressor(state, float("nan"), BENCH_BASIS)
    state.push(float("inf"))
    with pytest.raises(SignalCorruptionError):
        build_regressor(state, 0.0, BENCH_BASIS)


def test_basis_validation():
    with pytest.raises(ConfigError):
        BasisTerm(kind="spline")
    with pytest.raises(ConfigError):
        BasisTerm(kind="gauss", width=0.0)
    with pytest.raises(ConfigError):
        BasisTerm(kind="lag", lag=-1)
    with pytest.raises(ConfigError):
        BasisConfig(terms=())
    with pytest.raises(ConfigError):
        BasisConfig(terms=(BasisTerm(kind="lag"),), phi_g=0.0)


def test_plant_step_benchmark_point():
    params = TrueParameters(theta=(-2.0, 0.5, 1.0, 1.0), g_lower=0.1)
    gauss = math.exp(-(math.pi / 2.0) ** 2 / 4.0)
    phi = np.array([0.0, 0.0, gauss, 0.0])
    assert plant_step(params, phi, 0.0) == pytest.approx(gauss)


def test_plant_step_scalar_and_mismatch():
    params = TrueParameters(theta=(1.0,), g_lower=0.5)
    assert plant_step(params, np.array([2.0]), 0.5) == 2.5
    with pytest.raises(ConfigError):
        plant_step(params, np.array([1.0, 2.0]), 0.0)


def test_plant_step_linearity():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = rng.integers(1, 6)
        theta = rng.normal(size=n)
        theta[-1] = 1.0 + abs(theta[-1])
        phi = rng.normal(size=n)
        w = rng.normal()
        a = rng.normal()
        p1 = TrueParameters(theta=tuple(theta), g_lower=0.1)
        p2 = TrueParameters(theta=tuple(a * theta), g_lower=1e-12)
        lhs = plant_step(p2, phi, 0.0)
        rhs = a * (plant_step(p1, phi, w) - w)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_gain_bound_validation():
    with pytest.raises(ConfigError):
        TrueParameters(theta=(1.0, 1.0), g_lower=0.0)
    with pytest.raises(ConfigError):
        TrueParameters(theta=(1.0, float("nan")), g_lower=0.1)


def test_disturbance_piecewise():
    spec = DisturbanceSpec(
        kind="piecewise_output_dependent", amplitude=1.0, switch_step=500, bound=1.0
    )
    assert disturbance_sample(spec, 100, math.pi / 2.0) == pytest.approx(1.0)
    assert disturbance_sample(spec, 499, 1.0) == pytest.approx(math.sin(1.0))
    assert disturbance_sample(spec, 500, 1.0) == 0.0
    assert disturbance_sample(spec, 600, math.pi / 2.0) == 0.0


def test_disturbance_zero_and_validation():
    assert disturbance_sample(DisturbanceSpec(kind="zero"), 3, 1.0) == 0.0
    with pytest.raises(ConfigError):
        DisturbanceSpec(kind="gusts")
    with pytest.raises(ConfigError):
        DisturbanceSpec(kind="piecewise_output_dependent", amplitude=2.0, bound=1.0)


def test_disturbance_stays_within_bound():
    piecewise = DisturbanceSpec(
        kind="piecewise_output_dependent", amplitude=0.8, switch_step=10**9, bound=0.8
    )
    noise = DisturbanceSpec(kind="bounded_custom", amplitude=0.5, bound=0.5, seed=3)
    rng = np.random.default_rng(11)
    for k in range(2000):
        y = rng.normal(scale=5.0)
        assert abs(disturbance_sample(piecewise, k, y)) <= 0.8
        assert abs(disturbance_sample(noise, k, y)) <= 0.5


def test_disturbance_custom_callable():
    spec = DisturbanceSpec(
        kind="bounded_custom", bound=2.0, custom=lambda k, y: 2.0 * math.cos(k)
    )
    assert disturbance_sample(spec, 0, 0.0) == pytest.approx(2.0)
    bad = DisturbanceSpec(kind="bounded_custom", bound=0.1, custom=lambda k, y: 1.0)
    with pytest.raises(SignalCorruptionError):
        disturbance_sample(bad, 0, 0.0)


def test_disturbance_noise_is_deterministic():
    spec = DisturbanceSpec(kind="bounded_custom", amplitude=1.0, bound=1.0, seed=42)
    first = [disturbance_sample(spec, k, 0.0) for k in range(50)]
    second = [disturbance_sample(spec, k, 0.0) for k in range(50)]
    assert first == second
    other = DisturbanceSpec(kind="bounded_custom", amplitude=1.0, bound=1.0, seed=43)
    assert first != [disturbance_sample(other, k, 0.0) for k in range(50)]
