"""Reference model, gain clamp, and the model-inverting control law."""

import numpy as np
import pytest

from dfcl import (
    ConfigError,
    ControllerConfig,
    ReferenceModel,
    ReferenceSpec,
    control,
    ideal_control,
    reference_signal,
    reference_step,
)


def test_reference_model_step():
    model = ReferenceModel(a_m=-0.5)
    assert model.b_m == 0.5
    assert reference_step(model, 1.0) == pytest.approx(0.5)
    model.y_m = 0.5
    assert reference_step(model, 1.0) == pytest.approx(0.75)
    model.y_m = 1.0
    assert reference_step(model, 1.0) == pytest.approx(1.0)  # fixed point at r


def test_reference_model_unit_dc_gain():
    model = ReferenceModel(a_m=0.3)
    y_m = 0.0
    for _ in range(200):
        model.y_m = y_m
        y_m = reference_step(model, 2.0)
    assert y_m == pytest.approx(2.0, abs=1e-12)


def test_reference_model_validation():
    with pytest.raises(ConfigError):
        ReferenceModel(a_m=-1.0)
    with pytest.raises(ConfigError):
        ReferenceModel(a_m=-0.5, b_m=1.0)
    ReferenceModel(a_m=-0.5, b_m=0.5)  # explicit consistent value is fine


def test_control_values():
    cfg = ControllerConfig(gamma_e=0.5, g_lower=0.1)
    u, clamped = control(0.0, 0.0, 1.0, 1.0, cfg)
    assert u == pytest.approx(1.0) and not clamped
    u, clamped = control(2.0, -1.0, 2.0, 0.5, cfg)
    assert u == pytest.approx((1.0 + 1.0 + 0.5) / 2.0) and not clamped


def test_control_clamp():
    cfg = ControllerConfig(gamma_e=0.5, g_lower=0.1)
    u, clamped = control(0.0, 0.0, 0.01, 1.0, cfg)
    assert clamped and u == pytest.approx(10.0)
    # sign is preserved, zero counts as positive
    u_neg, _ = control(0.0, 0.0, -0.01, 1.0, cfg)
    assert u_neg == pytest.approx(-10.0)
    u_zero, clamped = control(0.0, 0.0, 0.0, 1.0, cfg)
    assert clamped and u_zero == pytest.approx(10.0)
    # at the boundary no clamping happens
    _, clamped = control(0.0, 0.0, 0.1, 1.0, cfg)
    assert not clamped


def test_control_validation():
    with pytest.raises(ConfigError):
        ControllerConfig(gamma_e=1.0, g_lower=0.1)
    with pytest.raises(ConfigError):
        ControllerConfig(gamma_e=0.5, g_lower=0.0)
    cfg = ControllerConfig(gamma_e=0.5, g_lower=0.1)
    with pytest.raises(ConfigError):
        control(float("nan"), 0.0, 1.0, 0.0, cfg)


def test_ideal_control_cancels_everything():
    # with perfect knowledge the next error is exactly gamma_e * e
    rng = np.random.default_rng(13)
    for _ in range(100):
        f, g = rng.normal(), rng.normal()
        if abs(g) < 0.2:
            g = 0.2 * np.sign(g) if g != 0 else 0.2
        e, w, y_m_next, gamma_e = rng.normal(), rng.normal(), rng.normal(), 0.5
        u = ideal_control(e, f, g, w, y_m_next, gamma_e, 0.1)
        y_next = f + g * u + w
        assert y_next - y_m_next == pytest.approx(gamma_e * e, abs=1e-9)


def test_ideal_control_matches_control_when_exact():
    cfg = ControllerConfig(gamma_e=0.5, g_lower=0.1)
    u_hat, _ = control(1.0, 2.0, 1.5, 0.5, cfg)
    u_star = ideal_control(1.0, 2.0, 1.5, 0.0, 0.5, 0.5, 0.1)
    assert u_hat == pytest.approx(u_star)


def test_ideal_control_gain_check():
    with pytest.raises(ConfigError):
        ideal_control(0.0, 0.0, 0.05, 0.0, 0.0, 0.5, 0.1)


def test_reference_signal_kinds():
    square = ReferenceSpec(kind="square", amplitude=1.0, period=200)
    assert reference_signal(square, 0) == 1.0
    assert reference_signal(square, 99) == 1.0
    assert reference_signal(square, 100) == -1.0
    assert reference_signal(square, 200) == 1.0
    const = ReferenceSpec(kind="constant", amplitude=2.5)
    assert reference_signal(const, 7) == 2.5
    zero = ReferenceSpec(kind="zero")
    assert reference_signal(zero, 3) == 0.0
    sine = ReferenceSpec(kind="sine", amplitude=2.0, period=8)
    assert reference_signal(sine, 2) == pytest.approx(2.0)
    assert reference_signal(sine, 4) == pytest.approx(0.0, abs=1e-12)


def test_reference_spec_validation():
    with pytest.raises(ConfigError):
        ReferenceSpec(kind="sawtooth")
    with pytest.raises(ConfigError):
        ReferenceSpec(kind="square", period=1)
