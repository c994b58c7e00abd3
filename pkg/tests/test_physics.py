import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rotohom import (
    SPEED_OF_LIGHT,
    OpticalConfig,
    RotationState,
    SagnacArm,
    StageMapping,
    birefringent_delay,
    delay_to_stage,
    flip_half_period,
    hz_to_rad_per_s,
    oscillation_phase,
    propagation_times,
    sagnac_delay,
    stage_to_delay,
    tune_birefringence,
)

C = SPEED_OF_LIGHT
finite = dict(allow_nan=False, allow_infinity=False)


def test_sagnac_delay_examples():
    assert sagnac_delay(1.0, 0.0) == 0.0
    assert sagnac_delay(1.0, 1.0) == pytest.approx(4.450e-17, rel=1e-3)
    assert sagnac_delay(2.5, -3.0) == -sagnac_delay(2.5, 3.0)


def test_sagnac_delay_rejects_negative_area():
    with pytest.raises(ValueError):
        sagnac_delay(-1.0, 1.0)


@given(st.floats(0, 1e3, **finite), st.floats(0, 1e3, **finite), st.floats(-50, 50, **finite), st.floats(-50, 50, **finite))
def test_sagnac_delay_bilinear(a1, a2, w1, w2):
    lhs = sagnac_delay(a1 + a2, w1)
    assert lhs == pytest.approx(sagnac_delay(a1, w1) + sagnac_delay(a2, w1), rel=1e-12, abs=1e-30)
    assert sagnac_delay(a1, w1 + w2) == pytest.approx(sagnac_delay(a1, w1) + sagnac_delay(a1, w2), rel=1e-12, abs=1e-30)


def test_propagation_times_at_rest(arm):
    d = propagation_times(arm, RotationState())
    assert d.delta_t == pytest.approx(5.641e-4 / C, rel=1e-9)
    assert d.delta_t == pytest.approx(1.8816e-12, rel=1e-4)


def test_propagation_times_without_birefringence():
    arm = SagnacArm(birefringent_length=0.0)
    assert propagation_times(arm, 0.0).delta_t == 0.0
    d = propagation_times(arm, hz_to_rad_per_s(0.455))
    assert d.delta_t == pytest.approx(1.183e-15, rel=1e-3)
    # this is the flip condition: mu * delta_t = pi
    assert OpticalConfig().mu * d.delta_t == pytest.approx(math.pi, rel=2e-3)


@given(st.floats(-100, 100, **finite))
def test_propagation_times_odd_about_rest(omega):
    arm = SagnacArm()
    total = propagation_times(arm, omega).delta_t + propagation_times(arm, -omega).delta_t
    assert total == pytest.approx(2 * birefringent_delay(arm), rel=1e-12)


def test_propagation_times_accepts_arrays(arm):
    w = np.linspace(-1, 1, 5)
    d = propagation_times(arm, w)
    assert d.delta_t.shape == (5,)
    assert d.delta_t[2] == pytest.approx(birefringent_delay(arm))


@pytest.mark.parametrize("lam, fiber, expected, tol", [
    (355e-9, 41.0, 0.455, 1e-3),
    (355e-9, 82.0, 0.2275, 1e-4),
    (710e-9, 41.0, 0.910, 1e-3),
])
def test_flip_half_period(lam, fiber, expected, tol):
    got = flip_half_period(SagnacArm(fiber_length=fiber), OpticalConfig(lambda_p=lam))
    assert got == pytest.approx(expected, abs=tol)


def test_flip_half_period_halves_with_doubled_fibre(optics):
    base = flip_half_period(SagnacArm(fiber_length=41.0), optics)
    assert flip_half_period(SagnacArm(fiber_length=82.0), optics) == pytest.approx(base / 2, rel=1e-15)


@given(st.floats(1e-7, 2e-6, **finite), st.floats(1, 1000, **finite), st.floats(0.01, 5, **finite))
def test_flip_half_period_identity(lam, fiber, radius):
    arm = SagnacArm(fiber_length=fiber, loop_radius=radius, birefringent_length=0.0)
    half = flip_half_period(arm, OpticalConfig(lambda_p=lam))
    assert half * 4 * math.pi * fiber * radius / C == pytest.approx(lam, rel=1e-13)


def test_flip_half_period_flips_phase(arm, optics):
    half = flip_half_period(arm, optics)
    shift = oscillation_phase(arm, optics, hz_to_rad_per_s(half)) - oscillation_phase(arm, optics)
    # difference of two phases near 5e3 rad, so only ~1e-12 absolute of each survives
    assert shift == pytest.approx(math.pi, rel=1e-9)


def test_stage_mapping_examples():
    m = StageMapping(meters_per_second_of_delay=2 * C, origin=0.003)
    assert stage_to_delay(0.003, m) == 0.0
    assert stage_to_delay(0.003 + 2 * C * 1e-12, m) == pytest.approx(1e-12, rel=1e-12)
    assert delay_to_stage(stage_to_delay(0.01337, m), m) == pytest.approx(0.01337, rel=1e-15)


@given(st.lists(st.integers(-10**6, 10**6), min_size=2, max_size=20, unique=True))
def test_stage_to_delay_monotone(microns):
    xs = np.sort(np.asarray(microns)) * 1e-6
    assert np.all(np.diff(stage_to_delay(xs, StageMapping())) > 0)


@pytest.mark.parametrize("kwargs", [
    dict(lambda_p=0.0), dict(delta_omega=-1.0), dict(sigma_p=-1.0), dict(lambda_p=float("inf")),
])
def test_optical_config_invariants(kwargs):
    with pytest.raises(ValueError):
        OpticalConfig(**kwargs)


def test_optical_config_derived(optics):
    assert optics.mu == optics.omega_p / 2
    assert optics.omega_p == pytest.approx(2 * math.pi * C / 355e-9)


@pytest.mark.parametrize("kwargs", [
    dict(fiber_length=0.0), dict(loop_radius=-1.0), dict(birefringent_length=50.0), dict(n_cw=0.9),
])
def test_sagnac_arm_invariants(kwargs):
    with pytest.raises(ValueError):
        SagnacArm(**kwargs)


def test_rotation_state():
    r = RotationState.from_hz(0.5, "acw", set_frequency=0.52)
    assert r.omega == pytest.approx(-math.pi)
    assert r.direction == "acw" and r.hz == pytest.approx(-0.5)
    assert RotationState.from_hz(0.5).direction == "cw"
    with pytest.raises(ValueError):
        RotationState.from_hz(0.5, "up")
    with pytest.raises(ValueError):
        RotationState(omega=float("nan"))


@pytest.mark.parametrize("phase", [0.0, 0.5 * math.pi, math.pi, -2.0])
def test_tune_birefringence(arm, optics, phase):
    tuned = tune_birefringence(arm, optics, phase)
    got = oscillation_phase(tuned, optics)
    assert math.cos(got - phase) == pytest.approx(1.0, abs=1e-9)
    # less than one optical period of delay change
    assert abs(birefringent_delay(tuned) - birefringent_delay(arm)) <= 2 * math.pi / optics.omega_p
