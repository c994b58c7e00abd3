import numpy as np
import pytest

from rotohom import (
    ArmDelays,
    AsymmetricModelInput,
    ConvergenceError,
    OpticalConfig,
    QuadratureSpec,
    SymmetricModelInput,
    finite_sigma_coincidence_probability,
    finite_sigma_state_probability,
    nc_asymmetric,
    nc_quadrature,
    nc_symmetric,
    pc_overlap_quadrature,
    propagation_times,
    spectrum_normalization,
    state_probability_quadrature,
)
from rotohom.oracle import _nc_integrand_sum, gaussian_rule

OPTICS = OpticalConfig()
DW = OPTICS.delta_omega


def rel_err(got, ref, scale):
    return np.abs(np.asarray(got) - np.asarray(ref)) / np.maximum(np.abs(ref), scale)


@pytest.mark.parametrize("num_points, half_width, scheme", [
    (32, 12, "trapezoid"), (4096, 4, "trapezoid"), (128, 12, "simpson"),
])
def test_quadrature_spec_invariants(num_points, half_width, scheme):
    with pytest.raises(ValueError):
        QuadratureSpec(num_points=num_points, half_width_sigmas=half_width, scheme=scheme)


@pytest.mark.parametrize("scheme", ["trapezoid", "gauss-hermite"])
def test_gaussian_rule_moments(scheme):
    x, w = gaussian_rule(QuadratureSpec(num_points=128, scheme=scheme), std=3.0)
    norm = 3.0 * np.sqrt(2 * np.pi)
    assert w.sum() == pytest.approx(norm, rel=1e-12)
    assert np.sum(w * x**2) == pytest.approx(9.0 * norm, rel=1e-10)


def test_nc_quadrature_zero_loop_delay():
    inp = AsymmetricModelInput(np.linspace(-3e-12, 3e-12, 9), 0.0, 0.0, 0.0, 0.0, OPTICS)
    np.testing.assert_allclose(nc_quadrature(inp), 0.0, atol=1e-12)


def test_nc_quadrature_matches_symmetric_at_dip(arm):
    d = propagation_times(arm, 0.0)
    ref = nc_symmetric(SymmetricModelInput(0.0, d, OPTICS))
    got = nc_quadrature(AsymmetricModelInput.from_arms(0.0, d, d, OPTICS))
    assert rel_err(got, ref.n_c, ref.background) < 1e-6


def test_nc_quadrature_asymmetric_example():
    inp = AsymmetricModelInput(0.0, 2.1e-12, 0.2e-12, 1.9e-12, 0.1e-12, OPTICS)
    ref = nc_asymmetric(inp)
    assert rel_err(nc_quadrature(inp), ref.n_c, ref.background) < 1e-6


def test_nc_quadrature_real_for_random_draws():
    rng = np.random.default_rng(11)
    times = rng.uniform(0, 3e-12, size=(4, 100))
    tau = rng.uniform(-4e-12, 4e-12, size=100)
    # raises if the imaginary residual exceeds 1e-10 of the integrand mass
    inp = AsymmetricModelInput(tau, *times, OPTICS)
    got = nc_quadrature(inp)
    ref = nc_asymmetric(inp)
    assert np.max(rel_err(got, ref.n_c, ref.background)) < 1e-6


def test_nc_quadrature_gauss_hermite_agrees(arm):
    d = propagation_times(arm, 0.0)
    taus = np.linspace(-3e-12, 3e-12, 11)
    inp = AsymmetricModelInput.from_arms(taus, d, d, OPTICS)
    a = nc_quadrature(inp)
    b = nc_quadrature(inp, QuadratureSpec(num_points=3200, scheme="gauss-hermite"))
    ref = nc_symmetric(SymmetricModelInput(taus, d, OPTICS))
    assert np.max(rel_err(b, a, ref.background)) < 1e-8


def test_nc_quadrature_reports_non_convergence(arm):
    d = propagation_times(arm, 0.0)
    inp = AsymmetricModelInput.from_arms(d.delta_t / 2, d, d, OPTICS)
    with pytest.raises(ConvergenceError):
        nc_quadrature(inp, QuadratureSpec(num_points=64, half_width_sigmas=8))


def test_nc_quadrature_independent_of_partition(arm):
    d = propagation_times(arm, 0.3)
    tau = np.linspace(-3e-12, 3e-12, 37)
    args = [np.broadcast_to(x, tau.shape).astype(float) for x in (d.t_cw, d.t_ac, d.t_cw, d.t_ac)]
    ref = np.mean(args, axis=0)
    args = [a - ref for a in args]
    whole, mag = _nc_integrand_sum(tau, *args, OPTICS, QuadratureSpec(), chunk=64)
    split, _ = _nc_integrand_sum(tau, *args, OPTICS, QuadratureSpec(), chunk=5)
    assert np.max(np.abs(whole - split) / mag) < 1e-12


@pytest.mark.parametrize("sigma_p, scale, expected", [
    (2 * np.pi * 2e10, 1.0, 1.0),
    (DW, 1.0, 1.0),
    (2 * np.pi * 2e10, 2.0, 4.0),
])
def test_spectrum_normalization(sigma_p, scale, expected):
    got = spectrum_normalization(OPTICS.with_sigma_p(sigma_p), amplitude_scale=scale)
    assert got == pytest.approx(expected, abs=1e-6 * expected)


def test_spectrum_normalization_needs_spread():
    with pytest.raises(ValueError):
        spectrum_normalization(OPTICS.with_sigma_p(0.0))


@pytest.mark.parametrize("dt_units", [0.4, 1.5, 22.4])
@pytest.mark.parametrize("ratio", [1e-3, 0.1, 1.0])
def test_state_probability_matches_closed_form(dt_units, ratio):
    optics = OPTICS.with_sigma_p(ratio * DW)
    dt = dt_units / DW
    assert state_probability_quadrature(dt, optics) == pytest.approx(
        finite_sigma_state_probability(dt, optics), abs=1e-10)


@pytest.mark.parametrize("dt_units", [1.3, 22.4])
def test_pc_overlap_matches_closed_form(dt_units):
    optics = OPTICS.with_sigma_p(0.1 * DW)
    dt = dt_units / DW
    taus = np.linspace(-1.5 * dt, 1.5 * dt, 20)
    got = pc_overlap_quadrature(taus, dt, optics)
    ref = finite_sigma_coincidence_probability(taus, dt, optics)
    assert np.max(np.abs(got - ref) / np.abs(ref)) < 1e-5


def test_pc_overlap_far_delay(arm):
    assert pc_overlap_quadrature(5e-12, propagation_times(arm, 0.0), OPTICS) == pytest.approx(0.5, abs=1e-6)


def test_pc_overlap_exchange_symmetric_minimum():
    optics = OPTICS.with_sigma_p(0.1 * DW)
    dt = ArmDelays(3.0 / DW, 0.0)
    taus = np.linspace(-0.5, 0.5, 21) / DW
    pc = pc_overlap_quadrature(taus, dt, optics)
    assert taus[np.argmin(pc)] == pytest.approx(0.0, abs=1e-20)
    assert pc.min() <= 1e-3
