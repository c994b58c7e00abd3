"""Brute-force quadrature of the spectral integrals behind the closed forms.

Nothing here calls into :mod:`rotohom.models`; the two modules are meant to
check each other.

Integrals are evaluated in frequencies measured from the mean photon
frequency ``mu`` (optical frequencies are ~5e15 rad/s and would swamp the
detuning otherwise), and constant phases are reduced modulo ``2 pi`` before
any trig call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .physics import ArmDelays, OpticalConfig

_TWO_PI = 2.0 * math.pi

#: tolerance on the change of a result when the node count is doubled
CONVERGENCE_RTOL = 1e-8
#: tolerance on the discarded imaginary part, relative to the integrand mass
IMAG_RTOL = 1e-10


class ConvergenceError(RuntimeError):
    """Raised when a quadrature result is not stable under node doubling."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Node count, domain and rule for one integration axis."""

    num_points: int = 4096
    half_width_sigmas: float = 12.0
    scheme: str = "trapezoid"

    def __post_init__(self):
        if self.num_points < 64:
            raise ValueError("num_points must be >= 64")
        if self.scheme not in ("trapezoid", "gauss-hermite"):
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if self.scheme == "trapezoid" and self.half_width_sigmas < 8:
            raise ValueError("half_width_sigmas must be >= 8 for the trapezoid rule")

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.num_points, self.half_width_sigmas, self.scheme)


DEFAULT_QUAD = QuadratureSpec()
#: per-axis default for the two-dimensional spectral integrals
DEFAULT_QUAD_2D = QuadratureSpec(num_points=512)


@lru_cache(maxsize=16)
def _hermgauss(n):
    return special.roots_hermite(n)


def gaussian_rule(quad: QuadratureSpec, std: float, width: float | None = None):
    """Nodes ``x`` and weights ``w`` with ``sum(w * f(x)) ~ int exp(-x^2 / (2 std^2)) f(x) dx``.

    For the trapezoid rule the nodes cover ``+-half_width_sigmas * width``
    (``width`` defaults to ``std``).
    """
    if quad.scheme == "gauss-hermite":
        xi, wi = _hermgauss(quad.num_points)
        scale = math.sqrt(2.0) * std
        return scale * xi, scale * wi
    span = quad.half_width_sigmas * (std if width is None else width)
    x = np.linspace(-span, span, quad.num_points)
    h = x[1] - x[0]
    w = np.full_like(x, h)
    w[0] = w[-1] = h / 2.0
    return x, w * np.exp(-(x**2) / (2.0 * std**2))


def _checked_real(total, magnitude, what):
    scale = np.maximum(magnitude, np.finfo(float).tiny)
    worst = np.max(np.abs(np.imag(total)) / scale)
    if worst > IMAG_RTOL:
        raise ArithmeticError(f"{what}: imaginary residual {worst:.3e} of scale exceeds {IMAG_RTOL:g}")
    return np.real(total)


def _converged(coarse, fine, scale, what):
    err = np.max(np.abs(coarse - fine) / np.maximum(scale, np.finfo(float).tiny))
    if err > CONVERGENCE_RTOL:
        raise ConvergenceError(f"{what}: doubling the node count changed the result by {err:.3e} (relative)")


# -- one-dimensional coincidence integral ----------------------------------


def _nc_integrand_sum(tau, t_icw, t_iac, t_scw, t_sac, optics, quad, chunk=64):
    """Return the integral and the integrated magnitude of its two terms, for arrays of equal shape."""
    dw = optics.delta_omega
    mu = optics.mu
    w_nodes, weights = gaussian_rule(quad, std=dw / math.sqrt(2.0), width=dw)
    norm = 1.0 / (2.0 * math.pi * dw**2)

    shape = tau.shape
    args = [a.reshape(-1) for a in (tau, t_icw, t_iac, t_scw, t_sac)]
    total = np.empty(args[0].size, dtype=complex)
    magnitude = np.empty(args[0].size)
    w = w_nodes[None, :]
    for start in range(0, args[0].size, chunk):
        sl = slice(start, start + chunk)
        d, icw, iac, scw, sac = (a[sl, None] for a in args)
        ti = icw - iac
        ts = scw - sac
        ph_i = np.remainder(mu * ti, _TWO_PI)
        ph_s = np.remainder(mu * ts, _TWO_PI)
        bg = 4.0 * (1.0 - np.cos(w * ti + ph_i)) * (1.0 - np.cos(ph_s - w * ts))
        idler = np.exp(-2j * w * icw) + np.exp(-2j * w * iac) - 2.0 * np.cos(ph_i) * np.exp(-1j * w * (icw + iac))
        signal = np.exp(2j * w * scw) + np.exp(2j * w * sac) - 2.0 * np.cos(ph_s) * np.exp(1j * w * (scw + sac))
        cross = np.exp(-2j * w * d) * idler * signal
        total[sl] = (norm * (bg - cross)) @ weights
        # mass of the two terms before they cancel; the scale for both checks
        magnitude[sl] = (norm * (np.abs(bg) + np.abs(cross))) @ np.abs(weights)
    factor = 4.0 * math.pi / 16.0
    return factor * total.reshape(shape), factor * magnitude.reshape(shape)


def nc_quadrature(inp, quad: QuadratureSpec = DEFAULT_QUAD, check: bool = True):
    """Integrate the Gaussian-spectrum coincidence integrand numerically.

    ``inp`` is an :class:`~rotohom.models.AsymmetricModelInput` (any object
    with ``delta_t_hom``, ``t_icw``, ``t_iac``, ``t_scw``, ``t_sac`` and
    ``optics`` works). Returns the coincidence level in closed-form units.

    With ``check`` the integral is repeated with twice the nodes and a
    :class:`ConvergenceError` is raised if the two differ by more than
    ``1e-8`` of the integrand's absolute mass.
    """
    arrays = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in
                                   (inp.delta_t_hom, inp.t_icw, inp.t_iac, inp.t_scw, inp.t_sac)))
    tau, t_icw, t_iac, t_scw, t_sac = (np.array(a) for a in arrays)
    # a common shift of all four times is a global phase; drop it
    ref = (t_icw + t_iac + t_scw + t_sac) / 4.0
    times = (t_icw - ref, t_iac - ref, t_scw - ref, t_sac - ref)

    total, magnitude = _nc_integrand_sum(tau, *times, inp.optics, quad)
    value = _checked_real(total, magnitude, "nc_quadrature")
    if check:
        finer, _ = _nc_integrand_sum(tau, *times, inp.optics, quad.doubled())
        _converged(value, np.real(finer), magnitude, "nc_quadrature")
    return float(value) if value.ndim == 0 else value


# -- two-dimensional spectral integrals ------------------------------------
#
# The joint spectrum is integrated in sum/difference detunings
# s = (w1 - mu) + (w2 - mu), d = (w1 - mu) - (w2 - mu), dw1 dw2 = ds dd / 2.
# |psi_i|^2 is a product of Gaussians in s and d, which the quadrature rule
# absorbs as its weight; exchanging w1 and w2 is d -> -d.


def initial_normalization(optics: OpticalConfig) -> float:
    """Normalization constant ``N_i`` of the initial biphoton spectrum."""
    dw = optics.delta_omega
    sp = optics.sigma_p
    return math.sqrt(2.0 * math.pi * dw / math.sqrt(1.0 / dw**2 + 2.0 / sp**2))


def _axis_stds(optics: OpticalConfig):
    dw2 = optics.delta_omega**2
    sp2 = optics.sigma_p**2
    # |psi_i|^2 = exp(-(s^2 + d^2) / (4 dw^2) - s^2 / (2 sp^2)) / N_i^2
    std_s = 1.0 / math.sqrt(1.0 / (2.0 * dw2) + 1.0 / sp2)
    std_d = math.sqrt(2.0 * dw2)
    return std_s, std_d


def _grid(optics, quad):
    std_s, std_d = _axis_stds(optics)
    s, ws = gaussian_rule(quad, std_s)
    d, wd = gaussian_rule(quad, std_d)
    weight = 0.5 * np.outer(ws, wd) / initial_normalization(optics) ** 2
    return s[:, None], d[None, :], weight


def _require_sigma(optics):
    if not optics.sigma_p > 0:
        raise ValueError("the joint spectrum needs sigma_p > 0")


def _norm_sum(optics, quad, amplitude_scale):
    _, _, weight = _grid(optics, quad)
    return abs(amplitude_scale) ** 2 * weight.sum()


def spectrum_normalization(optics: OpticalConfig, quad: QuadratureSpec = DEFAULT_QUAD_2D,
                           amplitude_scale: float = 1.0, check: bool = True) -> float:
    """Integral of ``|amplitude_scale * psi_i|^2`` over both photon frequencies.

    Equals 1 for the properly normalized spectrum.
    """
    _require_sigma(optics)
    value = _norm_sum(optics, quad, amplitude_scale)
    if check:
        _converged(value, _norm_sum(optics, quad.doubled(), amplitude_scale), value, "spectrum_normalization")
    return float(value)


def _loop_amplitudes(s, d, delta_t, optics):
    """``sin(w1 dt / 2) sin(w2 dt / 2)`` on the (s, d) grid."""
    base = np.remainder(optics.mu * delta_t / 2.0, _TWO_PI)
    u = (s + d) / 2.0
    v = (s - d) / 2.0
    return np.sin(base + u * delta_t / 2.0) * np.sin(base + v * delta_t / 2.0)


def _state_probability_sum(delta_t, optics, quad):
    s, d, weight = _grid(optics, quad)
    amp = _loop_amplitudes(s, d, delta_t, optics)
    return float(np.sum(weight * amp**2))


def state_probability_quadrature(arm_delays, optics: OpticalConfig,
                                 quad: QuadratureSpec = DEFAULT_QUAD_2D, check: bool = True) -> float:
    """Probability that both photons exit their loops towards the HOM beamsplitter.

    The loop maps each photon onto the outgoing port with amplitude
    ``(exp(-i w t_cw) - exp(-i w t_ac)) / 2``, of modulus ``|sin(w delta_t / 2)|``.
    """
    _require_sigma(optics)
    dt = float(arm_delays.delta_t if isinstance(arm_delays, ArmDelays) else arm_delays)
    value = _state_probability_sum(dt, optics, quad)
    if check:
        _converged(value, _state_probability_sum(dt, optics, quad.doubled()), 1.0, "state_probability_quadrature")
    return value


def _exchange_overlap(delta_t_hom, delta_t, optics, quad):
    s, d, weight = _grid(optics, quad)
    if not np.allclose(d[0], -d[0, ::-1], rtol=0, atol=1e-9 * np.abs(d).max()):
        raise AssertionError("difference grid must be symmetric for the exchange")
    amp = _loop_amplitudes(s, d, delta_t, optics)
    u = (s + d) / 2.0
    # psi_f(w1, w2) = psi_i * amp * exp(-i w1 delta_t_hom) / N_f, with exp(-i mu delta_t_hom) dropped
    psi = np.sqrt(weight) * amp * np.exp(-1j * u * delta_t_hom)
    swapped = psi[:, ::-1]
    norm = np.sum(np.abs(psi) ** 2)
    overlap = np.sum(np.conj(psi) * swapped) / norm
    magnitude = np.sum(np.abs(psi) * np.abs(swapped)) / norm
    return overlap, magnitude


def pc_overlap_quadrature(delta_t_hom, arm_delays, optics: OpticalConfig,
                          quad: QuadratureSpec = DEFAULT_QUAD_2D, check: bool = True):
    """Coincidence probability ``1/2 - 1/2 * <psi_f(w1, w2) | psi_f(w2, w1)>``.

    The post-loop spectrum ``psi_f`` is normalized numerically on the grid.
    """
    _require_sigma(optics)
    dt = float(arm_delays.delta_t if isinstance(arm_delays, ArmDelays) else arm_delays)
    taus = np.atleast_1d(np.asarray(delta_t_hom, dtype=float))
    out = np.empty(taus.shape)
    for k, tau in enumerate(taus):
        overlap, magnitude = _exchange_overlap(tau, dt, optics, quad)
        re = _checked_real(overlap, magnitude, "pc_overlap_quadrature")
        if check:
            finer, _ = _exchange_overlap(tau, dt, optics, quad.doubled())
            _converged(re, np.real(finer), 1.0, "pc_overlap_quadrature")
        out[k] = 0.5 - 0.5 * re
    return float(out[0]) if np.ndim(delta_t_hom) == 0 else out
