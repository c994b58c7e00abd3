"""Closed-form coincidence models for the rotating HOM interferometer.

Three models are provided:

* the symmetric closed form (identical Sagnac loops in both arms),
* the general closed form with independent per-arm, per-direction times,
* the finite biphoton-spread model ``N_c = P_f * P_c``.

The first two return values in "closed-form units", i.e. with the overall
``sqrt(pi) / (8 delta_omega)`` prefactor retained. The finite-spread model
returns a probability per incoming pair; multiplying it by
:func:`finite_sigma_scale` puts it in closed-form units.

All functions broadcast over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .physics import ArmDelays, OpticalConfig

_TWO_PI = 2.0 * math.pi
# exp(-x) below 1e-300 is flushed to zero
_MAX_DECAY = -math.log(1e-300)


def _decay(arg):
    """``exp(-arg)`` with results below 1e-300 clamped to zero."""
    arg = np.asarray(arg, dtype=float)
    out = np.exp(-np.minimum(arg, _MAX_DECAY))
    return np.where(arg >= _MAX_DECAY, 0.0, out)


def _cos(phase):
    return np.cos(np.remainder(phase, _TWO_PI))


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def _delta_t(arm_delays):
    if isinstance(arm_delays, ArmDelays):
        return np.asarray(arm_delays.delta_t, dtype=float)
    return np.asarray(arm_delays, dtype=float)


def prefactor(optics: OpticalConfig) -> float:
    """Overall factor ``sqrt(pi) / (8 delta_omega)`` of the closed forms."""
    return math.sqrt(math.pi) / (8.0 * optics.delta_omega)


def finite_sigma_scale(optics: OpticalConfig) -> float:
    """Factor ``4 sqrt(pi) / delta_omega`` mapping ``P_f * P_c`` onto closed-form units."""
    return 4.0 * math.sqrt(math.pi) / optics.delta_omega


@dataclass(frozen=True)
class SymmetricModelInput:
    delta_t_hom: Any
    arm_delays: ArmDelays
    optics: OpticalConfig


@dataclass(frozen=True)
class AsymmetricModelInput:
    """Per-arm, per-direction propagation times (s) for the general model.

    ``i`` is the idler arm (no scanned delay), ``s`` the signal arm.
    """

    delta_t_hom: Any
    t_icw: Any
    t_iac: Any
    t_scw: Any
    t_sac: Any
    optics: OpticalConfig

    @classmethod
    def from_arms(cls, delta_t_hom, idler: ArmDelays, signal: ArmDelays, optics: OpticalConfig):
        return cls(delta_t_hom, idler.t_cw, idler.t_ac, signal.t_cw, signal.t_ac, optics)


@dataclass(frozen=True)
class ModelOutput:
    n_c: Any
    background: Any


def background_bracket(delta_t, optics: OpticalConfig):
    """Delay-independent background ``C_b`` (dimensionless bracket)."""
    dt = np.asarray(delta_t, dtype=float)
    dw2 = optics.delta_omega**2
    wp = optics.omega_p
    cb = (
        4.0
        - 8.0 * _decay(dw2 * dt**2 / 4.0) * _cos(wp * dt / 2.0)
        + 2.0 * _cos(wp * dt)
        + 2.0 * _decay(dw2 * dt**2)
    )
    return _scalar(cb)


def background_cb(arm_delays, optics: OpticalConfig):
    """``C_b`` for the given loop delays (``ArmDelays`` or a bare ``delta_t``)."""
    return background_bracket(_delta_t(arm_delays), optics)


def symmetric_bracket(delta_t_hom, delta_t, optics: OpticalConfig):
    """Bracketed symmetric coincidence level, without the overall prefactor."""
    tau = np.asarray(delta_t_hom, dtype=float)
    dt = np.asarray(delta_t, dtype=float)
    dw2 = optics.delta_omega**2
    wp = optics.omega_p
    half = _cos(wp * dt / 2.0)
    full = _cos(wp * dt)
    value = (
        background_bracket(dt, optics)
        - _decay(dw2 * (tau + dt) ** 2)
        - _decay(dw2 * (tau - dt) ** 2)
        + 4.0 * half * (_decay(dw2 * (tau + dt / 2.0) ** 2) + _decay(dw2 * (tau - dt / 2.0) ** 2))
        - 4.0 * _decay(dw2 * tau**2)
        - 2.0 * full * _decay(dw2 * tau**2)
    )
    return _scalar(value)


def nc_symmetric(inp: SymmetricModelInput) -> ModelOutput:
    """Coincidence level for identical loops in both arms."""
    dt = _delta_t(inp.arm_delays)
    k = prefactor(inp.optics)
    return ModelOutput(
        n_c=k * symmetric_bracket(inp.delta_t_hom, dt, inp.optics),
        background=k * background_bracket(dt, inp.optics),
    )


def symmetric_counts(delta_t_hom, delta_t, optics: OpticalConfig):
    """Array shortcut for ``nc_symmetric(...).n_c``."""
    return prefactor(optics) * symmetric_bracket(delta_t_hom, delta_t, optics)


def _asymmetric_background(t_icw, t_iac, t_scw, t_sac, optics):
    dw2 = optics.delta_omega**2
    h = optics.omega_p / 2.0
    di = t_iac - t_icw
    ds = t_sac - t_scw
    return (
        4.0
        - 4.0 * _decay(dw2 / 4.0 * di**2) * _cos(h * di)
        - 4.0 * _decay(dw2 / 4.0 * ds**2) * _cos(h * ds)
        + 2.0 * _decay(dw2 / 4.0 * (di - ds) ** 2) * _cos(h * (di + ds))
        + 2.0 * _decay(dw2 / 4.0 * (di + ds) ** 2) * _cos(h * (di - ds))
    )


def nc_asymmetric(inp: AsymmetricModelInput) -> ModelOutput:
    """Coincidence level allowing different loop delays in the two arms."""
    tau = np.asarray(inp.delta_t_hom, dtype=float)
    t_icw, t_iac, t_scw, t_sac = (np.asarray(t, dtype=float) for t in (inp.t_icw, inp.t_iac, inp.t_scw, inp.t_sac))
    # only differences of the four times enter; remove the common offset first
    ref = (t_icw + t_iac + t_scw + t_sac) / 4.0
    t_icw, t_iac, t_scw, t_sac = t_icw - ref, t_iac - ref, t_scw - ref, t_sac - ref

    optics = inp.optics
    dw2 = optics.delta_omega**2
    h = optics.omega_p / 2.0
    cos_s = _cos(h * (t_scw - t_sac))
    cos_i = _cos(h * (t_icw - t_iac))

    background = _asymmetric_background(t_icw, t_iac, t_scw, t_sac, optics)
    interference = (
        -_decay(dw2 * (tau + t_icw - t_scw) ** 2)
        - _decay(dw2 * (tau + t_icw - t_sac) ** 2)
        - _decay(dw2 * (tau + t_iac - t_scw) ** 2)
        - _decay(dw2 * (tau + t_iac - t_sac) ** 2)
        + 2.0 * cos_s * (
            _decay(dw2 / 4.0 * (2 * tau + 2 * t_icw - t_scw - t_sac) ** 2)
            + _decay(dw2 / 4.0 * (2 * tau + 2 * t_iac - t_scw - t_sac) ** 2)
        )
        + 2.0 * cos_i * (
            _decay(dw2 / 4.0 * (2 * tau - 2 * t_scw + t_icw + t_iac) ** 2)
            + _decay(dw2 / 4.0 * (2 * tau - 2 * t_sac + t_icw + t_iac) ** 2)
        )
        - 4.0 * cos_s * cos_i * _decay(dw2 / 4.0 * (2 * tau + t_icw + t_iac - t_scw - t_sac) ** 2)
    )
    k = prefactor(optics)
    return ModelOutput(n_c=_scalar(k * (background + interference)), background=_scalar(k * background))


# -- finite biphoton spread -------------------------------------------------


def _require_sigma(optics: OpticalConfig):
    if not optics.sigma_p > 0:
        raise ValueError("finite-spread model needs sigma_p > 0; use nc_symmetric for the sigma_p -> 0 limit")


def _spread_exponents(dt, optics):
    """Exponents ``A`` and ``B`` shared by ``P_f`` and the normalization ``S``."""
    dw2 = optics.delta_omega**2
    sp2 = optics.sigma_p**2
    a = dw2 * (3.0 * dw2 + sp2) * dt**2 / (2.0 * (2.0 * dw2 + sp2))
    b = 2.0 * dw2**2 * dt**2 / (2.0 * dw2 + sp2)
    return a, b


def finite_sigma_state_probability(arm_delays, optics: OpticalConfig):
    """Probability ``P_f`` that both photons leave their loops towards the HOM beamsplitter."""
    _require_sigma(optics)
    dt = _delta_t(arm_delays)
    dw2 = optics.delta_omega**2
    mu = optics.mu
    a, b = _spread_exponents(dt, optics)
    p_f = (
        2.0
        - 4.0 * _cos(mu * dt) * _decay(-(a - dw2 * dt**2))
        + _cos(2.0 * mu * dt) * _decay(-(b - dw2 * dt**2))
        + _decay(dw2 * dt**2)
    ) / 8.0
    return _scalar(p_f)


def finite_sigma_coincidence_probability(delta_t_hom, arm_delays, optics: OpticalConfig):
    """Coincidence probability ``P_c`` at the HOM beamsplitter for the post-loop state.

    ``I_1 .. I_4`` and ``S`` all carry a common factor ``exp(delta_omega^2 delta_t^2)``
    that overflows for realistic loop delays; it is divided out of every term
    before exponentiation.
    """
    _require_sigma(optics)
    tau = np.asarray(delta_t_hom, dtype=float)
    dt = _delta_t(arm_delays)
    dw2 = optics.delta_omega**2
    sp2 = optics.sigma_p**2
    mu = optics.mu
    a, b = _spread_exponents(dt, optics)
    common = dw2 * dt**2
    den = 2.0 * (2.0 * dw2 + sp2)

    i1 = (
        4.0 * _decay(dw2 * (tau + dt) * (tau - dt) + common)
        + _decay(tau * dw2 * (tau + 2.0 * dt) + common)
        + _decay(tau * dw2 * (tau - 2.0 * dt) + common)
    )
    e2 = (dw2 * sp2 * (-2.0 * tau**2 - 2.0 * tau * dt + dt**2) + dw2**2 * (-2.0 * tau - 3.0 * dt) * (2.0 * tau - dt)) / den
    e3 = (dw2 * sp2 * (-2.0 * tau**2 + dt * (dt + 2.0 * tau)) + dw2**2 * (-2.0 * tau - dt) * (2.0 * tau - 3.0 * dt)) / den
    i2 = -4.0 * _cos(mu * dt) * _decay(common - e2)
    i3 = -4.0 * _cos(mu * dt) * _decay(common - e3)
    i4 = 2.0 * _cos(2.0 * mu * dt) * _decay(common - b + tau**2 * dw2)
    s = 2.0 * _decay(common) - 8.0 * _cos(mu * dt) * _decay(common - a) + 2.0 * _cos(2.0 * mu * dt) * _decay(common - b) + 4.0

    if np.any(s <= 0):
        raise ValueError("degenerate normalization S = 0 (delta_t = 0: no light reaches the HOM beamsplitter)")
    return _scalar(0.5 * (1.0 - (i1 + i2 + i3 + i4) / s))


def finite_sigma_counts(delta_t_hom, arm_delays, optics: OpticalConfig):
    """Coincidences per incoming pair, ``P_f * P_c``.

    Zero when ``delta_t = 0``: no light leaves the loops towards the
    beamsplitter, so ``P_c`` is undefined but irrelevant.
    """
    if np.all(_delta_t(arm_delays) == 0.0):
        _require_sigma(optics)
        return _scalar(np.zeros_like(np.asarray(delta_t_hom, dtype=float)))
    return _scalar(
        finite_sigma_state_probability(arm_delays, optics)
        * np.asarray(finite_sigma_coincidence_probability(delta_t_hom, arm_delays, optics))
    )


def feature_visibility(arm_delays, optics: OpticalConfig, model: str = "finite"):
    """Relative height of the oscillating feature at ``delta_t_hom = delta_t / 2``.

    Positive for a peak, negative for a dip. ``model`` selects the finite-spread
    model (``"finite"``) or the symmetric closed form (``"symmetric"``).
    """
    dt = float(_delta_t(arm_delays))
    far = abs(dt) * 4.0 + 40.0 / optics.delta_omega
    if model == "finite":
        centre = finite_sigma_counts(dt / 2.0, dt, optics)
        base = finite_sigma_counts(far, dt, optics)
    elif model == "symmetric":
        centre = symmetric_bracket(dt / 2.0, dt, optics)
        base = background_bracket(dt, optics)
    else:
        raise ValueError(f"unknown model {model!r}")
    return (centre - base) / base
