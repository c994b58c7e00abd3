"""Physical parameters and the kinematic delay formulas of the rotating interferometer.

Angular velocities are rad/s throughout this module; positive values mean
clockwise rotation. Helpers convert from the revolutions-per-second (Hz)
figures used at the file and command-line boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact

#: Birefringent index mismatch of the flipped PMF patch cord.
DEFAULT_INDEX_MISMATCH = 5.641e-4
DEFAULT_SLOW_INDEX = 1.458 + DEFAULT_INDEX_MISMATCH
DEFAULT_FAST_INDEX = 1.458


def _as_float(x):
    return np.asarray(x, dtype=float) if np.ndim(x) else float(x)


def hz_to_rad_per_s(hz):
    return 2.0 * math.pi * _as_float(hz)


def rad_per_s_to_hz(omega):
    return _as_float(omega) / (2.0 * math.pi)


@dataclass(frozen=True)
class OpticalConfig:
    """Spectral parameters of the down-converted photon pair.

    Parameters
    ----------
    lambda_p : float
        Pump wavelength in metres.
    delta_omega : float
        Single-photon angular-frequency spread in rad/s. This is the width in
        the ``exp(-delta_omega**2 * dt**2)`` convention of the coincidence
        model, not a FWHM.
    sigma_p : float
        Biphoton (pump) angular-frequency spread in rad/s. Zero means perfect
        frequency anticorrelation.
    """

    lambda_p: float = 355e-9
    delta_omega: float = 1.19e13
    sigma_p: float = 2.0 * math.pi * 2e10

    def __post_init__(self):
        if not (self.lambda_p > 0 and math.isfinite(self.lambda_p)):
            raise ValueError(f"lambda_p must be positive, got {self.lambda_p!r}")
        if not (self.delta_omega > 0 and math.isfinite(self.delta_omega)):
            raise ValueError(f"delta_omega must be positive, got {self.delta_omega!r}")
        if not (self.sigma_p >= 0 and math.isfinite(self.sigma_p)):
            raise ValueError(f"sigma_p must be non-negative, got {self.sigma_p!r}")

    @property
    def omega_p(self) -> float:
        """Pump angular frequency, rad/s."""
        return 2.0 * math.pi * SPEED_OF_LIGHT / self.lambda_p

    @property
    def mu(self) -> float:
        """Mean single-photon angular frequency (degenerate SPDC), rad/s."""
        return self.omega_p / 2.0

    def with_sigma_p(self, sigma_p: float) -> "OpticalConfig":
        return replace(self, sigma_p=sigma_p)


@dataclass(frozen=True)
class SagnacArm:
    """Geometry of one nested fibre Sagnac loop.

    ``n_cw`` and ``n_ac`` are the effective indices seen over the
    birefringent segment by the two circulation directions.
    """

    fiber_length: float = 41.0
    loop_radius: float = 0.454
    birefringent_length: float = 1.0
    n_cw: float = DEFAULT_SLOW_INDEX
    n_ac: float = DEFAULT_FAST_INDEX

    def __post_init__(self):
        if not self.fiber_length > 0:
            raise ValueError(f"fiber_length must be positive, got {self.fiber_length!r}")
        if not self.loop_radius > 0:
            raise ValueError(f"loop_radius must be positive, got {self.loop_radius!r}")
        if not 0 <= self.birefringent_length <= self.fiber_length:
            raise ValueError("birefringent_length must lie in [0, fiber_length]")
        if self.n_cw < 1 or self.n_ac < 1:
            raise ValueError("refractive indices must be >= 1")

    @property
    def enclosed_area(self) -> float:
        """Total area enclosed by the coiled fibre, summed over turns (m^2).

        ``L_f / (2 pi r)`` turns of area ``pi r^2`` each.
        """
        return self.fiber_length * self.loop_radius / 2.0

    @property
    def index_mismatch(self) -> float:
        return self.n_cw - self.n_ac


@dataclass(frozen=True)
class RotationState:
    """Signed platform angular velocity (rad/s, positive = clockwise)."""

    omega: float = 0.0
    set_frequency: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.omega):
            raise ValueError("omega must be finite")

    @classmethod
    def from_hz(cls, hz: float, direction: str = "cw", set_frequency: Optional[float] = None) -> "RotationState":
        """Build from a rotation speed magnitude in Hz and a direction label."""
        if direction not in ("cw", "acw"):
            raise ValueError(f"direction must be 'cw' or 'acw', got {direction!r}")
        sign = 1.0 if direction == "cw" else -1.0
        return cls(omega=sign * abs(hz_to_rad_per_s(hz)), set_frequency=set_frequency)

    @property
    def hz(self) -> float:
        return rad_per_s_to_hz(self.omega)

    @property
    def direction(self) -> str:
        return "acw" if self.omega < 0 else "cw"


@dataclass(frozen=True)
class ArmDelays:
    """Clockwise and anticlockwise propagation times (s). Fields may be arrays."""

    t_cw: float
    t_ac: float

    @property
    def delta_t(self):
        return self.t_cw - self.t_ac


@dataclass(frozen=True)
class StageMapping:
    """Linear map between translation-stage position and HOM delay.

    ``meters_per_second_of_delay`` defaults to ``c`` (single-pass free-space
    delay); double-pass or fibre-coupled stages use a different factor.
    """

    meters_per_second_of_delay: float = SPEED_OF_LIGHT
    origin: float = 0.0

    def __post_init__(self):
        if not self.meters_per_second_of_delay > 0:
            raise ValueError("meters_per_second_of_delay must be positive")


def sagnac_delay(area, omega):
    """Rotation-induced time difference ``4 A Omega / c^2`` between counter-propagating paths."""
    if np.any(np.asarray(area) < 0):
        raise ValueError("area must be non-negative")
    return 4.0 * area * omega / SPEED_OF_LIGHT**2


def propagation_times(arm: SagnacArm, rot, extra_sagnac_omega=0.0) -> ArmDelays:
    """Clockwise and anticlockwise transit times through the loop.

    ``rot`` is a :class:`RotationState` or a (possibly array-valued) angular
    velocity in rad/s. ``extra_sagnac_omega`` adds an effective angular
    velocity that enters only through the Sagnac term; the simulator uses it
    for direction-dependent systematics.
    """
    omega = rot.omega if isinstance(rot, RotationState) else _as_float(rot)
    omega = omega + extra_sagnac_omega
    c = SPEED_OF_LIGHT
    sagnac = arm.fiber_length * arm.loop_radius * omega / c**2
    t_cw = arm.birefringent_length * arm.n_cw / c + sagnac
    t_ac = arm.birefringent_length * arm.n_ac / c - sagnac
    return ArmDelays(t_cw=t_cw, t_ac=t_ac)


def birefringent_delay(arm: SagnacArm) -> float:
    """Rotation-independent part of ``t_cw - t_ac``."""
    return arm.birefringent_length * (arm.n_cw - arm.n_ac) / SPEED_OF_LIGHT


def flip_half_period(arm: SagnacArm, optics: OpticalConfig) -> float:
    """Rotation-frequency change (Hz) that turns an oscillating dip into a peak."""
    return SPEED_OF_LIGHT * optics.lambda_p / (4.0 * math.pi * arm.fiber_length * arm.loop_radius)


def stage_to_delay(x, mapping: StageMapping):
    """HOM delay (s) for stage position ``x`` (m)."""
    return (_as_float(x) - mapping.origin) / mapping.meters_per_second_of_delay


def delay_to_stage(delay, mapping: StageMapping):
    """Inverse of :func:`stage_to_delay`."""
    return _as_float(delay) * mapping.meters_per_second_of_delay + mapping.origin


def oscillation_phase(arm: SagnacArm, optics: OpticalConfig, omega=0.0):
    """Phase ``omega_p * delta_t / 2`` that sets the sign of the oscillating features."""
    return optics.omega_p * propagation_times(arm, omega).delta_t / 2.0


def tune_birefringence(arm: SagnacArm, optics: OpticalConfig, phase: float) -> SagnacArm:
    """Return a copy of ``arm`` with ``n_ac`` nudged so that at rest
    ``omega_p * delta_t / 2`` is congruent to ``phase`` modulo ``2 pi``.

    The smallest index change is chosen, so the delay (and the feature
    positions) move by less than one optical period.
    """
    if arm.birefringent_length <= 0:
        raise ValueError("cannot tune an arm without a birefringent segment")
    current = oscillation_phase(arm, optics)
    shift = (phase - current + math.pi) % (2.0 * math.pi) - math.pi
    # d(phase)/d(n_ac) = -omega_p * L_b / (2 c)
    dn = -shift * 2.0 * SPEED_OF_LIGHT / (optics.omega_p * arm.birefringent_length)
    return replace(arm, n_ac=arm.n_ac + dn)
