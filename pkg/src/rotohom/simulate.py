"""Synthetic delay scans and rotation sequences with counting noise.

Each rotation step draws from its own generator seeded by
``SeedSequence(rng_seed, spawn_key=(step_index,))``, so any step can be
regenerated independently and a one-step sequence reproduces
:func:`simulate_scan` exactly. Thermal drift is a Gaussian random walk on
the birefringent part of the loop delay, advanced once per scan point and
carried from one step to the next.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .models import prefactor, symmetric_counts
from .physics import (
    SPEED_OF_LIGHT,
    OpticalConfig,
    RotationState,
    SagnacArm,
    StageMapping,
    birefringent_delay,
    delay_to_stage,
    hz_to_rad_per_s,
    propagation_times,
    stage_to_delay,
)

MAX_SET_HZ = 0.735


@dataclass(frozen=True)
class NoiseModel:
    """Counting and drift parameters of a synthetic run.

    ``rate_scale`` is in counts/s per unit of the bracketed coincidence
    level (the closed-form value divided by ``sqrt(pi) / (8 delta_omega)``),
    so the interference background ``C_b`` in [2, 6] becomes
    ``rate_scale * C_b`` counts/s.

    ``direction_asymmetry`` adds a rotation-proportional delay that has the
    same sign for both rotation senses, so it adds to the Sagnac term in one
    direction and subtracts in the other. It is off by default.
    """

    rate_scale: float = 100.0 / 6.0
    accidental_rate: float = 100.0
    acquisition_time: float = 1.5
    drift_sigma: float = 1e-18
    rng_seed: int = 0
    singles_rate: float = 50_000.0
    direction_asymmetry: float = 0.0

    def __post_init__(self):
        for name in ("rate_scale", "accidental_rate", "drift_sigma", "singles_rate"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.acquisition_time > 0:
            raise ValueError("acquisition_time must be > 0")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class MotorCalibration:
    """Power law ``actual_hz = a * set_hz ** b`` for the turntable motor."""

    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        for name in ("a", "b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def apply_motor_calibration(set_hz, cal: MotorCalibration):
    set_hz = np.asarray(set_hz, dtype=float)
    if np.any(set_hz < 0):
        raise ValueError("set frequency must be >= 0")
    out = cal.a * set_hz**cal.b
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ScanSpec:
    """Ordered stage positions (m) for one delay scan."""

    stage_positions: tuple
    mapping: StageMapping = field(default_factory=StageMapping)

    def __post_init__(self):
        x = np.asarray(self.stage_positions, dtype=float)
        object.__setattr__(self, "stage_positions", tuple(float(v) for v in x))
        if x.ndim != 1:
            raise ValueError("stage_positions must be one-dimensional")
        if x.size > 1:
            steps = np.diff(x)
            if not (np.all(steps > 0) or np.all(steps < 0)):
                raise ValueError("stage_positions must be strictly monotone")

    @classmethod
    def around_feature(cls, arm: SagnacArm, mapping: Optional[StageMapping] = None, step: float = 10e-6,
                       half_width: float = 130e-6, feature: int = -1) -> "ScanSpec":
        """Scan centred on an oscillating feature at ``delta_t_hom = feature * delta_t / 2``.

        ``feature=-1`` is the second dip from the left of the five.
        """
        mapping = mapping or StageMapping()
        centre = delay_to_stage(feature * birefringent_delay(arm) / 2.0, mapping)
        n = int(round(half_width / step))
        return cls(tuple(centre + step * np.arange(-n, n + 1)), mapping)

    @property
    def delays(self):
        return stage_to_delay(np.asarray(self.stage_positions), self.mapping)


@dataclass(frozen=True)
class SequenceSpec:
    rotation_steps: tuple = tuple(np.round(np.linspace(0.0, MAX_SET_HZ, 8), 12))
    direction: str = "cw"
    calibration: MotorCalibration = field(default_factory=MotorCalibration)

    def __post_init__(self):
        steps = tuple(float(v) for v in self.rotation_steps)
        object.__setattr__(self, "rotation_steps", steps)
        if not steps:
            raise ValueError("rotation_steps must not be empty")
        if any(not (0.0 <= v <= MAX_SET_HZ + 1e-12) for v in steps):
            raise ValueError(f"rotation_steps must lie in [0, {MAX_SET_HZ}] Hz")
        if self.direction not in ("cw", "acw"):
            raise ValueError(f"direction must be 'cw' or 'acw', got {self.direction!r}")


@dataclass
class CoincidenceTrace:
    """One delay scan at fixed rotation.

    Point arrays share one length. ``rotation_hz`` is the calibrated, signed
    rotation frequency (negative = anticlockwise); ``time_s`` is simulated
    elapsed time since the start of the sequence, not wall-clock time.
    """

    stage_position: np.ndarray
    delay: np.ndarray
    coincidences: np.ndarray
    singles_a: np.ndarray
    singles_b: np.ndarray
    time_s: np.ndarray
    rotation_hz: float
    direction: str
    set_hz: float = 0.0
    seed: int = 0
    sequence_id: str = ""
    step_index: int = 0
    acquisition_time: float = 1.5
    final_drift: float = 0.0

    def __post_init__(self):
        n = len(self.stage_position)
        for name in ("delay", "coincidences", "singles_a", "singles_b", "time_s"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} points, expected {n}")
        if np.any(np.asarray(self.coincidences) < 0):
            raise ValueError("counts must be non-negative")

    def __len__(self):
        return len(self.stage_position)


def _step_rng(seed: int, step_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(step_index),)))


def _effective_omega(rotation: RotationState, noise: NoiseModel) -> float:
    return rotation.omega + noise.direction_asymmetry * abs(rotation.omega)


def _scan_points(optics, arm, rotation, scan, noise, rng, drift0, t0, noiseless=False):
    delays = scan.delays
    n = delays.size
    if n == 0:
        raise ValueError("scan has no stage positions")
    loop_dt = propagation_times(arm, _effective_omega(rotation, noise)).delta_t
    if noise.drift_sigma > 0 and not noiseless:
        drift = drift0 + np.cumsum(rng.normal(0.0, noise.drift_sigma, size=n))
    else:
        drift = np.full(n, float(drift0))
    level = symmetric_counts(delays, loop_dt + drift, optics) / prefactor(optics)
    mean = (noise.rate_scale * level + noise.accidental_rate) * noise.acquisition_time
    singles_mean = noise.singles_rate * noise.acquisition_time
    if noiseless:
        counts = np.rint(mean).astype(np.int64)
        singles_a = singles_b = np.full(n, int(round(singles_mean)), dtype=np.int64)
    else:
        counts = rng.poisson(mean)
        singles_a = rng.poisson(singles_mean, size=n)
        singles_b = rng.poisson(singles_mean, size=n)
    times = t0 + noise.acquisition_time * np.arange(n)
    return delays, counts, singles_a, singles_b, times, float(drift[-1])


def simulate_scan(optics: OpticalConfig, arm: SagnacArm, rotation: RotationState, scan: ScanSpec,
                  noise: NoiseModel, *, step_index: int = 0, initial_drift: float = 0.0,
                  start_time: float = 0.0, sequence_id: str = "", noiseless: bool = False,
                  direction: Optional[str] = None) -> CoincidenceTrace:
    """Simulate coincidence counts along one delay scan at fixed rotation.

    With ``noiseless`` the counts are the rounded expected values and no drift
    is applied; use a large ``rate_scale`` to make rounding negligible.
    ``direction`` labels the trace when the rotation itself is zero.
    """
    rng = _step_rng(noise.rng_seed, step_index)
    delays, counts, sa, sb, times, drift = _scan_points(
        optics, arm, rotation, scan, noise, rng, initial_drift, start_time, noiseless)
    set_hz = rotation.set_frequency if rotation.set_frequency is not None else abs(rotation.hz)
    return CoincidenceTrace(
        stage_position=np.asarray(scan.stage_positions, dtype=float),
        delay=np.asarray(delays, dtype=float),
        coincidences=counts,
        singles_a=sa,
        singles_b=sb,
        time_s=times,
        rotation_hz=rotation.hz,
        direction=direction or rotation.direction,
        set_hz=float(set_hz),
        seed=int(noise.rng_seed),
        sequence_id=sequence_id,
        step_index=step_index,
        acquisition_time=noise.acquisition_time,
        final_drift=drift,
    )


def simulate_sequence(seq: SequenceSpec, optics: OpticalConfig, arm: SagnacArm, scan: ScanSpec,
                      noise: NoiseModel, *, sequence_id: str = "", noiseless: bool = False) -> List[CoincidenceTrace]:
    """One trace per rotation step, with drift carried across steps."""
    traces = []
    drift = 0.0
    clock = 0.0
    for k, set_hz in enumerate(seq.rotation_steps):
        actual = apply_motor_calibration(set_hz, seq.calibration)
        rotation = RotationState.from_hz(actual, seq.direction, set_frequency=set_hz)
        trace = simulate_scan(optics, arm, rotation, scan, noise, step_index=k, initial_drift=drift,
                              start_time=clock, sequence_id=sequence_id, noiseless=noiseless,
                              direction=seq.direction)
        drift = trace.final_drift
        clock = float(trace.time_s[-1]) + noise.acquisition_time
        traces.append(trace)
    return traces


def simulate_campaign(n_sequences: int, seq: SequenceSpec, optics: OpticalConfig, arm: SagnacArm,
                      scan: ScanSpec, noise: NoiseModel, *, alternate: bool = True) -> List[List[CoincidenceTrace]]:
    """Repeat a sequence ``n_sequences`` times, alternating direction if asked.

    Sequence ``j`` uses seed ``noise.rng_seed + j``.
    """
    out = []
    other = "acw" if seq.direction == "cw" else "cw"
    for j in range(n_sequences):
        direction = other if (alternate and j % 2) else seq.direction
        run_noise = replace(noise, rng_seed=(int(noise.rng_seed) + j) % 2**64)
        out.append(simulate_sequence(replace(seq, direction=direction), optics, arm, scan, run_noise,
                                     sequence_id=f"seq{j:04d}_{direction}"))
    return out


def sagnac_phase_per_hz(arm: SagnacArm, optics: OpticalConfig) -> float:
    """Change of ``omega_p * delta_t / 2`` per Hz of rotation."""
    return optics.omega_p * arm.fiber_length * arm.loop_radius * hz_to_rad_per_s(1.0) / SPEED_OF_LIGHT**2


__all__ = [
    "NoiseModel", "MotorCalibration", "ScanSpec", "SequenceSpec", "CoincidenceTrace",
    "apply_motor_calibration", "simulate_scan", "simulate_sequence", "simulate_campaign",
    "sagnac_phase_per_hz", "MAX_SET_HZ",
]
