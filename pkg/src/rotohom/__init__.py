"""Two-photon interference in rotating nested Sagnac loops.

Closed-form coincidence models, a quadrature oracle that checks them, a
noisy experiment simulator and the fitting pipeline that recovers the
dip-to-peak rotation frequency.
"""

__version__ = "0.1.0"

from .physics import (
    SPEED_OF_LIGHT,
    ArmDelays,
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
    rad_per_s_to_hz,
    sagnac_delay,
    stage_to_delay,
    tune_birefringence,
)
from .models import (
    AsymmetricModelInput,
    ModelOutput,
    SymmetricModelInput,
    background_cb,
    feature_visibility,
    finite_sigma_coincidence_probability,
    finite_sigma_counts,
    finite_sigma_scale,
    finite_sigma_state_probability,
    nc_asymmetric,
    nc_symmetric,
    prefactor,
    symmetric_counts,
)
from .oracle import (
    ConvergenceError,
    QuadratureSpec,
    nc_quadrature,
    pc_overlap_quadrature,
    spectrum_normalization,
    state_probability_quadrature,
)
from .simulate import (
    CoincidenceTrace,
    MotorCalibration,
    NoiseModel,
    ScanSpec,
    SequenceSpec,
    apply_motor_calibration,
    simulate_campaign,
    simulate_scan,
    simulate_sequence,
)
from .analysis import (
    FeatureAmplitude,
    HistogramStats,
    SequenceFit,
    aggregate_histogram,
    analyze_sequence,
    common_background,
    extract_feature_amplitude,
    fit_power_law,
    fit_sinusoid,
)
from .config import ConfigError, RunConfig, load_config
