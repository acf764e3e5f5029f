"""Weak-coherent-state bi-partite correlation bench simulator."""
from .channel import FiberConfig, compensate_birefringence, propagate
from .config import (
    BenchConfig,
    ConfigError,
    CsbcType,
    DetectorModel,
    LockInConfig,
    NoiseConfig,
    PowerSetting,
    dbm_to_photon_flux,
)
from .correlation import (
    CalibrationError,
    CsbcEstimate,
    calibrate,
    csbc_scan,
    default_scan_angles,
    mean_value,
    multiply_traces,
)
from .keyexchange import KeySession, encode_bit, lock_in_demodulate, run_key_session
from .optics import (
    PolarizedField,
    apply_half_wave,
    apply_quarter_wave,
    mix_on_beamsplitter,
    project_pbs,
)
from .presets import get_preset, list_presets
from .rng import SeedStreams
from .scenario import load_scenario, run_scenario
from .station import BeatTrace, PhaseState, balanced_beat, generate_trace, sample_phase_noise

__version__ = "0.1.0"
