"""Value types describing the bench: powers, noise, detectors, CSBC recipe."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import FiberConfig

PLANCK = 6.62607015e-34
LIGHT_SPEED = 299792458.0

DEFAULT_WAVELENGTH_NM = 1534.0
DEFAULT_RAMP_HZ = 168.0
# 600 samples per 168 Hz ramp, so whole-period averages close exactly.
DEFAULT_SAMPLE_RATE_HZ = 168.0 * 600


class ConfigError(ValueError):
    """Invalid bench or scenario configuration."""


class CsbcType(enum.Enum):
    """The four correlation functions and the beam-1 plates that prepare them.

    Plates are listed in the order the light meets them, between the beam
    splitter and Alice's analyzer. Beam 2 always carries a QWP at +45 deg.
    """

    MINUS_COS_DIFF = "minus_cos_diff"
    PLUS_COS_SUM = "plus_cos_sum"
    PLUS_COS_DIFF = "plus_cos_diff"
    MINUS_COS_SUM = "minus_cos_sum"

    @property
    def recipe(self) -> tuple[tuple[str, float], ...]:
        qwp = ("qwp", -np.pi / 4 if self.uses_sum else np.pi / 4)
        if self in (CsbcType.PLUS_COS_DIFF, CsbcType.MINUS_COS_SUM):
            return (("hwp", 0.0), qwp)
        return (qwp,)

    @property
    def uses_sum(self) -> bool:
        return self in (CsbcType.PLUS_COS_SUM, CsbcType.MINUS_COS_SUM)

    @property
    def sign(self) -> int:
        """Overall sign of the correlation; also the Bob/Alice quadrature sign at zero angles."""
        return -1 if self in (CsbcType.MINUS_COS_DIFF, CsbcType.MINUS_COS_SUM) else 1

    def closed_form(self, theta1, theta2):
        arg = theta1 + theta2 if self.uses_sum else theta1 - theta2
        return self.sign * np.cos(2 * np.asarray(arg))

    def bob_angle(self, theta1: float, x: float) -> float:
        """Bob's analyzer angle that puts the scan variable ``x`` at ``theta1 -/+ theta2``."""
        return x - theta1 if self.uses_sum else theta1 - x

    @classmethod
    def parse(cls, text: str) -> "CsbcType":
        key = str(text).strip().lower().replace("-", "_")
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        raise ConfigError(f"unknown csbc_type {text!r}; choose from {[m.value for m in cls]}")


@dataclass(frozen=True)
class PowerSetting:
    power_dbm: float
    wavelength_nm: float = DEFAULT_WAVELENGTH_NM

    def __post_init__(self):
        if not self.wavelength_nm > 0:
            raise ConfigError("wavelength_nm must be > 0")
        # -inf dBm is a blocked beam; +inf and NaN are meaningless.
        if math.isnan(self.power_dbm) or self.power_dbm == math.inf:
            raise ConfigError(f"power_dbm must be finite or -inf, got {self.power_dbm}")

    @property
    def watts(self) -> float:
        return dbm_to_watts(self.power_dbm)

    @property
    def photon_energy_j(self) -> float:
        return PLANCK * LIGHT_SPEED / (self.wavelength_nm * 1e-9)


def dbm_to_watts(power_dbm: float) -> float:
    return 10.0 ** (power_dbm / 10.0) * 1e-3


def dbm_to_photon_flux(p: PowerSetting) -> float:
    """Photons per second carried by ``p``."""
    if not math.isfinite(p.power_dbm):
        raise ValueError("power in dBm must be finite to have a photon flux")
    # Work in log space so very low powers do not underflow.
    log10_flux = p.power_dbm / 10.0 - 3.0 - math.log10(p.photon_energy_j)
    return 10.0 ** log10_flux


@dataclass(frozen=True)
class NoiseConfig:
    shot_noise_on: bool = True
    phase_noise_on: bool = True
    electronic_noise_rms: float = 0.8e-6
    detection_bandwidth_hz: float = 5.0e4
    # Corner of the optional one-pole filter on electronic noise; None = white.
    electronic_lowpass_hz: float | None = None

    def __post_init__(self):
        if not self.electronic_noise_rms >= 0:
            raise ConfigError("noise.electronic_noise_rms must be >= 0")
        if not self.detection_bandwidth_hz > 0:
            raise ConfigError("noise.detection_bandwidth_hz must be > 0")
        if self.electronic_lowpass_hz is not None and not self.electronic_lowpass_hz > 0:
            raise ConfigError("noise.electronic_lowpass_hz must be > 0")

    @classmethod
    def off(cls) -> "NoiseConfig":
        return cls(shot_noise_on=False, phase_noise_on=False, electronic_noise_rms=0.0)


@dataclass(frozen=True)
class DetectorModel:
    eta: float = 1.0
    # Overrides NoiseConfig.electronic_noise_rms for this detector when set.
    electronic_noise_rms: float | None = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigError("detector eta must be > 0")
        if self.electronic_noise_rms is not None and not self.electronic_noise_rms >= 0:
            raise ConfigError("detector electronic_noise_rms must be >= 0")


@dataclass(frozen=True)
class LockInConfig:
    ref_freq_hz: float = DEFAULT_RAMP_HZ
    ref_phase_rad: float = 0.0
    integration_periods: int = 1

    def __post_init__(self):
        if not self.ref_freq_hz > 0:
            raise ConfigError("lockin.ref_freq_hz must be > 0")
        if self.integration_periods < 1:
            raise ConfigError("lockin.integration_periods must be >= 1")


@dataclass(frozen=True)
class BenchConfig:
    """Everything needed to generate traces at both stations.

    ``signal`` and ``lo`` are the per-beam powers just before each PBS when
    ``power_reference == "detector"``. With ``"launch"`` they are the powers
    leaving the beam splitter, and Bob additionally sees any fiber loss.
    """

    signal: PowerSetting = field(default_factory=lambda: PowerSetting(-30.0))
    lo: PowerSetting = field(default_factory=lambda: PowerSetting(-30.0))
    theta1: float = 0.0
    theta2: float = 0.0
    csbc_type: CsbcType = CsbcType.MINUS_COS_DIFF
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    detector_a: DetectorModel = field(default_factory=DetectorModel)
    detector_b: DetectorModel = field(default_factory=DetectorModel)
    fiber: FiberConfig | None = None
    power_reference: str = "detector"
    lockin: LockInConfig = field(default_factory=LockInConfig)
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    ramp_freq_hz: float = DEFAULT_RAMP_HZ
    ramps_per_shot: int = 1
    n_shots: int = 10
    phi_alpha0: float = 0.0
    qwp_offset_a: float = 0.0
    qwp_offset_b: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.seed is None:
            raise ConfigError("seed is mandatory")
        if self.power_reference not in ("detector", "launch"):
            raise ConfigError("power_reference must be 'detector' or 'launch'")
        if not self.sample_rate_hz > 0:
            raise ConfigError("sample_rate_hz must be > 0")
        if not self.ramp_freq_hz > 0:
            raise ConfigError("ramp_freq_hz must be > 0")
        if self.ramp_freq_hz * 2 > self.sample_rate_hz:
            raise ConfigError("sample_rate_hz must be at least twice ramp_freq_hz")
        if self.ramps_per_shot < 1:
            raise ConfigError("ramps_per_shot must be >= 1")
        if self.n_shots < 1:
            raise ConfigError("n_shots must be >= 1")

    @property
    def samples_per_ramp(self) -> float:
        return self.sample_rate_hz / self.ramp_freq_hz

    @property
    def samples_per_shot(self) -> int:
        return int(round(self.ramps_per_shot * self.samples_per_ramp))

    def electronic_rms(self, port: str) -> float:
        det = self.detector_a if port == "A" else self.detector_b
        if det.electronic_noise_rms is not None:
            return det.electronic_noise_rms
        return self.noise.electronic_noise_rms

    def detector(self, port: str) -> DetectorModel:
        return self.detector_a if port == "A" else self.detector_b
