"""One party's balanced homodyne bench and the noise that reaches it.

Both stations see the same laser, so the LO ramp and the signal's quantum
phase walk are drawn once and shared. Shot and electronic noise are drawn
independently per detector.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import rng as streams_mod
from .channel import FiberConfig, compensate_birefringence, propagate
from .config import (
    BenchConfig,
    ConfigError,
    CsbcType,
    DetectorModel,
    PowerSetting,
    dbm_to_photon_flux,
)
from .optics import (
    PolarizedField,
    apply_half_wave,
    apply_quarter_wave,
    balanced_difference,
    mix_on_beamsplitter,
)

PORTS = ("A", "B")


@dataclass(frozen=True)
class PhaseState:
    """Signal phase, LO ramp phase and the LO key offset for a run of samples."""

    phi_alpha: np.ndarray | float
    phi_lo: np.ndarray | float
    lo_key_offset: float = 0.0

    def __post_init__(self):
        if self.lo_key_offset not in (0.0, math.pi):
            raise ValueError("lo_key_offset must be exactly 0 or pi")

    @property
    def relative_phase(self):
        """LO phase minus signal phase, key offset included."""
        return np.asarray(self.phi_lo) + self.lo_key_offset - np.asarray(self.phi_alpha)


@dataclass
class BeatTrace:
    samples: np.ndarray
    sample_rate_hz: float
    ramp_freq_hz: float
    detector_id: str
    t0: float = 0.0
    phi_lo: np.ndarray | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or len(self.samples) < 1:
            raise ValueError("a trace needs at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("trace samples must be finite")

    def __len__(self):
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.samples)) / self.sample_rate_hz

    @property
    def samples_per_ramp(self) -> float:
        return self.sample_rate_hz / self.ramp_freq_hz

    def to_csv(self, path, include_phase: bool = False) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            cols = ["t_s", "value"] + (["phi_lo_rad"] if include_phase else [])
            w.writerow(cols)
            for i, (t, v) in enumerate(zip(self.times, self.samples)):
                row = [repr(float(t)), repr(float(v))]
                if include_phase:
                    row.append(repr(float(self.phi_lo[i])))
                w.writerow(row)

    @classmethod
    def from_csv(cls, path, ramp_freq_hz: float, detector_id: str) -> "BeatTrace":
        data = np.genfromtxt(path, delimiter=",", names=True)
        t = np.atleast_1d(data["t_s"])
        rate = 1.0 / (t[1] - t[0]) if len(t) > 1 else 1.0
        phi = np.atleast_1d(data["phi_lo_rad"]) if "phi_lo_rad" in data.dtype.names else None
        return cls(np.atleast_1d(data["value"]), rate, ramp_freq_hz, detector_id, float(t[0]), phi)


def sample_phase_noise(mean_photons_per_window: float, prev_phi: float, rng: np.random.Generator) -> float:
    """One step of the signal's phase random walk.

    The step is Gaussian with std ``1/sqrt(n)``, the coherent-state number
    uncertainty ``sqrt(n)`` turned into a phase spread. It is a bounded
    step, never a fresh uniform phase.
    """
    if not mean_photons_per_window > 0:
        raise ValueError("phase noise needs a positive photon number per window (vacuum window)")
    return prev_phi + rng.normal(0.0, 1.0 / math.sqrt(mean_photons_per_window))


def phase_walk(n_samples: int, mean_photons_per_window: float, start: float, rng: np.random.Generator) -> np.ndarray:
    """Vectorized :func:`sample_phase_noise`: the first sample sits at ``start``."""
    if not mean_photons_per_window > 0:
        raise ValueError("phase noise needs a positive photon number per window (vacuum window)")
    steps = rng.normal(0.0, 1.0 / math.sqrt(mean_photons_per_window), size=n_samples)
    steps[0] = 0.0
    return start + np.cumsum(steps)


def beam1_plates(f: PolarizedField, csbc_type: CsbcType, qwp_offset: float = 0.0) -> PolarizedField:
    for element, angle in csbc_type.recipe:
        if element == "hwp":
            f = apply_half_wave(f, angle)
        else:
            f = apply_quarter_wave(f, angle, qwp_offset)
    return f


def field_at_pbs(
    port: str,
    phases: PhaseState,
    alpha_mag,
    beta_mag,
    waveplate_cfg: CsbcType,
    fiber: FiberConfig | None = None,
    power_reference: str = "detector",
    qwp_offset: float = 0.0,
) -> PolarizedField:
    """Field arriving at a station's PBS.

    ``alpha_mag``/``beta_mag`` are per-beam amplitudes (sqrt of power)
    just before the PBS. The beam splitter halves each input, so the launch
    is sqrt(2) times larger. With a fiber and ``power_reference="detector"``
    the launch is also raised to make up the fiber loss, and Alice uses a
    matched attenuator, so both stations see the stated power.
    """
    gain = 1.0
    if fiber is not None and power_reference == "detector":
        gain = 1.0 / fiber.amplitude_factor
    a = math.sqrt(2.0) * gain * np.asarray(alpha_mag) * np.exp(1j * np.asarray(phases.phi_alpha))
    b = math.sqrt(2.0) * gain * np.asarray(beta_mag) * np.exp(
        1j * (np.asarray(phases.phi_lo) + phases.lo_key_offset)
    )
    beam1, beam2 = mix_on_beamsplitter(a, b)
    if port == "A":
        if fiber is not None and power_reference == "detector":
            beam1 = beam1.scaled(fiber.amplitude_factor)
        return beam1_plates(beam1, waveplate_cfg, qwp_offset)
    if port == "B":
        if fiber is not None:
            beam2 = compensate_birefringence(propagate(beam2, fiber), fiber)
        return apply_quarter_wave(beam2, np.pi / 4, qwp_offset)
    raise ValueError(f"port must be 'A' or 'B', got {port!r}")


def balanced_beat(
    theta,
    phases: PhaseState,
    alpha_mag,
    beta_mag,
    det: DetectorModel,
    port: str,
    waveplate_cfg: CsbcType = CsbcType.MINUS_COS_DIFF,
    fiber: FiberConfig | None = None,
    power_reference: str = "detector",
    qwp_offset: float = 0.0,
):
    """Noiseless balanced output ``eta * (I_par - I_perp)`` of one detector."""
    if np.any(np.asarray(alpha_mag) < 0) or np.any(np.asarray(beta_mag) < 0):
        raise ValueError("amplitude magnitudes must be >= 0")
    f = field_at_pbs(port, phases, alpha_mag, beta_mag, waveplate_cfg, fiber, power_reference, qwp_offset)
    return det.eta * balanced_difference(f, theta)


def lo_ramp(n_samples: int, sample_rate_hz: float, ramp_freq_hz: float, t0: float = 0.0) -> np.ndarray:
    """Ideal PZT sawtooth, 0 -> 2 pi each period, flyback included."""
    t = t0 + np.arange(n_samples) / sample_rate_hz
    return 2.0 * np.pi * np.mod(ramp_freq_hz * t, 1.0)


def amplitudes(cfg: BenchConfig) -> tuple[float, float]:
    return math.sqrt(cfg.signal.watts), math.sqrt(cfg.lo.watts)


def photons_per_window(power: PowerSetting, sample_rate_hz: float) -> float:
    if power.power_dbm == -math.inf:
        return 0.0
    return dbm_to_photon_flux(power) / sample_rate_hz


def shot_noise_std(cfg: BenchConfig, port: str, total_power_w):
    """Std of the balanced output's shot noise: ``eta * sqrt(2 P hbar-omega B)``."""
    eta = cfg.detector(port).eta
    hw = cfg.signal.photon_energy_j
    return eta * np.sqrt(2.0 * np.asarray(total_power_w) * hw * cfg.noise.detection_bandwidth_hz)


def _electronic_noise(n_samples: int, rms: float, cfg: BenchConfig, rng: np.random.Generator) -> np.ndarray:
    white = rng.normal(0.0, rms, size=n_samples)
    corner = cfg.noise.electronic_lowpass_hz
    if corner is None or rms == 0:
        return white
    # One-pole low pass scaled to keep the stationary RMS at ``rms``.
    a = math.exp(-2.0 * math.pi * corner / cfg.sample_rate_hz)
    out = lfilter([math.sqrt(1.0 - a * a)], [1.0, -a], white, zi=[a * white[0]])[0]
    return out


def shared_phases(
    cfg: BenchConfig,
    n_samples: int,
    streams: streams_mod.SeedStreams,
    phi_start: float | None = None,
    key_offset: float = 0.0,
    t0: float = 0.0,
) -> PhaseState:
    """The phase streams common to both stations for one trace."""
    start = cfg.phi_alpha0 if phi_start is None else phi_start
    phi_lo = lo_ramp(n_samples, cfg.sample_rate_hz, cfg.ramp_freq_hz, t0)
    if cfg.noise.phase_noise_on:
        n_bar = photons_per_window(cfg.signal, cfg.sample_rate_hz)
        phi_alpha = phase_walk(n_samples, n_bar, start, streams.generator(streams_mod.PHASE))
    else:
        phi_alpha = np.full(n_samples, float(start))
    return PhaseState(phi_alpha, phi_lo, key_offset)


def noiseless_trace(cfg: BenchConfig, port: str, phases: PhaseState, theta: float | None = None) -> np.ndarray:
    if theta is None:
        theta = cfg.theta1 if port == "A" else cfg.theta2
    alpha, beta = amplitudes(cfg)
    offset = cfg.qwp_offset_a if port == "A" else cfg.qwp_offset_b
    return balanced_beat(
        theta, phases, alpha, beta, cfg.detector(port), port, cfg.csbc_type,
        cfg.fiber, cfg.power_reference, offset,
    )


def detector_noise(cfg: BenchConfig, port: str, phases: PhaseState, streams: streams_mod.SeedStreams) -> np.ndarray:
    """Shot plus electronic noise for one detector over the samples of ``phases``."""
    n = np.size(phases.phi_lo)
    noise = np.zeros(n)
    if cfg.noise.shot_noise_on:
        alpha, beta = amplitudes(cfg)
        offset = cfg.qwp_offset_a if port == "A" else cfg.qwp_offset_b
        f = field_at_pbs(port, phases, alpha, beta, cfg.csbc_type, cfg.fiber, cfg.power_reference, offset)
        sigma = shot_noise_std(cfg, port, f.intensity)
        name = streams_mod.SHOT_A if port == "A" else streams_mod.SHOT_B
        noise += sigma * streams.generator(name).standard_normal(n)
    rms = cfg.electronic_rms(port)
    if rms > 0:
        name = streams_mod.ELEC_A if port == "A" else streams_mod.ELEC_B
        noise += _electronic_noise(n, rms, cfg, streams.generator(name))
    return noise


def generate_pair(
    cfg: BenchConfig,
    n_samples: int,
    streams: streams_mod.SeedStreams,
    phi_start: float | None = None,
    key_offset: float = 0.0,
    t0: float = 0.0,
) -> tuple[BeatTrace, BeatTrace, PhaseState]:
    """Traces at both detectors from one shared set of phases."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    phases = shared_phases(cfg, n_samples, streams, phi_start, key_offset, t0)
    out = []
    for port in PORTS:
        values = noiseless_trace(cfg, port, phases) + detector_noise(cfg, port, phases, streams)
        out.append(BeatTrace(values, cfg.sample_rate_hz, cfg.ramp_freq_hz, port, t0, phases.phi_lo))
    return out[0], out[1], phases


def generate_trace(
    cfg: BenchConfig,
    port: str,
    n_samples: int,
    streams: streams_mod.SeedStreams,
    **kwargs,
) -> BeatTrace:
    """Trace at one detector; calling it for "A" and "B" with the same streams shares the phases."""
    if port not in PORTS:
        raise ValueError(f"port must be 'A' or 'B', got {port!r}")
    a, b, _ = generate_pair(cfg, n_samples, streams, **kwargs)
    return a if port == "A" else b


def quadrature_noise_std(cfg: BenchConfig, port: str, n_samples: int) -> float:
    """Std of a lock-in quadrature from white detector noise over ``n_samples``."""
    var = cfg.electronic_rms(port) ** 2
    if cfg.noise.shot_noise_on:
        p = cfg.signal.watts + cfg.lo.watts
        if cfg.fiber is not None and cfg.power_reference == "launch" and port == "B":
            p *= cfg.fiber.power_factor
        var += float(shot_noise_std(cfg, port, p)) ** 2
    return math.sqrt(2.0 * var / n_samples)


def beat_snr(trace: BeatTrace) -> np.ndarray:
    """Beat amplitude over residual noise std, one value per whole ramp.

    Each ramp is fitted with ``c0 cos(phi_lo) + c1 sin(phi_lo) + c2``.
    The amplitude is ``hypot(c0, c1)``.
    """
    spr = int(round(trace.samples_per_ramp))
    n_ramps = len(trace) // spr
    if n_ramps < 1:
        raise ValueError("trace shorter than one ramp")
    phi = trace.phi_lo if trace.phi_lo is not None else lo_ramp(
        len(trace), trace.sample_rate_hz, trace.ramp_freq_hz, trace.t0
    )
    out = np.empty(n_ramps)
    for i in range(n_ramps):
        sl = slice(i * spr, (i + 1) * spr)
        design = np.column_stack([np.cos(phi[sl]), np.sin(phi[sl]), np.ones(spr)])
        coef, *_ = np.linalg.lstsq(design, trace.samples[sl], rcond=None)
        resid = trace.samples[sl] - design @ coef
        out[i] = math.hypot(coef[0], coef[1]) / resid.std(ddof=3)
    return out


def validate_for_traces(cfg: BenchConfig) -> None:
    if cfg.noise.phase_noise_on and photons_per_window(cfg.signal, cfg.sample_rate_hz) <= 0:
        raise ConfigError("phase noise is on but the signal beam is blocked")

