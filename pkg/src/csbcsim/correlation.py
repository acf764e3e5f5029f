"""Multiply-and-average estimator of the coherent-state bi-partite correlation.

The stored traces of the two detectors are multiplied sample by sample
and averaged over whole LO-ramp periods. The term that carries the LO phase
averages out, leaving ``-2 eta_A eta_B |alpha|^2 |beta|^2 cos 2(theta1 - theta2)``
for the baseline recipe. A calibration run at the maximum-correlation
setting gives the constant that turns the raw mean into a value in [-1, 1].
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .config import BenchConfig, CsbcType
from .rng import SeedStreams
from .station import BeatTrace, generate_pair, validate_for_traces

CALIBRATION_STREAM = 1
SCAN_STREAM = 2

SCAN_COLUMNS = ("delta_theta_rad", "normalized", "stderr", "raw_mean", "calib_constant", "n_shots")


class CalibrationError(RuntimeError):
    """The calibration mean is not distinguishable from zero."""


@dataclass(frozen=True)
class MeanValue:
    mean: float
    stderr: float
    n_samples: int
    # Variance of the per-shot means; nan for a single trace.
    shot_var: float = math.nan
    n_shots: int = 1


@dataclass(frozen=True)
class Calibration:
    constant: float
    stderr: float
    n_shots: int
    shot_var: float = math.nan
    # Bench the calibration was measured at, if known.
    setting: BenchConfig | None = None


@dataclass(frozen=True)
class CsbcEstimate:
    delta_theta: float
    theta1: float
    theta2: float
    raw_mean: float
    raw_stderr: float
    calib_constant: float
    calib_stderr: float
    n_shots: int

    @property
    def normalized(self) -> float:
        return self.raw_mean / self.calib_constant

    @property
    def stderr(self) -> float:
        c = self.calib_constant
        return math.hypot(self.raw_stderr / c, self.raw_mean * self.calib_stderr / c**2)


def multiply_traces(a: BeatTrace, b: BeatTrace) -> BeatTrace:
    if len(a) != len(b):
        raise ValueError(f"trace lengths differ: {len(a)} vs {len(b)}")
    if a.sample_rate_hz != b.sample_rate_hz:
        raise ValueError("trace sample rates differ")
    return BeatTrace(
        a.samples * b.samples, a.sample_rate_hz, a.ramp_freq_hz,
        f"{a.detector_id}*{b.detector_id}", a.t0, a.phi_lo,
    )


def whole_ramp_samples(trace: BeatTrace) -> int:
    """Number of leading samples that span whole LO-ramp periods."""
    spr = trace.samples_per_ramp
    # Tolerate float noise in sample_rate / ramp_freq.
    n_periods = math.floor(len(trace) / spr + 1e-9)
    if n_periods < 1:
        raise ValueError(
            f"trace of {len(trace)} samples is shorter than one ramp period ({spr:.1f} samples)"
        )
    return min(len(trace), int(round(n_periods * spr)))


def mean_value(products: BeatTrace | Sequence[BeatTrace]) -> MeanValue:
    """Mean over all samples of all shots, each truncated to whole ramp periods.

    With two or more shots ``stderr`` is the standard error of the shot
    means. A single trace falls back to the sample std over the square
    root of the sample count, which overstates the error because the
    phase-dependent term varies within a ramp.
    """
    if isinstance(products, BeatTrace):
        products = [products]
    if not products:
        raise ValueError("no product traces given")
    chunks = [p.samples[: whole_ramp_samples(p)] for p in products]
    data = np.concatenate(chunks)
    if len(chunks) > 1:
        # Equal-length shots, so the mean of shot means is the sample mean.
        shot_var = float(np.var([c.mean() for c in chunks], ddof=1))
        stderr = math.sqrt(shot_var / len(chunks))
    else:
        shot_var = math.nan
        stderr = data.std(ddof=1) / math.sqrt(len(data)) if len(data) > 1 else 0.0
    return MeanValue(float(data.mean()), float(stderr), len(data), shot_var, len(chunks))


def measure_raw(cfg: BenchConfig, streams: SeedStreams, n_shots: int | None = None) -> MeanValue:
    """Run ``n_shots`` independent shots at ``cfg`` and average the products."""
    validate_for_traces(cfg)
    n_shots = cfg.n_shots if n_shots is None else n_shots
    products = []
    for shot in range(n_shots):
        a, b, _ = generate_pair(cfg, cfg.samples_per_shot, streams.child(shot))
        products.append(multiply_traces(a, b))
    return mean_value(products)


def calibration_setting(cfg: BenchConfig) -> BenchConfig:
    """Same bench with Bob's analyzer at the maximum-correlation setting.

    Alice's angle stays put. Bob matches it for the difference recipes
    and mirrors it for the sum recipes.
    """
    return replace(cfg, theta2=cfg.csbc_type.bob_angle(cfg.theta1, 0.0))


def calibrate(cfg: BenchConfig, streams: SeedStreams | None = None) -> Calibration:
    """Estimate ``2 eta_A eta_B |alpha|^2 |beta|^2`` from a run at maximum correlation."""
    streams = SeedStreams(cfg.seed) if streams is None else streams
    if cfg.signal.watts == 0 or cfg.lo.watts == 0:
        raise CalibrationError("calibration needs both the signal and the LO beam")
    setting = calibration_setting(cfg)
    m = measure_raw(setting, streams.child(CALIBRATION_STREAM))
    value = abs(m.mean)
    if not value > 0 or value < 2.0 * m.stderr:
        raise CalibrationError(
            f"calibration mean {m.mean:.3e} is not resolved (stderr {m.stderr:.3e})"
        )
    return Calibration(value, m.stderr, cfg.n_shots, m.shot_var, setting)


def _measure_point(cfg: BenchConfig, x: float, streams: SeedStreams) -> tuple[float, MeanValue]:
    theta2 = cfg.csbc_type.bob_angle(cfg.theta1, x)
    return theta2, measure_raw(replace(cfg, theta2=theta2), streams)


def estimate_point(
    cfg: BenchConfig, x: float, calibration: Calibration, streams: SeedStreams, csbc_type: CsbcType | None = None
) -> CsbcEstimate:
    """One scan point with its own shot-mean standard error."""
    if csbc_type is not None:
        cfg = replace(cfg, csbc_type=csbc_type)
    theta2, m = _measure_point(cfg, x, streams)
    return CsbcEstimate(
        float(x), cfg.theta1, theta2, m.mean, m.stderr,
        calibration.constant, calibration.stderr, cfg.n_shots,
    )


def _same_bench(a: BenchConfig | None, b: BenchConfig) -> bool:
    """True if the two benches differ at most in Bob's analyzer angle."""
    return a is not None and replace(a, theta2=0.0) == replace(b, theta2=0.0)


def pooled_shot_variance(values: Sequence[float]) -> float:
    """Average of per-point shot-mean variances, all with the same shot count."""
    finite = [v for v in values if math.isfinite(v)]
    return float(np.mean(finite)) if finite else math.nan


def csbc_scan(
    cfg: BenchConfig,
    csbc_type: CsbcType | None,
    delta_thetas: Sequence[float],
    streams: SeedStreams | None = None,
    calibration: Calibration | None = None,
) -> list[CsbcEstimate]:
    """Normalized CSBC at each scan value.

    The scan value is ``theta1 - theta2`` for the difference recipes and
    ``theta1 + theta2`` for the sum recipes; Alice's angle is held at
    ``cfg.theta1`` and Bob's analyzer is turned.

    Turning Bob's analyzer leaves the shot-to-shot scatter of the product
    mean unchanged, so the shot-mean variance is pooled over all points
    (and the calibration, if it was taken on this bench). With 10 shots a
    per-point variance has only 9 degrees of freedom.
    """
    if csbc_type is not None:
        cfg = replace(cfg, csbc_type=csbc_type)
    streams = SeedStreams(cfg.seed) if streams is None else streams
    if calibration is None:
        calibration = calibrate(cfg, streams)
    points = [_measure_point(cfg, x, streams.child(SCAN_STREAM, i)) for i, x in enumerate(delta_thetas)]
    shot_vars = [m.shot_var for _, m in points]
    pool_cal = _same_bench(calibration.setting, cfg) and calibration.n_shots == cfg.n_shots
    if pool_cal:
        shot_vars.append(calibration.shot_var)
    pooled = pooled_shot_variance(shot_vars)
    estimates = []
    for x, (theta2, m) in zip(delta_thetas, points):
        raw_se, cal_se = m.stderr, calibration.stderr
        if math.isfinite(pooled):
            raw_se = math.sqrt(pooled / cfg.n_shots)
            if pool_cal:
                cal_se = raw_se
        estimates.append(CsbcEstimate(
            float(x), cfg.theta1, theta2, m.mean, raw_se,
            calibration.constant, cal_se, cfg.n_shots,
        ))
    return estimates


def default_scan_angles(n_points: int = 19) -> np.ndarray:
    return np.linspace(0.0, np.pi, n_points)


def closed_form_residuals(estimates: Sequence[CsbcEstimate], csbc_type: CsbcType) -> np.ndarray:
    expected = np.array([csbc_type.closed_form(e.theta1, e.theta2) for e in estimates])
    return np.array([e.normalized for e in estimates]) - expected


def write_scan_csv(estimates: Sequence[CsbcEstimate], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCAN_COLUMNS)
        for e in estimates:
            w.writerow([repr(e.delta_theta), repr(e.normalized), repr(e.stderr),
                        repr(e.raw_mean), repr(e.calib_constant), e.n_shots])
