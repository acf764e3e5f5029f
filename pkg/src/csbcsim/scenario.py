"""Scenario files: parsing, validation, orchestration and CSV output.

A scenario is a YAML mapping; see ``docs/config.md`` for the schema. Every
run writes ``resolved_config.yaml`` next to its CSVs with all defaults filled in.
"""
from __future__ import annotations

import csv
import dataclasses
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy.signal import welch

from .channel import FiberConfig
from .config import (
    BenchConfig,
    ConfigError,
    CsbcType,
    DetectorModel,
    LockInConfig,
    NoiseConfig,
    PowerSetting,
)
from .correlation import (
    calibrate,
    csbc_scan,
    multiply_traces,
    write_scan_csv,
)
from .keyexchange import noise_deadband, random_key, run_key_session
from .rng import SeedStreams
from .station import beat_snr, detector_noise, generate_pair, shared_phases, validate_for_traces

KINDS = ("trace", "csbc-scan", "key-session", "fiber-key-session")


@dataclass(frozen=True)
class ScanSettings:
    n_points: int = 19
    start_rad: float = 0.0
    stop_rad: float = math.pi

    def __post_init__(self):
        if self.n_points < 1:
            raise ConfigError("n_points must be >= 1")

    @property
    def angles(self) -> np.ndarray:
        return np.linspace(self.start_rad, self.stop_rad, self.n_points)


@dataclass(frozen=True)
class TraceSettings:
    n_ramps: int = 4
    include_phase: bool = False

    def __post_init__(self):
        if self.n_ramps < 1:
            raise ConfigError("n_ramps must be >= 1")


@dataclass(frozen=True)
class KeySettings:
    n_bits: int = 64
    bits: tuple[int, ...] | None = None
    deadband: float | None = None
    deadband_sigmas: float = 0.0
    establish_scan: bool = True
    # Powers used to establish the CSBC before keying; None keeps the bench power.
    establish_signal_dbm: float | None = None
    establish_lo_dbm: float | None = None

    def __post_init__(self):
        if self.n_bits < 0:
            raise ConfigError("n_bits must be >= 0")
        if self.deadband is not None and self.deadband < 0:
            raise ConfigError("deadband must be >= 0")
        if self.deadband_sigmas < 0:
            raise ConfigError("deadband_sigmas must be >= 0")
        if self.bits is not None and any(b not in (0, 1) for b in self.bits):
            raise ConfigError("bits must be 0 or 1")


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    bench: BenchConfig
    scan: ScanSettings = field(default_factory=ScanSettings)
    trace: TraceSettings = field(default_factory=TraceSettings)
    key: KeySettings = field(default_factory=KeySettings)
    description: str = ""


_BENCH_SKIP = {"signal", "lo", "noise", "detector_a", "detector_b", "fiber", "lockin", "seed"}


def _field_names(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _build(cls, where: str, values, extra_allowed=()):
    if values is None:
        values = {}
    if not isinstance(values, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(values).__name__}")
    allowed = _field_names(cls) | set(extra_allowed)
    unknown = sorted(set(values) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(unknown)}")
    kwargs = {k: v for k, v in values.items() if k in _field_names(cls)}
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _check_types(where: str, values: dict, cls) -> None:
    """Reject values whose YAML type cannot stand for the dataclass field."""
    hints = {f.name: f.type for f in dataclasses.fields(cls)}
    for k, v in (values or {}).items():
        hint = str(hints.get(k, ""))
        if hint.startswith("bool") and not isinstance(v, bool):
            raise ConfigError(f"{where}.{k}: expected true/false, got {v!r}")
        if hint.startswith(("float", "int")) and (isinstance(v, bool) or not isinstance(v, (int, float))):
            if v is None and "None" in hint:
                continue
            raise ConfigError(f"{where}.{k}: expected a number, got {v!r}")
        if hint.startswith("int") and isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"{where}.{k}: expected an integer, got {v!r}")


def parse_scenario(doc: dict) -> Scenario:
    """Validate a scenario mapping; errors name the offending field."""
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a mapping")
    allowed = {"name", "description", "kind", "seed", "bench", "noise", "detectors", "fiber", "lockin",
               "scan", "trace", "key"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"config: unknown section(s) {', '.join(unknown)}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind: must be one of {', '.join(KINDS)}, got {kind!r}")
    seed = doc.get("seed")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed: a non-negative integer seed is mandatory, got {seed!r}")

    bench_doc = dict(doc.get("bench") or {})
    if not isinstance(doc.get("bench", {}) or {}, dict):
        raise ConfigError("bench: expected a mapping")
    _check_types("noise", doc.get("noise"), NoiseConfig)
    noise = _build(NoiseConfig, "noise", doc.get("noise"))
    dets = doc.get("detectors") or {}
    if not isinstance(dets, dict) or set(dets) - {"a", "b"}:
        raise ConfigError("detectors: expected a mapping with keys 'a' and/or 'b'")
    for k in ("a", "b"):
        _check_types(f"detectors.{k}", dets.get(k), DetectorModel)
    det_a = _build(DetectorModel, "detectors.a", dets.get("a"))
    det_b = _build(DetectorModel, "detectors.b", dets.get("b"))
    _check_types("lockin", doc.get("lockin"), LockInConfig)
    lockin = _build(LockInConfig, "lockin", doc.get("lockin"))
    fiber = None
    if doc.get("fiber") is not None:
        _check_types("fiber", doc.get("fiber"), FiberConfig)
        fiber = _build(FiberConfig, "fiber", doc["fiber"])
    if kind == "fiber-key-session" and fiber is None:
        raise ConfigError("fiber: required for kind fiber-key-session")

    wavelength = bench_doc.pop("wavelength_nm", 1534.0)
    powers = {}
    for key in ("signal_power_dbm", "lo_power_dbm"):
        value = bench_doc.pop(key, -30.0)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"bench.{key}: expected a number, got {value!r}")
        try:
            powers[key] = PowerSetting(float(value), float(wavelength))
        except ConfigError as exc:
            raise ConfigError(f"bench.{key}: {exc}") from None
    if "csbc_type" in bench_doc:
        try:
            bench_doc["csbc_type"] = CsbcType.parse(bench_doc["csbc_type"])
        except ConfigError as exc:
            raise ConfigError(f"bench.csbc_type: {exc}") from None
    bad = sorted(set(bench_doc) & _BENCH_SKIP)
    if bad:
        raise ConfigError(f"bench: field(s) {', '.join(bad)} belong in their own section")
    _check_types("bench", {k: v for k, v in bench_doc.items() if k != "csbc_type"}, BenchConfig)
    bench_doc.update(signal=powers["signal_power_dbm"], lo=powers["lo_power_dbm"], noise=noise,
                     detector_a=det_a, detector_b=det_b, fiber=fiber, lockin=lockin, seed=seed)
    bench = _build(BenchConfig, "bench", bench_doc)

    _check_types("scan", doc.get("scan"), ScanSettings)
    scan = _build(ScanSettings, "scan", doc.get("scan"))
    _check_types("trace", doc.get("trace"), TraceSettings)
    trace = _build(TraceSettings, "trace", doc.get("trace"))
    key_doc = dict(doc.get("key") or {})
    if key_doc.get("bits") is not None:
        key_doc["bits"] = tuple(key_doc["bits"])
    _check_types("key", {k: v for k, v in key_doc.items() if k != "bits"}, KeySettings)
    key = _build(KeySettings, "key", key_doc)
    return Scenario(str(doc.get("name", kind)), kind, bench, scan, trace, key, str(doc.get("description", "")))


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    return parse_scenario(doc)


def _plain(value):
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, float) and math.isinf(value):
        return value
    return value


def resolved_config(s: Scenario) -> dict:
    b = s.bench
    bench = {k: getattr(b, k) for k in _field_names(BenchConfig) - _BENCH_SKIP}
    bench.update(signal_power_dbm=b.signal.power_dbm, lo_power_dbm=b.lo.power_dbm,
                 wavelength_nm=b.signal.wavelength_nm)
    doc = {
        "name": s.name,
        "description": s.description,
        "kind": s.kind,
        "seed": b.seed,
        "bench": bench,
        "noise": dataclasses.asdict(b.noise),
        "detectors": {"a": dataclasses.asdict(b.detector_a), "b": dataclasses.asdict(b.detector_b)},
        "fiber": None if b.fiber is None else dataclasses.asdict(b.fiber),
        "lockin": dataclasses.asdict(b.lockin),
        "scan": dataclasses.asdict(s.scan),
        "trace": dataclasses.asdict(s.trace),
        "key": dataclasses.asdict(s.key),
    }
    return _plain(doc)


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def noise_spectra(cfg: BenchConfig, n_samples: int, streams: SeedStreams) -> tuple[np.ndarray, dict]:
    """Welch PSDs of noise-only records: electronic, LO-only shot, signal+LO shot."""
    blocked = PowerSetting(-math.inf, cfg.signal.wavelength_nm)
    quiet = dataclasses.replace(cfg.noise, phase_noise_on=False)
    cases = {
        "electronic": dataclasses.replace(cfg, noise=dataclasses.replace(quiet, shot_noise_on=False)),
        "lo_shot": dataclasses.replace(cfg, signal=blocked, noise=dataclasses.replace(quiet, electronic_noise_rms=0.0),
                                       detector_a=dataclasses.replace(cfg.detector_a, electronic_noise_rms=None),
                                       detector_b=dataclasses.replace(cfg.detector_b, electronic_noise_rms=None)),
        "shot": dataclasses.replace(cfg, noise=dataclasses.replace(quiet, electronic_noise_rms=0.0),
                                    detector_a=dataclasses.replace(cfg.detector_a, electronic_noise_rms=None),
                                    detector_b=dataclasses.replace(cfg.detector_b, electronic_noise_rms=None)),
    }
    nperseg = min(n_samples, int(round(cfg.samples_per_ramp)))
    out = {}
    freqs = None
    for label, c in cases.items():
        phases = shared_phases(c, n_samples, streams)
        for port in ("A", "B"):
            noise = detector_noise(c, port, phases, streams.child(port == "B"))
            freqs, psd = welch(noise, fs=c.sample_rate_hz, nperseg=nperseg)
            out[f"{label}_{port}"] = psd
    return freqs, out


def _run_trace(s: Scenario, out: Path, streams: SeedStreams) -> None:
    cfg = s.bench
    n = s.trace.n_ramps * int(round(cfg.samples_per_ramp))
    a, b, phases = generate_pair(cfg, n, streams.child(0))
    prod = multiply_traces(a, b)
    a.to_csv(out / "trace_A.csv", include_phase=s.trace.include_phase)
    b.to_csv(out / "trace_B.csv", include_phase=s.trace.include_phase)
    _write_rows(out / "traces.csv", ["t_s", "a", "b", "product"],
                zip(a.times, a.samples, b.samples, prod.samples))
    snr_a, snr_b = beat_snr(a), beat_snr(b)
    _write_rows(out / "beat_snr.csv", ["ramp_index", "snr_A", "snr_B"],
                zip(range(len(snr_a)), snr_a, snr_b))
    freqs, spectra = noise_spectra(cfg, n, streams.child(1))
    cols = sorted(spectra)
    _write_rows(out / "spectra.csv", ["freq_hz"] + cols,
                zip(freqs, *(spectra[c] for c in cols)))


def _run_scan(s: Scenario, out: Path, streams: SeedStreams, calibration=None):
    estimates = csbc_scan(s.bench, None, s.scan.angles, streams, calibration)
    write_scan_csv(estimates, out / "csbc_scan.csv")
    return estimates


def establishment_bench(s: Scenario) -> BenchConfig:
    """Bench used to establish and calibrate the CSBC ahead of a key session."""
    b = s.bench
    sig = b.signal if s.key.establish_signal_dbm is None else PowerSetting(s.key.establish_signal_dbm, b.signal.wavelength_nm)
    lo = b.lo if s.key.establish_lo_dbm is None else PowerSetting(s.key.establish_lo_dbm, b.lo.wavelength_nm)
    return dataclasses.replace(b, signal=sig, lo=lo)


def _run_key(s: Scenario, out: Path, streams: SeedStreams) -> None:
    cfg = s.bench
    est = establishment_bench(s)
    cal = calibrate(est, streams)
    if s.key.establish_scan:
        _run_scan(dataclasses.replace(s, bench=est), out, streams, cal)
    bits = np.array(s.key.bits, dtype=int) if s.key.bits is not None else random_key(s.key.n_bits, streams)
    if s.key.deadband is not None:
        deadband = s.key.deadband
    else:
        deadband = noise_deadband(cfg, cfg.lockin, s.key.deadband_sigmas)
    session = run_key_session(cfg, None, bits, cfg.lockin, streams, deadband, cal)
    session.to_csv(out / "session.csv")
    _write_rows(out / "session_summary.csv",
                ["csbc_type", "n_symbols", "n_kept", "agreement_rate", "sign_convention",
                 "deadband_A", "deadband_B", "calib_constant"],
                [[cfg.csbc_type.value, len(bits), session.n_kept, float(session.agreement_rate),
                  session.sign_convention, float(session.deadband[0]), float(session.deadband[1]),
                  float(cal.constant)]])


def run_scenario(scenario: Scenario | dict | str | Path, out_dir) -> Path:
    """Run one scenario and write its CSVs plus ``resolved_config.yaml`` to ``out_dir``.

    Validation happens before anything is written.
    """
    if isinstance(scenario, (str, Path)):
        scenario = load_scenario(scenario)
    elif isinstance(scenario, dict):
        scenario = parse_scenario(scenario)
    if scenario.kind != "trace":
        validate_for_traces(scenario.bench)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "resolved_config.yaml", "w") as fh:
        yaml.safe_dump(resolved_config(scenario), fh, sort_keys=True)
    streams = SeedStreams(scenario.bench.seed)
    if scenario.kind == "trace":
        _run_trace(scenario, out, streams)
    elif scenario.kind == "csbc-scan":
        _run_scan(scenario, out, streams)
    else:
        _run_key(scenario, out, streams)
    return out
