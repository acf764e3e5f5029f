"""Bit correlations by LO-phase keying and lock-in readout.

Each key symbol is one lock-in integration window in which the PZT ramp
runs and the LO carries a constant offset of 0 or pi. Both parties
demodulate their own trace against the same reference. The sign of each
quadrature is the raw bit.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .config import BenchConfig, CsbcType, LockInConfig
from .correlation import Calibration, calibrate
from .rng import KEY, SeedStreams
from .station import BeatTrace, generate_pair, quadrature_noise_std, validate_for_traces

log = logging.getLogger(__name__)

KEY_STREAM = 3

SESSION_COLUMNS = ("symbol_index", "key_phase_rad", "alice_quad", "bob_quad", "alice_bit", "bob_bit", "erased")


def window_samples(sample_rate_hz: float, cfg: LockInConfig) -> int:
    return int(round(cfg.integration_periods * sample_rate_hz / cfg.ref_freq_hz))


def lock_in_demodulate(trace: BeatTrace, cfg: LockInConfig) -> float:
    """In-phase quadrature ``(2/N) sum s_k cos(2 pi f t_k + phase)`` over the integration window."""
    n = window_samples(trace.sample_rate_hz, cfg)
    if len(trace) < n:
        raise ValueError(
            f"trace of {len(trace)} samples is shorter than {cfg.integration_periods} reference period(s)"
        )
    t = trace.times[:n]
    ref = np.cos(2.0 * np.pi * cfg.ref_freq_hz * t + cfg.ref_phase_rad)
    return float(2.0 / n * np.dot(trace.samples[:n], ref))


def encode_bit(quadrature: float, deadband: float = 0.0) -> int | None:
    """1 above ``+deadband``, 0 below ``-deadband``, None (erased) in between."""
    if deadband < 0:
        raise ValueError("deadband must be >= 0")
    if quadrature > deadband:
        return 1
    if quadrature < -deadband:
        return 0
    return None


@dataclass
class KeySession:
    csbc_type: CsbcType
    symbols: np.ndarray
    alice_quads: np.ndarray
    bob_quads: np.ndarray
    alice_bits: list
    bob_bits: list
    sign_convention: int
    deadband: tuple[float, float] = (0.0, 0.0)
    meta: dict = field(default_factory=dict)

    @property
    def erased(self) -> np.ndarray:
        return np.array([a is None or b is None for a, b in zip(self.alice_bits, self.bob_bits)], dtype=bool)

    @property
    def all_erased(self) -> bool:
        return bool(np.all(self.erased))

    def aligned_bob_bits(self) -> list:
        if self.sign_convention > 0:
            return list(self.bob_bits)
        return [None if b is None else 1 - b for b in self.bob_bits]

    @property
    def n_kept(self) -> int:
        return int(np.count_nonzero(~self.erased))

    @property
    def agreement_rate(self) -> float:
        """Fraction of non-erased symbols on which Alice and the aligned Bob agree."""
        kept = [(a, b) for a, b in zip(self.alice_bits, self.aligned_bob_bits()) if a is not None and b is not None]
        if not kept:
            return 0.0
        return sum(a == b for a, b in kept) / len(kept)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SESSION_COLUMNS)
            for i, (sym, qa, qb, ba, bb, er) in enumerate(zip(
                self.symbols, self.alice_quads, self.bob_quads, self.alice_bits, self.bob_bits, self.erased
            )):
                w.writerow([i, repr(float(sym)), repr(float(qa)), repr(float(qb)),
                            "" if ba is None else ba, "" if bb is None else bb, int(er)])


def sign_convention(cfg: BenchConfig, csbc_type: CsbcType) -> int:
    """Expected sign of Bob's quadrature relative to Alice's at the session angles."""
    c = float(csbc_type.closed_form(cfg.theta1, cfg.theta2))
    if abs(c) < 1e-12:
        raise ValueError("analyzer angles give zero correlation; no bit convention exists")
    return 1 if c > 0 else -1


def noise_deadband(cfg: BenchConfig, lock_cfg: LockInConfig, sigmas: float = 1.0) -> tuple[float, float]:
    """Deadbands of ``sigmas`` times each party's noise quadrature std."""
    n = window_samples(cfg.sample_rate_hz, lock_cfg)
    return tuple(sigmas * quadrature_noise_std(cfg, port, n) for port in ("A", "B"))


def random_key(n_bits: int, streams: SeedStreams) -> np.ndarray:
    return streams.generator(KEY).integers(0, 2, size=n_bits)


def run_key_session(
    cfg: BenchConfig,
    csbc_type: CsbcType | None,
    key: Sequence[int],
    lock_cfg: LockInConfig | None = None,
    streams: SeedStreams | None = None,
    deadband: float | tuple[float, float] = 0.0,
    calibration: Calibration | None = None,
) -> KeySession:
    """Send ``key`` as LO offsets ``bit * pi`` and read it out at both stations.

    The CSBC is established first by calibrating at ``cfg`` unless a
    ``calibration`` is passed in. The signal phase walk carries on from one
    symbol to the next.
    """
    if csbc_type is not None:
        cfg = replace(cfg, csbc_type=csbc_type)
    csbc_type = cfg.csbc_type
    lock_cfg = cfg.lockin if lock_cfg is None else lock_cfg
    streams = SeedStreams(cfg.seed) if streams is None else streams
    validate_for_traces(cfg)
    if calibration is None:
        calibration = calibrate(cfg, streams)
    db = (float(deadband), float(deadband)) if np.isscalar(deadband) else tuple(map(float, deadband))

    key = np.asarray(key, dtype=int)
    if key.size and not np.all((key == 0) | (key == 1)):
        raise ValueError("key bits must be 0 or 1")
    n = window_samples(cfg.sample_rate_hz, lock_cfg)
    symbols = key * math.pi
    qa = np.empty(len(key))
    qb = np.empty(len(key))
    phi = cfg.phi_alpha0
    for i, offset in enumerate(symbols):
        a, b, phases = generate_pair(
            cfg, n, streams.child(KEY_STREAM, i), phi_start=phi, key_offset=float(offset), t0=i * n / cfg.sample_rate_hz
        )
        phi = float(phases.phi_alpha[-1])
        qa[i] = lock_in_demodulate(a, lock_cfg)
        qb[i] = lock_in_demodulate(b, lock_cfg)

    session = KeySession(
        csbc_type=csbc_type,
        symbols=symbols,
        alice_quads=qa,
        bob_quads=qb,
        alice_bits=[encode_bit(q, db[0]) for q in qa],
        bob_bits=[encode_bit(q, db[1]) for q in qb],
        sign_convention=sign_convention(cfg, csbc_type),
        deadband=db,
        meta={"calib_constant": calibration.constant, "window_samples": n},
    )
    if len(key) and session.all_erased:
        log.warning("every symbol of the key session was erased")
    return session
