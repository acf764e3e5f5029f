"""Fiber link carrying beam 2 to Bob: loss, static birefringence, compensation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .optics import PolarizedField, apply_jones, half_wave_matrix, quarter_wave_matrix


@dataclass(frozen=True)
class FiberConfig:
    length_km: float = 10.0
    loss_db_per_km: float = 0.2
    coupling_loss_db: float = 0.0
    birefringence_seed: int = 0
    # Seed of the compensating plates; None means matched to the fiber.
    compensation_seed: int | None = None

    def __post_init__(self):
        if self.length_km < 0:
            raise ValueError("length_km must be >= 0")
        if self.loss_db_per_km < 0 or self.coupling_loss_db < 0:
            raise ValueError("losses must be >= 0")

    @property
    def total_loss_db(self) -> float:
        return self.length_km * self.loss_db_per_km + self.coupling_loss_db

    @property
    def power_factor(self) -> float:
        return 10.0 ** (-self.total_loss_db / 10.0)

    @property
    def amplitude_factor(self) -> float:
        return 10.0 ** (-self.total_loss_db / 20.0)


IDENTITY_SEED = -1
"""Birefringence seed that selects the identity rotation (an ideal fiber)."""


def birefringence_matrix(seed: int) -> np.ndarray:
    """Haar-random 2x2 unitary drawn from ``seed``; ``IDENTITY_SEED`` gives the identity."""
    if seed == IDENTITY_SEED:
        return np.eye(2, dtype=complex)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xB1EF,)))
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def propagate(f: PolarizedField, cfg: FiberConfig) -> PolarizedField:
    attenuated = f.scaled(cfg.amplitude_factor)
    return apply_jones(birefringence_matrix(cfg.birefringence_seed), attenuated)


def compensate_birefringence(f: PolarizedField, cfg: FiberConfig) -> PolarizedField:
    """Undo the fiber rotation believed to come from ``compensation_seed``.

    A wrong seed is not detectable here; it only shows up as lost CSBC
    visibility end to end.
    """
    seed = cfg.birefringence_seed if cfg.compensation_seed is None else cfg.compensation_seed
    return apply_jones(birefringence_matrix(seed).conj().T, f)


def _plate_stack(angles) -> np.ndarray:
    q1, h, q2 = angles
    return quarter_wave_matrix(q2) @ half_wave_matrix(h) @ quarter_wave_matrix(q1)


def compensator_angles(rotation: np.ndarray) -> tuple[np.ndarray, float]:
    """Find QWP-HWP-QWP orientations that invert ``rotation`` up to a global phase.

    Returns ``(angles, residual)`` where ``residual`` is the Frobenius distance
    between the plate stack times ``rotation`` and the nearest phase times identity.
    """
    def cost(angles):
        m = _plate_stack(angles) @ rotation
        phase = np.trace(m) / 2.0
        phase = phase / abs(phase) if abs(phase) > 1e-15 else 1.0
        d = (m - phase * np.eye(2)).ravel()
        return np.concatenate([d.real, d.imag])

    best = None
    for start in np.linspace(0.0, np.pi, 4):
        sol = least_squares(cost, x0=[start, start / 2, -start], xtol=1e-14, ftol=1e-14, gtol=1e-14)
        if best is None or sol.cost < best.cost:
            best = sol
    return np.mod(best.x, np.pi), float(np.linalg.norm(cost(best.x)))
