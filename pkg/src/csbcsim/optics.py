"""Jones-calculus algebra for the two-beam bench.

Fields are classical c-number amplitudes: a coherent state is represented
by its eigenvalue, and every quantum noise source is added downstream by
the station.  All functions are vectorized: the ``x``/``y`` components of a
:class:`PolarizedField` may be complex scalars or complex ndarrays of a
common shape.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT_HALF = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class PolarizedField:
    """Complex amplitudes along the horizontal (x) and vertical (y) axes."""

    x: complex | np.ndarray
    y: complex | np.ndarray

    @property
    def intensity(self):
        return np.abs(self.x) ** 2 + np.abs(self.y) ** 2

    def scaled(self, factor) -> "PolarizedField":
        return PolarizedField(self.x * factor, self.y * factor)

    def as_array(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(self.x, self.y), axis=-1)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y)))


def analyzer_vector(theta):
    """Real unit vector ``cos(theta) x + sin(theta) y`` transmitted by a PBS set to ``theta``."""
    return np.cos(theta), np.sin(theta)


def rotation(angle) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]])


def retarder_matrix(retardance: float, orientation: float) -> np.ndarray:
    """Jones matrix of a linear retarder with its fast axis at ``orientation``.

    The fast axis carries phase 0 and the slow axis ``exp(i*retardance)``.
    """
    core = np.diag([1.0, np.exp(1j * retardance)])
    return rotation(-orientation) @ core @ rotation(orientation)


def quarter_wave_matrix(orientation: float) -> np.ndarray:
    return retarder_matrix(np.pi / 2, orientation)


def half_wave_matrix(orientation: float) -> np.ndarray:
    return retarder_matrix(np.pi, orientation)


def apply_jones(matrix: np.ndarray, f: PolarizedField) -> PolarizedField:
    return PolarizedField(
        matrix[0, 0] * f.x + matrix[0, 1] * f.y,
        matrix[1, 0] * f.x + matrix[1, 1] * f.y,
    )


def mix_on_beamsplitter(a, b) -> tuple[PolarizedField, PolarizedField]:
    """Combine the x-polarized signal ``a`` with the y-polarized LO ``b`` on a 50/50 splitter.

    Symmetric convention with an ``i`` phase on reflection::

        beam1 = (a x + i b y) / sqrt(2)
        beam2 = (i a x + b y) / sqrt(2)
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    beam1 = PolarizedField(SQRT_HALF * a, 1j * SQRT_HALF * b)
    beam2 = PolarizedField(1j * SQRT_HALF * a, SQRT_HALF * b)
    return beam1, beam2


def apply_quarter_wave(f: PolarizedField, orientation: float, offset: float = 0.0) -> PolarizedField:
    """Pass ``f`` through a quarter-wave plate.

    ``offset`` is the mounting error of the plate; it adds to ``orientation``.
    At +45 degrees the plate turns linear x or y light circular.
    """
    return apply_jones(quarter_wave_matrix(orientation + offset), f)


def apply_half_wave(f: PolarizedField, orientation: float, offset: float = 0.0) -> PolarizedField:
    return apply_jones(half_wave_matrix(orientation + offset), f)


def project_pbs(f: PolarizedField, theta):
    """Split ``f`` on a polarizing beam splitter whose transmission axis sits at ``theta``.

    Returns ``(transmitted, reflected)`` intensities. The reflected port
    projects on ``theta + pi/2``, so the two always add up to ``f.intensity``.
    """
    c, s = analyzer_vector(theta)
    transmitted = np.abs(f.x * c + f.y * s) ** 2
    reflected = np.abs(-f.x * s + f.y * c) ** 2
    return transmitted, reflected


def balanced_difference(f: PolarizedField, theta):
    """Transmitted minus reflected intensity at a PBS set to ``theta``."""
    t, r = project_pbs(f, theta)
    return t - r
