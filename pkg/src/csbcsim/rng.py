"""Named, index-addressable random streams derived from one root seed.

Each stream is built from ``SeedSequence(seed, spawn_key=(name_id, *indices))``
so streams never share state. Adding a new noise source therefore leaves
the draws of every existing source unchanged.
"""
from __future__ import annotations

import zlib

import numpy as np

PHASE = "phase"
SHOT_A = "station-A-shot"
SHOT_B = "station-B-shot"
ELEC_A = "station-A-electronic"
ELEC_B = "station-B-electronic"
BIREFRINGENCE = "birefringence"
KEY = "key"


def _name_id(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


class SeedStreams:
    """Factory of ``numpy.random.Generator`` objects keyed by name and indices.

    ``streams.generator("phase", 3, 0)`` always returns a generator in the
    same initial state for a given root seed. ``child`` prefixes indices so a
    scan point or key symbol can hand its own sub-tree to lower layers.
    """

    def __init__(self, seed: int, prefix: tuple[int, ...] = ()):
        if seed is None:
            raise ValueError("a seed is mandatory")
        self.seed = int(seed)
        self.prefix = tuple(prefix)

    def child(self, *indices: int) -> "SeedStreams":
        return SeedStreams(self.seed, self.prefix + tuple(int(i) for i in indices))

    def generator(self, name: str, *indices: int) -> np.random.Generator:
        key = (_name_id(name),) + self.prefix + tuple(int(i) for i in indices)
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=key))

    def __repr__(self):
        return f"SeedStreams(seed={self.seed}, prefix={self.prefix})"
