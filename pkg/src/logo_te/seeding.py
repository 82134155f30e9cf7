"""Derive independent, reproducible random streams from one root seed."""

import zlib

import numpy as np


def derive_seed(root, label):
    """A 64-bit seed for sub-system ``label`` under ``root``."""
    ss = np.random.SeedSequence([int(root) & 0xFFFFFFFF, zlib.crc32(label.encode("utf-8"))])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_for(root, label):
    return np.random.default_rng(derive_seed(root, label))
