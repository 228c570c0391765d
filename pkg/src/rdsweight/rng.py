"""Reproducible random streams.

Every stochastic step in a study draws from a stream keyed by
``(master seed, *key)`` so results do not depend on execution order or
on which other conditions ran alongside.
"""

from __future__ import annotations

import os
import zlib

import numpy as np

SEED_ENV_VAR = "RDSWEIGHT_SEED"


def default_seed(fallback: int = 0) -> int:
    """Seed taken from ``$RDSWEIGHT_SEED`` if set, else ``fallback``."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw.strip() == "":
        return fallback
    return int(raw)


def stable_key(obj) -> int:
    """A 32-bit key for ``obj`` that is stable across processes and runs."""
    return zlib.crc32(repr(obj).encode("utf-8"))


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` under ``master_seed``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(seq)
