"""Successive (PPSWOR) sampling primitives.

Sampling proportional to size without replacement is realised with the
exponential race: give unit ``i`` the key ``E_i / u_i`` with ``E_i``
standard exponential and read units in increasing key order. The first
key to fire belongs to unit ``i`` with probability ``u_i / sum(u)`` and,
by memorylessness, each later position is again proportional to size
among the units not yet drawn, so the order has exactly the successive
sampling distribution. Keys are generated for many draws at once.
"""

from __future__ import annotations

import numpy as np

from ._validation import check_random_state

# rows * units kept in memory per chunk
_CHUNK_CELLS = 2_000_000


def _check_sizes(sizes) -> np.ndarray:
    sizes = np.asarray(sizes, dtype=float)
    if sizes.ndim != 1:
        raise ValueError("unit sizes must be one-dimensional")
    if np.any(sizes <= 0) or not np.all(np.isfinite(sizes)):
        raise ValueError("unit sizes must be positive and finite")
    return sizes


def successive_sample(sizes, size: int, random_state=None) -> np.ndarray:
    """Indices of ``size`` units drawn by PPSWOR, in draw order."""
    return successive_sample_many(sizes, size, 1, random_state)[0]


def successive_sample_many(sizes, size: int, n_draws: int, random_state=None) -> np.ndarray:
    """``(n_draws, size)`` array of independent ordered PPSWOR draws."""
    return np.concatenate(list(iter_successive_samples(sizes, size, n_draws, random_state)))


def iter_successive_samples(sizes, size: int, n_draws: int, random_state=None, ordered: bool = True):
    """Yield chunks of ordered PPSWOR draws, each ``(rows, size)``.

    With ``ordered=False`` the rows hold the right units in arbitrary
    order, which is cheaper when only the sampled set is needed.
    """
    sizes = _check_sizes(sizes)
    n_units = sizes.size
    if not 0 <= size <= n_units:
        raise ValueError(f"cannot draw {size} of {n_units} units without replacement")
    rng = check_random_state(random_state)
    rows = max(1, _CHUNK_CELLS // max(n_units, 1))
    done = 0
    while done < n_draws:
        t = min(rows, n_draws - done)
        keys = rng.standard_exponential((t, n_units)) / sizes
        if size == 0:
            picked = np.empty((t, 0), dtype=np.int64)
        elif size == n_units:
            picked = np.argsort(keys, axis=1) if ordered else np.broadcast_to(
                np.arange(n_units), (t, n_units)
            )
        else:
            picked = np.argpartition(keys, size - 1, axis=1)[:, :size]
            if ordered:
                sub = np.take_along_axis(keys, picked, axis=1)
                picked = np.take_along_axis(picked, np.argsort(sub, axis=1), axis=1)
        yield picked
        done += t
