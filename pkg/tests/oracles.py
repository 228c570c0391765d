"""Brute-force reference computations used by the tests.

Nothing here imports the package under test.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def ppswor_sequences(sizes, n):
    """Yield ``(sequence, probability)`` for every ordered successive sample."""
    total = sum(sizes)
    for seq in itertools.permutations(range(len(sizes)), n):
        prob = Fraction(1)
        remaining = Fraction(total)
        for unit in seq:
            prob *= Fraction(sizes[unit]) / remaining
            remaining -= sizes[unit]
        yield seq, prob


def expand(dist: dict):
    """Unit degrees for a ``{degree: count}`` mapping, sorted by degree."""
    return [k for k in sorted(dist) for _ in range(dist[k])]


def exact_nodal_inclusion(dist: dict, n: int) -> dict:
    units = expand(dist)
    hits = {k: Fraction(0) for k in dist}
    for seq, prob in ppswor_sequences(units, n):
        for unit in seq:
            hits[units[unit]] += prob
    return {k: float(hits[k] / dist[k]) for k in dist}


def exact_sampled_before(dist: dict, n: int) -> dict:
    """Probability that a given degree-k unit is drawn while a given other
    degree-l unit is still undrawn (the unsmoothed limit of W)."""
    units = expand(dist)
    count = {(k, l): Fraction(0) for k in dist for l in dist}
    for seq, prob in ppswor_sequences(units, n):
        position = {u: p for p, u in enumerate(seq)}
        for i in seq:
            for j in range(len(units)):
                if j != i and (j not in position or position[j] > position[i]):
                    count[(units[i], units[j])] += prob
    out = {}
    for (k, l), c in count.items():
        pairs = dist[k] * dist[l] if k != l else dist[k] * (dist[k] - 1)
        if pairs:
            out[(k, l)] = float(c / pairs)
    return out


def exact_order_probabilities(sizes, n) -> dict:
    return {seq: float(p) for seq, p in ppswor_sequences(sizes, n)}
