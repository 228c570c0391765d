"""Nodal and directed-edge inclusion probabilities under successive sampling.

The population is reduced to a degree distribution; units within a
degree class are exchangeable, so everything is tracked per class.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_degrees, check_positive_int, check_random_state
from .ppswor import iter_successive_samples, successive_sample

logger = logging.getLogger(__name__)

# rows * sample positions * classes per accumulation chunk
_EDGE_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True, eq=False)
class DegreeDistribution:
    """Number of population members in each degree class."""

    degrees: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        degrees = np.asarray(self.degrees, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if degrees.shape != counts.shape or degrees.ndim != 1:
            raise ValueError("degrees and counts must be matching 1-d arrays")
        if np.any(degrees < 1):
            raise ValueError("degree classes must be >= 1")
        if np.any(counts < 0):
            raise ValueError("class counts must be non-negative")
        if np.unique(degrees).size != degrees.size:
            raise ValueError("degree classes must be distinct")
        order = np.argsort(degrees)
        object.__setattr__(self, "degrees", degrees[order])
        object.__setattr__(self, "counts", counts[order])

    @classmethod
    def from_mapping(cls, mapping: dict) -> "DegreeDistribution":
        items = sorted(mapping.items())
        return cls(np.array([k for k, _ in items]), np.array([v for _, v in items]))

    @classmethod
    def from_degrees(cls, degrees) -> "DegreeDistribution":
        values, counts = np.unique(np.asarray(degrees, dtype=np.int64), return_counts=True)
        return cls(values, counts)

    @property
    def population_size(self) -> int:
        return int(self.counts.sum())

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.degrees.size else 0

    def as_dict(self) -> dict:
        return {int(k): int(v) for k, v in zip(self.degrees, self.counts)}

    def unit_classes(self) -> np.ndarray:
        """Class index of every population unit."""
        return np.repeat(np.arange(self.degrees.size), self.counts)

    def __eq__(self, other):
        if not isinstance(other, DegreeDistribution):
            return NotImplemented
        return np.array_equal(self.degrees, other.degrees) and np.array_equal(
            self.counts, other.counts
        )

    def __repr__(self):
        return f"DegreeDistribution({self.as_dict()})"


def ppswor_draw(dist: DegreeDistribution, n: int, random_state=None) -> list:
    """Degrees of an ordered size-``n`` successive sample from ``dist``."""
    if n > dist.population_size:
        raise ValueError(f"sample size {n} exceeds population size {dist.population_size}")
    classes = dist.unit_classes()
    picked = successive_sample(dist.degrees[classes], n, random_state)
    return [int(d) for d in dist.degrees[classes[picked]]]


def simulate_nodal_inclusion(dist: DegreeDistribution, n: int, draws: int, random_state=None):
    """Monte Carlo inclusion probability per degree class.

    Returns ``(pi, zero_classes)`` where ``zero_classes`` lists degrees
    never sampled; their probability is floored at ``1/(N_k * draws)``.
    """
    rng = check_random_state(random_state)
    classes = dist.unit_classes()
    sizes = dist.degrees[classes].astype(float)
    k = dist.degrees.size
    hits = np.zeros(k, dtype=np.int64)
    for chunk in iter_successive_samples(sizes, n, draws, rng, ordered=False):
        hits += np.bincount(classes[chunk].ravel(), minlength=k)
    denom = dist.counts.astype(float) * draws
    with np.errstate(divide="ignore", invalid="ignore"):
        pi = np.where(denom > 0, hits / denom, 0.0)
    zero = (hits == 0) & (dist.counts > 0)
    if zero.any():
        pi[zero] = 1.0 / denom[zero]
    return pi, [int(d) for d in dist.degrees[zero]]


def apportion(weights, total: int, minimum=None) -> np.ndarray:
    """Integer allocation of ``total`` proportional to ``weights``.

    Largest-remainder rounding, so the result sums to ``total`` exactly.
    Entries are held at or above ``minimum`` when given.
    """
    weights = np.asarray(weights, dtype=float)
    lower = np.zeros(weights.size) if minimum is None else np.asarray(minimum, dtype=float)
    if lower.sum() > total:
        raise ValueError("minimum allocation exceeds the total")
    fixed = np.zeros(weights.size, dtype=bool)
    while True:
        free_total = total - lower[fixed].sum()
        free_w = weights[~fixed].sum()
        target = np.where(fixed, lower, free_total * weights / free_w if free_w > 0 else 0.0)
        below = ~fixed & (target < lower)
        if not below.any():
            break
        fixed |= below
    base = np.floor(target + 1e-12).astype(np.int64)
    short = int(total - base.sum())
    if short > 0:
        remainder = np.where(fixed, -1.0, target - base)
        # stable order so ties resolve to the smaller degree class
        base[np.argsort(-remainder, kind="stable")[:short]] += 1
    return base


def estimate_pi_and_distribution(
    sample_degrees,
    population_size: int,
    draws: int = 1000,
    iterations: int = 6,
    tolerance: float = 2e-3,
    random_state=None,
    known_distribution: DegreeDistribution | None = None,
):
    """Successive-sampling estimates of the degree distribution and of
    the inclusion probability of each observed degree.

    Starting from ``pi = n/N`` the routine alternates between
    (a) a population ``N_k`` proportional to ``count_k / pi_k`` rounded to
    integers summing to ``N`` (never below the sample count), and
    (b) re-estimating ``pi_k`` from ``draws`` simulated successive samples
    of size ``n`` from that population, until ``pi`` moves by less than
    ``tolerance`` or ``iterations`` are used up.

    If ``known_distribution`` is given step (a) is skipped and a single
    round of (b) is run on it.

    Returns
    -------
    dist : DegreeDistribution
        Estimated population degree distribution (observed degrees only).
    pi : ndarray
        Inclusion probability per class of ``dist``.
    """
    degrees = check_degrees(sample_degrees, "sample degrees")
    n = degrees.size
    population_size = check_positive_int(population_size, "population_size")
    if n > population_size:
        raise ValueError(f"sample size {n} exceeds population size {population_size}")
    rng = check_random_state(random_state)

    if known_distribution is not None:
        pi, zero = simulate_nodal_inclusion(known_distribution, n, draws, rng)
        _log_zero(zero)
        return known_distribution, pi

    observed = DegreeDistribution.from_degrees(degrees)
    counts = observed.counts
    pi = np.full(counts.size, n / population_size)
    dist = observed
    for _ in range(iterations):
        dist = DegreeDistribution(
            observed.degrees, apportion(counts / pi, population_size, minimum=counts)
        )
        new_pi, zero = simulate_nodal_inclusion(dist, n, draws, rng)
        _log_zero(zero)
        shift = float(np.max(np.abs(new_pi - pi)))
        pi = new_pi
        if shift < tolerance:
            break
    dist = DegreeDistribution(
        observed.degrees, apportion(counts / pi, population_size, minimum=counts)
    )
    return dist, pi


def _log_zero(zero):
    if zero:
        logger.info("degree classes %s never sampled; inclusion probability floored", zero)


@dataclass(eq=False)
class InclusionEstimates:
    """Inclusion estimates over a set of degree classes.

    Arrays are aligned with ``support`` (sorted degrees): ``pi[a]`` for the
    nodal probability, ``W[a, b]`` and ``q_hat[a, b]`` for the ordered
    degree pair ``(support[a], support[b])``.
    """

    support: np.ndarray
    distribution: DegreeDistribution
    W: np.ndarray
    g_hat: np.ndarray
    q_hat: np.ndarray
    sample_size: int
    n_coupons: int
    resamples: int
    pi: np.ndarray | None = None
    seed: int | None = None
    diagnostics: list = field(default_factory=list)

    @classmethod
    def from_tables(cls, pi: dict, q_hat: dict, n_coupons: int = 1) -> "InclusionEstimates":
        """Estimates built from given ``{degree: pi}`` and ``{(k, l): q}``
        tables. Pairs left out of ``q_hat`` are stored as NaN and raise
        on lookup."""
        support = np.array(sorted(pi), dtype=np.int64)
        where = {int(k): a for a, k in enumerate(support)}
        q = np.full((support.size, support.size), np.nan)
        for (k, l), value in q_hat.items():
            if k not in where or l not in where:
                raise KeyError(f"pair ({k}, {l}) uses a degree without a nodal probability")
            q[where[k], where[l]] = value
        return cls(
            support=support,
            distribution=DegreeDistribution(support, np.ones(support.size, dtype=np.int64)),
            W=q.copy(),
            g_hat=support.astype(float),
            q_hat=q,
            sample_size=0,
            n_coupons=n_coupons,
            resamples=0,
            pi=np.array([pi[k] for k in support], dtype=float),
        )

    @property
    def population_size(self) -> int:
        return self.distribution.population_size

    def index_of(self, degrees) -> np.ndarray:
        degrees = np.asarray(degrees, dtype=np.int64)
        idx = np.searchsorted(self.support, degrees)
        idx = np.clip(idx, 0, self.support.size - 1)
        bad = self.support[idx] != degrees
        if np.any(bad):
            missing = int(degrees[np.flatnonzero(bad)[0]])
            raise KeyError(f"degree {missing} has no inclusion estimate")
        return idx

    def pi_for(self, degrees) -> np.ndarray:
        if self.pi is None:
            raise ValueError("nodal inclusion probabilities were not estimated")
        return self.pi[self.index_of(degrees)]

    def q_for(self, from_degrees, to_degrees) -> np.ndarray:
        a = np.asarray(from_degrees, dtype=np.int64)
        b = np.asarray(to_degrees, dtype=np.int64)
        try:
            ia, ib = self.index_of(a), self.index_of(b)
        except KeyError:
            for da, db in zip(a.ravel(), b.ravel()):
                if da not in self.support or db not in self.support:
                    raise KeyError(f"no edge inclusion estimate for pair ({da}, {db})") from None
            raise
        q = self.q_hat[ia, ib]
        if np.any(np.isnan(q)):
            at = np.flatnonzero(np.isnan(np.ravel(q)))[0]
            raise KeyError(
                f"no edge inclusion estimate for pair ({int(a.ravel()[at])}, {int(b.ravel()[at])})"
            )
        return q

    def pi_dict(self) -> dict:
        return {} if self.pi is None else {int(k): float(v) for k, v in zip(self.support, self.pi)}

    def g_dict(self) -> dict:
        return {int(k): float(v) for k, v in zip(self.support, self.g_hat)}

    def edge_rows(self):
        """``(k, l, W, q_hat)`` rows for every ordered pair of classes."""
        for a, k in enumerate(self.support):
            for b, l in enumerate(self.support):
                yield int(k), int(l), float(self.W[a, b]), float(self.q_hat[a, b])


def _sampled_before(onehot: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Pair counts for one-hot draws of shape ``(t, n, k)``."""
    k = counts.size
    seen = np.cumsum(onehot, axis=1)
    # remaining units of each class just after each position
    return onehot.reshape(-1, k).T @ (counts - seen.reshape(-1, k))


def sampled_before_counts(dist: DegreeDistribution, sampled_degrees) -> dict:
    """Pair counts ``V[(k, l)]`` for one ordered draw of degrees.

    Each sampled degree-k unit is counted against every degree-l unit,
    sampled or not, that had not yet been drawn when it was.
    """
    order = np.asarray(sampled_degrees, dtype=np.int64)
    idx = np.minimum(np.searchsorted(dist.degrees, order), dist.degrees.size - 1)
    if np.any(dist.degrees[idx] != order):
        raise ValueError("draw contains a degree outside the distribution")
    drawn = np.bincount(idx, minlength=dist.degrees.size)
    if np.any(drawn > dist.counts):
        raise ValueError("draw uses more units of a class than exist")
    eye = np.eye(dist.degrees.size)
    V = _sampled_before(eye[idx][None], dist.counts.astype(float))
    return {
        (int(a), int(b)): int(V[i, j])
        for i, a in enumerate(dist.degrees)
        for j, b in enumerate(dist.degrees)
    }


def accumulate_order_statistics(dist: DegreeDistribution, n: int, resamples: int, random_state=None):
    """Raw sums from ``resamples`` successive samples of size ``n``.

    Returns ``(V, g_sum, g_count)``: ``V[a, b]`` totals, over draws, the
    number of (sampled class-a unit, class-b unit still unsampled at that
    moment) pairs; ``g_sum``/``g_count`` accumulate the per-draw adjusted
    degree ``k (1 - mean_position_k / N)`` over draws in which class ``a``
    was sampled (positions are 1-based).
    """
    rng = check_random_state(random_state)
    n_population = dist.population_size
    if n > n_population:
        raise ValueError(f"sample size {n} exceeds population size {n_population}")
    k = dist.degrees.size
    classes = dist.unit_classes()
    sizes = dist.degrees[classes].astype(float)
    V = np.zeros((k, k))
    g_sum = np.zeros(k)
    g_count = np.zeros(k, dtype=np.int64)
    if n == 0:
        return V, g_sum, g_count
    positions = np.arange(1, n + 1, dtype=float)
    eye = np.eye(k)
    counts = dist.counts.astype(float)
    for chunk in iter_successive_samples(sizes, n, resamples, rng):
        cls = classes[chunk]
        rows_per_block = max(1, _EDGE_CHUNK_CELLS // (n * k))
        for start in range(0, cls.shape[0], rows_per_block):
            c = cls[start:start + rows_per_block]
            t = c.shape[0]
            V += _sampled_before(eye[c], counts)
            offset = (np.arange(t)[:, None] * k + c).ravel()
            pos_sum = np.bincount(offset, weights=np.tile(positions, t), minlength=t * k)
            n_hit = np.bincount(offset, minlength=t * k)
            pos_sum = pos_sum.reshape(t, k)
            n_hit = n_hit.reshape(t, k)
            hit = n_hit > 0
            mean_pos = np.divide(pos_sum, n_hit, out=np.zeros_like(pos_sum), where=hit)
            g = dist.degrees[None, :] * (1.0 - mean_pos / n_population)
            g_sum += np.where(hit, g, 0.0).sum(axis=0)
            g_count += hit.sum(axis=0)
    return V, g_sum, g_count


def estimate_edge_probabilities(
    dist: DegreeDistribution,
    n: int,
    n_coupons: int,
    resamples: int = 1000,
    random_state=None,
    pi=None,
    seed: int | None = None,
) -> InclusionEstimates:
    """Directed-edge inclusion probabilities by degree pair.

    ``W`` is the smoothed share of (degree-k unit, degree-l unit) pairs in
    which the first was sampled while the second was still unsampled;
    ``g_hat`` the mean adjusted degree; and
    ``q_hat[k, l] = min(n_coupons / g_hat[k], 1) * W[k, l]``.
    """
    check_positive_int(resamples, "resamples")
    check_positive_int(n_coupons, "n_coupons")
    V, g_sum, g_count = accumulate_order_statistics(dist, n, resamples, random_state)
    counts = dist.counts.astype(float)
    denom = np.outer(counts, counts) * resamples
    np.fill_diagonal(denom, (counts - 1) * counts * resamples)
    W = (V + 1.0) / (denom + 1.0)
    diagnostics = []
    g_hat = np.empty(dist.degrees.size)
    sampled = g_count > 0
    g_hat[sampled] = g_sum[sampled] / g_count[sampled]
    if not sampled.all():
        fallback = dist.degrees * (1.0 - n / (2.0 * dist.population_size))
        g_hat[~sampled] = fallback[~sampled]
        missing = [int(d) for d in dist.degrees[~sampled]]
        diagnostics.append(f"degrees {missing} never sampled; adjusted degree uses n/(2N)")
        logger.info(diagnostics[-1])
    with np.errstate(divide="ignore"):
        edge_factor = np.minimum(np.where(g_hat > 0, n_coupons / g_hat, math.inf), 1.0)
    q_hat = edge_factor[:, None] * W
    return InclusionEstimates(
        support=dist.degrees.copy(),
        distribution=dist,
        W=W,
        g_hat=g_hat,
        q_hat=q_hat,
        sample_size=int(n),
        n_coupons=int(n_coupons),
        resamples=int(resamples),
        pi=None if pi is None else np.asarray(pi, dtype=float),
        seed=seed,
        diagnostics=diagnostics,
    )


def estimate_inclusion(
    sample_degrees,
    population_size: int,
    n_coupons: int,
    resamples: int = 1000,
    pi_draws: int = 1000,
    pi_iterations: int = 6,
    tolerance: float = 2e-3,
    random_state=None,
) -> InclusionEstimates:
    """Nodal probabilities, the estimated degree distribution and edge
    probabilities for one observed sample, in one call."""
    seed = random_state if isinstance(random_state, (int, np.integer)) else None
    rng = check_random_state(random_state)
    degrees = check_degrees(sample_degrees, "sample degrees")
    dist, pi = estimate_pi_and_distribution(
        degrees, population_size, pi_draws, pi_iterations, tolerance, rng
    )
    return estimate_edge_probabilities(
        dist, degrees.size, n_coupons, resamples, rng, pi=pi, seed=seed
    )


class InclusionProbabilityEstimator(BaseEstimator):
    """Estimator wrapper around :func:`estimate_inclusion`.

    ``fit`` takes the observed degree sequence (or a recruitment sample)
    and stores ``distribution_``, ``pi_``, ``W_``, ``g_hat_``, ``q_hat_``
    and the full ``inclusion_`` record.
    """

    def __init__(
        self,
        population_size=None,
        n_coupons=2,
        resamples=1000,
        pi_draws=1000,
        pi_iterations=6,
        tolerance=2e-3,
        random_state=None,
    ):
        self.population_size = population_size
        self.n_coupons = n_coupons
        self.resamples = resamples
        self.pi_draws = pi_draws
        self.pi_iterations = pi_iterations
        self.tolerance = tolerance
        self.random_state = random_state

    def fit(self, X, y=None):
        degrees = getattr(X, "degrees", X)
        if self.population_size is None:
            raise ValueError("population_size is required")
        self.inclusion_ = estimate_inclusion(
            degrees,
            self.population_size,
            self.n_coupons,
            resamples=self.resamples,
            pi_draws=self.pi_draws,
            pi_iterations=self.pi_iterations,
            tolerance=self.tolerance,
            random_state=self.random_state,
        )
        self.distribution_ = self.inclusion_.distribution
        self.support_ = self.inclusion_.support
        self.pi_ = self.inclusion_.pi
        self.W_ = self.inclusion_.W
        self.g_hat_ = self.inclusion_.g_hat
        self.q_hat_ = self.inclusion_.q_hat
        return self

    def transform(self, X):
        """Nodal inclusion probability for each degree in ``X``."""
        check_is_fitted(self, "inclusion_")
        degrees = check_degrees(getattr(X, "degrees", X))
        return self.inclusion_.pi_for(degrees)
