"""Recruitment-tree bootstrap for RDS prevalence estimators.

Respondents are pooled by the trait of whoever recruited them (seeds by
their own trait). A replicate starts from seeds drawn uniformly from the
whole sample; every member then recruits ``n_coupons`` people drawn with
replacement from the pool matching its own trait, wave by wave, until
the original sample size is reached (the last wave is cut short).

Because every member recruits exactly ``n_coupons`` people, the tree
shape is the same in every replicate: position ``j`` past the seeds is
recruited by position ``(j - n_seeds) // n_coupons``. Only who fills each
position varies, so all replicates are built and estimated as arrays.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._validation import check_positive_int
from .estimators import NEEDS_INCLUSION, batch_estimates
from .sampler import RecruitmentSample


class EmptyPoolError(ValueError):
    """A recruitment pool needed by the bootstrap has no members."""


@dataclass(eq=False)
class BootstrapResult:
    estimator: str
    trait: str
    estimate: float
    replicates: np.ndarray
    se: float
    ci_percentile: tuple | None
    ci_normal: tuple
    n_boot: int
    alpha: float
    seed: int | None
    n_degenerate: int = 0

    @property
    def ci(self) -> tuple:
        """Percentile interval when available, otherwise the normal one."""
        return self.ci_percentile if self.ci_percentile is not None else self.ci_normal

    def write_replicates(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["replicate", "estimator", "trait", "estimate"])
            for i, value in enumerate(self.replicates):
                writer.writerow([i, self.estimator, self.trait, repr(float(value))])


def tree_recruiters(n: int, n_seeds: int, n_coupons: int) -> np.ndarray:
    """Recruiter index of each position in a full ``n_coupons``-ary tree."""
    rec = np.full(n, -1, dtype=np.int64)
    pos = np.arange(n_seeds, n)
    rec[n_seeds:] = (pos - n_seeds) // n_coupons
    return rec


def _wave_blocks(n: int, n_seeds: int, n_coupons: int):
    start, width = n_seeds, n_seeds * n_coupons
    while start < n:
        stop = min(n, start + width)
        yield start, stop
        start, width = stop, (stop - start) * n_coupons


def _uniforms(seed, n_boot: int, n: int) -> np.ndarray:
    """Per-replicate uniform streams so replicate ``i`` depends only on ``(seed, i)``."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    out = np.empty((n_boot, n))
    for i in range(n_boot):
        child = np.random.SeedSequence(root.entropy, spawn_key=root.spawn_key + (i,))
        out[i] = np.random.default_rng(child).random(n)
    return out


def resample_trees(z: np.ndarray, recruiter: np.ndarray, n_coupons: int, n_boot: int, seed=None):
    """Row indices into the original sample for each bootstrap replicate.

    Returns ``(index, tree)``: ``index`` is ``(n_boot, n)`` and ``tree`` the
    recruiter array shared by every replicate.
    """
    n = z.size
    n_seeds = int(np.sum(recruiter < 0))
    if n_seeds == 0:
        raise ValueError("sample has no seeds")
    check_positive_int(n_coupons, "n_coupons")
    recruiter_trait = np.where(recruiter >= 0, z[np.maximum(recruiter, 0)], z)
    pools = {k: np.flatnonzero(recruiter_trait == k) for k in (0, 1)}
    if n > n_seeds:
        for k, label in ((1, "infected"), (0, "uninfected")):
            if np.any(z == k) and pools[k].size == 0:
                raise EmptyPoolError(
                    f"no respondent was recruited by an {label} member (trait={k}); "
                    "check the recruitment-tally diagnostic before bootstrapping"
                )
    u = _uniforms(seed, n_boot, n)
    index = np.empty((n_boot, n), dtype=np.int64)
    index[:, :n_seeds] = np.minimum((u[:, :n_seeds] * n).astype(np.int64), n - 1)
    tree = tree_recruiters(n, n_seeds, n_coupons)
    sizes = {k: max(pools[k].size, 1) for k in (0, 1)}
    for start, stop in _wave_blocks(n, n_seeds, n_coupons):
        parent_z = z[index[:, tree[start:stop]]]
        uu = u[:, start:stop]
        pick1 = pools[1][np.minimum((uu * sizes[1]).astype(np.int64), sizes[1] - 1)] if pools[1].size else 0
        pick0 = pools[0][np.minimum((uu * sizes[0]).astype(np.int64), sizes[0] - 1)] if pools[0].size else 0
        index[:, start:stop] = np.where(parent_z == 1, pick1, pick0)
    return index, tree


def salganik_bootstrap(
    sample: RecruitmentSample,
    trait: str = "z",
    estimator: str = "wsh",
    inclusion=None,
    n_boot: int = 10_000,
    alpha: float = 0.05,
    random_state=None,
    n_coupons: int | None = None,
    missing: str = "zero",
) -> BootstrapResult:
    """Bootstrap distribution of one estimator on one trait.

    ``inclusion`` (needed for ``ss`` and ``wsh``) is reused unchanged for
    every replicate. ``random_state`` is an int, a ``SeedSequence`` or None.
    """
    return bootstrap_estimators(
        sample, trait, [estimator], inclusion, n_boot, alpha, random_state, n_coupons, missing
    )[estimator]


def bootstrap_estimators(
    sample: RecruitmentSample,
    trait: str,
    estimators,
    inclusion=None,
    n_boot: int = 10_000,
    alpha: float = 0.05,
    random_state=None,
    n_coupons: int | None = None,
    missing: str = "zero",
) -> dict:
    """Like :func:`salganik_bootstrap` for several estimators evaluated on
    the same resampled trees."""
    check_positive_int(n_boot, "n_boot")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    for name in estimators:
        if name in NEEDS_INCLUSION and inclusion is None:
            raise ValueError(f"estimator {name!r} needs inclusion estimates")
    n_coupons = n_coupons if n_coupons is not None else sample.n_coupons
    if n_coupons is None:
        raise ValueError("n_coupons is unknown; pass it explicitly")
    d, z, rec = sample.arrays(trait, missing)
    index, tree = resample_trees(z, rec, n_coupons, n_boot, random_state)
    d_boot, z_boot = d[index], z[index]
    pct_ok = n_boot == 1 or n_boot * alpha / 2 >= 1
    if not pct_ok:
        warnings.warn(
            f"{n_boot} replicates are too few for a {1 - alpha:.0%} percentile interval; "
            "only the normal interval is reported",
            stacklevel=3,
        )
    zcrit = stats.norm.ppf(1 - alpha / 2)
    seed = random_state if isinstance(random_state, (int, np.integer)) else None
    out = {}
    for name in estimators:
        point, _, _ = batch_estimates(name, d, z, rec, inclusion)
        reps, degenerate, _ = batch_estimates(name, d_boot, z_boot, tree, inclusion)
        se = float(np.std(reps, ddof=1)) if n_boot > 1 else 0.0
        est = float(point[0])
        ci_normal = (max(0.0, est - zcrit * se), min(1.0, est + zcrit * se))
        if n_boot == 1:
            ci_pct = (float(reps[0]), float(reps[0]))
        elif pct_ok:
            lo, hi = np.quantile(reps, [alpha / 2, 1 - alpha / 2])
            ci_pct = (float(lo), float(hi))
        else:
            ci_pct = None
        out[name] = BootstrapResult(
            estimator=name,
            trait=trait,
            estimate=est,
            replicates=reps,
            se=se,
            ci_percentile=ci_pct,
            ci_normal=ci_normal,
            n_boot=n_boot,
            alpha=alpha,
            seed=seed,
            n_degenerate=int(degenerate.sum()),
        )
    return out
