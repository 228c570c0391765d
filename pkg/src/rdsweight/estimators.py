"""Prevalence estimators for recruitment samples.

Five estimators share one set of batch kernels: every kernel takes 2-d
``(replicates, respondents)`` arrays of degrees and traits plus a
recruiter index shared by all rows, so a single sample and ten thousand
bootstrap replicates go through the same code.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import ValidationError
from .inclusion import InclusionEstimates, estimate_inclusion
from .sampler import RecruitmentSample

ESTIMATORS = ("mean", "vh", "ss", "sh", "wsh")
NEEDS_INCLUSION = ("ss", "wsh")


@dataclass
class PrevalenceEstimate:
    estimator: str
    trait: str
    estimate: float
    intermediates: dict = field(default_factory=dict)
    degenerate: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "trait": self.trait,
            "estimate": self.estimate,
            "degenerate": self.degenerate,
            "note": self.note,
            "intermediates": dict(self.intermediates),
        }


def combine_sh(d0, c01, d1, c10):
    """``D0 C01 / (D0 C01 + D1 C10)``, the final ratio shared by SH and WSH."""
    num = np.asarray(d0) * np.asarray(c01)
    return num / (num + np.asarray(d1) * np.asarray(c10))


# --- lookups -----------------------------------------------------------------

def _pi_lookup(pi, degrees: np.ndarray) -> np.ndarray:
    if isinstance(pi, InclusionEstimates) or hasattr(pi, "pi_for"):
        values = pi.pi_for(degrees)
    elif isinstance(pi, Mapping):
        uniq, inverse = np.unique(degrees, return_inverse=True)
        table = []
        for k in uniq:
            if int(k) not in pi:
                raise KeyError(f"degree {int(k)} has no inclusion probability")
            table.append(float(pi[int(k)]))
        values = np.asarray(table)[inverse].reshape(degrees.shape)
    elif callable(pi):
        values = np.asarray(pi(degrees), dtype=float)
    else:
        raise TypeError("pi must be InclusionEstimates, a mapping or a callable")
    values = np.asarray(values, dtype=float)
    if np.any(~(values > 0)):
        raise ValidationError("inclusion probabilities must be positive")
    return values


def _q_lookup(inclusion, from_degrees: np.ndarray, to_degrees: np.ndarray) -> np.ndarray:
    values = np.asarray(inclusion.q_for(from_degrees, to_degrees), dtype=float)
    if np.any(~(values > 0)):
        raise ValidationError("edge inclusion probabilities must be positive")
    return values


# --- batch kernels -----------------------------------------------------------

def _weighted_share(z, w):
    return (z * w).sum(axis=-1) / w.sum(axis=-1)


def _group_degree(d, z, node_w, k):
    member = z == k
    return (np.where(member, d * node_w, 0.0).sum(axis=-1)
            / np.where(member, node_w, 0.0).sum(axis=-1))


def _sh_kernel(d, z, rec, node_w, edge_w):
    """Shared SH/WSH computation. ``edge_w`` is per linked respondent."""
    n = z.shape[-1]
    n1 = z.sum(axis=-1)
    linked = rec >= 0
    pz = z[:, rec[linked]]
    cz = z[:, linked]
    out = {}
    for k in (1, 0):
        from_k = pz == k
        cross = np.where(from_k & (cz != k), edge_w, 0.0).sum(axis=-1)
        within = np.where(from_k & (cz == k), edge_w, 0.0).sum(axis=-1)
        out[k] = (cross, cross + within)
    with np.errstate(divide="ignore", invalid="ignore"):
        c10 = out[1][0] / out[1][1]
        c01 = out[0][0] / out[0][1]
        d1 = _group_degree(d, z, node_w, 1)
        d0 = _group_degree(d, z, node_w, 0)
        mu = combine_sh(d0, c01, d1, c10)
    mean = n1 / n
    all0, all1 = n1 == 0, n1 == n
    undefined = ~all0 & ~all1 & ~np.isfinite(mu)
    mu = np.where(undefined, mean, mu)
    mu = np.where(all0, 0.0, np.where(all1, 1.0, mu))
    degenerate = all0 | all1 | undefined
    return mu, degenerate, {"C01": c01, "C10": c10, "D0": d0, "D1": d1}


def batch_estimates(estimator: str, degrees, z, recruiter, inclusion=None):
    """Evaluate ``estimator`` on each row of ``(degrees, z)``.

    Returns ``(estimates, degenerate, intermediates)``; intermediates is a
    dict of arrays for ``sh``/``wsh`` and empty otherwise.
    """
    d = np.atleast_2d(np.asarray(degrees, dtype=float))
    z = np.atleast_2d(np.asarray(z, dtype=float))
    rec = np.asarray(recruiter, dtype=np.int64)
    if d.shape != z.shape or d.shape[-1] != rec.size:
        raise ValueError("degrees, traits and recruiter must align")
    if d.shape[-1] == 0:
        raise ValidationError("cannot estimate from an empty sample")
    if np.any(d < 1):
        raise ValidationError("respondent degrees must be >= 1")
    rows = d.shape[0]
    none = np.zeros(rows, dtype=bool)
    if estimator == "mean":
        return z.mean(axis=-1), none, {}
    if estimator == "vh":
        return _weighted_share(z, 1.0 / d), none, {}
    if estimator in NEEDS_INCLUSION and inclusion is None:
        raise ValueError(f"estimator {estimator!r} needs inclusion probabilities")
    if estimator == "ss":
        return _weighted_share(z, 1.0 / _pi_lookup(inclusion, d.astype(np.int64))), none, {}
    if estimator == "sh":
        edge_w = np.ones((rows, int(np.sum(rec >= 0))))
        return _sh_kernel(d, z, rec, 1.0 / d, edge_w)
    if estimator == "wsh":
        di = d.astype(np.int64)
        linked = rec >= 0
        node_w = 1.0 / _pi_lookup(inclusion, di)
        edge_w = 1.0 / _q_lookup(inclusion, di[:, rec[linked]], di[:, linked])
        return _sh_kernel(d, z, rec, node_w, edge_w)
    raise ValueError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")


# --- single-sample API -------------------------------------------------------

def _estimate(estimator, sample: RecruitmentSample, trait: str, inclusion, missing):
    d, z, rec = sample.arrays(trait, missing)
    est, degenerate, inter = batch_estimates(estimator, d, z, rec, inclusion)
    note = ""
    if degenerate[0]:
        n1 = int(z.sum())
        if n1 == 0 or n1 == z.size:
            note = "only one group present in the sample"
        else:
            note = "cross-group proportion undefined; fell back to the sample mean"
    return PrevalenceEstimate(
        estimator=estimator,
        trait=trait,
        estimate=float(est[0]),
        intermediates={k: float(v[0]) for k, v in inter.items()},
        degenerate=bool(degenerate[0]),
        note=note,
    )


def estimate_mean(sample, trait="z", missing="zero") -> PrevalenceEstimate:
    """Sample proportion carrying the trait."""
    return _estimate("mean", sample, trait, None, missing)


def estimate_vh(sample, trait="z", missing="zero") -> PrevalenceEstimate:
    """Inverse-degree weighted proportion."""
    return _estimate("vh", sample, trait, None, missing)


def estimate_ss(sample, trait="z", pi=None, missing="zero") -> PrevalenceEstimate:
    """Proportion weighted by inverse successive-sampling inclusion
    probability. ``pi`` is an :class:`InclusionEstimates`, a mapping from
    degree to probability, or a callable on a degree array."""
    return _estimate("ss", sample, trait, pi, missing)


def estimate_sh(sample, trait="z", missing="zero") -> PrevalenceEstimate:
    """Salganik-Heckathorn estimate from cross-group recruitment shares
    and harmonic-mean group degrees.

    Samples with only one group return 0 or 1; samples where a
    cross-group share is undefined, or both are zero, return the sample
    mean. Both cases set ``degenerate``.
    """
    return _estimate("sh", sample, trait, None, missing)


def estimate_wsh(sample, trait="z", inclusion=None, missing="zero") -> PrevalenceEstimate:
    """Weighted SH estimate.

    Each observed recruitment is weighted by the inverse edge inclusion
    probability of its (recruiter degree, recruit degree) pair and group
    mean degrees are weighted by inverse nodal inclusion probabilities.
    Degenerate samples are handled as in :func:`estimate_sh`.
    """
    return _estimate("wsh", sample, trait, inclusion, missing)


ESTIMATOR_FUNCTIONS = {
    "mean": estimate_mean,
    "vh": estimate_vh,
    "ss": estimate_ss,
    "sh": estimate_sh,
    "wsh": estimate_wsh,
}


# --- estimator objects -------------------------------------------------------

class _PrevalenceEstimator(BaseEstimator):
    """Common ``fit`` plumbing; subclasses set ``_tag``."""

    _tag = ""

    def _inclusion_for(self, sample):
        return None

    def fit(self, X: RecruitmentSample, y=None, trait="z"):
        if not isinstance(X, RecruitmentSample):
            raise TypeError("fit expects a RecruitmentSample")
        self.result_ = _estimate(self._tag, X, trait, self._inclusion_for(X), self.missing)
        self.estimate_ = self.result_.estimate
        self.trait_ = trait
        return self

    def fit_estimate(self, X, trait="z") -> float:
        return self.fit(X, trait=trait).estimate_

    @property
    def degenerate_(self) -> bool:
        check_is_fitted(self, "result_")
        return self.result_.degenerate


class SampleMeanEstimator(_PrevalenceEstimator):
    _tag = "mean"

    def __init__(self, missing="zero"):
        self.missing = missing


class VHEstimator(_PrevalenceEstimator):
    _tag = "vh"

    def __init__(self, missing="zero"):
        self.missing = missing


class SHEstimator(_PrevalenceEstimator):
    _tag = "sh"

    def __init__(self, missing="zero"):
        self.missing = missing


class _InclusionBased(_PrevalenceEstimator):
    def __init__(
        self,
        population_size=None,
        n_coupons=None,
        inclusion=None,
        resamples=1000,
        pi_draws=1000,
        pi_iterations=6,
        random_state=None,
        missing="zero",
    ):
        self.population_size = population_size
        self.n_coupons = n_coupons
        self.inclusion = inclusion
        self.resamples = resamples
        self.pi_draws = pi_draws
        self.pi_iterations = pi_iterations
        self.random_state = random_state
        self.missing = missing

    def _inclusion_for(self, sample):
        if self.inclusion is not None:
            self.inclusion_ = self.inclusion
            return self.inclusion
        if self.population_size is None:
            raise ValueError(f"{type(self).__name__} needs population_size or inclusion")
        n_coupons = self.n_coupons if self.n_coupons is not None else sample.n_coupons
        if n_coupons is None:
            raise ValueError("n_coupons is unknown; pass it explicitly")
        self.inclusion_ = estimate_inclusion(
            sample.degrees,
            self.population_size,
            n_coupons,
            resamples=self.resamples,
            pi_draws=self.pi_draws,
            pi_iterations=self.pi_iterations,
            random_state=self.random_state,
        )
        return self.inclusion_


class SSEstimator(_InclusionBased):
    _tag = "ss"


class WeightedSHEstimator(_InclusionBased):
    _tag = "wsh"
