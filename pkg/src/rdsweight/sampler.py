"""Simulated respondent-driven sampling and the recruitment-chain record."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    ValidationError,
    check_binary,
    check_degrees,
    check_positive_int,
    check_probability,
    check_random_state,
)
from .network import Network
from .ppswor import successive_sample

MISSING_POLICIES = ("zero", "drop")


@dataclass(frozen=True)
class SamplingConfig:
    """Settings for one simulated RDS draw.

    ``recruitment_effectiveness`` holds the per-coupon success
    probability for (infected, uninfected) recruiters.
    """

    sample_size: int
    n_seeds: int = 10
    n_coupons: int = 2
    recruitment_effectiveness: tuple[float, float] = (1.0, 1.0)
    seed_rule: str = "degree"
    seed: int | None = None

    def __post_init__(self):
        check_positive_int(self.sample_size, "sample_size")
        check_positive_int(self.n_seeds, "n_seeds")
        check_positive_int(self.n_coupons, "n_coupons", minimum=0)
        if self.n_seeds > self.sample_size:
            raise ValueError("n_seeds cannot exceed sample_size")
        rho = tuple(self.recruitment_effectiveness)
        if len(rho) != 2:
            raise ValueError("recruitment_effectiveness needs two probabilities")
        object.__setattr__(
            self,
            "recruitment_effectiveness",
            tuple(check_probability(r, "recruitment_effectiveness") for r in rho),
        )
        if self.seed_rule not in ("degree", "uniform"):
            raise ValueError(f"unknown seed_rule {self.seed_rule!r}")


@dataclass(eq=False)
class RecruitmentSample:
    """Respondents in enrollment order.

    ``recruiter[i]`` is the row index of respondent ``i``'s recruiter, or
    -1 for a seed. Trait columns are float arrays with NaN marking a
    missing value.
    """

    ids: list
    degrees: np.ndarray
    recruiter: np.ndarray
    traits: dict = field(default_factory=dict)
    n_coupons: int | None = None
    nodes: np.ndarray | None = None
    underfilled: bool = False
    waves: np.ndarray = field(init=False)

    def __post_init__(self):
        self.ids = [str(v) for v in self.ids]
        n = len(self.ids)
        if len(set(self.ids)) != n:
            seen = set()
            for row, v in enumerate(self.ids):
                if v in seen:
                    raise ValidationError(f"row {row}: duplicate id {v!r}")
                seen.add(v)
        self.degrees = check_degrees(self.degrees)
        self.recruiter = np.asarray(self.recruiter, dtype=np.int64)
        if self.degrees.shape != (n,) or self.recruiter.shape != (n,):
            raise ValidationError("ids, degrees and recruiter must have equal length")
        self.waves = np.zeros(n, dtype=np.int64)
        for row in range(n):
            rec = self.recruiter[row]
            if rec < -1 or rec >= row:
                raise ValidationError(
                    f"row {row}: recruiter index {rec} must refer to an earlier respondent"
                )
            if rec >= 0:
                self.waves[row] = self.waves[rec] + 1
        self.traits = {
            str(name): check_binary(col, f"trait {name!r}") for name, col in self.traits.items()
        }
        for name, col in self.traits.items():
            if col.shape != (n,):
                raise ValidationError(f"trait {name!r} must have one value per respondent")
        if self.n_coupons is not None:
            counts = np.bincount(self.recruiter[self.recruiter >= 0], minlength=n)
            over = np.flatnonzero(counts > self.n_coupons)
            if over.size:
                raise ValidationError(
                    f"row {int(over[0])}: {int(counts[over[0]])} recruits exceeds "
                    f"{self.n_coupons} coupons"
                )
        if self.nodes is not None:
            self.nodes = np.asarray(self.nodes, dtype=np.int64)
            if np.unique(self.nodes).size != n:
                raise ValidationError("a node appears more than once in the sample")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def is_seed(self) -> np.ndarray:
        return self.recruiter < 0

    @property
    def n_seeds(self) -> int:
        return int(np.sum(self.recruiter < 0))

    @property
    def trait_names(self) -> list:
        return list(self.traits)

    def trait(self, name: str, missing: str = "zero") -> np.ndarray:
        """Trait column as floats; with ``missing="zero"`` NaNs become 0."""
        if name not in self.traits:
            raise KeyError(f"unknown trait {name!r}; have {self.trait_names}")
        if missing not in MISSING_POLICIES:
            raise ValueError(f"missing policy must be one of {MISSING_POLICIES}")
        col = self.traits[name]
        if missing == "zero":
            return np.nan_to_num(col, nan=0.0)
        return col

    def arrays(self, name: str, missing: str = "zero"):
        """``(degrees, z, recruiter)`` ready for the estimators.

        Under ``missing="drop"`` rows with a missing value are removed and
        respondents whose recruiter was removed lose their incoming link.
        """
        z = self.trait(name, missing)
        if missing == "zero" or not np.isnan(z).any():
            return self.degrees, z.astype(np.int64), self.recruiter
        keep = ~np.isnan(z)
        new_index = np.cumsum(keep) - 1
        rec = self.recruiter[keep]
        has_rec = rec >= 0
        linked = np.zeros(rec.shape, dtype=bool)
        linked[has_rec] = keep[rec[has_rec]]
        rec = np.where(linked, new_index[np.where(has_rec, rec, 0)], -1)
        return self.degrees[keep], z[keep].astype(np.int64), rec

    def with_traits(self, traits: dict) -> "RecruitmentSample":
        return RecruitmentSample(
            list(self.ids), self.degrees.copy(), self.recruiter.copy(), dict(traits),
            self.n_coupons, None if self.nodes is None else self.nodes.copy(), self.underfilled,
        )


def recruitment_tallies(sample: RecruitmentSample, trait: str, missing: str = "zero") -> dict:
    """Counts of recruiter-to-recruit pairs keyed by (recruiter trait, recruit trait)."""
    _, z, rec = sample.arrays(trait, missing)
    return _tallies(z, rec)


def _tallies(z: np.ndarray, rec: np.ndarray) -> dict:
    linked = rec >= 0
    parent = z[rec[linked]]
    child = z[linked]
    return {
        (k, l): int(np.sum((parent == k) & (child == l))) for k in (1, 0) for l in (1, 0)
    }


def draw_rds_sample(net: Network, cfg: SamplingConfig, random_state=None) -> RecruitmentSample:
    """Simulate one RDS sample on ``net``.

    Respondents are processed first-in first-out. Each coupon succeeds with
    the recruiter's group probability and then goes to a uniformly chosen
    unsampled neighbour; dead chains are restarted with a fresh seed drawn
    by the same rule. Sampling stops the moment ``sample_size`` is reached.
    """
    rng = check_random_state(cfg.seed if random_state is None else random_state)
    n_target = cfg.sample_size
    if n_target > net.n_nodes:
        raise ValueError("sample_size exceeds the number of nodes")
    degrees = net.degrees
    rho1, rho0 = cfg.recruitment_effectiveness
    sampled = np.zeros(net.n_nodes, dtype=bool)
    order: list[int] = []
    recruiter: list[int] = []
    queue: deque = deque()

    def enroll(node: int, rec: int) -> None:
        sampled[node] = True
        queue.append((node, len(order)))
        order.append(int(node))
        recruiter.append(rec)

    def pick_seeds(k: int) -> np.ndarray:
        eligible = np.flatnonzero(~sampled & (degrees > 0))
        k = min(k, eligible.size)
        if k == 0:
            return eligible
        if cfg.seed_rule == "degree":
            return eligible[successive_sample(degrees[eligible], k, rng)]
        return rng.choice(eligible, size=k, replace=False)

    for s in pick_seeds(cfg.n_seeds):
        enroll(s, -1)
    underfilled = False
    while len(order) < n_target:
        if not queue:
            fresh = pick_seeds(1)
            if fresh.size == 0:
                underfilled = True
                break
            enroll(fresh[0], -1)
            continue
        node, row = queue.popleft()
        rho = rho1 if net.traits[node] == 1 else rho0
        for _ in range(cfg.n_coupons):
            if len(order) >= n_target:
                break
            if rng.random() >= rho:
                continue
            nbrs = net.neighbors(node)
            avail = nbrs[~sampled[nbrs]]
            if avail.size == 0:
                continue
            enroll(avail[rng.integers(avail.size)], row)
    nodes = np.array(order, dtype=np.int64)
    return RecruitmentSample(
        ids=[str(v) for v in nodes],
        degrees=degrees[nodes],
        recruiter=np.array(recruiter, dtype=np.int64),
        traits={"z": net.traits[nodes].astype(float)},
        n_coupons=cfg.n_coupons,
        nodes=nodes,
        underfilled=underfilled,
    )
