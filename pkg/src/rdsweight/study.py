"""Simulation studies comparing the estimators, and the end-to-end
estimation pipeline for a single observed sample."""

from __future__ import annotations

import csv
import io as _io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .bootstrap import bootstrap_estimators
from .estimators import ESTIMATORS, NEEDS_INCLUSION, batch_estimates
from .inclusion import estimate_inclusion
from .network import NetworkTargets, generate_network, solve_block_probabilities
from .rng import stable_key, stream
from .sampler import SamplingConfig, draw_rds_sample

logger = logging.getLogger(__name__)

DEFAULT_MULTIPLIERS = (0.5, 0.75, 1.0, 1.25, 1.5)


@dataclass(frozen=True)
class InclusionConfig:
    resamples: int = 1000
    pi_draws: int = 1000
    pi_iterations: int = 6
    tolerance: float = 2e-3


@dataclass(frozen=True)
class StudyCondition:
    name: str
    targets: NetworkTargets
    sampling: SamplingConfig
    replications: int = 200
    estimators: tuple = ESTIMATORS

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown:
            raise ValueError(f"unknown estimators {unknown}")
        if self.sampling.sample_size > self.targets.n_nodes:
            raise ValueError(f"condition {self.name!r}: sample larger than the network")
        object.__setattr__(self, "estimators", tuple(self.estimators))

    @property
    def true_prevalence(self) -> float:
        return self.targets.n_infected / self.targets.n_nodes

    @classmethod
    def from_dict(cls, config: dict) -> "StudyCondition":
        sampling = dict(config["sampling"])
        if "recruitment_effectiveness" in sampling:
            sampling["recruitment_effectiveness"] = tuple(sampling["recruitment_effectiveness"])
        return cls(
            name=config["name"],
            targets=NetworkTargets(**config["network"]),
            sampling=SamplingConfig(**sampling),
            replications=int(config.get("replications", 200)),
            estimators=tuple(config.get("estimators", ESTIMATORS)),
        )

    def to_dict(self) -> dict:
        sampling = asdict(self.sampling)
        sampling["recruitment_effectiveness"] = list(sampling["recruitment_effectiveness"])
        return {
            "name": self.name,
            "network": asdict(self.targets),
            "sampling": sampling,
            "replications": self.replications,
            "estimators": list(self.estimators),
        }


@dataclass(eq=False)
class MseCell:
    condition: str
    estimator: str
    estimates: np.ndarray
    truth: float
    n_degenerate: int = 0
    n_failed: int = 0
    n_underfilled: int = 0
    multiplier: float = 1.0

    @property
    def replications(self) -> int:
        return int(self.estimates.size)

    @property
    def bias(self) -> float:
        return float(np.mean(self.estimates) - self.truth)

    @property
    def variance(self) -> float:
        return float(np.var(self.estimates))

    @property
    def mse(self) -> float:
        return float(np.mean((self.estimates - self.truth) ** 2))


@dataclass(eq=False)
class MseTable:
    cells: list
    metadata: dict = field(default_factory=dict)

    def cell(self, condition: str, estimator: str, multiplier: float = 1.0) -> MseCell:
        for c in self.cells:
            if c.condition == condition and c.estimator == estimator and c.multiplier == multiplier:
                return c
        raise KeyError((condition, estimator, multiplier))

    def mse(self, condition: str, estimator: str, multiplier: float = 1.0) -> float:
        return self.cell(condition, estimator, multiplier).mse

    def to_csv(self) -> str:
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["condition", "multiplier", "estimator", "mse", "bias", "variance",
             "replications", "degenerate", "failed", "underfilled"]
        )
        for c in self.cells:
            writer.writerow(
                [c.condition, repr(c.multiplier), c.estimator, repr(c.mse), repr(c.bias),
                 repr(c.variance), c.replications, c.n_degenerate, c.n_failed, c.n_underfilled]
            )
        return buf.getvalue()

    def replicates_csv(self) -> str:
        """Long-format replicate estimates, the data behind boxplots."""
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["condition", "multiplier", "estimator", "replicate", "estimate", "truth"])
        for c in self.cells:
            for i, v in enumerate(c.estimates):
                writer.writerow([c.condition, repr(c.multiplier), c.estimator, i,
                                 repr(float(v)), repr(c.truth)])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [
            {
                "condition": c.condition,
                "multiplier": c.multiplier,
                "estimator": c.estimator,
                "mse": c.mse,
                "bias": c.bias,
                "variance": c.variance,
                "replications": c.replications,
                "degenerate": c.n_degenerate,
                "failed": c.n_failed,
                "underfilled": c.n_underfilled,
            }
            for c in self.cells
        ]
        return json.dumps({"metadata": self.metadata, "cells": rows}, indent=2, sort_keys=True)


# --- replication workers -----------------------------------------------------

def _replication(task):
    """One network and, for each condition in the group, one RDS sample."""
    master_seed, targets, conditions, rep, inclusion_cfg, multipliers = task
    tkey = stable_key(targets)
    probs = solve_block_probabilities(targets)
    net = generate_network(probs, targets, stream(master_seed, tkey, rep, 0))
    out = []
    for cond in conditions:
        skey = stable_key(cond.sampling)
        sample = draw_rds_sample(net, cond.sampling, stream(master_seed, tkey, rep, 1, skey))
        d, z, rec = sample.degrees, sample.traits["z"].astype(np.int64), sample.recruiter
        results = {}
        for name in cond.estimators:
            if name in NEEDS_INCLUSION:
                continue
            results[(name, 1.0)] = _safe_estimate(name, d, z, rec, None)
        wants = [e for e in cond.estimators if e in NEEDS_INCLUSION]
        if wants:
            for mult in multipliers:
                n_supplied = int(round(mult * targets.n_nodes))
                if n_supplied < len(sample):
                    results.update({(e, mult): ("skipped", None) for e in wants})
                    continue
                # common random numbers across multipliers
                inc = estimate_inclusion(
                    d, n_supplied, cond.sampling.n_coupons,
                    resamples=inclusion_cfg.resamples,
                    pi_draws=inclusion_cfg.pi_draws,
                    pi_iterations=inclusion_cfg.pi_iterations,
                    tolerance=inclusion_cfg.tolerance,
                    random_state=stream(master_seed, tkey, rep, 2, skey),
                )
                for name in wants:
                    results[(name, mult)] = _safe_estimate(name, d, z, rec, inc)
        out.append((cond.name, sample.underfilled, results))
    return out


def _safe_estimate(name, d, z, rec, inc):
    try:
        est, degenerate, _ = batch_estimates(name, d, z, rec, inc)
    except (ValueError, KeyError) as exc:
        return ("failed", str(exc))
    return (float(est[0]), bool(degenerate[0]))


def _run(conditions, master_seed, inclusion_cfg, multipliers, n_jobs):
    groups: dict = {}
    for cond in conditions:
        groups.setdefault(cond.targets, []).append(cond)
    tasks = []
    for targets, conds in groups.items():
        reps = max(c.replications for c in conds)
        for rep in range(reps):
            active = tuple(c for c in conds if rep < c.replications)
            tasks.append((master_seed, targets, active, rep, inclusion_cfg, multipliers))
    if n_jobs and n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outputs = list(pool.map(_replication, tasks, chunksize=4))
    else:
        outputs = [_replication(t) for t in tasks]

    collected: dict = {}
    underfilled: dict = {}
    for per_rep in outputs:
        for name, under, results in per_rep:
            underfilled[name] = underfilled.get(name, 0) + int(under)
            for key, value in results.items():
                collected.setdefault((name, *key), []).append(value)

    cells = []
    for cond in conditions:
        for name in cond.estimators:
            mults = multipliers if name in NEEDS_INCLUSION else (1.0,)
            for mult in mults:
                values = collected.get((cond.name, name, mult), [])
                ok = [v for v in values if not isinstance(v[0], str)]
                failed = [v for v in values if v[0] == "failed"]
                if values and not ok and values[0][0] == "skipped":
                    logger.warning("condition %s: multiplier %s gives N < n; skipped", cond.name, mult)
                    continue
                cells.append(MseCell(
                    condition=cond.name,
                    estimator=name,
                    estimates=np.array([v[0] for v in ok], dtype=float),
                    truth=cond.true_prevalence,
                    n_degenerate=sum(v[1] for v in ok),
                    n_failed=len(failed),
                    n_underfilled=underfilled.get(cond.name, 0),
                    multiplier=float(mult),
                ))
    return cells


def run_simulation_study(conditions, master_seed: int = 0, inclusion: InclusionConfig | None = None,
                         n_jobs: int = 1) -> MseTable:
    """MSE, bias and variance of each estimator in each condition.

    Conditions sharing network targets are run on the same networks (one
    fresh RDS sample per condition on each). All randomness is keyed by
    ``(master_seed, targets, replication, sampling settings)``, so a cell
    does not change when other conditions are added to the study.
    """
    inclusion = inclusion or InclusionConfig()
    conditions = list(conditions)
    names = [c.name for c in conditions]
    if len(set(names)) != len(names):
        raise ValueError("condition names must be unique")
    cells = _run(conditions, master_seed, inclusion, (1.0,), n_jobs)
    return MseTable(cells, _metadata(conditions, master_seed, inclusion))


def misspecification_sweep(condition: StudyCondition, multipliers=DEFAULT_MULTIPLIERS,
                           master_seed: int = 0, inclusion: InclusionConfig | None = None,
                           n_jobs: int = 1) -> MseTable:
    """WSH error when the population size handed to the estimator is the
    true size times each multiplier. Networks and samples are those of
    :func:`run_simulation_study` for the same condition and seed."""
    inclusion = inclusion or InclusionConfig()
    cond = StudyCondition(condition.name, condition.targets, condition.sampling,
                          condition.replications, ("wsh",))
    cells = _run([cond], master_seed, inclusion, tuple(float(m) for m in multipliers), n_jobs)
    meta = _metadata([cond], master_seed, inclusion)
    meta["multipliers"] = [float(m) for m in multipliers]
    return MseTable(cells, meta)


def _metadata(conditions, master_seed, inclusion):
    return {
        "master_seed": master_seed,
        "version": __version__,
        "numpy": np.__version__,
        "inclusion": asdict(inclusion),
        "conditions": [c.to_dict() for c in conditions],
    }


def benchmark_conditions(replications: int = 200, n_nodes: int = 1000) -> list:
    """Seven benchmark settings crossing differential activity, homophily,
    recruitment effectiveness and sampling fraction, with prevalence 0.2,
    10 seeds and 2 coupons."""
    rows = [
        # name, DA, H, RE, fraction
        ("da1_h1_re11_f20", 1, 1, (1.0, 1.0), 0.2),
        ("da2_h1_re11_f20", 2, 1, (1.0, 1.0), 0.2),
        ("da2_h1_re11_f50", 2, 1, (1.0, 1.0), 0.5),
        ("da2_h1_re11_f70", 2, 1, (1.0, 1.0), 0.7),
        ("da2_h2_re11_f20", 2, 2, (1.0, 1.0), 0.2),
        ("da2_h1_re96_f20", 2, 1, (0.9, 0.6), 0.2),
        ("da2_h2_re96_f20", 2, 2, (0.9, 0.6), 0.2),
    ]
    out = []
    for name, da, h, re, frac in rows:
        mean_degree = 7.07 if da == 1 else 6.98
        targets = NetworkTargets(n_nodes, 0.2, mean_degree, float(h), float(da))
        sampling = SamplingConfig(int(round(frac * n_nodes)), 10, 2, re)
        out.append(StudyCondition(name, targets, sampling, replications))
    return out


# --- real-data pipeline ------------------------------------------------------

def inclusion_for_sample(sample, population_size, n_coupons, cfg: InclusionConfig | None = None,
                         seed: int = 0):
    """Inclusion estimates for an observed sample, seeded as in :func:`run_estimation`."""
    cfg = cfg or InclusionConfig()
    return estimate_inclusion(
        sample.degrees, population_size, n_coupons,
        resamples=cfg.resamples, pi_draws=cfg.pi_draws,
        pi_iterations=cfg.pi_iterations, tolerance=cfg.tolerance,
        random_state=stream(seed, 0),
    )


def run_estimation(
    sample,
    traits=None,
    estimators=ESTIMATORS,
    population_size: int | None = None,
    n_coupons: int | None = None,
    n_boot: int = 10_000,
    alpha: float = 0.05,
    seed: int = 0,
    inclusion: InclusionConfig | None = None,
    missing: str = "zero",
    replicates_path=None,
    inclusion_estimates=None,
) -> dict:
    """Point estimates, bootstrap SEs and intervals for every trait and
    estimator. Estimators that cannot run (for example SS without a
    population size) are reported under ``errors`` while the rest proceed.

    With ``replicates_path`` every bootstrap replicate is also written
    there as long-format CSV. ``inclusion_estimates`` skips the inclusion
    simulation and uses the given estimates instead.
    """
    inclusion_cfg = inclusion or InclusionConfig()
    traits = list(traits) if traits else sample.trait_names
    estimators = list(estimators)
    n_coupons = n_coupons if n_coupons is not None else sample.n_coupons
    errors, results = [], []

    inc = inclusion_estimates
    inc_error = None
    if inc is None and any(e in NEEDS_INCLUSION for e in estimators):
        if population_size is None:
            inc_error = "population size is required (--population-size)"
        elif n_coupons is None:
            inc_error = "number of coupons is required (--coupons)"
        elif population_size < len(sample):
            inc_error = f"population size {population_size} is smaller than the sample ({len(sample)})"
        else:
            inc = inclusion_for_sample(sample, population_size, n_coupons, inclusion_cfg, seed)
    replicate_rows = []
    runnable = []
    for name in estimators:
        if name not in ESTIMATORS:
            errors.append({"trait": None, "estimator": name, "error": "unknown estimator"})
        elif name in NEEDS_INCLUSION and inc is None:
            for t in traits:
                errors.append({"trait": t, "estimator": name, "error": inc_error})
        else:
            runnable.append(name)

    for ti, trait in enumerate(traits):
        d, z, rec = sample.arrays(trait, missing)
        boot = {}
        if n_boot and runnable:
            if n_coupons is None:
                for name in runnable:
                    errors.append({"trait": trait, "estimator": name,
                                   "error": "bootstrap needs the number of coupons (--coupons)"})
            else:
                try:
                    boot = bootstrap_estimators(
                        sample, trait, runnable, inc, n_boot, alpha,
                        np.random.SeedSequence(seed, spawn_key=(1, ti)), n_coupons, missing,
                    )
                except ValueError as exc:
                    for name in runnable:
                        errors.append({"trait": trait, "estimator": name,
                                       "error": f"bootstrap: {exc}"})
        for name in runnable:
            est, degenerate, inter = batch_estimates(name, d, z, rec, inc)
            entry = {
                "trait": trait,
                "estimator": name,
                "estimate": float(est[0]),
                "se": None,
                "ci_lo": None,
                "ci_hi": None,
                "flags": ["degenerate"] if degenerate[0] else [],
                "intermediates": {k: float(v[0]) for k, v in inter.items()},
            }
            if name in boot:
                b = boot[name]
                replicate_rows.extend(
                    (trait, name, i, repr(float(v))) for i, v in enumerate(b.replicates)
                )
                entry["se"] = b.se
                entry["ci_lo"], entry["ci_hi"] = b.ci
                entry["ci_normal"] = list(b.ci_normal)
                if b.ci_percentile is None:
                    entry["flags"].append("normal_ci_only")
                if b.n_degenerate:
                    entry["bootstrap_degenerate"] = b.n_degenerate
            results.append(entry)
    if replicates_path is not None:
        with open(replicates_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["trait", "estimator", "replicate", "estimate"])
            writer.writerows(replicate_rows)
    report = {
        "sample_size": len(sample),
        "n_seeds": sample.n_seeds,
        "max_wave": int(sample.waves.max()),
        "population_size": population_size,
        "n_coupons": n_coupons,
        "missing_policy": missing,
        "bootstrap": {"replicates": n_boot, "alpha": alpha, "seed": seed},
        "inclusion": asdict(inclusion_cfg),
        "results": results,
        "errors": errors,
    }
    if inc is not None:
        report["inclusion_diagnostics"] = list(inc.diagnostics)
    return report
