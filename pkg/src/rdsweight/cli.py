"""Command-line entry point: ``rdsweight {estimate,simulate,sweep-n,inclusion}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ._validation import ValidationError
from .estimators import ESTIMATORS
from .io import DEFAULT_DEGREE_CAP, parse_recruitment_csv, write_inclusion_csv, write_nodal_csv
from .rng import SEED_ENV_VAR, default_seed
from .study import (
    DEFAULT_MULTIPLIERS,
    InclusionConfig,
    StudyCondition,
    benchmark_conditions,
    inclusion_for_sample,
    misspecification_sweep,
    run_estimation,
    run_simulation_study,
)

log = logging.getLogger("rdsweight")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help=f"master seed (default: ${SEED_ENV_VAR} or 0)")
    p.add_argument("--resamples", "-M", type=int, default=None,
                   help="successive-sampling resamples for edge probabilities (default 1000)")


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("csv", help="recruitment CSV (id, recruiter_id, degree, trait columns)")
    p.add_argument("--population-size", "-N", type=int, default=None)
    p.add_argument("--coupons", type=int, default=None, help="maximum coupons per respondent")
    p.add_argument("--degree-cap", type=int, default=DEFAULT_DEGREE_CAP)
    p.add_argument("--traits", nargs="+", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rdsweight", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate prevalence from a recruitment CSV")
    _add_data_args(est)
    _add_common(est)
    est.add_argument("--estimators", nargs="+", default=list(ESTIMATORS), choices=ESTIMATORS)
    est.add_argument("--bootstrap-reps", type=int, default=10_000)
    est.add_argument("--alpha", type=float, default=0.05)
    est.add_argument("--missing-policy", choices=("zero", "drop"), default="zero")
    est.add_argument("--output", "-o", default=None, help="JSON report path (default stdout)")
    est.add_argument("--replicates", default=None, help="write bootstrap replicates to this CSV")
    est.add_argument("--dump-inclusion", default=None, metavar="PREFIX",
                     help="write PREFIX_edges.csv (k,l,W,q_hat) and PREFIX_nodes.csv")

    sim = sub.add_parser("simulate", help="run an estimator-comparison simulation study")
    sim.add_argument("--config", default=None, help="study JSON (default: built-in benchmark conditions)")
    sim.add_argument("--replications", type=int, default=None, help="override replications")
    sim.add_argument("--conditions", nargs="+", default=None, help="run only these conditions")
    sim.add_argument("--output-dir", default="study_output")
    sim.add_argument("--jobs", type=int, default=1)
    _add_common(sim)

    sweep = sub.add_parser("sweep-n", help="WSH under a misspecified population size")
    sweep.add_argument("--config", default=None)
    sweep.add_argument("--condition", default="da2_h2_re96_f20")
    sweep.add_argument("--multipliers", nargs="+", type=float, default=list(DEFAULT_MULTIPLIERS))
    sweep.add_argument("--replications", type=int, default=None)
    sweep.add_argument("--output-dir", default="study_output")
    sweep.add_argument("--jobs", type=int, default=1)
    _add_common(sweep)

    inc = sub.add_parser("inclusion", help="dump nodal and edge inclusion estimates")
    _add_data_args(inc)
    _add_common(inc)
    inc.add_argument("--output", "-o", required=True, metavar="PREFIX")
    return parser


def _seed(args, config: dict | None = None) -> int:
    if args.seed is not None:
        return args.seed
    fallback = int(config.get("master_seed", 0)) if config else 0
    return default_seed(fallback)


def _inclusion_cfg(args, config: dict | None = None) -> InclusionConfig:
    raw = dict(config.get("inclusion", {})) if config else {}
    if args.resamples is not None:
        raw["resamples"] = args.resamples
    return InclusionConfig(**raw)


def load_study_config(path) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def study_conditions(config: dict, replications: int | None = None) -> list:
    if config.get("conditions"):
        conds = [StudyCondition.from_dict(c) for c in config["conditions"]]
    else:
        conds = benchmark_conditions(int(config.get("replications", 200)))
    if replications is not None:
        conds = [StudyCondition(c.name, c.targets, c.sampling, replications, c.estimators)
                 for c in conds]
    return conds


def _write_table(table, out_dir: Path, stem: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{stem}.csv").write_text(table.to_csv(), encoding="utf-8")
    (out_dir / f"{stem}.json").write_text(table.to_json() + "\n", encoding="utf-8")
    (out_dir / f"{stem}_replicates.csv").write_text(table.replicates_csv(), encoding="utf-8")


def cmd_estimate(args) -> int:
    sample = parse_recruitment_csv(args.csv, traits=args.traits, degree_cap=args.degree_cap,
                                   n_coupons=args.coupons)
    seed = _seed(args)
    cfg = _inclusion_cfg(args)
    inc = None
    if args.population_size is not None and args.coupons is not None \
            and args.population_size >= len(sample):
        inc = inclusion_for_sample(sample, args.population_size, args.coupons, cfg, seed)
        if args.dump_inclusion:
            write_inclusion_csv(inc, f"{args.dump_inclusion}_edges.csv")
            write_nodal_csv(inc, f"{args.dump_inclusion}_nodes.csv")
    report = run_estimation(
        sample,
        traits=args.traits,
        estimators=args.estimators,
        population_size=args.population_size,
        n_coupons=args.coupons,
        n_boot=args.bootstrap_reps,
        alpha=args.alpha,
        seed=seed,
        inclusion=cfg,
        missing=args.missing_policy,
        replicates_path=args.replicates,
        inclusion_estimates=inc,
    )
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    for err in report["errors"]:
        log.error("%s/%s: %s", err["trait"], err["estimator"], err["error"])
    return 1 if report["errors"] else 0


def cmd_simulate(args) -> int:
    config = load_study_config(args.config)
    conds = study_conditions(config, args.replications)
    if args.conditions:
        wanted = set(args.conditions)
        conds = [c for c in conds if c.name in wanted]
        if not conds:
            raise SystemExit(f"no conditions named {sorted(wanted)}")
    table = run_simulation_study(conds, _seed(args, config), _inclusion_cfg(args, config),
                                 n_jobs=args.jobs)
    _write_table(table, Path(args.output_dir), "mse")
    sys.stdout.write(table.to_csv())
    return 0


def cmd_sweep(args) -> int:
    config = load_study_config(args.config)
    sweep_cfg = config.get("sweep", {})
    name = sweep_cfg.get("condition", args.condition)
    multipliers = sweep_cfg.get("multipliers", args.multipliers)
    by_name = {c.name: c for c in study_conditions(config, args.replications)}
    if name not in by_name:
        raise SystemExit(f"unknown condition {name!r}; have {sorted(by_name)}")
    table = misspecification_sweep(by_name[name], multipliers, _seed(args, config),
                                   _inclusion_cfg(args, config), n_jobs=args.jobs)
    _write_table(table, Path(args.output_dir), "sweep")
    sys.stdout.write(table.to_csv())
    return 0


def cmd_inclusion(args) -> int:
    if args.population_size is None or args.coupons is None:
        raise SystemExit("inclusion needs --population-size and --coupons")
    sample = parse_recruitment_csv(args.csv, traits=args.traits, degree_cap=args.degree_cap,
                                   n_coupons=args.coupons)
    inc = inclusion_for_sample(sample, args.population_size, args.coupons,
                               _inclusion_cfg(args), _seed(args))
    write_inclusion_csv(inc, f"{args.output}_edges.csv")
    write_nodal_csv(inc, f"{args.output}_nodes.csv")
    return 0


COMMANDS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "sweep-n": cmd_sweep,
    "inclusion": cmd_inclusion,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"rdsweight: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
