"""Recruitment CSV files.

Layout: UTF-8, comma separated, header row required. Columns ``id``,
``recruiter_id`` (empty for seeds) and ``degree``; every other column is
a binary trait holding 0, 1 or an empty cell for a missing value. Rows
are in enrollment order, so a recruiter always appears above its
recruits.
"""

from __future__ import annotations

import csv
import math

import numpy as np

from ._validation import ValidationError
from .sampler import RecruitmentSample

REQUIRED_COLUMNS = ("id", "recruiter_id", "degree")
DEFAULT_DEGREE_CAP = 500


class RecruitmentFileError(ValidationError):
    """A recruitment CSV failed validation; ``line`` is the 1-based file line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _parse_int(text: str, line: int, column: str) -> int:
    try:
        value = float(text)
    except ValueError:
        raise RecruitmentFileError(line, f"{column} {text!r} is not a number") from None
    if not math.isfinite(value) or value != int(value):
        raise RecruitmentFileError(line, f"{column} {text!r} is not an integer")
    return int(value)


def _parse_trait(text: str, line: int, column: str) -> float:
    text = text.strip()
    if text == "" or text.upper() == "NA":
        return math.nan
    if text in ("0", "1", "0.0", "1.0"):
        return float(text)
    raise RecruitmentFileError(line, f"trait {column!r} has non-binary value {text!r}")


def parse_recruitment_csv(
    path,
    traits=None,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    n_coupons: int | None = None,
) -> RecruitmentSample:
    """Read and validate a recruitment file.

    ``traits`` restricts which trait columns are loaded (default: all
    non-structural columns). Degrees above ``degree_cap`` are rejected.
    """
    # utf-8-sig also accepts files saved with a byte-order mark
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise RecruitmentFileError(1, "file is empty; a header row is required") from None
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise RecruitmentFileError(1, f"header lacks required column(s) {missing}")
        if len(set(header)) != len(header):
            raise RecruitmentFileError(1, "duplicate column names in header")
        col = {name: i for i, name in enumerate(header)}
        trait_cols = [h for h in header if h not in REQUIRED_COLUMNS]
        if traits is not None:
            unknown = [t for t in traits if t not in col or t in REQUIRED_COLUMNS]
            if unknown:
                raise RecruitmentFileError(1, f"trait column(s) {unknown} not in header")
            trait_cols = list(traits)

        ids, degrees, recruiter = [], [], []
        values = {t: [] for t in trait_cols}
        row_of = {}
        recruits = {}
        for line, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(header):
                raise RecruitmentFileError(line, f"expected {len(header)} fields, got {len(row)}")
            rid = row[col["id"]].strip()
            if rid == "":
                raise RecruitmentFileError(line, "empty id")
            if rid in row_of:
                raise RecruitmentFileError(line, f"duplicate id {rid!r}")
            rec = row[col["recruiter_id"]].strip()
            if rec == "":
                recruiter.append(-1)
            elif rec in row_of:
                recruiter.append(row_of[rec])
                recruits[rec] = recruits.get(rec, 0) + 1
                if n_coupons is not None and recruits[rec] > n_coupons:
                    raise RecruitmentFileError(
                        line, f"recruiter {rec!r} has more than {n_coupons} recruits"
                    )
            elif rec == rid:
                raise RecruitmentFileError(line, f"respondent {rid!r} lists itself as recruiter")
            else:
                raise RecruitmentFileError(
                    line,
                    f"recruiter_id {rec!r} is unknown or appears later in the file "
                    "(rows must be in enrollment order)",
                )
            degree = _parse_int(row[col["degree"]], line, "degree")
            if degree < 1:
                raise RecruitmentFileError(line, f"degree must be >= 1, got {degree}")
            if degree > degree_cap:
                raise RecruitmentFileError(
                    line,
                    f"degree {degree} exceeds the cap of {degree_cap}; check the value "
                    "or raise the cap explicitly",
                )
            for t in trait_cols:
                values[t].append(_parse_trait(row[col[t]], line, t))
            row_of[rid] = len(ids)
            ids.append(rid)
            degrees.append(degree)
    if not ids:
        raise RecruitmentFileError(2, "file has no data rows")
    return RecruitmentSample(
        ids=ids,
        degrees=np.array(degrees, dtype=np.int64),
        recruiter=np.array(recruiter, dtype=np.int64),
        traits={t: np.array(v, dtype=float) for t, v in values.items()},
        n_coupons=n_coupons,
    )


def _format_trait(value: float) -> str:
    return "" if math.isnan(value) else str(int(value))


def write_recruitment_csv(sample: RecruitmentSample, path) -> None:
    names = sample.trait_names
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(REQUIRED_COLUMNS) + names)
        for row, rid in enumerate(sample.ids):
            rec = sample.recruiter[row]
            writer.writerow(
                [rid, "" if rec < 0 else sample.ids[rec], int(sample.degrees[row])]
                + [_format_trait(sample.traits[t][row]) for t in names]
            )


def write_inclusion_csv(inclusion, path) -> None:
    """Edge table with columns ``k,l,W,q_hat``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "l", "W", "q_hat"])
        for k, l, w, q in inclusion.edge_rows():
            writer.writerow([k, l, repr(w), repr(q)])


def write_nodal_csv(inclusion, path) -> None:
    """Per-degree table with columns ``k,N_hat,pi_hat,g_hat``."""
    counts = inclusion.distribution.as_dict()
    pi = inclusion.pi_dict()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "N_hat", "pi_hat", "g_hat"])
        for k, g in inclusion.g_dict().items():
            writer.writerow([k, counts[k], repr(pi.get(k, float("nan"))), repr(g)])
