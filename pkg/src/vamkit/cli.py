"""Command-line front end: simulate, fit, compare, breakdown, validate.

Every writing subcommand gets an --out directory and leaves exactly one
manifest.json there recording the command line, SHA-256 digests of the
input files, the seed (if any), the tool version, the output file list and
the wall time. Identical inputs and flags produce byte-identical outputs
(manifests differ only in wall time). Files are written atomically
(temp file + rename).

Exit codes: 0 success, 1 validation or computation failure, 2 usage error.
Randomness exists only in `simulate --seed`; fitting is seed-free. The
VAMKIT_THREADS environment variable caps how many measures are computed in
parallel (default 1); results do not depend on it.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .analysis import (
    PUPIL_CHARACTERISTICS,
    SCHOOL_CHARACTERISTICS,
    BreakdownTable,
    compare_measures,
    pupil_breakdown,
    school_breakdown,
)
from .cohort import parse_pupils, parse_schools, validate_cohort
from .design import MeasureKind
from .errors import VamkitError
from .measures import (
    MeasureResult,
    SchoolScore,
    SignificanceCategory,
    compute_measure,
)
from .ols import cluster_robust_cov, coefficient_table
from .synthgen import GeneratorConfig, generate_population, write_population_csv

_MEASURES_BY_CODE = {kind.code: kind for kind in MeasureKind}
_CATEGORY_BY_VALUE = {c.value: c for c in SignificanceCategory}


def _parse_measures(text: str) -> list[MeasureKind]:
    if text.strip().lower() == "all":
        return list(MeasureKind)
    kinds = []
    for code in text.split(","):
        code = code.strip().lower()
        if code not in _MEASURES_BY_CODE:
            raise argparse.ArgumentTypeError(
                f"unknown measure {code!r}; valid: all, {', '.join(_MEASURES_BY_CODE)}"
            )
        kind = _MEASURES_BY_CODE[code]
        if kind not in kinds:
            kinds.append(kind)
    return kinds


def _parse_thresholds(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"thresholds must be integers, got {text!r}")
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("thresholds must be positive integers")
    return values


def _parse_precision(text: str):
    if text.strip().lower() == "full":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"precision must be 'full' or an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError("precision must be nonnegative")
    return value


def _formatter(precision):
    if precision is None:
        return lambda x: repr(float(x))
    return lambda x: f"{float(x):.{precision}f}"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(f".tmp.{path.name}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _thread_cap() -> int:
    raw = os.environ.get("VAMKIT_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _compute_all(cohort, kinds) -> dict[MeasureKind, MeasureResult]:
    workers = min(_thread_cap(), len(kinds))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda k: compute_measure(cohort, k), kinds))
    else:
        results = [compute_measure(cohort, k) for k in kinds]
    return {r.measure: r for r in results}


def _load_cohort(pupils_path: Path, schools_path: Path):
    pupils, pupil_issues = parse_pupils(pupils_path.read_bytes())
    schools, school_issues = parse_schools(schools_path.read_bytes())
    for issue in pupil_issues:
        print(f"{pupils_path.name}: skipped {issue}", file=sys.stderr)
    for issue in school_issues:
        print(f"{schools_path.name}: skipped {issue}", file=sys.stderr)
    return validate_cohort(pupils, schools)


# ---------------------------------------------------------------------------
# Output serialisation
# ---------------------------------------------------------------------------


def _csv_lines(header: list[str], rows: list[list[str]]) -> bytes:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return ("\n".join(lines) + "\n").encode("utf-8")


def _coefficients_csv(result: MeasureResult, cluster_ids: list[str], fmt) -> bytes:
    cov = cluster_robust_cov(result.fit, result.design, cluster_ids)
    rows = []
    for row in coefficient_table(result.fit, cov):
        if row.estimate is None:
            rows.append([row.label, "", "", "0"])
        else:
            rows.append([row.label, fmt(row.estimate), fmt(row.se), "1" if row.significant else "0"])
    return _csv_lines(["label", "estimate", "se", "significant"], rows)


def _school_scores_csv(scores: list[SchoolScore], fmt) -> bytes:
    rows = [
        [
            s.school_id,
            s.measure.code,
            fmt(s.score),
            str(s.n_pupils),
            fmt(s.ci_low),
            fmt(s.ci_high),
            s.category.value,
        ]
        for s in scores
    ]
    return _csv_lines(
        ["school_id", "measure", "score", "n_pupils", "ci_low", "ci_high", "category"], rows
    )


def _summary_csv(results: dict[MeasureKind, MeasureResult], fmt) -> bytes:
    rows = []
    for kind, res in results.items():
        s = res.summary
        rows.append(
            [
                kind.code,
                fmt(s.adjusted_r_squared),
                fmt(s.sd_pupil_scores),
                fmt(s.sd_school_scores),
                str(s.n_pupils),
                str(s.n_schools),
                fmt(s.national_mean_grades),
            ]
        )
    return _csv_lines(
        [
            "measure",
            "adjusted_r_squared",
            "sd_pupil_scores",
            "sd_school_scores",
            "n_pupils",
            "n_schools",
            "national_mean_grades",
        ],
        rows,
    )


def _breakdown_csv(table: BreakdownTable, kinds: list[MeasureKind], fmt) -> bytes:
    header = ["category", "n_pupils", "n_schools", "percent"]
    for kind in kinds:
        header += [f"mean_{kind.code}", f"significant_{kind.code}"]
    rows = []
    for row in table.rows:
        out = [row.category, str(row.n_pupils), str(row.n_schools), f"{row.percent:.1f}"]
        for kind in kinds:
            mean = row.means[kind]
            flag = row.significant[kind]
            out.append("" if mean is None else fmt(mean))
            out.append("" if flag is None else ("1" if flag else "0"))
        rows.append(out)
    body = _csv_lines(header, rows)
    if table.footnotes:
        notes = "".join(f"# {note}\n" for note in table.footnotes)
        body += notes.encode("utf-8")
    return body


def _read_school_scores(path: Path) -> list[SchoolScore]:
    """Read a school_scores.csv produced by `fit`."""
    text = path.read_bytes().decode("utf-8")
    reader = csv.DictReader(io.StringIO(text, newline=""))
    expected = {"school_id", "measure", "score", "n_pupils", "ci_low", "ci_high", "category"}
    if reader.fieldnames is None or set(reader.fieldnames) != expected:
        raise VamkitError(f"{path}: not a school_scores.csv file")
    out = []
    for row in reader:
        out.append(
            SchoolScore(
                school_id=row["school_id"],
                measure=_MEASURES_BY_CODE[row["measure"]],
                score=float(row["score"]),
                n_pupils=int(row["n_pupils"]),
                ci_low=float(row["ci_low"]),
                ci_high=float(row["ci_high"]),
                category=_CATEGORY_BY_VALUE[row["category"]],
            )
        )
    if not out:
        raise VamkitError(f"{path}: no school scores")
    return out


# ---------------------------------------------------------------------------
# Subcommand handlers; each returns (inputs, seed, outputs written)
# ---------------------------------------------------------------------------


def _cmd_simulate(args, out_dir: Path):
    overrides = {}
    inputs = {}
    if args.config is not None:
        config_path = Path(args.config)
        inputs[str(config_path)] = _sha256(config_path)
        loaded = json.loads(config_path.read_text(encoding="utf-8"))
        if not isinstance(loaded, dict):
            raise VamkitError(f"{config_path}: config must be a JSON object")
        overrides.update(loaded)
    if args.schools is not None:
        overrides["n_schools"] = args.schools
    if args.seed is not None:
        overrides["seed"] = args.seed
    if "school_size_range" in overrides:
        overrides["school_size_range"] = tuple(overrides["school_size_range"])
    try:
        config = GeneratorConfig(**overrides)
    except TypeError as exc:
        raise VamkitError(f"invalid generator config: {exc}") from exc

    synthetic = generate_population(config)
    outputs = write_population_csv(synthetic)
    for name, data in outputs.items():
        _write_atomic(out_dir / name, data)
    return inputs, config.seed, sorted(outputs)


def _cmd_fit(args, out_dir: Path):
    pupils_path, schools_path = Path(args.pupils), Path(args.schools)
    inputs = {str(pupils_path): _sha256(pupils_path), str(schools_path): _sha256(schools_path)}
    cohort = _load_cohort(pupils_path, schools_path)
    cluster_ids = [p.school_id for p in cohort.pupils]
    fmt = _formatter(args.precision)

    results = _compute_all(cohort, args.measures)
    written = []
    for kind in args.measures:
        res = results[kind]
        name = f"coefficients_{kind.code}.csv"
        _write_atomic(out_dir / name, _coefficients_csv(res, cluster_ids, fmt))
        written.append(name)
        name = f"school_scores_{kind.code}.csv"
        _write_atomic(out_dir / name, _school_scores_csv(res.school_scores, fmt))
        written.append(name)
    _write_atomic(out_dir / "summary.csv", _summary_csv(results, fmt))
    written.append("summary.csv")
    return inputs, None, sorted(written)


def _cmd_compare(args, out_dir: Path):
    if len(args.scores) != 2:
        raise VamkitError("compare needs exactly two --scores files")
    path_a, path_b = (Path(p) for p in args.scores)
    inputs = {str(path_a): _sha256(path_a), str(path_b): _sha256(path_b)}
    a = _read_school_scores(path_a)
    b = _read_school_scores(path_b)
    report = compare_measures(a, b, args.thresholds)
    payload = {
        "pair": list(report.measure_pair),
        "pearson_r": report.pearson_r,
        "n_schools": report.n_schools,
        "quadrants": {
            "nw": report.quadrant_counts.nw,
            "ne": report.quadrant_counts.ne,
            "sw": report.quadrant_counts.sw,
            "se": report.quadrant_counts.se,
        },
        "movements": [
            {
                "threshold": t,
                "count": c,
                "percent": 100.0 * c / report.n_schools,
            }
            for t, c in report.movement_counts.items()
        ],
        "max_rank_change": report.max_rank_change,
    }
    _write_atomic(out_dir / "comparison.json", (json.dumps(payload, indent=2) + "\n").encode("utf-8"))
    return inputs, None, ["comparison.json"]


def _cmd_breakdown(args, out_dir: Path):
    pupils_path, schools_path = Path(args.pupils), Path(args.schools)
    inputs = {str(pupils_path): _sha256(pupils_path), str(schools_path): _sha256(schools_path)}
    cohort = _load_cohort(pupils_path, schools_path)
    fmt = _formatter(args.precision)

    results = _compute_all(cohort, args.measures)
    scores = {kind: res.pupil_scores for kind, res in results.items()}
    if args.by in PUPIL_CHARACTERISTICS:
        table = pupil_breakdown(cohort, scores, args.by)
    else:
        table = school_breakdown(cohort, scores, args.by)
    name = f"breakdown_{args.by}.csv"
    _write_atomic(out_dir / name, _breakdown_csv(table, args.measures, fmt))
    return inputs, None, [name]


def _cmd_validate(args) -> int:
    pupils_path, schools_path = Path(args.pupils), Path(args.schools)
    pupils, pupil_issues = parse_pupils(pupils_path.read_bytes())
    schools, school_issues = parse_schools(schools_path.read_bytes())
    for issue in pupil_issues:
        print(f"{pupils_path.name}: {issue}", file=sys.stderr)
    for issue in school_issues:
        print(f"{schools_path.name}: {issue}", file=sys.stderr)
    cohort = validate_cohort(pupils, schools)
    if pupil_issues or school_issues:
        print(
            f"validation failed: {len(pupil_issues)} pupil issue(s), "
            f"{len(school_issues)} school issue(s)",
            file=sys.stderr,
        )
        return 1
    print(f"OK: {cohort.n_pupils} pupils in {cohort.n_schools} schools")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vamkit",
        description="School performance measures: fit, compare, break down, simulate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic cohort with known truth")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    p.add_argument("--schools", type=int, default=None, help="number of schools")
    p.add_argument("--config", default=None, help="JSON file of generator settings")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("fit", help="fit measures and emit scores and coefficients")
    p.add_argument("--pupils", required=True)
    p.add_argument("--schools", required=True)
    p.add_argument("--measures", type=_parse_measures, default=list(MeasureKind),
                   help="comma-separated codes (a8,aa8,p8,ap8) or 'all'")
    p.add_argument("--precision", type=_parse_precision, default=None,
                   help="'full' (default) or decimal places for scores")
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="compare two school_scores.csv files")
    p.add_argument("--scores", action="append", required=True,
                   help="school_scores.csv (give exactly twice)")
    p.add_argument("--thresholds", type=_parse_thresholds, default=[500, 1000],
                   help="rank-movement thresholds, e.g. 500,1000")
    p.add_argument("--out", required=True)

    p = sub.add_parser("breakdown", help="category means per measure for a characteristic")
    p.add_argument("--pupils", required=True)
    p.add_argument("--schools", required=True)
    p.add_argument("--measures", type=_parse_measures, default=list(MeasureKind))
    p.add_argument("--by", required=True,
                   choices=list(PUPIL_CHARACTERISTICS) + list(SCHOOL_CHARACTERISTICS))
    p.add_argument("--precision", type=_parse_precision, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("validate", help="schema-check pupil and school files")
    p.add_argument("--pupils", required=True)
    p.add_argument("--schools", required=True)

    return parser


def run(argv=None) -> int:
    """Entry point; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0

    started = time.monotonic()
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            inputs, seed, outputs = _cmd_simulate(args, out_dir)
        elif args.command == "fit":
            inputs, seed, outputs = _cmd_fit(args, out_dir)
        elif args.command == "compare":
            inputs, seed, outputs = _cmd_compare(args, out_dir)
        elif args.command == "breakdown":
            inputs, seed, outputs = _cmd_breakdown(args, out_dir)
        else:  # pragma: no cover
            parser.error(f"unknown command {args.command!r}")
    except VamkitError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 1

    manifest = {
        "command": ["vamkit"] + (argv if argv is not None else sys.argv[1:]),
        "inputs": inputs,
        "seed": seed,
        "version": __version__,
        "outputs": outputs,
        "wall_time_s": round(time.monotonic() - started, 6),
    }
    _write_atomic(out_dir / "manifest.json", (json.dumps(manifest, indent=2) + "\n").encode("utf-8"))
    return 0


def main() -> None:
    sys.exit(run())
