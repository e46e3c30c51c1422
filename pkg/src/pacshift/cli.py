"""Command-line surface and file I/O.

Two subcommands:

* ``calibrate``  - read labeled source scores and unlabeled target scores
  from CSV, run the full interval-weight pipeline, and write the threshold
  plus weight-box diagnostics as JSON.
* ``experiment`` - run a repeated-trial synthetic experiment from a
  scenario spec file and write JSON-lines reports plus a CSV summary.

Exit codes: 0 success, 2 config error, 3 data error, 4 solver abort.
All emitted files start with the version line ``# pacshift-v1``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .binomial import RiskParams
from .harness import METHODS, aggregate, run_trials
from .intervals import RELAXED, STRICT, Aborted
from .predsets import CALIBRATED, AcceptanceRandomness, psw_threshold
from .shift_sim import ShiftSpec, SyntheticModel
from .tables import ScoreTable
from .weights import delta_split, weight_box

FORMAT_TAG = "# pacshift-v1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ABORT = 4


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


def read_scores(path: str) -> ScoreTable:
    """Read a score table from CSV.

    Header is either ``label,s0,...,s{K-1}`` (labeled) or ``s0,...,s{K-1}``
    (unlabeled); labels are 0-based integers.  Comment lines starting with
    '#' are skipped; row order is preserved.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty score file")
    header = [h.strip() for h in rows[0]]
    labeled = header[0] == "label"
    score_cols = header[1:] if labeled else header
    if score_cols != [f"s{i}" for i in range(len(score_cols))] or len(score_cols) < 2:
        raise DataError(f"{path}: bad header {header!r}")
    k = len(score_cols)
    labels = [] if labeled else None
    scores = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-numeric cell") from exc
        if labeled:
            lab = vals[0]
            if lab != int(lab) or not 0 <= int(lab) < k:
                raise DataError(f"{path}:{lineno}: label out of range")
            labels.append(int(lab))
            vals = vals[1:]
        scores.append(vals)
    if not scores:
        raise DataError(f"{path}: no data rows")
    try:
        return ScoreTable(
            scores=np.array(scores), labels=np.array(labels) if labeled else None
        )
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_scores(path: str, table: ScoreTable):
    """Write a score table as versioned CSV (inverse of read_scores)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(FORMAT_TAG + "\n")
        writer = csv.writer(fh)
        cols = [f"s{i}" for i in range(table.k)]
        if table.is_labeled:
            writer.writerow(["label"] + cols)
            for lab, row in zip(table.labels, table.scores):
                writer.writerow([int(lab)] + [repr(float(x)) for x in row])
        else:
            writer.writerow(cols)
            for row in table.scores:
                writer.writerow([repr(float(x)) for x in row])


def read_scenario(path: str) -> tuple[ShiftSpec, SyntheticModel]:
    """Parse a flat key/value scenario spec.

    Keys: source_dist, target_dist (comma-separated), m, n, o, centers
    (semicolon-separated points of comma-separated coordinates),
    noise_scale (scalar or one value per class), temperature.
    """
    fields: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, _, value = line.partition("=")
                fields[key.strip()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    required = {"source_dist", "target_dist", "m", "n", "o", "centers"}
    missing = required - fields.keys()
    if missing:
        raise ConfigError(f"{path}: missing keys {sorted(missing)}")
    try:
        spec = ShiftSpec(
            source_dist=[float(x) for x in fields["source_dist"].split(",")],
            target_dist=[float(x) for x in fields["target_dist"].split(",")],
            m=int(fields["m"]),
            n=int(fields["n"]),
            o=int(fields["o"]),
        )
        centers = [
            [float(x) for x in point.split(",")]
            for point in fields["centers"].split(";")
        ]
        model = SyntheticModel(
            class_centers=np.array(centers),
            noise_scale=[float(x) for x in fields.get("noise_scale", "1.0").split(",")],
            temperature=float(fields.get("temperature", "1.0")),
        )
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if model.k != spec.k:
        raise ConfigError(f"{path}: centers imply K={model.k}, distributions K={spec.k}")
    return spec, model


def _risk_params(args) -> RiskParams:
    try:
        return RiskParams(epsilon=args.epsilon, delta=args.delta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_calibrate(args) -> int:
    rp = _risk_params(args)
    src = read_scores(args.source)
    tgt = read_scores(args.target)
    if not src.is_labeled:
        raise DataError("source table must be labeled")
    if src.k != tgt.k:
        raise DataError(f"K mismatch: source {src.k}, target {tgt.k}")

    K = src.k
    box_budget, calib_delta = delta_split(K, rp.delta)
    box = weight_box(src, tgt, box_budget, mode=args.mode)
    report = {
        "format": FORMAT_TAG.lstrip("# "),
        "epsilon": rp.epsilon,
        "delta": rp.delta,
        "per_interval_delta": box_budget / (K * (K + 1)),
        "calibration_delta": calib_delta,
        "mode": args.mode,
        "seed": args.seed,
    }
    if isinstance(box, Aborted):
        report["status"] = "aborted"
        report["abort_step"] = box.step
        report["abort_reason"] = box.reason
        _write_json(args.out, report)
        print(f"aborted at step {box.step}: {box.reason}", file=sys.stderr)
        return EXIT_ABORT

    v = AcceptanceRandomness.draw(src.n, args.seed)
    result = psw_threshold(src, v, box, RiskParams(rp.epsilon, calib_delta))
    report.update(
        {
            "status": result.status,
            "tau": result.tau if math.isfinite(result.tau) else None,
            "weight_box": {
                "lo": box.lo.tolist(),
                "hi": box.hi.tolist(),
                "envelope_b": box.envelope_b,
            },
        }
    )
    _write_json(args.out, report)
    if result.status == CALIBRATED:
        print(f"tau = {result.tau:.6g}  (b = {box.envelope_b:.4g})")
    else:
        print("full prediction set (no feasible threshold)")
    return EXIT_OK


def cmd_experiment(args) -> int:
    rp = _risk_params(args)
    spec, model = read_scenario(args.scenario)
    methods = args.method or list(METHODS)
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r} (choose from {METHODS})")
    reports = run_trials(spec, model, methods, rp, args.trials, args.seed, mode=args.mode)
    summary = aggregate(reports, rp.epsilon)

    out = args.out or "."
    import os

    os.makedirs(out, exist_ok=True)
    jsonl = os.path.join(out, "reports.jsonl")
    with open(jsonl, "w", encoding="utf-8") as fh:
        fh.write(FORMAT_TAG + "\n")
        for r in reports:
            fh.write(
                json.dumps(
                    {
                        "method": r.method,
                        "trial": r.trial,
                        "error": r.error,
                        "avg_size": r.avg_size,
                        "tau": r.tau if math.isfinite(r.tau) else None,
                        "aborted": r.aborted,
                    }
                )
                + "\n"
            )
    summary_path = os.path.join(out, "summary.csv")
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        fh.write(FORMAT_TAG + "\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["method", "trials", "violations", "aborts", "mean_error", "mean_size"]
            + [f"error_q{q}" for q in (0, 25, 50, 75, 100)]
            + [f"size_q{q}" for q in (0, 25, 50, 75, 100)]
        )
        for method, s in summary.items():
            writer.writerow(
                [method, s["trials"], s["violations"], s["aborts"],
                 repr(s["mean_error"]), repr(s["mean_size"])]
                + [repr(s["error_quantiles"][q]) for q in (0, 25, 50, 75, 100)]
                + [repr(s["size_quantiles"][q]) for q in (0, 25, 50, 75, 100)]
            )
    for method, s in summary.items():
        print(
            f"{method:7s} trials={s['trials']} violations={s['violations']} "
            f"mean_error={s['mean_error']:.4f} mean_size={s['mean_size']:.3f}"
        )
    print(f"wrote {jsonl} and {summary_path}")
    return EXIT_OK


def _write_json(path: str | None, payload: dict):
    text = json.dumps(payload, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pacshift",
        description="PAC prediction sets under label shift",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--epsilon", type=float, required=True, help="error budget in (0,1)")
    common.add_argument("--delta", type=float, required=True, help="failure budget in (0,1)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--mode", choices=[STRICT, RELAXED], default=RELAXED)
    common.add_argument("--out", default=None, help="output path (file or directory)")

    cal = sub.add_parser("calibrate", parents=[common], help="calibrate from score files")
    cal.add_argument("--source", required=True, help="labeled source score CSV")
    cal.add_argument("--target", required=True, help="unlabeled target score CSV")
    cal.set_defaults(func=cmd_calibrate)

    exp = sub.add_parser("experiment", parents=[common], help="run a synthetic experiment")
    exp.add_argument("--scenario", required=True, help="scenario spec file")
    exp.add_argument("--method", action="append", choices=list(METHODS),
                     help="repeatable; default: all methods")
    exp.add_argument("--trials", type=int, default=100)
    exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage, which matches our config code
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
