"""Command-line interface: build coresets, evaluate sup error, benchmark
against random sampling, and re-verify stored colorings.

Commands read point sets from CSV (one point per row, optional header) or
JSON (array of arrays) and write JSON artifacts that embed the resolved
configuration, the seed, and a hash of the input, so any artifact can be
reproduced byte-for-byte (modulo its timestamp field) from itself.

Exit codes: 0 success, 2 validation error, 3 coloring failure (retry
budget exhausted), 4 I/O error.
"""

import argparse
import csv
import hashlib
import json
import sys
from datetime import datetime, timezone

import numpy as np

from .colorizer import ColoringFailure, partition, verify
from .config import resolve_config
from .coreset import build_coreset, random_baseline
from .evaluation import build_query_grid, expansion_margin, linf_error
from .kernel import kde_batch
from .schedule import build_schedule

__all__ = ["main", "read_points", "write_artifact", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_COLORING = 3
EXIT_IO = 4


class ValidationError(ValueError):
    pass


def read_points(path, dim=None):
    """Load a point set from CSV or JSON.

    CSV rows must all have the same number of columns; a non-numeric first
    row is treated as a header. Dimension-inconsistent or non-numeric rows
    raise a ValidationError naming the offending line.
    """
    if str(path).endswith(".json"):
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, list):
            raise ValidationError(f"{path}: JSON input must be an array of arrays")
        rows = []
        for i, row in enumerate(data):
            if not isinstance(row, list):
                raise ValidationError(f"{path}: entry {i} is not an array")
            if rows and len(row) != len(rows[0]):
                raise ValidationError(
                    f"{path}: entry {i} has {len(row)} coordinates, expected {len(rows[0])}"
                )
            rows.append([float(v) for v in row])
    else:
        numbered = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or all(not c.strip() for c in row):
                    continue
                try:
                    values = [float(c) for c in row]
                except ValueError:
                    if not numbered:
                        continue  # header row
                    raise ValidationError(f"{path}:{lineno}: non-numeric value in row")
                numbered.append((lineno, values))
        if numbered:
            width = len(numbered[0][1])
            for lineno, values in numbered:
                if len(values) != width:
                    raise ValidationError(
                        f"{path}:{lineno}: row has {len(values)} columns, expected {width}"
                    )
        rows = [v for _, v in numbered]
    if not rows:
        raise ValidationError(f"{path}: no points found")
    arr = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{path}: non-finite coordinate in input")
    if dim is not None and arr.shape[1] != dim:
        raise ValidationError(
            f"{path}: points have dimension {arr.shape[1]}, --dim says {dim}"
        )
    return arr


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_artifact(path, payload):
    """Write a JSON artifact with sorted keys; floats use Python's shortest
    round-trip representation (lossless to all 17 significant digits)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1, allow_nan=False)
        fh.write("\n")


def _base_payload(kind, cfg, input_path):
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config": cfg.to_dict(),
        "input": {"path": str(input_path), "sha256": file_sha256(input_path)},
    }


def _round_payload(rnd, emit_colorings):
    cells = [{
        "center": list(c.center),
        "size": int(c.members.size),
        "retries": int(c.retries),
        "flipped": int(c.flipped.size),
        "flipped_positions": [int(i) for i in c.flipped],
        "max_grid_ratio": float(c.max_grid_ratio),
        "post_flip_ratio": float(c.post_flip_ratio),
        "imbalance_before_flip": int(c.imbalance_before_flip),
    } for c in rnd.cells]
    out = {
        "size_before": rnd.size_before,
        "size_after": rnd.size_after,
        "cells": cells,
    }
    if emit_colorings:
        out["coloring"] = [int(s) for s in rnd.coloring]
        out["kept"] = [int(i) for i in rnd.kept]
    return out


def cmd_build(cfg):
    points = read_points(cfg.input, cfg.dim)
    if cfg.target_size is None and cfg.epsilon is None:
        raise ValidationError("build requires --target-size or --epsilon")
    d = points.shape[1]
    constants = cfg.constants_for(d)
    builder = lambda n, dd: build_schedule(n, dd, constants)
    result = build_coreset(
        points, target=cfg.target_size, epsilon=cfg.epsilon, seed=cfg.seed,
        presample=cfg.presample, schedule_builder=builder,
        retry_budget=cfg.retry_budget,
    )
    payload = _base_payload("coreset", cfg, cfg.input)
    payload["input"]["n"] = int(points.shape[0])
    payload["input"]["dim"] = d
    payload.update({
        "seed": cfg.seed,
        "indices": [int(i) for i in result.indices],
        "size": result.size,
        "target_size": result.target_size,
        "presampled_from": result.presampled_from,
        "presample_indices": None if result.presample_indices is None
        else [int(i) for i in result.presample_indices],
        "rounds": [_round_payload(r, cfg.emit_colorings) for r in result.rounds],
    })
    write_artifact(cfg.output, payload)
    print(f"coreset: {result.size} of {points.shape[0]} points "
          f"({len(result.rounds)} rounds) -> {cfg.output}")
    return EXIT_OK


def _load_coreset_indices(cfg, points):
    with open(cfg.coreset, "r", encoding="utf-8") as fh:
        artifact = json.load(fh)
    if artifact.get("kind") != "coreset":
        raise ValidationError(f"{cfg.coreset}: not a coreset artifact")
    recorded = artifact.get("input", {}).get("sha256")
    actual = file_sha256(cfg.input)
    if recorded and recorded != actual:
        raise ValidationError(
            f"{cfg.coreset}: coreset was built from a different input "
            f"(sha256 {recorded[:12]}... != {actual[:12]}...)"
        )
    idx = np.asarray(artifact["indices"], dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= points.shape[0]):
        raise ValidationError(f"{cfg.coreset}: index out of range for input")
    return artifact, idx


def cmd_eval(cfg):
    points = read_points(cfg.input, cfg.dim)
    if not cfg.coreset:
        raise ValidationError("eval requires --coreset")
    artifact, idx = _load_coreset_indices(cfg, points)
    report = linf_error(points, points[idx], resolution=cfg.resolution,
                        budget=cfg.eval_budget)
    payload = _base_payload("eval_report", cfg, cfg.input)
    payload.update({
        "coreset": {"path": str(cfg.coreset), "size": int(idx.size)},
        "sup_error": report.sup_error,
        "argmax_query": list(report.argmax_query),
        "n_queries": report.n_queries,
        "discretization_bound": report.discretization_bound,
        "tail_bound": report.tail_bound,
        "upper_bound": report.upper_bound,
        "runtime_seconds": report.runtime_seconds,
        "grid": {
            "width": report.grid.width,
            "radius": report.grid.radius,
            "center": list(report.grid.center),
        },
    })
    if cfg.output:
        write_artifact(cfg.output, payload)
    print(f"sup error {report.sup_error:.6g} at {tuple(report.argmax_query)} "
          f"(+{report.discretization_bound:.2g} discretization, "
          f"tail {report.tail_bound:.2g})")
    return EXIT_OK


def cmd_verify(cfg):
    points = read_points(cfg.input, cfg.dim)
    if not cfg.coreset:
        raise ValidationError("verify requires --coreset")
    artifact, _ = _load_coreset_indices(cfg, points)
    rounds = artifact.get("rounds", [])
    if not rounds or "coloring" not in rounds[0]:
        raise ValidationError(
            f"{cfg.coreset}: artifact has no stored colorings (built with "
            "emit_colorings=false?)"
        )
    constants = cfg.constants_for(points.shape[1])
    if artifact.get("presample_indices") is not None:
        current = np.asarray(artifact["presample_indices"], dtype=np.intp)
    else:
        current = np.arange(points.shape[0], dtype=np.intp)
    all_ok = True
    results = []
    for rno, rnd in enumerate(rounds):
        coloring = np.asarray(rnd["coloring"], dtype=np.int64)
        kept = np.asarray(rnd["kept"], dtype=np.intp)
        if coloring.size != current.size:
            raise ValidationError(
                f"round {rno}: coloring length {coloring.size} does not match "
                f"expected size {current.size}"
            )
        pts = points[current]
        cells = partition(pts)
        if len(cells) != len(rnd["cells"]):
            raise ValidationError(f"round {rno}: cell layout does not match input")
        ok = True
        worst = 0.0
        for cell, cell_meta in zip(cells, rnd["cells"]):
            schedule = build_schedule(cell.members.size, points.shape[1], constants)
            centered = pts[cell.members] - np.asarray(cell.center)
            final = coloring[cell.members]
            # The Las Vegas check certified the pre-flip coloring; undo the
            # recorded flips to recheck exactly what was accepted, then
            # check the post-flip balance separately.
            accepted = final.copy()
            flipped = np.asarray(cell_meta.get("flipped_positions", []), dtype=np.intp)
            accepted[flipped] *= -1
            passed, ratio, _ = verify(centered, accepted, schedule)
            worst = max(worst, ratio)
            if not passed or abs(int(final.sum())) > 1:
                ok = False
        recomputed_kept = current[np.flatnonzero(coloring == 1)]
        if not np.array_equal(np.sort(recomputed_kept), np.sort(kept)):
            ok = False
        results.append({"round": rno, "passed": ok, "max_grid_ratio": worst})
        all_ok = all_ok and ok
        current = kept
        print(f"round {rno}: {'pass' if ok else 'FAIL'} (max ratio {worst:.4g})")
    if cfg.output:
        payload = _base_payload("verify_report", cfg, cfg.input)
        payload["rounds"] = results
        payload["passed"] = all_ok
        write_artifact(cfg.output, payload)
    if not all_ok:
        raise ValidationError("stored coloring failed re-verification")
    return EXIT_OK


def cmd_bench(cfg):
    points = read_points(cfg.input, cfg.dim)
    sizes = cfg.sizes or (32, 64, 128, 256)
    if not sizes:
        raise ValidationError("bench requires a nonempty size list")
    sizes = sorted(int(s) for s in sizes)
    if sizes[0] < 1 or sizes[-1] > points.shape[0]:
        raise ValidationError("bench sizes must lie within [1, n]")
    d = points.shape[1]
    constants = cfg.constants_for(d)
    builder = lambda n, dd: build_schedule(n, dd, constants)
    grid = build_query_grid(points, resolution=cfg.resolution, budget=cfg.eval_budget,
                            margin=expansion_margin(points.shape[0]))
    queries = grid.points()
    base_kde = kde_batch(points, queries)
    rows = []
    for s in range(cfg.num_seeds):
        seed = cfg.seed + s
        built = build_coreset(points, target=min(sizes), seed=seed,
                              schedule_builder=builder, retry_budget=cfg.retry_budget)
        # Halving rounds are nested, so one run yields every larger size.
        keep_by_size = {built.size: built.indices}
        for rnd in built.rounds:
            keep_by_size[rnd.size_after] = rnd.kept
        for size in sizes:
            best = min((k for k in keep_by_size if k >= size),
                       default=max(keep_by_size))
            idx = keep_by_size[best]
            err = float(np.abs(base_kde - kde_batch(points[idx], queries)).max())
            rows.append({"method": "discrepancy", "size": int(idx.size),
                         "requested_size": size, "seed": seed, "sup_error": err})
            ridx = random_baseline(points, size, seed=seed * 1_000_003 + size).indices
            rerr = float(np.abs(base_kde - kde_batch(points[ridx], queries)).max())
            rows.append({"method": "random", "size": size, "requested_size": size,
                         "seed": seed, "sup_error": rerr})
    summary = summarize_bench(rows)
    slopes = {m: fit_loglog_slope([(r["size"], r["median"]) for r in summary if r["method"] == m])
              for m in ("discrepancy", "random")}
    payload = _base_payload("bench", cfg, cfg.input)
    payload.update({"rows": rows, "summary": summary, "slopes": slopes,
                    "sizes": sizes, "num_seeds": cfg.num_seeds})
    if cfg.output:
        write_artifact(cfg.output, payload)
        csv_path = str(cfg.output) + ".csv"
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["method", "size", "requested_size",
                                                    "seed", "sup_error"])
            writer.writeheader()
            writer.writerows(rows)
    for row in summary:
        print(f"{row['method']:>12} size {row['size']:>6}: median {row['median']:.6g} "
              f"[q25 {row['q25']:.6g}, q75 {row['q75']:.6g}]")
    fmt = lambda s: "n/a" if s is None else f"{s:.3f}"
    print(f"log-log slopes: discrepancy {fmt(slopes['discrepancy'])}, "
          f"random {fmt(slopes['random'])}")
    return EXIT_OK


def summarize_bench(rows):
    """Median and quartiles of sup_error per (method, requested size)."""
    keys = sorted({(r["method"], r["requested_size"]) for r in rows})
    out = []
    for method, size in keys:
        errs = np.asarray([r["sup_error"] for r in rows
                           if r["method"] == method and r["requested_size"] == size])
        out.append({
            "method": method,
            "size": size,
            "median": float(np.median(errs)),
            "q25": float(np.quantile(errs, 0.25)),
            "q75": float(np.quantile(errs, 0.75)),
            "n": int(errs.size),
        })
    return out


def fit_loglog_slope(pairs):
    """Least-squares slope of log(error) against log(size), or None when
    fewer than two positive errors are available."""
    pts = [(s, e) for s, e in pairs if e > 0]
    if len(pts) < 2:
        return None
    xs = np.log([s for s, _ in pts])
    ys = np.log([e for _, e in pts])
    return float(np.polyfit(xs, ys, 1)[0])


def _add_common(p):
    p.add_argument("--input", help="input point file (CSV or JSON)")
    p.add_argument("--output", help="output artifact path (JSON)")
    p.add_argument("--dim", type=int, help="expected dimension (validated)")
    p.add_argument("--seed", type=int, help="root RNG seed (default 0)")
    p.add_argument("--c0", type=float, help="grid-resolution constant")
    p.add_argument("--c1", type=float, help="threshold constant")
    p.add_argument("--c-big", dest="c_big", type=float, help="balance cap constant")
    p.add_argument("--strict-constants", dest="strict_constants",
                   action="store_const", const=True,
                   help="theory-faithful constants and literal grid widths")
    p.add_argument("--grid-budget", dest="grid_budget", type=int,
                   help="max enumerated points per verification grid")
    p.add_argument("--retry-budget", dest="retry_budget", type=int,
                   help="per-cell Las Vegas retries before failing")
    p.add_argument("--resolution", type=int,
                   help="per-axis query grid resolution for evaluation")
    p.add_argument("--eval-budget", dest="eval_budget", type=int,
                   help="max enumerated query points for evaluation")
    p.add_argument("--config", help="JSON config file (lower precedence than flags)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kdecoreset",
        description="Coresets for Gaussian kernel density estimation by "
                    "recursive discrepancy halving.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="construct a coreset")
    _add_common(p)
    p.add_argument("--target-size", dest="target_size", type=int,
                   help="stop halving at this size")
    p.add_argument("--epsilon", type=float, help="error budget; sets the target size")
    p.add_argument("--presample", action="store_const", const=True,
                   help="uniform presample to ~1/eps^2 before halving")
    p.add_argument("--no-colorings", dest="emit_colorings", action="store_const",
                   const=False, help="omit per-round colorings from the artifact")

    p = sub.add_parser("eval", help="sup-error report for a stored coreset")
    _add_common(p)
    p.add_argument("--coreset", help="coreset artifact from `build`")

    p = sub.add_parser("verify", help="recheck a stored coloring")
    _add_common(p)
    p.add_argument("--coreset", help="coreset artifact from `build`")

    p = sub.add_parser("bench", help="compare against random sampling")
    _add_common(p)
    p.add_argument("--sizes", help="comma-separated coreset sizes")
    p.add_argument("--num-seeds", dest="num_seeds", type=int,
                   help="seeds per size (default 20)")
    return parser


_COMMANDS = {
    "build": cmd_build,
    "eval": cmd_eval,
    "verify": cmd_verify,
    "bench": cmd_bench,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    values = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = resolve_config(values, config_path=args.config)
        if not cfg.input:
            raise ValidationError("an --input file is required")
        code = _COMMANDS[args.command](cfg)
    except ColoringFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COLORING
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
