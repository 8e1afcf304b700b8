"""Command-line pipeline: homology tables, leaf-wise search, spectrum,
and independent re-verification.

    rfh homology --config cfg [--out DIR] [--quantum Q]
    rfh find     --config cfg [--out DIR] [--jobs N]
    rfh spectrum --config cfg [--out DIR] [--quantum Q]
    rfh verify POINTS --config cfg [--out DIR]

Exit codes: 0 success, 1 acceptance failure (rank mismatch / nothing
verified), 2 usage or config error.  Outputs are deterministic: fixed
column orders, shortest round-trip float formatting, results merged in
sorted order before writing.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .complexes import (rabinowitz_ladder, quotient_by_involution,
                        gf2_homology, action_spectrum, write_complex_csv,
                        write_homology_csv)
from .config import parse_config, ConfigError
from .leafwise import leafwise_check, closed_characteristic_probe, \
    OffSurfaceError
from .solver import (continue_to_target, extract_leafwise_point,
                     dedup_reports, SolverOptions, ContinuationError,
                     RefineError)

__all__ = ["main", "cmd_homology", "cmd_find", "cmd_spectrum", "cmd_verify"]


def _fmt(x):
    """Shortest round-trip decimal for floats; plain str otherwise."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ----------------------------------------------------------------------
# homology
# ----------------------------------------------------------------------

def expected_ladder_pattern(n, window_k):
    """(nonequivariant ranks, equivariant ranks) per degree."""
    lo = -2 * n * window_k
    hi = 2 * n * window_k + 2 * n - 1
    nonequiv = {d: 0 for d in range(lo, hi + 1)}
    nonequiv[lo] = nonequiv[hi] = 1
    equiv = {d: 1 for d in range(lo, hi + 1)}
    return nonequiv, equiv


def cmd_homology(config, out_dir=None, quantum=None):
    out = out_dir or config.out_dir
    os.makedirs(out, exist_ok=True)
    q = quantum if quantum is not None else config.quantum_value()
    ladder = rabinowitz_ladder(config.n, config.homology_window, quantum=q)
    quotient = quotient_by_involution(ladder)
    table = gf2_homology(ladder)
    qtable = gf2_homology(quotient)

    write_complex_csv(ladder, os.path.join(out, "ladder_generators.csv"),
                      os.path.join(out, "ladder_edges.csv"))
    write_homology_csv(table, os.path.join(out,
                                           "homology_nonequivariant.csv"))
    write_homology_csv(qtable, os.path.join(out, "homology_equivariant.csv"))

    want_plain, want_equiv = expected_ladder_pattern(config.n,
                                                     config.homology_window)
    ok = table.ranks == want_plain and qtable.ranks == want_equiv
    _write_json(os.path.join(out, "homology_summary.json"), {
        "n": config.n,
        "window": config.homology_window,
        "degrees": [min(table.ranks), max(table.ranks)],
        "nonequivariant_matches": table.ranks == want_plain,
        "equivariant_matches": qtable.ranks == want_equiv,
        "boundary_degrees": sorted(table.boundary_degrees),
    })
    return 0 if ok else 1


# ----------------------------------------------------------------------
# find
# ----------------------------------------------------------------------

def _find_one_seed(payload):
    """Worker: continuation + extraction + verification for one seed."""
    (seed_k, surface, ham, weights, opts, num_samples, r_step, t_max,
     tol_verify, flow_step) = payload
    try:
        trace = continue_to_target(seed_k, surface, ham, weights, opts,
                                   num_samples=num_samples, r_step=r_step)
    except (ContinuationError, RefineError) as exc:
        return seed_k, None, f"continuation failed: {exc}"
    report = extract_leafwise_point(trace.endpoint, surface, ham, weights,
                                    t_max=t_max, tol=tol_verify,
                                    flow_step=flow_step)
    return seed_k, report, None


def _report_rows(reports, dim):
    for rep in reports:
        row = [rep.seed_k, "|".join(str(s) for s in rep.merged_seeds),
               int(rep.verified), rep.leaf_time, rep.action,
               rep.surface_residual, rep.leaf_residual,
               int(rep.on_closed_characteristic), rep.closed_period]
        row.extend(rep.point[i] for i in range(dim))
        yield row


def _report_header(dim):
    return (["seed_k", "merged_seeds", "verified", "leaf_time", "action",
             "surface_residual", "leaf_residual", "on_closed_characteristic",
             "closed_period"] + [f"p{i}" for i in range(dim)])


def cmd_find(config, out_dir=None, jobs=None):
    if not config.seeds:
        raise ConfigError("find requires a nonempty seed list")
    out = out_dir or config.out_dir
    os.makedirs(out, exist_ok=True)
    surface = config.build_surface()
    ham = config.build_perturbation(surface)
    weights = config.build_weights()
    opts = SolverOptions(tol=config.tol_gradient)
    jobs = jobs or config.jobs

    payloads = [(k, surface, ham, weights, opts, config.loop_samples,
                 config.r_step, config.t_max, config.tol_verify,
                 config.flow_step) for k in config.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_find_one_seed, payloads))
    else:
        results = [_find_one_seed(p) for p in payloads]

    failures = {}
    reports = []
    for seed_k, report, error in results:
        if error is not None:
            failures[str(seed_k)] = error
        else:
            reports.append(report)
    # deterministic merge order before any further processing
    reports.sort(key=lambda rep: (rep.seed_k, rep.action))
    verified = [rep for rep in reports if rep.verified]
    distinct = dedup_reports(verified, config.dedup_radius_value(surface)) \
        if verified else []

    dim = 2 * config.n
    _write_csv(os.path.join(out, "reports.csv"), _report_header(dim),
               _report_rows(distinct, dim))
    _write_csv(os.path.join(out, "reports_raw.csv"), _report_header(dim),
               _report_rows(reports, dim))
    _write_json(os.path.join(out, "find_summary.json"), {
        "seeds": list(config.seeds),
        "failures": failures,
        "reports": len(reports),
        "verified": len(verified),
        "distinct_points": len(distinct),
        "closed_characteristic_flags":
            sum(1 for rep in distinct if rep.on_closed_characteristic),
        "max_leaf_residual":
            max((rep.leaf_residual for rep in verified), default=None),
    })
    return 0 if verified else 1


# ----------------------------------------------------------------------
# spectrum
# ----------------------------------------------------------------------

def cmd_spectrum(config, out_dir=None, quantum=None):
    out = out_dir or config.out_dir
    os.makedirs(out, exist_ok=True)
    q = quantum if quantum is not None else config.quantum_value()
    window_k = config.homology_window
    values = action_spectrum(config.n, window_k, quantum=q)
    ks = np.arange(-window_k, window_k + 1)[::-1]  # sigma = -q k ascending
    _write_csv(os.path.join(out, "spectrum.csv"), ["k", "sigma"],
               zip(ks.tolist(), values.tolist()))

    # per-seed actions: prefer the raw (pre-dedup) reports, where each
    # seed keeps its own critical value
    fit = None
    reports_path = None
    for name in ("reports_raw.csv", "reports.csv"):
        candidate = os.path.join(out, name)
        if os.path.exists(candidate):
            reports_path = candidate
            break
    if reports_path is not None:
        pairs = []
        with open(reports_path) as fh:
            for row in csv.DictReader(fh):
                pairs.append((int(row["seed_k"]), float(row["action"])))
        if len(pairs) >= 2:
            karr = np.array([p[0] for p in pairs], dtype=float)
            aarr = np.array([p[1] for p in pairs])
            coeffs, residuals, *_ = np.polyfit(karr, aarr, 1, full=True)
            slope, intercept = float(coeffs[0]), float(coeffs[1])
            total = float(np.sum((aarr - aarr.mean()) ** 2))
            ss_res = float(residuals[0]) if len(residuals) else 0.0
            r_squared = 1.0 - ss_res / total if total > 0 else 1.0
            fit = {
                "count": len(pairs),
                "fitted_quantum": -slope,
                "intercept": intercept,
                "r_squared": r_squared,
                "ratio_to_2pi": -slope / (2.0 * np.pi),
            }
            _write_json(os.path.join(out, "spectrum_fit.json"), fit)
    _write_json(os.path.join(out, "spectrum_summary.json"), {
        "window": window_k,
        "quantum": q,
        "values": values.tolist(),
        "fit": fit,
    })
    return 0


# ----------------------------------------------------------------------
# verify
# ----------------------------------------------------------------------

def cmd_verify(points_path, config, out_dir=None):
    out = out_dir or config.out_dir
    surface = config.build_surface()
    ham = config.build_perturbation(surface)
    dim = 2 * config.n
    try:
        with open(points_path) as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read points file: {exc}") from exc
    os.makedirs(out, exist_ok=True)
    results = []
    n_verified = 0
    for idx, row in enumerate(rows):
        try:
            point = np.array([float(row[f"p{i}"]) for i in range(dim)])
        except (KeyError, ValueError) as exc:
            raise ConfigError(
                f"points file row {idx}: needs columns p0..p{dim - 1} "
                f"({exc})") from exc
        try:
            ok, leaf_time, residual = leafwise_check(
                surface, ham, point, t_max=config.t_max,
                tol=config.tol_verify, step=config.flow_step)
            status = "verified" if ok else "unverified"
        except OffSurfaceError:
            status, leaf_time, residual = "off_surface", float("nan"), \
                float("nan")
        if status == "verified":
            n_verified += 1
        results.append([idx, status, leaf_time, residual]
                       + [point[i] for i in range(dim)])
    _write_csv(os.path.join(out, "verification.csv"),
               ["index", "status", "leaf_time", "residual"]
               + [f"p{i}" for i in range(dim)], results)
    _write_json(os.path.join(out, "verification_summary.json"), {
        "points": len(results),
        "verified": n_verified,
        "off_surface": sum(1 for r in results if r[1] == "off_surface"),
    })
    return 0


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rfh",
        description="leaf-wise intersection workbench and GF(2) ladder "
                    "homology")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("homology", "find", "spectrum", "verify"):
        p = sub.add_parser(name)
        if name == "verify":
            p.add_argument("points", help="CSV with columns p0..p{2n-1}")
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        if name == "find":
            p.add_argument("--jobs", type=int, default=None)
        if name in ("homology", "spectrum"):
            p.add_argument("--quantum", type=float, default=None)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
        if args.command == "homology":
            return cmd_homology(config, args.out, args.quantum)
        if args.command == "find":
            return cmd_find(config, args.out, args.jobs)
        if args.command == "spectrum":
            return cmd_spectrum(config, args.out, args.quantum)
        return cmd_verify(args.points, config, args.out)
    except ConfigError as exc:
        print(f"rfh: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
