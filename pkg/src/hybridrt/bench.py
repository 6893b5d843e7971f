"""Benchmark, validation and convergence command line.

validate  solves the same problem with several variants and compares the
          trace, scalar and flux coefficient vectors pairwise; exits 1 if any
          relative difference exceeds the tolerance.
bench     times repeated solves per (degree, variant), reports median phase
          times and discretization errors, and writes CSV tables including
          the percent benefit of the stabilized variants over the usual one.
converge  runs a mesh refinement study and reports observed orders.

Exit codes: 0 success, 1 validation failure, 2 bad configuration.
"""

import argparse
import csv
import statistics
import sys
import time
from itertools import combinations
from pathlib import Path

import numpy as np

from .local import Variant, variant_from_string
from .mesh import uniform_square_mesh
from .postproc import convergence_rates, l2_errors
from .solver import export_solution_system, solve_poisson

DEFAULT_VARIANTS = (Variant.USUAL, Variant.STAB1, Variant.STAB2)
FULL_DEGREES = range(1, 21)
CI_DEGREES = range(1, 9)


def parse_degrees(text):
    """'1-8', '1,3,5', '4' -> list of degrees, ascending, each >= 1."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    out = sorted(set(out))
    if not out or out[0] < 1:
        raise ValueError(f"degree list {text!r} must contain integers >= 1")
    return out


def parse_variants(text):
    out = []
    for part in text.split(","):
        v = variant_from_string(part)
        if v not in out:
            out.append(v)
    return out


def _rel_inf(a, b):
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-300)
    return float(np.abs(a - b).max() / denom)


def run_validate(degrees, mesh_n, variants, tol=1e-8, stab1_jump=False, log=print):
    """Pairwise cross-variant comparison; returns (all_ok, rows)."""
    if len(variants) < 2:
        raise ValueError("validation needs at least two variants to compare")
    mesh = uniform_square_mesh(mesh_n)
    rows = []
    all_ok = True
    for k in degrees:
        results = [solve_poisson(mesh, k, v, stab1_jump=stab1_jump) for v in variants]
        log(
            f"k={k}: global trace system size {results[0].n_global} "
            f"({mesh.n_elements} elements)"
        )
        for ra, rb in combinations(results, 2):
            row = {
                "k": k,
                "pair": f"{ra.variant.display} vs {rb.variant.display}",
                "d_uhat": _rel_inf(ra.uhat, rb.uhat),
                "d_u": _rel_inf(ra.U, rb.U),
                "d_q": _rel_inf(ra.Qfull, rb.Qfull),
            }
            row["ok"] = max(row["d_uhat"], row["d_u"], row["d_q"]) <= tol
            all_ok &= row["ok"]
            rows.append(row)
            log(
                f"  {row['pair']:28s} uhat {row['d_uhat']:.3e}  "
                f"u {row['d_u']:.3e}  q {row['d_q']:.3e}  "
                f"{'ok' if row['ok'] else 'MISMATCH'}"
            )
    log(f"validation {'PASSED' if all_ok else 'FAILED'} (tolerance {tol:.1e})")
    return all_ok, rows


def run_bench(
    degrees,
    mesh_n=16,
    variants=DEFAULT_VARIANTS,
    reps=5,
    serial=False,
    out_dir=None,
    stab1_jump=False,
    export_matrix=False,
    log=print,
):
    """Median-of-reps phase timings per (degree, variant); returns row dicts."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)

    def _run():
        mesh = uniform_square_mesh(mesh_n)
        rows = []
        for k in degrees:
            # interleave the variants within each repetition so slow drift in
            # machine load cannot systematically favor whichever variant runs
            # later; the reported statistic stays the per-variant median
            samples = {v: [] for v in variants}
            last = {}
            for rep in range(reps):
                for v in variants:
                    result = solve_poisson(
                        mesh, k, v, stab1_jump=stab1_jump, keep_system=export_matrix
                    )
                    samples[v].append(result.times.as_dict())
                    last[v] = result
            for v in variants:
                med = {ph: statistics.median(s[ph] for s in samples[v]) for ph in samples[v][0]}
                result = last[v]
                err_u, err_q = l2_errors(result)
                row = {
                    "k": k,
                    "variant": v.display,
                    "n_global": result.n_global,
                    **med,
                    "local_samples": [s["local"] for s in samples[v]],
                    "err_u": err_u,
                    "err_q": err_q,
                    "residual": result.residual,
                    "backend": result.backend,
                }
                rows.append(row)
                log(
                    f"k={k:2d} {v.display:11s} local {med['local']:.4f}s "
                    f"(extra {med['extra_basis']:.4f} div {med['extra_div']:.4f} "
                    f"mat {med['local_matrix']:.4f}) global {med['global']:.4f}s "
                    f"total {med['total']:.4f}s err_u {err_u:.3e}"
                )
                if export_matrix and out_dir is not None:
                    prefix = Path(out_dir) / f"system_k{k}_{v.value}"
                    export_solution_system(result, str(prefix))
        return rows

    if serial:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=1):
            rows = _run()
    else:
        rows = _run()

    if out_dir is not None:
        write_bench_csvs(rows, variants, out_dir)
    return rows


def _timing_table(rows, variants, degrees, fields):
    """Wide per-degree table: one column per (field, variant)."""
    cell = {(r["k"], r["variant"]): r for r in rows}
    header = ["k"]
    for fld, fmt in fields:
        header += [f"{fld}_{v.display}" for v in variants]
    table = [header]
    for k in degrees:
        line = [k]
        for fld, fmt in fields:
            for v in variants:
                r = cell.get((k, v.display))
                line.append(fmt(r) if r is not None else "")
        table.append(line)
    return table


def write_bench_csvs(rows, variants, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    degrees = sorted({r["k"] for r in rows})

    def t(field):
        return field, lambda r: f"{r[field]:.6f}"

    def dash_for_stabs(r):
        return f"{r['extra_div']:.6f}" if r["variant"] == Variant.USUAL.display else "-"

    tables = {
        "onetime_local.csv": [t("onetime"), t("local")],
        "global_total.csv": [t("global"), t("total")],
        "extra_basis.csv": [t("extra_basis"), ("extra_div", dash_for_stabs)],
        "local_matrix.csv": [t("local_matrix")],
    }
    for name, fields in tables.items():
        with open(out / name, "w", newline="") as fh:
            csv.writer(fh).writerows(_timing_table(rows, variants, degrees, fields))

    cols = ["k", "variant", "n_global", "onetime", "local", "extra_basis", "extra_div",
            "local_matrix", "global", "total", "err_u", "err_q", "residual", "backend"]
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([r[c] for c in cols])

    if Variant.USUAL in variants:
        stabs = [v for v in variants if v is not Variant.USUAL]
        if stabs:
            cell = {(r["k"], r["variant"]): r for r in rows}
            with open(out / "percent_benefit.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(
                    ["k"]
                    + [f"local_pct_{v.display}" for v in stabs]
                    + [f"total_pct_{v.display}" for v in stabs]
                )
                for k in degrees:
                    base = cell[(k, Variant.USUAL.display)]
                    line = [k]
                    for fld in ("local", "total"):
                        for v in stabs:
                            r = cell[(k, v.display)]
                            line.append(f"{100.0 * (base[fld] - r[fld]) / base[fld]:.2f}")
                    w.writerow(line)


def run_converge(degrees, sizes, variant=Variant.USUAL, out_dir=None, log=print):
    """Refinement study; returns rows with errors and observed rates."""
    if len(sizes) < 2:
        raise ValueError("convergence study needs at least two mesh sizes")
    rows = []
    for k in degrees:
        errs_u, errs_q = [], []
        for n in sizes:
            r = solve_poisson(uniform_square_mesh(n), k, variant)
            eu, eq = l2_errors(r)
            errs_u.append(eu)
            errs_q.append(eq)
            rows.append({"k": k, "n": n, "h": 1.0 / n, "err_u": eu, "err_q": eq,
                         "rate_u": "", "rate_q": ""})
        hs = [1.0 / n for n in sizes]
        ru = convergence_rates(errs_u, hs)
        rq = convergence_rates(errs_q, hs)
        for i, (a, b) in enumerate(zip(ru, rq)):
            rows[-len(sizes) + 1 + i]["rate_u"] = a
            rows[-len(sizes) + 1 + i]["rate_q"] = b
        log(f"k={k}: err_u {['%.3e' % e for e in errs_u]} rates_u {['%.2f' % a for a in ru]}")
        log(f"     err_q {['%.3e' % e for e in errs_q]} rates_q {['%.2f' % a for a in rq]}")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "convergence.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["k", "n", "h", "err_u", "err_q", "rate_u", "rate_q"])
            w.writeheader()
            w.writerows(rows)
    return rows


def _build_parser():
    p = argparse.ArgumentParser(
        prog="hybridrt",
        description="Hybridized Raviart-Thomas Poisson solver: validation and benchmarks",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    common = dict(help="degrees, e.g. '3', '1,2,4' or '1-8'")
    pv = sub.add_parser("validate", help="cross-variant equivalence check")
    pv.add_argument("--degrees", default="1-4", **common)
    pv.add_argument("--mesh-n", type=int, default=8, help="grid cells per side")
    pv.add_argument("--variants", default="usual,stab1,stab2")
    pv.add_argument("--tol", type=float, default=1e-8)
    pv.add_argument("--stab1-jump-term", action="store_true",
                    help="keep the (identically vanishing) jump term in stab1 matrices")

    pb = sub.add_parser("bench", help="phase timing benchmark")
    pb.add_argument("--degrees", default=None, **common)
    pb.add_argument("--full", action="store_true",
                    help="degrees 1-20 (default is the short 1-8 sweep)")
    pb.add_argument("--mesh-n", type=int, default=16)
    pb.add_argument("--variants", default="usual,stab1,stab2")
    pb.add_argument("--reps", type=int, default=5, help="repetitions per case, median kept")
    pb.add_argument("--serial", action="store_true", help="pin BLAS to one thread")
    pb.add_argument("--out-dir", default="results")
    pb.add_argument("--stab1-jump-term", action="store_true")
    pb.add_argument("--export-matrix", action="store_true",
                    help="write global matrix/rhs in Matrix Market form")

    pc = sub.add_parser("converge", help="mesh refinement study")
    pc.add_argument("--degrees", default="1-3", **common)
    pc.add_argument("--mesh-sizes", default="4,8,16")
    pc.add_argument("--variant", default="usual")
    pc.add_argument("--out-dir", default=None)
    return p


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.cmd == "validate":
            ok, _ = run_validate(
                parse_degrees(args.degrees),
                args.mesh_n,
                parse_variants(args.variants),
                tol=args.tol,
                stab1_jump=args.stab1_jump_term,
            )
            return 0 if ok else 1
        if args.cmd == "bench":
            if args.degrees is not None:
                degrees = parse_degrees(args.degrees)
            else:
                degrees = list(FULL_DEGREES if args.full else CI_DEGREES)
            t0 = time.perf_counter()
            run_bench(
                degrees,
                mesh_n=args.mesh_n,
                variants=parse_variants(args.variants),
                reps=args.reps,
                serial=args.serial,
                out_dir=args.out_dir,
                stab1_jump=args.stab1_jump_term,
                export_matrix=args.export_matrix,
            )
            print(f"benchmark finished in {time.perf_counter() - t0:.1f}s; "
                  f"tables written to {args.out_dir}")
            return 0
        if args.cmd == "converge":
            run_converge(
                parse_degrees(args.degrees),
                [int(s) for s in args.mesh_sizes.split(",")],
                variant_from_string(args.variant),
                out_dir=args.out_dir,
            )
            return 0
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
