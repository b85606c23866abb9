"""Command-line front end.

Exit codes: 0 ok, 10 certified, 11 not certified, 2 usage or input error,
3 capacity exceeded, 4 optimizer did not settle the verdict.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import ghzcert, oracle
from .errors import CapacityError, CvsignError
from .model import SymmetricCm, expand_full, load_cm, noise_of_v
from .signcrit import OptConfig, certify, class_family

EXIT_OK, EXIT_CERTIFIED, EXIT_NOT_CERTIFIED = 0, 10, 11
EXIT_USAGE, EXIT_CAPACITY, EXIT_NONCONVERGED = 2, 3, 4
FMT = "%.12g"


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FMT % x
    return str(x)


def write_csv(header, rows, config, out=None):
    """Write rows with a header and a trailing ``# config:`` line."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    text = buf.getvalue()
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def _threads(args):
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("CVW_THREADS")
    return int(env) if env else 1


def _noise(args):
    if args.noise_n is not None:
        return args.noise_n
    return noise_of_v(args.v)


def _grid(spec):
    lo, hi, step = spec
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("range needs LO <= HI and STEP > 0")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def _config(args, **extra):
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    cfg.update(extra)
    return cfg


# -- commands ----------------------------------------------------------------


def cmd_certify(args):
    v = ghzcert.certify_point(args.n, args.cls, args.eta, _noise(args), args.r, args.m, args.layout)
    add = v.additional
    out = {
        "certified": v.certified,
        "n": v.n,
        "class": v.cls,
        "m": v.m,
        "n0": v.n0,
        "layout": v.layout,
        "sizes": list(v.sizes),
        "kappa": v.kappa,
        "threshold_interval": [v.interval.lo, v.interval.hi] if not v.interval.empty else None,
        "in_interval": v.in_interval,
        "additional_condition": bool(add.holds) if add else None,
        "additional_ratio": float(add.ratio) if add else None,
        "lambda_min": v.lambda_min,
    }
    if not v.boundary_agrees:
        out["boundary_warning"] = "determinant and eigenvalue routes disagree"
    print(json.dumps(out, indent=2))
    return EXIT_CERTIFIED if v.certified else EXIT_NOT_CERTIFIED


def _boundary_rows(res):
    """Per ``(v, eta)`` point of the certified set: lower and upper r and the active upper limit."""
    rows = []
    hi = res.certified_high
    for i, v in enumerate(res.v):
        for j, eta in enumerate(res.eta):
            if res.certified[i, j]:
                src = "additional" if res.r_cut[i, j] < res.r_high[i, j] else "threshold"
                rows.append((v, eta, res.r_low[i, j], hi[i, j], src))
    return rows


def cmd_region(args):
    etas, vs = _grid(args.eta), _grid(args.v)
    if etas[0] <= 0 or etas[-1] > 1 or vs[0] < 0 or vs[-1] >= 1:
        raise argparse.ArgumentTypeError("eta must lie in (0, 1] and v in [0, 1)")
    res = ghzcert.sweep_region(args.n, etas, vs, args.cls, args.m, args.layout,
                               threads=_threads(args), iters=args.iters)
    cfg = _config(args, m_used=res.m, layout_used=res.layout, kappa=res.kappa,
                  threads=_threads(args))
    rows = []
    for i, v in enumerate(vs):
        for j, eta in enumerate(etas):
            rows.append((eta, v, res.r_low[i, j], res.r_high[i, j], res.r_cut[i, j]))
    write_csv(["eta", "v", "r_threshold_low", "r_threshold_high", "additional_condition"],
              rows, cfg, args.out)
    if args.out not in (None, "-"):
        path = args.boundary or args.out + ".boundary.csv"
        write_csv(["v", "eta", "r_lower", "r_upper", "upper_source"], _boundary_rows(res), cfg, path)
    return EXIT_OK


def cmd_tables(args):
    rows = ghzcert.table_generate(args.cls, args.n_lo, args.n_hi)
    if args.cls in ("genuine", "bisep", "trisep", "quadsep"):
        diffs = ghzcert.diff_tables(rows, ghzcert.reference_rows(args.cls), args.n_lo, args.n_hi)
    else:
        diffs = []
    blocks = ghzcert.class_blocks(args.cls)
    out = []
    for d in diffs:
        sizes = None
        if d.computed:
            sizes = ghzcert.candidate_layouts(d.computed[0], blocks)[d.layout]
        c0, c1 = d.computed or (None, None)
        r0, r1 = d.reference or (None, None)
        dl = d.delta or (None, None)
        out.append((d.m, d.layout, " ".join(map(str, sizes)) if sizes else "", c0, c1, r0, r1, dl[0], dl[1]))
    if not args.quiet:
        print(f"{'m':>3} {'layout':>6} {'start':>10} {'end':>10} {'ref_start':>10} {'ref_end':>10}  diff",
              file=sys.stderr)
        for m, lay, _, c0, c1, r0, r1, d0, d1 in out:
            flag = "" if d0 is not None and abs(d0) <= 1 and abs(d1) <= 1 else "  *"
            print(f"{m:>3} {lay:>6} {_fmt(c0):>10} {_fmt(c1):>10} {_fmt(r0):>10} {_fmt(r1):>10}"
                  f"  {_fmt(d0)},{_fmt(d1)}{flag}", file=sys.stderr)
    write_csv(["m", "layout", "sizes_at_start", "n_start", "n_end", "ref_start", "ref_end",
               "diff_start", "diff_end"], out, _config(args), args.out)
    return EXIT_OK


def cmd_kappa(args):
    if args.sizes:
        res = ghzcert.kappa_layout(args.n, args.m, args.sizes)
    else:
        res = ghzcert.kappa_bisep(args.n, args.m, args.n0)
    print(json.dumps({"n": args.n, "m": args.m, "sizes": list(res.sizes), "kappa": res.kappa,
                      "xi": res.xi, "exact": str(res.exact) if res.exact is not None else None}))
    return EXIT_OK


def cmd_check_cm(args):
    cm = load_cm(args.file)
    gamma = expand_full(cm) if isinstance(cm, SymmetricCm) else cm
    n = gamma.shape[0] // 2
    fam = class_family(n, args.cls, args.k)
    fam.partitions()  # enforce the enumeration cap before any heavy work
    cfg = OptConfig(n_starts=args.starts, polish_iters=args.polish, tol=args.tol,
                    seed=args.seed, n_samples=args.samples)
    v = certify(gamma, fam, cfg)
    print(json.dumps({
        "certified": v.certified,
        "converged": v.converged,
        "best_value": v.best_value,
        "upper_bound": v.upper_bound,
        "family": fam.describe(),
        "partitions": [str(p) for p in v.partitions],
        "q": [float(x) for x in v.q],
        "T": v.t.tolist(),
    }, indent=2))
    if not v.converged:
        return EXIT_NONCONVERGED
    return EXIT_CERTIFIED if v.certified else EXIT_NOT_CERTIFIED


def cmd_producibility(args):
    noise = _noise(args)
    js = args.J or list(range(args.n - 1, (args.n + 1) // 2 - 1, -1))
    bis = ghzcert.bisep_threshold(args.n, *_bisep_mn0(args.n), args.eta, noise)
    rows = [("bisep", None, None, None, bis.lo if not bis.empty else None,
             bis.hi if not bis.empty else None)]
    intervals = []
    for J in js:
        res = ghzcert.producibility_threshold(args.n, J, args.eta, noise)
        iv = res.interval
        intervals.append((J, iv))
        rows.append((J, res.m, res.n0, res.kappa if res.m else None,
                     None if iv.empty else iv.lo, None if iv.empty else iv.hi))
    # a smaller J is a stronger claim, so its violated set can only shrink as J grows
    ordered = sorted(intervals)
    nested = all(b.contains_interval(a) or a.empty for (_, a), (_, b) in zip(ordered[1:], ordered[:-1]))
    write_csv(["J", "m", "n0", "kappa", "r_threshold_low", "r_threshold_high"], rows,
              _config(args, nested=nested), args.out)
    return EXIT_OK


def _bisep_mn0(n):
    p = ghzcert.optimal_params(n, "genuine")
    return p.m, p.n0


def cmd_oracle(args):
    reports = oracle.run_suite(args.suite)
    for r in reports:
        print(r.to_json())
    passed = sum(r.passed for r in reports)
    print(f"# {args.suite}: {passed}/{len(reports)} passed", file=sys.stderr)
    return EXIT_OK if passed == len(reports) else 1


# -- parser ------------------------------------------------------------------


def _add_noise(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--v", type=float, default=0.0, help="noise coordinate N/(N+1)")
    g.add_argument("--noise-n", type=float, default=None, help="mean thermal photon number N")


def build_parser():
    ap = argparse.ArgumentParser(prog="cvsign", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=None, help="worker threads (env CVW_THREADS)")
    # also accepted after the subcommand; SUPPRESS keeps the top-level value otherwise
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)
    classes = sorted(ghzcert.CLASS_BLOCKS)

    p = sub.add_parser("certify", parents=[common], help="certify one lossy noisy GHZ state")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--class", dest="cls", choices=classes, default="genuine")
    p.add_argument("--eta", type=float, default=1.0)
    _add_noise(p)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--layout", choices=("half", "one"))
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("region", parents=[common], help="sweep the (eta, v) plane")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--class", dest="cls", choices=classes, default="genuine")
    p.add_argument("--eta", type=float, nargs=3, metavar=("LO", "HI", "STEP"), required=True)
    p.add_argument("--v", type=float, nargs=3, metavar=("LO", "HI", "STEP"), required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--layout", choices=("half", "one"))
    p.add_argument("--iters", type=int, default=40)
    p.add_argument("--out", default="-")
    p.add_argument("--boundary", help="boundary file (default OUT.boundary.csv)")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("tables", parents=[common], help="regenerate (m, layout) ranges")
    p.add_argument("--class", dest="cls", choices=classes, default="genuine")
    p.add_argument("--n-lo", type=int, default=3)
    p.add_argument("--n-hi", type=int, default=10_000)
    p.add_argument("--out", default="-")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("kappa", parents=[common], help="evaluate kappa")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--n0", type=int)
    g.add_argument("--sizes", type=int, nargs="+")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("check-cm", parents=[common], help="run the generic criterion on a CM file")
    p.add_argument("file")
    p.add_argument("--class", dest="cls", choices=("genuine", "ksep", "jprod"), default="genuine")
    p.add_argument("--k", type=int, help="K for ksep, J for jprod")
    p.add_argument("--starts", type=int, default=2000)
    p.add_argument("--polish", type=int, default=200)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_check_cm)

    p = sub.add_parser("producibility", parents=[common], help="J-producibility thresholds")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--J", type=int, nargs="+")
    p.add_argument("--eta", type=float, default=1.0)
    _add_noise(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_producibility)

    p = sub.add_parser("oracle", parents=[common], help="run a brute-force cross-check suite")
    p.add_argument("suite", choices=sorted(oracle.SUITES))
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command in ("check-cm",) and args.cls != "genuine" and args.k is None:
        ap.error("--k is required for ksep and jprod")
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (CvsignError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
