"""Command-line interface.

Subcommands: dist, sweep, accumulate, bench, downsample, profile.
Exit codes: 0 success, 2 file/config parse failures, 3 metric precondition
violations.  Values print with 9 significant digits; --json emits
full-precision machine-readable output on stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cloudio import read_cloud, write_cloud
from .dsample import SamplerParams, ScoredCloud, get_scorer, guided_downsample
from .errors import CardinalityMismatchError, CloudParseError, PointCloudError
from .gradients import loss_and_grad, gradient_profile
from .metrics import DcdParams, chamfer, dcd, dcd_unequal, hausdorff
from .reports import (
    SweepConfig,
    accumulation_curve,
    run_bench,
    run_sweep,
)
from .transport import emd_approx, emd_exact, emd_value


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="master seed for seeded commands")
    p.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("--json", action="store_true", help="emit JSON on stdout")


def _dcd_params(args) -> DcdParams:
    return DcdParams(
        alpha=args.alpha, lambda_=args.lambda_, exponent_mode=args.exponent_mode
    )


def cmd_dist(args) -> int:
    a = read_cloud(args.file_a)
    b = read_cloud(args.file_b)
    params = _dcd_params(args)
    metrics: dict = {}
    per_point: dict = {}

    def record(name, report):
        metrics[name] = report.value
        if args.per_point:
            per_point[name] = {
                "src": report.per_point_src.tolist(),
                "tgt": report.per_point_tgt.tolist(),
            }

    if args.cd:
        record("cd_t", chamfer(a, b, "T"))
    if args.cd_p:
        record("cd_p", chamfer(a, b, "P"))
    if args.hd:
        metrics["hd"] = hausdorff(a, b)
    if args.dcd:
        if a.size != b.size and args.variant is None:
            raise CardinalityMismatchError(
                f"point counts differ ({a.size} vs {b.size}); "
                "pass --variant e (or --variant naive) to use the "
                "unequal-size density-aware distance"
            )
        if a.size == b.size and args.variant is None:
            record("dcd", dcd(a, b, params))
        else:
            variant = args.variant or "e"
            record("dcd", dcd_unequal(a, b, params, variant))
            metrics["dcd_variant"] = variant
    if args.emd:
        res = emd_approx(a, b, args.eps, args.max_iters)
        metrics["emd"] = emd_value(res, args.emd_normalize)
        metrics["emd_approx_error"] = res.approx_error
        if not res.converged:
            metrics["emd_converged"] = False
    if args.emd_exact:
        res = emd_exact(a, b)
        metrics["emd_exact"] = emd_value(res, args.emd_normalize)

    grad_out = None
    if args.grad:
        field = loss_and_grad(a, b, args.grad, params, wrt="both")
        metrics[f"loss_{args.grad.replace('-', '_')}"] = field.loss_value
        grad_out = {
            "loss": args.grad,
            "loss_value": field.loss_value,
            "grad_s1": field.grad_s1.tolist(),
            "grad_s2": field.grad_s2.tolist(),
        }

    if not metrics:
        print("error: select at least one metric flag", file=sys.stderr)
        return 2

    if args.json:
        doc = {"files": [str(args.file_a), str(args.file_b)], "metrics": metrics}
        if per_point:
            doc["per_point"] = per_point
        if grad_out:
            doc["gradient"] = grad_out
        print(json.dumps(doc))
    else:
        for name, v in metrics.items():
            print(f"{name} {_fmt(v) if isinstance(v, float) else v}")
    return 0


def cmd_sweep(args) -> int:
    try:
        cfg_dict = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read sweep config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg_dict.setdefault("master_seed", args.seed)
        if args.threads != 1:
            cfg_dict["threads"] = args.threads
        cfg = SweepConfig.from_dict(cfg_dict)
    except (TypeError, ValueError) as exc:
        print(f"error: invalid sweep config: {exc}", file=sys.stderr)
        return 2
    progress = None
    if not args.json:
        progress = lambda done, total: print(
            f"trial {done}/{total}", file=sys.stderr, flush=True
        )
    report = run_sweep(cfg, progress=progress)
    if args.out_prefix:
        Path(args.out_prefix + ".csv").write_text(report.to_csv())
        Path(args.out_prefix + ".json").write_text(report.to_json())
    if args.json:
        print(report.to_json())
    elif not args.out_prefix:
        print(report.to_csv(), end="")
    return 0


def cmd_accumulate(args) -> int:
    try:
        lines = Path(args.input).read_text().strip().splitlines()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if len(lines) < 2:
        print("error: input CSV needs a header and at least 2 rows", file=sys.stderr)
        return 2
    header = [h.strip() for h in lines[0].split(",")]
    if args.column not in header:
        print(
            f"error: column {args.column!r} not in {header}", file=sys.stderr
        )
        return 2
    col = header.index(args.column)
    try:
        values = [float(line.split(",")[col]) for line in lines[1:] if line.strip()]
    except (ValueError, IndexError):
        print("error: malformed CSV row", file=sys.stderr)
        return 2
    try:
        curve = accumulation_curve(values)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    top25, top50 = curve.top_fraction(0.25), curve.top_fraction(0.50)
    if args.out:
        Path(args.out).write_text(curve.to_csv())
    if args.json:
        print(
            json.dumps(
                {
                    "samples": len(curve.values_desc),
                    "top25_fraction": top25,
                    "top50_fraction": top50,
                    "cum_fraction": curve.cum_fraction.tolist(),
                }
            )
        )
    else:
        print(f"top25_fraction {_fmt(top25)}")
        print(f"top50_fraction {_fmt(top50)}")
        if not args.out:
            print(curve.to_csv(), end="")
    return 0


def cmd_bench(args) -> int:
    sizes = tuple(int(s) for s in args.sizes.split(","))
    progress = None
    if not args.json:
        progress = lambda level, size, done, total: print(
            f"bench {level} n={size}: {done}/{total}", file=sys.stderr, flush=True
        )
    report = run_bench(
        sizes=sizes, trials=args.trials, seed=args.seed, progress=progress
    )
    if args.out:
        Path(args.out).write_text(report.to_csv())
    if args.json:
        doc = {
            "medians": {
                f"{m},{size},{level}": v
                for (m, size, level), v in sorted(report.medians.items())
            },
            "checks": {str(s): report.ordering_checks(s) for s in sizes},
        }
        print(json.dumps(doc))
    else:
        print(report.to_csv(), end="")
        for s in sizes:
            for name, ok in report.ordering_checks(s).items():
                print(f"check n={s} {name}: {'PASS' if ok else 'FAIL'}")
    return 0


def cmd_downsample(args) -> int:
    coarse = read_cloud(args.coarse)
    rec = read_cloud(args.rec) if args.rec else None
    gt = read_cloud(args.gt) if args.gt else None
    scorer_kwargs = {}
    if args.scorer == "oracle" and args.t != "auto":
        scorer_kwargs["t"] = float(args.t)
    scorer = get_scorer(args.scorer, **scorer_kwargs)
    scores = scorer.score(coarse, gt)
    params = SamplerParams(
        beta=args.beta,
        gamma=args.gamma,
        t=float(args.t) if args.t != "auto" else 10.0,
        s=args.s,
    )
    out = guided_downsample(
        ScoredCloud(coarse, scores), rec, params, args.m, args.seed
    )
    write_cloud(out, args.out)
    if args.json:
        print(json.dumps({"out": str(args.out), "points": out.size}))
    else:
        print(f"wrote {out.size} points to {args.out}")
    return 0


def cmd_profile(args) -> int:
    params = _dcd_params(args)
    grid = np.linspace(0.0, args.l_max, args.steps)
    curve = gradient_profile(args.loss, params, grid, n=args.n)
    lines = ["l,grad"] + [f"{l!r},{g!r}" for l, g in curve]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        if not args.json:
            print(f"wrote {len(curve)} rows to {args.out}")
    else:
        print(text, end="")
    if args.json:
        print(json.dumps({"loss": args.loss, "curve": [[l, g] for l, g in curve]}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcdist",
        description="Point-set distances, degradation sweeps, and guided down-sampling",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="distances between two cloud files")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--cd", action="store_true", help="squared Chamfer distance (CD-T)")
    p.add_argument("--cd-p", action="store_true", help="unsquared Chamfer distance (CD-P)")
    p.add_argument("--hd", action="store_true", help="symmetric Hausdorff distance")
    p.add_argument("--dcd", action="store_true", help="density-aware Chamfer distance")
    p.add_argument("--emd", action="store_true", help="approximate Earth Mover's Distance")
    p.add_argument("--emd-exact", action="store_true", help="exact EMD (small clouds)")
    p.add_argument("--alpha", type=float, default=1000.0)
    p.add_argument("--lambda", dest="lambda_", type=float, default=1.0)
    p.add_argument("--exponent-mode", choices=("squared", "euclidean"), default="squared")
    p.add_argument("--variant", choices=("naive", "e"), default=None,
                   help="unequal-size DCD variant (required when sizes differ)")
    p.add_argument("--eps", type=float, default=0.004)
    p.add_argument("--max-iters", type=int, default=3000)
    p.add_argument("--emd-normalize", choices=("mean", "sum"), default="mean")
    p.add_argument("--per-point", action="store_true",
                   help="include per-point contributions in JSON output")
    p.add_argument("--grad", choices=("cd-t", "cd-p", "dcd"), default=None,
                   help="also compute the loss and coordinate gradients")
    _common_flags(p)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("sweep", help="noise/imbalance sensitivity sweep")
    p.add_argument("config", help="sweep config JSON file")
    p.add_argument("--out-prefix", default=None, help="write <prefix>.csv and <prefix>.json")
    _common_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("accumulate", help="accumulation curve from a per-sample CSV")
    p.add_argument("input", help="CSV with a header row")
    p.add_argument("--column", required=True, help="metric column name")
    p.add_argument("--out", default=None, help="write the curve CSV here")
    _common_flags(p)
    p.set_defaults(func=cmd_accumulate)

    p = sub.add_parser("bench", help="wall-time benchmark of cd/dcd/emd")
    p.add_argument("--sizes", default="2048")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--out", default=None)
    _common_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("downsample", help="guided down-sampling of a cloud file")
    p.add_argument("coarse")
    p.add_argument("--rec", default=None, help="reconstruction cloud to merge in")
    p.add_argument("--gt", default=None, help="reference cloud (oracle scorer)")
    p.add_argument("--scorer", default="oracle", help="scorer name (oracle, constant)")
    p.add_argument("--m", type=int, required=True, help="output size")
    p.add_argument("--beta", type=float, default=9.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--t", default="auto", help="distance scale or 'auto'")
    p.add_argument("--s", type=int, default=2, help="upsample factor")
    p.add_argument("--out", required=True)
    _common_flags(p)
    p.set_defaults(func=cmd_downsample)

    p = sub.add_parser("profile", help="per-pair gradient magnitude curve as CSV")
    p.add_argument("--loss", choices=("cd-t", "cd-p", "dcd"), required=True)
    p.add_argument("--alpha", type=float, default=1000.0)
    p.add_argument("--lambda", dest="lambda_", type=float, default=1.0)
    p.add_argument("--exponent-mode", choices=("squared", "euclidean"), default="squared")
    p.add_argument("--n", type=int, default=1, help="query frequency of the pair")
    p.add_argument("--l-max", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=257)
    p.add_argument("--out", default=None)
    _common_flags(p)
    p.set_defaults(func=cmd_profile)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CloudParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PointCloudError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
