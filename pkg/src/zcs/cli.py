"""Command line front end.

Exit codes: 0 on success, 2 on precondition failures (bad parameters,
geometry, or file contents), 3 on numerical failures (divergence,
ambiguous estimates). ZCS_THREADS caps parallelism for the pipeline
commands.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from .errors import NumericalError, PreconditionError
from .medium import medium_from_config
from .pipeline import (
    load_config,
    report_to_dict,
    run_forward,
    run_recover,
    uniqueness_test,
)
from .tomo import (
    reconstruct,
    reconstruction_to_csv,
    sinogram_from_csv,
    sinogram_to_csv,
    xray_forward,
)
from .zerocount import (
    StripRegion,
    analytic_zeros_two_term,
    count_zeros_rect,
    two_term,
    zeros_to_csv,
)


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True, indent=2))


def _cmd_forward(args) -> int:
    config = load_config(args.config)
    if args.tail_seed is not None:
        raw = config.to_dict()
        raw["signal"]["seed"] = args.tail_seed
        config = type(config).from_dict(raw)
    bundle = run_forward(config, args.out, sweep_tol=args.sweep_tol)
    _emit({"bundle": str(bundle)})
    return 0


def _cmd_recover(args) -> int:
    recon, report = run_recover(args.bundle, args.out)
    _emit(report)
    return 0


def _cmd_zeros(args) -> int:
    g = two_term(args.amp, args.tau)
    if args.im_min is None or args.im_max is None:
        # the two-term zeros sit at Im k = ln(A)/tau; pad by one unit
        level = math.log(args.amp) / args.tau
        lo = level - 1.0 if args.im_min is None else args.im_min
        hi = level + 1.0 if args.im_max is None else args.im_max
    else:
        lo, hi = args.im_min, args.im_max
    rect = StripRegion(args.re_min, args.re_max - args.re_min, lo, hi)
    count = count_zeros_rect(g, rect)
    # overfill the analytic list by two indices on each side of the window
    m_lo = math.floor(args.re_min * args.tau / (2.0 * math.pi)) - 2
    m_hi = math.ceil(args.re_max * args.tau / (2.0 * math.pi)) + 2
    zeros = analytic_zeros_two_term(args.amp, args.tau, range(m_lo, m_hi + 1))
    inside = zeros[rect.contains(zeros)]
    if args.out:
        zeros_to_csv(inside, args.out)
    _emit({
        "count": count,
        "analytic_count": int(inside.size),
        "rect": {"re": [args.re_min, args.re_max], "im": [lo, hi]},
    })
    return 0


def _cmd_sinogram(args) -> int:
    config = load_config(args.config)
    medium = medium_from_config(config.phantom)
    geo = config.geometry
    sino = xray_forward(medium, geo.n_dirs, geo.n_offsets)
    sinogram_to_csv(sino, args.out)
    _emit({"sinogram": args.out, "n_dirs": geo.n_dirs, "n_offsets": geo.n_offsets})
    return 0


def _cmd_reconstruct(args) -> int:
    sino = sinogram_from_csv(args.sinogram, args.radius)
    recon = reconstruct(
        sino,
        args.grid_n,
        method=args.method,
        sweeps=args.sweeps,
        relax=args.relax,
        seed=args.seed,
    )
    reconstruction_to_csv(recon, args.out)
    _emit({
        "out": args.out,
        "grid_n": recon.grid_n,
        "iterations": recon.iterations,
        "final_residual": float(recon.residual_history[-1]),
    })
    return 0


def _cmd_uniq(args) -> int:
    report = uniqueness_test(load_config(args.config), load_config(args.other))
    payload = report_to_dict(report)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
    _emit(payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zcs",
        description="Phaseless scattering synthesis, dip-based travel-time "
        "recovery, and straight-ray tomography.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", help="synthesize a hashed data bundle")
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--out", required=True, help="bundle directory")
    p.add_argument("--tail-seed", type=int, default=None,
                   help="override the config's tail seed")
    p.add_argument("--sweep-tol", type=float, default=1e-8,
                   help="eikonal residual tolerance")
    p.set_defaults(run=_cmd_forward)

    p = sub.add_parser("recover", help="estimate travel times from a bundle and invert")
    p.add_argument("--bundle", required=True, help="bundle directory from forward")
    p.add_argument("--out", default=None, help="output directory (default: bundle)")
    p.set_defaults(run=_cmd_recover)

    p = sub.add_parser("zeros", help="count/list zeros of the two-term chord model")
    p.add_argument("--amp", type=float, required=True, help="amplitude A")
    p.add_argument("--tau", type=float, required=True, help="travel-time gap tau")
    p.add_argument("--re-min", type=float, required=True)
    p.add_argument("--re-max", type=float, required=True)
    p.add_argument("--im-min", type=float, default=None)
    p.add_argument("--im-max", type=float, default=None)
    p.add_argument("--out", default=None, help="CSV of zeros inside the rectangle")
    p.set_defaults(run=_cmd_zeros)

    p = sub.add_parser("sinogram", help="straight-chord travel times of a phantom")
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--out", required=True, help="sinogram CSV path")
    p.set_defaults(run=_cmd_sinogram)

    p = sub.add_parser("reconstruct", help="invert a sinogram CSV on a grid")
    p.add_argument("--sinogram", required=True, help="sinogram CSV path")
    p.add_argument("--radius", type=float, default=1.0, help="support radius")
    p.add_argument("--grid-n", type=int, default=64)
    p.add_argument("--method", choices=("kaczmarz", "cgls"), default="kaczmarz")
    p.add_argument("--sweeps", type=int, default=20)
    p.add_argument("--relax", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0, help="row-order seed")
    p.add_argument("--out", required=True, help="reconstruction CSV path")
    p.set_defaults(run=_cmd_reconstruct)

    p = sub.add_parser("uniq", help="compare two experiments' phaseless data")
    p.add_argument("--config", required=True, help="first experiment config")
    p.add_argument("--other", required=True, help="second experiment config")
    p.add_argument("--out", default=None, help="write the report JSON here too")
    p.set_defaults(run=_cmd_uniq)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
