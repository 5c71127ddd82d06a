"""Command-line front end: batch transfer, preview, artifact dumps, serving.

Every failure prints a single diagnostic line prefixed "error:" to stderr.
Exit codes: 0 success, 2 validation or input error, 3 solver non-convergence
(unless --allow-nonconverged).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import pipeline
from .colorspace import lab_points_to_rgb, rgb_to_lab, RgbImage
from .features import build_features
from .imageio import read_mask, read_rgb, write_png
from .lle import build_graph, dump_weights
from .regions import Correspondence, CorrespondenceSet, validate_set
from .stats import build_constraints

DUMP_KINDS = ("landmarks", "weights", "constraints")


class CliError(Exception):
    """Invalid invocation or input; printed as an error: line, exit 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _add_job_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--job", help="JSON job description")
    parser.add_argument("--source", help="source image (inline job)")
    parser.add_argument("--target", action="append", default=[], metavar="ID=PATH",
                        help="target image (repeatable)")
    parser.add_argument("--pair", action="append", default=[], metavar="SMASK:ID:TMASK",
                        help="correspondence masks (repeatable)")
    parser.add_argument("--keep", action="append", default=[], metavar="MASK",
                        help="keep-region mask (repeatable)")
    parser.add_argument("--k", type=int)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--lambda", dest="lam", type=float)
    parser.add_argument("--spatial-weight", dest="spatial_weight", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--tol", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chromaflow", description="Region-directed color transfer.")
    sub = parser.add_subparsers(dest="command", required=True)

    transfer = sub.add_parser("transfer", help="run a job and write the result PNG")
    _add_job_flags(transfer)
    transfer.add_argument("--out", help="output PNG path")
    transfer.add_argument("--allow-nonconverged", action="store_true",
                          help="exit 0 even when the solver does not converge")

    preview = sub.add_parser("preview", help="run a downscaled job for fast feedback")
    _add_job_flags(preview)
    preview.add_argument("--out", help="output PNG path")
    preview.add_argument("--max-dim", dest="max_dim", type=int, default=256)
    preview.add_argument("--allow-nonconverged", action="store_true")

    inspect = sub.add_parser("inspect", help="dump an intermediate artifact")
    inspect.add_argument("--job", required=True)
    inspect.add_argument("--dump", required=True, choices=DUMP_KINDS)
    inspect.add_argument("--out", help="output path")

    serve = sub.add_parser("serve", help="start the local editing service")
    serve.add_argument("--port", type=int, default=7878)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--static", help="directory of web UI assets to serve at /")
    return parser


def _config_overrides(args) -> dict:
    overrides = {}
    if args.k is not None:
        overrides["k"] = args.k
    if args.beta is not None:
        overrides["beta"] = args.beta
    if args.lam is not None:
        overrides["lambda"] = args.lam
    if args.spatial_weight is not None:
        overrides["spatial_weight"] = args.spatial_weight
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.tol is not None:
        overrides["tol"] = args.tol
    return overrides


def _job_from_args(args) -> pipeline.TransferJob:
    if args.job:
        job = pipeline.load_job(args.job)
        overrides = _config_overrides(args)
        if overrides:
            job = pipeline.TransferJob(
                job.source, job.targets, job.corr_set, job.config.merged(overrides)
            )
        return job

    if not args.source:
        raise CliError("missing --job or --source")
    if not args.target:
        raise CliError("missing --target")
    if not args.pair:
        raise CliError("missing --pair")
    source = read_rgb(args.source)
    targets = {}
    for spec_str in args.target:
        tid, sep, path = spec_str.partition("=")
        if not sep or not tid or not path:
            raise CliError(f"invalid --target '{spec_str}' (expected ID=PATH)")
        targets[tid] = read_rgb(path)
    corrs = []
    for spec_str in args.pair:
        parts = spec_str.split(":")
        if len(parts) != 3:
            raise CliError(f"invalid --pair '{spec_str}' (expected SMASK:ID:TMASK)")
        smask, tid, tmask = parts
        corrs.append(Correspondence(read_mask(smask), tid, read_mask(tmask)))
    keeps = tuple(read_mask(p) for p in args.keep)
    corr_set = validate_set(
        CorrespondenceSet(tuple(corrs), keeps),
        (source.width, source.height),
        {tid: (img.width, img.height) for tid, img in targets.items()},
    )
    config = pipeline.PipelineConfig.from_dict(_config_overrides(args))
    return pipeline.TransferJob(source, targets, corr_set, config)


def _status_line(report, timings: dict, out_path: str) -> str:
    return json.dumps({
        "out": out_path,
        "stages_ms": {name: round(ms, 3) for name, ms in timings.items()},
        "total_ms": round(sum(timings.values()), 3),
        "landmarks": int(report.solution.shape[0]),
        "iterations": [int(v) for v in report.iterations],
        "residuals": [float(v) for v in report.relative_residual],
        "energy": [float(v) for v in report.energy],
        "converged": [bool(v) for v in report.converged],
    })


def cmd_transfer(args) -> int:
    if not args.out:
        raise CliError("missing --out")
    job = _job_from_args(args)
    if args.command == "preview":
        job = pipeline.preview_job(job, args.max_dim)
    result, report, timings = pipeline.run(job)
    write_png(result, args.out)
    print(_status_line(report, timings, args.out))
    if not all(report.converged) and not args.allow_nonconverged:
        print("error: solver did not converge", file=sys.stderr)
        return 3
    return 0


def _dump_landmarks(job: pipeline.TransferJob, out_path: str) -> None:
    lab = rgb_to_lab(job.source)
    lset = pipeline.landmark_set_for(lab, job.config)
    with open(out_path, "w") as fp:
        for idx, color in zip(lset.eta, lset.colors):
            l, a, b = (float(v) for v in color)
            fp.write(f"{int(idx)},{l!r},{a!r},{b!r}\n")


def _dump_graph_weights(job: pipeline.TransferJob, out_path: str) -> None:
    lab = rgb_to_lab(job.source)
    lset = pipeline.landmark_set_for(lab, job.config)
    if lset.n_landmarks < 2:
        raise CliError("too few landmarks to build a weight graph")
    k_eff = min(job.config.k, lset.n_landmarks - 1)
    space = build_features(lab, lset.eta, job.config.spatial_weight)
    graph = build_graph(space, k_eff)
    with open(out_path, "w") as fp:
        dump_weights(graph, fp)


def _dump_constraints(job: pipeline.TransferJob, out_path: str) -> None:
    lab = rgb_to_lab(job.source)
    lab_targets = {tid: rgb_to_lab(img) for tid, img in job.targets.items()}
    field = build_constraints(lab, job.corr_set, lab_targets)
    canvas = np.zeros((job.source.height, job.source.width, 3), dtype=np.uint8)
    flat = canvas.reshape(-1, 3)
    values = lab_points_to_rgb(field.targets[field.constrained])
    # Constrained pixels are floored at 1 so background black marks only
    # unconstrained pixels.
    flat[field.constrained] = np.maximum(np.rint(values * 255.0), 1.0).astype(np.uint8)
    write_png(RgbImage(canvas), out_path)


def cmd_inspect(args) -> int:
    if not args.out:
        raise CliError("missing --out")
    job = pipeline.load_job(args.job)
    if args.dump == "landmarks":
        _dump_landmarks(job, args.out)
    elif args.dump == "weights":
        _dump_graph_weights(job, args.out)
    else:
        _dump_constraints(job, args.out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command in ("transfer", "preview"):
            return cmd_transfer(args)
        if args.command == "inspect":
            return cmd_inspect(args)
        return cmd_serve(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError, json.JSONDecodeError, pipeline.PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
