"""End-to-end recoloring: color transform, constraints, landmarks, solve.

A job carries a source image, target images, a validated correspondence set,
and a configuration.  Running it walks the fixed stage sequence and returns
the recolored image, the solver report, and per-stage wall times so callers
can surface both quality and cost.  Every stage failure is re-raised with the
stage name attached.
"""

from __future__ import annotations

import hashlib
import json
import time
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .colorspace import LabImage, RgbImage, lab_to_rgb, rgb_to_lab
from .imageio import read_mask, read_rgb, resize_mask, resize_rgb
from .landmarks import (
    DegenerateColorCloud,
    build_landmark_set,
    reconstruct,
    redistribute_constraints,
)
from .lle import build_graph
from .regions import Correspondence, CorrespondenceSet, validate_set
from .features import build_features
from .solver import SolveReport, assemble_weighted, solve
from .stats import build_constraints

STAGES = (
    "rgb_to_lab",
    "constraints",
    "landmarks",
    "redistribute",
    "graph",
    "solve",
    "reconstruct",
    "lab_to_rgb",
)

_CONFIG_KEYS = ("k", "beta", "lambda", "spatial_weight", "seed", "tol")


@dataclass(frozen=True)
class PipelineConfig:
    k: int = 21
    beta: float = 0.05
    lam: float = 100.0
    spatial_weight: float = 0.5
    seed: int = 0
    tol: float = 1e-6

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")
        if self.lam <= 0.0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.tol <= 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.spatial_weight < 0.0:
            raise ValueError(f"spatial_weight must be nonnegative, got {self.spatial_weight}")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        for key in data:
            if key not in _CONFIG_KEYS:
                raise ValueError(f"unknown config field '{key}'")
        return cls(
            k=int(data.get("k", cls.k)),
            beta=float(data.get("beta", cls.beta)),
            lam=float(data.get("lambda", cls.lam)),
            spatial_weight=float(data.get("spatial_weight", cls.spatial_weight)),
            seed=int(data.get("seed", cls.seed)),
            tol=float(data.get("tol", cls.tol)),
        )

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "beta": self.beta,
            "lambda": self.lam,
            "spatial_weight": self.spatial_weight,
            "seed": self.seed,
            "tol": self.tol,
        }

    def merged(self, overrides: dict) -> "PipelineConfig":
        data = self.to_dict()
        for key in overrides:
            if key not in _CONFIG_KEYS:
                raise ValueError(f"unknown config field '{key}'")
        data.update(overrides)
        return PipelineConfig.from_dict(data)


@dataclass(frozen=True)
class TransferJob:
    source: RgbImage
    targets: dict  # target id -> RgbImage
    corr_set: CorrespondenceSet
    config: PipelineConfig = field(default_factory=PipelineConfig)


class PipelineError(RuntimeError):
    """A stage failure; str(err) is '<stage>: <original message>'."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


class PipelineCache:
    """Keyed store for landmark sets and weight graphs across repeated solves.

    Keys embed the source digest and every parameter the artifact depends on,
    so scribble or target edits naturally hit, while image or sampling
    parameter changes naturally miss.
    """

    def __init__(self):
        self._entries = {}

    def get(self, key):
        return self._entries.get(key)

    def put(self, key, value) -> None:
        self._entries[key] = value

    def __len__(self) -> int:
        return len(self._entries)


def source_digest(img: RgbImage) -> str:
    h = hashlib.sha1()
    h.update(np.asarray([img.width, img.height], dtype=np.int64).tobytes())
    h.update(np.ascontiguousarray(img.pixels).tobytes())
    return h.hexdigest()


@contextmanager
def _stage(timings: dict, name: str):
    start = time.perf_counter()
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc
    finally:
        timings[name] = (time.perf_counter() - start) * 1000.0


def landmark_set_for(lab: LabImage, cfg: PipelineConfig):
    """The job's landmark set, falling back to every distinct color when the
    color cloud cannot be triangulated."""
    try:
        return build_landmark_set(lab, cfg.beta, cfg.seed)
    except DegenerateColorCloud:
        return build_landmark_set(lab, 1.0, cfg.seed)


def _pinned_report(colors: np.ndarray, lambda_diag: np.ndarray, rhs: np.ndarray) -> SolveReport:
    """Closed-form solve when the landmark set is a single color point."""
    solution = colors.copy()
    pinned = lambda_diag > 0.0
    solution[pinned] = rhs[pinned] / lambda_diag[pinned, None]
    channels = rhs.shape[1]
    return SolveReport(
        solution=solution,
        iterations=np.zeros(channels, dtype=np.int64),
        relative_residual=np.zeros(channels),
        energy=np.zeros(channels),
        converged=np.ones(channels, dtype=bool),
    )


def run(
    job: TransferJob,
    cache: PipelineCache | None = None,
    warm_start: np.ndarray | None = None,
) -> tuple[RgbImage, SolveReport, dict]:
    """Execute the full transfer and return (image, solve report, timings ms).

    A degenerate color cloud (affinely dependent colors) silently falls back
    to solving on every distinct color.  `warm_start` seeds the solver when
    its shape matches the landmark count; `cache` lets repeated solves of the
    same source skip landmark selection and graph construction.
    """
    cfg = job.config
    timings: dict = {}

    with _stage(timings, "rgb_to_lab"):
        lab = rgb_to_lab(job.source)
        lab_targets = {tid: rgb_to_lab(img) for tid, img in job.targets.items()}

    with _stage(timings, "constraints"):
        constraint_field = build_constraints(lab, job.corr_set, lab_targets)

    with _stage(timings, "landmarks"):
        digest = source_digest(job.source)
        lmk_key = ("landmarks", digest, cfg.beta, cfg.seed)
        lset = cache.get(lmk_key) if cache is not None else None
        if lset is None:
            lset = landmark_set_for(lab, cfg)
            if cache is not None:
                cache.put(lmk_key, lset)

    with _stage(timings, "redistribute"):
        lambda_diag, rhs = redistribute_constraints(lset, constraint_field, cfg.lam)

    with _stage(timings, "graph"):
        k_eff = min(cfg.k, lset.n_landmarks - 1)
        graph = None
        if k_eff >= 1:
            if k_eff < cfg.k:
                warnings.warn(
                    f"k clamped from {cfg.k} to {k_eff} ({lset.n_landmarks} landmarks)",
                    stacklevel=2,
                )
            graph_key = ("graph", digest, cfg.beta, cfg.seed, k_eff, cfg.spatial_weight)
            graph = cache.get(graph_key) if cache is not None else None
            if graph is None:
                space = build_features(lab, lset.eta, cfg.spatial_weight)
                graph = build_graph(space, k_eff)
                if cache is not None:
                    cache.put(graph_key, graph)

    with _stage(timings, "solve"):
        if graph is None:
            report = _pinned_report(lset.colors, lambda_diag, rhs)
        else:
            system = assemble_weighted(graph, lambda_diag, rhs, cfg.lam)
            x0 = lset.colors
            if warm_start is not None and np.shape(warm_start) == x0.shape:
                x0 = np.asarray(warm_start, dtype=np.float64)
            report = solve(system, tol=cfg.tol, x0=x0)

    with _stage(timings, "reconstruct"):
        points = reconstruct(report.solution, lset)

    with _stage(timings, "lab_to_rgb"):
        planes = points.T.reshape(3, lab.height, lab.width)
        result = lab_to_rgb(LabImage(planes))

    return result, report, timings


def preview_job(job: TransferJob, max_dim: int) -> TransferJob:
    """The same job proportionally downscaled so no image exceeds max_dim.

    Images are area-averaged, masks nearest-neighbor resampled; images already
    within the bound are kept untouched.
    """
    if max_dim < 32:
        raise ValueError(f"max_dim must be at least 32, got {max_dim}")

    def dims_for(width: int, height: int) -> tuple[int, int]:
        longest = max(width, height)
        if longest <= max_dim:
            return width, height
        scale = max_dim / longest
        return max(1, round(width * scale)), max(1, round(height * scale))

    sw, sh = dims_for(job.source.width, job.source.height)
    source = (
        job.source
        if (sw, sh) == (job.source.width, job.source.height)
        else resize_rgb(job.source, sw, sh)
    )
    targets = {}
    target_dims = {}
    for tid, img in job.targets.items():
        tw, th = dims_for(img.width, img.height)
        targets[tid] = img if (tw, th) == (img.width, img.height) else resize_rgb(img, tw, th)
        target_dims[tid] = (tw, th)

    corrs = []
    for corr in job.corr_set.correspondences:
        tw, th = target_dims[corr.target_image_id]
        corrs.append(
            Correspondence(
                resize_mask(corr.source_region, sw, sh),
                corr.target_image_id,
                resize_mask(corr.target_region, tw, th),
            )
        )
    keeps = tuple(resize_mask(keep, sw, sh) for keep in job.corr_set.keep_regions)
    corr_set = validate_set(CorrespondenceSet(tuple(corrs), keeps), (sw, sh), target_dims)
    return TransferJob(source, targets, corr_set, job.config)


def preview(job: TransferJob, max_dim: int = 256) -> RgbImage:
    """Run the identical pipeline on the downscaled job for fast feedback."""
    return run(preview_job(job, max_dim))[0]


def job_from_dict(data: dict, base_dir=".") -> TransferJob:
    """Build a validated TransferJob from the JSON job description."""
    known = {"source", "targets", "correspondences", "keep_masks", "config"}
    for key in data:
        if key not in known:
            raise ValueError(f"unknown job field '{key}'")
    for key in ("source", "targets", "correspondences"):
        if key not in data:
            raise ValueError(f"missing job field '{key}'")
    base = Path(base_dir)

    def resolve(p) -> Path:
        path = Path(p)
        return path if path.is_absolute() else base / path

    source = read_rgb(resolve(data["source"]))
    targets = {tid: read_rgb(resolve(p)) for tid, p in data["targets"].items()}

    corrs = []
    for i, entry in enumerate(data["correspondences"]):
        for key in entry:
            if key not in ("source_mask", "target", "target_mask"):
                raise ValueError(f"unknown correspondence field '{key}'")
        for key in ("source_mask", "target", "target_mask"):
            if key not in entry:
                raise ValueError(f"correspondence {i} missing '{key}'")
        corrs.append(
            Correspondence(
                read_mask(resolve(entry["source_mask"])),
                str(entry["target"]),
                read_mask(resolve(entry["target_mask"])),
            )
        )
    keeps = tuple(read_mask(resolve(p)) for p in data.get("keep_masks", []))
    config = PipelineConfig.from_dict(data.get("config", {}))
    corr_set = validate_set(
        CorrespondenceSet(tuple(corrs), keeps),
        (source.width, source.height),
        {tid: (img.width, img.height) for tid, img in targets.items()},
    )
    return TransferJob(source, targets, corr_set, config)


def load_job(path) -> TransferJob:
    """Read a JSON job file; relative paths resolve against its directory."""
    p = Path(path)
    data = json.loads(p.read_text())
    return job_from_dict(data, p.parent)
