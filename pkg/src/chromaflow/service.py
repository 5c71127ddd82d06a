"""Local HTTP service for interactive editing sessions.

A session holds one source image, any number of target images, and the
current scribble-derived correspondence set.  Solves run on a worker pool and
are fetched by polling; landmark sets and weight graphs persist in the
session cache so scribble-only edits skip straight to the solve, warm-started
from the previous solution.

All error responses are JSON objects {"error": ..., "detail": ...}.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .colorspace import RgbImage
from .imageio import encode_png, read_rgb
from .pipeline import PipelineCache, TransferJob, preview_job, run
from .pipeline import PipelineConfig, PipelineError
from .regions import Correspondence, CorrespondenceSet, RegionMask, rasterize_closed_path, validate_set
from .workers import worker_count

MAX_UPLOAD_BYTES = 32 * 1024 * 1024
SESSION_IDLE_SECONDS = 30 * 60
PREVIEW_MAX_DIM = 256


class ApiError(Exception):
    def __init__(self, status: int, error: str, detail=None):
        super().__init__(error)
        self.status = status
        self.error = error
        self.detail = detail

    def response(self) -> JSONResponse:
        return JSONResponse({"error": self.error, "detail": self.detail}, status_code=self.status)


class Session:
    def __init__(self, sid: str, source: RgbImage):
        self.id = sid
        self.source = source
        self.targets: dict = {}
        self.corr_set: CorrespondenceSet | None = None
        self.config = PipelineConfig()
        self.cache = PipelineCache()
        self.last_solution: dict = {}  # mode -> per-landmark solution
        self.jobs: dict = {}  # job id -> {"state", "png", "report", "error"}
        self.last_job: str | None = None
        self.solve_lock = threading.Lock()
        self.last_access = time.monotonic()
        self.expired = False


class SessionStore:
    """In-memory sessions with idle expiry; expired ids answer 410."""

    def __init__(self, idle_seconds: float = SESSION_IDLE_SECONDS):
        self.idle_seconds = idle_seconds
        self._lock = threading.RLock()
        self._sessions: dict = {}

    def create(self, source: RgbImage) -> Session:
        sid = str(uuid.uuid4())
        session = Session(sid, source)
        with self._lock:
            self._sessions[sid] = session
        return session

    def lookup(self, sid: str) -> Session:
        with self._lock:
            session = self._sessions.get(sid)
            if session is None:
                raise ApiError(404, "unknown session", sid)
            if not session.expired and time.monotonic() - session.last_access > self.idle_seconds:
                session.expired = True
                # Drop the heavy payload; keep the tombstone for 410 answers.
                session.targets = {}
                session.cache = PipelineCache()
                session.jobs = {}
                session.last_solution = {}
            if session.expired:
                raise ApiError(410, "session expired", sid)
            session.last_access = time.monotonic()
            return session


def _mask_rle(mask: RegionMask) -> list:
    """Run lengths of the row-major membership grid, starting with a 0-run."""
    flat = mask.member.ravel()
    if flat.size == 0:
        return []
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    lengths = [int(v) for v in np.diff(bounds)]
    if flat[0]:
        lengths.insert(0, 0)
    return lengths


def _points_array(raw, index: int) -> list:
    if not isinstance(raw, list) or len(raw) < 3:
        raise ApiError(422, "validation failed", [{"path": index, "error": "empty region"}])
    try:
        return [(float(p[0]), float(p[1])) for p in raw]
    except (TypeError, ValueError, IndexError):
        raise ApiError(
            422, "validation failed", [{"path": index, "error": "malformed point list"}]
        ) from None


def _parse_correspondences(session: Session, payload) -> CorrespondenceSet:
    """Rasterize and validate a scribble payload; raises ApiError 422."""
    if not isinstance(payload, list):
        raise ApiError(422, "validation failed", [{"path": None, "error": "expected a JSON array"}])
    problems: list = []
    pairs: list = []
    keeps: list = []
    sw, sh = session.source.width, session.source.height
    source_masks: list = []

    for i, entry in enumerate(payload):
        if not isinstance(entry, dict):
            problems.append({"path": i, "error": "expected an object"})
            continue
        kind = entry.get("kind")
        try:
            if kind == "pair":
                tid = entry.get("target_id")
                if tid not in session.targets:
                    raise ValueError(f"unknown target '{tid}'")
                target = session.targets[tid]
                smask = rasterize_closed_path(_points_array(entry.get("source_path"), i), sw, sh)
                tmask = rasterize_closed_path(
                    _points_array(entry.get("target_path"), i), target.width, target.height
                )
                pairs.append(Correspondence(smask, tid, tmask))
                source_masks.append((i, smask))
            elif kind == "keep":
                smask = rasterize_closed_path(_points_array(entry.get("source_path"), i), sw, sh)
                keeps.append(smask)
                source_masks.append((i, smask))
            else:
                raise ValueError(f"unknown kind '{kind}'")
        except ApiError as exc:
            problems.extend(exc.detail)
        except ValueError as exc:
            problems.append({"path": i, "error": str(exc)})

    if not problems:
        coverage = np.zeros((sh, sw), dtype=np.int32)
        for _, mask in source_masks:
            coverage += mask.member
        shared = coverage > 1
        if shared.any():
            for i, mask in source_masks:
                if (mask.member & shared).any():
                    problems.append({"path": i, "error": "overlapping regions"})
    if not problems and not pairs:
        problems.append({"path": None, "error": "at least one pair is required"})
    if problems:
        raise ApiError(422, "validation failed", problems)

    corr_set = CorrespondenceSet(tuple(pairs), tuple(keeps))
    return validate_set(
        corr_set, (sw, sh), {tid: (img.width, img.height) for tid, img in session.targets.items()}
    )


def _report_dict(report, timings: dict) -> dict:
    return {
        "stages_ms": {name: round(ms, 3) for name, ms in timings.items()},
        "total_ms": round(sum(timings.values()), 3),
        "landmarks": int(report.solution.shape[0]),
        "iterations": [int(v) for v in report.iterations],
        "residuals": [float(v) for v in report.relative_residual],
        "energy": [float(v) for v in report.energy],
        "converged": [bool(v) for v in report.converged],
    }


def _run_solve(session: Session, job_id: str, mode: str, config: PipelineConfig) -> None:
    record = session.jobs[job_id]
    try:
        job = TransferJob(session.source, dict(session.targets), session.corr_set, config)
        if mode == "preview":
            job = preview_job(job, PREVIEW_MAX_DIM)
        warm = session.last_solution.get(mode)
        result, report, timings = run(job, cache=session.cache, warm_start=warm)
        session.last_solution[mode] = report.solution
        record["png"] = encode_png(result)
        record["report"] = _report_dict(report, timings)
        record["state"] = "done"
    except (PipelineError, ValueError) as exc:
        record["error"] = str(exc)
        record["state"] = "error"
    except Exception as exc:  # surfaced through GET /result as a 500
        record["error"] = f"internal: {exc}"
        record["state"] = "error"
    finally:
        session.solve_lock.release()


async def _read_upload(request: Request) -> RgbImage:
    body = await request.body()
    if len(body) > MAX_UPLOAD_BYTES:
        raise ApiError(413, "image too large", len(body))
    try:
        return read_rgb(bytes(body))
    except Exception as exc:
        raise ApiError(400, "undecodable image", str(exc)) from exc


def create_app(static_dir=None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        app.state.executor.shutdown(wait=False)

    app = FastAPI(title="chromaflow", lifespan=lifespan)
    app.state.store = SessionStore()
    app.state.executor = ThreadPoolExecutor(max_workers=worker_count())

    @app.exception_handler(ApiError)
    async def _api_error(_request, exc: ApiError):
        return exc.response()

    store: SessionStore = app.state.store

    @app.post("/api/session")
    async def create_session(request: Request):
        source = await _read_upload(request)
        session = store.create(source)
        return JSONResponse({"id": session.id}, status_code=201)

    @app.post("/api/session/{sid}/target")
    async def add_target(sid: str, request: Request):
        session = store.lookup(sid)
        image = await _read_upload(request)
        tid = str(uuid.uuid4())
        session.targets[tid] = image
        return JSONResponse({"target_id": tid}, status_code=201)

    @app.put("/api/session/{sid}/correspondences")
    async def put_correspondences(sid: str, request: Request):
        session = store.lookup(sid)
        try:
            payload = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            raise ApiError(422, "validation failed", [{"path": None, "error": str(exc)}]) from exc
        session.corr_set = _parse_correspondences(session, payload)
        return Response(status_code=204)

    @app.post("/api/session/{sid}/solve")
    async def solve(sid: str, request: Request, mode: str = "full"):
        session = store.lookup(sid)
        if mode not in ("full", "preview"):
            raise ApiError(422, "invalid mode", mode)
        if session.corr_set is None or not session.corr_set.correspondences:
            raise ApiError(422, "no correspondences submitted")
        body = await request.body()
        config = session.config
        if body:
            try:
                overrides = json.loads(body)
                config = config.merged(overrides)
            except (json.JSONDecodeError, ValueError, TypeError) as exc:
                raise ApiError(422, "invalid config overrides", str(exc)) from exc
        if not session.solve_lock.acquire(blocking=False):
            raise ApiError(409, "solve already running")
        job_id = str(uuid.uuid4())
        session.jobs[job_id] = {"state": "running", "png": None, "report": None, "error": None}
        session.last_job = job_id
        app.state.executor.submit(_run_solve, session, job_id, mode, config)
        return JSONResponse({"job": job_id}, status_code=202)

    @app.get("/api/session/{sid}/result/{job_id}")
    async def result(sid: str, job_id: str):
        session = store.lookup(sid)
        record = session.jobs.get(job_id)
        if record is None:
            raise ApiError(404, "unknown job", job_id)
        if record["state"] == "running":
            raise ApiError(409, "solve still running", job_id)
        if record["state"] == "error":
            raise ApiError(500, "solve failed", record["error"])
        return Response(content=record["png"], media_type="image/png")

    @app.get("/api/session/{sid}/status")
    async def status(sid: str):
        session = store.lookup(sid)
        jobs = {jid: rec["state"] for jid, rec in session.jobs.items()}
        if any(state == "running" for state in jobs.values()):
            state = "running"
        elif session.last_job is not None:
            state = session.jobs[session.last_job]["state"]
        else:
            state = "idle"
        last_report = None
        if session.last_job is not None:
            last_report = session.jobs[session.last_job]["report"]
        masks = None
        if session.corr_set is not None:
            masks = {
                "width": session.source.width,
                "height": session.source.height,
                "pairs": [
                    {
                        "target_id": corr.target_image_id,
                        "source_rle": _mask_rle(corr.source_region),
                        "target_width": corr.target_region.width,
                        "target_height": corr.target_region.height,
                        "target_rle": _mask_rle(corr.target_region),
                    }
                    for corr in session.corr_set.correspondences
                ],
                "keeps": [_mask_rle(keep) for keep in session.corr_set.keep_regions],
            }
        return JSONResponse({
            "state": state,
            "jobs": jobs,
            "last_job": session.last_job,
            "last_report": last_report,
            "targets": sorted(session.targets),
            "source_size": [session.source.width, session.source.height],
            "masks": masks,
        })

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")
    return app
