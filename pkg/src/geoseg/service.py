"""HTTP annotation service: upload an image, edit markers, run the solver.

Sessions are in-memory with a TTL (GEOSEG_SESSION_TTL_SECONDS, default
3600). Distance bundles are cached per session and invalidated whenever
the markers or any distance-relevant parameter changes; the segment
response reports whether the bundle was rebuilt. One segmentation per
session runs at a time (a second request gets 409); distinct sessions are
fully independent. All errors come back as {"error": ...}.
"""

from __future__ import annotations

import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, File, Request, Response, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import imageio
from .distance import DistanceBundle, DistanceConfig, MarkerSet, build_distance_bundle
from .evaluation import tanimoto
from .grid import ScalarGrid, normalize
from .solver import SegmentationResult, SolverParams, segment

DISTANCE_KINDS = {
    "euclidean": "euclidean",
    "geodesic": "marker_geodesic",
    "anti": "anti_marker",
    "combined": "combined",
}


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


class ParamsUpdate(BaseModel):
    """Partial solver/distance parameter update."""

    lam: Optional[float] = Field(default=None, alias="lambda")
    lambda1: Optional[float] = None
    lambda2: Optional[float] = None
    theta: Optional[float] = None
    mu: Optional[float] = None
    tau: Optional[float] = None
    tol: Optional[float] = None
    max_iterations: Optional[int] = None
    threshold: Optional[float] = None
    mode: Optional[str] = None
    smooth_iters: Optional[int] = None
    beta_g: Optional[float] = None
    eps_d: Optional[float] = None
    vartheta: Optional[float] = None
    alpha_tilde: Optional[float] = None

    model_config = {"populate_by_name": True}


@dataclass
class Session:
    image: ScalarGrid
    params: SolverParams = field(default_factory=SolverParams)
    cfg: DistanceConfig = field(default_factory=DistanceConfig)
    markers: MarkerSet | None = None
    ground_truth: np.ndarray | None = None
    bundle: DistanceBundle | None = None
    bundle_key: tuple | None = None
    result: SegmentationResult | None = None
    touched: float = field(default_factory=time.monotonic)
    state_lock: threading.Lock = field(default_factory=threading.Lock)
    busy: bool = False

    def distance_key(self) -> tuple:
        assert self.markers is not None
        return (self.markers.markers, self.markers.anti_markers,
                self.cfg.beta_G, self.cfg.eps_D, self.cfg.vartheta,
                self.cfg.alpha_tilde, self.cfg.smoothing_iterations)


class SessionStore:
    def __init__(self, ttl_seconds: float):
        self.ttl = ttl_seconds
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _purge(self) -> None:
        now = time.monotonic()
        dead = [sid for sid, s in self._sessions.items()
                if now - s.touched > self.ttl]
        for sid in dead:
            del self._sessions[sid]

    def create(self, image: ScalarGrid) -> str:
        sid = uuid.uuid4().hex
        with self._lock:
            self._purge()
            self._sessions[sid] = Session(image=image)
        return sid

    def get(self, sid: str) -> Session:
        with self._lock:
            self._purge()
            session = self._sessions.get(sid)
            if session is None:
                raise ApiError(404, "unknown session")
            session.touched = time.monotonic()
            return session

    def delete(self, sid: str) -> None:
        with self._lock:
            if sid not in self._sessions:
                raise ApiError(404, "unknown session")
            del self._sessions[sid]


def _frontend_dir() -> Path | None:
    root = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return root if root.is_dir() else None


def create_app(ttl_seconds: float | None = None) -> FastAPI:
    if ttl_seconds is None:
        ttl_seconds = float(os.environ.get("GEOSEG_SESSION_TTL_SECONDS", "3600"))
    app = FastAPI(title="geoseg annotation service")
    store = SessionStore(ttl_seconds)
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"error": str(exc.errors())})

    @app.post("/sessions", status_code=201)
    def create_session(image: UploadFile = File(...)):
        try:
            grid = normalize(imageio.load_image_bytes(image.file.read()))
        except Exception as exc:
            raise ApiError(422, f"cannot read image: {exc}") from exc
        sid = store.create(grid)
        return {"session_id": sid, "width": grid.width, "height": grid.height}

    @app.put("/sessions/{sid}/markers")
    def put_markers(sid: str, body: dict):
        session = store.get(sid)
        try:
            marker_set = MarkerSet(
                markers=tuple((int(p[0]), int(p[1])) for p in body.get("markers", [])),
                anti_markers=tuple((int(p[0]), int(p[1])) for p in body.get("anti_markers", [])),
            )
            marker_set.validate_bounds(session.image.width, session.image.height)
        except (ValueError, TypeError, IndexError) as exc:
            raise ApiError(422, str(exc)) from exc
        with session.state_lock:
            session.markers = marker_set
        return {"ok": True}

    @app.put("/sessions/{sid}/params")
    def put_params(sid: str, body: ParamsUpdate):
        session = store.get(sid)
        with session.state_lock:
            p = session.params
            lam1 = body.lam if body.lam is not None else (
                body.lambda1 if body.lambda1 is not None else p.lambda1)
            lam2 = body.lam if body.lam is not None else (
                body.lambda2 if body.lambda2 is not None else p.lambda2)
            try:
                session.params = SolverParams(
                    lambda1=lam1, lambda2=lam2,
                    theta=body.theta if body.theta is not None else p.theta,
                    mu=body.mu if body.mu is not None else p.mu,
                    tau=body.tau if body.tau is not None else p.tau,
                    tol=body.tol if body.tol is not None else p.tol,
                    max_iterations=body.max_iterations if body.max_iterations is not None else p.max_iterations,
                    gamma_threshold=body.threshold if body.threshold is not None else p.gamma_threshold,
                    mode=body.mode if body.mode is not None else p.mode,
                    edge_beta=body.beta_g if body.beta_g is not None else p.edge_beta,
                )
                c = session.cfg
                session.cfg = DistanceConfig(
                    beta_G=body.beta_g if body.beta_g is not None else c.beta_G,
                    eps_D=body.eps_d if body.eps_d is not None else c.eps_D,
                    vartheta=body.vartheta if body.vartheta is not None else c.vartheta,
                    alpha_tilde=body.alpha_tilde if body.alpha_tilde is not None else c.alpha_tilde,
                    smoothing_iterations=body.smooth_iters if body.smooth_iters is not None else c.smoothing_iterations,
                )
            except ValueError as exc:
                raise ApiError(422, str(exc)) from exc
        return {"ok": True}

    @app.put("/sessions/{sid}/ground-truth")
    def put_ground_truth(sid: str, mask: UploadFile = File(...)):
        session = store.get(sid)
        try:
            gt = imageio.load_image_bytes(mask.file.read()).values > 0
        except Exception as exc:
            raise ApiError(422, f"cannot read mask: {exc}") from exc
        if gt.shape != session.image.shape:
            raise ApiError(422, "ground truth shape differs from image")
        with session.state_lock:
            session.ground_truth = gt
        return {"ok": True}

    def _ensure_bundle(session: Session) -> bool:
        key = session.distance_key()
        if session.bundle is None or session.bundle_key != key:
            session.bundle = build_distance_bundle(session.image,
                                                   session.markers, session.cfg)
            session.bundle_key = key
            return True
        return False

    @app.post("/sessions/{sid}/segment")
    def run_segment(sid: str):
        session = store.get(sid)
        with session.state_lock:
            if session.busy:
                raise ApiError(409, "segmentation already running")
            if session.markers is None:
                raise ApiError(422, "no markers set")
            session.busy = True
            markers = session.markers
            params = session.params
        try:
            start = time.perf_counter()
            rebuilt = _ensure_bundle(session)
            result = segment(session.image, markers, session.bundle, params)
            seconds = time.perf_counter() - start
            with session.state_lock:
                session.result = result
                tc = (tanimoto(result.mask, session.ground_truth)
                      if session.ground_truth is not None else None)
            payload = {
                "iterations": result.iterations,
                "converged": result.converged,
                "c1": result.c1,
                "c2": result.c2,
                "residual": result.residual_history[-1],
                "bundle_rebuilt": rebuilt,
                "seconds": seconds,
            }
            if tc is not None:
                payload["tc"] = tc
            return payload
        except ValueError as exc:
            raise ApiError(422, str(exc)) from exc
        finally:
            with session.state_lock:
                session.busy = False

    @app.get("/sessions/{sid}/mask.png")
    def get_mask(sid: str):
        session = store.get(sid)
        if session.result is None:
            raise ApiError(404, "no segmentation result yet")
        return Response(imageio.mask_to_png_bytes(session.result.mask),
                        media_type="image/png")

    @app.get("/sessions/{sid}/u.csv")
    def get_u(sid: str):
        session = store.get(sid)
        if session.result is None:
            raise ApiError(404, "no segmentation result yet")
        return Response(imageio.grid_to_csv_bytes(session.result.u),
                        media_type="text/csv")

    @app.get("/sessions/{sid}/residuals.csv")
    def get_residuals(sid: str):
        from .cli import residuals_csv_bytes

        session = store.get(sid)
        if session.result is None:
            raise ApiError(404, "no segmentation result yet")
        return Response(residuals_csv_bytes(session.result), media_type="text/csv")

    @app.get("/sessions/{sid}/image.png")
    def get_image(sid: str):
        session = store.get(sid)
        return Response(imageio.to_png_bytes(session.image), media_type="image/png")

    @app.get("/sessions/{sid}/distance/{kind}.png")
    def get_distance(sid: str, kind: str):
        session = store.get(sid)
        if kind not in DISTANCE_KINDS:
            raise ApiError(404, f"unknown distance kind: {kind}")
        with session.state_lock:
            if session.markers is None:
                raise ApiError(422, "no markers set")
            if session.busy:
                raise ApiError(409, "segmentation already running")
            session.busy = True
        try:
            _ensure_bundle(session)
        finally:
            with session.state_lock:
                session.busy = False
        grid = getattr(session.bundle, DISTANCE_KINDS[kind])
        return Response(imageio.to_png_bytes(grid), media_type="image/png")

    @app.delete("/sessions/{sid}", status_code=204)
    def delete_session(sid: str):
        store.delete(sid)
        return Response(status_code=204)

    frontend = _frontend_dir()
    if frontend is not None:
        app.mount("/ui", StaticFiles(directory=frontend, html=True), name="ui")

    return app
