"""What-if scenario HTTP service over a fitted model bundle.

The service is read-only over an immutable on-disk bundle (the pipeline's
output directory): point joint-impulse responses are computed inline,
bootstrap runs go through an async job registry because hundreds of refits
take a while. All errors come back as JSON problem documents with stable
machine-readable codes, e.g.::

    {"code": "scenario.unknown_series", "message": "...", "fields": {...}}

Endpoints
---------
GET  /model                      dimensions, labels, periods, fit metadata
POST /jirf                       scenario -> point responses (synchronous)
POST /jirf/bootstrap             scenario + replicates -> {"job_id": ...}
GET  /jobs/{job_id}              job status / result
GET  /grids/{period}/{matrix}    coefficient grid export (pi, gamma1, ...)
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .bootstrap import BootstrapSpec, bootstrap_jirf_result
from .jirf import ShockScenario, VmaForm, build_shock, compute_jirf, to_vma
from .panel import PricePanel, read_panel, slice_period
from .pipeline import export_grid
from .varnet import VarFit
from .vecm import to_vecm

__all__ = ["ModelBundle", "load_bundle", "create_app"]


class ServiceError(Exception):
    """Problem-document carrier: HTTP status + machine-readable code."""

    def __init__(self, status: int, code: str, message: str, fields: dict | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.fields = fields or {}

    def response(self) -> JSONResponse:
        return JSONResponse(
            status_code=self.status,
            content={"code": self.code, "message": str(self), "fields": self.fields},
        )


@dataclass
class ModelBundle:
    """Fitted artifacts loaded once and shared read-only across requests."""

    directory: Path
    panel: PricePanel
    fits: dict[str, VarFit]
    vmas: dict[str, VmaForm]

    @property
    def periods(self) -> list[str]:
        return list(self.fits)


def load_bundle(directory: str | Path) -> ModelBundle:
    directory = Path(directory)
    csv_path = directory / "panel.csv"
    meta_path = directory / "panel.meta.json"
    if not csv_path.exists() or not meta_path.exists():
        raise FileNotFoundError(f"no panel artifacts in {directory}")
    panel = read_panel(csv_path, meta_path)
    fits: dict[str, VarFit] = {}
    vmas: dict[str, VmaForm] = {}
    # iterate panel periods first so fits keep chronological order
    candidates = list(panel.periods) + sorted(
        p.stem[len("fit_") :] for p in directory.glob("fit_*.json")
    )
    for period in dict.fromkeys(candidates):
        fit_path = directory / f"fit_{period}.json"
        if not fit_path.exists() or period in fits:
            continue
        fits[period] = VarFit.load(fit_path)
        vma_path = directory / f"vma_{period}.json"
        if vma_path.exists():
            vmas[period] = VmaForm.load(vma_path)
            vmas[period].fit = fits[period]
    if not fits:
        raise FileNotFoundError(f"no fitted models (fit_*.json) in {directory}")
    return ModelBundle(directory=directory, panel=panel, fits=fits, vmas=vmas)


@dataclass
class _JobRegistry:
    """The service's only mutable state; guarded by a lock."""

    jobs: dict[str, dict] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def create(self) -> str:
        job_id = uuid.uuid4().hex[:12]
        with self.lock:
            self.jobs[job_id] = {"status": "queued", "result": None, "error": None}
        return job_id

    def update(self, job_id: str, **kv) -> None:
        with self.lock:
            self.jobs[job_id].update(kv)

    def get(self, job_id: str) -> dict | None:
        with self.lock:
            job = self.jobs.get(job_id)
            return dict(job) if job is not None else None


def _parse_scenario(bundle: ModelBundle, body: dict) -> tuple[str, ShockScenario]:
    if not isinstance(body, dict):
        raise ServiceError(400, "scenario.invalid", "request body must be a JSON object")
    fields: dict[str, str] = {}
    period = body.get("period")
    if period is None and len(bundle.periods) == 1:
        period = bundle.periods[0]
    if period not in bundle.fits:
        raise ServiceError(
            404,
            "period.unknown",
            f"unknown period {period!r}; have {bundle.periods}",
            {"period": "unknown analysis period"},
        )
    series = body.get("series")
    if not isinstance(series, list) or not series:
        raise ServiceError(
            400, "scenario.empty", "at least one shocked series is required",
            {"series": "must be a nonempty list of series labels"},
        )
    labels = bundle.fits[period].labels
    missing = [s for s in series if s not in labels]
    if missing:
        raise ServiceError(
            404,
            "scenario.unknown_series",
            f"unknown series: {missing}",
            {"series": f"not in the fitted system: {missing}"},
        )
    source = body.get("source", "series-std")
    horizon = body.get("horizon", 8)
    if not isinstance(horizon, int) or horizon < 0:
        fields["horizon"] = "must be a nonnegative integer"
    magnitudes = body.get("magnitudes")
    if source == "user" and (
        not isinstance(magnitudes, list) or len(magnitudes) != len(series)
    ):
        fields["magnitudes"] = "user source needs one magnitude per series"
    if fields:
        raise ServiceError(400, "scenario.invalid", "invalid scenario fields", fields)
    try:
        scenario = build_shock(
            series,
            panel=slice_period(bundle.panel, period),
            fit=bundle.fits[period],
            source=source,
            magnitudes=magnitudes,
            horizon=horizon,
        )
    except (ValueError, KeyError) as exc:
        raise ServiceError(400, "scenario.invalid", str(exc)) from exc
    return period, scenario


def create_app(bundle: ModelBundle, workers: int = 2, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="sparsevecm scenario service")
    registry = _JobRegistry()
    executor = ThreadPoolExecutor(max_workers=workers)

    @app.exception_handler(ServiceError)
    async def _service_error(_: Request, exc: ServiceError):
        return exc.response()

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={
                "code": "request.invalid",
                "message": "malformed request body",
                "fields": {str(e["loc"][-1]): e["msg"] for e in exc.errors()},
            },
        )

    @app.get("/model")
    def model() -> dict:
        fits_meta = {
            period: {
                "p": fit.p,
                "lam": fit.lam,
                "gamma": fit.gamma,
                "nonzero_coefficients": fit.nonzero_count,
                "rows": int(fit.residuals.shape[0] + fit.p),
                "vma_horizon": bundle.vmas[period].horizon if period in bundle.vmas else None,
            }
            for period, fit in bundle.fits.items()
        }
        return {
            "series": bundle.panel.labels,
            "commodities": bundle.panel.commodities,
            "regions": bundle.panel.regions,
            "periods": {k: list(v) for k, v in bundle.panel.periods.items()},
            "fits": fits_meta,
        }

    def _vma_for(period: str, horizon: int) -> VmaForm:
        vma = bundle.vmas.get(period)
        if vma is None or vma.horizon < horizon:
            vma = to_vma(bundle.fits[period], horizon)
        return vma

    @app.post("/jirf")
    async def jirf(request: Request) -> dict:
        body = await request.json()
        period, scenario = _parse_scenario(bundle, body)
        fit = bundle.fits[period]
        try:
            result = compute_jirf(_vma_for(period, scenario.horizon), fit.sigma, scenario)
        except ValueError as exc:
            raise ServiceError(400, "scenario.degenerate", str(exc)) from exc
        payload = result.to_dict()
        payload["period"] = period
        return payload

    @app.post("/jirf/bootstrap")
    async def jirf_bootstrap(request: Request) -> dict:
        body = await request.json()
        period, scenario = _parse_scenario(bundle, body)
        replicates = body.get("replicates", 500)
        if not isinstance(replicates, int) or replicates < 2:
            raise ServiceError(
                400, "scenario.invalid", "replicates must be an integer >= 2",
                {"replicates": "must be an integer >= 2"},
            )
        confidence = float(body.get("confidence", 0.95))
        seed = int(body.get("seed", 0))
        spec = BootstrapSpec(
            scenario=scenario, replicates=replicates, seed=seed, confidence=confidence
        )
        fit = bundle.fits[period]
        sub_panel = slice_period(bundle.panel, period)
        job_id = registry.create()

        def run() -> None:
            registry.update(job_id, status="running")
            try:
                result = bootstrap_jirf_result(fit, sub_panel, spec)
            except Exception as exc:  # job failures surface via the job API
                registry.update(job_id, status="failed", error=f"{type(exc).__name__}: {exc}")
                return
            payload = result.to_dict()
            payload["period"] = period
            registry.update(job_id, status="done", result=payload)

        executor.submit(run)
        return {"job_id": job_id, "status": "queued"}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str) -> dict:
        job = registry.get(job_id)
        if job is None:
            raise ServiceError(404, "job.not_found", f"no job {job_id!r}")
        payload = {"job_id": job_id, "status": job["status"]}
        if job["status"] == "done":
            payload["result"] = job["result"]
        if job["status"] == "failed":
            payload["error"] = job["error"]
        return payload

    @app.get("/grids/{period}/{matrix}")
    def grids(period: str, matrix: str) -> dict:
        if period not in bundle.fits:
            raise ServiceError(404, "period.unknown", f"unknown period {period!r}")
        try:
            grid = export_grid(to_vecm(bundle.fits[period]), matrix, period)
        except ValueError as exc:
            raise ServiceError(404, "matrix.unknown", str(exc)) from exc
        payload = grid.to_dict()
        payload["render"] = grid.render_data()
        return payload

    if ui_dir is not None and Path(ui_dir).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
