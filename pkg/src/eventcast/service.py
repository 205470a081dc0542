"""HTTP API over the model store: train, forecast, simulate, CRUD.

All endpoints speak JSON (datasets upload raw CSV bodies) and report
errors in a uniform {code, message, field_path} envelope. Training is
synchronous and idempotent: identical request body + data content hash
to the same model id. Configuration comes from HOST / PORT / STORE_PATH
environment variables.
"""

from __future__ import annotations

import hashlib
import json
import os
from datetime import date, timedelta

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, field_validator

from .errors import EventcastError, MissingDates, RangeOutsideCalendar, WindowMismatch
from .features import EventCalendar, encode_calendar
from .forecasters import FAMILIES, model_from_dict, train_model
from .series import parse_series_csv
from .simulation import Scenario, scenario_from_dict, simulate_scenario
from .store import Store

__all__ = ["create_app", "main"]


class EventDoc(BaseModel):
    date: str
    type: str
    subtype: str = ""
    scale: int = 0


class ScenarioDoc(BaseModel):
    name: str = "scenario"
    events: list[EventDoc] = Field(default_factory=list)


class TrainRequest(BaseModel):
    family: str
    dataset_id: str
    game: str = "default"
    params: dict = Field(default_factory=dict)

    @field_validator("family")
    @classmethod
    def _family_known(cls, v: str) -> str:
        if v not in FAMILIES:
            raise ValueError(f"unknown family {v!r}; expected one of {list(FAMILIES)}")
        return v


class ForecastRequest(BaseModel):
    model_id: str
    horizon: int = Field(default=30, ge=1, le=366)


class SimulationRequest(BaseModel):
    model_id: str
    origin: str | None = None
    horizon: int = Field(default=30, ge=1, le=90)
    baseline: ScenarioDoc
    alternative: ScenarioDoc


def _error(status: int, code: str, message: str, field_path: str = "") -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "field_path": field_path},
    )


def create_app(store_path: str | None = None) -> FastAPI:
    app = FastAPI(title="eventcast service", version="0.1.0")
    store = Store(store_path or os.environ.get("STORE_PATH", "eventcast-store.json"))
    app.state.store = store

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        path = ".".join(str(p) for p in first.get("loc", ()) if p != "body")
        return _error(400, "validation_error", first.get("msg", "invalid request"), path)

    @app.exception_handler(EventcastError)
    async def domain_handler(request: Request, exc: EventcastError):
        return _error(422, type(exc).__name__, str(exc))

    # -- datasets ------------------------------------------------------

    @app.post("/datasets", status_code=201)
    async def upload_dataset(
        request: Request,
        name: str = Query(...),
        target: str = Query("sales"),
    ):
        if target not in ("sales", "playtime"):
            return _error(400, "validation_error", "target must be sales or playtime", "target")
        csv_text = (await request.body()).decode("utf-8")
        try:
            series = parse_series_csv(csv_text, name=name)
        except MissingDates as err:
            return _error(
                422, "MissingDates",
                f"daily series has a gap: first missing date {err.first_missing.isoformat()}",
            )
        except (ValueError, EventcastError) as err:
            return _error(400, "invalid_csv", str(err))
        dataset_id = hashlib.sha256(csv_text.encode()).hexdigest()[:16]
        store.put_dataset(
            {
                "id": dataset_id,
                "name": name,
                "target": target,
                "csv": csv_text,
                "start": series.start.isoformat(),
                "end": series.end.isoformat(),
                "n": len(series),
            }
        )
        return {"id": dataset_id, "start": series.start.isoformat(), "end": series.end.isoformat(), "n": len(series)}

    @app.get("/datasets")
    def list_datasets():
        return {"datasets": store.list_datasets()}

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        dataset = store.get_dataset(dataset_id)
        if dataset is None:
            return _error(404, "unknown_dataset", f"dataset {dataset_id!r} not found")
        series = parse_series_csv(dataset["csv"], name=dataset["name"])
        return {
            "id": dataset["id"],
            "name": dataset["name"],
            "target": dataset["target"],
            "dates": [d.isoformat() for d in series.dates],
            "values": [float(v) for v in series.values],
        }

    # -- calendar ------------------------------------------------------

    @app.post("/calendar", status_code=201)
    def add_events(events: list[EventDoc]):
        duplicates = store.add_events([e.model_dump() for e in events])
        if duplicates:
            return _error(409, "duplicate_event", f"events already present: {duplicates}")
        return {"added": len(events)}

    @app.get("/calendar")
    def get_calendar(
        from_date: str | None = Query(default=None, alias="from"),
        to_date: str | None = Query(default=None, alias="to"),
    ):
        first = date.fromisoformat(from_date) if from_date else None
        last = date.fromisoformat(to_date) if to_date else None
        return {"events": store.events_between(first, last)}

    # -- models --------------------------------------------------------

    @app.post("/train")
    def train(request: TrainRequest):
        dataset = store.get_dataset(request.dataset_id)
        if dataset is None:
            return _error(404, "unknown_dataset", f"dataset {request.dataset_id!r} not found", "dataset_id")
        body_key = json.dumps(
            {"family": request.family, "params": request.params, "game": request.game},
            sort_keys=True,
        )
        calendar = store.calendar()
        calendar_key = json.dumps(store.events_between(None, None), sort_keys=True)
        model_id = hashlib.sha256(
            (body_key + dataset["csv"] + calendar_key).encode()
        ).hexdigest()[:16]
        existing = store.get_model(model_id)
        if existing is not None:
            return JSONResponse(status_code=200, content={"id": model_id})
        series = parse_series_csv(dataset["csv"], name=dataset["name"])
        params = dict(request.params)
        params.setdefault("target", dataset["target"])
        try:
            model = train_model(request.family, series, calendar, params)
        except EventcastError as err:
            return _error(422, type(err).__name__, f"fit failed: {err}")
        except (ValueError, KeyError) as err:
            return _error(400, "invalid_params", str(err))
        record = {
            "id": model_id,
            "family": request.family,
            "game": request.game,
            "target": dataset["target"],
            "trained_at": "1970-01-01T00:00:00Z",  # deterministic; content-hashed ids carry identity
            "params": request.params,
            "dataset_id": request.dataset_id,
            "training_window": [dataset["start"], dataset["end"]],
            "artifact": model.to_dict(),
        }
        store.put_model(record)
        return JSONResponse(status_code=201, content={"id": model_id})

    @app.get("/models")
    def list_models():
        return {"models": store.list_models()}

    @app.get("/models/{model_id}")
    def get_model(model_id: str):
        record = store.get_model(model_id)
        if record is None:
            return _error(404, "unknown_model", f"model {model_id!r} not found")
        return record

    @app.delete("/models/{model_id}", status_code=204)
    def delete_model(model_id: str):
        if not store.delete_model(model_id):
            return _error(404, "unknown_model", f"model {model_id!r} not found")

    # -- forecasting and simulation -------------------------------------

    @app.post("/forecast")
    def forecast(request: ForecastRequest):
        record = store.get_model(request.model_id)
        if record is None:
            return _error(404, "unknown_model", f"model {request.model_id!r} not found")
        model = model_from_dict(record["artifact"])
        calendar = store.calendar()
        try:
            fc = model.forecast(request.horizon, calendar)
            start = model.train_end + timedelta(days=1)
            registered = calendar.merged(EventCalendar(subtypes=model.subtypes))
            covariates = encode_calendar(registered, start, request.horizon)
        except RangeOutsideCalendar as err:
            return _error(409, "calendar_gap", str(err))
        return {
            "model_id": request.model_id,
            "dates": [d.isoformat() for d in fc.dates],
            "values": [float(v) for v in fc.values],
            "covariates": {
                "columns": list(covariates.column_names),
                "rows": [[float(v) for v in row] for row in covariates.data],
            },
        }

    @app.post("/simulate")
    def simulate(request: SimulationRequest):
        record = store.get_model(request.model_id)
        if record is None:
            return _error(404, "unknown_model", f"model {request.model_id!r} not found")
        model = model_from_dict(record["artifact"])
        origin = model.train_end + timedelta(days=1)
        if request.origin is not None and date.fromisoformat(request.origin) != origin:
            return _error(
                422, "WindowMismatch",
                f"origin must be the day after the training window ({origin.isoformat()})",
                "origin",
            )
        dataset = store.get_dataset(record["dataset_id"])
        series = parse_series_csv(dataset["csv"], name=dataset["name"])
        try:
            baseline = scenario_from_dict(request.baseline.model_dump(), origin, request.horizon)
            alternative = scenario_from_dict(request.alternative.model_dump(), origin, request.horizon)
            base_result, alt_result = simulate_scenario(
                model, series, baseline, alternative, request.horizon
            )
        except WindowMismatch as err:
            return _error(422, "WindowMismatch", str(err))
        return {"baseline": base_result.to_dict(), "alternative": alt_result.to_dict()}

    return app


def main() -> None:
    """Run the service with uvicorn using HOST/PORT/STORE_PATH."""
    import uvicorn

    app = create_app()
    uvicorn.run(app, host=os.environ.get("HOST", "127.0.0.1"), port=int(os.environ.get("PORT", "8000")))
