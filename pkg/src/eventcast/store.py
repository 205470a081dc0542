"""Single-file embedded store for datasets, calendar data, and models.

The whole store is one JSON document on disk: raw CSV blobs for
datasets, event records, optional temperature, and serialized model
artifacts keyed by id. Reads work off an in-memory snapshot; writes
serialize through a lock and land atomically (tmp file + rename), so the
store survives process restarts byte-for-byte.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import date
from pathlib import Path

from .features import EventCalendar, EventRecord
from .series import TimeSeries

__all__ = ["Store"]


class Store:
    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self._lock = threading.Lock()
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as fh:
                self._doc = json.load(fh)
        else:
            self._doc = {"datasets": {}, "models": {}, "events": [], "temperature": None}
            self._flush()

    def _flush(self) -> None:
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self._doc, fh)
        os.replace(tmp, self.path)

    # -- datasets ------------------------------------------------------

    def put_dataset(self, doc: dict) -> None:
        with self._lock:
            self._doc["datasets"][doc["id"]] = doc
            self._flush()

    def get_dataset(self, dataset_id: str) -> dict | None:
        return self._doc["datasets"].get(dataset_id)

    def list_datasets(self) -> list[dict]:
        return [
            {k: v for k, v in doc.items() if k != "csv"}
            for doc in self._doc["datasets"].values()
        ]

    # -- models --------------------------------------------------------

    def put_model(self, record: dict) -> None:
        with self._lock:
            self._doc["models"][record["id"]] = record
            self._flush()

    def get_model(self, model_id: str) -> dict | None:
        return self._doc["models"].get(model_id)

    def delete_model(self, model_id: str) -> bool:
        with self._lock:
            existed = self._doc["models"].pop(model_id, None) is not None
            if existed:
                self._flush()
            return existed

    def list_models(self) -> list[dict]:
        return [
            {k: v for k, v in record.items() if k != "artifact"}
            for record in self._doc["models"].values()
        ]

    # -- calendar ------------------------------------------------------

    def add_events(self, events: list[dict]) -> list[dict]:
        """Merge events; duplicate (date, type, subtype) keys are rejected."""
        with self._lock:
            existing = {(e["date"], e["type"], e.get("subtype", "")) for e in self._doc["events"]}
            duplicates = []
            for event in events:
                key = (event["date"], event["type"], event.get("subtype", ""))
                if key in existing:
                    duplicates.append(key)
                existing.add(key)
            if duplicates:
                return [{"date": d, "type": t, "subtype": s} for d, t, s in duplicates]
            self._doc["events"].extend(events)
            self._doc["events"].sort(key=lambda e: (e["date"], e["type"], e.get("subtype", "")))
            self._flush()
            return []

    def events_between(self, first: date | None, last: date | None) -> list[dict]:
        out = []
        for event in self._doc["events"]:
            day = date.fromisoformat(event["date"])
            if first is not None and day < first:
                continue
            if last is not None and day > last:
                continue
            out.append(event)
        return out

    def set_temperature(self, start: date, values: list[float]) -> None:
        with self._lock:
            self._doc["temperature"] = {"start": start.isoformat(), "values": values}
            self._flush()

    def calendar(self) -> EventCalendar:
        """The full stored calendar (unbounded range)."""
        records = tuple(
            EventRecord(
                day=date.fromisoformat(e["date"]),
                event_type=e["type"],
                subtype=e.get("subtype", ""),
                scale=int(e.get("scale", 0)),
            )
            for e in self._doc["events"]
        )
        temperature = None
        if self._doc["temperature"] is not None:
            temperature = TimeSeries(
                date.fromisoformat(self._doc["temperature"]["start"]),
                self._doc["temperature"]["values"],
                name="temperature",
            )
        return EventCalendar(records, temperature=temperature)

    def content_hash(self) -> str:
        """Hash of the whole store; used to audit read-only endpoints."""
        import hashlib

        return hashlib.sha256(json.dumps(self._doc, sort_keys=True).encode()).hexdigest()
