"""Event calendars and their encoding into per-day design matrices.

Events become step-function dummy columns: plain events contribute 0/1,
scaled events (gacha, promotions) contribute their 1-4 influence scale,
and promotions/marketing campaigns spill into following days through a
linearly decaying profile. Day-of-week and month columns cover the
seasonality inputs used by the tree and network models.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Sequence

import numpy as np

from .errors import DateMismatch, RangeOutsideCalendar, UnknownEventType
from .series import TimeSeries

__all__ = [
    "EVENT_TYPES",
    "SCALED_TYPES",
    "EventRecord",
    "EventCalendar",
    "DesignMatrix",
    "decay_profile",
    "encode_calendar",
    "calendar_features",
    "join_covariates",
    "read_calendar_csv",
    "parse_events_csv",
]

EVENT_TYPES = ("game_event", "gacha", "promotion", "marketing", "holiday")
SCALED_TYPES = ("gacha", "promotion")

MARKETING_DECAY_DAYS = 7


@dataclass(frozen=True)
class EventRecord:
    """One dated event; ``subtype`` distinguishes game-event kinds."""

    day: date
    event_type: str
    subtype: str = ""
    scale: int = 0

    def __post_init__(self) -> None:
        if self.event_type not in EVENT_TYPES:
            raise UnknownEventType(f"unknown event type {self.event_type!r}")
        if self.event_type in SCALED_TYPES:
            if self.scale not in (1, 2, 3, 4):
                raise ValueError(f"{self.event_type} requires scale in 1..4, got {self.scale}")
        elif self.scale != 0:
            raise ValueError(f"{self.event_type} carries no scale, got {self.scale}")
        if self.event_type == "game_event" and not self.subtype:
            raise ValueError("game_event records need a subtype label")

    @property
    def key(self) -> tuple[date, str, str]:
        return (self.day, self.event_type, self.subtype)


@dataclass(frozen=True)
class EventCalendar:
    """Typed event records plus the optional temperature covariate.

    ``date_range`` bounds what the calendar knows about; ``None`` means
    unbounded (any encoding range is acceptable). At most one record may
    exist per (date, type, subtype).
    """

    records: tuple[EventRecord, ...] = ()
    temperature: TimeSeries | None = None
    date_range: tuple[date, date] | None = None
    subtypes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        records = tuple(sorted(self.records, key=lambda r: (r.day, r.event_type, r.subtype)))
        object.__setattr__(self, "records", records)
        seen = set()
        for record in records:
            if record.key in seen:
                raise ValueError(f"duplicate event {record.key}")
            seen.add(record.key)
        derived = sorted({r.subtype for r in records if r.event_type == "game_event"})
        merged = tuple(sorted(set(self.subtypes) | set(derived)))
        object.__setattr__(self, "subtypes", merged)
        if self.date_range is not None:
            first, last = self.date_range
            if first > last:
                raise ValueError("date_range start is after its end")
            for record in records:
                if not first <= record.day <= last:
                    raise ValueError(f"event on {record.day} outside calendar range")

    def covers(self, start: date, days: int) -> bool:
        if self.date_range is None:
            return True
        first, last = self.date_range
        return first <= start and start + timedelta(days=days - 1) <= last

    def events_on(self, day: date) -> list[EventRecord]:
        return [r for r in self.records if r.day == day]

    def merged(self, other: "EventCalendar") -> "EventCalendar":
        """Union of two calendars; duplicate (date, type, subtype) keys raise."""
        lo, hi = None, None
        for cal in (self, other):
            if cal.date_range is not None:
                lo = cal.date_range[0] if lo is None else min(lo, cal.date_range[0])
                hi = cal.date_range[1] if hi is None else max(hi, cal.date_range[1])
        return EventCalendar(
            records=self.records + other.records,
            temperature=other.temperature or self.temperature,
            date_range=None if lo is None else (lo, hi),
            subtypes=tuple(sorted(set(self.subtypes) | set(other.subtypes))),
        )


@dataclass(frozen=True)
class DesignMatrix:
    """Per-day covariate rows over a contiguous daily range."""

    start: date
    column_names: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=float)
        if arr.ndim != 2:
            raise ValueError("design matrix must be two-dimensional")
        if arr.shape[1] != len(self.column_names):
            raise ValueError("row width must equal the number of column names")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def n_columns(self) -> int:
        return self.data.shape[1]

    @property
    def dates(self) -> list[date]:
        return [self.start + timedelta(days=i) for i in range(len(self))]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.column_names.index(name)]

    def select(self, names: Sequence[str]) -> "DesignMatrix":
        idx = [self.column_names.index(n) for n in names]
        return DesignMatrix(self.start, tuple(names), self.data[:, idx])

    def to_csv(self) -> str:
        """Deterministic serialization: repr floats, ISO dates."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["date", *self.column_names])
        for i, day in enumerate(self.dates):
            writer.writerow([day.isoformat(), *[repr(float(v)) for v in self.data[i]]])
        return buf.getvalue()

    @classmethod
    def empty(cls, start: date, days: int) -> "DesignMatrix":
        return cls(start, (), np.zeros((days, 0)))


def decay_profile(event_type: str, scale: int = 0) -> np.ndarray:
    """Per-day weights an event contributes from its date onward.

    Marketing campaigns fade linearly over one week; promotion effects
    last 2*scale days, starting at the scale value. Everything else is a
    single-day step of its scale (or 1 when the type carries no scale).
    """
    if event_type not in EVENT_TYPES:
        raise UnknownEventType(f"unknown event type {event_type!r}")
    if event_type == "marketing":
        t = np.arange(MARKETING_DECAY_DAYS, dtype=float)
        return 1.0 - t / MARKETING_DECAY_DAYS
    if event_type == "promotion":
        if scale not in (1, 2, 3, 4):
            raise ValueError(f"promotion requires scale in 1..4, got {scale}")
        length = 2 * scale
        t = np.arange(length, dtype=float)
        return scale * (1.0 - t / length)
    if event_type == "gacha":
        if scale not in (1, 2, 3, 4):
            raise ValueError(f"gacha requires scale in 1..4, got {scale}")
        return np.array([float(scale)])
    return np.array([1.0])


def _column_for(record: EventRecord) -> str:
    if record.event_type == "game_event":
        return f"event_{record.subtype}"
    return record.event_type


def encode_calendar(
    calendar: EventCalendar,
    start: date,
    days: int,
    cap: float | None = 4.0,
) -> DesignMatrix:
    """Encode the calendar as step-function dummy columns over a range.

    One column per registered game-event subtype plus the four fixed
    ones (gacha, promotion, marketing, holiday); temperature passes
    through as a continuous column when the calendar carries it.
    Overlapping contributions on a column are summed, clipped at zero
    and capped at ``cap`` (``None`` disables the cap).
    """
    if days < 1:
        raise ValueError("range must cover at least one day")
    if not calendar.covers(start, days):
        raise RangeOutsideCalendar(
            f"range {start}..{start + timedelta(days=days - 1)} outside calendar range"
        )
    names = [f"event_{s}" for s in calendar.subtypes] + ["gacha", "promotion", "marketing", "holiday"]
    index = {name: i for i, name in enumerate(names)}
    data = np.zeros((days, len(names)))
    for record in calendar.records:
        profile = decay_profile(record.event_type, record.scale)
        offset = (record.day - start).days
        col = index[_column_for(record)]
        for t, weight in enumerate(profile):
            row = offset + t
            if 0 <= row < days:
                data[row, col] += weight
    data = np.clip(data, 0.0, cap if cap is not None else None)
    if calendar.temperature is not None:
        temp = calendar.temperature
        lo = (start - temp.start).days
        if lo < 0 or lo + days > len(temp):
            raise RangeOutsideCalendar("temperature series does not cover the requested range")
        data = np.column_stack([data, temp.values[lo : lo + days]])
        names.append("temperature")
    return DesignMatrix(start, tuple(names), data)


def calendar_features(start: date, days: int, include_onehot: bool = True) -> DesignMatrix:
    """Day-of-week (Monday=0) and month (1-12) columns, plus one-hots.

    The one-hot expansion feeds the tree/network models; the additive
    model consumes the raw cyclic indices directly.
    """
    if days < 1:
        raise ValueError("range must cover at least one day")
    dows = np.array([(start + timedelta(days=i)).weekday() for i in range(days)], dtype=float)
    months = np.array([(start + timedelta(days=i)).month for i in range(days)], dtype=float)
    names = ["day_of_week", "month"]
    cols = [dows, months]
    if include_onehot:
        for k in range(7):
            names.append(f"dow_{k}")
            cols.append((dows == k).astype(float))
        for k in range(1, 13):
            names.append(f"month_{k}")
            cols.append((months == k).astype(float))
    return DesignMatrix(start, tuple(names), np.column_stack(cols))


def join_covariates(base: DesignMatrix, extra: DesignMatrix) -> DesignMatrix:
    """Column-wise concatenation over an identical date range.

    Colliding column names get a numeric suffix (``gacha`` -> ``gacha_2``).
    """
    if base.start != extra.start or len(base) != len(extra):
        raise DateMismatch("design matrices cover different date ranges")
    names = list(base.column_names)
    for name in extra.column_names:
        candidate, k = name, 1
        while candidate in names:
            k += 1
            candidate = f"{name}_{k}"
        names.append(candidate)
    return DesignMatrix(base.start, tuple(names), np.hstack([base.data, extra.data]))


def parse_events_csv(text: str) -> list[EventRecord]:
    """Parse a ``date,event_type,subtype,scale`` CSV into records."""
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        return []
    header = [h.strip().lower() for h in rows[0]]
    if header[:2] != ["date", "event_type"]:
        raise ValueError("calendar CSV must start with a 'date,event_type,subtype,scale' header")
    records = []
    for row in rows[1:]:
        if not row or all(not cell.strip() for cell in row):
            continue
        day = date.fromisoformat(row[0].strip())
        event_type = row[1].strip()
        subtype = row[2].strip() if len(row) > 2 else ""
        scale = int(row[3]) if len(row) > 3 and row[3].strip() else 0
        records.append(EventRecord(day, event_type, subtype, scale))
    return records


def read_calendar_csv(
    events_path,
    temperature_path=None,
    holidays_path=None,
    date_range: tuple[date, date] | None = None,
) -> EventCalendar:
    """Assemble a calendar from the event / temperature / holiday files."""
    with open(events_path, "r", encoding="utf-8") as fh:
        records = parse_events_csv(fh.read())
    if holidays_path is not None:
        with open(holidays_path, "r", encoding="utf-8") as fh:
            rows = list(csv.reader(fh.read().splitlines()))
        if rows and [h.strip().lower() for h in rows[0]][:1] != ["date"]:
            raise ValueError("holiday CSV must start with a 'date,name' header")
        for row in rows[1:]:
            if not row or all(not cell.strip() for cell in row):
                continue
            name = row[1].strip() if len(row) > 1 else ""
            records.append(EventRecord(date.fromisoformat(row[0].strip()), "holiday", name))
    temperature = None
    if temperature_path is not None:
        with open(temperature_path, "r", encoding="utf-8") as fh:
            rows = list(csv.reader(fh.read().splitlines()))
        if not rows or [h.strip().lower() for h in rows[0]][:2] != ["date", "celsius"]:
            raise ValueError("temperature CSV must start with a 'date,celsius' header")
        days = [date.fromisoformat(r[0].strip()) for r in rows[1:] if r and r[0].strip()]
        values = [float(r[1]) for r in rows[1:] if r and r[0].strip()]
        for prev, cur in zip(days, days[1:]):
            if cur != prev + timedelta(days=1):
                raise ValueError(f"temperature series has a gap after {prev.isoformat()}")
        temperature = TimeSeries(days[0], values, name="temperature")
    return EventCalendar(tuple(records), temperature=temperature, date_range=date_range)
