"""What-if event-sequence simulation and the synthetic-data generator.

A scenario is an alternative future calendar for the forecast window;
simulating it re-encodes the covariates and forecasts the same horizon,
so the delta against a baseline isolates the planned events' effect.
The synthetic generator builds series with known injected effects so
recovery can be checked against ground truth instead of proprietary
data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .errors import WindowMismatch
from .features import EventCalendar, EventRecord, encode_calendar
from .forecasters import ForecastModel
from .series import TimeSeries, TransformSpec, inverse_transform_values

__all__ = [
    "Scenario",
    "ScenarioResult",
    "SynthConfig",
    "simulate_scenario",
    "compare_scenarios",
    "generate_synthetic",
    "scenario_from_dict",
    "scenario_to_dict",
]


@dataclass(frozen=True)
class Scenario:
    """A named future event calendar covering exactly the forecast window."""

    name: str
    calendar: EventCalendar

    def window(self) -> tuple[date, date]:
        if self.calendar.date_range is None:
            raise WindowMismatch(f"scenario {self.name!r} has no explicit date range")
        return self.calendar.date_range


@dataclass(frozen=True)
class ScenarioResult:
    name: str
    forecasts: TimeSeries
    total: float
    delta_vs_baseline: float  # percent

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "start": self.forecasts.start.isoformat(),
            "values": [float(v) for v in self.forecasts.values],
            "total": float(self.total),
            "delta_vs_baseline": float(self.delta_vs_baseline),
        }


def scenario_from_dict(doc: dict, origin: date, horizon: int) -> Scenario:
    """Parse {name, events: [{date, type, subtype, scale}]} for a window."""
    window = (origin, origin + timedelta(days=horizon - 1))
    records = []
    for ev in doc.get("events", []):
        day = date.fromisoformat(ev["date"])
        if not window[0] <= day <= window[1]:
            raise WindowMismatch(
                f"event on {day.isoformat()} falls outside the simulation window "
                f"{window[0].isoformat()}..{window[1].isoformat()}"
            )
        records.append(
            EventRecord(
                day=day,
                event_type=ev["type"],
                subtype=ev.get("subtype", ""),
                scale=int(ev.get("scale", 0)),
            )
        )
    calendar = EventCalendar(tuple(records), date_range=window)
    return Scenario(name=doc.get("name", "scenario"), calendar=calendar)


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "name": scenario.name,
        "events": [
            {"date": r.day.isoformat(), "type": r.event_type, "subtype": r.subtype, "scale": r.scale}
            for r in scenario.calendar.records
        ],
    }


def _check_window(scenario: Scenario, origin: date, horizon: int) -> None:
    expected = (origin, origin + timedelta(days=horizon - 1))
    if scenario.window() != expected:
        raise WindowMismatch(
            f"scenario {scenario.name!r} covers {scenario.window()}, expected {expected}"
        )


def _run(model: ForecastModel, scenario: Scenario, horizon: int, baseline_total: float | None) -> ScenarioResult:
    forecasts = model.forecast(horizon, scenario.calendar)
    total = float(np.sum(forecasts.values))
    if baseline_total is None:
        delta = 0.0
    else:
        delta = 100.0 * (total - baseline_total) / baseline_total
    return ScenarioResult(scenario.name, forecasts, total, delta)


def simulate_scenario(
    model: ForecastModel,
    history: TimeSeries,
    baseline: Scenario,
    alternative: Scenario,
    horizon: int,
) -> tuple[ScenarioResult, ScenarioResult]:
    """Forecast the window under both calendars and report the delta.

    The model and history are read-only; both scenarios must cover
    exactly [history end + 1, history end + horizon].
    """
    origin = history.end + timedelta(days=1)
    _check_window(baseline, origin, horizon)
    _check_window(alternative, origin, horizon)
    base = _run(model, baseline, horizon, None)
    alt = _run(model, alternative, horizon, base.total)
    return base, alt


def compare_scenarios(
    model: ForecastModel,
    history: TimeSeries,
    baseline: Scenario,
    alternatives: list[Scenario],
    horizon: int,
) -> list[ScenarioResult]:
    """Rank alternatives by total (descending), ties broken by name."""
    origin = history.end + timedelta(days=1)
    _check_window(baseline, origin, horizon)
    base = _run(model, baseline, horizon, None)
    results = []
    for scenario in alternatives:
        _check_window(scenario, origin, horizon)
        results.append(_run(model, scenario, horizon, base.total))
    return sorted(results, key=lambda r: (-r.total, r.name))


@dataclass(frozen=True)
class SynthConfig:
    """Ground-truth generator settings.

    The signal is additive on the transformed scale (log by default):
    base level, linear trend, a weekly pattern, per-column event effects
    applied through the standard decay encoding, and AR(1) noise.
    """

    length: int = 540
    base_level: float = 1000.0
    trend: float = 0.0003
    weekly_amplitudes: tuple[float, ...] = (0.25, 0.05, -0.1, -0.2, -0.05, 0.3, 0.45)
    event_effects: dict = field(
        default_factory=lambda: {
            "gacha": 0.1,
            "promotion": 0.06,
            "marketing": 0.12,
            "holiday": 0.2,
            "game_event": 0.15,
        }
    )
    noise_sigma: float = 0.05
    ar_phi: float = 0.4
    seed: int = 0
    start: date = date(2023, 1, 2)
    transform: TransformSpec = TransformSpec("log")
    include_temperature: bool = False
    include_events: bool = True

    def __post_init__(self) -> None:
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not -1.0 < self.ar_phi < 1.0:
            raise ValueError("ar_phi must be inside (-1, 1)")
        if len(self.weekly_amplitudes) != 7:
            raise ValueError("weekly_amplitudes needs exactly 7 entries")

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthConfig":
        kwargs = dict(doc)
        if "start" in kwargs:
            kwargs["start"] = date.fromisoformat(kwargs["start"])
        if "weekly_amplitudes" in kwargs:
            kwargs["weekly_amplitudes"] = tuple(kwargs["weekly_amplitudes"])
        if "transform" in kwargs:
            kwargs["transform"] = TransformSpec.from_dict(kwargs["transform"])
        return cls(**kwargs)


def _place_events(config: SynthConfig, rng: np.random.Generator) -> list[EventRecord]:
    records: list[EventRecord] = []
    scales = [1, 2, 3, 4]

    day = int(rng.integers(3, 8))
    i = 0
    while day < config.length:  # gacha roughly every 10 days, cycling scales
        records.append(EventRecord(config.start + timedelta(days=day), "gacha", scale=scales[i % 4]))
        i += 1
        day += int(rng.integers(7, 14))

    day = int(rng.integers(5, 15))
    while day < config.length:  # promotions every ~3 weeks
        records.append(
            EventRecord(config.start + timedelta(days=day), "promotion", scale=int(rng.integers(1, 5)))
        )
        day += int(rng.integers(18, 26))

    day = int(rng.integers(10, 25))
    while day < config.length:  # marketing pushes every ~5 weeks
        records.append(EventRecord(config.start + timedelta(days=day), "marketing"))
        day += int(rng.integers(30, 40))

    day = int(rng.integers(2, 10))
    while day < config.length:  # in-game raid battles
        records.append(EventRecord(config.start + timedelta(days=day), "game_event", "raid"))
        day += int(rng.integers(9, 16))

    for day in range(14, config.length, 45):  # fixed national holidays
        records.append(EventRecord(config.start + timedelta(days=day), "holiday"))
    return records


def generate_synthetic(config: SynthConfig) -> tuple[TimeSeries, EventCalendar, dict]:
    """Build a series, its calendar, and a record of every injected effect."""
    rng = np.random.default_rng(config.seed)
    records = _place_events(config, rng) if config.include_events else []
    window = (config.start, config.start + timedelta(days=config.length - 1))
    temperature = None
    if config.include_temperature:
        t = np.arange(config.length)
        temps = 16.0 + 10.0 * np.sin(2.0 * np.pi * (t - 100) / 365.25) + rng.normal(0, 1.0, config.length)
        temperature = TimeSeries(config.start, temps, name="temperature")
    calendar = EventCalendar(tuple(records), temperature=temperature, date_range=window)

    X = encode_calendar(calendar, config.start, config.length)
    effects = {}
    for name in X.column_names:
        if name.startswith("event_"):
            effects[name] = config.event_effects.get("game_event", 0.0)
        elif name in config.event_effects:
            effects[name] = config.event_effects[name]
        else:
            effects[name] = 0.0

    t = np.arange(config.length, dtype=float)
    weekly = np.asarray(config.weekly_amplitudes)[t.astype(int) % 7]
    signal = np.log(config.base_level) + config.trend * t + weekly
    for name, effect in effects.items():
        if effect:
            signal = signal + effect * X.column(name)

    noise = np.zeros(config.length)
    eps = rng.normal(0.0, config.noise_sigma, config.length)
    for i in range(config.length):
        noise[i] = (config.ar_phi * noise[i - 1] if i else 0.0) + eps[i]

    values = inverse_transform_values(signal + noise, config.transform)
    series = TimeSeries(config.start, values, name="synthetic")

    ground_truth = {
        "transform": config.transform.to_dict(),
        "log_base": float(np.log(config.base_level)),
        "trend": config.trend,
        "weekly_amplitudes": list(config.weekly_amplitudes),
        "column_effects": effects,
        "event_days": {
            etype: [r.day.isoformat() for r in records if r.event_type == etype]
            for etype in ("gacha", "promotion", "marketing", "holiday", "game_event")
        },
        "noise_sigma": config.noise_sigma,
        "ar_phi": config.ar_phi,
        "seed": config.seed,
        "noise_free_signal": [float(v) for v in signal],
    }
    return series, calendar, ground_truth


def ground_truth_to_json(ground_truth: dict) -> str:
    return json.dumps(ground_truth, indent=2)
