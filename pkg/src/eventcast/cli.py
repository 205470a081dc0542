"""Batch command-line front end.

Subcommands: ingest, fit, evaluate, curves, simulate, synth, serve.
Exit codes: 0 success, 1 validation error (bad arguments or inputs),
2 fit failure. All outputs are deterministic given --seed, so emitted
files are diffable in CI.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date, timedelta
from pathlib import Path

from .errors import EventcastError, AllFitsFailed, NonInvertibleEstimate, SingularDesign, SingularSystem
from .evaluation import (
    RollingConfig,
    horizon_curve_csv,
    rolling_evaluate,
    training_size_curve,
    training_size_curve_csv,
)
from .features import read_calendar_csv
from .forecasters import model_from_json, train_model
from .series import read_series_csv, write_series_csv
from .simulation import (
    SynthConfig,
    generate_synthetic,
    ground_truth_to_json,
    scenario_from_dict,
    simulate_scenario,
)

FIT_FAILURES = (AllFitsFailed, NonInvertibleEstimate, SingularDesign, SingularSystem)


class _CliError(Exception):
    """Validation problem; maps to exit code 1."""


def _load_params(raw: str | None) -> dict:
    if not raw:
        return {}
    path = Path(raw)
    try:
        text = path.read_text(encoding="utf-8") if path.exists() else raw
        params = json.loads(text)
    except (OSError, json.JSONDecodeError) as err:
        raise _CliError(f"cannot parse params {raw!r}: {err}") from err
    if not isinstance(params, dict):
        raise _CliError("params must be a JSON object")
    return params


def _load_config(path: str | None) -> dict:
    """Optional key=value config file supplying flag defaults."""
    if not path:
        return {}
    out = {}
    try:
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise _CliError(f"config line {line!r} is not key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    except OSError as err:
        raise _CliError(f"cannot read config {path!r}: {err}") from err
    return out


def _read_series(path: str):
    try:
        return read_series_csv(path)
    except (OSError, ValueError, EventcastError) as err:
        raise _CliError(f"cannot ingest {path!r}: {err}") from err


def _read_calendar(args):
    if not getattr(args, "calendar", None):
        return None
    try:
        return read_calendar_csv(
            args.calendar,
            temperature_path=getattr(args, "temperature", None),
            holidays_path=getattr(args, "holidays", None),
        )
    except (OSError, ValueError, EventcastError) as err:
        raise _CliError(f"cannot read calendar: {err}") from err


def _slice_series(series, from_date: str | None, to_date: str | None):
    start = series.start if from_date is None else date.fromisoformat(from_date)
    end = series.end if to_date is None else date.fromisoformat(to_date)
    lo = (start - series.start).days
    hi = (end - series.start).days + 1
    if lo < 0 or hi > len(series) or lo >= hi:
        raise _CliError(f"--from/--to window {start}..{end} is outside the series")
    return series.slice(lo, hi)


def _cmd_ingest(args) -> int:
    series = _read_series(args.csv)
    print(
        f"ok: {series.name}: {len(series)} daily observations, "
        f"{series.start.isoformat()}..{series.end.isoformat()}, "
        f"min={series.values.min():.6g} max={series.values.max():.6g}"
    )
    return 0


def _cmd_fit(args) -> int:
    series = _slice_series(_read_series(args.series), args.from_date, args.to_date)
    calendar = _read_calendar(args)
    params = _load_params(args.params)
    if args.target:
        params.setdefault("target", args.target)
    try:
        model = train_model(args.family, series, calendar, params, seed=args.seed)
    except FIT_FAILURES as err:
        print(f"fit failed: {err}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.write_text(model.to_json(), encoding="utf-8")
    print(f"wrote {out}")
    return 0


def _fit_fn(family: str, params: dict, seed: int):
    def fit(train, calendar):
        return train_model(family, train, calendar, params, seed=seed)

    return fit


def _cmd_evaluate(args) -> int:
    series = _read_series(args.series)
    calendar = _read_calendar(args)
    params = _load_params(args.params)
    config = RollingConfig(horizon=args.horizon, step=args.step, min_train=args.min_train)
    try:
        report = rolling_evaluate(_fit_fn(args.family, params, args.seed), series, calendar, config)
    except FIT_FAILURES as err:
        print(f"fit failed during evaluation: {err}", file=sys.stderr)
        return 2
    prefix = Path(args.out_prefix)
    prefix.with_suffix(".csv").write_text(report.to_csv(), encoding="utf-8")
    prefix.with_suffix(".json").write_text(report.to_json(), encoding="utf-8")
    agg = report.aggregate
    print(
        f"{len(report.windows)} windows: rmsle={agg.rmsle:.6g} mase={agg.mase:.6g} mape={agg.mape:.6g}"
    )
    print(f"wrote {prefix.with_suffix('.csv')} and {prefix.with_suffix('.json')}")
    return 0


def _cmd_curves(args) -> int:
    if bool(args.horizon_curve) == bool(args.training_sizes):
        raise _CliError("choose exactly one of --horizon-curve or --training-sizes")
    series = _read_series(args.series)
    calendar = _read_calendar(args)
    params = _load_params(args.params)
    fit = _fit_fn(args.family, params, args.seed)
    try:
        if args.horizon_curve:
            config = RollingConfig(horizon=args.horizon, step=args.step, min_train=args.min_train)
            report = rolling_evaluate(fit, series, calendar, config)
            text = horizon_curve_csv(report)
        else:
            sizes = [int(s) for s in args.training_sizes.split(",") if s.strip()]
            curve = training_size_curve(fit, series, calendar, sizes, args.horizon)
            text = training_size_curve_csv(curve)
    except FIT_FAILURES as err:
        print(f"fit failed during curve evaluation: {err}", file=sys.stderr)
        return 2
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    model = model_from_json(Path(args.model).read_text(encoding="utf-8"))
    series = _read_series(args.series)
    if series.end < model.train_end:
        raise _CliError("series ends before the model's training window")
    n_keep = (model.train_end - series.start).days + 1
    history = series.slice(0, n_keep)
    origin = model.train_end + timedelta(days=1)

    def load_scenario(path):
        try:
            return scenario_from_dict(
                json.loads(Path(path).read_text(encoding="utf-8")), origin, args.horizon
            )
        except (OSError, json.JSONDecodeError) as err:
            raise _CliError(f"cannot read scenario {path!r}: {err}") from err

    baseline = load_scenario(args.baseline)
    alternative = load_scenario(args.scenario)
    base_result, alt_result = simulate_scenario(model, history, baseline, alternative, args.horizon)
    doc = {"baseline": base_result.to_dict(), "alternative": alt_result.to_dict()}
    Path(args.out).write_text(json.dumps(doc, indent=2), encoding="utf-8")
    print(f"delta_vs_baseline: {alt_result.delta_vs_baseline:+.4f}%")
    print(f"wrote {args.out}")
    return 0


def _cmd_synth(args) -> int:
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as err:
            raise _CliError(f"cannot read config {args.config!r}: {err}") from err
    else:
        doc = {}
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.length is not None:
        doc["length"] = args.length
    try:
        config = SynthConfig.from_dict(doc)
    except (TypeError, ValueError) as err:
        raise _CliError(f"invalid synth config: {err}") from err
    series, calendar, truth = generate_synthetic(config)
    prefix = args.out_prefix
    write_series_csv(series, f"{prefix}_series.csv")
    with open(f"{prefix}_events.csv", "w", encoding="utf-8") as fh:
        fh.write("date,event_type,subtype,scale\n")
        for r in calendar.records:
            fh.write(f"{r.day.isoformat()},{r.event_type},{r.subtype},{r.scale}\n")
    Path(f"{prefix}_truth.json").write_text(ground_truth_to_json(truth), encoding="utf-8")
    if calendar.temperature is not None:
        with open(f"{prefix}_temperature.csv", "w", encoding="utf-8") as fh:
            fh.write("date,celsius\n")
            for day, value in zip(calendar.temperature.dates, calendar.temperature.values):
                fh.write(f"{day.isoformat()},{value!r}\n")
    print(f"wrote {prefix}_series.csv, {prefix}_events.csv, {prefix}_truth.json")
    return 0


def _cmd_serve(args) -> int:
    import os

    import uvicorn

    from .service import create_app

    app = create_app(args.store or os.environ.get("STORE_PATH", "eventcast-store.json"))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eventcast", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ingest", help="validate a date,value CSV")
    p.add_argument("csv")

    def add_common(p, with_params=True):
        p.add_argument("--series", required=True, help="date,value CSV")
        p.add_argument("--calendar", help="date,event_type,subtype,scale CSV")
        p.add_argument("--temperature", help="date,celsius CSV")
        p.add_argument("--holidays", help="date,name CSV")
        if with_params:
            p.add_argument("--params", help="JSON object (inline or file path)")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("fit", help="train one model family and write its JSON artifact")
    p.add_argument("family", choices=("arima", "gbm", "gam", "dbn"))
    add_common(p)
    p.add_argument("--target", choices=("sales", "playtime"))
    p.add_argument("--from", dest="from_date", help="first training date (ISO)")
    p.add_argument("--to", dest="to_date", help="last training date (ISO)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="rolling-origin evaluation, emits CSV + JSON report")
    p.add_argument("family", choices=("arima", "gbm", "gam", "dbn"))
    add_common(p)
    p.add_argument("--horizon", type=int, default=30)
    p.add_argument("--step", type=int, default=7)
    p.add_argument("--min-train", dest="min_train", type=int, default=180)
    p.add_argument("--out-prefix", dest="out_prefix", default="rolling_report")

    p = sub.add_parser("curves", help="per-horizon-day or per-training-size error curves")
    p.add_argument("family", choices=("arima", "gbm", "gam", "dbn"))
    add_common(p)
    p.add_argument("--horizon-curve", action="store_true", help="emit error by forecast day")
    p.add_argument("--training-sizes", help="comma-separated training sizes in days")
    p.add_argument("--horizon", type=int, default=30)
    p.add_argument("--step", type=int, default=7)
    p.add_argument("--min-train", dest="min_train", type=int, default=180)
    p.add_argument("--out", default="curve.csv")

    p = sub.add_parser("simulate", help="what-if scenario versus a baseline")
    p.add_argument("--model", required=True, help="model JSON from `fit`")
    p.add_argument("--series", required=True)
    p.add_argument("--baseline", required=True, help="baseline scenario JSON")
    p.add_argument("--scenario", required=True, help="alternative scenario JSON")
    p.add_argument("--horizon", type=int, default=30)
    p.add_argument("--out", default="simulation.json")

    p = sub.add_parser("synth", help="generate a synthetic dataset with ground truth")
    p.add_argument("--config", help="SynthConfig JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--out-prefix", dest="out_prefix", default="synthetic")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--store", help="store file path (default STORE_PATH env)")

    return parser


_COMMANDS = {
    "ingest": _cmd_ingest,
    "fit": _cmd_fit,
    "evaluate": _cmd_evaluate,
    "curves": _cmd_curves,
    "simulate": _cmd_simulate,
    "synth": _cmd_synth,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map onto the validation code
        return 0 if exc.code in (0, None) else 1
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except EventcastError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
