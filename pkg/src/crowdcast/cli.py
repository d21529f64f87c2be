"""Command-line interface: ingestion, command dispatch, report emission.

Canonical tabular schemas (UTF-8 CSV, header row, ISO-8601 dates):

- ifps.csv: ifp_id,title,kind,options,open_date,close_date,resolved_option,
  series_ref,thresholds,horizon_kind — `options` and `thresholds` are
  pipe-separated.
- forecasts.csv: ifp_id,source_kind,source_id,date,seq,option_index,
  probability — long form, one row per option of one submission.
- series.csv: series_id,date,value,frequency
- scores.csv: ifp_id,source,day,brier

External exports are adapted through an IngestMapping JSON document instead
of hard-coding their column names. Every command writes its CSV outputs, a
JSON summary, and a RunManifest; outputs are deterministic functions of the
inputs, the config, and the seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from . import __version__
from .aggregation import AggregationConfig
from .allocation import AllocationPolicy, ConsensusRule, evaluate_policies
from .core import (Forecast, Ifp, Source, TournamentLog, ValidationError)
from .replay import SkillTimeline, slot_daily_matrix, slot_score_frame
from .scoring import ScoreReport
from .simulator import (SimConfig, backcast_compare, run_tournament,
                        sparsity_experiment)
from . import tsmodels

# day 0 of the internal integer calendar
_DAY0 = date(2020, 1, 1).toordinal()

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2


def day_to_date(day: int) -> str:
    return date.fromordinal(day + _DAY0).isoformat()


def date_to_day(text: str, date_format: Optional[str] = None) -> int:
    text = str(text).strip()
    if text.lstrip("-").isdigit():
        return int(text)
    if date_format:
        from datetime import datetime
        return datetime.strptime(text, date_format).date().toordinal() - _DAY0
    return date.fromisoformat(text).toordinal() - _DAY0


# ---------------------------------------------------------------------------
# ingest mapping

_REQUIRED_FIELDS = ("ifp_id", "user_id", "option", "probability", "date")


@dataclass
class IngestMapping:
    """Adapter from an external forecast export to the canonical schema."""

    columns: dict                      # canonical field -> external header
    date_format: Optional[str] = None  # strptime format; None = ISO-8601
    probability_scale: str = "unit"    # "unit" (0-1) | "percent" (0-100)
    condition: Optional[dict] = None   # optional {column: required value}

    def __post_init__(self):
        missing = [f for f in _REQUIRED_FIELDS if f not in self.columns]
        if missing:
            raise ValidationError(f"mapping lacks fields: {missing}")
        if self.probability_scale not in ("unit", "percent"):
            raise ValidationError(
                f"unknown probability scale {self.probability_scale!r}")

    @classmethod
    def from_json(cls, path) -> "IngestMapping":
        with open(path) as fh:
            return cls(**json.load(fh))

    @classmethod
    def canonical(cls) -> "IngestMapping":
        return cls(columns={"ifp_id": "ifp_id", "user_id": "source_id",
                            "source_kind": "source_kind",
                            "option": "option_index",
                            "probability": "probability",
                            "date": "date", "seq": "seq"})


# ---------------------------------------------------------------------------
# canonical readers/writers

def _split_pipe(text: str):
    text = text.strip()
    return tuple(text.split("|")) if text else ()


def read_ifps(path) -> list:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    needed = {"ifp_id", "kind", "options", "open_date", "close_date"}
    missing = needed - set(frame.columns)
    if missing:
        raise ValidationError(f"{path}: missing IFP columns {sorted(missing)}")
    out = []
    for row in frame.itertuples(index=False):
        d = row._asdict()
        thresholds = _split_pipe(d.get("thresholds", ""))
        resolved = d.get("resolved_option", "")
        out.append(Ifp(
            id=d["ifp_id"], title=d.get("title", ""),
            options=_split_pipe(d["options"]), kind=d["kind"],
            open_date=date_to_day(d["open_date"]),
            close_date=date_to_day(d["close_date"]),
            resolved_option=int(resolved) if resolved != "" else None,
            series_ref=d.get("series_ref") or None,
            thresholds=tuple(float(t) for t in thresholds) or None,
            horizon_kind=d.get("horizon_kind") or "value_at_close"))
    return out


def write_ifps(ifps, path) -> None:
    rows = []
    for i in ifps:
        rows.append({
            "ifp_id": i.id, "title": i.title, "kind": i.kind,
            "options": "|".join(i.options),
            "open_date": day_to_date(i.open_date),
            "close_date": day_to_date(i.close_date),
            "resolved_option": ("" if i.resolved_option is None
                                else i.resolved_option),
            "series_ref": i.series_ref or "",
            "thresholds": "|".join(repr(float(t))
                                   for t in (i.thresholds or ())),
            "horizon_kind": i.horizon_kind})
    pd.DataFrame(rows).to_csv(path, index=False)


def write_forecasts(forecasts, path) -> None:
    rows = []
    for f in forecasts:
        for k, p in enumerate(f.probs):
            rows.append({"ifp_id": f.ifp_id, "source_kind": f.source.kind,
                         "source_id": f.source.id,
                         "date": day_to_date(f.day), "seq": f.seq,
                         "option_index": k, "probability": repr(float(p))})
    pd.DataFrame(rows).to_csv(path, index=False)


def write_series(series_map, path) -> None:
    rows = []
    for sid in sorted(series_map):
        s = series_map[sid]
        for d, v in zip(s.days, s.values):
            rows.append({"series_id": sid, "date": day_to_date(d),
                         "value": repr(float(v)), "frequency": s.frequency})
    pd.DataFrame(rows).to_csv(path, index=False)


def read_series(path) -> dict:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    needed = {"series_id", "date", "value"}
    missing = needed - set(frame.columns)
    if missing:
        raise ValidationError(f"{path}: missing series columns "
                              f"{sorted(missing)}")
    out = {}
    for sid, grp in frame.groupby("series_id", sort=True):
        days = [date_to_day(t) for t in grp["date"]]
        values = [float(v) for v in grp["value"]]
        freq = grp["frequency"].iloc[0] if "frequency" in grp else "daily"
        order = np.argsort(days, kind="stable")
        out[sid] = tsmodels.Series(
            sid, tuple(days[i] for i in order),
            tuple(values[i] for i in order), freq or "daily")
    return out


# ---------------------------------------------------------------------------
# forecast ingestion

def import_forecasts(forecasts_path, ifps, mapping: IngestMapping,
                     strict: bool = False):
    """Build a TournamentLog from a forecast table under a mapping.

    Rows are grouped per submission (user x ifp x timestamp); each group must
    supply one probability per option summing to 1 within 1e-6 (after scale
    conversion). Failing groups are collected as rejects with reasons; a
    reject rate above 1% (0% with `strict`) aborts.
    """
    frame = pd.read_csv(forecasts_path, dtype=str, keep_default_na=False)
    cols = mapping.columns
    missing = [c for c in cols.values() if c not in frame.columns]
    if missing:
        raise ValidationError(f"{forecasts_path}: missing columns {missing}")
    if mapping.condition:
        for col, value in mapping.condition.items():
            if col not in frame.columns:
                raise ValidationError(f"{forecasts_path}: missing condition "
                                      f"column {col!r}")
            frame = frame[frame[col] == value]
    ifp_by_id = {i.id: i for i in ifps}
    scale = 100.0 if mapping.probability_scale == "percent" else 1.0

    def col(row, field, default=""):
        name = cols.get(field)
        return row[name] if name is not None else default

    # a repeated option under the same timestamp starts a new submission
    groups: dict = {}
    order: list = []
    occ: dict = {}
    for _, row in frame.iterrows():
        base = (col(row, "ifp_id"), col(row, "source_kind", "human"),
                col(row, "user_id"), col(row, "date"), col(row, "seq", "0"))
        opt = col(row, "option")
        n = occ[base, opt] = occ.get((base, opt), -1) + 1
        key = base + (n,)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append((opt, col(row, "probability")))

    forecasts, rejects = [], []

    def reject(key, reason):
        rejects.append({"ifp_id": key[0], "source_id": key[2],
                        "date": key[3], "reason": reason})

    for key in order:
        ifp_id, kind, user, date_text, seq_text, _ = key
        ifp = ifp_by_id.get(ifp_id)
        if ifp is None:
            reject(key, "unknown ifp")
            continue
        probs = np.full(ifp.n_options, np.nan)
        ok = True
        for opt_text, p_text in groups[key]:
            opt_text = opt_text.strip()
            if opt_text.lstrip("-").isdigit():
                idx = int(opt_text)
            elif opt_text in ifp.options:
                idx = ifp.options.index(opt_text)
            else:
                reject(key, f"unresolvable option {opt_text!r}")
                ok = False
                break
            if not 0 <= idx < ifp.n_options:
                reject(key, f"option index {idx} out of range")
                ok = False
                break
            try:
                probs[idx] = float(p_text) / scale
            except ValueError:
                reject(key, f"bad probability {p_text!r}")
                ok = False
                break
        if not ok:
            continue
        if np.isnan(probs).any():
            reject(key, "incomplete submission")
            continue
        if (probs < 0).any():
            reject(key, "negative probability")
            continue
        s = probs.sum()
        if abs(s - 1.0) > 1e-6:
            reject(key, f"sum deviation ({s:.6f})")
            continue
        try:
            day = date_to_day(date_text, mapping.date_format)
            seq = int(seq_text) if seq_text.strip() else 0
        except ValueError:
            reject(key, f"bad timestamp {date_text!r}")
            continue
        if not ifp.is_active(day):
            reject(key, f"day {day} outside the ifp window")
            continue
        source = (Source.machine(user) if kind == "machine"
                  else Source.slot(user) if kind == "slot"
                  else Source.human(user))
        if abs(s - 1.0) > 1e-12:  # true renormalization, not float noise
            probs = probs / s
        forecasts.append(Forecast(ifp_id, source, tuple(probs), day, seq))

    total = len(order)
    limit = 0.0 if strict else 0.01
    if total and len(rejects) / total > limit:
        raise ValidationError(
            f"{len(rejects)}/{total} submissions rejected "
            f"(limit {limit:.0%}); see the rejects report")
    log = TournamentLog(ifps, forecasts)
    return log, pd.DataFrame(rejects,
                             columns=["ifp_id", "source_id", "date", "reason"])


# ---------------------------------------------------------------------------
# run manifest

def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, command: str, config: dict,
                   inputs, outputs, seed: Optional[int]) -> Path:
    config_text = json.dumps(config, sort_keys=True)
    manifest = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config_hash": hashlib.sha256(config_text.encode()).hexdigest(),
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_summary(out_dir: Path, payload: dict) -> Path:
    path = out_dir / "summary.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return path


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _slots_from_config(config: dict):
    slots = config.get("slots")
    if not slots:
        return [AggregationConfig(name="default")]
    return [AggregationConfig.from_dict(s) for s in slots]


def _season(config: dict, log: TournamentLog):
    if "season" in config:
        first, last = config["season"]
        return (int(first), int(last))
    return log.calendar


def _load_log(args, config: dict):
    ifps = read_ifps(args.ifps)
    mapping = (IngestMapping.from_json(args.mapping) if args.mapping
               else IngestMapping.canonical())
    log, rejects = import_forecasts(args.forecasts, ifps, mapping,
                                    strict=args.strict)
    return log, rejects


# ---------------------------------------------------------------------------
# commands

def cmd_score(args) -> int:
    config = _load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log, rejects = _load_log(args, config)
    rejects_path = out / "rejects.csv"
    rejects.to_csv(rejects_path, index=False)
    report = ScoreReport.build(log)
    scores_path = out / "scores.csv"
    report.daily[["ifp_id", "source", "day", "brier"]].to_csv(
        scores_path, index=False)
    summary = report.summary(baseline=args.baseline)
    summary["n_forecasts"] = len(log)
    summary["n_rejects"] = len(rejects)
    summary["mmdb"] = {row["source"]: row["mmdb"] for row in
                       report.mmdb_table().to_dict(orient="records")}
    summary_path = _write_summary(out, summary)
    write_manifest(out, "score", config, [args.ifps, args.forecasts],
                   [scores_path, summary_path, rejects_path], None)
    return EXIT_OK


def cmd_aggregate(args) -> int:
    config = _load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log, rejects = _load_log(args, config)
    (out / "rejects.csv").write_text(rejects.to_csv(index=False))
    slots = _slots_from_config(config)
    season = _season(config, log)
    skill = SkillTimeline(log)
    fc_rows, score_frames = [], []
    for slot in slots:
        for ifp in log.ifps.values():
            probs = slot_daily_matrix(log, ifp, slot, season, skill=skill)
            for j, day in enumerate(ifp.active_days):
                if np.isnan(probs[j, 0]):
                    continue
                for k in range(ifp.n_options):
                    fc_rows.append({"ifp_id": ifp.id, "slot": slot.name,
                                    "date": day_to_date(day),
                                    "option_index": k,
                                    "probability": repr(float(probs[j, k]))})
        score_frames.append(slot_score_frame(log, slot, season, skill=skill))
    fc_path = out / "aggregates.csv"
    pd.DataFrame(fc_rows).to_csv(fc_path, index=False)
    scores = pd.concat(score_frames, ignore_index=True)
    scores_path = out / "scores.csv"
    scores[["ifp_id", "source", "day", "brier"]].to_csv(scores_path,
                                                        index=False)
    summary_path = _write_summary(out, {
        "slots": {s.name: float(scores[scores["source"] == f"slot:{s.name}"]
                                ["brier"].mean())
                  for s in slots if len(scores)}})
    write_manifest(out, "aggregate", config, [args.ifps, args.forecasts],
                   [fc_path, scores_path, summary_path], None)
    return EXIT_OK


def cmd_ts_forecast(args) -> int:
    config = _load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ifps = read_ifps(args.ifps)
    series_map = read_series(args.series)
    model = args.model
    rows, fitted = [], {}
    for ifp in ifps:
        if ifp.series_ref is None or ifp.series_ref not in series_map:
            continue
        ser = series_map[ifp.series_ref]
        try:
            if model == "phe2":
                probs = tsmodels.phe2(ser, ifp)
            else:
                fitter = {"arima": tsmodels.auto_arima,
                          "ets": tsmodels.fit_ets,
                          "random_walk": tsmodels.fit_random_walk}[model]
                fitted_model = fitter(ser)
                fitted[ifp.id] = fitted_model.to_dict()
                h = max(1, int(np.ceil((ifp.close_date - ser.days[-1])
                                       / ser.step)))
                dist = fitted_model.predictive(h, ifp.horizon_kind)
                probs = tsmodels.to_option_probs(dist, ifp)
        except (tsmodels.FitError, ValidationError) as exc:
            fitted[ifp.id] = {"error": str(exc)}
            continue
        for k, p in enumerate(probs):
            rows.append({"ifp_id": ifp.id, "source_kind": "machine",
                         "source_id": model,
                         "date": day_to_date(ser.days[-1]), "seq": 0,
                         "option_index": k, "probability": repr(float(p))})
    fc_path = out / "forecasts.csv"
    pd.DataFrame(rows).to_csv(fc_path, index=False)
    summary_path = _write_summary(out, {"model": model, "fitted": fitted})
    write_manifest(out, "ts-forecast", config, [args.ifps, args.series],
                   [fc_path, summary_path], None)
    return EXIT_OK


def _sim_config(config: dict, seed: Optional[int]) -> SimConfig:
    sim = SimConfig.from_dict(config.get("sim", {}))
    if seed is not None:
        sim.seed = seed
    return sim


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sim = _sim_config(config, args.seed)
    slots = _slots_from_config(config) if config.get("slots") else None
    result = run_tournament(sim, slots=slots, workers=args.workers)
    ifps_path = out / "ifps.csv"
    write_ifps(sorted(result.world.ifps.values(), key=lambda i: i.id),
               ifps_path)
    fc_path = out / "forecasts.csv"
    write_forecasts(result.log.forecasts, fc_path)
    series_path = out / "series.csv"
    write_series(result.world.series, series_path)
    frames = [rep.daily.assign(source=f"slot:{name}")
              for name, rep in result.reports.items()]
    scores = pd.concat(frames, ignore_index=True)
    scores_path = out / "scores.csv"
    scores[["ifp_id", "source", "day", "brier"]].to_csv(scores_path,
                                                        index=False)
    summary_path = _write_summary(out, {
        "config": sim.to_dict(),
        "slots": {name: float(rep.daily["brier"].mean())
                  for name, rep in result.reports.items()},
        "n_forecasts": len(result.log)})
    write_manifest(out, "simulate", config, [],
                   [ifps_path, fc_path, series_path, scores_path,
                    summary_path], sim.seed)
    return EXIT_OK


def cmd_sparsity(args) -> int:
    config = _load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sim = _sim_config(config, args.seed)
    levels = (config.get("sparsity", {}).get("levels")
              or [0.0, 0.2, 0.4, 0.6, 0.8])
    reps = int(config.get("sparsity", {}).get("reps", 20))
    result = run_tournament(sim, workers=args.workers)
    rows, points = [], []
    for with_machine in (True, False):
        r = sparsity_experiment(result, levels, reps=reps,
                                with_machine=with_machine)
        rows.append({"arm": "with_machine" if with_machine else "human_only",
                     "slope": r["slope"], "intercept": r["intercept"],
                     "ci_low": r["slope_ci95"][0],
                     "ci_high": r["slope_ci95"][1]})
        points.append(r["points"].assign(
            arm="with_machine" if with_machine else "human_only"))
    reg_path = out / "regression.csv"
    pd.DataFrame(rows).to_csv(reg_path, index=False)
    points_path = out / "points.csv"
    pd.concat(points, ignore_index=True).to_csv(points_path, index=False)
    summary_path = _write_summary(out, {"config": sim.to_dict(),
                                        "levels": levels, "reps": reps,
                                        "regression": rows})
    write_manifest(out, "sparsity", config, [],
                   [reg_path, points_path, summary_path], sim.seed)
    return EXIT_OK


def _policies_from_config(config: dict):
    specs = config.get("allocation", {}).get("policies")
    if not specs:
        return [AllocationPolicy(kind="all"),
                AllocationPolicy(kind="random"),
                AllocationPolicy(kind="greedy_ifp", exclude_frac=0.25),
                AllocationPolicy(kind="greedy_ifp_pp", exclude_frac=0.25)]
    out = []
    for spec in specs:
        spec = dict(spec)
        if "consensus" in spec:
            spec["consensus"] = ConsensusRule(**spec["consensus"])
        out.append(AllocationPolicy(**spec))
    return out


def cmd_allocate(args) -> int:
    config = _load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    inputs = []
    if args.ifps and args.forecasts:
        log, _ = _load_log(args, config)
        season = _season(config, log)
        inputs = [args.ifps, args.forecasts]
        seed = None
    else:
        sim = _sim_config(config, args.seed)
        result = run_tournament(sim, workers=args.workers)
        log, season, seed = result.log, result.season, sim.seed
    slots = _slots_from_config(config)
    table = evaluate_policies(log, _policies_from_config(config), slots[0],
                              season)
    table_path = out / "allocation.csv"
    table.to_csv(table_path, index=False)
    summary_path = _write_summary(out, {
        "policies": table.to_dict(orient="records")})
    write_manifest(out, "allocate", config, inputs,
                   [table_path, summary_path], seed)
    return EXIT_OK


def cmd_backcast(args) -> int:
    config = _load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ifps = read_ifps(args.ifps)
    mapping = (IngestMapping.from_json(args.mapping) if args.mapping
               else IngestMapping.canonical())
    pools = {}
    inputs = [args.ifps]
    for spec in args.pool:
        name, _, path = spec.partition("=")
        if not path:
            raise ValidationError(f"--pool must be NAME=PATH, got {spec!r}")
        pools[name], _ = import_forecasts(path, ifps, mapping,
                                          strict=args.strict)
        inputs.append(path)
    slots = _slots_from_config(config)
    season = _season(config, pools[next(iter(pools))])
    table = backcast_compare(pools, slots, season)
    table_path = out / "backcast.csv"
    table.to_csv(table_path, index=False)
    summary_path = _write_summary(out, {
        "pools": list(pools), "slots": [s.name for s in slots],
        "rows": table.to_dict(orient="records")})
    write_manifest(out, "backcast", config, inputs,
                   [table_path, summary_path], None)
    return EXIT_OK


# ---------------------------------------------------------------------------
# dispatch

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdcast",
        description="Hybrid human+machine forecasting engine")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False, sim=False):
        p.add_argument("--config", default=None, help="JSON config document")
        p.add_argument("--out-dir", required=True)
        p.add_argument("--strict", action="store_true",
                       help="abort on any rejected submission")
        if data:
            p.add_argument("--ifps", required=True)
            p.add_argument("--forecasts", required=True)
            p.add_argument("--mapping", default=None,
                           help="IngestMapping JSON for external exports")
        if sim:
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("score", help="daily Brier scores for a forecast log")
    common(p, data=True)
    p.add_argument("--baseline", default=None,
                   help="source whose scores anchor Cohen's d")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("aggregate", help="slot aggregates for a forecast log")
    common(p, data=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("ts-forecast", help="machine forecasts from series")
    common(p)
    p.add_argument("--ifps", required=True)
    p.add_argument("--series", required=True)
    p.add_argument("--model", default="phe2",
                   choices=["phe2", "arima", "ets", "random_walk"])
    p.set_defaults(func=cmd_ts_forecast)

    p = sub.add_parser("simulate", help="synthetic tournament")
    common(p, sim=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sparsity", help="forecaster-deletion experiment")
    common(p, sim=True)
    p.set_defaults(func=cmd_sparsity)

    p = sub.add_parser("allocate", help="allocation policy comparison")
    common(p, sim=True)
    p.add_argument("--ifps", default=None)
    p.add_argument("--forecasts", default=None)
    p.add_argument("--mapping", default=None)
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("backcast", help="cross-apply slots to forecast pools")
    common(p)
    p.add_argument("--ifps", required=True)
    p.add_argument("--mapping", default=None)
    p.add_argument("--pool", action="append", required=True,
                   metavar="NAME=PATH")
    p.set_defaults(func=cmd_backcast)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
