"""Crowd aggregation pipeline with machine combination.

Per question-day: take each forecaster's standing forecast, keep the newest
fraction, recalibrate each toward uniform, average with exponential-decay ×
skill weights, then extremize the aggregate with a season-dependent exponent.
Machine forecasts enter the mean with a weight equivalent to a fixed number
of average-skill forecasters (higher on time-series questions).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .core import (Ifp, Source, TournamentLog, ValidationError,
                   latest_per_source, validate_forecast)

DEFAULT_DECAY = math.log(2.0) / 14.0  # two-week half-life


@dataclass
class AggregationConfig:
    """All tunables of the aggregation pipeline; a named config is a slot."""

    name: str = "default"
    recency_fraction: float = 0.4
    decay_rate: float = DEFAULT_DECAY
    skill_exponent_start: float = 0.5
    skill_exponent_end: float = 2.0
    individual_recalibration: float = 0.9
    extremize_start: float = 0.8
    extremize_end: float = 1.2
    machine_weight_timeseries: float = 8.0
    machine_weight_other: float = 4.0
    min_forecasts_floor: int = 5

    def __post_init__(self):
        if not 0.0 < self.recency_fraction <= 1.0:
            raise ValidationError("recency_fraction must be in (0, 1]")
        if self.decay_rate < 0:
            raise ValidationError("decay_rate must be >= 0")
        if not 0.0 < self.individual_recalibration <= 1.0:
            raise ValidationError("individual_recalibration must be in (0, 1]")
        if self.extremize_start <= 0 or self.extremize_end <= 0:
            raise ValidationError("extremization exponents must be > 0")
        if self.machine_weight_timeseries < 0 or self.machine_weight_other < 0:
            raise ValidationError("machine weights must be >= 0")

    def skill_exponent(self, t: float) -> float:
        t = min(max(t, 0.0), 1.0)
        return self.skill_exponent_start + (
            self.skill_exponent_end - self.skill_exponent_start) * t

    def extremize_exponent(self, t: float) -> float:
        t = min(max(t, 0.0), 1.0)
        return self.extremize_start + (
            self.extremize_end - self.extremize_start) * t

    def machine_weight(self, is_timeseries: bool) -> float:
        return (self.machine_weight_timeseries if is_timeseries
                else self.machine_weight_other)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AggregationConfig":
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "AggregationConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# degenerate config: plain mean of the recency-kept set
def mean_only_config(name: str = "mean_only",
                     recency_fraction: float = 0.4,
                     floor: int = 5) -> AggregationConfig:
    return AggregationConfig(
        name=name, recency_fraction=recency_fraction, decay_rate=0.0,
        skill_exponent_start=0.0, skill_exponent_end=0.0,
        individual_recalibration=1.0, extremize_start=1.0, extremize_end=1.0,
        min_forecasts_floor=floor)


@dataclass(frozen=True)
class SkillRecord:
    """Track record of one forecaster over resolved questions."""

    user_id: str
    mean_z: float            # mean standardized daily Brier; lower is better
    update_count: int = 0
    mean_update_step: float = 0.0
    attempted: int = 0


def season_fraction(day: int, season) -> float:
    """Position of `day` within (first, last), clamped to [0, 1]."""
    first, last = season
    if last <= first:
        return 0.0
    return min(max((day - first) / (last - first), 0.0), 1.0)


def recency_filter(forecasts, fraction: float, floor: int = 5):
    """Newest max(ceil(fraction*n), min(floor, n)) forecasts by timestamp."""
    if not 0.0 < fraction <= 1.0:
        raise ValidationError("fraction must be in (0, 1]")
    fcs = list(forecasts)
    n = len(fcs)
    if n == 0:
        return []
    k = max(math.ceil(fraction * n), min(floor, n))
    order = sorted(range(n), key=lambda i: (fcs[i].timestamp, i))
    kept = set(order[n - k:])
    return [f for i, f in enumerate(fcs) if i in kept]


def decay_weights(forecasts, day: int, decay_rate: float) -> np.ndarray:
    """exp(-rate * age_in_days) per forecast; rate 0 gives all ones."""
    if decay_rate < 0:
        raise ValidationError("decay_rate must be >= 0")
    ages = np.array([day - f.day for f in forecasts], dtype=float)
    return np.exp(-decay_rate * ages)


def skill_weights(records: dict, user_ids, t: float,
                  config: AggregationConfig) -> np.ndarray:
    """Per-user weights from track records, renormalized to mean 1.

    Base score is exp(-mean_z): positive, monotone in skill, and exactly 1
    for unknown users. The season-interpolated exponent controls how unequal
    the weights are.
    """
    gamma = config.skill_exponent(t)
    base = np.array([math.exp(-records[u].mean_z) if u in records else 1.0
                     for u in user_ids])
    w = base ** gamma
    if w.size:
        w = w / w.mean()
    return w


def power_transform(probs, exponent: float) -> np.ndarray:
    """p_i^a renormalized; a>1 sharpens, a<1 blunts, a=1 is the identity."""
    if exponent <= 0:
        raise ValidationError("exponent must be > 0")
    v = np.asarray(probs, dtype=float)
    if exponent == 1.0:
        return v.copy()
    out = v ** exponent
    return out / out.sum()


def recalibrate_individual(probs, a_ind: float) -> np.ndarray:
    """Blunt a single forecaster's overconfidence (exponent in (0, 1])."""
    if not 0.0 < a_ind <= 1.0:
        raise ValidationError("a_ind must be in (0, 1]")
    return power_transform(probs, a_ind)


def extremize_aggregate(probs, a: float) -> np.ndarray:
    """Sharpen (or blunt) the aggregate with the season-scheduled exponent."""
    return power_transform(probs, a)


def human_aggregate(log: TournamentLog, ifp_id: str, day: int,
                    config: AggregationConfig, skill_records: dict,
                    season) -> Optional[np.ndarray]:
    """The full crowd pipeline for one (question, day); None when no input.

    Pipeline: standing forecast per human -> recency filter -> individual
    recalibration -> decay*skill weighted mean -> aggregate extremization.
    """
    probs, weight = human_aggregate_with_weight(
        log, ifp_id, day, config, skill_records, season)
    return probs


def human_aggregate_with_weight(log: TournamentLog, ifp_id: str, day: int,
                                config: AggregationConfig,
                                skill_records: dict, season):
    """As human_aggregate, also returning the total kept human weight."""
    latest = latest_per_source(log, ifp_id, day)
    humans = [fc for src, fc in sorted(latest.items())
              if src.kind == "human"]
    kept = recency_filter(humans, config.recency_fraction,
                          config.min_forecasts_floor)
    if not kept:
        return None, 0.0
    kept.sort(key=lambda f: f.source)  # fixed summation order
    t = season_fraction(day, season)
    mat = np.stack([
        recalibrate_individual(f.probs_array(),
                               config.individual_recalibration)
        for f in kept])
    w = (decay_weights(kept, day, config.decay_rate)
         * skill_weights(skill_records, [f.source.id for f in kept], t,
                         config))
    total = float(w.sum())
    if total <= 0:
        return None, 0.0
    mean = w @ mat / total
    out = extremize_aggregate(mean, config.extremize_exponent(t))
    return validate_forecast(out, mat.shape[1]), total


def combine_with_machine(human_probs, human_weight: float, machine_probs,
                         is_timeseries: bool,
                         config: AggregationConfig) -> np.ndarray:
    """Weighted mean of the (already extremized) human aggregate and the
    machine forecast, the latter counting as k average-skill forecasters."""
    k = config.machine_weight(is_timeseries)
    if human_probs is None and machine_probs is None:
        raise ValidationError("no inputs to combine")
    if human_probs is None:
        return np.asarray(machine_probs, dtype=float).copy()
    if machine_probs is None or k == 0.0:
        return np.asarray(human_probs, dtype=float).copy()
    h = np.asarray(human_probs, dtype=float)
    m = np.asarray(machine_probs, dtype=float)
    out = (human_weight * h + k * m) / (human_weight + k)
    return validate_forecast(out, h.shape[0])


def slot_forecast(log: TournamentLog, ifp: Ifp, day: int,
                  config: AggregationConfig, skill_records: dict, season,
                  machine_probs=None) -> Optional[np.ndarray]:
    """One slot's daily forecast: human pipeline plus machine combination."""
    human, weight = human_aggregate_with_weight(
        log, ifp.id, day, config, skill_records, season)
    if human is None and machine_probs is None:
        return None
    return combine_with_machine(human, weight, machine_probs,
                                ifp.series_ref is not None, config)


# ---------------------------------------------------------------------------
# vectorized per-question replay (all active days at once)

def standing_matrix(ifp: Ifp, forecasts, recalibration: float = 1.0):
    """Forward-filled standing forecasts for one question.

    Returns (sources, tstamp_key, probs) where probs is (S, D, C) with the
    standing (optionally recalibrated) forecast of each source on each active
    day, and tstamp_key is an (S, D) int64 key encoding (day, seq, source
    index) of the standing forecast, -1 where a source has none yet.
    """
    days = ifp.active_days
    d0, nd = days.start, len(days)
    c = ifp.n_options
    sources = sorted({f.source for f in forecasts})
    s_index = {s: i for i, s in enumerate(sources)}
    ns = len(sources)
    key = np.full((ns, nd), -1, dtype=np.int64)
    probs = np.full((ns, nd, c), np.nan)
    per_source: dict = {i: [] for i in range(ns)}
    for f in sorted(forecasts, key=lambda f: (f.day, f.seq)):
        stream = per_source[s_index[f.source]]
        if stream and stream[-1].day == f.day:
            stream[-1] = f  # same-day revision: last write wins
        else:
            stream.append(f)
    for i, stream in per_source.items():
        for j, f in enumerate(stream):
            start = f.day - d0
            end = stream[j + 1].day - d0 if j + 1 < len(stream) else nd
            p = f.probs_array()
            if recalibration != 1.0:
                p = recalibrate_individual(p, recalibration)
            probs[i, start:end] = p
            key[i, start:end] = (f.day * 1_000_000 + f.seq) * 1_000_000 + i
    return sources, key, probs


def aggregate_ifp_daily(ifp: Ifp, human_forecasts, config: AggregationConfig,
                        skill_records: dict, season,
                        machine_daily=None, skill_base=None) -> np.ndarray:
    """Slot forecast for every active day of one question, vectorized.

    `machine_daily` is an optional (D, C) array of the machine's standing
    forecast per day (NaN rows where absent). `skill_base` optionally gives
    per-(source, day) skill base scores (sources in sorted order), overriding
    the static `skill_records`. Returns a (D, C) array with NaN rows on days
    with neither human nor machine input. Matches the per-day pipeline
    (human_aggregate + combine_with_machine) to float precision.
    """
    days = ifp.active_days
    nd = len(days)
    c = ifp.n_options
    sources, key, probs = standing_matrix(
        ifp, [f for f in human_forecasts if f.source.kind == "human"],
        recalibration=config.individual_recalibration)
    ns = len(sources)
    out = np.full((nd, c), np.nan)
    t = np.array([season_fraction(d, season) for d in days])
    a_t = config.extremize_start + (
        config.extremize_end - config.extremize_start) * t
    if ns:
        present = key >= 0
        n_d = present.sum(axis=0)
        k_d = np.maximum(np.ceil(config.recency_fraction * n_d),
                         np.minimum(config.min_forecasts_floor, n_d)
                         ).astype(int)
        order = np.argsort(-key, axis=0, kind="stable")
        ranks = np.argsort(order, axis=0, kind="stable")
        kept = present & (ranks < k_d[None, :])

        fc_day = np.where(present, key // 1_000_000_000_000, 0)
        day_grid = np.arange(days.start, days.stop)
        decay = np.exp(-config.decay_rate * (day_grid[None, :] - fc_day))

        gamma = config.skill_exponent_start + (
            config.skill_exponent_end - config.skill_exponent_start) * t
        if skill_base is not None:
            skill = np.asarray(skill_base, dtype=float) ** gamma[None, :]
        else:
            base = np.array([
                math.exp(-skill_records[s.id].mean_z)
                if s.id in skill_records else 1.0 for s in sources])
            skill = base[:, None] ** gamma[None, :]
        kept_f = kept.astype(float)
        kept_n = kept_f.sum(axis=0)
        skill_sum = np.einsum("sd,sd->d", skill, kept_f)
        with np.errstate(invalid="ignore", divide="ignore"):
            skill = skill / np.where(kept_n > 0,
                                     skill_sum / np.maximum(kept_n, 1.0),
                                     1.0)[None, :]
        w = decay * skill * kept_f
        total = w.sum(axis=0)
        has_human = total > 0
        pm = np.where(np.isnan(probs), 0.0, probs)
        num = np.einsum("sd,sdc->dc", w, pm)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = num / total[:, None]
        powed = mean ** a_t[:, None]
        human = powed / powed.sum(axis=1, keepdims=True)
        human_weight = total
    else:
        has_human = np.zeros(nd, dtype=bool)
        human = np.full((nd, c), np.nan)
        human_weight = np.zeros(nd)

    if machine_daily is None:
        machine_daily = np.full((nd, c), np.nan)
    has_machine = ~np.isnan(machine_daily[:, 0])
    k = config.machine_weight(ifp.series_ref is not None)

    both = has_human & has_machine & (k > 0)
    only_h = has_human & ~both
    only_m = has_machine & ~has_human
    out[only_h] = human[only_h]
    out[only_m] = machine_daily[only_m]
    if both.any():
        hw = human_weight[both][:, None]
        out[both] = ((hw * human[both] + k * machine_daily[both])
                     / (hw + k))
    sums = out.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        out = out / sums
    return out


def machine_standing_daily(ifp: Ifp, machine_forecasts) -> np.ndarray:
    """(D, C) standing machine forecast per active day (NaN before first)."""
    _, key, probs = standing_matrix(ifp, list(machine_forecasts))
    nd, c = len(ifp.active_days), ifp.n_options
    if probs.shape[0] == 0:
        return np.full((nd, c), np.nan)
    # several machine sources: most recent standing one wins
    if probs.shape[0] == 1:
        return probs[0]
    best = np.argmax(key, axis=0)
    return probs[best, np.arange(nd)]


def skill_records_from_scores(standardized: "pd.DataFrame") -> dict:
    """Build per-user SkillRecords from a standardized daily score frame.

    Expects columns source, z (as produced by scoring.standardize) where
    rows cover resolved IFPs only; only human sources are recorded.
    """
    records = {}
    for source, grp in standardized.groupby("source"):
        src = Source.parse(source)
        if src.kind != "human":
            continue
        records[src.id] = SkillRecord(
            user_id=src.id,
            mean_z=float(grp["z"].mean()),
            attempted=int(grp["ifp_id"].nunique()))
    return records
