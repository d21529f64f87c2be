"""Proper scoring of forecast streams.

Accuracy is the Brier score in sum form, 0 (perfect) to 2 (worst). Nominal
questions use the plain multi-category form; ordinal questions average the
binary Brier over the C-1 order-preserving cumulative splits. Per-question
accuracy is the Mean Daily Brier (MDB): the standing forecast is scored on
every active day, with the uniform prior before a source's first forecast.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from .core import (BINARY, ORDINAL, Ifp, Source, TournamentLog,
                   ValidationError, latest_per_source, uniform_forecast,
                   validate_forecast)


@dataclass(frozen=True)
class DailyScore:
    ifp_id: str
    source: Source
    day: int
    brier: float


def brier_nominal(probs, outcome_index: int) -> float:
    """Sum-form Brier: squared distance from the one-hot outcome."""
    v = np.asarray(probs, dtype=float)
    if not 0 <= outcome_index < v.shape[0]:
        raise ValidationError(f"outcome {outcome_index} out of range")
    o = np.zeros_like(v)
    o[outcome_index] = 1.0
    d = v - o
    return float(np.dot(d, d))


def brier_ordinal(probs, outcome_index: int) -> float:
    """Ordered-category Brier: mean two-category Brier over cumulative splits.

    For each of the C-1 order-preserving partitions {1..k | k+1..C}, score the
    binary forecast (cum_k, 1-cum_k) against which side the outcome fell on,
    then average. For C=2 this is exactly the binary nominal Brier.
    """
    v = np.asarray(probs, dtype=float)
    c = v.shape[0]
    if not 0 <= outcome_index < c:
        raise ValidationError(f"outcome {outcome_index} out of range")
    cum = np.cumsum(v)[:-1]                      # P(option <= k), k = 0..C-2
    below = (outcome_index <= np.arange(c - 1)).astype(float)
    # two-category sum-form Brier at each split: 2*(cum - below)^2
    return float(np.mean(2.0 * (cum - below) ** 2))


def brier_rows(probs_matrix, outcome_index: int, kind: str) -> np.ndarray:
    """Brier score of each row of an (n, C) matrix; NaN rows stay NaN."""
    m = np.asarray(probs_matrix, dtype=float)
    c = m.shape[1]
    if kind == ORDINAL:
        cum = np.cumsum(m, axis=1)[:, :-1]
        below = (outcome_index <= np.arange(c - 1)).astype(float)
        return np.mean(2.0 * (cum - below[None, :]) ** 2, axis=1)
    o = np.zeros(c)
    o[outcome_index] = 1.0
    d = m - o[None, :]
    return np.sum(d * d, axis=1)


def brier_for_ifp(ifp: Ifp, probs, outcome_index: Optional[int] = None) -> float:
    """Dispatch on question type; binary uses the nominal form."""
    if outcome_index is None:
        if ifp.resolved_option is None:
            raise ValidationError(f"{ifp.id}: not resolved")
        outcome_index = ifp.resolved_option
    if ifp.kind == ORDINAL:
        return brier_ordinal(probs, outcome_index)
    return brier_nominal(probs, outcome_index)


def score_ifp_daily(log: TournamentLog, ifp_id: str, source: Source,
                    fill: str = "uniform"):
    """One DailyScore per active day for a source, with carry-forward.

    With fill="uniform" a source with no forecast yet scores the uniform
    prior; fill="none" emits scores only from the first forecast onward.
    """
    ifp = log.ifps.get(ifp_id)
    if ifp is None:
        raise ValidationError(f"unknown IFP {ifp_id!r}")
    if ifp.resolved_option is None:
        raise ValidationError(f"{ifp_id}: cannot score unresolved IFP")
    c = ifp.n_options
    stream = [f for f in log.forecasts_for(ifp_id) if f.source == source]
    out = []
    idx = 0
    current = uniform_forecast(c) if fill == "uniform" else None
    for day in ifp.active_days:
        while idx < len(stream) and stream[idx].day <= day:
            current = stream[idx].probs_array()
            idx += 1
        if current is None:
            continue
        out.append(DailyScore(ifp_id, source, day,
                              brier_for_ifp(ifp, current)))
    return out


def mdb(daily_scores: Iterable[DailyScore]) -> float:
    """Mean Daily Brier over a single (source, IFP) score stream."""
    vals = [s.brier for s in daily_scores]
    if not vals:
        raise ValidationError("no daily scores")
    return float(np.mean(vals))


def daily_frame(scores: Iterable[DailyScore]) -> pd.DataFrame:
    return pd.DataFrame(
        [(s.ifp_id, str(s.source), s.day, s.brier) for s in scores],
        columns=["ifp_id", "source", "day", "brier"])


def standardize(daily: pd.DataFrame, level: str = "ifp_day") -> pd.DataFrame:
    """Z-score briers within each (ifp, day) group, or within each ifp.

    Uses the sample (n-1) standard deviation; groups with a single member or
    zero spread map to 0. Adds a `z` column.
    """
    if level == "ifp_day":
        keys = ["ifp_id", "day"]
    elif level == "ifp":
        keys = ["ifp_id"]
    else:
        raise ValidationError(f"unknown standardization level {level!r}")
    out = daily.copy()
    grp = out.groupby(keys)["brier"]
    mean = grp.transform("mean")
    sd = grp.transform("std")  # ddof=1; NaN for singleton groups
    z = (out["brier"] - mean) / sd
    out["z"] = z.where(np.isfinite(z) & (sd > 0), 0.0)
    return out


def cohens_d(scores_a, scores_b) -> float:
    """Standardized mean difference (a - b) with pooled sample sd."""
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValidationError("empty sample")
    na, nb = a.size, b.size
    va = a.var(ddof=1) if na > 1 else 0.0
    vb = b.var(ddof=1) if nb > 1 else 0.0
    pooled = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
    if pooled <= 0:
        raise ValidationError("zero pooled standard deviation")
    return float((a.mean() - b.mean()) / np.sqrt(pooled))


def mmdb_individual(log: TournamentLog, user: Source,
                    cohort_medians: dict, imputation: str = "median") -> float:
    """Mean of per-IFP mean daily scores for one user, attempted IFPs only.

    Days an IFP was open before the user's first forecast take the cohort's
    median score for that (ifp, day); days from the first forecast on use the
    user's own carried-forward scores. `cohort_medians` maps
    (ifp_id, day) -> median brier.
    """
    if imputation != "median":
        raise ValidationError(f"unknown imputation {imputation!r}")
    if not cohort_medians:
        raise ValidationError("empty cohort median table")
    per_ifp = []
    for ifp_id, ifp in log.ifps.items():
        if ifp.resolved_option is None:
            continue
        stream = [f for f in log.forecasts_for(ifp_id) if f.source == user]
        if not stream:
            continue  # not attempted
        first_day = stream[0].day
        own = {s.day: s.brier
               for s in score_ifp_daily(log, ifp_id, user, fill="uniform")}
        days = []
        for day in ifp.active_days:
            if day < first_day:
                try:
                    days.append(cohort_medians[(ifp_id, day)])
                except KeyError:
                    raise ValidationError(
                        f"no cohort median for ({ifp_id}, {day})") from None
            else:
                days.append(own[day])
        per_ifp.append(float(np.mean(days)))
    if not per_ifp:
        raise ValidationError(f"{user}: no attempted resolved IFPs")
    return float(np.mean(per_ifp))


def cohort_median_table(log: TournamentLog, users) -> dict:
    """Per-(ifp, day) median of the cohort's carried-forward daily scores."""
    table: dict = {}
    for ifp_id, ifp in log.ifps.items():
        if ifp.resolved_option is None:
            continue
        per_day: dict = {d: [] for d in ifp.active_days}
        for u in users:
            for s in score_ifp_daily(log, ifp_id, u, fill="uniform"):
                per_day[s.day].append(s.brier)
        for day, vals in per_day.items():
            if vals:
                table[(ifp_id, day)] = float(np.median(vals))
    return table


@dataclass
class ScoreReport:
    """Daily scores plus the derived per-source and standardized views."""

    daily: pd.DataFrame  # columns: ifp_id, source, day, brier

    @classmethod
    def build(cls, log: TournamentLog, sources=None,
              fill: str = "uniform") -> "ScoreReport":
        if sources is None:
            sources = log.sources()
        rows = []
        for ifp_id, ifp in log.ifps.items():
            if ifp.resolved_option is None:
                continue
            for src in sources:
                rows.extend(score_ifp_daily(log, ifp_id, src, fill=fill))
        return cls(daily=daily_frame(rows))

    def mdb_table(self) -> pd.DataFrame:
        """Mean daily Brier per (source, ifp)."""
        return (self.daily.groupby(["source", "ifp_id"], as_index=False)
                ["brier"].mean().rename(columns={"brier": "mdb"}))

    def mmdb_table(self) -> pd.DataFrame:
        """Mean of MDBs per source."""
        m = self.mdb_table()
        return (m.groupby("source", as_index=False)["mdb"].mean()
                .rename(columns={"mdb": "mmdb"}))

    def standardized(self, level: str = "ifp_day") -> pd.DataFrame:
        return standardize(self.daily, level=level)

    def summary(self, baseline: Optional[str] = None) -> dict:
        """Mean/sd/quartiles of per-source MDBs, optionally with Cohen's d
        of every source against the named baseline source."""
        m = self.mdb_table()
        out = {
            "n_ifps": int(self.daily["ifp_id"].nunique()),
            "n_sources": int(self.daily["source"].nunique()),
            "mdb_mean": float(m["mdb"].mean()),
            "mdb_sd": float(m["mdb"].std(ddof=1)) if len(m) > 1 else 0.0,
            "mdb_q25": float(m["mdb"].quantile(0.25)),
            "mdb_median": float(m["mdb"].median()),
            "mdb_q75": float(m["mdb"].quantile(0.75)),
        }
        if baseline is not None:
            base = m.loc[m["source"] == baseline, "mdb"].to_numpy()
            d = {}
            for src, grp in m.groupby("source"):
                if src == baseline:
                    continue
                try:
                    d[src] = cohens_d(grp["mdb"].to_numpy(), base)
                except ValidationError:
                    d[src] = float("nan")
            out["cohens_d_vs_" + baseline] = d
        return out
