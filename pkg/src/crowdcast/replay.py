"""Batch replay helpers over a tournament log.

Everything here recomputes slot aggregates and scores for whole questions at
a time (vectorized across days) so that censoring sweeps and policy replays
stay fast. Skill can be supplied either as a static record dict or as a
`SkillTimeline` that changes at resolution batches.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import pandas as pd

from .aggregation import (AggregationConfig, aggregate_ifp_daily,
                          machine_standing_daily, standing_matrix)
from .core import Ifp, Source, TournamentLog, uniform_forecast
from .scoring import brier_rows


def per_user_ifp_z(log: TournamentLog) -> dict:
    """Per-question standardized-score summaries for every human forecaster.

    For each resolved question, daily Briers of each participant's standing
    forecast (from their first forecast onward) are z-scored across
    participants per day; returns ifp_id -> (user_ids, z_sum, z_count)
    where z_sum/z_count aggregate each user's z over the question's days.
    """
    out = {}
    for ifp_id, ifp in log.ifps.items():
        if ifp.resolved_option is None:
            continue
        humans = [f for f in log.forecasts_for(ifp_id)
                  if f.source.kind == "human"]
        if not humans:
            continue
        sources, key, probs = standing_matrix(ifp, humans)
        present = key >= 0
        briers = np.full(present.shape, np.nan)
        for i in range(len(sources)):
            mask = present[i]
            if mask.any():
                briers[i, mask] = brier_rows(probs[i, mask],
                                             ifp.resolved_option, ifp.kind)
        n = present.sum(axis=0)
        mean = np.full(n.shape, np.nan)
        sd = np.full(n.shape, np.nan)
        any_cols = n > 0
        if any_cols.any():
            mean[any_cols] = np.nanmean(briers[:, any_cols], axis=0)
        cols = n > 1
        if cols.any():
            sd[cols] = np.nanstd(briers[:, cols], axis=0, ddof=1)
        z = np.zeros_like(briers)
        ok = present & (sd[None, :] > 0)
        z[ok] = ((briers - mean[None, :])[ok]
                 / np.broadcast_to(sd[None, :], briers.shape)[ok])
        z[~present] = 0.0
        out[ifp_id] = ([s.id for s in sources],
                       z.sum(axis=1, where=present),
                       present.sum(axis=1))
    return out


class SkillTimeline:
    """Per-user mean standardized Brier as of any day.

    Records update on resolution batches: a question's scores enter the
    running mean the day after it resolves.
    """

    def __init__(self, log: TournamentLog,
                 z_summaries: Optional[dict] = None):
        if z_summaries is None:
            z_summaries = per_user_ifp_z(log)
        batches: dict = {}
        for ifp_id, ifp in log.ifps.items():
            if ifp.resolved_option is None or ifp_id not in z_summaries:
                continue
            batches.setdefault(ifp.close_date + 1, []).append(ifp_id)
        self._days = sorted(batches)
        self._epochs = []
        z_sum: dict = {}
        z_cnt: dict = {}
        for day in self._days:
            for ifp_id in batches[day]:
                users, zs, cnts = z_summaries[ifp_id]
                for u, s, c in zip(users, zs, cnts):
                    z_sum[u] = z_sum.get(u, 0.0) + float(s)
                    z_cnt[u] = z_cnt.get(u, 0) + int(c)
            self._epochs.append({u: z_sum[u] / z_cnt[u]
                                 for u in z_sum if z_cnt[u] > 0})
        # dense (user, epoch) matrix for vectorized lookups; column 0 covers
        # days before the first resolution batch
        self._user_row = {u: i for i, u in enumerate(sorted(z_sum))}
        self._z = np.zeros((len(self._user_row), len(self._days) + 1))
        for e, epoch in enumerate(self._epochs):
            for u, z in epoch.items():
                self._z[self._user_row[u], e + 1] = z

    def mean_z(self, user_id: str, day: int) -> float:
        i = bisect_right(self._days, day) - 1
        if i < 0:
            return 0.0
        return self._epochs[i].get(user_id, 0.0)

    def base_matrix(self, sources, days) -> np.ndarray:
        """(S, D) matrix of exp(-mean_z) skill base scores."""
        cols = np.searchsorted(self._days, np.asarray(list(days)),
                               side="right")
        z = np.zeros((len(sources), cols.size))
        for i, s in enumerate(sources):
            row = self._user_row.get(s.id)
            if row is not None:
                z[i] = self._z[row, cols]
        return np.exp(-z)

    def records_at(self, day: int) -> dict:
        """Static snapshot usable by the per-day aggregation pipeline."""
        from .aggregation import SkillRecord
        i = bisect_right(self._days, day) - 1
        if i < 0:
            return {}
        return {u: SkillRecord(user_id=u, mean_z=z)
                for u, z in self._epochs[i].items()}


def slot_daily_matrix(log: TournamentLog, ifp: Ifp,
                      config: AggregationConfig, season,
                      skill=None, with_machine: bool = True,
                      keep_user: Optional[Callable] = None) -> np.ndarray:
    """(D, C) slot aggregate for one question, NaN rows where undefined.

    `skill` may be a SkillTimeline, a static record dict, or None (cold
    start); `keep_user` censors human forecasts by user id.
    """
    forecasts = log.forecasts_for(ifp.id)
    humans = [f for f in forecasts if f.source.kind == "human"
              and (keep_user is None or keep_user(f.source.id))]
    machine_daily = None
    if with_machine:
        machines = [f for f in forecasts if f.source.kind == "machine"]
        if machines:
            machine_daily = machine_standing_daily(ifp, machines)
    if isinstance(skill, SkillTimeline):
        sources = sorted({f.source for f in humans})
        base = skill.base_matrix(sources, ifp.active_days)
        return aggregate_ifp_daily(ifp, humans, config, {}, season,
                                   machine_daily=machine_daily,
                                   skill_base=base)
    return aggregate_ifp_daily(ifp, humans, config, skill or {}, season,
                               machine_daily=machine_daily)


def uniform_brier(ifp: Ifp) -> float:
    return float(brier_rows(uniform_forecast(ifp.n_options)[None, :],
                            ifp.resolved_option, ifp.kind)[0])


def ifp_daily_briers(ifp: Ifp, daily_probs: np.ndarray) -> np.ndarray:
    """Daily Briers of an aggregate matrix; undefined days score uniform."""
    briers = brier_rows(np.where(np.isnan(daily_probs),
                                 1.0 / ifp.n_options, daily_probs),
                        ifp.resolved_option, ifp.kind)
    missing = np.isnan(daily_probs[:, 0])
    briers[missing] = uniform_brier(ifp)
    return briers


def slot_mdb(log: TournamentLog, ifp: Ifp, config: AggregationConfig,
             season, **kw) -> float:
    probs = slot_daily_matrix(log, ifp, config, season, **kw)
    return float(ifp_daily_briers(ifp, probs).mean())


def mean_slot_brier(log: TournamentLog, config: AggregationConfig,
                    season=None, **kw) -> float:
    """Mean over resolved questions of the slot's MDB."""
    if season is None:
        season = log.calendar
    mdbs = [slot_mdb(log, ifp, config, season, **kw)
            for ifp in log.ifps.values() if ifp.resolved_option is not None]
    if not mdbs:
        raise ValueError("no resolved IFPs to score")
    return float(np.mean(mdbs))


def slot_score_frame(log: TournamentLog, config: AggregationConfig,
                     season=None, slot_name: Optional[str] = None,
                     **kw) -> pd.DataFrame:
    """Daily-score frame (ifp_id, source, day, brier) for one slot config."""
    if season is None:
        season = log.calendar
    name = slot_name or config.name
    rows = []
    for ifp in log.ifps.values():
        if ifp.resolved_option is None:
            continue
        probs = slot_daily_matrix(log, ifp, config, season, **kw)
        briers = ifp_daily_briers(ifp, probs)
        for day, b in zip(ifp.active_days, briers):
            rows.append((ifp.id, str(Source.slot(name)), day, float(b)))
    return pd.DataFrame(rows, columns=["ifp_id", "source", "day", "brier"])
