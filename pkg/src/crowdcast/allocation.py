"""Question ordering and forecast-budget policies.

Policies replay a tournament log with part of the human effort removed and
report the accuracy/budget tradeoff: `greedy_ifp` permanently excludes the
worst-scoring forecasters at each resolution batch, `greedy_ifp_pp`
additionally caps forecasts on questions whose aggregate has reached a
stable consensus, and `random` keeps each forecast with fixed probability.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from .aggregation import AggregationConfig
from .core import Ifp, TournamentLog, ValidationError
from .replay import (SkillTimeline, mean_slot_brier, per_user_ifp_z,
                     slot_daily_matrix)

ALL = "all"
RANDOM = "random"
GREEDY_IFP = "greedy_ifp"
GREEDY_IFP_PP = "greedy_ifp_pp"


@dataclass(frozen=True)
class ConsensusRule:
    """An aggregate is consensus when its top option stays confidently put."""

    threshold: float = 0.65   # tau: minimum top-option probability
    window: int = 3           # w: consecutive days required
    max_drift: float = 0.15   # delta: maximum daily probability drift
    min_forecasters: int = 5  # m: distinct contributors required

    def __post_init__(self):
        if not 0.5 < self.threshold <= 1.0:
            raise ValidationError("consensus threshold must be in (0.5, 1]")
        if self.window < 1 or self.min_forecasters < 1:
            raise ValidationError("window and min_forecasters must be >= 1")
        if self.max_drift < 0:
            raise ValidationError("max_drift must be non-negative")


@dataclass(frozen=True)
class AllocationPolicy:
    kind: str = ALL
    exclude_frac: float = 0.1   # greedy: fraction dropped per batch
    cap: int = 10               # greedy++: forecasts allowed after consensus
    p_keep: float = 0.62        # random: per-forecast keep probability
    seed: int = 0
    consensus: ConsensusRule = field(default_factory=ConsensusRule)

    def __post_init__(self):
        if self.kind not in (ALL, RANDOM, GREEDY_IFP, GREEDY_IFP_PP):
            raise ValidationError(f"unknown policy kind {self.kind!r}")
        if self.kind in (GREEDY_IFP, GREEDY_IFP_PP):
            if not 0.0 <= self.exclude_frac < 1.0:
                raise ValidationError("exclude_frac must be in [0, 1)")
        if self.kind == GREEDY_IFP_PP:
            if self.cap < self.consensus.min_forecasters:
                raise ValidationError("cap must be >= min_forecasters")
        if self.kind == RANDOM and not 0.0 < self.p_keep <= 1.0:
            raise ValidationError("p_keep must be in (0, 1]")

    @property
    def name(self) -> str:
        if self.kind == RANDOM:
            return f"random({self.p_keep:g})"
        if self.kind == GREEDY_IFP:
            return f"greedy_ifp({self.exclude_frac:g})"
        if self.kind == GREEDY_IFP_PP:
            return f"greedy_ifp_pp({self.exclude_frac:g},{self.cap})"
        return ALL


@dataclass
class BudgetReport:
    policy: str
    brier: float
    budget: float      # kept human forecasts as % of all human forecasts
    kept: int
    total: int

    def __post_init__(self):
        if not 0.0 < self.budget <= 100.0:
            raise ValidationError("budget must be in (0, 100]")


def swift_order(ifps, popularity: Optional[dict] = None) -> list:
    """Global question ordering: earliest resolution first, then least
    forecast so far, stable by id.

    `popularity` maps ifp_id -> forecast count (missing counts as 0).
    """
    popularity = popularity or {}
    return sorted(ifps, key=lambda i: (i.close_date,
                                       popularity.get(i.id, 0), i.id))


def consensus_reached(ifp: Ifp, day: int, history: np.ndarray,
                      n_distinct: int, rule: ConsensusRule) -> bool:
    """True when the daily aggregate has been a stable consensus through `day`.

    `history` is the (D, C) daily aggregate matrix aligned to
    ifp.active_days; NaN rows (days without an aggregate) never qualify.
    """
    j = day - ifp.open_date
    if j < 0 or j >= history.shape[0]:
        return False
    if n_distinct < rule.min_forecasters:
        return False
    lo = j - rule.window + 1
    if lo < 0:
        return False
    win = history[lo:j + 1]
    if np.isnan(win).any():
        return False
    if win.max(axis=1).min() < rule.threshold:
        return False
    if rule.window > 1:
        drift = np.abs(np.diff(win, axis=0)).max()
        if drift > rule.max_drift:
            return False
    return True


def _resolution_batches(log: TournamentLog) -> dict:
    """Batch day -> ifp ids; scores enter the day after a question closes."""
    batches: dict = {}
    for ifp in log.ifps.values():
        if ifp.resolved_option is not None:
            batches.setdefault(ifp.close_date + 1, []).append(ifp.id)
    return batches


def _greedy_exclusions(log: TournamentLog, exclude_frac: float) -> dict:
    """user_id -> day from which the user's forecasts are dropped.

    At each resolution batch the per-user mean standardized Brier over every
    question resolved so far is recomputed and the worst `exclude_frac` of
    the still-active scored users are permanently excluded.
    """
    z = per_user_ifp_z(log)
    batches = _resolution_batches(log)
    z_sum: dict = {}
    z_cnt: dict = {}
    excluded: dict = {}
    for day in sorted(batches):
        for ifp_id in batches[day]:
            if ifp_id not in z:
                continue
            users, zs, cnts = z[ifp_id]
            for u, s, c in zip(users, zs, cnts):
                z_sum[u] = z_sum.get(u, 0.0) + float(s)
                z_cnt[u] = z_cnt.get(u, 0) + int(c)
        active = [u for u in z_sum if u not in excluded and z_cnt[u] > 0]
        k = int(exclude_frac * len(active))
        if k <= 0:
            continue
        # worst = highest mean standardized Brier; ties resolved by id
        active.sort(key=lambda u: (-z_sum[u] / z_cnt[u], u))
        for u in active[:k]:
            excluded[u] = day
    return excluded


def _consensus_caps(log: TournamentLog, policy: AllocationPolicy,
                    config: AggregationConfig, season) -> set:
    """Forecasts dropped by the post-consensus cap (as object ids).

    Consensus is evaluated on the human-only daily aggregate of `log`; once
    reached, at most `cap` further forecasts are accepted on that question.
    """
    drop = set()
    for ifp in log.ifps.values():
        humans = [f for f in log.forecasts_for(ifp.id)
                  if f.source.kind == "human"]
        if len(humans) <= policy.cap:
            continue
        history = slot_daily_matrix(log, ifp, config, season,
                                    with_machine=False)
        seen: set = set()
        distinct_by_day = np.zeros(len(ifp.active_days), dtype=int)
        j = 0
        days = list(ifp.active_days)
        for f in humans:
            while days[j] < f.day:
                distinct_by_day[j + 1] = distinct_by_day[j]
                j += 1
            seen.add(f.source.id)
            distinct_by_day[j] = len(seen)
        distinct_by_day[j:] = distinct_by_day[j]
        consensus_day = None
        for day in days:
            if consensus_reached(ifp, day, history,
                                 int(distinct_by_day[day - ifp.open_date]),
                                 policy.consensus):
                consensus_day = day
                break
        if consensus_day is None:
            continue
        allowance = policy.cap
        for f in humans:
            if f.day <= consensus_day:
                continue
            if allowance > 0:
                allowance -= 1
            else:
                drop.add(id(f))
    return drop


def apply_policy(log: TournamentLog, policy: AllocationPolicy,
                 config: Optional[AggregationConfig] = None,
                 season=None, with_machine: bool = False):
    """Replay `log` under an allocation policy.

    Returns (censored_log, BudgetReport). Only human forecasts are censored
    and counted toward the budget; machine forecasts pass through. The
    reported Brier is the mean over resolved questions of the slot MDB on
    the censored log (human-only by default).
    """
    if not log.forecasts:
        raise ValidationError("cannot apply a policy to an empty log")
    config = config or AggregationConfig(name="allocation")
    if season is None:
        season = log.calendar
    humans = [f for f in log.forecasts if f.source.kind == "human"]
    total = len(humans)
    if total == 0:
        raise ValidationError("no human forecasts to allocate")

    if policy.kind == ALL:
        kept = set(map(id, humans))
    elif policy.kind == RANDOM:
        rng = np.random.default_rng(np.random.SeedSequence([policy.seed]))
        mask = rng.random(total) < policy.p_keep
        kept = {id(f) for f, m in zip(humans, mask) if m}
    else:
        exclusions = _greedy_exclusions(log, policy.exclude_frac)
        kept = {id(f) for f in humans
                if f.source.id not in exclusions
                or f.day < exclusions[f.source.id]}
        if policy.kind == GREEDY_IFP_PP:
            interim = log.filter(
                lambda f: f.source.kind != "human" or id(f) in kept)
            for fid in _consensus_caps(interim, policy, config, season):
                kept.discard(fid)

    censored = log.filter(
        lambda f: f.source.kind != "human" or id(f) in kept)
    n_kept = sum(1 for f in humans if id(f) in kept)
    skill = SkillTimeline(censored)
    brier = mean_slot_brier(censored, config, season, skill=skill,
                            with_machine=with_machine)
    report = BudgetReport(policy=policy.name, brier=float(brier),
                          budget=100.0 * n_kept / total,
                          kept=n_kept, total=total)
    return censored, report


def evaluate_policies(log: TournamentLog, policies,
                      config: Optional[AggregationConfig] = None,
                      season=None, with_machine: bool = False) -> pd.DataFrame:
    """BudgetReport table for several policies on the same log."""
    rows = []
    for policy in policies:
        _, rep = apply_policy(log, policy, config, season,
                              with_machine=with_machine)
        rows.append({"policy": rep.policy, "brier": rep.brier,
                     "budget": rep.budget, "kept": rep.kept,
                     "total": rep.total})
    return pd.DataFrame(rows)
