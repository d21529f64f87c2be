"""Synthetic tournament generation and scaling experiments.

Worlds are built from seeded AR(1) series: each question bins the realized
series value at close into its options. Synthetic forecasters hold a noisy,
blunted view of the exact conditional outcome distribution and optionally
anchor toward the displayed machine forecast. Replays reuse the vectorized
aggregation path, so censoring sweeps over many repetitions stay cheap.

Every random draw comes from a dedicated substream keyed by (seed, domain,
entity), so censoring or reordering one entity never perturbs another and
results are identical at any parallelism degree.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
import pandas as pd
from scipy.special import ndtr
from scipy.stats import linregress

from . import tsmodels
from .aggregation import AggregationConfig, machine_standing_daily
from .core import (BINARY, Forecast, Ifp, NOMINAL, ORDINAL, Source,
                   TournamentLog, ValidationError, validate_forecast)
from .replay import (SkillTimeline, ifp_daily_briers, mean_slot_brier,
                     slot_daily_matrix, slot_score_frame)
from .scoring import ScoreReport, cohens_d

# substream domains
_DOM_IFP = 1
_DOM_USER = 2
_DOM_SPARSITY = 3
_DOM_POLICY = 4

MACHINE_ID = "phe2"


@dataclass
class SimConfig:
    seed: int = 0
    n_ifps: int = 60
    n_forecasters: int = 100
    season_days: int = 240
    duration_mean: float = 87.0
    duration_sd: float = 55.85
    duration_min: int = 14
    # question-type mix: binary / ordinal / nominal
    kind_probs: tuple = (0.51, 0.39, 0.10)
    weekly_activity: float = 5.0
    skill_min: float = 0.2
    skill_max: float = 0.9
    noise_sd: float = 1.5
    herd_noise_sd: float = 0.4  # correlated log-odds shock shared per ifp-day
    info_lag_days: int = 5  # forecasters see the underlying series stale
    anchor_to_machine: float = 0.3
    history_days: int = 120
    series_phi_range: tuple = (0.4, 0.95)
    series_sigma_range: tuple = (0.5, 2.0)
    series_drift_scale: float = 0.02
    machine_model: Optional[str] = MACHINE_ID  # None disables machine forecasts
    machine_refit_days: int = 21  # parameter re-estimation cadence
    machine_forecast_days: int = 1  # forecast (state-refresh) cadence

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        for key in ("kind_probs", "series_phi_range", "series_sigma_range"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class IfpTruth:
    """Generating-process parameters the simulator knows about a question."""

    phi: float
    sigma: float
    drift: float
    thresholds: tuple  # includes hidden thresholds for nominal questions


@dataclass
class World:
    config: SimConfig
    ifps: dict            # ifp_id -> Ifp (resolved)
    series: dict          # series_id -> Series through close_date
    truths: dict          # ifp_id -> IfpTruth
    shocks: dict          # ifp_id -> (duration, C) herd log-odds shocks

    @property
    def season(self):
        return (0, self.config.season_days - 1)

    def series_value(self, ifp: Ifp, day: int) -> float:
        """Observed series value on `day` (clamped to the recorded span)."""
        sid = ifp.series_ref or f"series-{int(ifp.id.split('-')[1]):04d}"
        ser = self.series[sid]
        idx = min(max(day - ser.days[0], 0), len(ser) - 1)
        return float(ser.values[idx])


@dataclass
class SimResult:
    world: World
    log: TournamentLog            # human + machine + slot forecasts
    skill: SkillTimeline
    reports: dict                 # slot name -> ScoreReport

    @property
    def config(self) -> SimConfig:
        return self.world.config

    @property
    def season(self):
        return self.world.season


def _rng(seed: int, domain: int, entity: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, domain, entity]))


def _draw_duration(cfg: SimConfig, rng) -> int:
    while True:
        d = rng.normal(cfg.duration_mean, cfg.duration_sd)
        if d >= cfg.duration_min:
            return int(min(round(d), cfg.season_days))


def _simulate_ar1(rng, n: int, phi: float, sigma: float,
                  drift: float) -> np.ndarray:
    x = np.empty(n)
    stationary_mean = drift / (1.0 - phi) if phi < 1 else 0.0
    stationary_sd = sigma / np.sqrt(max(1.0 - phi * phi, 1e-6))
    x[0] = stationary_mean + stationary_sd * rng.normal()
    eps = rng.normal(size=n - 1)
    for t in range(1, n):
        x[t] = drift + phi * x[t - 1] + sigma * eps[t - 1]
    return x


def conditional_distribution(truth: IfpTruth, current_value: float,
                             h: int) -> tuple:
    """Exact (mean, variance) of the series h steps ahead under the truth."""
    phi, sigma, drift = truth.phi, truth.sigma, truth.drift
    if h <= 0:
        return float(current_value), 1e-12
    phih = phi ** h
    mean = phih * current_value + drift * (1.0 - phih) / (1.0 - phi)
    var = sigma * sigma * (1.0 - phi ** (2 * h)) / (1.0 - phi * phi)
    return float(mean), float(max(var, 1e-12))


def true_option_probs(truth: IfpTruth, ifp: Ifp, current_value: float,
                      day: int) -> np.ndarray:
    mean, var = conditional_distribution(truth, current_value,
                                         ifp.close_date - day)
    cdf = ndtr((np.asarray(truth.thresholds) - mean) / np.sqrt(var))
    probs = np.diff(np.concatenate(([0.0], cdf, [1.0])))
    probs = np.clip(probs, 1e-9, 1.0)
    return probs / probs.sum()


def gen_world(config: SimConfig) -> World:
    """Seeded world: series, questions with thresholds at history quantiles,
    and resolutions from the realized series value at close."""
    ifps, series, truths, shocks = {}, {}, {}, {}
    kinds = (BINARY, ORDINAL, NOMINAL)
    for i in range(config.n_ifps):
        rng = _rng(config.seed, _DOM_IFP, i)
        kind = kinds[rng.choice(3, p=list(config.kind_probs))]
        c = 2 if kind == BINARY else int(rng.integers(3, 6))
        duration = _draw_duration(config, rng)
        open_day = int(rng.integers(0, max(config.season_days - duration, 0) + 1))
        close_day = min(open_day + duration - 1, config.season_days - 1)

        phi = rng.uniform(*config.series_phi_range)
        sigma = rng.uniform(*config.series_sigma_range)
        drift = config.series_drift_scale * sigma * rng.uniform(-1.0, 1.0)
        n = config.history_days + close_day + 1
        values = _simulate_ar1(rng, n, phi, sigma, drift)
        days = tuple(range(-config.history_days, close_day + 1))
        sid = f"series-{i:04d}"
        ser = tsmodels.Series(sid, days, tuple(values))
        history = values[:config.history_days]
        qs = np.quantile(history, [(k + 1) / c for k in range(c - 1)])
        # degenerate histories can collapse quantiles; spread minimally
        for j in range(1, qs.size):
            if qs[j] <= qs[j - 1]:
                qs[j] = qs[j - 1] + 1e-9 * (1.0 + abs(qs[j - 1]))
        thresholds = tuple(float(v) for v in qs)
        realized = values[-1]
        resolved = int(np.searchsorted(qs, realized, side="left"))

        ifp = Ifp(
            id=f"ifp-{i:04d}", title=f"simulated question {i}",
            options=tuple(f"opt{k}" for k in range(c)), kind=kind,
            open_date=open_day, close_date=close_day,
            resolved_option=resolved,
            series_ref=None if kind == NOMINAL else sid,
            thresholds=None if kind == NOMINAL else thresholds)
        ifps[ifp.id] = ifp
        series[sid] = ser
        truths[ifp.id] = IfpTruth(phi=phi, sigma=sigma, drift=drift,
                                  thresholds=thresholds)
        # correlated "narrative" shock shared by every forecaster on a day;
        # slowly mixing so consecutive days see similar stories
        dur = close_day - open_day + 1
        shock = np.empty((dur, c))
        shock[0] = rng.normal(size=c)
        rho = 0.85
        innov = np.sqrt(1.0 - rho * rho)
        for t in range(1, dur):
            shock[t] = rho * shock[t - 1] + innov * rng.normal(size=c)
        shocks[ifp.id] = config.herd_noise_sd * shock
    return World(config=config, ifps=ifps, series=series, truths=truths,
                 shocks=shocks)


_MODEL_FITTERS = {
    "phe2": (tsmodels.auto_arima, tsmodels.fit_ets),
    "arima": (tsmodels.auto_arima,),
    "ets": (tsmodels.fit_ets,),
    "random_walk": (tsmodels.fit_random_walk,),
}


def _machine_forecasts_for_ifp(world: World, ifp: Ifp) -> list:
    """Daily machine forecasts for one question.

    Model parameters are re-estimated every `machine_refit_days`; between
    refits the fitted models are re-anchored to each day's observations so
    the forecast always conditions on the latest series value.
    """
    cfg = world.config
    if cfg.machine_model is None or ifp.series_ref is None:
        return []
    if cfg.machine_model not in _MODEL_FITTERS:
        raise ValidationError(f"unknown machine model {cfg.machine_model!r}")
    fitters = _MODEL_FITTERS[cfg.machine_model]
    full = world.series[ifp.series_ref]
    src = Source.machine(cfg.machine_model)
    refit = max(cfg.machine_refit_days, 1)
    every = max(cfg.machine_forecast_days, 1)
    models = []
    out = []
    for j, day in enumerate(ifp.active_days):
        if j % every and day != ifp.close_date:
            continue
        ser = full.truncated(day)
        if len(ser) < 12:
            continue
        if j % refit < every or not models:
            models = []
            for fitter in fitters:
                try:
                    models.append(fitter(ser))
                except tsmodels.FitError:
                    pass
            if not models:
                try:
                    models = [tsmodels.fit_random_walk(ser)]
                except tsmodels.FitError:
                    continue
        else:
            try:
                models = [tsmodels.refresh_state(m, ser) for m in models]
            except tsmodels.FitError:
                continue
        h = max(1, int(np.ceil((ifp.close_date - ser.days[-1]) / ser.step)))
        components = []
        for m in models:
            try:
                dist = m.predictive(h, ifp.horizon_kind)
                components.append(tsmodels.to_option_probs(dist, ifp))
            except ValidationError:
                continue
        if not components:
            continue
        probs = np.mean(components, axis=0)
        out.append(Forecast(ifp.id, src, tuple(probs / probs.sum()),
                            day, seq=0))
    return out


def gen_machine_forecasts(world: World, workers: int = 1) -> list:
    """Machine forecasts for every series question; order-independent."""
    ifps = sorted(world.ifps.values(), key=lambda i: i.id)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(
                lambda ifp: _machine_forecasts_for_ifp(world, ifp), ifps))
    else:
        chunks = [_machine_forecasts_for_ifp(world, ifp) for ifp in ifps]
    return [f for chunk in chunks for f in chunk]


def gen_human_forecast(world: World, ifp: Ifp, day: int, user_idx: int,
                       skill: float, noise_sd: float, cal: float,
                       anchor: float, machine_probs, rng) -> Forecast:
    """One synthetic human forecast.

    Forecasters see the series `info_lag_days` stale and do not know the
    generating process: their subjective mean interpolates between naive
    persistence (the stale value) and the exact conditional mean by `skill`,
    their subjective variance is the true conditional variance times the
    miscalibration factor `cal`. The binned distribution is perturbed in
    log-odds space and blended toward the displayed machine forecast by
    `anchor`.
    """
    truth = world.truths[ifp.id]
    as_of = day - world.config.info_lag_days
    value = world.series_value(ifp, as_of)
    true_mean, true_var = conditional_distribution(truth, value,
                                                   ifp.close_date - as_of)
    mean_u = skill * true_mean + (1.0 - skill) * value
    sd_u = np.sqrt(true_var * cal)
    cdf = ndtr((np.asarray(truth.thresholds) - mean_u) / sd_u)
    probs = np.diff(np.concatenate(([0.0], cdf, [1.0])))
    probs = np.clip(probs, 1e-9, 1.0)
    logits = (np.log(probs) + noise_sd * rng.normal(size=probs.size)
              + world.shocks[ifp.id][day - ifp.open_date])
    logits -= logits.max()
    p = np.exp(logits)
    p /= p.sum()
    if machine_probs is not None and anchor > 0.0:
        p = (1.0 - anchor) * p + anchor * np.asarray(machine_probs)
        if anchor >= 1.0:
            p = np.asarray(machine_probs, dtype=float).copy()
    p = validate_forecast(p, ifp.n_options)
    return Forecast(ifp.id, Source.human(f"user-{user_idx:04d}"),
                    tuple(p), day, seq=user_idx)


def gen_human_forecasts(world: World, machine_daily: dict) -> list:
    """All human forecasts for a world; one RNG substream per forecaster."""
    cfg = world.config
    ifps = sorted(world.ifps.values(), key=lambda i: i.id)
    out = []
    n_weeks = (cfg.season_days + 6) // 7
    for u in range(cfg.n_forecasters):
        rng = _rng(cfg.seed, _DOM_USER, u)
        skill = rng.uniform(cfg.skill_min, cfg.skill_max)
        noise_sd = cfg.noise_sd * rng.uniform(0.5, 1.5)
        cal = float(np.exp(rng.normal(0.0, 0.4)))  # variance miscalibration
        for week in range(n_weeks):
            n = rng.poisson(cfg.weekly_activity)
            for _ in range(n):
                day = int(week * 7 + rng.integers(0, 7))
                if day >= cfg.season_days:
                    continue
                open_ifps = [i for i in ifps if i.is_active(day)]
                if not open_ifps:
                    continue
                ifp = open_ifps[rng.integers(0, len(open_ifps))]
                md = machine_daily.get(ifp.id)
                mp = None
                if md is not None:
                    row = md[day - ifp.open_date]
                    if not np.isnan(row[0]):
                        mp = row
                out.append(gen_human_forecast(
                    world, ifp, day, u, skill, noise_sd, cal,
                    cfg.anchor_to_machine, mp, rng))
    return out


def run_tournament(config: SimConfig, slots=None,
                   workers: int = 1) -> SimResult:
    """Full replay: world, machine + human forecasts, slot aggregates, scores.

    Slots default to a hybrid slot (machine combined in) and a human-only
    slot (machine weight zero) at the standard pipeline settings.
    """
    if slots is None:
        slots = default_slots()
    world = gen_world(config)
    machine_fcs = gen_machine_forecasts(world, workers=workers)
    machine_daily = {}
    base_log_ifps = list(world.ifps.values())
    for ifp in base_log_ifps:
        fcs = [f for f in machine_fcs if f.ifp_id == ifp.id]
        if fcs:
            machine_daily[ifp.id] = machine_standing_daily(ifp, fcs)
    human_fcs = gen_human_forecasts(world, machine_daily)
    log = TournamentLog(base_log_ifps, human_fcs + machine_fcs)
    skill = SkillTimeline(log)

    season = world.season
    slot_fcs = []
    reports = {}
    for slot in slots:
        frames = []
        for ifp in base_log_ifps:
            probs = slot_daily_matrix(log, ifp, slot, season, skill=skill)
            briers = ifp_daily_briers(ifp, probs)
            src = Source.slot(slot.name)
            for j, day in enumerate(ifp.active_days):
                if not np.isnan(probs[j, 0]):
                    slot_fcs.append(Forecast(ifp.id, src,
                                             tuple(probs[j]), day, seq=0))
            frames.append(pd.DataFrame(
                {"ifp_id": ifp.id, "source": str(src),
                 "day": list(ifp.active_days), "brier": briers}))
        reports[slot.name] = ScoreReport(
            daily=pd.concat(frames, ignore_index=True))
    full_log = TournamentLog(base_log_ifps,
                             list(log.forecasts) + slot_fcs, validate=False)
    return SimResult(world=world, log=full_log, skill=skill, reports=reports)


def default_slots():
    hybrid = AggregationConfig(name="hybrid")
    human_only = AggregationConfig(name="human_only",
                                   machine_weight_timeseries=0.0,
                                   machine_weight_other=0.0)
    return [hybrid, human_only]


def sparsity_experiment(result: SimResult, levels, reps: int = 20,
                        with_machine: bool = True,
                        config: Optional[AggregationConfig] = None) -> dict:
    """Delete random user subsets, re-aggregate, and regress Brier on sparsity.

    Deletions are nested within a repetition (one permutation per rep), so
    with- and without-machine arms see identical censored pools. Returns the
    OLS slope/intercept with a 95% CI and the raw points.
    """
    levels = [float(l) for l in levels]
    if any(not 0.0 <= l < 1.0 for l in levels):
        raise ValidationError("sparsity levels must lie in [0, 1)")
    cfg = config or AggregationConfig(name="hybrid")
    users = sorted({f.source.id for f in result.log.forecasts
                    if f.source.kind == "human"})
    n = len(users)
    season = result.season
    rows = []
    for rep in range(reps):
        rng = _rng(result.config.seed, _DOM_SPARSITY, rep)
        perm = [users[i] for i in rng.permutation(n)]
        for level in levels:
            removed = set(perm[:int(np.ceil(level * n))]) if level > 0 else set()
            keep = None if not removed else (lambda uid, r=removed: uid not in r)
            brier = mean_slot_brier(result.log, cfg, season,
                                    skill=result.skill,
                                    with_machine=with_machine,
                                    keep_user=keep)
            rows.append((rep, level, brier))
    points = pd.DataFrame(rows, columns=["rep", "sparsity", "brier"])
    fit = linregress(points["sparsity"], points["brier"])
    half = 1.96 * fit.stderr
    return {
        "with_machine": with_machine,
        "slope": float(fit.slope),
        "intercept": float(fit.intercept),
        "slope_ci95": (float(fit.slope - half), float(fit.slope + half)),
        "points": points,
    }


def backcast_compare(pools: dict, slot_configs, season=None) -> pd.DataFrame:
    """Cross-apply every slot config to every forecast pool.

    `pools` maps pool name -> TournamentLog. Returns one row per
    (pool, slot) with the mean MDB, plus the per-slot delta and Cohen's d of
    per-question MDBs against the first pool.
    """
    if len(pools) < 1 or not slot_configs:
        raise ValidationError("need at least one pool and one slot config")
    names = list(pools)
    rows = []
    per_ifp = {}
    for pname, log in pools.items():
        seas = season or log.calendar
        skill = SkillTimeline(log)
        for cfg in slot_configs:
            mdbs = {}
            for ifp in log.ifps.values():
                if ifp.resolved_option is None:
                    continue
                probs = slot_daily_matrix(log, ifp, cfg, seas, skill=skill)
                mdbs[ifp.id] = float(ifp_daily_briers(ifp, probs).mean())
            per_ifp[(pname, cfg.name)] = mdbs
            rows.append({"pool": pname, "slot": cfg.name,
                         "mean_brier": float(np.mean(list(mdbs.values())))})
    frame = pd.DataFrame(rows)
    base = names[0]
    deltas, ds = [], []
    for _, row in frame.iterrows():
        ref = per_ifp[(base, row["slot"])]
        cur = per_ifp[(row["pool"], row["slot"])]
        shared = sorted(set(ref) & set(cur))
        a = np.array([cur[i] for i in shared])
        b = np.array([ref[i] for i in shared])
        deltas.append(float(a.mean() - b.mean()) if shared else np.nan)
        if row["pool"] == base or not shared:
            ds.append(0.0 if row["pool"] == base else np.nan)
        else:
            try:
                ds.append(cohens_d(a, b))
            except ValidationError:
                ds.append(np.nan)
    frame["delta_vs_" + base] = deltas
    frame["cohens_d_vs_" + base] = ds
    return frame
