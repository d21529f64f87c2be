"""Domain types and forecast-stream mechanics shared by every other module.

A question (Question/`Ifp`) carries 2..5 mutually exclusive options; a
forecast is a probability vector over those options tagged with a source and
a (day, seq) timestamp. Days are plain integers (simulation day index or
proleptic date ordinal); `seq` breaks intra-day ties, last write wins.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

BINARY = "binary"
ORDINAL = "ordinal"
NOMINAL = "nominal"

KINDS = (BINARY, ORDINAL, NOMINAL)

VALUE_AT_CLOSE = "value_at_close"
SUM_OVER_WINDOW = "sum_over_window"

# Input forecasts may deviate from sum 1 by at most this much (renormalized);
# internally vectors are kept normalized to 1e-9.
INPUT_SUM_TOL = 1e-6
INTERNAL_SUM_TOL = 1e-9


class ValidationError(ValueError):
    """A domain object violates one of its invariants."""


@dataclass(frozen=True, order=True)
class Source:
    """Origin of a forecast: a human user, a machine model, or a named slot."""

    kind: str  # "human" | "machine" | "slot"
    id: str

    @classmethod
    def human(cls, user_id: str) -> "Source":
        return cls("human", user_id)

    @classmethod
    def machine(cls, model_id: str) -> "Source":
        return cls("machine", model_id)

    @classmethod
    def slot(cls, slot_id: str) -> "Source":
        return cls("slot", slot_id)

    def __str__(self) -> str:
        return f"{self.kind}:{self.id}"

    @classmethod
    def parse(cls, text: str) -> "Source":
        kind, _, sid = text.partition(":")
        if kind not in ("human", "machine", "slot") or not sid:
            raise ValidationError(f"bad source {text!r}")
        return cls(kind, sid)


@dataclass(frozen=True)
class Ifp:
    """A single forecasting question."""

    id: str
    title: str
    options: tuple
    kind: str
    open_date: int
    close_date: int
    resolved_option: Optional[int] = None
    series_ref: Optional[str] = None
    thresholds: Optional[tuple] = None
    horizon_kind: str = VALUE_AT_CLOSE

    def __post_init__(self):
        c = len(self.options)
        if not 2 <= c <= 5:
            raise ValidationError(f"{self.id}: needs 2..5 options, got {c}")
        if self.kind not in KINDS:
            raise ValidationError(f"{self.id}: unknown kind {self.kind!r}")
        if (self.kind == BINARY) != (c == 2):
            raise ValidationError(f"{self.id}: kind={self.kind} with C={c}")
        if self.open_date > self.close_date:
            raise ValidationError(f"{self.id}: open_date after close_date")
        if self.thresholds is not None:
            if self.kind == NOMINAL:
                raise ValidationError(f"{self.id}: nominal with thresholds")
            if len(self.thresholds) != c - 1:
                raise ValidationError(f"{self.id}: need C-1 thresholds")
            if any(a >= b for a, b in zip(self.thresholds, self.thresholds[1:])):
                raise ValidationError(f"{self.id}: thresholds not increasing")
        if self.resolved_option is not None and not 0 <= self.resolved_option < c:
            raise ValidationError(f"{self.id}: bad resolved_option")
        if self.horizon_kind not in (VALUE_AT_CLOSE, SUM_OVER_WINDOW):
            raise ValidationError(f"{self.id}: bad horizon_kind")

    @property
    def n_options(self) -> int:
        return len(self.options)

    @property
    def is_resolved(self) -> bool:
        return self.resolved_option is not None

    @property
    def active_days(self) -> range:
        """Open and close days inclusive."""
        return range(self.open_date, self.close_date + 1)

    def is_active(self, day: int) -> bool:
        return self.open_date <= day <= self.close_date


@dataclass(frozen=True)
class Forecast:
    """A probability vector over an IFP's options at a (day, seq) timestamp."""

    ifp_id: str
    source: Source
    probs: tuple
    day: int
    seq: int = 0

    @property
    def timestamp(self):
        return (self.day, self.seq)

    def probs_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)


def validate_forecast(probs, c: int) -> np.ndarray:
    """Validate and normalize a probability vector over c options.

    Accepts vectors whose sum deviates from 1 by at most 1e-6 and renormalizes
    them exactly; anything further off, wrong-length, or negative is an error.
    """
    if not 2 <= c <= 5:
        raise ValidationError(f"option count {c} outside 2..5")
    v = np.asarray(probs, dtype=float)
    if v.shape != (c,):
        raise ValidationError(f"expected {c} probabilities, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError("non-finite probability")
    if np.any(v < 0):
        raise ValidationError("negative probability")
    s = float(v.sum())
    if abs(s - 1.0) > INPUT_SUM_TOL:
        raise ValidationError(f"probabilities sum to {s:.8f}, not 1")
    if s != 1.0:
        v = v / s
    return v


def uniform_forecast(c: int) -> np.ndarray:
    """The uninformed prior: 1/c on each of c options."""
    if not 2 <= c <= 5:
        raise ValidationError(f"option count {c} outside 2..5")
    return np.full(c, 1.0 / c)


class TournamentLog:
    """Immutable store of IFPs, forecasts, and resolutions.

    Forecasts are kept in (day, seq) order per IFP; the log is the single
    input to scoring, aggregation, and replay simulations.
    """

    def __init__(self, ifps: Iterable[Ifp], forecasts: Iterable[Forecast],
                 validate: bool = True):
        self.ifps = {ifp.id: ifp for ifp in ifps}
        by_ifp: dict = {ifp_id: [] for ifp_id in self.ifps}
        all_fcs = []
        for fc in forecasts:
            ifp = self.ifps.get(fc.ifp_id)
            if ifp is None:
                raise ValidationError(f"forecast for unknown IFP {fc.ifp_id!r}")
            if validate:
                if not ifp.is_active(fc.day):
                    raise ValidationError(
                        f"forecast on {fc.ifp_id} at day {fc.day} outside "
                        f"[{ifp.open_date}, {ifp.close_date}]")
                validate_forecast(fc.probs, ifp.n_options)
            all_fcs.append(fc)
        all_fcs.sort(key=lambda f: (f.day, f.seq))
        for fc in all_fcs:
            by_ifp[fc.ifp_id].append(fc)
        self.forecasts = tuple(all_fcs)
        self._by_ifp = {k: tuple(v) for k, v in by_ifp.items()}

    def __len__(self) -> int:
        return len(self.forecasts)

    @property
    def calendar(self):
        """(first, last) day spanned by the IFPs; None when empty."""
        if not self.ifps:
            return None
        return (min(i.open_date for i in self.ifps.values()),
                max(i.close_date for i in self.ifps.values()))

    def forecasts_for(self, ifp_id: str):
        if ifp_id not in self._by_ifp:
            raise ValidationError(f"unknown IFP {ifp_id!r}")
        return self._by_ifp[ifp_id]

    def sources(self, kind: Optional[str] = None):
        seen = {}
        for fc in self.forecasts:
            if kind is None or fc.source.kind == kind:
                seen[fc.source] = None
        return list(seen)

    def filter(self, keep) -> "TournamentLog":
        """New log with only the forecasts for which keep(forecast) is true."""
        return TournamentLog(self.ifps.values(),
                             [f for f in self.forecasts if keep(f)],
                             validate=False)


def latest_per_source(log: TournamentLog, ifp_id: str, day: int) -> dict:
    """Most recent forecast at timestamp <= day for each source (carry-forward)."""
    out: dict = {}
    for fc in log.forecasts_for(ifp_id):
        if fc.day > day:
            break
        out[fc.source] = fc  # log is timestamp-ordered: later wins
    return out


def active_forecast_on_day(log: TournamentLog, source: Source, ifp_id: str,
                           day: int, fill: str = "uniform"):
    """The source's standing forecast on `day`, or the uniform prior / None.

    fill="uniform" substitutes the uninformed prior when the source has not
    yet forecast; fill="none" returns None instead.
    """
    ifp = log.ifps.get(ifp_id)
    if ifp is None:
        raise ValidationError(f"unknown IFP {ifp_id!r}")
    latest = None
    for fc in log.forecasts_for(ifp_id):
        if fc.day > day:
            break
        if fc.source == source:
            latest = fc
    if latest is not None:
        return latest.probs_array()
    if fill == "uniform":
        return uniform_forecast(ifp.n_options)
    if fill == "none":
        return None
    raise ValidationError(f"unknown fill mode {fill!r}")
