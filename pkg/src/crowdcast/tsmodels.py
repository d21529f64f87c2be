"""Automated univariate time-series forecasting.

Candidate families: random walk, simple/trend exponential smoothing selected
on a smoothing-parameter grid, and ARIMA(p,d,q) estimated by conditional sum
of squares with AIC-based order selection. Fitted models emit Normal h-step
predictive distributions which are mapped to question option probabilities by
binning at the question's thresholds. The two-model ensemble averages the
option probabilities of the auto-selected ARIMA and the exponential-smoothing
fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .core import Ifp, SUM_OVER_WINDOW, ValidationError, validate_forecast
from .kernels import arma_css, arma_fit, holt_sse, ses_sse

RANDOM_WALK = "random_walk"
SES = "ses"
HOLT = "holt"
ARIMA = "arima"

# Per-option probability floor applied before renormalization; bounds the
# damage from overconfident model forecasts on mis-specified series.
PROB_FLOOR = 0.005

ALPHA_GRID = np.round(np.arange(0.05, 0.951, 0.05), 2)

MAX_P = 3
MAX_D = 2
MAX_Q = 3


class FitError(ValidationError):
    """A model cannot be fit to the given series."""


@dataclass(frozen=True)
class Series:
    """A regularly spaced univariate series."""

    id: str
    days: tuple          # strictly increasing day numbers
    values: tuple
    frequency: str = "daily"  # "daily" | "weekly" | "monthly"

    def __post_init__(self):
        if len(self.days) != len(self.values):
            raise ValidationError(f"{self.id}: days/values length mismatch")
        d = np.asarray(self.days)
        if d.size and np.any(np.diff(d) <= 0):
            raise ValidationError(f"{self.id}: days not strictly increasing")
        if not np.all(np.isfinite(np.asarray(self.values, dtype=float))):
            raise ValidationError(f"{self.id}: non-finite value")

    def __len__(self) -> int:
        return len(self.values)

    def values_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def step(self) -> int:
        return {"daily": 1, "weekly": 7, "monthly": 30}[self.frequency]

    def truncated(self, last_day: int) -> "Series":
        """Observations with day <= last_day."""
        from bisect import bisect_right
        k = bisect_right(self.days, last_day)
        return Series(self.id, self.days[:k], self.values[:k],
                      self.frequency)


def resample_locf(days, values, frequency: str = "daily",
                  series_id: str = "series") -> Series:
    """Regularize an irregular series by last-observation-carried-forward."""
    step = {"daily": 1, "weekly": 7, "monthly": 30}[frequency]
    days = list(days)
    values = [float(v) for v in values]
    if not days:
        raise ValidationError("empty series")
    order = np.argsort(days, kind="stable")
    days = [days[i] for i in order]
    values = [values[i] for i in order]
    grid = range(days[0], days[-1] + 1, step)
    out_days, out_vals = [], []
    j = 0
    current = values[0]
    for d in grid:
        while j < len(days) and days[j] <= d:
            current = values[j]
            j += 1
        out_days.append(d)
        out_vals.append(current)
    return Series(series_id, tuple(out_days), tuple(out_vals), frequency)


def _variance_floor(last_value: float) -> float:
    return 1e-8 * (1.0 + abs(last_value)) ** 2


@dataclass
class FittedModel:
    """A fitted forecasting model with enough state to predict forward."""

    family: str
    parameters: dict
    residual_variance: float
    aic: float
    training_n: int
    state: dict = field(default_factory=dict)

    def step_means(self, h: int) -> np.ndarray:
        """Forecast means for steps 1..h."""
        return _STEP_MEANS[self.family](self, h)

    def step_variances(self, h: int) -> np.ndarray:
        """Forecast variances for steps 1..h (floored away from zero)."""
        v = _STEP_VARS[self.family](self, h)
        return np.maximum(v, self.state["var_floor"])

    def predictive(self, h: int,
                   horizon_kind: str = "value_at_close") -> "PredictiveDistribution":
        """Normal predictive distribution at horizon h.

        For sum-over-window questions the target is the sum of the next h
        values; mean and variance are the sums of the per-step ones
        (independent-increments approximation).
        """
        if h < 1:
            raise ValidationError(f"horizon {h} < 1")
        means = self.step_means(h)
        vs = self.step_variances(h)
        if horizon_kind == SUM_OVER_WINDOW:
            mean, var = float(means.sum()), float(vs.sum())
        else:
            mean, var = float(means[-1]), float(vs[-1])
        return PredictiveDistribution(horizon=h, mean=mean,
                                      variance=max(var, self.state["var_floor"]))

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "parameters": {k: (list(v) if isinstance(v, (list, tuple, np.ndarray))
                               else v)
                           for k, v in self.parameters.items()},
            "residual_variance": self.residual_variance,
            "aic": self.aic,
            "training_n": self.training_n,
        }


@dataclass(frozen=True)
class PredictiveDistribution:
    horizon: int
    mean: float
    variance: float
    shape: str = "normal"

    def __post_init__(self):
        if self.variance <= 0:
            raise ValidationError("non-positive predictive variance")


# ---------------------------------------------------------------------------
# random walk

def fit_random_walk(series: Series) -> FittedModel:
    """Forecast mean = last value; variance grows linearly with horizon."""
    x = series.values_array()
    if x.size < 3:
        raise FitError(f"{series.id}: need >=3 observations for random walk")
    diffs = np.diff(x)
    resid_var = float(diffs.var(ddof=0))
    floor = _variance_floor(x[-1])
    resid_var = max(resid_var, floor)
    n = diffs.size
    aic = n * np.log(resid_var) + 2.0
    return FittedModel(
        family=RANDOM_WALK, parameters={},
        residual_variance=resid_var, aic=float(aic), training_n=x.size,
        state={"last": float(x[-1]), "var_floor": floor})


def _rw_means(m: FittedModel, h: int) -> np.ndarray:
    return np.full(h, m.state["last"])


def _rw_vars(m: FittedModel, h: int) -> np.ndarray:
    return m.residual_variance * np.arange(1, h + 1, dtype=float)


# ---------------------------------------------------------------------------
# exponential smoothing

def _ses_final_level(x: np.ndarray, alpha: float) -> float:
    level = x[0]
    for v in x[1:]:
        level += alpha * (v - level)
    return float(level)


def _holt_final_state(x: np.ndarray, alpha: float, beta: float):
    level, trend = x[0], x[1] - x[0]
    for v in x[2:]:
        e = v - (level + trend)
        level = level + trend + alpha * e
        trend = trend + alpha * beta * e
    return float(level), float(trend)


def fit_ets(series: Series) -> FittedModel:
    """Exponential smoothing with automatic simple-vs-trend selection.

    Both forms are grid-searched over smoothing parameters in
    {0.05, 0.10, ..., 0.95} minimizing one-step SSE; the form is then picked
    by AIC. Ties prefer the smaller alpha (then smaller beta).
    """
    x = series.values_array()
    n = x.size
    if n < 8:
        raise FitError(f"{series.id}: need >=8 observations for ETS")
    floor = _variance_floor(x[-1])

    best_alpha, best_sse = None, np.inf
    for a in ALPHA_GRID:
        sse = ses_sse(x, float(a))
        if sse < best_sse:  # strict: ties keep the smaller alpha
            best_alpha, best_sse = float(a), sse
    n_ses = n - 1
    ses_var = max(best_sse / n_ses, floor)
    ses_aic = n_ses * np.log(ses_var) + 2 * 2  # alpha + initial level

    best_ab, best_hsse = None, np.inf
    for a in ALPHA_GRID:
        for b in ALPHA_GRID:
            sse = holt_sse(x, float(a), float(b))
            if sse < best_hsse:
                best_ab, best_hsse = (float(a), float(b)), sse
    n_holt = n - 2
    holt_var = max(best_hsse / n_holt, floor)
    holt_aic = n_holt * np.log(holt_var) + 2 * 4  # alpha, beta, level, trend

    if ses_aic <= holt_aic:
        level = _ses_final_level(x, best_alpha)
        return FittedModel(
            family=SES, parameters={"alpha": best_alpha},
            residual_variance=ses_var, aic=float(ses_aic), training_n=n,
            state={"level": level, "var_floor": floor})
    a, b = best_ab
    level, trend = _holt_final_state(x, a, b)
    return FittedModel(
        family=HOLT, parameters={"alpha": a, "beta": b},
        residual_variance=holt_var, aic=float(holt_aic), training_n=n,
        state={"level": level, "trend": trend, "var_floor": floor})


def _ses_means(m: FittedModel, h: int) -> np.ndarray:
    return np.full(h, m.state["level"])


def _ses_vars(m: FittedModel, h: int) -> np.ndarray:
    # standard SES forecast-variance recursion: sigma2 * (1 + (h-1) alpha^2)
    a = m.parameters["alpha"]
    hs = np.arange(1, h + 1, dtype=float)
    return m.residual_variance * (1.0 + (hs - 1.0) * a * a)


def _holt_means(m: FittedModel, h: int) -> np.ndarray:
    hs = np.arange(1, h + 1, dtype=float)
    return m.state["level"] + hs * m.state["trend"]


def _holt_vars(m: FittedModel, h: int) -> np.ndarray:
    # class-1 state-space recursion: var_h = sigma2 * (1 + sum_{j<h} c_j^2),
    # c_j = alpha + alpha*beta*j
    a = m.parameters["alpha"]
    g = a * m.parameters["beta"]
    out = np.empty(h)
    acc = 0.0
    for j in range(h):
        out[j] = m.residual_variance * (1.0 + acc)
        c = a + g * (j + 1)
        acc += c * c
    return out


# ---------------------------------------------------------------------------
# ARIMA by conditional sum of squares

def _difference(x: np.ndarray, d: int) -> np.ndarray:
    for _ in range(d):
        x = np.diff(x)
    return x


def _poly_roots_ok(coefs: np.ndarray) -> bool:
    """True when 1 - c1 z - ... - ck z^k has all roots outside |z|=1.001."""
    if coefs.size == 0:
        return True
    if coefs.size == 1:
        # root z = 1/c1
        return abs(coefs[0]) < 1.0 / 1.001
    if coefs.size == 2:
        # z^2 c2 + z c1 - 1 = 0 scaled; use the reciprocal polynomial
        # r^2 - c1 r - c2 = 0 whose roots are the reciprocals
        c1, c2 = coefs
        disc = c1 * c1 + 4.0 * c2
        if disc >= 0:
            s = np.sqrt(disc)
            m = max(abs(c1 + s), abs(c1 - s)) / 2.0
        else:
            m = np.sqrt(-c2)  # |r|^2 = product of conjugate pair = -c2
        return m < 1.0 / 1.001
    poly = np.concatenate(([1.0], -coefs))
    roots = np.roots(poly[::-1])
    if roots.size == 0:
        return True
    return bool(np.min(np.abs(roots)) > 1.001)


def fit_arima(series: Series, p: int, d: int, q: int,
              burn: Optional[int] = None) -> FittedModel:
    """ARIMA(p,d,q) by conditional sum of squares.

    The series is differenced d times and (for d=0) demeaned; AR/MA
    coefficients minimize the conditional SSE via Nelder-Mead started at
    zero. Explosive or non-invertible fits are rejected.
    AIC = n*ln(SSE/n) + 2*(p+q+1) with n the number of summed residuals;
    `burn` fixes the first summed residual so grid candidates of different
    order are scored on a common span.
    """
    if not (0 <= p <= MAX_P and 0 <= d <= MAX_D and 0 <= q <= MAX_Q):
        raise FitError(f"order ({p},{d},{q}) out of range")
    x = series.values_array()
    n = x.size
    if n - d <= p + q + 2:
        raise FitError(f"{series.id}: {n} observations too few for "
                       f"ARIMA({p},{d},{q})")
    w = _difference(x, d)
    mu = float(w.mean()) if d == 0 else 0.0
    wc = w - mu
    floor = _variance_floor(x[-1])
    start = p if burn is None else max(p, burn)
    coefs, resid_var, aic = _arima_css_fit(series.id, wc, p, d, q, start,
                                           floor)
    phi = coefs[:p]
    th = coefs[p:]
    resid = _arma_residuals(wc, phi, th)
    return FittedModel(
        family=ARIMA,
        parameters={"p": p, "d": d, "q": q, "phi": tuple(phi),
                    "theta": tuple(th), "mu": mu},
        residual_variance=float(resid_var), aic=float(aic), training_n=n,
        state={"w_tail": tuple(wc[-max(p, 1):]) if p else (),
               "e_tail": tuple(resid[-max(q, 1):]) if q else (),
               "x_tail": tuple(x[-max(d, 1):]) if d else (),
               "var_floor": floor})


def _arima_css_fit(series_id: str, wc: np.ndarray, p: int, d: int, q: int,
                   start: int, floor: float):
    """Estimate ARMA coefficients on a prepared series.

    Returns (coefs, residual_variance, aic); raises FitError for unstable or
    degenerate fits. This is the whole per-candidate cost of the order
    search, so it stays free of model-object construction.
    """
    if p + q == 0:
        coefs = np.empty(0)
        sse, nobs = arma_css(wc, coefs, coefs, start)
    else:
        coefs = arma_fit(wc, p, q, start)
        if not (_poly_roots_ok(coefs[:p]) and _poly_roots_ok(-coefs[p:])):
            raise FitError(f"{series_id}: ARIMA({p},{d},{q}) fit unstable")
        sse, nobs = arma_css(wc, np.ascontiguousarray(coefs[:p]),
                             np.ascontiguousarray(coefs[p:]), start)
    if nobs <= 0:
        raise FitError(f"{series_id}: no residuals left after burn-in")
    resid_var = max(sse / nobs, floor)
    aic = nobs * np.log(max(sse, floor * nobs) / nobs) + 2.0 * (p + q + 1)
    return coefs, float(resid_var), float(aic)


def _arma_residuals(wc: np.ndarray, phi: np.ndarray,
                    theta: np.ndarray) -> np.ndarray:
    """Residuals from t=p with zero pre-sample residuals.

    The AR part is a convolution and the MA inversion an IIR filter, so both
    stay vectorized.
    """
    from scipy.signal import lfilter
    n = wc.size
    p, q = phi.size, theta.size
    if n <= p:
        return np.zeros(n)
    u = wc[p:].copy()
    for i in range(p):
        u -= phi[i] * wc[p - 1 - i: n - 1 - i]
    if q:
        u = lfilter([1.0], np.concatenate(([1.0], theta)), u)
    e = np.zeros(n)
    e[p:] = u
    return e


def _arima_step_means(m: FittedModel, h: int) -> np.ndarray:
    p = m.parameters["p"]
    d = m.parameters["d"]
    q = m.parameters["q"]
    phi = np.asarray(m.parameters["phi"])
    th = np.asarray(m.parameters["theta"])
    mu = m.parameters["mu"]
    w_hist = list(m.state["w_tail"])
    e_hist = list(m.state["e_tail"])
    w_fc = []
    for step in range(h):
        acc = 0.0
        for i in range(p):
            k = step - 1 - i
            acc += phi[i] * (w_fc[k] if k >= 0 else w_hist[k])
        for j in range(q):
            k = step - 1 - j
            if k < 0 and e_hist:
                acc += th[j] * e_hist[k]
        w_fc.append(acc)
    means = np.asarray(w_fc) + mu
    if d == 0:
        return means
    # invert differencing: cumulative-sum d times from the last observed tail
    x_tail = np.asarray(m.state["x_tail"])
    levels = means
    for k in range(d, 0, -1):
        # anchor: the (d-k)-times differenced series' last value
        anchor = _difference(x_tail, d - k)[-1]
        levels = anchor + np.cumsum(levels)
    return levels


def _arima_psi(m: FittedModel, h: int) -> np.ndarray:
    """psi-weights of the integrated process (AR poly = phi(B)*(1-B)^d)."""
    p = m.parameters["p"]
    d = m.parameters["d"]
    phi = np.asarray(m.parameters["phi"])
    th = np.asarray(m.parameters["theta"])
    ar = np.array([1.0])
    if p:
        ar = np.convolve(ar, np.concatenate(([1.0], -phi)))
    for _ in range(d):
        ar = np.convolve(ar, [1.0, -1.0])
    ma = np.concatenate(([1.0], th))
    psi = np.zeros(h)
    for j in range(h):
        acc = ma[j] if j < ma.size else 0.0
        for i in range(1, min(j, ar.size - 1) + 1):
            acc -= ar[i] * psi[j - i]
        psi[j] = acc
    return psi


def _arima_step_vars(m: FittedModel, h: int) -> np.ndarray:
    psi = _arima_psi(m, h)
    return m.residual_variance * np.cumsum(psi ** 2)


_STEP_MEANS = {RANDOM_WALK: _rw_means, SES: _ses_means, HOLT: _holt_means,
               ARIMA: _arima_step_means}
_STEP_VARS = {RANDOM_WALK: _rw_vars, SES: _ses_vars, HOLT: _holt_vars,
              ARIMA: _arima_step_vars}


def auto_arima(series: Series) -> FittedModel:
    """Automatic ARIMA order selection, p,q in 0..3 and d in 0..2.

    For each d a stepwise AIC search in (p, q) starts from the standard seeds
    {(0,0), (1,0), (0,1), (2,2)} and hill-climbs to neighboring orders while
    the AIC improves; the overall minimum-AIC model across d wins. All
    candidates share a common residual span so their AICs are comparable.
    Unstable or failed fits are skipped; ties break toward the
    lexicographically smallest (p, d, q). Falls back to the random walk when
    every candidate fails.
    """
    if len(series) < 12:
        raise FitError(f"{series.id}: need >=12 observations for auto ARIMA")
    x = series.values_array()
    floor = _variance_floor(x[-1])
    best = None  # (aic, p, d, q)
    for d in range(MAX_D + 1):
        if x.size - d <= 2:
            continue
        w = _difference(x, d)
        mu = float(w.mean()) if d == 0 else 0.0
        wc = w - mu
        # differencing consumes d points, AR conditioning p more
        start = MAX_P + (MAX_D - d)
        cache: dict = {}

        def aic_of(pq, d=d, wc=wc, start=start, cache=cache):
            if pq in cache:
                return cache[pq]
            p, q = pq
            aic = None
            if wc.size - start > p + q + 2:
                try:
                    _, _, aic = _arima_css_fit(series.id, wc, p, d, q,
                                               start, floor)
                except FitError:
                    pass
            cache[pq] = aic
            return aic

        current = None  # (aic, p, q)
        for seed in ((0, 0), (1, 0), (0, 1), (2, 2)):
            aic = aic_of(seed)
            if aic is not None and (current is None
                                    or aic < current[0] - 1e-9):
                current = (aic, *seed)
        while current is not None:
            _, p0, q0 = current
            improved = False
            for dp, dq in ((-1, 0), (1, 0), (0, -1), (0, 1),
                           (-1, -1), (1, 1)):
                p, q = p0 + dp, q0 + dq
                if not (0 <= p <= MAX_P and 0 <= q <= MAX_Q):
                    continue
                aic = aic_of((p, q))
                if aic is not None and aic < current[0] - 1e-9:
                    current = (aic, p, q)
                    improved = True
            if not improved:
                break
        if current is not None and (best is None
                                    or current[0] < best[0] - 1e-9):
            best = (current[0], current[1], d, current[2])
    if best is None:
        return fit_random_walk(series)
    _, p, d, q = best
    return fit_arima(series, p, d, q, burn=MAX_P + (MAX_D - d))


def refresh_state(model: FittedModel, series: Series) -> FittedModel:
    """Re-anchor a fitted model's forecasting state to newer observations.

    Parameters stay fixed; only the state (levels, residual tails, last
    values) and the residual variance are recomputed on the extended data.
    This keeps daily forecasting cheap when parameter re-estimation is only
    affordable periodically.
    """
    x = series.values_array()
    if x.size < 3:
        raise FitError(f"{series.id}: too few observations to refresh")
    floor = _variance_floor(x[-1])
    if model.family == RANDOM_WALK:
        resid_var = max(float(np.diff(x).var(ddof=0)), floor)
        return replace(model, residual_variance=resid_var, training_n=x.size,
                       state={"last": float(x[-1]), "var_floor": floor})
    if model.family == SES:
        a = model.parameters["alpha"]
        resid_var = max(ses_sse(x, a) / (x.size - 1), floor)
        return replace(model, residual_variance=float(resid_var),
                       training_n=x.size,
                       state={"level": _ses_final_level(x, a),
                              "var_floor": floor})
    if model.family == HOLT:
        a, b = model.parameters["alpha"], model.parameters["beta"]
        resid_var = max(holt_sse(x, a, b) / (x.size - 2), floor)
        level, trend = _holt_final_state(x, a, b)
        return replace(model, residual_variance=float(resid_var),
                       training_n=x.size,
                       state={"level": level, "trend": trend,
                              "var_floor": floor})
    if model.family == ARIMA:
        p = model.parameters["p"]
        d = model.parameters["d"]
        q = model.parameters["q"]
        phi = np.asarray(model.parameters["phi"])
        th = np.asarray(model.parameters["theta"])
        w = _difference(x, d)
        wc = w - model.parameters["mu"]
        if wc.size <= p:
            raise FitError(f"{series.id}: too few observations to refresh")
        resid = _arma_residuals(wc, phi, th)
        nobs = wc.size - p
        resid_var = max(float(np.dot(resid[p:], resid[p:])) / max(nobs, 1),
                        floor)
        return replace(model, residual_variance=resid_var, training_n=x.size,
                       state={"w_tail": tuple(wc[-max(p, 1):]) if p else (),
                              "e_tail": tuple(resid[-max(q, 1):]) if q else (),
                              "x_tail": tuple(x[-max(d, 1):]) if d else (),
                              "var_floor": floor})
    raise FitError(f"unknown model family {model.family!r}")


# ---------------------------------------------------------------------------
# mapping distributions to option probabilities

def to_option_probs(dist: PredictiveDistribution, ifp: Ifp,
                    floor: float = PROB_FLOOR) -> np.ndarray:
    """Bin a Normal predictive distribution at the question thresholds.

    Option k gets the CDF mass between adjacent cut points; every option is
    then floored and the vector renormalized.
    """
    if ifp.thresholds is None:
        raise ValidationError(f"{ifp.id}: no thresholds for binning")
    sd = np.sqrt(dist.variance)
    cdf = ndtr((np.asarray(ifp.thresholds, dtype=float) - dist.mean) / sd)
    edges = np.concatenate(([0.0], cdf, [1.0]))
    probs = np.diff(edges)
    probs = np.clip(probs, floor, 1.0 - floor)
    probs = probs / probs.sum()
    return validate_forecast(probs, ifp.n_options)


def machine_forecast(series: Series, ifp: Ifp, fitter) -> np.ndarray:
    """Fit, predict to the question close, and bin."""
    model = fitter(series)
    h = max(1, int(np.ceil((ifp.close_date - series.days[-1]) / series.step)))
    dist = model.predictive(h, ifp.horizon_kind)
    return to_option_probs(dist, ifp)


def phe2(series: Series, ifp: Ifp) -> np.ndarray:
    """Two-model ensemble: mean of the ARIMA and ETS option probabilities.

    If one component fails the survivor is used; if both fail the random walk
    is used.
    """
    components = []
    for fitter in (auto_arima, fit_ets):
        try:
            components.append(machine_forecast(series, ifp, fitter))
        except (FitError, ValidationError):
            continue
    if not components:
        return machine_forecast(series, ifp, fit_random_walk)
    mean = np.mean(components, axis=0)
    return validate_forecast(mean / mean.sum(), ifp.n_options)
