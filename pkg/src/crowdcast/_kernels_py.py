"""Pure-Python / NumPy fallback for the compiled kernels.

Same contracts as crowdcast._kernels. The SES recursion is expressed as an
IIR filter so the common path stays vectorized; the Holt and ARMA recursions
fall back to plain loops.
"""

import numpy as np
from scipy.signal import lfilter


def ses_sse(x, alpha):
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 2:
        return 0.0
    # level_t = (1-a)*level_{t-1} + a*x_t, level_0 = x[0]
    levels, _ = lfilter([alpha], [1.0, -(1.0 - alpha)], x[1:],
                        zi=np.array([(1.0 - alpha) * x[0]]))
    prior = np.concatenate(([x[0]], levels[:-1]))
    e = x[1:] - prior
    return float(np.dot(e, e))


def holt_sse(x, alpha, beta):
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 3:
        return 0.0
    level = x[0]
    trend = x[1] - x[0]
    gain = alpha * beta
    sse = 0.0
    for t in range(2, n):
        f = level + trend
        e = x[t] - f
        sse += e * e
        level = f + alpha * e
        trend = trend + gain * e
    return sse


def arma_fit(w, p, q, burn=-1):
    """Minimize the ARMA conditional SSE over (phi, theta) by Nelder-Mead.

    Same contract and tuning as the compiled version (zero start, xatol=1e-3,
    fatol scaled to the SSE at zero, maxiter=100*(p+q)); delegates the
    simplex bookkeeping to scipy.
    """
    from scipy.optimize import minimize

    w = np.asarray(w, dtype=float)
    ndim = p + q
    if ndim == 0 or w.size == 0:
        return np.zeros(ndim)
    start = max(p, burn)
    sse0, _ = arma_css(w, np.zeros(p), np.zeros(q), start)

    def objective(coefs):
        if np.sum(np.abs(coefs)) > 4.0:
            return 4.0 * sse0 * np.sum(np.abs(coefs))
        sse, _ = arma_css(w, np.ascontiguousarray(coefs[:p]),
                          np.ascontiguousarray(coefs[p:]), start)
        return sse

    res = minimize(objective, np.zeros(ndim), method="Nelder-Mead",
                   options={"xatol": 1e-3, "fatol": 1e-6 * (1.0 + abs(sse0)),
                            "maxiter": 100 * ndim})
    return np.asarray(res.x, dtype=float)


def arma_css(w, phi, theta, burn=-1):
    w = np.asarray(w, dtype=float)
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    n = w.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    start = max(p, burn)
    if p == 0 and q == 0:
        return float(np.dot(w[start:], w[start:])), n - start
    # u_t = w_t - sum_i phi_i w_{t-i}; then e solves theta(B) e = u with
    # zero pre-sample residuals, i.e. an IIR filter.
    u = w[p:].copy()
    for i in range(p):
        u -= phi[i] * w[p - 1 - i: n - 1 - i]
    if q == 0:
        e = u
    else:
        e = lfilter([1.0], np.concatenate(([1.0], theta)), u)
    e = e[start - p:]
    return float(np.dot(e, e)), n - start
