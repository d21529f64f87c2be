# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the time-series model-selection grids.

These recursions are evaluated hundreds of times per fitted model (once per
grid point / optimizer step), so they are the hot path of simulations that
refit machine models across many questions and days. `arma_fit` runs the
entire Nelder-Mead search in C because the per-evaluation cost is otherwise
dominated by optimizer bookkeeping rather than the recursion itself.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def ses_sse(double[::1] x, double alpha):
    """One-step-ahead sum of squared errors for simple exponential smoothing.

    Level is initialized to x[0]; errors accumulate from t=1.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef double level, e, sse
    cdef Py_ssize_t t
    if n < 2:
        return 0.0
    level = x[0]
    sse = 0.0
    for t in range(1, n):
        e = x[t] - level
        sse += e * e
        level = level + alpha * e
    return sse


def holt_sse(double[::1] x, double alpha, double beta):
    """One-step SSE for Holt's linear trend method (error-correction form).

    `beta` is the damp-free trend smoothing parameter relative to alpha
    (trend gain = alpha * beta). Level starts at x[0], trend at x[1]-x[0];
    errors accumulate from t=2.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef double level, trend, f, e, sse
    cdef Py_ssize_t t
    if n < 3:
        return 0.0
    level = x[0]
    trend = x[1] - x[0]
    sse = 0.0
    for t in range(2, n):
        f = level + trend
        e = x[t] - f
        sse += e * e
        level = f + alpha * e
        trend = trend + alpha * beta * e
    return sse


cdef double _css(double[::1] w, double* coefs, Py_ssize_t p, Py_ssize_t q,
                 Py_ssize_t start, double* e) noexcept:
    """CSS of an ARMA(p,q) with coefficients packed as (phi..., theta...).

    Residuals run from t=p with pre-sample residuals zero; the sum starts at
    t=start.
    """
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double acc, sse = 0.0
    for t in range(p, n):
        acc = w[t]
        for i in range(p):
            acc -= coefs[i] * w[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= p:
                acc -= coefs[p + j] * e[t - 1 - j]
        e[t] = acc
        if t >= start:
            sse += acc * acc
    return sse


cdef double _objective(double[::1] w, double* coefs, Py_ssize_t p,
                       Py_ssize_t q, Py_ssize_t start, double* e,
                       double sse0) noexcept:
    # coefficient-sum guard keeps the search away from the wildly explosive
    # region; exact stability checks happen once after optimization
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(p + q):
        s += coefs[i] if coefs[i] >= 0 else -coefs[i]
    if s > 4.0:
        return 4.0 * sse0 * s
    return _css(w, coefs, p, q, start, e)


cdef void _sort_simplex(double[:, ::1] sim, double[::1] fsim,
                        Py_ssize_t ndim) noexcept:
    # stable insertion sort of the ndim+1 vertices by objective value
    cdef Py_ssize_t i, j, k
    cdef double fkey
    cdef double key[8]
    for i in range(1, ndim + 1):
        fkey = fsim[i]
        for j in range(ndim):
            key[j] = sim[i, j]
        k = i - 1
        while k >= 0 and fsim[k] > fkey:
            fsim[k + 1] = fsim[k]
            for j in range(ndim):
                sim[k + 1, j] = sim[k, j]
            k -= 1
        fsim[k + 1] = fkey
        for j in range(ndim):
            sim[k + 1, j] = key[j]


cdef void _shrink(double[::1] w, double[:, ::1] sim, double[::1] fsim,
                  Py_ssize_t ndim, double sigma, Py_ssize_t p, Py_ssize_t q,
                  Py_ssize_t start, double* e, double sse0) noexcept:
    cdef Py_ssize_t i, j
    for i in range(1, ndim + 1):
        for j in range(ndim):
            sim[i, j] = sim[0, j] + sigma * (sim[i, j] - sim[0, j])
        fsim[i] = _objective(w, &sim[i, 0], p, q, start, e, sse0)


def arma_fit(double[::1] w, Py_ssize_t p, Py_ssize_t q, Py_ssize_t burn=-1):
    """Minimize the ARMA conditional SSE over (phi, theta) by Nelder-Mead.

    Zero start; standard reflection/expansion/contraction/shrink
    coefficients; xatol=1e-3 with fatol scaled to the SSE at zero;
    maxiter=100*(p+q). Returns the packed coefficient vector of length p+q.
    """
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t ndim = p + q
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(ndim)
    if ndim == 0 or n == 0:
        return out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ebuf = np.zeros(n)
    cdef double* e = <double*> cnp.PyArray_DATA(ebuf)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] simbuf = np.zeros((ndim + 1, ndim))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fbuf = np.zeros(ndim + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wrk = np.zeros(3 * ndim)
    cdef double[:, ::1] sim = simbuf
    cdef double[::1] fsim = fbuf
    cdef double* xbar = <double*> cnp.PyArray_DATA(wrk)
    cdef double* xr = xbar + ndim
    cdef double* xt = xbar + 2 * ndim
    cdef Py_ssize_t start = p if burn < p else burn
    cdef Py_ssize_t i, j, it, maxiter = 100 * ndim
    cdef double sse0, fatol, xatol = 1e-3
    cdef double fr, ft, tmp, dx, df
    cdef double rho = 1.0, chi = 2.0, psi = 0.5, sigma = 0.5

    sse0 = _css(w, &sim[0, 0], p, q, start, e)
    fatol = 1e-6 * (1.0 + (sse0 if sse0 >= 0 else -sse0))
    fsim[0] = sse0
    for i in range(1, ndim + 1):
        # from a zero start, vertex i offsets coordinate i-1 by 0.00025
        sim[i, i - 1] = 0.00025
        fsim[i] = _objective(w, &sim[i, 0], p, q, start, e, sse0)
    _sort_simplex(sim, fsim, ndim)

    for it in range(maxiter):
        # converged when the simplex is small in x and flat in f
        dx = 0.0
        df = 0.0
        for i in range(1, ndim + 1):
            tmp = fsim[i] - fsim[0]
            if tmp < 0:
                tmp = -tmp
            if tmp > df:
                df = tmp
            for j in range(ndim):
                tmp = sim[i, j] - sim[0, j]
                if tmp < 0:
                    tmp = -tmp
                if tmp > dx:
                    dx = tmp
        if dx <= xatol and df <= fatol:
            break
        for j in range(ndim):
            tmp = 0.0
            for i in range(ndim):
                tmp += sim[i, j]
            xbar[j] = tmp / ndim
        for j in range(ndim):
            xr[j] = (1.0 + rho) * xbar[j] - rho * sim[ndim, j]
        fr = _objective(w, xr, p, q, start, e, sse0)
        if fr < fsim[0]:
            for j in range(ndim):
                xt[j] = (1.0 + rho * chi) * xbar[j] - rho * chi * sim[ndim, j]
            ft = _objective(w, xt, p, q, start, e, sse0)
            if ft < fr:
                for j in range(ndim):
                    sim[ndim, j] = xt[j]
                fsim[ndim] = ft
            else:
                for j in range(ndim):
                    sim[ndim, j] = xr[j]
                fsim[ndim] = fr
        elif fr < fsim[ndim - 1]:
            for j in range(ndim):
                sim[ndim, j] = xr[j]
            fsim[ndim] = fr
        elif fr < fsim[ndim]:
            # outside contraction
            for j in range(ndim):
                xt[j] = (1.0 + psi * rho) * xbar[j] - psi * rho * sim[ndim, j]
            ft = _objective(w, xt, p, q, start, e, sse0)
            if ft <= fr:
                for j in range(ndim):
                    sim[ndim, j] = xt[j]
                fsim[ndim] = ft
            else:
                _shrink(w, sim, fsim, ndim, sigma, p, q, start, e, sse0)
        else:
            # inside contraction
            for j in range(ndim):
                xt[j] = (1.0 - psi) * xbar[j] + psi * sim[ndim, j]
            ft = _objective(w, xt, p, q, start, e, sse0)
            if ft < fsim[ndim]:
                for j in range(ndim):
                    sim[ndim, j] = xt[j]
                fsim[ndim] = ft
            else:
                _shrink(w, sim, fsim, ndim, sigma, p, q, start, e, sse0)
        _sort_simplex(sim, fsim, ndim)

    for j in range(ndim):
        out[j] = sim[0, j]
    return out


def arma_css(double[::1] w, double[::1] phi, double[::1] theta,
             Py_ssize_t burn=-1):
    """Conditional sum of squares for an ARMA(p,q) on a (differenced) series.

    Residuals run from t=p with pre-sample residuals set to zero; the sum
    starts at t=max(p, burn) so candidates of different AR order can be
    scored on a common span. Returns (sse, nobs) with nobs = n - start.
    """
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t p = phi.shape[0]
    cdef Py_ssize_t q = theta.shape[0]
    cdef Py_ssize_t start = p if burn < p else burn
    cdef Py_ssize_t t, i, j
    cdef double acc, sse = 0.0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e = np.zeros(n, dtype=np.float64)
    for t in range(p, n):
        acc = w[t]
        for i in range(p):
            acc -= phi[i] * w[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= p:
                acc -= theta[j] * e[t - 1 - j]
        e[t] = acc
        if t >= start:
            sse += acc * acc
    return sse, n - start
