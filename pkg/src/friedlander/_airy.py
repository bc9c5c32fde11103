"""Low-level Airy kernels (Ai and Ai' on the real line).

Three regimes:

* ``|x| <= 9``: Taylor re-expansion of the Airy ODE ``y'' = x y`` around the
  nearest node of a 0.25-spaced table. The table is built once at import by
  stepping the same recurrence: forward from the exact values at 0 into the
  oscillatory side, and backward from the asymptotic values at +9 (the
  direction in which Ai is dominant, so the stepping is stable).
* ``x > 9``: exponential asymptotic series.
* ``x < -9``: oscillatory asymptotic series with amplitude corrections.

At ``|x| = 9`` the asymptotic variable is 18 and the optimally truncated
series are accurate to ~1e-16 relative, so the two sides agree to rounding.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit

ASYMPTOTIC_CUT = 9.0
NODE_SPACING = 0.25
TAYLOR_TERMS = 28
SERIES_TERMS = 40

AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
AIP0 = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))

EPS = np.finfo(np.float64).eps
TINY = np.finfo(np.float64).tiny
_SQRT_PI = math.sqrt(math.pi)
_QUARTER_PI = 0.25 * math.pi


def _series_coefficients(n):
    u = np.empty(n)
    v = np.empty(n)
    u[0] = 1.0
    v[0] = 1.0
    for k in range(1, n):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        v[k] = -(6 * k + 1) / (6 * k - 1) * u[k]
    return u, v


U_COEF, V_COEF = _series_coefficients(SERIES_TERMS)


@njit
def _exp_series(zeta, u, v):
    # sum (-1)^k u_k zeta^-k, stopped at the smallest term
    su = 1.0
    sv = 1.0
    pw = 1.0
    last = 1.0
    for k in range(1, u.shape[0]):
        pw = -pw / zeta
        tu = u[k] * pw
        if abs(tu) > last:
            break
        su += tu
        sv += v[k] * pw
        last = abs(tu)
        if last < 1e-18:
            break
    return su, sv, last


@njit
def _osc_series(zeta, u, v):
    p = 0.0
    q = 0.0
    r = 0.0
    s = 0.0
    inv = 1.0 / zeta
    pw = 1.0
    last = 1.0
    for k in range(u.shape[0]):
        term = u[k] * pw
        if k > 0 and abs(term) > last:
            break
        sgn = 1.0 if (k // 2) % 2 == 0 else -1.0
        if k % 2 == 0:
            p += sgn * term
            r += sgn * v[k] * pw
        else:
            q += sgn * term
            s += sgn * v[k] * pw
        last = abs(term)
        if last < 1e-18:
            break
        pw *= inv
    return p, q, r, s, last


@njit
def _taylor_step(x0, y0, d0, h, nterms):
    if h == 0.0:
        return y0, d0
    hh = x0 * h * h
    h3 = h * h * h
    pm1 = 0.0
    p0 = y0
    p1 = d0 * h
    y = p0 + p1
    dy = p1
    # p_{k+2} = (x0 h^2 p_k + h^3 p_{k-1}) / ((k+1)(k+2))
    for k in range(0, nterms - 2):
        p2 = (hh * p0 + h3 * pm1) / ((k + 1.0) * (k + 2.0))
        y += p2
        dy += (k + 2.0) * p2
        pm1 = p0
        p0 = p1
        p1 = p2
    return y, dy / h


@njit
def _airy_point(x, node_x0, node_ai, node_aip, u, v):
    """Return (Ai(x), Ai'(x), estimated absolute error, underflow flag)."""
    if x > ASYMPTOTIC_CUT:
        zeta = (2.0 / 3.0) * x * math.sqrt(x)
        su, sv, last = _exp_series(zeta, u, v)
        q = math.sqrt(math.sqrt(x))
        e = math.exp(-zeta) / (2.0 * _SQRT_PI)
        ai = e / q * su
        aip = -e * q * sv
        err = (abs(ai) + abs(aip)) * (4.0 * EPS * (zeta + 4.0) + last) + 4.0 * TINY
        under = ai < TINY
        return ai, aip, err, under
    if x < -ASYMPTOTIC_CUT:
        z = -x
        zeta = (2.0 / 3.0) * z * math.sqrt(z)
        p, q, r, s, last = _osc_series(zeta, u, v)
        ph = zeta - _QUARTER_PI
        c = math.cos(ph)
        sn = math.sin(ph)
        qz = math.sqrt(math.sqrt(z))
        amp = 1.0 / (_SQRT_PI * qz)
        ai = amp * (c * p + sn * q)
        aip = qz / _SQRT_PI * (sn * r - c * s)
        err = (amp + qz / _SQRT_PI) * (2.0 * EPS * (zeta + 4.0) + last)
        return ai, aip, err, False
    j = int(math.floor((x - node_x0) / NODE_SPACING + 0.5))
    if j < 0:
        j = 0
    if j > node_ai.shape[0] - 1:
        j = node_ai.shape[0] - 1
    xj = node_x0 + j * NODE_SPACING
    ai, aip = _taylor_step(xj, node_ai[j], node_aip[j], x - xj, TAYLOR_TERMS)
    err = 64.0 * EPS * (1.0 + abs(x)) * max(0.36, abs(ai) + abs(aip))
    return ai, aip, err, False


@njit
def _airy_array_numba(x, node_x0, node_ai, node_aip, u, v):
    n = x.shape[0]
    ai = np.empty(n)
    aip = np.empty(n)
    err = np.empty(n)
    under = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        a, b, e, f = _airy_point(x[i], node_x0, node_ai, node_aip, u, v)
        ai[i] = a
        aip[i] = b
        err[i] = e
        under[i] = f
    return ai, aip, err, under


def _build_nodes():
    step = getattr(_taylor_step, "py_func", _taylor_step)
    series = getattr(_exp_series, "py_func", _exp_series)
    n_side = int(round(ASYMPTOTIC_CUT / NODE_SPACING))
    xs = np.arange(-n_side, n_side + 1) * NODE_SPACING
    ai = np.empty(xs.shape)
    aip = np.empty(xs.shape)
    mid = n_side
    ai[mid], aip[mid] = AI0, AIP0
    for j in range(mid, 0, -1):
        ai[j - 1], aip[j - 1] = step(xs[j], ai[j], aip[j], -NODE_SPACING, 40)
    # backward from the exponential side, where Ai is the growing solution
    top = xs[-1]
    zeta = (2.0 / 3.0) * top * math.sqrt(top)
    su, sv, _ = series(zeta, U_COEF, V_COEF)
    q = math.sqrt(math.sqrt(top))
    e = math.exp(-zeta) / (2.0 * _SQRT_PI)
    ai[-1], aip[-1] = e / q * su, -e * q * sv
    for j in range(len(xs) - 1, mid + 1, -1):
        ai[j - 1], aip[j - 1] = step(xs[j], ai[j], aip[j], -NODE_SPACING, 40)
    return float(xs[0]), ai, aip


NODE_X0, NODE_AI, NODE_AIP = _build_nodes()


def _airy_array_numpy(x, node_x0, node_ai, node_aip, u, v):
    x = np.asarray(x, dtype=np.float64)
    ai = np.empty_like(x)
    aip = np.empty_like(x)
    err = np.empty_like(x)
    under = np.zeros(x.shape, dtype=bool)

    mid = np.abs(x) <= ASYMPTOTIC_CUT
    if mid.any():
        xm = x[mid]
        j = np.clip(np.floor((xm - node_x0) / NODE_SPACING + 0.5).astype(np.int64), 0, node_ai.size - 1)
        x0 = node_x0 + j * NODE_SPACING
        h = xm - x0
        hh = x0 * h * h
        h3 = h * h * h
        pm1 = np.zeros_like(xm)
        p0 = node_ai[j].copy()
        p1 = node_aip[j] * h
        y = p0 + p1
        dy = p1.copy()
        for k in range(TAYLOR_TERMS - 2):
            p2 = (hh * p0 + h3 * pm1) / ((k + 1.0) * (k + 2.0))
            y += p2
            dy += (k + 2.0) * p2
            pm1, p0, p1 = p0, p1, p2
        safe = h != 0.0
        d = np.where(safe, dy / np.where(safe, h, 1.0), node_aip[j])
        ai[mid] = y
        aip[mid] = d
        err[mid] = 64.0 * EPS * (1.0 + np.abs(xm)) * np.maximum(0.36, np.abs(y) + np.abs(d))

    for sel, positive in ((x > ASYMPTOTIC_CUT, True), (x < -ASYMPTOTIC_CUT, False)):
        if not sel.any():
            continue
        z = np.abs(x[sel])
        zeta = (2.0 / 3.0) * z * np.sqrt(z)
        inv = 1.0 / zeta
        # fixed-length sums with the same stopping rule applied elementwise
        terms_u = np.empty((u.size, z.size))
        pw = np.ones_like(z)
        for k in range(u.size):
            terms_u[k] = u[k] * pw
            pw = pw * inv
        mags = np.abs(terms_u)
        growing = np.zeros(z.shape, dtype=bool)
        active = np.empty_like(mags, dtype=bool)
        prev = np.full(z.shape, np.inf)
        stopped = np.zeros(z.shape, dtype=bool)
        for k in range(u.size):
            growing = mags[k] > prev
            stopped |= growing & (k > 0)
            active[k] = ~stopped
            stopped |= mags[k] < 1e-18
            prev = np.where(active[k], mags[k], prev)
        last = np.where(active.any(axis=0), prev, 1.0)
        kk = np.arange(u.size)[:, None]
        if positive:
            sgn = np.where(kk % 2 == 0, 1.0, -1.0)
            su = np.sum(np.where(active, sgn * terms_u, 0.0), axis=0)
            sv = np.sum(np.where(active, sgn * (v[:, None] / u[:, None]) * terms_u, 0.0), axis=0)
            q = np.sqrt(np.sqrt(z))
            e = np.exp(-zeta) / (2.0 * _SQRT_PI)
            a = e / q * su
            b = -e * q * sv
            ai[sel] = a
            aip[sel] = b
            err[sel] = (np.abs(a) + np.abs(b)) * (4.0 * EPS * (zeta + 4.0) + last) + 4.0 * TINY
            under[sel] = a < TINY
        else:
            sgn = np.where((kk // 2) % 2 == 0, 1.0, -1.0)
            even = kk % 2 == 0
            tu = np.where(active, sgn * terms_u, 0.0)
            tv = np.where(active, sgn * (v[:, None] / u[:, None]) * terms_u, 0.0)
            p = np.sum(np.where(even, tu, 0.0), axis=0)
            qq = np.sum(np.where(even, 0.0, tu), axis=0)
            r = np.sum(np.where(even, tv, 0.0), axis=0)
            s = np.sum(np.where(even, 0.0, tv), axis=0)
            ph = zeta - _QUARTER_PI
            c = np.cos(ph)
            sn = np.sin(ph)
            qz = np.sqrt(np.sqrt(z))
            amp = 1.0 / (_SQRT_PI * qz)
            ai[sel] = amp * (c * p + sn * qq)
            aip[sel] = qz / _SQRT_PI * (sn * r - c * s)
            err[sel] = (amp + qz / _SQRT_PI) * (2.0 * EPS * (zeta + 4.0) + last)
    return ai, aip, err, under


def airy_arrays(x, use_numba=None):
    """Vectorised Ai, Ai', error estimate and underflow flag for a 1-d array."""
    x = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel())
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        return _airy_array_numba(x, NODE_X0, NODE_AI, NODE_AIP, U_COEF, V_COEF)
    return _airy_array_numpy(x, NODE_X0, NODE_AI, NODE_AIP, U_COEF, V_COEF)
