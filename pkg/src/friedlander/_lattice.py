"""Lattice enumeration and binned-moment accumulation for trace sums.

A windowed trace is sum_j a_j exp(i t w_j) over ~10^8 lattice points. The
frequencies w_j are grouped into bins of width ``hb`` with centres c*hb;
with d_j = w_j - c*hb each bin stores the moments sum a_j d_j^r, r <= R.
Then exp(i t w_j) = exp(i t c hb) sum_r (i t d_j)^r / r!, exact to rounding
once |t| hb / 2 <= 1/4 and R >= 14, and any number of t values costs
O(bins * R) each. Moment sums use Neumaier compensation.

Enumeration order (both backends): m ascending, then n ascending.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit
from .special_fn import _T_COEF, tau_asymptotic

N_MOMENTS = 15
PHASE_FRIEDLANDER = 0
PHASE_FLAT = 1
T_COEF = np.array(_T_COEF)
_LN2 = math.log(2.0)


@njit
def _smooth_step(x):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    a = math.exp(-1.0 / x)
    b = math.exp(-1.0 / (1.0 - x))
    return a / (a + b)


@njit
def _chi(sector, m, n, lk1, lk2, wlog):
    # smooth sector cutoffs in log(m/n); lk1 = log kappa1, lk2 = log kappa2,
    # wlog = transition width in log units
    if sector == 0:
        return 1.0
    lr = math.log(m / n)
    s1 = _smooth_step((lr - lk1) / wlog + 1.0)
    s3 = _smooth_step((lr - lk2) / wlog)
    if sector == 1:
        return 1.0 - s1
    if sector == 2:
        return s1 - s3
    return s3


@njit
def _tau_tail(m, coef):
    w = 3.0 * math.pi * (4.0 * m - 1.0) / 8.0
    x = 1.0 / (w * w)
    acc = 0.0
    for i in range(coef.shape[0] - 1, -1, -1):
        acc = acc * x + coef[i]
    c = np.cbrt(w)
    return c * c * acc


@njit
def _accumulate(omega, a, hb, M, C):
    c = int(omega / hb + 0.5)
    d = omega - c * hb
    p = a
    for r in range(M.shape[1]):
        s = M[c, r]
        tot = s + p
        if abs(s) >= abs(p):
            C[c, r] += (s - tot) + p
        else:
            C[c, r] += (p - tot) + s
        M[c, r] = tot
        p *= d


@njit
def _weight(lam, inv_scale2, gaussian):
    if gaussian:
        return 2.0 * math.exp(-lam * inv_scale2)
    return 2.0


@njit
def _moments_numba(phase, tz, coef, n43, cut, inv_scale2, gaussian, sector, lk1, lk2, wlog, hb, M, C):
    count = 0
    nz = tz.shape[0]
    m = 1
    while True:
        if phase == 0:
            t = tz[m - 1] if m <= nz else _tau_tail(m, coef)
            if 1.0 + t > cut:
                break
        else:
            t = float(m) * m
            if t + 1.0 > cut:
                break
        n = 1
        while n < n43.shape[0]:
            if phase == 0:
                lam = n * n + n43[n] * t
            else:
                lam = t + float(n) * n
            if lam > cut:
                break
            count += 1
            a = _weight(lam, inv_scale2, gaussian) * _chi(sector, float(m), float(n), lk1, lk2, wlog)
            if a != 0.0:
                _accumulate(math.sqrt(lam), a, hb, M, C)
            n += 1
        m += 1
    return count


def _py(fn):
    return getattr(fn, "py_func", fn)


def n43_table(cut):
    n = np.arange(int(math.isqrt(int(cut))) + 2, dtype=np.float64)
    return np.cbrt(n) ** 4


def zeros_for(tz, m):
    """t_m from the certified prefix, the asymptotic tail beyond it."""
    m = np.asarray(m, dtype=np.int64)
    out = np.empty(m.shape)
    inside = m <= tz.size
    out[inside] = tz[m[inside] - 1]
    if (~inside).any():
        out[~inside] = tau_asymptotic(m[~inside].astype(np.float64))
    return out


def iter_lattice(phase, tz, cut, block=2048):
    """Yield (m, n, lam) chunks in enumeration order (numpy path)."""
    n43 = n43_table(cut)
    nmax_all = n43.size - 1
    m0 = 1
    while True:
        m = np.arange(m0, m0 + block, dtype=np.int64)
        if phase == PHASE_FRIEDLANDER:
            t = zeros_for(tz, m)
        else:
            t = m.astype(np.float64) ** 2
        lo = np.zeros(m.size, dtype=np.int64)
        hi = np.full(m.size, nmax_all + 1, dtype=np.int64)
        # largest n with lam(m, n) <= cut, by bisection on the monotone lam
        while np.any(hi - lo > 1):
            mid = (lo + hi) // 2
            nf = mid.astype(np.float64)
            lam = nf * nf + n43[mid] * t if phase == PHASE_FRIEDLANDER else t + nf * nf
            ok = lam <= cut
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        keep = lo > 0
        if not keep.any():
            return
        m, t, nmax = m[keep], t[keep], lo[keep]
        starts = np.cumsum(nmax) - nmax
        n = np.arange(int(nmax.sum()), dtype=np.int64) - np.repeat(starts, nmax) + 1
        tr = np.repeat(t, nmax)
        nf = n.astype(np.float64)
        lam = nf * nf + n43[n] * tr if phase == PHASE_FRIEDLANDER else tr + nf * nf
        yield np.repeat(m, nmax), n, lam
        if keep.size < block or not keep[-1]:
            return
        m0 += block


def chi_values(sector, m, n, lk1, lk2, wlog):
    step = np.vectorize(_py(_smooth_step), otypes=[float])
    if sector == 0:
        return np.ones(np.shape(m))
    lr = np.log(np.asarray(m, dtype=np.float64) / np.asarray(n, dtype=np.float64))
    s1 = step((lr - lk1) / wlog + 1.0)
    s3 = step((lr - lk2) / wlog)
    return (1.0 - s1) if sector == 1 else (s1 - s3) if sector == 2 else s3


def weights(lam, inv_scale2, gaussian):
    return 2.0 * np.exp(-lam * inv_scale2) if gaussian else np.full(lam.shape, 2.0)


def _moments_numpy(phase, tz, cut, inv_scale2, gaussian, sector, lk1, lk2, wlog, hb, M, C):
    count = 0
    for m, n, lam in iter_lattice(phase, tz, cut):
        count += lam.size
        a = weights(lam, inv_scale2, gaussian) * chi_values(sector, m, n, lk1, lk2, wlog)
        omega = np.sqrt(lam)
        c = (omega / hb + 0.5).astype(np.int64)
        d = omega - c * hb
        p = a
        for r in range(M.shape[1]):
            part = np.bincount(c, weights=p, minlength=M.shape[0])
            tot = M[:, r] + part
            big = np.abs(M[:, r]) >= np.abs(part)
            C[:, r] += np.where(big, (M[:, r] - tot) + part, (part - tot) + M[:, r])
            M[:, r] = tot
            p = p * d
    return count


def binned_moments(phase, tz, cut, scale, gaussian, sector, kappa1, kappa2, width, hb, use_numba=None):
    """Accumulate compensated bin moments; returns (moments, count)."""
    nbins = int(math.sqrt(cut) / hb) + 2
    M = np.zeros((nbins, N_MOMENTS))
    C = np.zeros((nbins, N_MOMENTS))
    lk1, lk2, wlog = math.log(kappa1), math.log(kappa2), width * _LN2
    inv = 1.0 / (scale * scale)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        count = _moments_numba(
            phase, np.ascontiguousarray(tz, dtype=np.float64), T_COEF, n43_table(cut),
            float(cut), inv, bool(gaussian), int(sector), lk1, lk2, wlog, float(hb), M, C,
        )
    else:
        count = _moments_numpy(phase, tz, cut, inv, gaussian, sector, lk1, lk2, wlog, hb, M, C)
    return M + C, int(count)


def evaluate_moments(moments, hb, t, t_chunk=64):
    """Z(t) from bin moments; t < 0 is the exact conjugate of |t|."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty(t.shape, dtype=np.complex128)
    at = np.abs(t)
    centres = np.arange(moments.shape[0]) * hb
    for s in range(0, t.size, t_chunk):
        tt = at[s : s + t_chunk]
        P = np.zeros((moments.shape[0], tt.size), dtype=np.complex128)
        for r in range(moments.shape[1] - 1, -1, -1):
            # Horner: P = M_r + (i t) / (r + 1) * P
            P = P * (1j * tt)[None, :] / (r + 1) + moments[:, r][:, None]
        E = np.exp(1j * np.outer(centres, tt))
        out[s : s + t_chunk] = (E * P).sum(axis=0)
    neg = t < 0
    out[neg] = np.conj(out[neg])
    return out


def direct_sum(phase, tz, cut, scale, gaussian, sector, kappa1, kappa2, width, t):
    """Plain sum over the lattice; oracle for the binned engine."""
    t = np.asarray(t, dtype=np.float64)
    lk1, lk2, wlog = math.log(kappa1), math.log(kappa2), width * _LN2
    out = np.zeros(t.shape, dtype=np.complex128)
    count = 0
    inv = 1.0 / (scale * scale)
    for m, n, lam in iter_lattice(phase, tz, cut, block=256):
        count += lam.size
        a = weights(lam, inv, gaussian) * chi_values(sector, m, n, lk1, lk2, wlog)
        omega = np.sqrt(lam)
        for s in range(0, t.size, 16):
            tt = t[s : s + 16]
            out[s : s + 16] += (a[:, None] * np.exp(1j * omega[:, None] * tt[None, :])).sum(axis=0)
    return out, count
