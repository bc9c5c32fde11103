"""Airy function, its negative zeros, and the phase function theta.

The phase function is the argument of

    f(s) = i s^(1/3) Ai(-s^(2/3)) - Ai'(-s^(2/3)),   s > 0,

on the continuous branch with 0 < theta < pi below the first zero. Since
Im f vanishes exactly at s = t_m^(3/2), theta(t_m^(3/2)) = m pi, and the
zeros are t_m = tau(m) with tau(xi) = [theta^-1(pi xi)]^(2/3).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _airy
from .errors import ConvergenceError, DomainError

__all__ = [
    "AiryValue",
    "AiryZeroTable",
    "PhaseFunction",
    "airy",
    "airy_ai",
    "airy_zero",
    "theta",
    "theta_prime",
    "theta_prime_printed",
    "theta_inverse",
    "tau",
    "tau_asymptotic",
    "zero_seed",
    "zero_table",
]

THETA_DOMAIN_MIN = 0.25
_PATH_STEP = 0.125
_PATH_END = 256.0
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class AiryValue:
    argument: float
    ai: float
    ai_prime: float
    est_abs_error: float
    underflow: bool = False


def airy(x):
    """Ai(x) and Ai'(x) for scalar or array ``x`` (same shape as input)."""
    arr = np.asarray(x, dtype=np.float64)
    ai, aip, _, _ = _airy.airy_arrays(arr.ravel())
    if arr.ndim == 0:
        return float(ai[0]), float(aip[0])
    return ai.reshape(arr.shape), aip.reshape(arr.shape)


def airy_ai(x: float) -> AiryValue:
    """Evaluate Ai and Ai' at a single real point.

    For x large enough that Ai underflows binary64 the value returned is the
    (possibly subnormal or zero) floating result with ``underflow=True``.
    """
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"airy_ai needs a finite argument, got {x!r}")
    ai, aip, err, under = _airy.airy_arrays(np.array([x]))
    return AiryValue(x, float(ai[0]), float(aip[0]), float(err[0]), bool(under[0]))


# ---------------------------------------------------------------------------
# phase function


def _f_parts(s):
    s = np.asarray(s, dtype=np.float64)
    s13 = np.cbrt(s)
    a, b = airy(-(s13 * s13))
    return s13, a, b


def _wrap(d):
    return d - _TWO_PI * np.round(d / _TWO_PI)


def _principal_arg(s):
    s13, a, b = _f_parts(s)
    return np.arctan2(s13 * a, -b)


def _tracked_nodes():
    # unwrap along s = 1/4, 1/4 + 1/8, ...; each step moves theta by < 0.2
    nodes = np.arange(THETA_DOMAIN_MIN, _PATH_END + _PATH_STEP / 2, _PATH_STEP)
    phi = _principal_arg(nodes)
    steps = _wrap(np.diff(phi))
    if np.any(np.abs(steps) > 0.5 * math.pi):
        raise ConvergenceError("theta path step too coarse", max_step=float(np.abs(steps).max()))
    # Im f > 0 below the first zero, so the start already lies in (0, pi)
    values = np.concatenate([[phi[0]], phi[0] + np.cumsum(steps)])
    return nodes, values


_NODE_S, _NODE_THETA = _tracked_nodes()


def _check_domain(s):
    s = np.asarray(s, dtype=np.float64)
    if np.any(~np.isfinite(s)) or np.any(s <= THETA_DOMAIN_MIN):
        raise DomainError("theta is defined for s > 1/4")
    return s


def theta(s):
    """Continuous branch of arg f(s) for s > 1/4 (scalar or array).

    Below ``s = 256`` the branch is anchored on a table tracked step by step
    along the path from s = 1/4; above it the anchor is the principal part
    2s/3 + pi/4, whose distance to theta is far below pi there.
    """
    s = _check_domain(s)
    phi = _principal_arg(s)
    near = s <= _PATH_END
    j = np.clip(np.floor((s - THETA_DOMAIN_MIN) / _PATH_STEP).astype(np.int64), 0, _NODE_S.size - 1)
    anchor = np.where(near, _NODE_THETA[j], 2.0 * s / 3.0 + 0.25 * math.pi)
    out = anchor + _wrap(phi - anchor)
    return float(out) if out.ndim == 0 else out


def theta_prime(s):
    """Derivative of theta from the chain rule on f: Im(f' conj f) / |f|^2."""
    s = _check_domain(s)
    s13, a, b = _f_parts(s)
    re_f = -b
    im_f = s13 * a
    d_re = -(2.0 / 3.0) * s13 * a
    d_im = a / (3.0 * s13 * s13) - (2.0 / 3.0) * b
    out = (re_f * d_im - im_f * d_re) / (re_f * re_f + im_f * im_f)
    return float(out) if out.ndim == 0 else out


def theta_prime_printed(s):
    """Closed form (1/3|f|^2)[2 s^(2/3) a^2 + 2 b^2 - s^(-2/3) a b]; cross-check only."""
    s = _check_domain(s)
    s13, a, b = _f_parts(s)
    s23 = s13 * s13
    mod2 = s23 * a * a + b * b
    out = (2.0 * s23 * a * a + 2.0 * b * b - a * b / s23) / (3.0 * mod2)
    return float(out) if out.ndim == 0 else out


def theta_inverse(value, rtol=4.0 * np.finfo(float).eps, max_iter=100):
    """Solve theta(s) = value for s > 1/4 by safeguarded Newton."""
    v = np.atleast_1d(np.asarray(value, dtype=np.float64))
    base = PHASE.branch_base
    if np.any(v <= base):
        raise DomainError(f"theta only takes values above theta(1/4) = {base:.15g}")
    lo = np.full(v.shape, THETA_DOMAIN_MIN)
    hi = np.maximum(1.5 * (v - 0.25 * math.pi) + 2.0, 1.0)
    while True:
        low_hi = theta(hi) < v
        if not low_hi.any():
            break
        hi = np.where(low_hi, 2.0 * hi, hi)
    s = np.clip(1.5 * (v - 0.25 * math.pi), lo + 1e-3, hi)
    done = np.zeros(v.shape, dtype=bool)
    for _ in range(max_iter):
        g = theta(s) - v
        lo = np.where(g < 0, s, lo)
        hi = np.where(g > 0, s, hi)
        step = g / theta_prime(s)
        cand = s - step
        bad = ~((cand > lo) & (cand < hi))
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        moved = np.abs(cand - s)
        s = np.where(done, s, cand)
        done |= (moved <= rtol * s) | (g == 0)
        if done.all():
            break
    else:
        raise ConvergenceError("theta inversion did not converge", unfinished=int((~done).sum()))
    return float(s[0]) if np.ndim(value) == 0 else s


def tau(xi):
    """tau(xi) = [theta^-1(pi xi)]^(2/3), defined for xi > theta(1/4)/pi."""
    s = theta_inverse(np.pi * np.asarray(xi, dtype=np.float64))
    out = np.cbrt(s) ** 2
    return out if np.ndim(out) else float(out)


# Large-argument expansion of the inverse phase:
# t_m ~ T(3 pi (4m - 1) / 8), T(w) = w^(2/3) (1 + 5/48 w^-2 - 5/36 w^-4 + ...)
_T_COEF = (
    1.0,
    5.0 / 48.0,
    -5.0 / 36.0,
    77125.0 / 82944.0,
    -108056875.0 / 6967296.0,
    162375596875.0 / 334430208.0,
)


def tau_asymptotic(xi):
    """Smooth large-xi expansion of tau.

    It reproduces tau at integers (the zeros t_m) to double accuracy once
    m >~ 100. Between integers tau carries a small period-1 ripple that this
    expansion omits (relative size ~1e-2 xi^-2).
    """
    xi = np.asarray(xi, dtype=np.float64)
    w = 3.0 * np.pi * (4.0 * xi - 1.0) / 8.0
    x = 1.0 / (w * w)
    acc = np.zeros_like(w)
    for c in reversed(_T_COEF):
        acc = acc * x + c
    out = np.cbrt(w) ** 2 * acc
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PhaseFunction:
    """theta as a callable object; ``branch_base`` is theta(1/4)."""

    branch_base: float = field(default=float("nan"))

    def __call__(self, s):
        return theta(s)

    def derivative(self, s):
        return theta_prime(s)

    def inverse(self, value):
        return theta_inverse(value)


PHASE = PhaseFunction(branch_base=float(_NODE_THETA[0]))


# ---------------------------------------------------------------------------
# zeros


def zero_seed(m):
    """Principal-symbol seed (3 pi m / 2)^(2/3)."""
    m = np.asarray(m, dtype=np.float64)
    out = np.cbrt(1.5 * np.pi * m) ** 2
    return float(out) if out.ndim == 0 else out


def _residual_floor(t, aip, err):
    # |Ai(-t)| cannot be resolved below |Ai'| * ulp(t) plus the evaluation error
    return 2.0 * np.abs(aip) * np.spacing(t) + err


def _airy_with_error(x):
    ai, aip, err, _ = _airy.airy_arrays(np.asarray(x, dtype=np.float64).ravel())
    return ai, aip, err


def _refine_zeros(m, tol, max_iter):
    m = np.asarray(m, dtype=np.float64)
    seed = zero_seed(m)
    w = np.cbrt(m) ** -1
    lo = seed - 0.75 * w
    hi = seed - 0.2 * w
    # Ai(-t) changes sign from (-1)^(m-1) to (-1)^m across t_m
    sgn = np.where(np.mod(m, 2) == 1, 1.0, -1.0)
    for _ in range(8):
        a_lo, _ = airy(-lo)
        a_hi, _ = airy(-hi)
        ok = (sgn * a_lo > 0) & (sgn * a_hi < 0)
        if ok.all():
            break
        lo = np.where(sgn * a_lo > 0, lo, lo - 0.25 * w)
        hi = np.where(sgn * a_hi < 0, hi, hi + 0.25 * w)
    else:
        raise ConvergenceError("could not bracket Airy zero", m=m[~ok].tolist()[:5])

    t = 0.5 * (lo + hi)
    done = np.zeros(t.shape, dtype=bool)
    for _ in range(max_iter):
        a, ap = airy(-t)
        lo = np.where(sgn * a > 0, t, lo)
        hi = np.where(sgn * a < 0, t, hi)
        # d/dt Ai(-t) = -Ai'(-t)
        cand = t + a / ap
        bad = ~((cand > lo) & (cand < hi))
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        step = np.abs(cand - t)
        t = np.where(done, t, cand)
        done |= step <= 4.0 * np.spacing(t)
        if done.all():
            break
    if not done.all():
        # rounding-level oscillation is acceptable once the residual is at the floor
        a, ap, err = _airy_with_error(-t)
        done |= np.abs(a) <= np.maximum(tol, _residual_floor(t, ap, err))
    if not done.all():
        bad_m = m[~done]
        raise ConvergenceError(
            "Airy zero refinement did not converge",
            m=bad_m.tolist()[:5],
            iterations=max_iter,
            last_t=t[~done].tolist()[:5],
        )
    a, ap, err = _airy_with_error(-t)
    return t, seed, np.abs(a), np.maximum(tol, _residual_floor(t, ap, err))


def airy_zero(m: int, tol: float = 1e-12, max_iter: int = 100) -> float:
    """The m-th zero t_m of Ai(-t), refined from the principal-symbol seed."""
    if int(m) != m or m < 1:
        raise DomainError(f"zero index must be a positive integer, got {m!r}")
    t, _, _, _ = _refine_zeros(np.array([float(m)]), tol, max_iter)
    return float(t[0])


@dataclass(frozen=True, eq=False)
class AiryZeroTable:
    """Refined zeros t_1 < ... < t_M of Ai(-t).

    ``residuals`` holds |Ai(-t_m)| as evaluated; ``limits`` the per-entry
    acceptance level (the larger of ``refinement_tol`` and the
    representability floor |Ai'(-t_m)| ulp(t_m)).
    """

    zeros: np.ndarray
    seeds: np.ndarray
    residuals: np.ndarray
    limits: np.ndarray
    refinement_tol: float

    def __post_init__(self):
        for name in ("zeros", "seeds", "residuals", "limits"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return int(self.zeros.size)

    def t(self, m):
        """t_m for 1-based m (int or integer array) within the table."""
        m_arr = np.asarray(m)
        if np.any(m_arr < 1) or np.any(m_arr > len(self)):
            raise DomainError(f"zero index outside table of size {len(self)}")
        out = self.zeros[m_arr - 1]
        return float(out) if np.ndim(out) == 0 else out

    def t_extended(self, m):
        """Certified zeros inside the table, tau's expansion beyond it."""
        m_arr = np.asarray(m, dtype=np.int64)
        if np.any(m_arr < 1):
            raise DomainError("zero index must be >= 1")
        inside = m_arr <= len(self)
        out = np.where(inside, self.zeros[np.clip(m_arr, 1, len(self)) - 1], tau_asymptotic(m_arr))
        return float(out) if np.ndim(out) == 0 else out

    def extended(self, m_max):
        if m_max <= len(self):
            return self
        return zero_table(m_max, tol=self.refinement_tol, _prefix=self)

    def is_valid(self):
        return bool(
            np.all(np.diff(self.zeros) > 0)
            and np.all(self.residuals <= self.limits)
            and np.all(self.zeros > 0)
        )

    def rows(self):
        m = np.arange(1, len(self) + 1)
        return [(int(i), float(t), float(s), float(r)) for i, t, s, r in zip(m, self.zeros, self.seeds, self.residuals)]

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(f"# refinement_tol={self.refinement_tol!r}\n")
            writer = csv.writer(fh)
            writer.writerow(["m", "t_m", "seed", "residual"])
            for m, t, s, r in self.rows():
                writer.writerow([m, repr(t), repr(s), repr(r)])

    @classmethod
    def load_csv(cls, path, tol=1e-12):
        """Load a cached table and re-verify every residual."""
        rows = []
        with open(Path(path)) as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        for rec in csv.DictReader(lines):
            rows.append((int(rec["m"]), float(rec["t_m"]), float(rec["seed"])))
        if not rows or [r[0] for r in rows] != list(range(1, len(rows) + 1)):
            raise DomainError(f"zero cache {path} is not a contiguous 1..M table")
        t = np.array([r[1] for r in rows])
        a, ap, err = _airy_with_error(-t)
        limits = np.maximum(tol, _residual_floor(t, ap, err))
        table = cls(t, np.array([r[2] for r in rows]), np.abs(a), limits, tol)
        if not table.is_valid():
            raise ConvergenceError(f"zero cache {path} failed re-verification")
        return table


def zero_table(M_max: int, tol: float = 1e-12, _prefix: AiryZeroTable | None = None) -> AiryZeroTable:
    """Refine t_1..t_M in one vectorised pass."""
    if int(M_max) != M_max or M_max < 1:
        raise DomainError(f"table size must be a positive integer, got {M_max!r}")
    start = 1 if _prefix is None else len(_prefix) + 1
    m = np.arange(start, int(M_max) + 1, dtype=np.float64)
    t, seed, res, lim = _refine_zeros(m, tol, 100)
    if _prefix is not None:
        t = np.concatenate([_prefix.zeros, t])
        seed = np.concatenate([_prefix.seeds, seed])
        res = np.concatenate([_prefix.residuals, res])
        lim = np.concatenate([_prefix.limits, lim])
    table = AiryZeroTable(t, seed, res, lim, tol)
    if not np.all(np.diff(table.zeros) > 0):
        raise ConvergenceError("refined zeros are not strictly increasing")
    return table
