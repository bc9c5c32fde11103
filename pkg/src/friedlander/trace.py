"""Mollified wave trace of the Friedlander model and its diagnostics.

The trace sum_{m >= 1, n != 0} exp(i t sqrt(lambda(m, n))) is a distribution;
here it is rendered as

    Z(t) = 2 sum_{m, n >= 1} w(sqrt(lambda) / Lambda) chi(m, n) exp(i t sqrt(lambda))

with w(u) = exp(-u^2) (the default) or the indicator of u <= 1. A Gaussian
frequency window is a convolution in t with a Gaussian of width ~1/Lambda,
so singularities of the trace show up as peaks of height growing with Lambda.
The factor 2 accounts for n < 0 and is kept in every sector trace, so the
three sector traces add up to Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _lattice
from .errors import DomainError, SamplingError, TableExhaustedError
from .geodesics import TWO_PI, LengthSpectrumTable, exact_gap
from .special_fn import AiryZeroTable, zero_table

__all__ = [
    "AsymmetryRow",
    "ConePartition",
    "Peak",
    "TraceRequest",
    "TraceResult",
    "cutoff_tail_bound",
    "find_peaks",
    "match_peaks",
    "poisson_check",
    "sector_trace",
    "smoothness_asymmetry",
    "windowed_trace",
]

SECTORS = {"all": 0, "gamma1": 1, "gamma2": 2, "gamma3": 3}
MOLLIFIERS = ("gaussian_freq", "sharp_energy")
PHASES = {"friedlander": _lattice.PHASE_FRIEDLANDER, "flat": _lattice.PHASE_FLAT}
# zeros beyond this index come from tau's asymptotic expansion (relative
# agreement with refined zeros is < 1e-13 from m ~ 200 on)
CERTIFIED_ZEROS = 4096


def _smooth_step(x):
    return np.vectorize(_lattice._py(_lattice._smooth_step), otypes=[float])(x)


@dataclass(frozen=True)
class ConePartition:
    """Smooth partition of the open quadrant into three cones.

    In the ratio rho = xi/eta, chi1 switches off over
    [kappa1 2^-w, kappa1] and chi3 switches on over [kappa2, kappa2 2^w],
    with w = ``transition_width`` (in octaves). Hence chi1 lives in
    {xi < kappa1 eta}, chi3 in {xi > kappa2 eta} and chi2 in
    {kappa1/2 eta < xi < 2 kappa2 eta}.
    """

    kappa1: float = 0.25
    kappa2: float = 4.0
    transition_width: float = 0.75

    def __post_init__(self):
        if not (0 < self.kappa1 < self.kappa2):
            raise DomainError("need 0 < kappa1 < kappa2")
        if not (0 < self.transition_width < 1):
            raise DomainError("transition_width must lie in (0, 1)")

    def _steps(self, xi, eta):
        lr = np.log(np.asarray(xi, dtype=np.float64) / np.asarray(eta, dtype=np.float64))
        wl = self.transition_width * math.log(2.0)
        s1 = _smooth_step((lr - math.log(self.kappa1)) / wl + 1.0)
        s3 = _smooth_step((lr - math.log(self.kappa2)) / wl)
        return s1, s3

    def chi(self, j, xi, eta):
        s1, s3 = self._steps(xi, eta)
        return {1: 1.0 - s1, 2: s1 - s3, 3: s3}[j]

    def chis(self, xi, eta):
        s1, s3 = self._steps(xi, eta)
        return 1.0 - s1, s1 - s3, s3

    @staticmethod
    def psi(x):
        """Radial cutoff: 0 for x <= 1/2, 1 for x >= 1."""
        return _smooth_step(2.0 * np.asarray(x, dtype=np.float64) - 1.0)


@dataclass(frozen=True)
class TraceRequest:
    t_grid: np.ndarray
    freq_cutoff: float
    mollifier: str = "gaussian_freq"
    sector: str = "all"
    cone_params: ConePartition = field(default_factory=ConePartition)
    phase: str = "friedlander"
    window_extent: float = 6.0

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.t_grid, dtype=np.float64))
        t.setflags(write=False)
        object.__setattr__(self, "t_grid", t)
        if not self.freq_cutoff > 0:
            raise DomainError("frequency cutoff must be positive")
        if self.mollifier not in MOLLIFIERS:
            raise DomainError(f"mollifier must be one of {MOLLIFIERS}")
        if self.sector not in SECTORS:
            raise DomainError(f"sector must be one of {tuple(SECTORS)}")
        if self.phase not in PHASES:
            raise DomainError(f"phase must be one of {tuple(PHASES)}")
        if np.any(~np.isfinite(t)) or np.any(np.diff(t) < 0):
            raise DomainError("t_grid must be finite and non-decreasing")

    @property
    def nyquist_spacing(self) -> float:
        return math.pi / (4.0 * self.freq_cutoff)

    def check_sampling(self):
        if self.t_grid.size > 1:
            h = float(np.max(np.diff(self.t_grid)))
            if h > self.nyquist_spacing * (1 + 1e-12):
                raise SamplingError(
                    f"t spacing {h:.6g} exceeds pi/(4*cutoff) = {self.nyquist_spacing:.6g}; "
                    "refine the grid or lower the cutoff"
                )

    @property
    def energy_cut(self) -> float:
        """Largest lambda summed over."""
        if self.mollifier == "sharp_energy":
            return self.freq_cutoff ** 2
        return (self.window_extent * self.freq_cutoff) ** 2


@dataclass(frozen=True)
class TraceResult:
    t_grid: np.ndarray
    values: np.ndarray
    lattice_count: int
    cutoff_used: float

    @property
    def abs(self) -> np.ndarray:
        return np.abs(self.values)


def _table_for(req: TraceRequest, zeros: AiryZeroTable | None) -> np.ndarray:
    if req.phase == "flat":
        return np.zeros(0)
    cut = req.energy_cut
    need = min(CERTIFIED_ZEROS, int(cut ** 1.5 / (1.5 * math.pi)) + 2)
    if zeros is None:
        zeros = zero_table(max(need, 1))
    elif len(zeros) < need:
        zeros = zeros.extended(need)
    if len(zeros) < min(need, 200):
        raise TableExhaustedError("zero table too short for the asymptotic tail to take over")
    return zeros.zeros


class TraceEngine:
    """Accumulated bin moments for one request, reusable on any t with |t| <= t_max."""

    def __init__(self, req: TraceRequest, zeros: AiryZeroTable | None = None, t_max: float | None = None,
                 sector: str | None = None, use_numba: bool | None = None):
        self.req = req
        if t_max is None:
            t_max = float(np.max(np.abs(req.t_grid))) if req.t_grid.size else 1.0
        self.t_max = max(t_max, 1.0)
        self.hb = 0.5 / self.t_max
        cp = req.cone_params
        self.moments, self.count = _lattice.binned_moments(
            PHASES[req.phase], _table_for(req, zeros), req.energy_cut, req.freq_cutoff,
            req.mollifier == "gaussian_freq", SECTORS[sector or req.sector],
            cp.kappa1, cp.kappa2, cp.transition_width, self.hb, use_numba=use_numba,
        )

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if t.size and np.max(np.abs(t)) > self.t_max * (1 + 1e-12):
            raise DomainError(f"engine built for |t| <= {self.t_max}")
        return _lattice.evaluate_moments(self.moments, self.hb, t)


def windowed_trace(req: TraceRequest, zeros: AiryZeroTable | None = None, engine: str = "binned",
                   use_numba: bool | None = None) -> TraceResult:
    """Evaluate the mollified trace on ``req.t_grid``.

    ``engine="direct"`` sums exp(i t w) point by point; it is the slow oracle
    for the default binned engine.
    """
    req.check_sampling()
    cut = req.energy_cut
    if engine == "direct":
        cp = req.cone_params
        vals, count = _lattice.direct_sum(
            PHASES[req.phase], _table_for(req, zeros), cut, req.freq_cutoff,
            req.mollifier == "gaussian_freq", SECTORS[req.sector],
            cp.kappa1, cp.kappa2, cp.transition_width, req.t_grid,
        )
    elif engine == "binned":
        eng = TraceEngine(req, zeros, use_numba=use_numba)
        vals, count = eng(req.t_grid), eng.count
    else:
        raise DomainError("engine must be 'binned' or 'direct'")
    return TraceResult(req.t_grid, vals, count, math.sqrt(cut))


def sector_trace(j: int, req: TraceRequest, zeros: AiryZeroTable | None = None, **kw) -> TraceResult:
    """I_j: the trace restricted by the j-th cone cutoff."""
    if j not in (1, 2, 3):
        raise DomainError("sector index must be 1, 2 or 3")
    sub = TraceRequest(req.t_grid, req.freq_cutoff, req.mollifier, f"gamma{j}", req.cone_params,
                       req.phase, req.window_extent)
    return windowed_trace(sub, zeros, **kw)


def cutoff_tail_bound(freq_cutoff: float, window_extent: float = 6.0) -> float:
    """Bound on the discarded window mass 2 sum_{sqrt(lambda) > U Lambda} exp(-lambda / Lambda^2).

    The quadrant count satisfies N(E) <= E^(3/2) (it is ~ (pi/9) E^(3/2)),
    so partial summation gives tail <= 2 Lambda^3 int_{U^2}^inf s^(3/2) e^-s ds,
    and for a = U^2 >= 3 that integral is <= a^(3/2) e^-a / (1 - 3/(2a)).
    """
    a = window_extent ** 2
    if a < 3:
        raise DomainError("window extent too small for the tail estimate")
    return 2.0 * freq_cutoff ** 3 * a ** 1.5 * math.exp(-a) / (1.0 - 1.5 / a)


class Peak(NamedTuple):
    t: float
    height: float
    k: int | None = None
    ell: int | None = None
    offset: float | None = None


def find_peaks(t, values, floor_factor: float = 5.0) -> list[Peak]:
    """Three-point local maxima of |values| above floor_factor * median."""
    t = np.asarray(t, dtype=np.float64)
    a = np.abs(np.asarray(values))
    if a.size < 3:
        return []
    floor = floor_factor * float(np.median(a))
    mid = a[1:-1]
    idx = np.nonzero((mid > a[:-2]) & (mid >= a[2:]) & (mid > floor))[0] + 1
    return [Peak(float(t[i]), float(a[i])) for i in idx]


def match_peaks(peaks, table: LengthSpectrumTable, tol: float) -> list[Peak]:
    """Attach the nearest table length to each peak (k, ell = None if farther than tol)."""
    L = table.lengths()
    out = []
    for p in peaks:
        i = int(np.argmin(np.abs(L - p.t)))
        off = float(p.t - L[i])
        g = table.entries[i]
        if abs(off) <= tol:
            out.append(Peak(p.t, p.height, g.k, g.ell, off))
        else:
            out.append(Peak(p.t, p.height, None, None, off))
    return out


def poisson_check(A=((1.0, 0.0), (0.0, 1.0)), a=(0.0, 0.0), tail: float = 1e-17):
    """Compare sum_{Z^2} g with sum_{Z^2} g_hat for a Gaussian g.

    g(x) = exp(-pi (x - a)^T A (x - a)) with A symmetric positive definite;
    under the transform int g(x) exp(-2 pi i x.w) dx,
    g_hat(w) = det(A)^(-1/2) exp(-pi w^T A^-1 w) exp(-2 pi i w.a).
    Both sums are truncated where the Gaussian factor drops below ``tail``.
    Returns (lhs, rhs, gap) with rhs complex in general.
    """
    A = np.asarray(A, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if A.shape != (2, 2) or not np.allclose(A, A.T):
        raise DomainError("A must be a symmetric 2x2 matrix")
    ev = np.linalg.eigvalsh(A)
    if ev.min() <= 0:
        raise DomainError("A must be positive definite: slowly decaying inputs are rejected")
    Ainv = np.linalg.inv(A)
    evi = np.linalg.eigvalsh(Ainv)
    depth = -math.log(tail) / math.pi
    r_x = math.sqrt(depth / ev.min()) + float(np.abs(a).max()) + 1
    r_w = math.sqrt(depth / evi.min()) + 1
    if r_x > 2000 or r_w > 2000:
        raise DomainError("Gaussian too wide or too narrow for direct summation")

    def grid(r):
        k = np.arange(-int(r), int(r) + 1, dtype=np.float64)
        X, Y = np.meshgrid(k, k, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()])

    x = grid(r_x) - a[:, None]
    lhs = math.fsum(np.exp(-math.pi * np.einsum("ik,ij,jk->k", x, A, x)))
    w = grid(r_w)
    amp = np.exp(-math.pi * np.einsum("ik,ij,jk->k", w, Ainv, w)) / math.sqrt(np.linalg.det(A))
    ph = -2.0 * math.pi * (a @ w)
    rhs = complex(math.fsum(amp * np.cos(ph)), math.fsum(amp * np.sin(ph)))
    return lhs, rhs, abs(lhs - rhs)


class AsymmetryRow(NamedTuple):
    cutoff: float
    left: float
    right: float

    @property
    def ratio(self) -> float:
        return self.left / self.right


def smoothness_asymmetry(ell: int, delta: float, cutoffs, zeros: AiryZeroTable | None = None,
                         phase: str = "friedlander", use_numba: bool | None = None) -> list[AsymmetryRow]:
    """Left/right roughness of Re Z_Lambda around t = 2 pi ell.

    For each cutoff the grid has spacing h = 1/(4 Lambda) and the metric is
    max |Re Z(t+h) - 2 Re Z(t) + Re Z(t-h)| / h^2 over
    [2 pi ell - delta, 2 pi ell - delta/8] (left) and
    [2 pi ell + delta/8, 2 pi ell + delta] (right).
    """
    cutoffs = [float(c) for c in cutoffs]
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise DomainError("cutoffs must be increasing")
    if phase == "friedlander":
        gap = exact_gap(ell)
        if not delta < gap:
            raise DomainError(f"delta = {delta} is not below the verified gap {gap:.6g} above 2*pi*{ell}")
    centre = TWO_PI * ell
    rows = []
    for lam in cutoffs:
        h = 1.0 / (4.0 * lam)
        n = int(math.ceil(delta / h)) + 1
        t = centre + h * np.arange(-n, n + 1)
        req = TraceRequest(t, lam, phase=phase)
        z = windowed_trace(req, zeros, use_numba=use_numba).values.real
        d2 = np.abs(z[2:] - 2.0 * z[1:-1] + z[:-2]) / (h * h)
        tc = t[1:-1]
        left = (tc >= centre - delta) & (tc <= centre - delta / 8)
        right = (tc >= centre + delta / 8) & (tc <= centre + delta)
        rows.append(AsymmetryRow(lam, float(d2[left].max()), float(d2[right].max())))
    return rows
