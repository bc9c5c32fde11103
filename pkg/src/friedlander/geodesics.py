"""Billiard flow of the Friedlander metric and its closed geodesics.

Unit-speed geodesics solve x' = xi, y' = (1 + x) eta, xi' = -eta^2 / 2,
eta' = 0 on the energy level xi^2 + (1 + x) eta^2 = 1, and reflect at x = 0
by flipping xi. Each arc is an explicit cubic in t, so production code never
integrates an ODE; :func:`integrate_flow` exists as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, TableExhaustedError

__all__ = [
    "ClosedGeodesic",
    "LengthSpectrumTable",
    "PhasePoint",
    "Trajectory",
    "arc_state",
    "closed_geodesic",
    "closed_geodesics",
    "exact_gap",
    "follow_arcs",
    "free_flight",
    "gap_below",
    "integrate_flow",
    "length_spectrum",
    "stationary_length",
    "trajectory_polyline",
]

TWO_PI = 2.0 * math.pi
_BS_CONST = (1.5 * math.pi) ** (2.0 / 3.0)


@dataclass(frozen=True)
class PhasePoint:
    x: float
    y: float
    xi: float
    eta: float

    def energy(self) -> float:
        return self.xi * self.xi + (1.0 + self.x) * self.eta * self.eta

    @classmethod
    def launch(cls, eta0: float, y: float = 0.0) -> "PhasePoint":
        """Boundary point with unit energy and xi0 = sqrt(1 - eta0^2) > 0."""
        if not 0.0 < abs(eta0) < 1.0:
            raise DomainError("launch needs 0 < |eta0| < 1")
        return cls(0.0, y, _xi_from_eta(eta0), float(eta0))


def _xi_from_eta(eta):
    return np.sqrt((1.0 - eta) * (1.0 + eta))


def arc_state(xi0, eta0, t):
    """Exact state (x, y - y0, xi) at time t along an arc leaving x = 0."""
    t = np.asarray(t, dtype=np.float64)
    e2 = eta0 * eta0
    x = xi0 * t - 0.25 * e2 * t * t
    y = eta0 * t + 0.5 * eta0 * xi0 * t * t - e2 * eta0 * t ** 3 / 12.0
    xi = xi0 - 0.5 * e2 * t
    return x, y, xi


def free_flight(start: PhasePoint, tol: float = 1e-12):
    """Follow one arc from the boundary back to it.

    Returns ``(endpoint, T, delta_y)`` with T = 4 xi0/eta0^2 and
    delta_y = 4 xi0/eta0 + (8/3) xi0^3/eta0^3. The endpoint carries the
    incoming covector (-xi0, eta0).
    """
    if start.x != 0.0:
        raise DomainError("free flight starts on the boundary x = 0")
    if not start.xi > 0.0:
        raise DomainError("launch needs xi0 > 0 (xi0 < 0 is the time-reversed arc)")
    if start.eta == 0.0:
        raise DomainError("eta0 = 0: the ray escapes to x = infinity and never reflects")
    if abs(start.energy() - 1.0) > tol:
        raise DomainError(f"start is off the unit energy level by {start.energy() - 1.0:.3g}")
    xi0, eta0 = start.xi, start.eta
    r = xi0 / eta0
    T = 4.0 * xi0 / (eta0 * eta0)
    dy = 4.0 * r + (8.0 / 3.0) * r ** 3
    return PhasePoint(0.0, start.y + dy, -xi0, eta0), T, dy


def follow_arcs(eta0: float, k: int, y0: float = 0.0):
    """Chain k reflected arcs; returns (total time, total delta_y, final point).

    After each bounce the outgoing covector equals the launch covector, so
    the chain is k copies of one arc. Arcs are accumulated one by one rather
    than multiplied, to mimic an actual billiard run.
    """
    p = PhasePoint.launch(eta0, y0)
    total_t = 0.0
    total_y = 0.0
    for _ in range(int(k)):
        end, T, dy = free_flight(p)
        total_t += T
        total_y += dy
        p = PhasePoint(0.0, end.y, -end.xi, end.eta)
    return total_t, total_y, p


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    bounce_times: list = field(default_factory=list)

    def energy_drift(self) -> float:
        e = self.xi ** 2 + (1.0 + self.x) * self.eta ** 2
        return float(np.max(np.abs(e - e[0])))


def integrate_flow(start: PhasePoint, t_end: float, reflect: bool = True, rtol: float = 1e-12, atol: float = 1e-13):
    """Adaptive Runge-Kutta integration of the billiard flow (oracle only)."""
    from scipy.integrate import solve_ivp

    if abs(start.energy() - 1.0) > 1e-12:
        raise DomainError("integrate_flow needs a unit-energy start")
    if start.x < 0:
        raise DomainError("start lies outside the domain x >= 0")

    def rhs(_t, u):
        x, _y, xi, eta = u
        return [xi, (1.0 + x) * eta, -0.5 * eta * eta, 0.0]

    def hit(_t, u):
        return u[0]

    hit.terminal = True
    hit.direction = -1

    ts, us, bounces = [np.array([0.0])], [np.array([[start.x, start.y, start.xi, start.eta]]).T], []
    t0, u0 = 0.0, np.array([start.x, start.y, start.xi, start.eta])
    while t0 < t_end:
        sol = solve_ivp(rhs, (t0, t_end), u0, method="DOP853", rtol=rtol, atol=atol, events=hit if reflect else None)
        if sol.status == -1:
            raise ConvergenceError("integration failed (step size underflow near a tangential reflection)", t=t0)
        ts.append(sol.t[1:])
        us.append(sol.y[:, 1:])
        if sol.status == 1 and sol.t_events[0].size:
            tb = float(sol.t_events[0][0])
            ub = sol.y_events[0][0].copy()
            if tb - t0 <= 1e-14 * max(1.0, t0):
                raise ConvergenceError("zero-length arc; launch is tangential", t=tb)
            ub[0] = 0.0
            ub[2] = -ub[2]
            bounces.append(tb)
            t0, u0 = tb, ub
        else:
            break
    u = np.concatenate(us, axis=1)
    return Trajectory(np.concatenate(ts), u[0], u[1], u[2], u[3], bounces)


@dataclass(frozen=True)
class ClosedGeodesic:
    k: int
    ell: int
    eta0: float
    xi0: float
    length: float

    def residuals(self) -> tuple[float, float]:
        """Relative residuals of the two defining equations."""
        e = self.eta0
        r1 = self.length * e * e / self.xi0 / (4.0 * self.k) - 1.0
        r2 = self.length * (e / 3.0 + 2.0 / (3.0 * e)) / (TWO_PI * self.ell) - 1.0
        return r1, r2


def _ratio(eta):
    # g(eta) = 3 eta^3 / ((eta^2 + 2) sqrt(1 - eta^2)), increasing (0,1) -> (0,inf)
    return 3.0 * eta ** 3 / ((eta * eta + 2.0) * _xi_from_eta(eta))


def _solve_eta(target):
    target = np.asarray(target, dtype=np.float64)
    lo = np.zeros_like(target)
    hi = np.ones_like(target)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        up = _ratio(mid) < target
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    # pick whichever endpoint has the smaller residual
    rl = np.abs(_ratio(lo) - target)
    rh = np.abs(np.where(hi < 1.0, _ratio(np.minimum(hi, np.nextafter(1.0, 0.0))), np.inf) - target)
    return np.where(rl <= rh, lo, hi)


def closed_geodesics(k, ell):
    """Vectorised (eta0, xi0, length) for arrays of (k, ell)."""
    k = np.asarray(k, dtype=np.float64)
    ell = np.asarray(ell, dtype=np.float64)
    if np.any(k < 1) or np.any(ell < 1) or np.any(k != np.floor(k)) or np.any(ell != np.floor(ell)):
        raise DomainError("k and ell must be positive integers")
    eta = _solve_eta(2.0 * k / (math.pi * ell))
    length = 6.0 * math.pi * ell * eta / (eta * eta + 2.0)
    return eta, _xi_from_eta(eta), length


def closed_geodesic(k: int, ell: int) -> ClosedGeodesic:
    eta, xi, length = closed_geodesics(k, ell)
    return ClosedGeodesic(int(k), int(ell), float(eta), float(xi), float(length))


def _f0_grad(rho):
    # gradient of F0 at (xi, eta) = (rho, 1); F0 is 1-homogeneous so this is the
    # gradient along the whole ray
    r13 = np.cbrt(rho)
    f0 = np.sqrt(1.0 + _BS_CONST * r13 * r13)
    dxi = _BS_CONST / (3.0 * r13 * f0)
    deta = (1.0 + 2.0 / 3.0 * _BS_CONST * r13 * r13) / f0
    return dxi, deta


def stationary_length(k: int, ell: int) -> float:
    """L_{k,ell} from the stationary condition T grad F0 = 2 pi (k, ell).

    Independent of :func:`closed_geodesic`: solves for the ray direction
    rho = xi/eta where dF0/dxi : dF0/deta = k : ell, then T = 2 pi k / dF0/dxi.
    """
    if k < 1 or ell < 1:
        raise DomainError("k and ell must be positive")
    target = k / ell
    lo, hi = -60.0, 60.0  # log rho; the ratio is decreasing in rho
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        dxi, deta = _f0_grad(math.exp(mid))
        if dxi / deta > target:
            lo = mid
        else:
            hi = mid
    dxi, _ = _f0_grad(math.exp(0.5 * (lo + hi)))
    return float(TWO_PI * k / dxi)


@dataclass(frozen=True)
class LengthSpectrumTable:
    entries: tuple
    k_max: int
    ell_max: int

    def lengths(self) -> np.ndarray:
        return np.array([g.length for g in self.entries])

    def for_ell(self, ell: int) -> list:
        return sorted((g for g in self.entries if g.ell == ell), key=lambda g: g.k)

    def nearest(self, value: float) -> ClosedGeodesic:
        L = self.lengths()
        return self.entries[int(np.argmin(np.abs(L - value)))]

    def in_window(self, a: float, b: float) -> list:
        return [g for g in self.entries if a <= g.length <= b]


def length_spectrum(k_max: int, ell_max: int, dedupe_tol: float = 1e-9) -> LengthSpectrumTable:
    """All L_{k,ell} with k <= k_max, ell <= ell_max, sorted by length."""
    if k_max < 1 or ell_max < 1:
        raise DomainError("bounds must be >= 1")
    kk, ll = np.meshgrid(np.arange(1, k_max + 1), np.arange(1, ell_max + 1), indexing="ij")
    kk, ll = kk.ravel(), ll.ravel()
    eta, xi, length = closed_geodesics(kk, ll)
    order = np.lexsort((kk, ll, length))
    entries = []
    last = -math.inf
    for i in order:
        if length[i] - last <= dedupe_tol:
            continue
        entries.append(ClosedGeodesic(int(kk[i]), int(ll[i]), float(eta[i]), float(xi[i]), float(length[i])))
        last = length[i]
    return LengthSpectrumTable(tuple(entries), int(k_max), int(ell_max))


def gap_below(ell: int, table: LengthSpectrumTable) -> float:
    """Estimate of eps_ell: distance from 2 pi ell up to the next table length."""
    edge = TWO_PI * ell
    above = [g.length for g in table.entries if g.length > edge]
    if not above:
        raise TableExhaustedError(f"no table length above 2*pi*{ell}; raise ell_max")
    return float(min(above) - edge)


def _first_above(ell_p, edge):
    # smallest k with L_{k,ell_p} > edge; lengths increase in k towards 2 pi ell_p
    if closed_geodesics(1, ell_p)[2] > edge:
        return 1
    hi = 2
    while closed_geodesics(hi, ell_p)[2] <= edge:
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if closed_geodesics(mid, ell_p)[2] > edge:
            hi = mid
        else:
            lo = mid
    return hi


def exact_gap(ell: int, max_ell: int = 10_000):
    """eps_ell = inf{L in L_F : L > 2 pi ell} - 2 pi ell, without a k cutoff.

    Only ell' > ell contribute. For each ell' the first length above 2 pi ell is
    found by bisection in k; the scan stops once L_{1,ell'} (which grows with
    ell') exceeds the best candidate.
    """
    edge = TWO_PI * ell
    best = math.inf
    for ell_p in range(ell + 1, max_ell):
        first = float(closed_geodesics(1, ell_p)[2])
        if first - edge >= best:
            return best
        k = _first_above(ell_p, edge)
        best = min(best, float(closed_geodesics(k, ell_p)[2]) - edge)
    raise TableExhaustedError("gap scan did not terminate")


def trajectory_polyline(g: ClosedGeodesic, samples_per_arc: int = 64):
    """(t, x, y) samples along the closed geodesic, y unwrapped."""
    T = 4.0 * g.xi0 / (g.eta0 * g.eta0)
    s = np.linspace(0.0, T, samples_per_arc + 1)[:-1]
    x, dy, _ = arc_state(g.xi0, g.eta0, s)
    _, arc_dy, _ = arc_state(g.xi0, g.eta0, T)
    ts, xs, ys = [], [], []
    for j in range(g.k):
        ts.append(s + j * T)
        xs.append(x)
        ys.append(dy + j * float(arc_dy))
    ts.append([g.k * T])
    xs.append([0.0])
    ys.append([g.k * float(arc_dy)])
    return np.concatenate(ts), np.concatenate(xs), np.concatenate(ys)
