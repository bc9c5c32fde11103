"""Empirical symbol estimates for the Friedlander phase.

The phase is F(xi, eta) = sqrt(eta^2 + eta^(4/3) tau(xi)), with tau obtained
by inverting theta (never by interpolating the zero table), and
G = F - eta. A claim "a in Sigma^{alpha,beta}(Gamma)" is tested by sampling
dyadic shells 2^s <= |(xi, eta)| < 2^(s+1) inside the cone, estimating
derivatives by Richardson-extrapolated central differences with steps
proportional to (1 + coordinate), and normalising by
(1 + xi)^(alpha - j) (1 + eta)^(beta - k). Constants are fitted on the lower
shells and validated on the top one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, FriedlanderError
from .special_fn import PHASE, theta_inverse, theta_prime

__all__ = [
    "CONES",
    "DEFAULT_CLAIMS",
    "NEGATIVE_CONTROLS",
    "Claim",
    "FitError",
    "GridSpec",
    "SymbolEstimate",
    "check_classical_symbol",
    "check_elliptic",
    "check_sigma_bound",
    "finite_diff_derivative",
    "parse_claim",
    "run_claim",
    "shell_points",
    "SYMBOLS",
    "verdict",
]

BS_CONST = (1.5 * math.pi) ** (2.0 / 3.0)
_XI_MIN = PHASE.branch_base / math.pi  # tau needs xi above theta(1/4)/pi


class FitError(FriedlanderError):
    """Derivative data carry no signal (identically zero up to rounding)."""


# ---------------------------------------------------------------- symbols

def _tau_and_s(xi):
    s = theta_inverse(math.pi * np.asarray(xi, dtype=np.float64))
    return np.cbrt(s) ** 2, s


def phase_F(xi, eta):
    tau, _ = _tau_and_s(xi)
    eta = np.asarray(eta, dtype=np.float64)
    return np.sqrt(eta * eta + np.cbrt(eta) ** 4 * tau)


def phase_G(xi, eta):
    """F - eta without cancellation: eta^(4/3) tau / (F + eta)."""
    tau, _ = _tau_and_s(xi)
    eta = np.asarray(eta, dtype=np.float64)
    e43 = np.cbrt(eta) ** 4
    F = np.sqrt(eta * eta + e43 * tau)
    return e43 * tau / (F + eta)


def principal_F0(xi, eta):
    xi = np.asarray(xi, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    return np.sqrt(eta * eta + BS_CONST * np.cbrt(xi) ** 2 * np.cbrt(eta) ** 4)


def dG_deta(xi, eta):
    # d_eta F - 1 = (-2 G + (4/3) eta^(1/3) tau) / (2 F); the two terms only
    # cancel to a third, so no precision is lost
    tau, _ = _tau_and_s(xi)
    eta = np.asarray(eta, dtype=np.float64)
    e13 = np.cbrt(eta)
    e43 = e13 ** 4
    F = np.sqrt(eta * eta + e43 * tau)
    G = e43 * tau / (F + eta)
    return (-2.0 * G + (4.0 / 3.0) * e13 * tau) / (2.0 * F)


def dF_dxi(xi, eta):
    # tau'(xi) = (2/3) s^(-1/3) pi / theta'(s) with s = theta^-1(pi xi)
    tau, s = _tau_and_s(xi)
    eta = np.asarray(eta, dtype=np.float64)
    e43 = np.cbrt(eta) ** 4
    F = np.sqrt(eta * eta + e43 * tau)
    dtau = (2.0 / 3.0) * math.pi / (np.cbrt(s) * theta_prime(s))
    return e43 * dtau / (2.0 * F)


def F_minus_F0(xi, eta):
    tau, _ = _tau_and_s(xi)
    xi = np.asarray(xi, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    e43 = np.cbrt(eta) ** 4
    tau0 = BS_CONST * np.cbrt(xi) ** 2
    F = np.sqrt(eta * eta + e43 * tau)
    F0 = np.sqrt(eta * eta + e43 * tau0)
    return e43 * (tau - tau0) / (F + F0)


SYMBOLS = {
    "F": phase_F,
    "G": phase_G,
    "F0": principal_F0,
    "dGdeta": dG_deta,
    "dFdxi": dF_dxi,
    "F-F0": F_minus_F0,
    "xi": lambda xi, eta: np.asarray(xi, dtype=np.float64) + 0.0 * np.asarray(eta, dtype=np.float64),
    "eta": lambda xi, eta: np.asarray(eta, dtype=np.float64) + 0.0 * np.asarray(xi, dtype=np.float64),
}


# ---------------------------------------------------------------- cones

@dataclass(frozen=True)
class Cone:
    """Open cone lo < xi/eta < hi in the first quadrant."""

    name: str
    lo: float
    hi: float

    def contains(self, xi, eta, margin=0.0):
        rho = np.asarray(xi, dtype=np.float64) / np.asarray(eta, dtype=np.float64)
        return (rho > self.lo * math.exp(margin)) & (rho < self.hi * math.exp(-margin))


def cones(kappa1=0.25, kappa2=4.0):
    return {
        "gamma1": Cone("gamma1", 0.0, kappa1),
        "gamma2": Cone("gamma2", kappa1 / 2.0, 2.0 * kappa2),
        "gamma3": Cone("gamma3", kappa2, math.inf),
    }


CONES = cones()


# ---------------------------------------------------------------- derivatives

_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}
REL_STEP = 1e-3
# tau carries a period-1 ripple of relative size ~xi^-2 (the inverted phase
# is not exactly a classical symbol), so xi-steps are capped well below the
# period; otherwise relative steps near 1 alias it away on high shells
XI_STEP_CAP = 0.2


def _central(fn, j, k, xi, eta, hx, he):
    ox, wx = _STENCILS[j]
    oe, we = _STENCILS[k]
    acc = 0.0
    for a, ca in zip(ox, wx):
        for b, cb in zip(oe, we):
            acc = acc + ca * cb * fn(xi + a * hx, eta + b * he)
    return acc / (hx ** j * he ** k)


def fd_steps(j, k, xi, eta, rel_step=REL_STEP, xi_cap=XI_STEP_CAP):
    """Steps (h_xi, h_eta) proportional to (1 + coordinate).

    Third and fourth order stencils use a 20x larger factor so rounding stays
    below truncation (Richardson leaves an O(h^4) relative error, ~1e-5
    here); h_xi never exceeds ``xi_cap``.
    """
    if j + k >= 3:
        rel_step = 20.0 * rel_step
    hx = np.minimum(rel_step * (1.0 + xi), xi_cap)
    he = rel_step * (1.0 + eta)
    return hx, he


def finite_diff_derivative(fn, j, k, xi, eta, rel_step=REL_STEP, cone: Cone | None = None,
                           xi_cap=XI_STEP_CAP):
    """d^j/dxi^j d^k/deta^k fn at (xi, eta), vectorised over points.

    Steps come from :func:`fd_steps`; the second-order central estimate is
    Richardson-extrapolated from h and h/2.
    """
    if j < 0 or k < 0 or j + k > 4:
        raise DomainError("derivative orders must satisfy 0 <= j + k <= 4")
    xi = np.asarray(xi, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    hx, he = fd_steps(j, k, xi, eta, rel_step, xi_cap)
    if cone is not None:
        # the stencil reaches 2 steps out in each direction
        corners = [(xi + sx * 2 * hx, eta + se * 2 * he) for sx in (-1, 1) for se in (-1, 1)]
        if not all(np.all(cone.contains(x, e)) for x, e in corners):
            raise DomainError(f"stencil leaves cone {cone.name}; move the point inward")
    if j == 0 and k == 0:
        return fn(xi, eta)
    d1 = _central(fn, j, k, xi, eta, hx, he)
    d2 = _central(fn, j, k, xi, eta, 0.5 * hx, 0.5 * he)
    return (4.0 * d2 - d1) / 3.0


# ---------------------------------------------------------------- sampling

@dataclass(frozen=True)
class GridSpec:
    fit_shells: tuple = tuple(range(4, 11))
    validation_shells: tuple = (11,)
    n_radial: int = 4
    n_angular: int = 16
    margin: float = 0.15
    coord_min: float = 2.0

    @property
    def shells(self):
        return tuple(self.fit_shells) + tuple(self.validation_shells)


def shell_points(cone: Cone, s: int, grid: GridSpec):
    """Points with 2^s <= radius < 2^(s+1) inside the shrunk cone.

    Angles are spaced logarithmically in rho = xi/eta. For cones touching an
    axis the smaller coordinate runs down to ``grid.coord_min``.
    """
    r = 2.0 ** (s + (np.arange(grid.n_radial) + 0.5) / grid.n_radial)
    out_x, out_e = [], []
    for radius in r:
        lo = cone.lo * math.exp(grid.margin) if cone.lo > 0 else 2.0 * grid.coord_min / radius
        hi = cone.hi * math.exp(-grid.margin) if math.isfinite(cone.hi) else radius / (2.0 * grid.coord_min)
        if hi <= lo:
            continue
        rho = np.exp(np.linspace(math.log(lo), math.log(hi), grid.n_angular))
        eta = radius / np.sqrt(1.0 + rho * rho)
        out_x.append(rho * eta)
        out_e.append(eta)
    return np.concatenate(out_x), np.concatenate(out_e)


# ---------------------------------------------------------------- estimates

@dataclass
class SymbolEstimate:
    alpha: float
    beta: float
    order_j: int
    order_k: int
    fitted_constant: float
    max_violation_ratio: float
    cone: str
    shell_constants: dict = field(default_factory=dict)
    stable: bool = True
    vanishing: bool = False
    kind: str = "upper"

    @property
    def passed(self) -> bool:
        if self.vanishing:
            return True
        return self.max_violation_ratio <= VIOLATION_TOL

    @property
    def flagged(self) -> bool:
        """Passed, but the per-shell constants drift by STABILITY_TOL or more."""
        return self.passed and not self.vanishing and not self.stable

    @property
    def shell_ratios(self) -> list:
        """Per-shell constant divided by the fitted constant, by shell."""
        if self.fitted_constant == 0:
            return []
        keys = sorted(self.shell_constants)
        if self.kind == "lower":
            return [self.fitted_constant / self.shell_constants[s] for s in keys]
        return [self.shell_constants[s] / self.fitted_constant for s in keys]

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha, "beta": self.beta, "j": self.order_j, "k": self.order_k,
            "cone": self.cone, "kind": self.kind, "fitted_constant": self.fitted_constant,
            "max_violation_ratio": self.max_violation_ratio, "stable": self.stable,
            "vanishing": self.vanishing, "passed": self.passed, "flagged": self.flagged,
            "shell_constants": {str(s): c for s, c in sorted(self.shell_constants.items())},
        }


STABILITY_TOL = 0.20
VIOLATION_TOL = 1.1


def _noise_level(fn, xi, eta, j, k, rel_step):
    # rounding floor of the difference quotient, with a generous safety factor
    scale = np.abs(fn(xi, eta))
    hx, he = fd_steps(j, k, xi, eta, rel_step)
    return 1e3 * np.finfo(float).eps * (scale + 1.0) / (hx ** j * he ** k)


def _estimate(fn, j, k, weight, cone, grid, rel_step, kind):
    per_shell = {}
    for s in grid.shells:
        xi, eta = shell_points(cone, s, grid)
        d = finite_diff_derivative(fn, j, k, xi, eta, rel_step, cone)
        noise = _noise_level(fn, xi, eta, j, k, rel_step)
        q = np.abs(d) / weight(xi, eta)
        if kind == "lower":
            if np.any(d <= noise):
                per_shell[s] = 0.0
            else:
                per_shell[s] = float(np.min(d / weight(xi, eta)))
        else:
            per_shell[s] = float(np.max(q)) if np.any(np.abs(d) > noise) else 0.0
    fit = [per_shell[s] for s in grid.fit_shells]
    val = [per_shell[s] for s in grid.validation_shells]
    if kind == "lower":
        c = min(fit)
        if c <= 0:
            return SymbolEstimate(0, 0, j, k, 0.0, math.inf, cone.name, per_shell, False, False, kind)
        ratio = max(c / v if v > 0 else math.inf for v in val)
        stable = max(fit) / min(fit) - 1.0 < STABILITY_TOL
        return SymbolEstimate(0, 0, j, k, c, ratio, cone.name, per_shell, stable, False, kind)
    c = max(fit)
    if c == 0.0 and max(val) == 0.0:
        return SymbolEstimate(0, 0, j, k, 0.0, 0.0, cone.name, per_shell, True, True, kind)
    if c == 0.0:
        return SymbolEstimate(0, 0, j, k, 0.0, math.inf, cone.name, per_shell, False, False, kind)
    ratio = max(val) / c
    nz = [v for v in fit if v > 0]
    stable = len(nz) == len(fit) and max(nz) / min(nz) - 1.0 < STABILITY_TOL
    return SymbolEstimate(0, 0, j, k, c, ratio, cone.name, per_shell, stable, False, kind)


def _cone(cone):
    if isinstance(cone, Cone):
        return cone
    try:
        return CONES[cone]
    except KeyError:
        raise DomainError(f"unknown cone {cone!r}; use one of {tuple(CONES)}") from None


def check_sigma_bound(fn, alpha, beta, j_max, k_max, cone, grid: GridSpec | None = None,
                      rel_step=REL_STEP) -> list[SymbolEstimate]:
    """Product-type bounds |d_xi^j d_eta^k fn| <= C (1+xi)^(alpha-j) (1+eta)^(beta-k)."""
    grid = grid or GridSpec()
    cone = _cone(cone)
    out = []
    for j in range(j_max + 1):
        for k in range(k_max + 1):
            if j + k > 4:
                continue

            def weight(x, e, j=j, k=k):
                return (1.0 + x) ** (alpha - j) * (1.0 + e) ** (beta - k)

            est = _estimate(fn, j, k, weight, cone, grid, rel_step, "upper")
            est.alpha, est.beta = float(alpha), float(beta)
            out.append(est)
    if all(e.vanishing for e in out):
        raise FitError("every derivative vanishes on the grid; nothing to fit")
    return out


def check_elliptic(fn, alpha, beta, cone, grid: GridSpec | None = None) -> SymbolEstimate:
    """Lower bound fn >= c (1+xi)^alpha (1+eta)^beta with c > 0 (order 0)."""
    grid = grid or GridSpec()
    cone = _cone(cone)

    def weight(x, e):
        return (1.0 + x) ** alpha * (1.0 + e) ** beta

    est = _estimate(fn, 0, 0, weight, cone, grid, REL_STEP, "lower")
    est.alpha, est.beta = float(alpha), float(beta)
    return est


def check_classical_symbol(fn, m, cone="gamma2", grid: GridSpec | None = None, max_order=2,
                           remainder=None, rel_step=REL_STEP, remainder_order=1) -> list[SymbolEstimate]:
    """Isotropic bounds |d^a fn| <= C (1+|w|)^(m-|a|) for |a| <= max_order.

    ``remainder``, if given, is fn minus its principal part (passed as a
    function so it can be computed without cancellation); it is checked at
    order m - 1 for |a| <= ``remainder_order`` and those estimates come last
    with kind "remainder".
    """
    grid = grid or GridSpec()
    cone = _cone(cone)
    out = []

    def run(f, order, kind, top):
        for j in range(top + 1):
            for k in range(top + 1 - j):
                def weight(x, e, j=j, k=k):
                    return (1.0 + np.hypot(x, e)) ** (order - j - k)

                est = _estimate(f, j, k, weight, cone, grid, rel_step, "upper")
                est.alpha, est.beta, est.kind = float(order), float(order), kind
                out.append(est)

    run(fn, m, "upper", max_order)
    if remainder is not None:
        run(remainder, m - 1, "remainder", min(remainder_order, max_order))
    return out


# ---------------------------------------------------------------- claims

@dataclass(frozen=True)
class Claim:
    """Parsed ``name:cone:body`` claim.

    ``body`` is ``a,b`` (product class), ``cl:m`` (classical of order m) or
    ``elliptic:a,b`` (lower bound).
    """

    function: str
    cone: str
    kind: str
    alpha: float
    beta: float

    @property
    def fn(self):
        return SYMBOLS[self.function]


def _num(text):
    return float(Fraction(text.strip()))


def parse_claim(text: str) -> Claim:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise DomainError(f"claim {text!r} is not of the form name:cone:alpha,beta")
    name, cone = parts[0].strip(), parts[1].strip()
    if name not in SYMBOLS:
        raise DomainError(f"unknown function {name!r}; use one of {tuple(SYMBOLS)}")
    _cone(cone)
    try:
        if len(parts) == 4:
            kind = parts[2].strip()
            if kind == "cl":
                order = _num(parts[3])
                return Claim(name, cone, "classical", order, order)
            if kind == "elliptic":
                a, b = parts[3].split(",")
                return Claim(name, cone, "elliptic", _num(a), _num(b))
            raise DomainError(f"unknown claim kind {kind!r}")
        a, b = parts[2].split(",")
        return Claim(name, cone, "sigma", _num(a), _num(b))
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"cannot parse exponents in {text!r}") from exc


def run_claim(claim: Claim, j_max=2, k_max=2, grid: GridSpec | None = None) -> list[SymbolEstimate]:
    if claim.kind == "sigma":
        return check_sigma_bound(claim.fn, claim.alpha, claim.beta, j_max, k_max, claim.cone, grid)
    if claim.kind == "elliptic":
        return [check_elliptic(claim.fn, claim.alpha, claim.beta, claim.cone, grid)]
    rem = F_minus_F0 if claim.function == "F" else None
    return check_classical_symbol(claim.fn, claim.alpha, claim.cone, grid, max(j_max, k_max), rem)


# claims established for the Friedlander phase, then wrong-exponent controls
# (one or more per cone) that must fail with growing shell constants
DEFAULT_CLAIMS = (
    "G:gamma1:2/3,1/3",
    "dGdeta:gamma1:elliptic:2/3,-2/3",
    "F:gamma2:cl:1",
    "F:gamma3:1/3,2/3",
    "dFdxi:gamma3:elliptic:-2/3,2/3",
)
NEGATIVE_CONTROLS = (
    "G:gamma1:0,0",
    "F:gamma2:cl:0",
    "F:gamma3:0,0",
    "F:gamma3:1/3,1/3",
)


def verdict(estimates) -> str:
    """'pass', 'flagged' (passes with drifting constants) or 'fail'."""
    if not all(e.passed for e in estimates):
        return "fail"
    return "flagged" if any(e.flagged for e in estimates) else "pass"
