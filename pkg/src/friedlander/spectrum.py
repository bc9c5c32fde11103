"""Eigenvalue lattice, Bohr-Sommerfeld values and action variables.

Dirichlet eigenpairs of -d_x^2 - (1 + x) d_y^2 on [0, inf) x S^1 (mean-zero
in y) are

    phi_{m,n}(x, y) = Ai(|n|^(2/3) x - t_m) e^{i n y},
    lambda(m, n)    = n^2 + |n|^(4/3) t_m,

for m >= 1 and n != 0. Everything here depends on n only through |n|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .special_fn import AiryZeroTable, airy, theta, zero_table

__all__ = [
    "ActionPoint",
    "BohrSommerfeldPoint",
    "PhaseResidual",
    "SpectralPoint",
    "actions_from_energy",
    "bohr_sommerfeld",
    "bohr_sommerfeld_values",
    "eigenfunction_eval",
    "eigenvalue",
    "eigenvalues",
    "energy_from_actions",
    "enumerate_below",
    "lattice_below",
    "sector_deviation",
    "wkb_phase_residual",
]

BS_CONST = (1.5 * math.pi) ** (2.0 / 3.0)


@dataclass(frozen=True)
class SpectralPoint:
    m: int
    n: int
    lam: float
    sqrt_lambda: float


@dataclass(frozen=True)
class BohrSommerfeldPoint:
    m: int
    n: int
    Lambda: float


@dataclass(frozen=True)
class ActionPoint:
    H: float
    J: float
    I1: float
    I2: float


class PhaseResidual(NamedTuple):
    residual: float
    shift: float


def _check_index(m, n):
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    if int(n) != n or n == 0:
        raise DomainError(f"n must be a nonzero integer, got {n!r}")


def eigenvalues(m, n, zeros: AiryZeroTable):
    """Vectorised lambda(m, n); ``m`` must lie inside the zero table."""
    m = np.asarray(m)
    a = np.abs(np.asarray(n, dtype=np.float64))
    t = zeros.t(m)
    a43 = np.cbrt(a) ** 4
    return a * a + a43 * t


def eigenvalue(m: int, n: int, zeros: AiryZeroTable) -> SpectralPoint:
    _check_index(m, n)
    if m > len(zeros):
        raise DomainError(f"m = {m} is outside the zero table (size {len(zeros)})")
    lam = float(eigenvalues(int(m), int(n), zeros))
    return SpectralPoint(int(m), int(n), lam, math.sqrt(lam))


def bohr_sommerfeld_values(m, n):
    m = np.asarray(m, dtype=np.float64)
    a = np.abs(np.asarray(n, dtype=np.float64))
    return a * a + BS_CONST * np.cbrt(m) ** 2 * np.cbrt(a) ** 4


def bohr_sommerfeld(m: int, n: int) -> BohrSommerfeldPoint:
    _check_index(m, n)
    return BohrSommerfeldPoint(int(m), int(n), float(bohr_sommerfeld_values(m, n)))


def actions_from_energy(H: float, J: float) -> ActionPoint:
    """Action variables of the invariant torus {H = H, eta = J}."""
    if not (H > 0 and 0 < abs(J) < H):
        raise DomainError("need 0 < |J| < H (|J| = H is the gliding torus)")
    gap = (H - J) * (H + J)
    return ActionPoint(float(H), float(J), 4.0 / 3.0 * gap ** 1.5 / (J * J), 2.0 * math.pi * J)


def energy_from_actions(I1, I2):
    """H^2 as a function of the actions; inverse of :func:`actions_from_energy`."""
    I1 = np.asarray(I1, dtype=np.float64)
    I2 = np.asarray(I2, dtype=np.float64)
    four_pi2 = 4.0 * math.pi * math.pi
    out = I2 * I2 / four_pi2 + np.cbrt(3.0 * I1 * I2 * I2 / (4.0 * four_pi2)) ** 2
    return float(out) if out.ndim == 0 else out


def eigenfunction_eval(m: int, n: int, x, y, zeros: AiryZeroTable):
    """phi_{m,n}(x, y) = Ai(|n|^(2/3) x - t_m) e^{i n y} (broadcasting)."""
    _check_index(m, n)
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise DomainError("x must be >= 0")
    t = zeros.t(m)
    ai, _ = airy(np.cbrt(abs(n)) ** 2 * x - t)
    out = ai * np.exp(1j * n * np.asarray(y, dtype=np.float64))
    return complex(out) if np.ndim(out) == 0 else out


def _smallest_arc(values):
    # centre and half-width of the shortest arc of the circle R / 2 pi
    # containing every value
    w = np.sort(np.mod(values, 2.0 * math.pi))
    gaps = np.diff(np.concatenate([w, [w[0] + 2.0 * math.pi]]))
    k = int(np.argmax(gaps))
    start = w[(k + 1) % w.size]
    length = 2.0 * math.pi - gaps[k]
    centre = math.remainder(start + 0.5 * length, 2.0 * math.pi)
    return centre, 0.5 * length


def wkb_phase_residual(m, n, x_grid, zeros: AiryZeroTable, caustic_margin=1.0) -> PhaseResidual:
    """Compare the eigenfunction phase with the Bohr-Sommerfeld generating function.

    The Airy factor is written as A(z) sin theta(z^(3/2)) with A > 0, so the
    exact phases are +/- theta - pi/2 + n y. Returned ``residual`` is the sup
    over ``x_grid`` of |theta - pi/2 - rho_+ - shift| (mod 2 pi) with the
    constant ``shift`` chosen optimally; the y-dependence cancels.
    """
    _check_index(m, n)
    x = np.atleast_1d(np.asarray(x_grid, dtype=np.float64))
    t = zeros.t(m)
    n23 = np.cbrt(abs(n)) ** 2
    z = t - n23 * x
    if np.any(x < 0) or np.any(z < caustic_margin):
        raise DomainError(
            f"grid must satisfy 0 <= x and |n|^(2/3) x <= t_m - {caustic_margin} (caustic at {t / n23:.6g})"
        )
    exact = theta(z ** 1.5) - 0.5 * math.pi
    bs = (2.0 / 3.0) * (BS_CONST * np.cbrt(m) ** 2 - n23 * x) ** 1.5
    shift, half = _smallest_arc(exact - bs)
    return PhaseResidual(float(half), float(shift))


def _m_bound(E):
    # largest m that can satisfy 1 + t_m <= E (n = +-1), from t_m < (3 pi m / 2)^(2/3)
    # and t_m > (3 pi (m - 1/4) / 2)^(2/3) - 0.01
    return int(math.floor((E - 1.0 + 0.01) ** 1.5 / (1.5 * math.pi) + 0.25)) + 1


def lattice_below(E: float, zeros: AiryZeroTable, chunk: int = 4096):
    """All (m, |n|) with lambda <= E as arrays sorted by (lambda, n).

    The zero table is extended in chunks as needed; the extended table is
    returned alongside.
    """
    need = max(_m_bound(E), 1)
    table = zeros
    if need > len(table):
        target = len(table)
        while target < need:
            target += chunk
        table = table.extended(target)
    ms, ns, lams = [], [], []
    t = table.zeros[:need]
    n = 1
    while n * n < E:
        lam = n * n + np.cbrt(n) ** 4 * t
        k = int(np.searchsorted(lam, E, side="right"))
        if k == 0:
            break
        ms.append(np.arange(1, k + 1))
        ns.append(np.full(k, n))
        lams.append(lam[:k].copy())
        n += 1
    if not ms:
        return np.zeros(0, int), np.zeros(0, int), np.zeros(0), table
    m = np.concatenate(ms)
    nn = np.concatenate(ns)
    lam = np.concatenate(lams)
    order = np.lexsort((nn, lam))
    return m[order], nn[order], lam[order], table


def enumerate_below(E: float, zeros: AiryZeroTable | None = None) -> list[SpectralPoint]:
    """Every (m, n), n of both signs, with lambda(m, n) <= E, sorted by lambda then n."""
    if zeros is None:
        zeros = zero_table(64)
    m, n, lam, _ = lattice_below(E, zeros)
    out = []
    for mi, ni, li in zip(m.tolist(), n.tolist(), lam.tolist()):
        r = math.sqrt(li)
        out.append(SpectralPoint(mi, -ni, li, r))
        out.append(SpectralPoint(mi, ni, li, r))
    return out


def sector_deviation(c1: float, c2: float, m_max: int, zeros: AiryZeroTable, m_min: int = 1):
    """Per-m statistics of |sqrt(lambda) - sqrt(Lambda)| over c1 <= |n|/m <= c2.

    Returns a structured array with fields m, n_lo, n_hi, max_dev, mean_dev,
    argmax_n (rows with no admissible n are skipped).
    """
    if not (0 < c1 <= c2):
        raise DomainError("sector needs 0 < c1 <= c2")
    table = zeros.extended(m_max)
    rows = []
    for m in range(m_min, m_max + 1):
        lo = max(1, math.ceil(c1 * m - 1e-12))
        hi = math.floor(c2 * m + 1e-12)
        if hi < lo:
            continue
        n = np.arange(lo, hi + 1, dtype=np.float64)
        dev = np.abs(np.sqrt(eigenvalues(m, n, table)) - np.sqrt(bohr_sommerfeld_values(m, n)))
        k = int(np.argmax(dev))
        rows.append((m, lo, hi, float(dev[k]), float(dev.mean()), int(n[k])))
    dtype = [("m", int), ("n_lo", int), ("n_hi", int), ("max_dev", float), ("mean_dev", float), ("argmax_n", int)]
    return np.array(rows, dtype=dtype)
