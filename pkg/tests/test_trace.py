import math

import numpy as np
import pytest
from scipy import special

from friedlander import trace as tr
from friedlander import special_fn as sf
from friedlander.errors import DomainError, SamplingError
from friedlander.geodesics import length_spectrum

TWO_PI = 2 * math.pi


def grid(a, b, cutoff):
    h = math.pi / (4 * cutoff)
    return np.arange(a, b + h / 2, h)


def brute_lattice(E, zeros):
    # oracle: plain double loop over (m, n >= 1)
    out = []
    for m, t in enumerate(zeros, start=1):
        if 1 + t > E:
            break
        n = 1
        while n * n + n ** (4 / 3) * t <= E:
            out.append((m, n, n * n + n ** (4 / 3) * t))
            n += 1
    return out


@pytest.fixture(scope="module")
def scipy_zeros():
    return -special.ai_zeros(1500)[0]


def test_sharp_window_at_zero_counts_lattice(zeros4096, scipy_zeros):
    req = tr.TraceRequest(np.array([0.0]), 12.0, mollifier="sharp_energy")
    res = tr.windowed_trace(req, zeros4096)
    pts = brute_lattice(144.0, scipy_zeros)
    assert res.lattice_count == len(pts)
    assert res.values[0] == pytest.approx(2 * len(pts), abs=1e-9)


def test_single_point_lattice(zeros4096):
    # only (1, +-1) has lambda <= 3.5
    t = np.linspace(0, 2, 9)
    req = tr.TraceRequest(t, math.sqrt(3.5), mollifier="sharp_energy")
    res = tr.windowed_trace(req, zeros4096)
    w = math.sqrt(3.3381074104597670)
    assert res.lattice_count == 1
    assert np.allclose(res.values, 2 * np.exp(1j * t * w), atol=1e-13)


def test_gaussian_window_against_brute_force(zeros4096, scipy_zeros):
    cut = 6.0
    t = grid(4.0, 7.0, cut)
    req = tr.TraceRequest(t, cut, window_extent=3.0)
    res = tr.windowed_trace(req, zeros4096)
    pts = brute_lattice(req.energy_cut, scipy_zeros)
    lam = np.array([p[2] for p in pts])
    ref = (2 * np.exp(-lam / cut**2)[:, None] * np.exp(1j * np.sqrt(lam)[:, None] * t[None, :])).sum(axis=0)
    assert np.max(np.abs(res.values - ref)) < 1e-10


def test_conjugate_symmetry(zeros4096):
    cut = 15.0
    t = math.pi / (4 * cut) * np.arange(-60, 61)
    res = tr.windowed_trace(tr.TraceRequest(t, cut), zeros4096)
    assert np.allclose(res.values, np.conj(res.values[::-1]), atol=1e-12)


def test_sectors_add_up(zeros4096):
    cut = 20.0
    t = grid(4.5, 6.5, cut)
    req = tr.TraceRequest(t, cut)
    total = tr.windowed_trace(req, zeros4096).values
    parts = sum(tr.sector_trace(j, req, zeros4096).values for j in (1, 2, 3))
    assert np.max(np.abs(parts - total)) <= 1e-10 * max(1.0, np.max(np.abs(total)))
    with pytest.raises(DomainError):
        tr.sector_trace(4, req, zeros4096)


@pytest.mark.parametrize("sector", ["all", "gamma1", "gamma2", "gamma3"])
def test_binned_engine_matches_direct(zeros4096, sector):
    cut = 10.0
    t = grid(0.0, 8.0, cut)
    req = tr.TraceRequest(t, cut, sector=sector)
    a = tr.windowed_trace(req, zeros4096).values
    b = tr.windowed_trace(req, zeros4096, engine="direct").values
    assert np.max(np.abs(a - b)) < 1e-10 * max(1.0, np.max(np.abs(b)))


def test_numba_and_numpy_backends_agree(zeros4096):
    cut = 12.0
    t = grid(3.0, 7.0, cut)
    for sector in ("all", "gamma2"):
        req = tr.TraceRequest(t, cut, sector=sector)
        a = tr.windowed_trace(req, zeros4096, use_numba=True)
        b = tr.windowed_trace(req, zeros4096, use_numba=False)
        assert a.lattice_count == b.lattice_count
        assert np.max(np.abs(a.values - b.values)) < 1e-11 * max(1.0, np.max(np.abs(b.values)))


def test_flat_phase_against_brute_force():
    cut = 5.0
    t = grid(0.0, 4.0, cut)
    req = tr.TraceRequest(t, cut, phase="flat")
    res = tr.windowed_trace(req)
    m, n = np.meshgrid(np.arange(1, 40), np.arange(1, 40), indexing="ij")
    lam = (m * m + n * n).ravel().astype(float)
    lam = lam[lam <= req.energy_cut]
    ref = (2 * np.exp(-lam / cut**2)[:, None] * np.exp(1j * np.sqrt(lam)[:, None] * t[None, :])).sum(axis=0)
    assert res.lattice_count == lam.size
    assert np.max(np.abs(res.values - ref)) < 1e-10


def test_cone_partition():
    cp = tr.ConePartition()
    xi = np.exp(np.linspace(-6, 6, 400))
    eta = np.ones_like(xi)
    c1, c2, c3 = cp.chis(xi, eta)
    assert np.allclose(c1 + c2 + c3, 1.0, atol=1e-15)
    assert np.all((c1 >= 0) & (c2 >= 0) & (c3 >= 0))
    assert np.all(c1[xi >= cp.kappa1] == 0)
    assert np.all(c3[xi <= cp.kappa2] == 0)
    assert np.all(c2[(xi <= cp.kappa1 * 2 ** -cp.transition_width) | (xi >= cp.kappa2 * 2 ** cp.transition_width)] == 0)
    assert np.all(c2[(xi >= cp.kappa1) & (xi <= cp.kappa2)] == 1)
    assert cp.chi(2, 3.0, 5.0) == c2[0] * 0 + cp.chis(3.0, 5.0)[1]
    assert cp.chi(1, 2.0, 4.0) == cp.chi(1, 1.0, 2.0)  # 0-homogeneous
    x = np.linspace(0, 2, 41)
    psi = tr.ConePartition.psi(x)
    assert np.all(psi[x <= 0.5] == 0) and np.all(psi[x >= 1] == 1)
    assert np.all(np.diff(psi) >= 0)
    with pytest.raises(DomainError):
        tr.ConePartition(kappa1=2.0, kappa2=1.0)
    with pytest.raises(DomainError):
        tr.ConePartition(transition_width=1.5)


def test_nyquist_guard(zeros100):
    req = tr.TraceRequest(np.linspace(0, 1, 5), 50.0)
    with pytest.raises(SamplingError):
        tr.windowed_trace(req, zeros100)


def test_request_validation():
    with pytest.raises(DomainError):
        tr.TraceRequest(np.array([0.0]), -1.0)
    with pytest.raises(DomainError):
        tr.TraceRequest(np.array([0.0]), 1.0, mollifier="box")
    with pytest.raises(DomainError):
        tr.TraceRequest(np.array([1.0, 0.0]), 1.0)
    with pytest.raises(DomainError):
        tr.TraceRequest(np.array([0.0]), 1.0, sector="gamma4")


@pytest.mark.parametrize(
    "A,a",
    [(((1, 0), (0, 1)), (0, 0)), (((1, 0), (0, 1)), (0.3, -0.17)), (((2, 0.5), (0.5, 0.75)), (0.1, 0.2))],
)
def test_poisson_identity(A, a):
    lhs, rhs, gap = tr.poisson_check(A, a)
    assert gap < 1e-12
    assert abs(rhs.imag) < 1e-12


def test_poisson_rejects_bad_input():
    with pytest.raises(DomainError):
        tr.poisson_check(((1, 0), (0, -1)))
    with pytest.raises(DomainError):
        tr.poisson_check(((1, 2), (0, 1)))
    with pytest.raises(DomainError):
        tr.poisson_check(((1e-6, 0), (0, 1)))


def test_tail_bound_covers_truncation(zeros4096):
    # the window is cut at 6 Lambda; extending it to 8 Lambda moves Z by less
    # than the analytic bound on the discarded mass
    for cut in (10.0, 25.0):
        t = grid(4.0, 6.0, cut)
        a = tr.windowed_trace(tr.TraceRequest(t, cut), zeros4096).values
        b = tr.windowed_trace(tr.TraceRequest(t, cut, window_extent=8.0), zeros4096).values
        assert np.max(np.abs(a - b)) <= tr.cutoff_tail_bound(cut)
    with pytest.raises(DomainError):
        tr.cutoff_tail_bound(10.0, 1.0)


def test_cutoff_doubling_converges_geometrically(zeros4096):
    # away from lengths the mollification bias is O(Lambda^-2): successive
    # doubling differences shrink by ~4
    t = np.array([1.5, 2.0, 3.0, 4.0, 4.8])
    z = []
    for cut in (25.0, 50.0, 100.0):
        eng = tr.TraceEngine(tr.TraceRequest(t, cut), zeros4096)
        z.append(eng(t))
    d1 = np.abs(z[1] - z[0])
    d2 = np.abs(z[2] - z[1])
    assert np.allclose(d1 / d2, 4.0, rtol=0.1)


def test_peaks_sit_on_lengths(zeros4096):
    cut = 60.0
    t = grid(5.0, 6.2, cut)
    res = tr.windowed_trace(tr.TraceRequest(t, cut), zeros4096)
    table = length_spectrum(200, 6)
    peaks = tr.match_peaks(tr.find_peaks(t, res.values), table, TWO_PI / cut)
    assert peaks and all(p.k is not None for p in peaks)
    assert any(p.k == 1 and p.ell == 1 for p in peaks)


def test_flat_control_has_no_peak_at_friedlander_length():
    cut = 40.0
    t = grid(5.2, 5.6, cut)
    res = tr.windowed_trace(tr.TraceRequest(t, cut, phase="flat"))
    near = tr.find_peaks(t, res.values)
    assert not any(abs(p.t - 5.383482315316944) < 0.05 for p in near)


def test_find_peaks_edge_cases():
    assert tr.find_peaks([0, 1], [1, 2]) == []
    t = np.linspace(0, 1, 11)
    v = np.zeros(11)
    v[5] = 1.0
    assert [p.t for p in tr.find_peaks(t, v + 1e-3)] == [0.5]


def test_asymmetry_validation(zeros100):
    with pytest.raises(DomainError):
        tr.smoothness_asymmetry(1, 0.05, [50, 20], zeros100)
    with pytest.raises(DomainError):
        tr.smoothness_asymmetry(3, 0.05, [20], zeros100)


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("", "numba")])
def test_env_flag_selects_backend(flag, expected):
    import os
    import subprocess
    import sys

    env = dict(os.environ, FRIEDLANDER_PURE_NUMPY=flag)
    out = subprocess.run([sys.executable, "-c", "import friedlander; print(friedlander.backend())"],
                         env=env, capture_output=True, text=True, check=True).stdout
    assert out.strip() == expected
