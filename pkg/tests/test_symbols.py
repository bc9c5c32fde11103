import math

import numpy as np
import pytest

from friedlander import symbols as sy
from friedlander.errors import DomainError

BS = (1.5 * math.pi) ** (2.0 / 3.0)


def test_fd_mixed_derivative_of_product():
    xi = np.array([3.0, 50.0, 700.0])
    eta = np.array([5.0, 20.0, 900.0])
    d = sy.finite_diff_derivative(lambda x, e: x * e, 1, 1, xi, eta)
    assert np.allclose(d, 1.0, rtol=1e-9)
    d = sy.finite_diff_derivative(lambda x, e: x**3 + e, 2, 0, xi, eta)
    assert np.allclose(d, 6 * xi, rtol=1e-8)


def test_principal_symbol_closed_form():
    xi, eta = 8.0, 27.0
    assert sy.principal_F0(xi, eta) == pytest.approx(math.sqrt(27**2 + BS * 4 * 81), rel=1e-15)
    # dF0/dxi = (BS/3) xi^(-1/3) eta^(4/3) / F0
    d = sy.finite_diff_derivative(sy.principal_F0, 1, 0, xi, eta)
    assert d == pytest.approx(BS / 3 / 2 * 81 / sy.principal_F0(xi, eta), rel=1e-9)


def test_phase_pieces_are_consistent():
    xi = np.array([2.0, 10.5, 300.0])
    eta = np.array([40.0, 3.0, 17.0])
    F = sy.phase_F(xi, eta)
    assert np.allclose(sy.phase_G(xi, eta), F - eta, rtol=1e-12)
    assert np.allclose(sy.F_minus_F0(xi, eta), F - sy.principal_F0(xi, eta), rtol=1e-8, atol=1e-12)
    assert np.allclose(sy.dG_deta(xi, eta), sy.finite_diff_derivative(sy.phase_F, 0, 1, xi, eta) - 1, rtol=1e-7)
    assert np.allclose(sy.dF_dxi(xi, eta), sy.finite_diff_derivative(sy.phase_F, 1, 0, xi, eta), rtol=1e-6)
    assert np.all(sy.dG_deta(xi, eta) > 0)


def test_stencil_must_stay_in_cone():
    cone = sy.CONES["gamma1"]
    with pytest.raises(DomainError):
        sy.finite_diff_derivative(sy.phase_G, 1, 0, np.array([cone.hi * 100.0 * 0.9999]), np.array([100.0]), cone=cone)
    with pytest.raises(DomainError):
        sy.finite_diff_derivative(sy.phase_G, 3, 2, 1.0, 1.0)


def test_vanishing_function_raises_fit_error():
    with pytest.raises(sy.FitError):
        sy.check_sigma_bound(lambda x, e: 0.0 * x * e, 0, 0, 1, 1, "gamma2")


def test_exact_symbol_passes_stably():
    est = sy.check_sigma_bound(lambda x, e: (1 + x) ** 0.5 * (1 + e) ** -1.0, 0.5, -1.0, 2, 2, "gamma2")
    assert all(e.passed and e.stable for e in est)
    assert sy.verdict(est) == "pass"


@pytest.mark.parametrize("text", sy.DEFAULT_CLAIMS)
def test_true_claims_pass(text):
    est = sy.run_claim(sy.parse_claim(text))
    assert sy.verdict(est) in ("pass", "flagged")
    assert max(e.max_violation_ratio for e in est if not e.vanishing) <= sy.VIOLATION_TOL


@pytest.mark.parametrize("text", sy.NEGATIVE_CONTROLS)
def test_negative_controls_fail_with_growing_constants(text):
    est = sy.run_claim(sy.parse_claim(text))
    assert sy.verdict(est) == "fail"
    bad = [e for e in est if not e.passed]
    for e in bad:
        c = [e.shell_constants[s] for s in sorted(e.shell_constants)]
        assert c[-1] > c[0]


def test_third_xi_derivative_is_not_controlled():
    # tau has a period-1 ripple of relative size ~xi^-2, so d_xi^3 F breaks the
    # product bound while orders <= 2 hold
    est = sy.check_sigma_bound(sy.phase_F, 1 / 3, 2 / 3, 3, 0, "gamma3")
    by_j = {e.order_j: e for e in est}
    assert all(by_j[j].passed for j in (0, 1, 2))
    assert not by_j[3].passed


def test_second_derivative_of_remainder_is_not_controlled():
    est = sy.check_classical_symbol(sy.phase_F, 1, "gamma2", remainder=sy.F_minus_F0, remainder_order=2)
    rem = {(e.order_j, e.order_k): e for e in est if e.kind == "remainder"}
    assert all(rem[a].passed for a in ((0, 0), (1, 0), (0, 1)))
    assert not rem[(2, 0)].passed


def test_parse_claim_forms_and_errors():
    c = sy.parse_claim("G:gamma1:2/3,1/3")
    assert (c.function, c.cone, c.kind, c.alpha, c.beta) == ("G", "gamma1", "sigma", 2 / 3, 1 / 3)
    assert sy.parse_claim("F:gamma2:cl:1").kind == "classical"
    assert sy.parse_claim("dFdxi:gamma3:elliptic:-2/3,2/3").alpha == -2 / 3
    for bad in ("H:gamma1:1,1", "F:gamma9:1,1", "F:gamma1:1", "F:gamma1:x,1", "F:gamma1:up:1", "F"):
        with pytest.raises(DomainError):
            sy.parse_claim(bad)


def test_estimate_dict_is_serialisable():
    import json

    est = sy.run_claim(sy.parse_claim("dGdeta:gamma1:elliptic:2/3,-2/3"))
    d = est[0].as_dict()
    json.dumps(d)
    assert d["kind"] == "lower" and d["passed"]
