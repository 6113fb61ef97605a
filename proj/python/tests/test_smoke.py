import math

import pytest

import nelson


def test_c_ii_closed_form():
    r = nelson.coupling_constants(nelson.ModelParams(lambda_=1.0))
    assert r.c_II.value == pytest.approx(1 / (8 * math.pi**2), rel=1e-10)
    assert r.c_eps.divergent


def test_c_i_at_infinity():
    r = nelson.coupling_constants(nelson.ModelParams(lambda_=math.inf))
    assert r.c_I.value == pytest.approx(1 / (8 * math.pi), rel=1e-10)
    assert r.phi_norm_sq.divergent


def test_invalid_params():
    with pytest.raises(ValueError):
        nelson.ModelParams(e=-1.0)


def test_hydrogen():
    h = nelson.hydrogen_ground(nelson.ModelParams(e=0.3, z=1.0))
    assert h.E_at == pytest.approx(-((0.09 / (4 * math.pi)) ** 2) / 4, rel=1e-15)
    assert h.p2_moment == -2 * h.E_at


def test_a4_grid_and_mc():
    p = nelson.ModelParams(lambda_=1.0)
    g = nelson.vev_grid("AA R A*A*", p, 32)
    assert g.method == "grid3d"
    assert g.value == pytest.approx(1.0537689299466e-05, rel=1e-10)
    mc = nelson.vev_mc("AA R A*A*", p, budget=100_000, seed=3)
    assert abs(mc.value - g.value) < 5 * mc.error
    assert mc.seed == 3


def test_matrix_coefficients():
    c = nelson.matrix_coefficients(nelson.ModelParams(lambda_=1.0), 2, 3, 3)
    assert c.a4 > 0
    assert c.expansion(0.0) == 0.0


def test_lemma_subset():
    reports = nelson.lemma_suite(nelson.ModelParams(e=0.1), only=["she1", "hlt1i"])
    assert [r.lemma_id for r in reports] == ["she1", "hlt1i"]
    assert all(r.passed() for r in reports)
    assert reports[1].c_star <= reports[1].reference_bound


def test_cli_json_and_errors():
    art = nelson.run("binding", "--e", "0.1", "--lambda", "inf")
    assert art["schema"] == "nelson/1"
    assert art["result"]["lambda"] == "inf"
    code, _, err = nelson.run_cli(["selfenergy", "--lambda", "inf"])
    assert code == 2
    assert err
