import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from equiconv.model import BCRow, NormalizedBoundaryConditions, OperatorSpec, DifferentialExpression, bc_rows, \
    dirichlet2, neumann2, periodic2
from equiconv.regularity import birkhoff_theta, classify, random_operator, square_operator, unit_roots


def op_of(*rows, n=None):
    bc = bc_rows(*rows)
    return OperatorSpec.model(bc, "")


@pytest.mark.parametrize("n, expected", [(1, [1]), (2, [1, -1]), (4, [1, 1j, -1, -1j])])
def test_unit_roots(n, expected):
    assert np.allclose(unit_roots(n), expected, atol=0)


def test_fractional_root():
    assert unit_roots(6, 2.5) == pytest.approx(np.exp(2j * np.pi * 2.5 / 6))


@pytest.mark.parametrize("n", [2, 3, 5, 6, 8])
def test_root_products(n):
    eps = unit_roots(n)
    for j in range(n):
        for k in range(n):
            assert abs(eps[j] * eps[k] - eps[(j + k) % n]) < 1e-14


@pytest.mark.parametrize("factory, theta, chi", [(dirichlet2, 1, 0), (neumann2, -1, 2), (periodic2, 2, 1)])
def test_theta_gallery(factory, theta, chi):
    rep = classify(factory())
    assert rep.theta_01 == pytest.approx(theta, abs=1e-14)
    assert rep.chi == chi and rep.verdict == "Regular" and rep.theta_10 is None


def test_decomposing_irregular():
    op = op_of((0, 1, 0), (1, 1, 0))
    assert classify(op).verdict == "Irregular"
    assert abs(classify(op).theta_01) < 1e-14
    assert classify(square_operator(op)).verdict == "Irregular"


def test_square_dirichlet():
    sq = square_operator(dirichlet2())
    assert sq.n == 4 and [r.order for r in sq.bc.rows] == [0, 0, 2, 2]
    assert classify(sq).verdict == "Regular"


def test_odd_needs_both():
    rep = classify(op_of((0, 1, 0), (1, 1, 0), (2, 0, 1)))
    assert rep.theta_10 is not None and rep.n_parity == "odd"


@pytest.mark.parametrize("seed", range(5))
def test_row_scaling(seed):
    rng = np.random.default_rng(seed)
    op = random_operator(rng, 3)
    base = classify(op)
    rows = list(op.bc.rows)
    for _ in range(20):
        i = int(rng.integers(len(rows)))
        c = complex(*rng.normal(size=2))
        scaled = rows.copy()
        r = rows[i]
        scaled[i] = BCRow(r.order, c * r.a, c * r.b, r.lower)
        bc = NormalizedBoundaryConditions(tuple(scaled))
        assert birkhoff_theta(bc) == pytest.approx(c * base.theta_01, abs=1e-12)
        assert classify(bc).verdict == base.verdict


@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_squaring_preserves_verdict(seed, n):
    op = random_operator(np.random.default_rng(seed), n)
    assert classify(op).verdict == classify(square_operator(op)).verdict


def test_report_json():
    d = classify(periodic2()).to_json()
    assert d["theta_01"] == [2.0, 0.0] and d["verdict"] == "Regular"
