import numpy as np
import pytest
from scipy.integrate import quad as squad

from conftest import bump
from equiconv.equiconv import (I_r, PINNED, alpha_numbers, beta_numbers, check_admissible, closed_form_alphas,
                               decay_exponent, khromov_curve, nondegeneracy, odd_reduction, phi_psi,
                               second_order_identity_residual, second_order_terms, whole_interval_report)
from equiconv.errors import AdmissibilityFailed, EndpointNotZero, OrderMismatch
from equiconv.model import (BCRow, NormalizedBoundaryConditions, OperatorSpec, SampledFunction, dirichlet2,
                            neumann2, periodic2)
from equiconv.regularity import classify, random_operator

C = 1 / (2 * np.pi)
X = np.linspace(0, 1, 21)


def fn(c):
    return SampledFunction.from_callable(c)


def asym():
    return fn(lambda x: np.sin(np.pi * x) * np.exp(x))


class TestAlpha:
    def test_dirichlet_frozen(self):
        t = alpha_numbers(dirichlet2())
        assert t.Theta == pytest.approx(1)
        assert np.allclose(t.alpha, [[0, C], [C, 0]], atol=1e-15)

    def test_neumann_frozen(self):
        assert np.allclose(alpha_numbers(neumann2()).alpha, [[0, -C], [-C, 0]], atol=1e-15)

    @pytest.mark.parametrize("op", [dirichlet2(), neumann2(), periodic2()])
    def test_laplace(self, op):
        assert alpha_numbers(op).laplace_residual() < 1e-10

    def test_lower_order_irrelevant(self, perturbed2):
        assert np.array_equal(alpha_numbers(perturbed2).alpha, alpha_numbers(dirichlet2()).alpha)

    @pytest.mark.parametrize("seed", range(3))
    def test_row_scaling(self, seed):
        rng = np.random.default_rng(seed)
        op = random_operator(rng, 4, regular_only=True)
        base = alpha_numbers(op).alpha
        for _ in range(50):
            rows = list(op.bc.rows)
            i = int(rng.integers(len(rows)))
            c = complex(*rng.normal(size=2))
            rows[i] = BCRow(rows[i].order, c * rows[i].a, c * rows[i].b)
            scaled = OperatorSpec.model(NormalizedBoundaryConditions(tuple(rows)), "")
            assert np.allclose(alpha_numbers(scaled).alpha, base, atol=1e-10)

    def test_beta(self, mixed2):
        assert np.all(beta_numbers(dirichlet2(), dirichlet2()) == 0)
        assert np.allclose(beta_numbers(dirichlet2(), mixed2), -beta_numbers(mixed2, dirichlet2()))
        assert np.allclose(beta_numbers(dirichlet2(), neumann2()), [[0, 2 * C], [2 * C, 0]])

    def test_beta_orders(self, hinged4):
        with pytest.raises(OrderMismatch):
            beta_numbers(dirichlet2(), hinged4)


class TestPhiPsi:
    def test_zero(self):
        Phi, Psi = phi_psi(SampledFunction.zero(), alpha_numbers(dirichlet2()))
        assert all(np.all(g(X) == 0) for g in Phi + Psi)

    def test_symmetric(self, mixed2):
        f0 = fn(lambda x: np.sin(np.pi * x))
        A = alpha_numbers(mixed2).alpha
        Phi, _ = phi_psi(f0, A)
        for k in range(2):
            assert np.allclose(Phi[k](X), (A[1, k] + A[0, k]) * f0(X), atol=1e-14)

    def test_pointwise(self):
        A = np.random.default_rng(1).normal(size=(4, 4)) + 0j
        f0 = asym()
        Phi, Psi = phi_psi(f0, A)
        v, vs = f0(np.array([0.3]))[0], f0(np.array([0.7]))[0]
        for k in range(4):
            assert Phi[k](np.array([0.3]))[0] == pytest.approx(A[2, k] * v + A[0, k] * vs)
            assert Psi[k](np.array([0.3]))[0] == pytest.approx(A[3, k] * v + A[1, k] * vs)
        assert Phi[0](np.array([-0.2, 1.3])).tolist() == [0, 0]

    def test_endpoint(self):
        with pytest.raises(EndpointNotZero):
            phi_psi(SampledFunction.polynomial([1.0]), alpha_numbers(dirichlet2()))


class TestNondegeneracy:
    def test_independent(self, mixed2):
        nd = nondegeneracy(beta_numbers(dirichlet2(), mixed2), asym())
        assert nd.rank == 2 and nd.psi_pair == (0, 1)
        assert (abs(nd.det1) > 0) == nd.span_ok

    def test_zero_beta(self):
        nd = nondegeneracy(beta_numbers(dirichlet2(), dirichlet2()), asym())
        assert nd.det1 == 0 and nd.det2 == 0 and not nd.span_ok

    def test_symmetric_rank_one(self):
        nd = nondegeneracy(alpha_numbers(dirichlet2()), fn(lambda x: np.sin(np.pi * x)))
        assert nd.rank == 1 and nd.span_ok

    def test_antisymmetric_cancels(self):
        # f0# = -f0 and equal columns give Phi_k = (A[1,k] - A[0,k]) f0 = 0
        f0 = fn(lambda x: np.sin(2 * np.pi * x))
        A = np.array([[1.0, 2.0], [1.0, 2.0]], dtype=complex)
        nd = nondegeneracy(A, f0)
        assert nd.rank == 1 and not nd.span_ok
        assert nondegeneracy(alpha_numbers(dirichlet2()), f0).span_ok


class TestIr:
    def test_zero(self):
        assert np.all(I_r(SampledFunction.zero(), 20.0, +1, X) == 0)

    @pytest.mark.parametrize("r", [10.0, 75.0])
    def test_quad_oracle(self, r):
        g = bump(0.1, 0.9)
        f0 = fn(g)
        for x in (0.0, 0.4, 1.0):
            re = squad(lambda s: g(np.array([s]))[0] / (x + s), 1 / r, 1, weight="cos", wvar=r, limit=400)[0]
            im = squad(lambda s: g(np.array([s]))[0] / (x + s), 1 / r, 1, weight="sin", wvar=r, limit=400)[0]
            assert abs(I_r(f0, r, +1, np.array([x]))[0] - (re + 1j * im)) < 1e-8

    def test_conjugation(self):
        f0 = fn(lambda x: x * (1 - x) * (1 + 1j * x))
        fc = fn(lambda x: x * (1 - x) * (1 - 1j * x))
        a = I_r(f0, 40.0, "-", X)
        b = np.conj(I_r(fc, 40.0, "+", X))
        assert np.allclose(a, b, atol=1e-12)

    def test_linearity(self):
        f, g = asym(), fn(lambda x: x * (1 - x))
        h = fn(lambda x: 2 * f(x) - 3j * g(x))
        assert np.allclose(I_r(h, 30.0, 1, X), 2 * I_r(f, 30.0, 1, X) - 3j * I_r(g, 30.0, 1, X), atol=1e-10)

    def test_small_r(self):
        with pytest.raises(ValueError):
            I_r(asym(), 1.0)

    def test_exponent_fit(self):
        rs = np.array([10.0, 20.0, 40.0])
        assert decay_exponent(rs, 3 / rs) == pytest.approx(1.0)


class TestReport:
    def test_zero_function(self):
        rep = whole_interval_report(dirichlet2(), SampledFunction.zero(), ks=(5, 10), x_grid=X)
        assert all(max(v) == 0 for v in rep.curves.values())
        assert rep.verdict == "ConsistentWithEquiconvergence"

    def test_pair_identical(self):
        f = fn(lambda x: x - x ** 2)
        rep = whole_interval_report([dirichlet2(), dirichlet2()], f, ks=(5, 10), x_grid=X)
        assert max(rep.curves["S1-S2"]) <= 2e-10
        assert rep.verdict == "ConsistentWithEquiconvergence"
        assert len(rep.curve_rows()) == 10

    def test_admissibility(self):
        with pytest.raises(AdmissibilityFailed):
            check_admissible(dirichlet2(), SampledFunction.polynomial([1.0]))
        check_admissible(neumann2(), SampledFunction.polynomial([1.0]))

    def test_json(self):
        rep = whole_interval_report(dirichlet2(), SampledFunction.zero(), ks=(5,), x_grid=X)
        d = rep.to_json()
        assert d["mode"] == "single-op" and set(d["curves"]) == set(rep.curves)


class TestOrderTwo:
    def test_zero(self):
        assert second_order_identity_residual(dirichlet2(), SampledFunction.zero(), 10.5 * np.pi, X) < 1e-10

    def test_sign(self, mixed2):
        f = fn(lambda x: x * (1 - x) * np.exp(x))
        lhs, rhs = second_order_terms(mixed2, f, 20.5 * np.pi, X)
        assert np.max(np.abs(lhs - rhs)) < 0.2 * np.max(np.abs(lhs))
        assert np.max(np.abs(lhs + rhs)) > 1.5 * np.max(np.abs(lhs))

    def test_order_four_rejected(self, hinged4):
        with pytest.raises(OrderMismatch):
            second_order_terms(hinged4, SampledFunction.zero(), 10.0)

    def test_khromov_equal_leading(self, perturbed2):
        vals = khromov_curve(dirichlet2(), perturbed2, fn(lambda x: x * (1 - x)), 30.0)
        assert vals == [0.0, 0.0]


class TestOdd:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_parity_and_pinned(self, seed):
        op = random_operator(np.random.default_rng(seed), 3, regular_only=True)
        red = odd_reduction(op)
        assert red.parity_max < 1e-10
        assert red.discrepancy <= 1e-8
        assert red.convention == str(PINNED)
        assert min(red.candidates.values()) == pytest.approx(red.discrepancy, abs=1e-12)

    def test_chi_zero(self):
        delta, Omega, closed = closed_form_alphas(1.0 + 0.5j, 2.0 - 1j, 0, 3)
        assert delta == 1
        assert closed[(0, 0)] == pytest.approx(Omega * C)

    def test_even_rejected(self):
        with pytest.raises(ValueError):
            odd_reduction(dirichlet2())
