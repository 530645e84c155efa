import numpy as np
import pytest

from equiconv import kernels
from equiconv import _kernels_py
from equiconv.model import Coefficient, DifferentialExpression, bc_rows, OperatorSpec, dirichlet2, periodic2
from equiconv.solver.charvalues import char_det, eta_residual, find_char_values
from equiconv.solver.fss import model_fss, numeric_fss
from equiconv.solver.green import coefficient_callback, green, green_general


class TestFss:
    def test_model_exponential(self):
        f = model_fss(2, np.pi)
        assert f.y(0, 1.0) == pytest.approx(-1)

    @pytest.mark.parametrize("n, rho", [(2, 3 + 1j), (3, 7.0), (4, 2 + 5j), (5, 4 + 0.5j)])
    def test_shifted_bases(self, n, rho):
        f = model_fss(n, rho)
        minus = min(set(range(n)) - set(f.plus))
        assert f.z(minus, 1.0) == pytest.approx(1)
        assert f.u(f.plus[0], 1.0) == pytest.approx(1)
        xs = np.linspace(0, 1, 11)
        for k in range(n):
            assert np.all(np.abs(f.z(k, xs)) <= 1 + 1e-12)

    def test_numeric_constant(self):
        f = numeric_fss(DifferentialExpression(2), 0.0)
        assert f.at1[0, 0] == pytest.approx(1)
        assert f.at1[0, 1] == pytest.approx(1j)

    def test_numeric_dirichlet_eigenvalue(self):
        f = numeric_fss(DifferentialExpression(2), np.pi ** 2)
        assert abs(f.at1[0, 1]) < 1e-9

    @pytest.mark.parametrize("lam", [4.0, 30 + 5j, -12.0])
    def test_constant_shift(self, lam):
        c = 2.5
        a = numeric_fss(DifferentialExpression(2, {0: Coefficient.constant(c)}), lam)
        b = numeric_fss(DifferentialExpression(2), lam - c)
        assert np.allclose(a.at1, b.at1, atol=1e-9)


class TestCharValues:
    def test_dirichlet(self):
        cv = find_char_values(dirichlet2(), 20)
        assert np.allclose(cv.rho_values, np.pi * np.arange(1, 7), atol=1e-8)

    def test_dirichlet_zeros_of_det(self):
        for j in range(1, 6):
            assert abs(char_det(dirichlet2(), j * np.pi)) < 1e-12

    def test_periodic_double(self):
        cv = find_char_values(periodic2(), 40)
        nonzero = [(r, m) for r, m in zip(cv.rho_values, cv.multiplicities) if abs(r) > 1]
        assert np.allclose([r for r, _ in nonzero], 2 * np.pi * np.arange(1, 7), atol=1e-7)
        assert all(m == 2 for _, m in nonzero)

    def test_perturbed(self, perturbed2):
        cv = find_char_values(perturbed2, 40)
        rho = np.array(cv.rho_values)
        j = np.arange(1, rho.size + 1)
        dev = np.abs(rho - j * np.pi) * j
        assert rho.size == 12
        assert dev.max() < 1.0

    @pytest.mark.parametrize("k", [10, 15, 20])
    def test_eta_residual(self, k):
        assert eta_residual(dirichlet2(), (2 * k + 0.5) * np.pi * np.exp(0.25j * np.pi)) < 1e-3

    def test_eta_on_real_radius(self):
        vals = [eta_residual(dirichlet2(), (2 * k + 0.5) * np.pi) for k in (5, 10, 20)]
        assert vals[0] >= vals[1] >= vals[2] or max(vals) < 1e-12


class TestGreen:
    @pytest.mark.parametrize("rho", [5 + 2j, 3.3 + 0.1j, 12 * np.exp(0.3j)])
    def test_dirichlet_closed_form(self, rho):
        # u'' + rho^2 u = -f kernel for -(d/dx)^2 - rho^2 with sign from D^2 = -d^2/dx^2
        for x, xi in [(0.3, 0.6), (0.8, 0.2)]:
            lo, hi = min(x, xi), max(x, xi)
            ref = np.sin(rho * lo) * np.sin(rho * (1 - hi)) / (rho * np.sin(rho))
            assert green(dirichlet2(), x, xi, rho) == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("op", [dirichlet2(), periodic2(),
                                    OperatorSpec.model(bc_rows((0, 1, 0), (1, 1, 1)), "mixed")])
    def test_model_vs_general(self, op):
        rho = 4 + 1.5j
        for x, xi in [(0.25, 0.7), (0.9, 0.1)]:
            assert abs(green(op, x, xi, rho) - green_general(op, x, xi, rho ** 2)) < 1e-8


class TestKernels:
    def test_backend(self):
        assert kernels.BACKEND in ("cython", "python")

    def test_scan_agrees(self):
        rng = np.random.default_rng(0)
        a = np.exp(1j * rng.uniform(0, 6, (4, 300)))
        b = rng.normal(size=(4, 300)) + 1j * rng.normal(size=(4, 300))
        assert np.allclose(_kernels_py.linear_scan(a, b), kernels.linear_scan(a, b), rtol=1e-12, atol=1e-12)

    def test_scan_recurrence(self):
        a = np.full((1, 3), 2.0 + 0j)
        b = np.ones((1, 3), dtype=complex)
        assert kernels.linear_scan(a, b)[0].real.tolist() == [0, 1, 3, 7]

    def test_dp5_agrees(self):
        expr = DifferentialExpression(2, {0: Coefficient.step([0.0, 0.5, 1.0], [1.0, -2.0])})
        lams = (8.0 * np.exp(1j * np.linspace(0, 1, 4))) ** 2
        v0 = np.broadcast_to(np.eye(2, dtype=complex), (4, 2, 2)).copy()
        ends = []
        for impl in (_kernels_py, None):
            xs, vs = kernels.dp5_linear(lams, v0, 0.0, 1.0, [0.5], coefficient_callback(expr), 1e-10, impl=impl)
            ends.append(np.asarray(vs[-1]))
        assert np.max(np.abs(ends[0] - ends[1])) <= 1e-9 * np.max(np.abs(ends[0]))
