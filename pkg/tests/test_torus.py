import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from equiconv.torus import (SQRT_2PI, CoefficientSequence, box, commutator, commutator_bound_holds, cutoff_index,
                            localization_bound, multiply, norms, pf_partial_sum, point_mass, random_sequence,
                            raised_cosine_cutoff, torus_demo)

TWO_PI = 2 * np.pi


def seq(vals):
    return CoefficientSequence(np.asarray(vals, dtype=complex))


def constant(c=1.0):
    # the function c has coefficient c sqrt(2 pi) at l = 0
    return CoefficientSequence.single_mode(0, c * SQRT_2PI, kind="smooth-multiplier")


class TestPartialSum:
    def test_below_first_mode(self):
        F = seq([1, 0, 1])
        assert np.all(pf_partial_sum(F, 5.0).coefficients == 0)

    def test_full(self):
        F = random_sequence(np.random.default_rng(0), 6)
        assert np.array_equal(pf_partial_sum(F, TWO_PI * 6).coefficients, F.coefficients)

    @given(st.floats(0, 60))
    def test_idempotent(self, r):
        F = random_sequence(np.random.default_rng(1), 8)
        once = pf_partial_sum(F, r)
        assert np.array_equal(pf_partial_sum(once, r).coefficients, once.coefficients)

    def test_cutoff_index(self):
        assert cutoff_index(TWO_PI * 3) == 3 and cutoff_index(TWO_PI * 3 - 1e-3) == 2


class TestNorms:
    def test_flat(self):
        nm = norms(seq(np.ones(9)))
        assert nm["pf_norm"] == 1 and nm["a_norm"] == 9

    def test_single_mode(self):
        nm = norms(CoefficientSequence.single_mode(3, 2.0))
        assert nm["a_norm"] == 2 and nm["derivative_a_norm"] == 6

    def test_zero(self):
        assert set(norms(CoefficientSequence.zero(4)).values()) == {0.0}


class TestProducts:
    def test_multiply_matches_pointwise(self):
        rng = np.random.default_rng(2)
        g, F = random_sequence(rng, 3), random_sequence(rng, 4)
        x = np.linspace(0, TWO_PI, 17)
        assert np.allclose(multiply(g, F).evaluate(x), g.evaluate(x) * F.evaluate(x))

    def test_from_function(self):
        c = CoefficientSequence.from_function(lambda x: np.cos(2 * x), 4)
        assert c[2] == pytest.approx(SQRT_2PI / 2) and abs(c[1]) < 1e-14

    def test_constant_commutes(self):
        F = random_sequence(np.random.default_rng(3), 10)
        assert np.allclose(commutator(F, constant(2.5), TWO_PI * 4).coefficients, 0, atol=1e-13)

    @pytest.mark.parametrize("l0, p", [(2, 1), (2, 2), (-3, -1), (0, 4), (3, 0)])
    def test_single_modes(self, l0, p):
        J = 3
        F = CoefficientSequence.single_mode(l0, 1.0)
        g = CoefficientSequence.single_mode(p, 1.0, kind="smooth-multiplier")
        c = commutator(F, g, TWO_PI * J)
        assert (norms(c)["a_norm"] > 0) == (abs(l0 + p) > J)

    def test_bilinear(self):
        rng = np.random.default_rng(4)
        F1, F2, g1, g2 = (random_sequence(rng, 5) for _ in range(4))
        r = TWO_PI * 3
        lhs = commutator(F1.scaled(2) + F2, g1, r).coefficients
        rhs = (commutator(F1, g1, r).scaled(2) + commutator(F2, g1, r)).coefficients
        assert np.allclose(lhs, rhs)
        lhs = commutator(F1, g1 + g2.scaled(-1j), r).coefficients
        rhs = (commutator(F1, g1, r) + commutator(F1, g2, r).scaled(-1j)).coefficients
        assert np.allclose(lhs, rhs)

    @given(st.integers(0, 2 ** 31), st.integers(1, 20), st.integers(1, 8), st.floats(0, 150))
    def test_commutator_bound(self, seed, MF, Mg, r):
        rng = np.random.default_rng(seed)
        _, _, ok = commutator_bound_holds(random_sequence(rng, MF), random_sequence(rng, Mg), r)
        assert ok


class TestLocalization:
    def test_zero(self):
        g = raised_cosine_cutoff(np.pi, 0.1, 0.2, 64)
        assert localization_bound(CoefficientSequence.zero(64), g, TWO_PI * 10) == 0

    def test_no_cutoff(self):
        F = box(1.0, 0.05, 64)
        r = TWO_PI * 20
        assert localization_bound(F, constant(), r) == pytest.approx(norms(pf_partial_sum(F, r))["a_norm"])

    @pytest.mark.parametrize("c", [2.0, -0.5, 3j])
    def test_homogeneous(self, c):
        F, g = box(2.0, 0.05, 128), raised_cosine_cutoff(2.0, 0.1, 0.2, 128)
        r = TWO_PI * 30
        assert localization_bound(F, g.scaled(c), r) == pytest.approx(abs(c) * localization_bound(F, g, r))

    def test_box_decreases(self):
        bounds = [row[1] for row in torus_demo(M=512)]
        assert all(a > b for a, b in zip(bounds, bounds[1:]))

    def test_point_mass_coefficients(self):
        pm = point_mass(0.0, 3)
        assert np.allclose(pm.coefficients, 1 / SQRT_2PI)
