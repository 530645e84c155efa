"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Tolerances and limits are pinned as module constants and never relaxed.
"""

import time

import numpy as np
import pytest

from conftest import bump
from equiconv.equiconv import (I_r, alpha_numbers, decay_exponent, nondegeneracy, odd_reduction,
                               second_order_identity_residual)
from equiconv.expansion import S_r0, S_r_contour, S_r_residues, _arcs, choose_radii, partial_sum, sigma_r
from equiconv.model import (Coefficient, OperatorSpec, SampledFunction, bc_rows, dirichlet2, neumann2, periodic2)
from equiconv.regularity import classify, random_operator, square_operator
from equiconv.singular import closed_form_agreement, levitan_marchenko_residuals
from equiconv.solver.charvalues import find_char_values
from equiconv.solver.green import green
from equiconv.torus import commutator_bound_holds, random_sequence, torus_demo

THETA_TOL = 1e-12
SPECTRUM_TOL = 1e-8
GREEN_SPREAD = 10.0
FREE_TERM_TOL = 1e-6
CROSS_TOL = 1e-6
TRIG_FACTOR = 0.25
ORDER_TWO_FACTOR = 1 / 3
EXPONENT_RANGE = (0.8, 1.2)
WHOLE_FACTOR = 4.0
PARITY_TOL = 1e-10
ODD_TOL = 1e-8
COMMUTATOR_SLACK = 1e-12
LM_FACTOR = 0.5
LM_AGREEMENT = 0.02


def hinged4():
    return OperatorSpec.model(bc_rows((0, 1, 0), (2, 1, 0), (0, 0, 1), (2, 0, 1)), "hinged4")


def mixed2():
    return OperatorSpec.model(bc_rows((0, 1, 0), (1, 1, 1)), "mixed")


def schedule_for(op, k_last):
    cv = find_char_values(op, 2 * np.pi * (k_last + 1) + 1.0)
    return choose_radii([cv], (5, k_last)), cv


def test_regularity_gallery(acceptance):
    t = time.perf_counter()
    thetas = [classify(f()).theta_01 for f in (dirichlet2, neumann2, periodic2)]
    split = classify(OperatorSpec.model(bc_rows((0, 1, 0), (1, 1, 0)), "split")).verdict
    ok = np.allclose(thetas, [1, -1, 2], atol=THETA_TOL) and split == "Irregular"
    detail = f"theta = {[round(z.real, 12) for z in thetas]}, decomposing problem {split}"
    assert acceptance(1, ok, detail, time.perf_counter() - t, 1)


def test_squaring_theorem(acceptance):
    t = time.perf_counter()
    rng = np.random.default_rng(2024)
    agree, verdicts = 0, []
    for i in range(50):
        op = random_operator(rng, 2 + i % 2)
        v = classify(op).verdict
        verdicts.append(v)
        agree += v == classify(square_operator(op)).verdict
    detail = f"{agree}/50 agree ({verdicts.count('Irregular')} irregular samples)"
    assert acceptance(2, agree == 50, detail, time.perf_counter() - t, 10)


def test_spectrum_oracle(acceptance):
    t = time.perf_counter()
    cv = find_char_values(dirichlet2(), 20.5 * np.pi)
    rho = np.array(cv.rho_values)
    j = np.arange(1, 21)
    err = float(np.max(np.abs(rho - j * np.pi))) if rho.size == 20 else np.inf
    # residual of each root against its fitted progression 2 pi m + c
    res = np.array([abs(r - cv.fit_c[p] - 2 * np.pi * np.round((r - cv.fit_c[p]).real / (2 * np.pi)))
                    for r, p in zip(rho, cv.progression_ids)])
    head, tail = res[:10].max(), res[10:].max()
    ok = err < SPECTRUM_TOL and tail <= head + 1e-12
    detail = f"max |rho_j - j pi| = {err:.1e} over {rho.size} roots, fit residual {head:.1e} -> {tail:.1e}"
    assert acceptance(3, ok, detail, time.perf_counter() - t, 30)


def test_green_bound(acceptance):
    t = time.perf_counter()
    g = np.linspace(0, 1, 21)
    X, XI = np.meshgrid(g, g, indexing="ij")
    spreads = {}
    for op in (dirichlet2(), hinged4()):
        sch, _ = schedule_for(op, 20)
        vals = []
        for k in range(5, 21):
            r = sch.radius(k)
            m = 0.0
            for a, b in _arcs(op.n):
                for phi in np.linspace(a, b, 16):
                    m = max(m, float(np.abs(green(op, X, XI, r * np.exp(1j * phi))).max()))
            vals.append(m * r ** (op.n - 1))
        spreads[op.label] = max(vals) / min(vals)
    ok = all(v < GREEN_SPREAD for v in spreads.values())
    detail = "max/min of sup|G| r^(n-1): " + ", ".join(f"{k} {v:.2f}" for k, v in spreads.items())
    assert acceptance(4, ok, detail, time.perf_counter() - t, 120)


def test_free_term_identity(acceptance):
    t = time.perf_counter()
    x = np.linspace(0, 1, 101)
    funcs = [SampledFunction.from_callable(lambda s: s * (1 - s) * np.exp(s)),
             SampledFunction.step([0, 0.4, 1], [1.0, -0.5]),
             SampledFunction.from_callable(lambda s: np.cos(5 * s) + 1j * s)]
    worst = 0.0
    for k in (5, 10, 20):
        r = 2 * np.pi * k + np.pi / 2
        for f in funcs:
            worst = max(worst, float(np.max(np.abs(S_r0(2, f, r, x).values - sigma_r(f, r, x).values))))
    assert acceptance(5, worst < FREE_TERM_TOL, f"sup |S_r0 - sigma_r| = {worst:.1e}",
                      time.perf_counter() - t, 60)


def test_contour_vs_residue(acceptance):
    t = time.perf_counter()
    fs = [SampledFunction.from_callable(lambda s: s * (1 - s)),
          SampledFunction.from_callable(lambda s: np.sin(3 * s) + s ** 2),
          SampledFunction.step([0, 0.4, 1], [1.0, -0.5]),
          SampledFunction.from_callable(lambda s: np.exp(-20 * (s - 0.5) ** 2)),
          SampledFunction.from_callable(lambda s: np.abs(s - 0.3), breakpoints=(0.3,))]
    x = np.linspace(0, 1, 101)
    worst = {}
    for op in (dirichlet2(), hinged4()):
        sch, cv = schedule_for(op, 20)
        w = 0.0
        for k in (5, 10, 20):
            r = sch.radius(k)
            for f in fs:
                a = S_r_contour(op, f, r, x).values
                b = S_r_residues(op, f, r, x, cvs=cv).values
                w = max(w, float(np.max(np.abs(a - b))))
        worst[op.label] = w
    ok = all(v <= CROSS_TOL for v in worst.values())
    detail = "max difference " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert acceptance(6, ok, detail, time.perf_counter() - t, 300)


def test_trigonometric_equiconvergence(acceptance):
    t = time.perf_counter()
    op = dirichlet2().with_coefficients({0: Coefficient.polynomial([0, 1])}, "D2+x")
    f = SampledFunction.step([0.0, 0.3, 0.7, 1.0], [0.0, 1.0, 0.5])
    x = np.linspace(0, 1, 401)
    sch, cv = schedule_for(op, 25)
    norms = []
    for k in (5, 25):
        r = sch.radius(k)
        norms.append((S_r_residues(op, f, r, x, cvs=cv) - sigma_r(f, r, x)).sup(0.2, 0.8))
    ratio = norms[1] / norms[0]
    detail = f"||S - sigma||_C[0.2,0.8]: k=5 {norms[0]:.2e}, k=25 {norms[1]:.2e}, ratio {ratio:.3f}"
    assert acceptance(7, ratio <= TRIG_FACTOR, detail, time.perf_counter() - t, 300)


def test_order_two_identity(acceptance):
    t = time.perf_counter()
    f = SampledFunction.from_callable(lambda s: s * (1 - s) * np.exp(s))
    x = np.linspace(0, 1, 201)
    ratios = {}
    for op in (dirichlet2(), mixed2()):
        sch, cv = schedule_for(op, 25)
        res = [second_order_identity_residual(op, f, sch.radius(k), x, cvs=cv) for k in (5, 25)]
        ratios[op.label] = (res[0], res[1], res[1] / res[0])
    ok = all(v[2] <= ORDER_TWO_FACTOR for v in ratios.values())
    detail = "; ".join(f"{k} {a:.2e} -> {b:.2e} (ratio {c:.3f})" for k, (a, b, c) in ratios.items())
    assert acceptance(8, ok, detail, time.perf_counter() - t, 180)


def test_whole_interval(acceptance):
    t = time.perf_counter()
    f0 = SampledFunction.from_callable(bump(0.2, 0.8))
    op = dirichlet2()
    nd = nondegeneracy(alpha_numbers(op), f0)
    x = np.linspace(0, 1, 201)
    rs = [50.0, 100.0, 200.0, 400.0, 800.0]
    exps = {}
    for sign in ("+", "-"):
        exps[sign] = decay_exponent(rs, [float(np.max(np.abs(I_r(f0, r, sign, x)))) for r in rs])
    sch, cv = schedule_for(op, 25)
    d = [float(np.max(np.abs(partial_sum(op, f0, sch.radius(k), x).values - sigma_r(f0, sch.radius(k), x).values)))
         for k in (5, 25)]
    lo, hi = EXPONENT_RANGE
    exp_ok = all(lo <= e <= hi for e in exps.values())
    dec_ok = d[0] >= WHOLE_FACTOR * d[1]
    ok = nd.span_ok and exp_ok and dec_ok
    detail = (f"nondegeneracy {nd.span_ok}; I_r exponents + {exps['+']:.2f}, - {exps['-']:.2f} "
              f"({'in' if exp_ok else 'outside'} [{lo}, {hi}]); "
              f"||S - sigma|| {d[0]:.2e} -> {d[1]:.2e} ({'ok' if dec_ok else 'too slow'})")
    assert acceptance(9, ok, detail, time.perf_counter() - t, 300)


def test_odd_reduction(acceptance):
    t = time.perf_counter()
    op = random_operator(np.random.default_rng(7), 3, regular_only=True)
    red = odd_reduction(op)
    ok = red.parity_max < PARITY_TOL and red.discrepancy <= ODD_TOL
    detail = (f"parity max {red.parity_max:.1e}, discrepancy {red.discrepancy:.1e} with {red.convention} "
              f"(face-value reading {red.discrepancy_literal:.2g})")
    assert acceptance(10, ok, detail, time.perf_counter() - t, 60)


def test_commutator_lemma(acceptance):
    t = time.perf_counter()
    rng = np.random.default_rng(11)
    worst, fails = 0.0, 0
    for _ in range(1000):
        F = random_sequence(rng, int(rng.integers(1, 40)), decay=float(rng.uniform(0, 1)))
        g = random_sequence(rng, int(rng.integers(1, 12)), "smooth-multiplier", decay=float(rng.uniform(0, 3)))
        r = float(rng.uniform(0, 2 * np.pi * 45))
        lhs, rhs, ok = commutator_bound_holds(F, g, r, slack=COMMUTATOR_SLACK)
        fails += not ok
        worst = max(worst, lhs / rhs if rhs else 0.0)
    detail = f"{1000 - fails}/1000 trials hold, worst lhs/rhs {worst:.3f}"
    assert acceptance(11, fails == 0, detail, time.perf_counter() - t, 10)


def test_localization(acceptance):
    t = time.perf_counter()
    rows = torus_demo(x0=np.pi, width=0.05, inner=0.1, outer=0.2, ks=(10, 20, 40, 80), M=512)
    bounds = [row[1] for row in rows]
    ok = all(a > b for a, b in zip(bounds, bounds[1:]))
    detail = "cutoff bound " + " -> ".join(f"{b:.3f}" for b in bounds)
    assert acceptance(12, ok, detail, time.perf_counter() - t, 10)


def test_levitan_marchenko(acceptance):
    t = time.perf_counter()
    trend = {}
    for h in (1.0, -1.0):
        cur = levitan_marchenko_residuals(None, h, [25.0, 400.0], oracle=False)["free-vs-line"]
        trend[h] = (cur[0], cur[1])
    agree = {h: closed_form_agreement(h, t=100.0) for h in (np.inf, 1.0, 0.0)}
    trend_ok = all(b <= LM_FACTOR * a for a, b in trend.values())
    agree_ok = all(v <= LM_AGREEMENT for v in agree.values())
    detail = ("residual t=25 -> 400: " + ", ".join(f"h={h:g} {a:.2f} -> {b:.2f}" for h, (a, b) in trend.items())
              + f" ({'ok' if trend_ok else 'no decrease'}); oracle gap "
              + ", ".join(f"h={h:g} {v:.2%}" for h, v in agree.items()))
    assert acceptance(13, trend_ok and agree_ok, detail, time.perf_counter() - t, 300)
