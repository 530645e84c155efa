"""Whole-interval equiconvergence: alpha numbers, Phi/Psi, I_r and reports."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AdmissibilityFailed, EndpointNotZero, NotRegular, OrderMismatch, ToleranceNotMet
from .expansion import RadiusSchedule, choose_radii, default_grid, partial_sum, sigma_r
from .model import SampledFunction, extend_tilde, reflect, split_endpoint
from .quadrature import rule_from_edges
from .regularity import birkhoff_theta, classify, square_operator, unit_roots
from .solver.charvalues import find_char_values

ENDPOINT_TOL = 1e-10
ADMISSIBILITY_TOL = 1e-8
SPAN_TOL = 1e-10
DECAY_FACTOR = 0.25
QUAD_TOL = 1e-10

VERDICTS = ("ConsistentWithEquiconvergence", "ConsistentWithDivergence", "Indeterminate")


# --------------------------------------------------------------------------
# alpha numbers
# --------------------------------------------------------------------------

def _cofactors(M):
    n = M.shape[0]
    C = np.empty_like(M)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(M, i, axis=0), j, axis=1)
            C[i, j] = (-1) ** (i + j) * (np.linalg.det(minor) if n > 1 else 1.0)
    return C


@dataclass(frozen=True)
class AlphaTable:
    n: int
    q: int
    Theta: complex
    cofactors: np.ndarray
    d: np.ndarray
    alpha: np.ndarray
    matrix: np.ndarray = field(repr=False, default=None)

    def laplace_residual(self):
        """max_k |sum_nu M[nu, k] cof[nu, k] - Theta| / |Theta|."""
        col = np.sum(self.matrix * self.cofactors, axis=0)
        return float(np.max(np.abs(col - self.Theta)) / abs(self.Theta))

    def __getitem__(self, mk):
        return self.alpha[mk]

    def to_json(self):
        return {"n": self.n, "q": self.q, "Theta": [self.Theta.real, self.Theta.imag],
                "alpha": [[[z.real, z.imag] for z in row] for row in self.alpha]}


def alpha_numbers(op, tol=1e-10):
    """alpha_{mk} = (1/2 pi) sum_nu eps_m^{-(n-1-sigma_nu)} d_{m nu} Theta^{nu k} / Theta.

    Rows of the boundary conditions are taken in their stored order; the
    table does not depend on that order or on row scaling.

    Raises
    ------
    NotRegular
        If n is odd or Theta vanishes.
    """
    bc = op.bc
    n = bc.n
    if n % 2:
        raise NotRegular("alpha numbers are defined for even order; use odd_reduction")
    q = n // 2
    eps = unit_roots(n)
    sig, a, b = bc.sigma, bc.a, bc.b
    cols = np.arange(n)
    M = np.where(cols[None, :] < q, a[:, None], b[:, None]) * eps[None, :] ** sig[:, None]
    Theta = complex(np.linalg.det(M))
    rep = classify(op)
    if rep.verdict != "Regular" or abs(Theta) <= tol * rep.scale:
        raise NotRegular(f"Theta = {Theta:.3g} vanishes")
    cof = _cofactors(M)
    d = np.where(cols[:, None] < q, b[None, :], -a[None, :])  # d[m, nu]
    c = eps[:, None] ** (-(n - 1 - sig[None, :])) * d  # c[m, nu]
    alpha = (c @ cof) / (2 * np.pi * Theta)
    return AlphaTable(n, q, Theta, cof, d, alpha, M)


def beta_numbers(op1, op2):
    """beta_{mk} = alpha_{mk}(op1) - alpha_{mk}(op2)."""
    if op1.n != op2.n:
        raise OrderMismatch(f"orders {op1.n} and {op2.n} differ")
    return alpha_numbers(op1).alpha - alpha_numbers(op2).alpha


def _table(obj):
    return obj.alpha if isinstance(obj, AlphaTable) else np.asarray(obj, dtype=complex)


# --------------------------------------------------------------------------
# Phi / Psi
# --------------------------------------------------------------------------

def _combo(f0, u, v):
    """u f0 + v f0#, extended by zero."""
    fr = reflect(f0)
    ev, evr = f0.evaluator, fr.evaluator
    bps = tuple(sorted(set(f0.breakpoints) | set(fr.breakpoints)))

    def g(x):
        return u * np.asarray(ev(x), dtype=complex) + v * np.asarray(evr(x), dtype=complex)

    return SampledFunction(g, N=f0.N, extension="zero", breakpoints=bps)


def check_endpoints(f0, tol=ENDPOINT_TOL):
    lo, hi = f0.endpoint_values()
    if abs(lo) > tol or abs(hi) > tol:
        raise EndpointNotZero(f"f0(0) = {lo:.3g}, f0(1) = {hi:.3g}")


def phi_psi(f0: SampledFunction, table):
    """Phi_k = a_{qk} f0 + a_{0k} f0#, Psi_k = a_{n-1,k} f0 + a_{q-1,k} f0#.

    ``table`` is an AlphaTable or any n x n array (e.g. beta numbers).
    """
    check_endpoints(f0)
    A = _table(table)
    n = A.shape[0]
    q = n // 2
    Phi = [_combo(f0, A[q, k], A[0, k]) for k in range(n)]
    Psi = [_combo(f0, A[n - 1, k], A[q - 1, k]) for k in range(n)]
    return Phi, Psi


@dataclass(frozen=True)
class Nondegeneracy:
    det1: complex
    det2: complex
    det2_printed: complex
    span_ok: bool
    rank: int
    psi_pair: tuple

    def to_json(self):
        return {"det1": [self.det1.real, self.det1.imag], "det2": [self.det2.real, self.det2.imag],
                "det2_printed": [self.det2_printed.real, self.det2_printed.imag],
                "span_ok": self.span_ok, "rank_f0_f0sharp": self.rank, "psi_pair": list(self.psi_pair)}


def _pair_spans(coef, basis_rank, s, scale):
    """Does the pair with coefficient rows ``coef`` (in f0, f0#) span span(f0, f0#)?"""
    thr = SPAN_TOL * max(scale, 1e-300)
    if basis_rank == 0:
        return True
    if basis_rank == 2:
        return abs(np.linalg.det(coef)) > thr * max(scale, 1.0)
    # f0# = s f0: each member reduces to (u + v s) f0
    red = coef[:, 0] + coef[:, 1] * s
    return bool(np.max(np.abs(red)) > thr)


def nondegeneracy(table, f0: SampledFunction):
    """The two 2 x 2 determinants and the span test.

    The Phi pair is (0, q) and the Psi pair is (q-1, n-1); ``det2`` is the
    coefficient determinant of that Psi pair, while ``det2_printed`` keeps
    the determinant with entries (q-1,q-1), (n-1,q), (q-1,n-1), (n-1,n-1).
    """
    A = _table(table)
    n = A.shape[0]
    q = n // 2
    det1 = complex(A[0, 0] * A[q, q] - A[q, 0] * A[0, q])
    phi_coef = np.array([[A[q, 0], A[0, 0]], [A[q, q], A[0, q]]])
    psi_coef = np.array([[A[n - 1, q - 1], A[q - 1, q - 1]], [A[n - 1, n - 1], A[q - 1, n - 1]]])
    det2 = complex(np.linalg.det(psi_coef))
    det2_printed = complex(A[q - 1, q - 1] * A[n - 1, n - 1] - A[n - 1, q] * A[q - 1, n - 1])
    # rank of {f0, f0#} from grid samples
    x = f0.grid
    S = np.vstack([f0(x), f0(1.0 - x)])
    sv = np.linalg.svd(S, compute_uv=False)
    rank = int(np.sum(sv > SPAN_TOL * max(sv[0], 1e-300))) if sv[0] > 0 else 0
    s = 0.0
    if rank == 1:
        i = int(np.argmax(np.abs(S[0])))
        s = S[1, i] / S[0, i]
    scale = float(np.max(np.abs(A))) ** 2
    ok = _pair_spans(phi_coef, rank, s, scale) and _pair_spans(psi_coef, rank, s, scale)
    return Nondegeneracy(det1, det2, det2_printed, bool(ok), rank, (q - 1, n - 1))


# --------------------------------------------------------------------------
# I_r
# --------------------------------------------------------------------------

def _graded_edges(r, breakpoints=(), ratio=1.5):
    lo = 1.0 / r
    cap = np.pi / (4.0 * r)
    edges = [lo]
    while edges[-1] < 1.0:
        e = edges[-1]
        step = min((ratio - 1.0) * e, cap)
        edges.append(min(1.0, e + step))
    edges = np.unique(np.concatenate([edges, [b for b in breakpoints if lo < b < 1.0]]))
    return edges


def _refined(edges, k):
    if k == 1:
        return edges
    t = np.linspace(0.0, 1.0, k + 1)[:-1]
    h = np.diff(edges)
    return np.concatenate([(edges[:-1, None] + h[:, None] * t[None, :]).ravel(), edges[-1:]])


def I_r(f0: SampledFunction, r, sign=+1, x_grid=None, tol=QUAD_TOL, max_rounds=5):
    """int_{1/r}^1 exp(+-i r xi) f0(xi) / (x + xi) d xi on a grid of x.

    Panels grow geometrically (ratio 1.5) from xi = 1/r and are capped at the
    oscillation width pi / (4 r).
    """
    r = float(r)
    if r < 2:
        raise ValueError("r must be at least 2")
    sgn = 1.0 if sign in (+1, "+") else -1.0
    x = default_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    base = _graded_edges(r, f0.breakpoints)
    prev = None
    for k in range(max_rounds):
        nodes, w = rule_from_edges(_refined(base, 2 ** k))
        fw = f0(nodes) * np.exp(1j * sgn * r * nodes) * w
        cur = (1.0 / (x[:, None] + nodes[None, :])) @ fw
        if prev is not None and np.max(np.abs(cur - prev)) <= tol * max(1.0, np.max(np.abs(cur))):
            return cur
        prev = cur
    raise ToleranceNotMet(f"I_r did not settle at r = {r}")


def decay_exponent(rs, values):
    """Least-squares slope p in log v = c - p log r."""
    rs, values = np.asarray(rs, dtype=float), np.asarray(values, dtype=float)
    slope = np.polyfit(np.log(rs), np.log(values), 1)[0]
    return float(-slope)


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

def decays(curve, factor=DECAY_FACTOR, floor=5 * QUAD_TOL):
    """Trend rule: last value <= max(factor * first value, floor)."""
    curve = list(curve)
    return bool(curve[-1] <= max(factor * curve[0], floor))


@dataclass
class EquiconvergenceReport:
    mode: str
    labels: tuple
    schedule: RadiusSchedule
    tables: dict
    nondegeneracy: Nondegeneracy
    curves: dict
    verdict: str
    Phi: list = field(default_factory=list, repr=False)
    Psi: list = field(default_factory=list, repr=False)
    notes: list = field(default_factory=list)

    def to_json(self):
        return {"mode": self.mode, "labels": list(self.labels), "schedule": self.schedule.to_json(),
                "tables": {k: [[[z.real, z.imag] for z in row] for row in v] for k, v in self.tables.items()},
                "nondegeneracy": self.nondegeneracy.to_json(),
                "curves": {k: list(map(float, v)) for k, v in self.curves.items()},
                "verdict": self.verdict, "notes": list(self.notes)}

    def curve_rows(self):
        """(k, r, name, value) rows in a fixed order."""
        out = []
        for name in sorted(self.curves):
            for k, r, v in zip(self.schedule.ks, self.schedule.radii, self.curves[name]):
                out.append((k, r, name, float(v)))
        return out


def check_admissible(op, f, tol=ADMISSIBILITY_TOL):
    """f must satisfy the order-0 boundary rows without lower terms."""
    lo, hi = f.endpoint_values()
    for row in op.bc.rows:
        if row.order == 0 and not row.lower:
            val = row.a * lo + row.b * hi
            if abs(val) > tol:
                raise AdmissibilityFailed(f"order-0 row ({row.a}, {row.b}) gives {abs(val):.3g}")


def _schedule(ops, k_range):
    R = 2 * np.pi * (k_range[1] + 1) + 1.0
    cvs = [find_char_values(op, R) for op in ops]
    return choose_radii(cvs, k_range), cvs


def _verdict(track, nd_ok, s_name, factor, trivial=False):
    s_dec = decays(track[s_name], factor)
    if trivial:
        # all combination coefficients vanish, so the I-curves play no role
        return "ConsistentWithEquiconvergence" if s_dec else "Indeterminate"
    if not nd_ok:
        return "Indeterminate"
    i_dec = all(decays(v, factor) for k, v in track.items() if k != s_name)
    if s_dec and i_dec:
        return "ConsistentWithEquiconvergence"
    if not s_dec and not i_dec:
        return "ConsistentWithDivergence"
    return "Indeterminate"


def whole_interval_report(ops, f: SampledFunction, schedule: Optional[RadiusSchedule] = None,
                          k_range=(5, 25), ks=None, x_grid=None, factor=DECAY_FACTOR, cvs=None):
    """Track ||S_r(f) - sigma_r(f~)|| (one operator) or ||S_r(f, L1) - S_r(f, L2)||
    (two operators) together with ||I_r^+-(f0)|| and ||I_r^+-(f0#)||.

    ``ks`` restricts the evaluation to a subset of the schedule.
    """
    ops = list(ops) if isinstance(ops, (list, tuple)) else [ops]
    if len(ops) not in (1, 2):
        raise ValueError("one or two operators expected")
    if len(ops) == 2 and ops[0].n != ops[1].n:
        raise OrderMismatch("operators must have the same order")
    for op in ops:
        check_admissible(op, f)
    x = default_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    if schedule is None:
        schedule, cvs = _schedule(ops, k_range)
    cvs = cvs or [None] * len(ops)
    if ks is not None:
        keep = [i for i, k in enumerate(schedule.ks) if k in ks]
        schedule = RadiusSchedule(schedule.alpha, tuple(schedule.ks[i] for i in keep),
                                  tuple(schedule.radii[i] for i in keep), schedule.separation,
                                  schedule.eps_min)
    _, f0 = split_endpoint(f)
    f0s = reflect(f0)
    notes = ["Psi pair (q-1, n-1) used for the span test"]
    if ops[0].n % 2:
        raise NotRegular("odd order: report on the squared operator (see odd_reduction)")
    if len(ops) == 1:
        table = alpha_numbers(ops[0])
        tables = {"alpha": table.alpha}
        T = table.alpha
        mode = "single-op"
    else:
        t1, t2 = alpha_numbers(ops[0]), alpha_numbers(ops[1])
        T = t1.alpha - t2.alpha
        tables = {"alpha_1": t1.alpha, "alpha_2": t2.alpha, "beta": T}
        mode = "pair-op"
    Phi, Psi = phi_psi(f0, T)
    nd = nondegeneracy(T, f0)
    s_name = "S-sigma" if mode == "single-op" else "S1-S2"
    curves = {s_name: [], "I+(f0)": [], "I-(f0)": [], "I+(f0#)": [], "I-(f0#)": []}
    ft = extend_tilde(f)
    for r in schedule.radii:
        if mode == "single-op":
            S = partial_sum(ops[0], f, r, x, cvs=cvs[0])
            diff = S.values - sigma_r(ft, r, x).values
        else:
            diff = (partial_sum(ops[0], f, r, x, cvs=cvs[0]).values
                    - partial_sum(ops[1], f, r, x, cvs=cvs[1]).values)
        curves[s_name].append(float(np.max(np.abs(diff))))
        for g, tag in ((f0, "f0"), (f0s, "f0#")):
            for sgn in ("+", "-"):
                curves[f"I{sgn}({tag})"].append(float(np.max(np.abs(I_r(g, r, sgn, x)))))
    trivial = bool(np.max(np.abs(T)) <= SPAN_TOL)
    verdict = _verdict(curves, nd.span_ok, s_name, factor, trivial)
    if trivial:
        notes.append("coefficient table vanishes; nondegeneracy not required")
    elif not nd.span_ok:
        notes.append("nondegeneracy failed")
    return EquiconvergenceReport(mode, tuple(op.label for op in ops), schedule, tables, nd, curves,
                                 verdict, Phi, Psi, notes)


# --------------------------------------------------------------------------
# order two
# --------------------------------------------------------------------------

def second_order_terms(op, f: SampledFunction, r, x_grid=None, cvs=None):
    """Both sides of the order-two identity on the grid.

    Returns (lhs, rhs) with lhs = S_r(f) - sigma_r(f~) and
    rhs = -2 pi (sigma_r(Phi_0)(-x) + sigma_r(Phi_1)(x - 1)), Phi built from f0.
    The difference lhs - rhs decays like r^-2.
    """
    if op.n != 2:
        raise OrderMismatch("the identity is stated for second order operators")
    check_admissible(op, f)
    x = default_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    _, f0 = split_endpoint(f)
    Phi, _ = phi_psi(f0, alpha_numbers(op))
    lhs = partial_sum(op, f, r, x, cvs=cvs).values - sigma_r(extend_tilde(f), r, x).values
    rhs = -2 * np.pi * (sigma_r(Phi[0], r, -x).values + sigma_r(Phi[1], r, x - 1.0).values)
    return lhs, rhs


def second_order_identity_residual(op, f: SampledFunction, r, x_grid=None, cvs=None):
    """sup_x |S_r(f) - sigma_r(f~) + 2 pi (sigma_r(Phi_0)(-x) + sigma_r(Phi_1)(x - 1))|.

    When f(0) = f(1) = 0, sigma_r(f~) = sigma_r(f); otherwise the difference is
    the endpoint correction f(0) sigma_r(chi_1) + f(1) sigma_r(chi_2).
    """
    lhs, rhs = second_order_terms(op, f, r, x_grid, cvs)
    return float(np.max(np.abs(lhs - rhs)))


def khromov_curve(op1, op2, f: SampledFunction, r, delta=0.25, n_pts=201):
    """max over [-delta, 0] of |sigma_r(phi_k)| for k = 0, 1 (phi from beta numbers)."""
    _, f0 = split_endpoint(f)
    phi, _ = phi_psi(f0, beta_numbers(op1, op2))
    x = np.linspace(-delta, 0.0, n_pts)
    return [float(np.max(np.abs(sigma_r(p, r, x).values))) for p in phi[:2]]


# --------------------------------------------------------------------------
# odd orders
# --------------------------------------------------------------------------

DELTA_CONVENTIONS = {
    "exp(chi/m)": lambda chi, m: np.exp(chi / m),
    "exp(2 pi i chi/m)": lambda chi, m: np.exp(2j * np.pi * chi / m),
    "exp(-2 pi i chi/m)": lambda chi, m: np.exp(-2j * np.pi * chi / m),
    "exp(pi i chi/m)": lambda chi, m: np.exp(1j * np.pi * chi / m),
    "exp(-pi i chi/m)": lambda chi, m: np.exp(-1j * np.pi * chi / m),
}


@dataclass(frozen=True)
class OddConvention:
    """How to read the closed forms for alpha(L^2).

    delta : key of ``DELTA_CONVENTIONS``
    ratio : "t10/t01" or "t01/t10", the theta quotient inside Omega
    root_base : "n" or "m", the order whose roots of unity eps_j denotes
    last_sign : +1 or -1, extra factor on the alpha_{n-1,n-1} form
    """

    delta: str
    ratio: str
    root_base: str
    last_sign: int

    def __str__(self):
        return f"delta={self.delta}; Omega uses {self.ratio}; eps over {self.root_base}; last sign {self.last_sign:+d}"


LITERAL = OddConvention("exp(chi/m)", "t10/t01", "n", +1)
# fixed by comparison with the directly computed table of the squared operator
PINNED = OddConvention("exp(2 pi i chi/m)", "t01/t10", "m", -1)


def closed_form_alphas(theta01, theta10, chi, m, conv: OddConvention = PINNED):
    """delta, Omega and the four closed-form values keyed by (t, k)."""
    q = (m - 1) // 2
    n = 2 * m
    delta = complex(DELTA_CONVENTIONS[conv.delta](chi, m))
    ratio = theta10 / theta01 if conv.ratio == "t10/t01" else theta01 / theta10
    Omega = ratio / delta ** (q + 1)
    base = n if conv.root_base == "n" else m
    c = 1 / (2 * np.pi)
    return delta, Omega, {
        (0, 0): c * delta * Omega,
        (m - 1, m - 1): c * unit_roots(base, q) * Omega,
        (m, m): c / Omega,
        (n - 1, n - 1): conv.last_sign * c * unit_roots(base, m - 0.5) / (delta * Omega),
    }


def all_conventions():
    return [OddConvention(d, r, b, s) for d in DELTA_CONVENTIONS for r in ("t10/t01", "t01/t10")
            for b in ("n", "m") for s in (+1, -1)]


@dataclass
class OddReduction:
    m: int
    chi: int
    convention: str
    delta: complex
    Omega: complex
    alpha_closed: dict
    alpha_direct: dict
    discrepancy: float
    discrepancy_literal: float
    parity_max: float
    candidates: dict

    def to_json(self):
        c = lambda z: [complex(z).real, complex(z).imag]  # noqa: E731
        return {"m": self.m, "chi": self.chi, "convention": self.convention, "delta": c(self.delta),
                "Omega": c(self.Omega),
                "alpha_closed": {f"{t},{k}": c(v) for (t, k), v in self.alpha_closed.items()},
                "alpha_direct": {f"{t},{k}": c(v) for (t, k), v in self.alpha_direct.items()},
                "discrepancy": self.discrepancy, "discrepancy_literal": self.discrepancy_literal,
                "parity_max": self.parity_max, "candidates": self.candidates}


def odd_reduction(op, convention: OddConvention = PINNED):
    """Closed-form alpha numbers of L^2 for odd m, next to the direct table.

    ``discrepancy`` compares the closed forms read with ``convention``
    against the alpha table of ``square_operator(op)``;
    ``discrepancy_literal`` does the same for the face-value reading, and
    ``candidates`` scores every convention in ``all_conventions()``.
    """
    m = op.n
    if m % 2 == 0:
        raise ValueError("odd order expected")
    rep = classify(op)
    if rep.verdict != "Regular":
        raise NotRegular("operator is not regular")
    A = alpha_numbers(square_operator(op)).alpha
    n = 2 * m
    t, k = np.indices(A.shape)
    parity_max = float(np.max(np.abs(A[(t + k) % 2 == 1])))
    th01 = birkhoff_theta(op.bc)
    th10 = birkhoff_theta(op.bc, swap=True)
    chi = op.bc.chi
    keys = [(0, 0), (m - 1, m - 1), (m, m), (n - 1, n - 1)]
    direct = {key: complex(A[key]) for key in keys}

    def score(conv):
        closed = closed_form_alphas(th01, th10, chi, m, conv)[2]
        return float(max(abs(closed[key] - direct[key]) for key in keys))

    candidates = {str(c): score(c) for c in all_conventions()}
    delta, Omega, closed = closed_form_alphas(th01, th10, chi, m, convention)
    return OddReduction(m, chi, str(convention), delta, Omega, closed, direct, score(convention),
                        score(LITERAL), parity_max, candidates)
