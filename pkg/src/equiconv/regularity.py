"""Birkhoff-regularity classification, total order and operator squaring."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import DifferentialExpression, OperatorSpec, RawForm, normalize_bc

ZERO_TOL = 1e-10


def unit_roots(n, index=None):
    """Roots of unity eps_j = exp(2 pi i j / n).

    With ``index`` given (possibly fractional), return the single value
    eps_index.

    Examples
    --------
    >>> np.round(unit_roots(4), 12).tolist()
    [(1+0j), 1j, (-1+0j), -1j]
    """
    if index is not None:
        return np.exp(2j * np.pi * index / n)
    j = np.arange(n)
    eps = np.exp(2j * np.pi * j / n)
    # exact values on the axes
    eps.real[np.abs(eps.real) < 1e-15] = 0.0
    eps.imag[np.abs(eps.imag) < 1e-15] = 0.0
    return eps


def _ordered_rows(bc):
    """Row indices sorted by order, the (1, 0)-type row first within an order."""
    return sorted(range(bc.n), key=lambda i: (bc.rows[i].order, 0 if abs(bc.rows[i].a) > 0 else 1, i))


def theta_matrix(bc, swap=False):
    """The n x n matrix [A_0 .. A_{q-1} | B_q .. B_{n-1}].

    Column k stacks a_nu * eps_k^sigma_nu (k < q) or b_nu * eps_k^sigma_nu
    (k >= q); ``swap`` exchanges the roles of a and b.
    """
    n = bc.n
    q = n // 2
    eps = unit_roots(n)
    idx = _ordered_rows(bc)
    sig = bc.sigma[idx]
    a, b = bc.a[idx], bc.b[idx]
    if swap:
        a, b = b, a
    powers = eps[None, :] ** sig[:, None]
    coef = np.where(np.arange(n)[None, :] < q, a[:, None], b[:, None])
    return coef * powers


def birkhoff_theta(bc, swap=False, n=None):
    """Determinant theta(b0, b1, L) (or theta(b1, b0, L) with ``swap``)."""
    if n is not None and n != bc.n:
        raise ValueError("n does not match the number of boundary rows")
    return complex(np.linalg.det(theta_matrix(bc, swap)))


def _max_minor(M):
    """Largest absolute value over all square minors of M (sizes up to n)."""
    from itertools import combinations

    n = M.shape[0]
    best = float(np.abs(M).max()) if M.size else 0.0
    if n <= 6:
        for size in range(2, n + 1):
            for rows in combinations(range(n), size):
                for cols in combinations(range(n), size):
                    best = max(best, abs(np.linalg.det(M[np.ix_(rows, cols)])))
    else:
        # Hadamard-type bound keeps the threshold relative for large n
        best = max(best, float(np.prod(np.linalg.norm(M, axis=0))))
    return best


@dataclass(frozen=True)
class RegularityReport:
    theta_01: complex
    theta_10: Optional[complex]
    chi: int
    verdict: str
    n_parity: str
    scale: float = 1.0

    def to_json(self):
        def c(z):
            return None if z is None else [z.real, z.imag]
        return {"theta_01": c(self.theta_01), "theta_10": c(self.theta_10), "chi": self.chi,
                "verdict": self.verdict, "n_parity": self.n_parity,
                "note": "theta is defined up to sign by the row ordering"}


def classify(op, tol=ZERO_TOL):
    """Regular / Irregular verdict from the theta determinants.

    Examples
    --------
    >>> from .model import dirichlet2
    >>> classify(dirichlet2()).verdict
    'Regular'
    """
    bc = op.bc if isinstance(op, OperatorSpec) else op
    n = bc.n
    M01 = theta_matrix(bc)
    t01 = complex(np.linalg.det(M01))
    scale = _max_minor(M01)
    t10 = None
    ok = abs(t01) > tol * scale
    if n % 2:
        M10 = theta_matrix(bc, swap=True)
        t10 = complex(np.linalg.det(M10))
        s10 = _max_minor(M10)
        scale = max(scale, s10)
        ok = ok and abs(t10) > tol * s10
    return RegularityReport(t01, t10, bc.chi, "Regular" if ok else "Irregular",
                            "odd" if n % 2 else "even", scale)


def square_operator(op):
    """The order-2n operator with boundary forms U(y) and U(l(y)).

    A row of order sigma with leading pair (a, b) yields the same pair at order
    sigma and at order sigma + n. Only leading parts are produced.
    """
    n = op.n
    forms = []
    for row in op.bc.rows:
        for shift in (0, n):
            at0 = [0j] * (2 * n)
            at1 = [0j] * (2 * n)
            at0[row.order + shift] = row.a
            at1[row.order + shift] = row.b
            forms.append(RawForm(tuple(at0), tuple(at1)))
    bc2 = normalize_bc(forms)
    return OperatorSpec(DifferentialExpression(2 * n), bc2, (op.label + "^2") if op.label else "")


COEFF_POOL = (0, 1, -1, 2, 1j, -1j)


def random_bc(rng, n, pool=COEFF_POOL):
    """Random normalized boundary conditions of order n.

    Orders are drawn with multiplicity at most two; single rows get leading
    pairs from a small pool so that irregular cases occur with positive
    probability.
    """
    from .model import BCRow, NormalizedBoundaryConditions

    while True:
        orders = np.sort(rng.integers(0, n, size=n))
        if np.bincount(orders).max() <= 2:
            break
    rows, seen = [], set()
    for s in orders:
        s = int(s)
        if np.count_nonzero(orders == s) == 2:
            if s not in seen:
                rows += [BCRow(s, 1, 0), BCRow(s, 0, 1)]
                seen.add(s)
            continue
        while True:
            a, b = (complex(pool[i]) for i in rng.integers(0, len(pool), size=2))
            if a != 0 or b != 0:
                break
        c = a if a != 0 else b
        rows.append(BCRow(s, a / c, b / c))
    return NormalizedBoundaryConditions(tuple(rows))


def random_operator(rng, n, regular_only=False, max_tries=1000):
    """D^n with random normalized conditions (optionally rejection-sampled to be regular)."""
    for _ in range(max_tries):
        op = OperatorSpec(DifferentialExpression(n), random_bc(rng, n), f"random{n}")
        if not regular_only or classify(op).verdict == "Regular":
            return op
    raise RuntimeError("no regular sample found")
