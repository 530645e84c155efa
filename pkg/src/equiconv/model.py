"""Operators, boundary conditions and sampled functions on [0, 1].

Throughout, ``D = -i d/dx``. A differential expression of order ``n`` is

    l(y) = D^n y + sum_k p_k(x) D^k y,

and boundary conditions are stored in normalized (Salaff) form: one row per
condition, each row carrying its leading order ``sigma``, the coefficients
``a`` of ``D^sigma y(0)`` and ``b`` of ``D^sigma y(1)``, and optional
lower-order terms.
"""

from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.interpolate import CubicSpline

from .errors import NotSmooth, RankDeficient

DEFAULT_GRID = 400
RANK_TOL = 1e-12
BRANCH_SNAP = 1e-9


# --------------------------------------------------------------------------
# coefficients
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Coefficient:
    """A coefficient p_k on [0, 1].

    ``kind`` is one of ``polynomial`` (ascending coefficients), ``step``
    (``breaks`` of length m+1 and ``values`` of length m) or ``samples``
    (values on a uniform grid, interpolated by a cubic spline).
    """

    kind: str
    data: tuple
    breaks: tuple = ()

    def __post_init__(self):
        if self.kind not in ("polynomial", "step", "samples"):
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "step" and len(self.breaks) != len(self.data) + 1:
            raise ValueError("step coefficient needs len(breaks) == len(values) + 1")
        if self.kind == "samples" and len(self.data) < 4:
            raise ValueError("sampled coefficient needs at least 4 samples")

    @classmethod
    def polynomial(cls, coeffs):
        return cls("polynomial", tuple(complex(c) for c in coeffs))

    @classmethod
    def constant(cls, c):
        return cls.polynomial([c])

    @classmethod
    def step(cls, breaks, values):
        return cls("step", tuple(complex(v) for v in values), tuple(float(b) for b in breaks))

    @classmethod
    def samples(cls, values):
        return cls("samples", tuple(complex(v) for v in values))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            return P.polyval(x, np.asarray(self.data)) + 0j * x
        if self.kind == "step":
            idx = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, len(self.data) - 1)
            return np.asarray(self.data)[idx]
        return self._spline(x)

    def scalar(self):
        """A fast evaluator of one float argument returning a complex."""
        if self.kind == "polynomial":
            cs = tuple(reversed(self.data))

            def ev(x):
                acc = 0j
                for c in cs:
                    acc = acc * x + c
                return acc
            return ev
        if self.kind == "step":
            import bisect
            br, vals = self.breaks, self.data
            last = len(vals) - 1

            def ev(x):
                return vals[min(max(bisect.bisect_right(br, x) - 1, 0), last)]
            return ev
        spl = self._spline
        return lambda x: complex(spl(x))

    @cached_property
    def _spline(self):
        vals = np.asarray(self.data)
        grid = np.linspace(0.0, 1.0, len(vals))
        return CubicSpline(grid, vals)

    @property
    def breakpoints(self):
        return tuple(self.breaks[1:-1]) if self.kind == "step" else ()

    def is_zero(self):
        return self.kind != "samples" and not np.any(np.abs(np.asarray(self.data)) > 0)


@dataclass(frozen=True)
class DifferentialExpression:
    """``D^n y + sum_k p_k D^k y``; ``p_{n-1}`` only if ``smooth_subleading``."""

    n: int
    coefficients: dict = field(default_factory=dict)
    smooth_subleading: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("order must be >= 1")
        for k in self.coefficients:
            if not 0 <= k < self.n:
                raise ValueError(f"coefficient index {k} out of range for n={self.n}")
        if (self.n - 1) in self.coefficients and not self.smooth_subleading and self.n > 1:
            raise NotSmooth("p_{n-1} given without the smooth flag")

    def __hash__(self):
        return hash((self.n, tuple(sorted(self.coefficients.items())), self.smooth_subleading))

    @property
    def is_model(self):
        """True when the expression is exactly D^n."""
        return all(c.is_zero() for c in self.coefficients.values())

    def coefficient_values(self, x):
        """Array of shape (n, len(x)) with p_k(x) (zeros where absent)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros((self.n, x.size), dtype=complex)
        for k, c in self.coefficients.items():
            out[k] = c(x)
        return out

    @property
    def breakpoints(self):
        pts = set()
        for c in self.coefficients.values():
            pts.update(c.breakpoints)
        return tuple(sorted(pts))


# --------------------------------------------------------------------------
# boundary conditions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BCRow:
    order: int
    a: complex
    b: complex
    lower: tuple = ()  # ((j, c0, c1), ...) with j < order


@dataclass(frozen=True)
class NormalizedBoundaryConditions:
    rows: tuple

    def __post_init__(self):
        n = len(self.rows)
        r = self.multiplicities
        if sum(r) != n or any(m > 2 for m in r):
            raise RankDeficient(f"order multiplicities {r} invalid for n={n}")
        for j in range(n):
            block = [(row.a, row.b) for row in self.rows if row.order == j]
            if block and np.linalg.matrix_rank(np.array(block, dtype=complex), tol=RANK_TOL) != len(block):
                raise RankDeficient(f"leading coefficients of order {j} are dependent")

    @property
    def n(self):
        return len(self.rows)

    @property
    def multiplicities(self):
        n = len(self.rows)
        r = [0] * n
        for row in self.rows:
            if not 0 <= row.order < n:
                raise RankDeficient(f"row order {row.order} outside 0..{n - 1}")
            r[row.order] += 1
        return r

    @property
    def chi(self):
        """Total order: sum of j * r_j."""
        return sum(j * rj for j, rj in enumerate(self.multiplicities))

    @property
    def sigma(self):
        return np.array([row.order for row in self.rows])

    @property
    def a(self):
        return np.array([row.a for row in self.rows], dtype=complex)

    @property
    def b(self):
        return np.array([row.b for row in self.rows], dtype=complex)

    def form_matrix(self):
        """(n, 2n) matrix of every row against [D^j y(0)]_j ++ [D^j y(1)]_j."""
        n = self.n
        M = np.zeros((n, 2 * n), dtype=complex)
        for i, row in enumerate(self.rows):
            M[i, row.order] = row.a
            M[i, n + row.order] = row.b
            for j, c0, c1 in row.lower:
                M[i, j] += c0
                M[i, n + j] += c1
        return M

    def leading_only(self):
        return NormalizedBoundaryConditions(tuple(BCRow(r.order, r.a, r.b) for r in self.rows))

    def scaled(self, row_index, c):
        rows = list(self.rows)
        r = rows[row_index]
        rows[row_index] = BCRow(r.order, c * r.a, c * r.b,
                                tuple((j, c * u, c * v) for j, u, v in r.lower))
        return NormalizedBoundaryConditions(tuple(rows))


@dataclass(frozen=True)
class RawForm:
    """A general two-point form: coefficients of D^j y(0) and D^j y(1)."""

    at0: tuple
    at1: tuple

    @classmethod
    def from_derivatives(cls, at0, at1):
        """Build from coefficients of the classical derivatives y^(j).

        Since y^(j) = i^j D^j y, a coefficient c of y^(j) becomes c * i^j.
        """
        return cls(tuple(complex(c) * 1j ** j for j, c in enumerate(at0)),
                   tuple(complex(c) * 1j ** j for j, c in enumerate(at1)))


def normalize_bc(raw_forms, tol=RANK_TOL):
    """Reduce n independent two-point forms to normalized (Salaff) rows.

    Elimination runs from the highest derivative order down. Within an order
    of multiplicity 2 the leading pairs become (1, 0) and (0, 1); a single row
    is scaled so that its first non-negligible leading coefficient equals 1.

    Examples
    --------
    >>> bc = normalize_bc([RawForm((1, 0), (1, 0)), RawForm((1, 0), (-1, 0))])
    >>> [(r.order, r.a, r.b) for r in bc.rows]
    [(0, (1+0j), 0j), (0, 0j, (1+0j))]
    """
    if isinstance(raw_forms, NormalizedBoundaryConditions):
        M = raw_forms.form_matrix()
    else:
        forms = list(raw_forms)
        n = len(forms)
        M = np.zeros((n, 2 * n), dtype=complex)
        for i, f in enumerate(forms):
            if len(f.at0) != n or len(f.at1) != n:
                raise ValueError("each raw form needs n coefficients at each endpoint")
            M[i, :n] = f.at0
            M[i, n:] = f.at1
    n = M.shape[0]
    scale = max(np.abs(M).max(), 1.0)
    pool = list(range(n))
    result = []  # (order, row vector)
    for j in range(n - 1, -1, -1):
        cols = [j, n + j]
        block = M[np.ix_(pool, cols)]
        rank = np.linalg.matrix_rank(block, tol=tol * scale) if pool else 0
        if rank == 0:
            continue
        if rank == 2:
            # solve for combinations of pool rows producing (1,0) and (0,1)
            picks = _independent_pair(block, tol * scale)
            rows = M[[pool[p] for p in picks]]
            inv = np.linalg.inv(rows[:, cols])
            new = inv @ rows
            for p in sorted(picks, reverse=True):
                pool.pop(p)
            for i in pool:
                M[i] -= M[i, j] * new[0] + M[i, n + j] * new[1]
            result.append((j, new[0]))
            result.append((j, new[1]))
        else:
            p = int(np.argmax(np.abs(block).max(axis=1)))
            row = M[pool[p]].copy()
            lead = row[j] if abs(row[j]) > tol * scale else row[n + j]
            row = row / lead
            pool.pop(p)
            piv = j if abs(row[j]) > tol * scale else n + j
            for i in pool:
                M[i] -= M[i, piv] * row
            result.append((j, row))
        for i in pool:
            M[i, cols] = np.where(np.abs(M[i, cols]) <= tol * scale, 0.0, M[i, cols])
    if len(result) != n:
        raise RankDeficient("boundary forms are linearly dependent")
    rows = []
    for j, vec in result:
        lower = tuple((k, _clean(vec[k]), _clean(vec[n + k])) for k in range(j)
                      if abs(vec[k]) > tol * scale or abs(vec[n + k]) > tol * scale)
        rows.append(BCRow(j, _clean(vec[j]), _clean(vec[n + j]), lower))
    rows.sort(key=lambda r: (r.order, 0 if abs(r.a) > 0 else 1))
    return NormalizedBoundaryConditions(tuple(rows))


def _clean(z, tol=1e-14):
    z = complex(z)
    return complex(0.0 if abs(z.real) < tol else z.real, 0.0 if abs(z.imag) < tol else z.imag)


def _independent_pair(block, tol):
    m = block.shape[0]
    best, pair = -1.0, (0, 1)
    for i in range(m):
        for k in range(i + 1, m):
            d = abs(np.linalg.det(block[[i, k]]))
            if d > best:
                best, pair = d, (i, k)
    return list(pair)


# --------------------------------------------------------------------------
# operators
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorSpec:
    expr: DifferentialExpression
    bc: NormalizedBoundaryConditions
    label: str = ""

    def __post_init__(self):
        if self.expr.n != self.bc.n:
            raise ValueError(f"order {self.expr.n} but {self.bc.n} boundary rows")

    @property
    def n(self):
        return self.expr.n

    @property
    def is_model(self):
        """Pure D^n with leading-only boundary rows."""
        return self.expr.is_model and all(not r.lower for r in self.bc.rows)

    @classmethod
    def model(cls, bc, label=""):
        return cls(DifferentialExpression(bc.n), bc, label)

    def with_coefficients(self, coefficients, label=None):
        expr = DifferentialExpression(self.n, dict(coefficients))
        return OperatorSpec(expr, self.bc, self.label if label is None else label)


def bc_rows(*rows):
    """Shorthand: ``bc_rows((0, 1, 0), (0, 0, 1))`` builds normalized rows."""
    return NormalizedBoundaryConditions(tuple(BCRow(int(s), complex(a), complex(b)) for s, a, b in rows))


def dirichlet2():
    return OperatorSpec.model(bc_rows((0, 1, 0), (0, 0, 1)), "dirichlet")


def neumann2():
    return OperatorSpec.model(bc_rows((1, 1, 0), (1, 0, 1)), "neumann")


def periodic2():
    return OperatorSpec.model(bc_rows((0, 1, -1), (1, 1, -1)), "periodic")


# --------------------------------------------------------------------------
# functions on [0, 1]
# --------------------------------------------------------------------------

EXTENSIONS = ("zero", "constant-endpoints", "none")


@dataclass(frozen=True)
class SampledFunction:
    """A function on [0, 1] with a deterministic rule outside it.

    ``evaluator`` is applied on [0, 1]; outside, ``extension`` decides:
    ``zero`` returns 0, ``constant-endpoints`` repeats f(0) / f(1), ``none``
    calls the evaluator anyway.
    """

    evaluator: Callable
    N: int = DEFAULT_GRID
    domain: str = "unit-interval"
    extension: str = "zero"
    breakpoints: tuple = ()
    spec: Optional[dict] = None  # serializable description, if any

    def __post_init__(self):
        if self.N < 16:
            raise ValueError("grid size N must be >= 16")
        if self.extension not in EXTENSIONS:
            raise ValueError(f"unknown extension {self.extension!r}")

    @property
    def grid(self):
        return np.linspace(0.0, 1.0, self.N + 1)

    @property
    def samples(self):
        return self(self.grid)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.extension == "none":
            return np.asarray(self.evaluator(x), dtype=complex) + 0j * x
        inside = (x >= 0.0) & (x <= 1.0)
        out = np.zeros(x.shape, dtype=complex)
        if np.any(inside):
            out[inside] = self.evaluator(x[inside])
        if self.extension == "constant-endpoints":
            lo, hi = self.endpoint_values()
            out[x < 0.0] = lo
            out[x > 1.0] = hi
        return out

    def endpoint_values(self):
        v = np.asarray(self.evaluator(np.array([0.0, 1.0])), dtype=complex) + 0j
        return complex(v[0]), complex(v[1])

    def is_zero(self):
        return self.spec is not None and self.spec.get("kind") == "zero"

    def replace(self, **kw):
        d = dict(evaluator=self.evaluator, N=self.N, domain=self.domain,
                 extension=self.extension, breakpoints=self.breakpoints, spec=self.spec)
        d.update(kw)
        return SampledFunction(**d)

    # constructors ------------------------------------------------------
    @classmethod
    def from_callable(cls, fn, N=DEFAULT_GRID, breakpoints=(), spec=None):
        def ev(x):
            return np.asarray(fn(x), dtype=complex) + 0j * np.asarray(x)
        return cls(ev, N=N, breakpoints=tuple(breakpoints), spec=spec)

    @classmethod
    def zero(cls, N=DEFAULT_GRID):
        return cls(lambda x: np.zeros(np.shape(x), dtype=complex), N=N, spec={"kind": "zero"})

    @classmethod
    def polynomial(cls, coeffs, N=DEFAULT_GRID):
        c = np.asarray(coeffs, dtype=complex)
        return cls(lambda x: P.polyval(x, c) + 0j, N=N,
                   spec={"kind": "polynomial", "payload": {"coeffs": [[z.real, z.imag] for z in c]}})

    @classmethod
    def step(cls, breaks, values, N=DEFAULT_GRID):
        coeff = Coefficient.step(breaks, values)
        return cls(coeff, N=N, breakpoints=coeff.breakpoints,
                   spec={"kind": "step", "payload": {"breaks": list(coeff.breaks),
                                                     "values": [[v.real, v.imag] for v in coeff.data]}})

    @classmethod
    def from_samples(cls, values):
        vals = np.asarray(values, dtype=complex)
        spline = CubicSpline(np.linspace(0.0, 1.0, len(vals)), vals)
        return cls(lambda x: spline(x), N=max(16, len(vals) - 1),
                   spec={"kind": "samples", "payload": {"values": [[v.real, v.imag] for v in vals]}})


def reflect(f):
    """f#(x) = f(1 - x)."""
    ev = f.evaluator
    return f.replace(evaluator=lambda x: ev(1.0 - np.asarray(x)),
                     breakpoints=tuple(sorted(1.0 - b for b in f.breakpoints)), spec=None)


def extend_tilde(f):
    """Constant continuation of f beyond both endpoints."""
    return f.replace(domain="real-line-extended", extension="constant-endpoints")


def split_endpoint(f):
    """Return (P, f0) with P affine, P(0)=f(0), P(1)=f(1) and f0 = f - P."""
    f0v, f1v = f.endpoint_values()
    ev = f.evaluator

    def p(x):
        x = np.asarray(x, dtype=float)
        return f0v * (1.0 - x) + f1v * x

    def g(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(ev(x), dtype=complex) - p(x)

    Pf = SampledFunction(p, N=f.N, spec={"kind": "polynomial", "payload": {
        "coeffs": [[f0v.real, f0v.imag], [(f1v - f0v).real, (f1v - f0v).imag]]}})
    return Pf, f.replace(evaluator=g, extension="zero", domain="unit-interval", spec=None)


# --------------------------------------------------------------------------
# removing a smooth p_{n-1}
# --------------------------------------------------------------------------

def _poly_D(c):
    """Coefficients of D applied to a polynomial (D = -i d/dx)."""
    return -1j * P.polyder(c) if len(c) > 1 else np.zeros(1, dtype=complex)


def eliminate_subleading(expr, N=2000):
    """Substitute y = V z with V = exp(-(i/n) int_0^x p_{n-1}).

    Returns the transformed expression (no D^{n-1} term) and V. Boundary
    conditions must be conjugated by V by the caller.
    """
    n = expr.n
    top = expr.coefficients.get(n - 1)
    if top is None or top.is_zero():
        one = SampledFunction(lambda x: np.ones(np.shape(x), dtype=complex), N=DEFAULT_GRID)
        coeffs = {k: c for k, c in expr.coefficients.items() if k != n - 1}
        return DifferentialExpression(n, coeffs), one
    if not expr.smooth_subleading:
        raise NotSmooth("p_{n-1} must be flagged smooth")

    if top.kind == "polynomial":
        pc = np.asarray(top.data, dtype=complex)
        integ = P.polyint(pc)

        def V(x):
            return np.exp(-1j / n * P.polyval(np.asarray(x, dtype=float), integ))

        w = -pc / n  # DV / V
        # T_j = D^j V / V as polynomials: T_{j+1} = D T_j + w T_j
        T = [np.array([1.0 + 0j])]
        for _ in range(n):
            T.append(P.polyadd(_poly_D(T[-1]), P.polymul(w, T[-1])))
        all_poly = all(c.kind == "polynomial" for c in expr.coefficients.values())
        grid = np.linspace(0.0, 1.0, N + 1)
        new = {}
        for m in range(n - 1):
            if all_poly:
                q = np.zeros(1, dtype=complex)
                for k in range(m, n + 1):
                    pk = np.array([1.0 + 0j]) if k == n else np.asarray(
                        expr.coefficients[k].data if k in expr.coefficients else [0j], dtype=complex)
                    q = P.polyadd(q, comb(k, m) * P.polymul(pk, T[k - m]))
                if np.any(np.abs(q) > 1e-15):
                    new[m] = Coefficient.polynomial(np.trim_zeros(q, "b") if np.any(q) else [0])
            else:
                vals = np.zeros(grid.size, dtype=complex)
                for k in range(m, n + 1):
                    pk = np.ones(grid.size) if k == n else (
                        expr.coefficients[k](grid) if k in expr.coefficients else 0.0)
                    vals = vals + comb(k, m) * pk * P.polyval(grid, T[k - m])
                new[m] = Coefficient.samples(vals)
        Vf = SampledFunction(V, N=DEFAULT_GRID, extension="none")
        return DifferentialExpression(n, new), Vf

    # non-polynomial smooth p_{n-1}: spline derivatives
    grid = np.linspace(0.0, 1.0, N + 1)
    pv = top(grid)
    spl = CubicSpline(grid, pv)
    anti = spl.antiderivative()

    def V(x):
        return np.exp(-1j / n * anti(np.asarray(x, dtype=float)))

    w = [-spl.derivative(d)(grid) * (-1j) ** d / n if d else -pv / n for d in range(n)]
    # T_j on the grid via the same recursion, D acting through the stored derivatives
    Tder = [[np.ones(grid.size, dtype=complex)] + [np.zeros(grid.size, dtype=complex)] * n]
    for j in range(n):
        prev = Tder[-1]
        nxt = []
        for d in range(n - j):
            # D^d (D T + w T) = D^{d+1} T + sum_e C(d,e) D^e w D^{d-e} T
            acc = prev[d + 1].copy()
            for e in range(d + 1):
                acc += comb(d, e) * w[e] * prev[d - e] if e < len(w) else 0
            nxt.append(acc)
        nxt += [np.zeros(grid.size, dtype=complex)] * (n + 1 - len(nxt))
        Tder.append(nxt)
    new = {}
    for m in range(n - 1):
        vals = np.zeros(grid.size, dtype=complex)
        for k in range(m, n + 1):
            pk = np.ones(grid.size) if k == n else (
                expr.coefficients[k](grid) if k in expr.coefficients else 0.0)
            vals = vals + comb(k, m) * pk * Tder[k - m][0]
        new[m] = Coefficient.samples(vals)
    return DifferentialExpression(n, new), SampledFunction(V, N=DEFAULT_GRID, extension="none")


# --------------------------------------------------------------------------
# spectral points
# --------------------------------------------------------------------------

def principal_rho(lam, n):
    """The root of rho^n = lam on the fixed branch.

    Even n uses 0 <= arg(lambda) < 2 pi, so arg(rho) is in [0, 2 pi / n). Odd n
    takes arg(rho) = arg(lambda) / n near the positive axis and
    pi - (pi - arg(lambda)) / n near the negative one.
    """
    lam = complex(lam)
    if lam == 0:
        return 0j
    arg = np.angle(lam)
    if n % 2 == 0:
        if arg < -BRANCH_SNAP:
            arg += 2 * np.pi
        elif arg < 0:
            arg = 0.0  # points on the cut belong to arg = 0
        return abs(lam) ** (1.0 / n) * np.exp(1j * arg / n)
    if abs(arg) <= np.pi / 2:
        return abs(lam) ** (1.0 / n) * np.exp(1j * arg / n)
    arg = arg % (2 * np.pi)  # now in [pi/2, 3 pi/2]
    return abs(lam) ** (1.0 / n) * np.exp(1j * (np.pi - (np.pi - arg) / n))


def sector_of(rho, n, tol=1e-12):
    """Return 'S1' or 'S2' for rho in S_0; raise ValueError otherwise."""
    if rho == 0:
        return "S1"
    phi = float(np.angle(rho))
    if n % 2 == 0:
        if phi < -tol:
            phi += 2 * np.pi
        if -tol <= phi < np.pi / n + tol:
            return "S1"
        if phi < 2 * np.pi / n + tol:
            return "S2"
        raise ValueError(f"arg rho = {phi} outside S_0")
    half = np.pi / (2 * n)
    if abs(phi) <= half + tol:
        return "S1"
    if abs(np.pi - abs(phi)) <= half + tol:
        return "S2"
    raise ValueError(f"arg rho = {phi} outside S_0")


@dataclass(frozen=True)
class SpectralPoint:
    """Paired (lambda, rho) with rho on the fixed branch and its sector."""

    lam: complex
    rho: complex
    sector: str

    @classmethod
    def from_lambda(cls, lam, n):
        rho = principal_rho(lam, n)
        return cls(complex(lam), rho, sector_of(rho, n))

    @classmethod
    def from_rho(cls, rho, n):
        rho = complex(rho)
        return cls(rho ** n, rho, sector_of(rho, n))
