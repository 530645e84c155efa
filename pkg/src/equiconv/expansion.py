"""Eigenfunction-expansion partial sums and their trigonometric comparisons.

Partial sums are Cauchy integrals of the resolvent,

    S_r(f) = -(2 pi i)^{-1} \\oint_{|lambda| = r^n} G(f)(x, lambda) d lambda,

evaluated either on the large circle (``S_r_contour``) or as a sum of small
circles around the characteristic values inside it (``S_r_residues``).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import exp1, sici

from .errors import CapExceeded, ClusterTooTight, DegenerateGeometry, NoSeparatingAlpha, ToleranceNotMet
from .model import DEFAULT_GRID, SampledFunction, principal_rho
from .quadrature import composite_rule, quad, rule_from_edges
from .solver.charvalues import CharValueSet, find_char_values
from .solver.green import resolvent_general, resolvent_model

EPS_MIN = 0.3
N_ALPHA = 64
# the variation-of-constants resolvent loses about exp(r) relative digits on
# the large circle, so the contour form is limited to small radii there
GENERAL_CONTOUR_CAP = 12.0
RESIDUE_NODES = 32
CLUSTER_REL = 1e-3


def default_grid(N=DEFAULT_GRID):
    return np.linspace(0.0, 1.0, N + 1)


# --------------------------------------------------------------------------
# radius schedule
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RadiusSchedule:
    """Radii r_k = 2 pi k + alpha kept at distance >= eps_min from all ch.v."""

    alpha: float
    ks: tuple
    radii: tuple
    separation: float
    eps_min: float = EPS_MIN

    def __post_init__(self):
        if np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must increase strictly")

    def radius(self, k):
        return self.radii[self.ks.index(k)]

    def to_json(self):
        return {"alpha": self.alpha, "k": list(self.ks), "radii": list(self.radii),
                "separation": self.separation, "eps_min": self.eps_min}


def _moduli(obj):
    if isinstance(obj, CharValueSet):
        return np.abs(np.asarray(obj.rho_values, dtype=complex)), obj.R
    arr = np.abs(np.asarray(obj, dtype=complex).ravel())
    return arr, np.inf


def choose_radii(charsets, k_range=(5, 25), eps_min=EPS_MIN, n_alpha=N_ALPHA):
    """Pick alpha in [0, 2 pi) maximizing the distance of the circles to the ch.v.

    Parameters
    ----------
    charsets : sequence of CharValueSet or arrays of rho
    k_range : (k_first, k_last), inclusive
    eps_min : float
        Smallest acceptable separation.

    Raises
    ------
    NoSeparatingAlpha
        If no alpha on the grid keeps every radius eps_min away.

    Examples
    --------
    >>> s = choose_radii([np.pi * np.arange(1, 60)], (5, 8))
    >>> round(s.alpha / np.pi, 6), round(s.separation / np.pi, 6)
    (0.5, 0.5)
    """
    ks = np.arange(k_range[0], k_range[1] + 1)
    mods = [_moduli(c) for c in charsets]
    alphas = 2 * np.pi * np.arange(n_alpha) / n_alpha
    best, best_sep = None, -np.inf
    for a in alphas:
        radii = 2 * np.pi * ks + a
        if radii[0] <= 0:
            continue
        sep = np.inf
        for m, R in mods:
            if radii[-1] + eps_min > R:
                raise ValueError(f"characteristic values known only up to |rho| = {R}")
            if m.size:
                sep = min(sep, float(np.min(np.abs(m[:, None] - radii[None, :]))))
        if sep > best_sep + 1e-12:
            best, best_sep = a, sep
    if best is None or best_sep < eps_min:
        raise NoSeparatingAlpha(f"best separation {best_sep:.3g} < eps_min = {eps_min}")
    radii = tuple(float(v) for v in 2 * np.pi * ks + best)
    return RadiusSchedule(float(best), tuple(int(k) for k in ks), radii, float(best_sep), eps_min)


# --------------------------------------------------------------------------
# results
# --------------------------------------------------------------------------

@dataclass
class PartialSumResult:
    x: np.ndarray
    values: np.ndarray
    method: str
    r: float
    label: str = ""
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError(f"non-finite values in {self.method} partial sum")

    def sup(self, lo=-np.inf, hi=np.inf):
        sel = (self.x >= lo - 1e-12) & (self.x <= hi + 1e-12)
        return float(np.max(np.abs(self.values[sel]))) if np.any(sel) else 0.0

    def __sub__(self, other):
        return PartialSumResult(self.x, self.values - other.values, f"{self.method}-{other.method}",
                                self.r, self.label)


# --------------------------------------------------------------------------
# trigonometric sums
# --------------------------------------------------------------------------

def _dirichlet_matrix(r, x, nodes):
    # (1/pi) sin r(x - s)/(x - s), with value r/pi on the diagonal
    return (r / np.pi) * np.sinc((r / np.pi) * (x[:, None] - nodes[None, :]))


def sigma_r(f: SampledFunction, r, x_grid=None, tol=1e-10, max_rounds=6):
    """Dirichlet integral (1/pi) int sin r(x - s)/(x - s) f(s) ds.

    The integral runs over [0, 1]; a ``constant-endpoints`` extension adds the
    two half-line tails in closed form through the sine integral.

    Examples
    --------
    >>> f = SampledFunction.from_callable(lambda s: np.ones_like(s))
    >>> v = sigma_r(f, 40.0, np.array([0.5])).values[0].real
    >>> round(v - 2 * sici(20.0)[0] / np.pi, 9)
    0.0
    """
    r = float(r)
    x = default_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    prev = None
    for k in range(max_rounds):
        nodes, w = composite_rule(0.0, 1.0, r, f.breakpoints, refine=2 ** k)
        fw = f(nodes) * w
        cur = _dirichlet_matrix(r, x, nodes) @ fw
        if prev is not None and np.max(np.abs(cur - prev)) <= tol * max(1.0, np.max(np.abs(cur))):
            break
        prev = cur
    else:
        raise ToleranceNotMet(f"Dirichlet integral did not settle at r={r}")
    if f.extension == "constant-endpoints":
        f0, f1 = f.endpoint_values()
        si_left = sici(r * x)[0]
        si_right = sici(r * (1.0 - x))[0]
        cur = cur + f0 * (0.5 - si_left / np.pi) + f1 * (0.5 - si_right / np.pi)
    return PartialSumResult(x, cur, "dirichlet", r)


def sigma_r_pi(f: SampledFunction, r, x_grid=None, tol=1e-12):
    """Fourier-series partial sum over the modes exp(2 pi i j x), |j| <= r / 2 pi."""
    x = default_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    J = int(np.floor(r / (2 * np.pi) + 1e-12))
    j = np.arange(-J, J + 1)
    nodes, w = composite_rule(0.0, 1.0, 2 * np.pi * max(J, 1), f.breakpoints, refine=2)
    coef = np.exp(-2j * np.pi * j[:, None] * nodes[None, :]) @ (f(nodes) * w)
    vals = np.exp(2j * np.pi * x[:, None] * j[None, :]) @ coef
    return PartialSumResult(x, vals, "fourier-series", float(r), info={"coefficients": coef, "modes": j})


# --------------------------------------------------------------------------
# contour form
# --------------------------------------------------------------------------

def _resolvent_lams(op, f, lams, x, tol):
    if op.is_model:
        rhos = np.array([principal_rho(v, op.n) for v in lams])
        return resolvent_model(op.bc, f, rhos, x, f.breakpoints)
    return resolvent_general(op, f, lams, x, tol=tol, breakpoints=f.breakpoints)


def _arcs(n):
    """Arcs of S_0 on the unit circle as (phi_start, phi_end)."""
    if n % 2 == 0:
        return [(0.0, 2 * np.pi / n)]
    h = np.pi / (2 * n)
    return [(-h, h), (np.pi - h, np.pi + h)]


def _initial_nodes(r, n):
    return int(max(64, np.ceil(8 * r)))


def S_r_contour(op, f: SampledFunction, r, x_grid=None, measure="lambda", tol=1e-9,
                M=None, max_doublings=5, ode_tol=1e-12):
    """Partial sum over the circle |rho| = r.

    ``measure="lambda"`` applies the trapezoid rule to
    -(2 pi i)^{-1} \\oint G(f) d lambda on |lambda| = r^n; ``measure="rho"``
    integrates -(2 pi i)^{-1} \\int G(f) n rho^{n-1} d rho over the arcs of the
    sector S_0 with composite Gauss-Legendre panels. Both compute the same
    number; node counts double until two levels agree to ``tol``.

    Raises
    ------
    NearPole
        If the circle passes too close to a characteristic value.
    CapExceeded
        For general coefficients with r above ``GENERAL_CONTOUR_CAP``.
    """
    n = op.n
    r = float(r)
    x = default_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    if not op.is_model and r > GENERAL_CONTOUR_CAP:
        raise CapExceeded(f"contour form for variable coefficients needs r <= {GENERAL_CONTOUR_CAP}"
                          "; use the residue form")
    M0 = _initial_nodes(r, n) if M is None else int(M)
    if measure == "lambda":
        vals, used, err = _trapezoid_circle(lambda lams: _resolvent_lams(op, f, lams, x, ode_tol),
                                            r ** n, M0, tol, max_doublings)
    elif measure == "rho":
        vals, used, err = _gl_arcs(lambda rhos: _resolvent_lams(op, f, rhos ** n, x, ode_tol) * rhos[:, None] ** n,
                                   r, n, M0, tol, max_doublings)
    else:
        raise ValueError(f"unknown measure {measure!r}")
    return PartialSumResult(x, vals, "contour", r, op.label,
                            info={"nodes": used, "error_estimate": err, "measure": measure})


def _trapezoid_circle(resolvent_at, radius, M, tol, max_doublings):
    """-(1/M) sum lambda_m G(lambda_m) on a circle, with nested doubling."""
    theta0 = np.pi / M
    thetas = theta0 + 2 * np.pi * np.arange(M) / M
    lams = radius * np.exp(1j * thetas)
    terms = lams[:, None] * resolvent_at(lams)
    total = terms.sum(axis=0)
    est = -total / M
    for _ in range(max_doublings + 1):
        Mn = 2 * M
        new_th = theta0 + 2 * np.pi * (np.arange(M) + 0.5) / M
        lams = radius * np.exp(1j * new_th)
        total = total + (lams[:, None] * resolvent_at(lams)).sum(axis=0)
        new_est = -total / Mn
        err = float(np.max(np.abs(new_est - est)))
        M, est = Mn, new_est
        if err <= tol * max(1.0, float(np.max(np.abs(est)))):
            return est, M, err
    raise ToleranceNotMet(f"circle quadrature did not settle with {M} nodes (change {err:.3g})")


def _gl_arcs(weighted_at, r, n, M, tol, max_doublings):
    """-(n / 2 pi) int lambda G d phi over the arcs of S_0.

    ``weighted_at(rhos)`` returns lambda * G(f) at the given rho.
    """
    n_panels = max(1, int(np.ceil(M / 12)))
    prev = None
    for _ in range(max_doublings + 2):
        acc = 0.0
        used = 0
        for a, b in _arcs(n):
            # distribute panels in proportion to arc length
            frac = (b - a) * n / (2 * np.pi)
            edges = np.linspace(a, b, max(1, int(np.ceil(n_panels * frac))) + 1)
            phis, w = rule_from_edges(edges)
            rhos = r * np.exp(1j * phis)
            acc = acc + w @ weighted_at(rhos)
            used += phis.size
        est = -(n / (2 * np.pi)) * acc
        if prev is not None:
            err = float(np.max(np.abs(est - prev)))
            if err <= tol * max(1.0, float(np.max(np.abs(est)))):
                return est, used, err
        prev = est
        n_panels *= 2
    raise ToleranceNotMet(f"arc quadrature did not settle with {used} nodes")


def S_r0(n, f: SampledFunction, r, x_grid=None, tol=1e-9, max_doublings=6):
    """Contribution of the free kernel g_0 alone to the arc integral.

    g_0 depends on the branch, so the integrand jumps where the arcs of S_0
    end; the quadrature therefore runs over the arcs, not around the circle.
    """
    r = float(r)
    x = default_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    bc = _leading_dummy(n)

    def weighted(rhos):
        return resolvent_model(bc, f, rhos, x, f.breakpoints, free_only=True) * rhos[:, None] ** n

    vals, used, err = _gl_arcs(weighted, r, n, _initial_nodes(r, n), tol, max_doublings)
    return PartialSumResult(x, vals, "free-term", r, f"D^{n}", info={"nodes": used, "error_estimate": err})


def _leading_dummy(n):
    # any leading-only rows will do: the free kernel never reads them
    from .model import BCRow, NormalizedBoundaryConditions
    q = n // 2
    rows = [BCRow(j, 1.0, 0.0) for j in range(q)] + [BCRow(j, 0.0, 1.0) for j in range(n - q)]
    return NormalizedBoundaryConditions(tuple(rows))


# --------------------------------------------------------------------------
# residue form
# --------------------------------------------------------------------------

def _groups(lams, n, rel=CLUSTER_REL):
    """Single-linkage groups of eigenvalues closer than rel * |lambda|^((n-1)/n)."""
    lams = np.asarray(lams, dtype=complex)
    m = lams.size
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    scale = np.maximum(np.abs(lams), 1.0)
    for i in range(m):
        for j in range(i + 1, m):
            if abs(lams[i] - lams[j]) < rel * max(scale[i], scale[j]) ** ((n - 1) / n):
                parent[find(i)] = find(j)
    out = {}
    for i in range(m):
        out.setdefault(find(i), []).append(i)
    return list(out.values())


def residue_circles(lams, n, outer_radius=None, shrink=0.1, nest=4.0):
    """Centres and radii of small lambda-circles, one per group of eigenvalues.

    The radius is ``shrink`` times the distance to the nearest eigenvalue
    outside the group (plus the group's own spread). ``outer_radius`` keeps
    every circle inside |lambda| < outer_radius.

    Raises
    ------
    ClusterTooTight
        When a joint circle cannot stay ``nest`` radii away from the rest.
    """
    lams = np.asarray(lams, dtype=complex)
    groups = _groups(lams, n)
    circles = []
    for g in groups:
        centre = complex(np.mean(lams[g]))
        spread = float(np.max(np.abs(lams[g] - centre)))
        others = np.delete(lams, g)
        gap = float(np.min(np.abs(others - centre))) if others.size else max(abs(centre), 1.0)
        if outer_radius is not None:
            gap = min(gap, 2 * (outer_radius - abs(centre)))
        rad = spread * 1.5 + shrink * (gap - spread)
        if len(g) > 1 and nest * rad > gap:
            raise ClusterTooTight(f"cluster of {len(g)} eigenvalues near {centre:.6g} cannot be isolated")
        circles.append((centre, rad, tuple(g)))
    return circles


def S_r_residues(op, f: SampledFunction, r, x_grid=None, cvs: Optional[CharValueSet] = None,
                 nodes=RESIDUE_NODES, ode_tol=1e-11):
    """Sum of spectral projections for the ch.v. with |rho| < r.

    Each eigenvalue (or tight group) contributes
    -(2 pi i)^{-1} \\oint G(f) d lambda over a small circle, computed by the
    trapezoid rule with ``nodes`` points.
    """
    n = op.n
    r = float(r)
    x = default_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    if cvs is None:
        cvs = find_char_values(op, r + 1.0)
    inside = [rho for rho in cvs.rho_values if abs(rho) < r]
    if not inside:
        return PartialSumResult(x, np.zeros(x.size, dtype=complex), "residue", r, op.label,
                                info={"count": 0})
    lams = np.array([rho ** n for rho in inside])
    circles = residue_circles(lams, n, outer_radius=r ** n)
    th = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
    unit = np.exp(1j * th)
    pts = np.concatenate([c + rad * unit for c, rad, _ in circles])
    G = _resolvent_lams(op, f, pts, x, ode_tol).reshape(len(circles), nodes, x.size)
    out = np.zeros(x.size, dtype=complex)
    for i, (c, rad, _) in enumerate(circles):
        # -(1/2 pi i) oint G d lambda with d lambda = i rad e^{i theta} d theta
        out += -(rad / nodes) * (unit @ G[i])
    return PartialSumResult(x, out, "residue", r, op.label,
                            info={"count": len(inside), "circles": len(circles)})


# --------------------------------------------------------------------------
# remainder kernel for even orders
# --------------------------------------------------------------------------

def oskina_indices(n):
    """Exponents eps used in I_1 and I_2 for even n >= 4."""
    if n % 2 or n < 4:
        raise ValueError("the kernel is defined for even n >= 4")
    if n % 4 == 0:
        k = n // 4
        j = np.arange(k + 1, 3 * k)
    else:
        k = (n - 2) // 4
        j = np.arange(k + 1, 3 * k + 1) + 0.5
    return np.exp(2j * np.pi * j / n)


def _oskina_tail(eps, a, b, H):
    """Exact int_H^inf of the whole integrand, via Si and E1."""
    out = 0.5 * np.pi - sici(H * (a + b))[0]
    for e in eps:
        # int_H^inf cos(eta a) exp(eta e b) / eta = (E1(H(-e b - i a)) + E1(H(-e b + i a))) / 2
        out += np.conj(e) * 0.5 * (exp1(H * (-e * b - 1j * a)) + exp1(H * (-e * b + 1j * a)))
        out -= e * 0.5 * (exp1(H * (-e * a - 1j * b)) + exp1(H * (-e * a + 1j * b)))
    return complex(out)


def oskina_kernel(n, r, x, xi, t, tol=1e-10, extra=200 * np.pi):
    """L_r(x, xi, t) for even n >= 4.

    The integrand is integrated numerically over [r, r + extra] and the
    remaining tail is added in closed form.

    Raises
    ------
    DegenerateGeometry
        If x = xi = t.
    """
    a, b = abs(x - xi), abs(xi - t)
    if a == 0.0 and b == 0.0:
        raise DegenerateGeometry("|x - xi| and |xi - t| both vanish")
    eps = oskina_indices(n)
    r = float(r)
    H = r + extra

    def integrand(eta):
        eta = np.asarray(eta, dtype=float)[:, None]
        I1 = np.sum(np.conj(eps) * np.exp(eta * eps * b), axis=1)
        I2 = np.sum(eps * np.exp(eta * eps * a), axis=1)
        e = eta[:, 0]
        return (np.sin(e * (a + b)) + np.cos(e * a) * I1 - np.cos(e * b) * I2) / e

    head = quad(integrand, r, H, rate=a + b, tol=tol)
    return head + _oskina_tail(eps, a, b, H)


def oskina_kernel_closed(n, r, x, xi, t):
    """Closed form of the same kernel (the tail formula started at r)."""
    a, b = abs(x - xi), abs(xi - t)
    if a == 0.0 and b == 0.0:
        raise DegenerateGeometry("|x - xi| and |xi - t| both vanish")
    return _oskina_tail(oskina_indices(n), a, b, float(r))


def partial_sum(op, f: SampledFunction, r, x_grid=None, cvs: Optional[CharValueSet] = None, **kw):
    """S_r(f): contour form for D^n, residue form otherwise."""
    if op.is_model:
        return S_r_contour(op, f, r, x_grid, **kw)
    return S_r_residues(op, f, r, x_grid, cvs=cvs, **kw)
