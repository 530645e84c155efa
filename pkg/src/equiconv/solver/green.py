"""Green's function and resolvent action, for D^n and for general coefficients."""

import numpy as np

from .. import kernels
from ..errors import CapExceeded, NearPole
from ..model import principal_rho
from ..regularity import unit_roots
from .fss import MAX_NUMERIC_ORDER, RHO_CAP, model_fss, plus_set
from .running import running_integrals, scan_edges

POLE_TOL = 1e-6


# --------------------------------------------------------------------------
# model operator D^n
# --------------------------------------------------------------------------

def _require_leading(bc):
    if any(r.lower for r in bc.rows):
        raise ValueError("the exponential route needs boundary rows without lower-order terms")


def model_eta(bc, rho, plus=None):
    """eta[nu, k] = eps_k^sigma_nu (b_nu z_k(1) + a_nu z_k(0))."""
    n = bc.n
    fss = model_fss(n, rho)
    plus = fss.plus if plus is None else tuple(plus)
    kap = rho * unit_roots(n)
    isplus = np.isin(np.arange(n), plus)
    z0 = np.where(isplus, 1.0, np.exp(-1j * kap))
    z1 = np.where(isplus, np.exp(1j * kap), 1.0)
    eps = unit_roots(n)
    sig = bc.sigma[:, None]
    return eps[None, :] ** sig * (bc.b[:, None] * z1[None, :] + bc.a[:, None] * z0[None, :])


def model_eta_batch(bc, rhos, plus):
    """eta for many rho with a fixed plus set, shape (B, n, n)."""
    n = bc.n
    rhos = np.asarray(rhos, dtype=complex)
    eps = unit_roots(n)
    kap = rhos[:, None] * eps[None, :]
    isplus = np.isin(np.arange(n), plus)
    with np.errstate(over="ignore", invalid="ignore"):
        z0 = np.where(isplus[None, :], 1.0, np.exp(-1j * kap))
        z1 = np.where(isplus[None, :], np.exp(1j * kap), 1.0)
    sig = bc.sigma[None, :, None]
    return eps[None, None, :] ** sig * (bc.b[None, :, None] * z1[:, None, :] + bc.a[None, :, None] * z0[:, None, :])


def _w_coefficients(bc, plus):
    """c[nu, m] = eps_m^-(n-1-sigma_nu) d_{m nu}, with d = b (m in plus) or -a."""
    n = bc.n
    eps = unit_roots(n)
    isplus = np.isin(np.arange(n), plus)
    d = np.where(isplus[None, :], bc.b[:, None], -bc.a[:, None])
    return eps[None, :] ** (-(n - 1 - bc.sigma[:, None])) * d


def _check_pole(eta, tol=POLE_TOL):
    s = np.linalg.svd(eta, compute_uv=False)
    if s[-1] <= tol * max(s[0], 1.0):
        raise NearPole(f"smallest singular value of eta is {s[-1]:.3g}")


def green_model(bc, x, xi, rho):
    """G(x, xi, rho) for D^n with leading-only normalized rows."""
    _require_leading(bc)
    n = bc.n
    rho = complex(rho)
    x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
    fss = model_fss(n, rho)
    plus = fss.plus
    eta = model_eta(bc, rho, plus)
    _check_pole(eta)
    eps = unit_roots(n)
    kap = fss.kappa
    isplus = np.isin(np.arange(n), plus)
    d = x[..., None] - xi[..., None]
    terms = eps ** (-(n - 1)) * np.exp(1j * kap * d)
    g = 1j * np.where(d[..., 0] > 0, np.sum(terms[..., isplus], axis=-1),
                      -np.sum(terms[..., ~isplus], axis=-1))
    z = np.exp(1j * kap * np.where(isplus, x[..., None], x[..., None] - 1.0))
    u = np.exp(1j * kap * np.where(isplus, 1.0 - xi[..., None], -xi[..., None]))
    W = u @ _w_coefficients(bc, plus).T  # (..., nu)
    corr = np.einsum("...k,...k->...", z, np.linalg.solve(eta, W[..., None]).squeeze(-1)
                     if W.ndim == 1 else np.linalg.solve(eta[None], W.reshape(-1, n, 1)).reshape(W.shape))
    return (g - 1j * corr) / (n * rho ** (n - 1))


def resolvent_model(bc, f, rhos, x_grid, breakpoints=(), free_only=False):
    """Values of G(f)(x, rho) on ``x_grid`` for each rho, shape (len(rhos), len(x)).

    With ``free_only`` the boundary correction is dropped, giving the action
    of g_0 alone.
    """
    _require_leading(bc)
    n = bc.n
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    eps = unit_roots(n)
    edges, idx = scan_edges(x_grid, breakpoints)
    x = edges[idx]
    out = np.empty((rhos.size, x.size), dtype=complex)
    plus_sets = [plus_set(n, r) for r in rhos]
    isplus = np.array([np.isin(np.arange(n), p) for p in plus_sets])  # (B, n)
    kap = rhos[:, None] * eps[None, :]
    F = running_integrals(f, kap.ravel(), edges, isplus.ravel()).reshape(rhos.size, n, edges.size)
    for b, rho in enumerate(rhos):
        Fb = F[b][:, idx]  # (n, len x)
        sgn = np.where(isplus[b], 1.0, -1.0)
        gf = 1j * np.sum((sgn * eps ** (-(n - 1)))[:, None] * Fb, axis=0)
        if free_only:
            out[b] = gf / (n * rho ** (n - 1))
            continue
        eta = model_eta(bc, rho, plus_sets[b])
        _check_pole(eta)
        uf = np.where(isplus[b], F[b][:, -1], F[b][:, 0])  # int u_m f
        Wf = _w_coefficients(bc, plus_sets[b]) @ uf
        c = np.linalg.solve(eta, Wf)
        z = np.exp(1j * kap[b][:, None] * np.where(isplus[b][:, None], x[None, :], x[None, :] - 1.0))
        out[b] = (gf - 1j * (c @ z)) / (n * rho ** (n - 1))
    return out


# --------------------------------------------------------------------------
# general coefficients
# --------------------------------------------------------------------------

def _check_cap(n, lams, rho_cap):
    if n > MAX_NUMERIC_ORDER:
        raise CapExceeded(f"numeric integration supports n <= {MAX_NUMERIC_ORDER}")
    big = np.max(np.abs(lams)) ** (1.0 / n) if np.size(lams) else 0.0
    if big > rho_cap:
        raise CapExceeded(f"|rho| = {big:.3g} exceeds cap {rho_cap:.3g}")


def coefficient_callback(expr, forcing=None):
    """x -> (p_0(x), ..., p_{n-1}(x), f(x)) as a complex vector."""
    n = expr.n
    evs = [(k, c.scalar()) for k, c in expr.coefficients.items() if not c.is_zero()]
    buf = np.zeros(n + 1, dtype=complex)

    def coeff(x):
        out = buf.copy()
        for k, ev in evs:
            out[k] = ev(x)
        if forcing is not None:
            out[n] = forcing(np.array([x]))[0]
        return out

    return coeff


def fundamental_states(expr, lams, stops, tol=1e-10, forcing=None):
    """Integrate the initial-value basis (and optionally a forced column).

    Returns the stop abscissae and the states, shape (len(stops), B, n, n[+1]).
    """
    n = expr.n
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    cols = n + (forcing is not None)
    v0 = np.zeros((lams.size, n, cols), dtype=complex)
    v0[:, :, :n] = np.eye(n)
    stops = sorted(set(stops) | set(expr.breakpoints))
    xs, vs = kernels.dp5_linear(lams, v0, 0.0, 1.0, stops, coefficient_callback(expr, forcing), tol,
                                forced=forcing is not None)
    return xs, np.array(vs)


def _bc_matrices(bc):
    M = bc.form_matrix()
    n = bc.n
    return M[:, :n], M[:, n:]


def resolvent_general(op, f, lams, x_grid, tol=1e-10, rho_cap=RHO_CAP, breakpoints=()):
    """G(f)(x) = y_p + Y c for each lambda; shape (len(lams), len(x))."""
    n = op.n
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    _check_cap(n, lams, rho_cap)
    x_grid = np.asarray(x_grid, dtype=float)
    stops = sorted(set(x_grid.tolist()) | set(op.expr.breakpoints) | set(breakpoints))
    xs, states = fundamental_states(op.expr, lams, stops, tol, forcing=f)
    sel = _nearest(xs, x_grid)
    A0, A1 = _bc_matrices(op.bc)
    end = states[-1]  # (B, n, n+1)
    U = A0[None] + A1[None] @ end[:, :, :n]
    rhs = -(A1[None] @ end[:, :, n:])  # particular column starts from zero data
    _check_u(U)
    c = np.linalg.solve(U, rhs)[..., 0]  # (B, n)
    vals = states[sel][:, :, 0, :]  # first component: (len x, B, n+1)
    return (np.einsum("xbk,bk->bx", vals[:, :, :n], c) + vals[:, :, n].T)


def _nearest(xs, pts, tol=1e-11):
    """Indices of the stops matching ``pts`` (stops may have been merged)."""
    xs = np.asarray(xs)
    pts = np.asarray(pts, dtype=float)
    idx = np.clip(np.searchsorted(xs, pts), 1, xs.size - 1)
    left = np.abs(pts - xs[idx - 1]) <= np.abs(pts - xs[idx])
    idx = np.where(left, idx - 1, idx)
    if np.any(np.abs(xs[idx] - pts) > tol):
        raise ValueError("requested abscissa is not among the integration stops")
    return idx


def _check_u(U, tol=POLE_TOL):
    for Ub in np.atleast_3d(U) if U.ndim == 3 else [U]:
        s = np.linalg.svd(Ub, compute_uv=False)
        if s[-1] <= tol * max(s[0], 1.0) * 1e-6:
            raise NearPole(f"boundary matrix nearly singular (sigma_min={s[-1]:.3g})")


def green_general(op, x, xi, lam, tol=1e-10, rho_cap=RHO_CAP):
    """Green's function by variation of constants on the initial-value basis."""
    n = op.n
    lam = complex(lam)
    _check_cap(n, [lam], rho_cap)
    x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
    pts = sorted(set(x.ravel().tolist()) | set(xi.ravel().tolist()) | set(op.expr.breakpoints))
    xs, states = fundamental_states(op.expr, [lam], pts, tol)
    Phi = states[:, 0]
    A0, A1 = _bc_matrices(op.bc)
    P1 = states[-1, 0]
    U = A0 + A1 @ P1
    _check_u(U[None])
    e = np.zeros(n, dtype=complex)
    e[-1] = 1j
    out = np.empty(x.shape, dtype=complex)
    for ind in np.ndindex(x.shape):
        xv, sv = float(x[ind]), float(xi[ind])
        ix, isv = _nearest(xs, [xv, sv])
        jump = np.linalg.solve(Phi[isv], e)  # coefficients of the delta response
        c = -np.linalg.solve(U, A1 @ (P1 @ jump))
        val = Phi[ix][0] @ c
        if xv > sv:
            val += Phi[ix][0] @ jump
        out[ind] = val
    return out


def green(op, x, xi, rho, tol=1e-10):
    """G(x, xi) at spectral parameter rho (lambda = rho^n).

    D^n with leading-only rows uses the exponential determinant form; every
    other operator goes through variation of constants.
    """
    if op.is_model:
        return green_model(op.bc, x, xi, rho)
    return green_general(op, x, xi, complex(rho) ** op.n, tol)


def resolvent(op, f, rho_or_lams, x_grid, tol=1e-10, breakpoints=(), by="rho"):
    """Dispatch resolvent action; ``by`` tells whether the values are rho or lambda."""
    vals = np.atleast_1d(np.asarray(rho_or_lams, dtype=complex))
    if op.is_model:
        rhos = vals if by == "rho" else np.array([principal_rho(v, op.n) for v in vals])
        return resolvent_model(op.bc, f, rhos, x_grid, breakpoints)
    lams = vals ** op.n if by == "rho" else vals
    return resolvent_general(op, f, lams, x_grid, tol, breakpoints=breakpoints)
