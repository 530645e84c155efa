"""Fundamental systems of solutions of l(y) = lambda y."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import CapExceeded
from ..model import principal_rho
from ..regularity import unit_roots

RHO_CAP = 2 * np.pi * 30
MAX_NUMERIC_ORDER = 4


def plus_set(n, rho):
    """Indices k with arg(rho eps_k) in [0, pi), i.e. Im(rho eps_k) >= 0.

    For even n and 0 <= arg rho < 2 pi / n this is {0, ..., n/2 - 1}.
    """
    if rho == 0:
        return tuple(range(n // 2))
    ang = (np.angle(rho * unit_roots(n)) + 1e-13) % (2 * np.pi)
    return tuple(int(k) for k in np.nonzero(ang < np.pi)[0])


@dataclass(frozen=True)
class Fss:
    """Fundamental system at a fixed rho.

    ``kind`` is ``model-exponential`` (y_k = exp(i rho eps_k x)) or
    ``initial-value`` (D^i y_k(0) = delta_ik). For the exponential kind
    ``plus`` lists the indices whose exponentials decay to the right; z_k and
    u_k are shifted accordingly so that all of them stay bounded.
    """

    n: int
    rho: complex
    kind: str
    plus: tuple = ()
    # initial-value kind: derivative tables, shape (n derivatives, n columns)
    at0: Optional[np.ndarray] = field(default=None, repr=False)
    at1: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def kappa(self):
        return self.rho * unit_roots(self.n)

    def is_plus(self, k):
        return k in self.plus

    def y(self, k, x):
        return np.exp(1j * self.kappa[k] * np.asarray(x, dtype=float))

    def z(self, k, x):
        x = np.asarray(x, dtype=float)
        return self.y(k, x) if self.is_plus(k) else self.y(k, x - 1.0)

    def u(self, m, xi):
        xi = np.asarray(xi, dtype=float)
        return self.y(m, 1.0 - xi) if self.is_plus(m) else self.y(m, -xi)

    def endpoint_table(self, basis="z"):
        """Arrays (T0, T1) of shape (n, n): D^j of column k at x = 0 and 1."""
        if self.kind == "initial-value":
            return self.at0, self.at1
        j = np.arange(self.n)[:, None]
        kap = self.kappa[None, :]
        fn = self.z if basis == "z" else self.y
        z0 = np.array([fn(k, 0.0) for k in range(self.n)])[None, :]
        z1 = np.array([fn(k, 1.0) for k in range(self.n)])[None, :]
        return kap ** j * z0, kap ** j * z1


def model_fss(n, rho):
    """Exponential system for D^n at ``rho``.

    Examples
    --------
    >>> f = model_fss(2, np.pi)
    >>> complex(np.round(f.y(0, 1.0), 12))
    (-1+0j)
    """
    rho = complex(rho)
    return Fss(n, rho, "model-exponential", plus_set(n, rho))


def first_order_rhs(expr, lam, forcing=None):
    """Right-hand side of v_j' = i v_{j+1}, v_{n-1}' = i (lam v_0 - sum p_k v_k + f).

    ``lam`` may be an array (batch over the leading axis of v). The state has
    shape (batch, n, columns).
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    coeffs = [(k, c.scalar()) for k, c in expr.coefficients.items() if not c.is_zero()]

    def rhs(x, v):
        dv = np.empty_like(v)
        dv[:, :-1, :] = 1j * v[:, 1:, :]
        top = lam[:, None] * v[:, 0, :]
        for k, c in coeffs:
            top = top - c(x) * v[:, k, :]
        if forcing is not None:
            top = top + complex(forcing(np.array([x]))[0])
        dv[:, -1, :] = 1j * top
        return dv

    return rhs


def numeric_fss(expr, lam, tol=1e-10, rho_cap=RHO_CAP):
    """Initial-value basis of l(y) = lam y integrated from 0 to 1.

    Returns an ``Fss`` of kind ``initial-value`` with derivative tables at the
    endpoints.

    Raises
    ------
    CapExceeded
        If |lam|^(1/n) exceeds ``rho_cap`` or n exceeds 4.
    """
    n = expr.n
    if n > MAX_NUMERIC_ORDER:
        raise CapExceeded(f"numeric integration supports n <= {MAX_NUMERIC_ORDER}")
    lam = complex(lam)
    if abs(lam) ** (1.0 / n) > rho_cap:
        raise CapExceeded(f"|rho| = {abs(lam) ** (1.0 / n):.3g} exceeds cap {rho_cap:.3g}")
    from .green import fundamental_states

    _, states = fundamental_states(expr, [lam], [], tol)
    return Fss(n, principal_rho(lam, n), "initial-value", (), states[0][0], states[-1][0])
