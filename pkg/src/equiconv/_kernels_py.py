"""Pure numpy versions of the compiled kernels."""

import numpy as np


def linear_scan(a, b):
    """Rows of F with F[:, 0] = 0 and F[:, j + 1] = a[:, j] * F[:, j] + b[:, j]."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    K, m = a.shape
    F = np.zeros((K, m + 1), dtype=complex)
    for j in range(m):
        F[:, j + 1] = a[:, j] * F[:, j] + b[:, j]
    return F


def dp5_linear(lam, v0, x0, x1, stops, coeff, tol, forced=0, max_steps=2000000):
    """Dormand-Prince 5(4) for the companion system, numpy version."""
    from .solver.rk import integrate

    lam = np.asarray(lam, dtype=complex)
    n = np.shape(v0)[1]

    def rhs(x, v):
        p = coeff(x)
        dv = np.empty_like(v)
        dv[:, :-1, :] = 1j * v[:, 1:, :]
        top = lam[:, None] * v[:, 0, :]
        for k in range(n):
            if p[k] != 0:
                top = top - p[k] * v[:, k, :]
        if forced:
            top[:, -1] += p[n]
        dv[:, -1, :] = 1j * top
        return dv

    return integrate(rhs, v0, x0, x1, tol=tol, stops=stops, max_steps=max_steps)
