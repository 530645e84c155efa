"""Running exponential integrals of a function on [0, 1].

For a wavenumber kappa,

    F+(x) = int_0^x f(s) exp(i kappa (x - s)) ds,
    F-(x) = int_x^1 f(s) exp(i kappa (x - s)) ds.

F+ is computed by a forward recurrence when Im kappa >= 0 and F- by a
backward one when Im kappa <= 0, so every multiplier has modulus <= 1.
"""

import numpy as np

from ..kernels import linear_scan
from ..quadrature import GL_T, GL_W, panel_width

CHUNK = 64


def scan_edges(x_grid, breakpoints=()):
    """Sorted scan abscissae: the output grid plus interior breakpoints.

    Returns the edges and the indices of the grid points among them.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    extra = [b for b in breakpoints if 0.0 < b < 1.0]
    edges = np.unique(np.concatenate([x_grid, [0.0, 1.0], extra]))
    idx = np.searchsorted(edges, x_grid)
    return edges, idx


def _cell_nodes(edges, rate):
    """GL nodes per cell, each cell split into equal sub-panels."""
    h = np.diff(edges)
    wmax = panel_width(1.0, rate)
    s = max(1, int(np.ceil(h.max() / wmax - 1e-12)))
    sub = (np.arange(s)[:, None] + GL_T[None, :]).ravel() / s  # in [0, 1]
    wsub = np.tile(GL_W, s) / s
    nodes = edges[:-1, None] + h[:, None] * sub[None, :]
    weights = h[:, None] * wsub[None, :]
    return nodes, weights


def running_integrals(f, kappas, edges, forward):
    """Running integrals at ``edges`` for each wavenumber.

    Parameters
    ----------
    f : callable
        Vectorized integrand on [0, 1].
    kappas : array of complex, shape (K,)
    edges : increasing array from 0 to 1, shape (m + 1,)
    forward : bool array, shape (K,)
        True selects F+ (needs Im kappa >= 0), False selects F-.

    Returns
    -------
    ndarray, shape (K, m + 1)
    """
    kappas = np.asarray(kappas, dtype=complex)
    forward = np.asarray(forward, dtype=bool)
    edges = np.asarray(edges, dtype=float)
    rate = float(np.abs(kappas).max()) if kappas.size else 0.0
    nodes, weights = _cell_nodes(edges, rate)
    fw = np.asarray(f(nodes.ravel()), dtype=complex).reshape(nodes.shape) * weights
    h = np.diff(edges)
    out = np.empty((kappas.size, edges.size), dtype=complex)
    for start in range(0, kappas.size, CHUNK):
        kap = kappas[start:start + CHUNK]
        fwd = forward[start:start + CHUNK]
        # offsets from the right edge (forward) or left edge (backward)
        off = np.where(fwd[:, None, None], (edges[1:, None] - nodes)[None], (edges[:-1, None] - nodes)[None])
        contrib = np.einsum("kcs,cs->kc", np.exp(1j * kap[:, None, None] * off), fw)
        mult = np.exp(1j * np.where(fwd[:, None], 1.0, -1.0) * kap[:, None] * h[None, :])
        res = np.empty((kap.size, edges.size), dtype=complex)
        if np.any(fwd):
            res[fwd] = linear_scan(mult[fwd], contrib[fwd])
        if np.any(~fwd):
            back = linear_scan(mult[~fwd][:, ::-1], contrib[~fwd][:, ::-1])
            res[~fwd] = back[:, ::-1]
        out[start:start + CHUNK] = res
    return out
