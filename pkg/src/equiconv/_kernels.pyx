# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled first-order linear recurrences."""

import numpy as np

from libc.math cimport pow


def linear_scan(double complex[:, ::1] a, double complex[:, ::1] b):
    """Rows of F with F[:, 0] = 0 and F[:, j + 1] = a[:, j] * F[:, j] + b[:, j]."""
    cdef Py_ssize_t K = a.shape[0]
    cdef Py_ssize_t m = a.shape[1]
    cdef Py_ssize_t k, j
    cdef double complex acc
    out = np.zeros((K, m + 1), dtype=np.complex128)
    cdef double complex[:, ::1] F = out
    with nogil:
        for k in range(K):
            acc = 0
            for j in range(m):
                acc = a[k, j] * acc + b[k, j]
                F[k, j + 1] = acc
    return out


# stage abscissae stay strictly inside the current segment
cdef double _SHRINK = 1.0 - 1e-13
cdef double _NUDGE = 1e-13
cdef double _C[7]
cdef double _A[7][6]
cdef double _E[7]
_C[:] = [0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0]
_A[0][:] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
_A[1][:] = [1.0 / 5, 0.0, 0.0, 0.0, 0.0, 0.0]
_A[2][:] = [3.0 / 40, 9.0 / 40, 0.0, 0.0, 0.0, 0.0]
_A[3][:] = [44.0 / 45, -56.0 / 15, 32.0 / 9, 0.0, 0.0, 0.0]
_A[4][:] = [19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0.0, 0.0]
_A[5][:] = [9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0.0]
_A[6][:] = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84]
_E[:] = [35.0 / 384 - 5179.0 / 57600, 0.0, 500.0 / 1113 - 7571.0 / 16695,
         125.0 / 192 - 393.0 / 640, -2187.0 / 6784 + 92097.0 / 339200,
         11.0 / 84 - 187.0 / 2100, -1.0 / 40]


cdef void _rhs(double complex[:, :, ::1] v, double complex[:, :, ::1] out,
               double complex[::1] lam, double complex[::1] p, int forced) noexcept nogil:
    cdef Py_ssize_t B = v.shape[0], n = v.shape[1], c = v.shape[2]
    cdef Py_ssize_t b, j, k, col
    cdef double complex top
    cdef double complex I = 1j
    for b in range(B):
        for col in range(c):
            for j in range(n - 1):
                out[b, j, col] = I * v[b, j + 1, col]
            top = lam[b] * v[b, 0, col]
            for k in range(n):
                top = top - p[k] * v[b, k, col]
            if forced and col == c - 1:
                top = top + p[n]
            out[b, n - 1, col] = I * top


def dp5_linear(lam_in, v0_in, double x0, double x1, stops_in, coeff, double tol,
               int forced=0, int max_steps=2000000):
    """Dormand-Prince 5(4) for v_j' = i v_{j+1}, v_{n-1}' = i (lam v_0 - sum p_k v_k [+ f]).

    ``coeff(x)`` returns the complex vector (p_0, ..., p_{n-1}, f). The state
    has shape (B, n, c); the forcing enters the last column when ``forced``.
    Returns (stop abscissae, states at the stops).
    """
    cdef double complex[::1] lam = np.ascontiguousarray(lam_in, dtype=np.complex128)
    v_arr = np.array(v0_in, dtype=np.complex128, order="C")
    cdef double complex[:, :, ::1] v = v_arr
    cdef Py_ssize_t B = v.shape[0], n = v.shape[1], c = v.shape[2]
    ks_arr = np.zeros((7, B, n, c), dtype=np.complex128)
    cdef double complex[:, :, :, ::1] ks = ks_arr
    acc_arr = np.zeros((B, n, c), dtype=np.complex128)
    cdef double complex[:, :, ::1] acc = acc_arr
    cdef double complex[::1] p
    cdef double direction = 1.0 if x1 >= x0 else -1.0
    cdef double span = abs(x1 - x0)
    cdef double x = x0, h, target, ratio, e, hmin, fac
    cdef Py_ssize_t s, j, b, i, col, steps = 0
    cdef double complex val
    targets = sorted({float(t) for t in stops_in if min(x0, x1) < t < max(x0, x1)} | {float(x1)},
                     key=lambda t: direction * t)
    xs = [x0]
    vs = [v_arr.copy()]
    if span == 0.0:
        return np.array(xs), vs
    h = direction * min(0.01, span / 16)
    hmin = 1e-14 * max(span, 1.0)
    for target in targets:
        # restart the first stage on each segment: coefficients may jump at stops
        p = np.ascontiguousarray(coeff(x + direction * _NUDGE * max(1.0, abs(x))), dtype=np.complex128)
        _rhs(v, ks[0], lam, p, forced)
        while direction * (target - x) > 0:
            if direction * (x + h - target) > 0:
                h = target - x
            for s in range(1, 7):
                for b in range(B):
                    for i in range(n):
                        for col in range(c):
                            val = v[b, i, col]
                            for j in range(s):
                                if _A[s][j] != 0.0:
                                    val = val + h * _A[s][j] * ks[j, b, i, col]
                            acc[b, i, col] = val
                p = np.ascontiguousarray(coeff(x + _C[s] * h * _SHRINK), dtype=np.complex128)
                _rhs(acc, ks[s], lam, p, forced)
            # acc now holds the 5th-order solution; ks[6] its derivative
            ratio = 0.0
            for b in range(B):
                for i in range(n):
                    for col in range(c):
                        val = 0.0
                        for j in range(7):
                            if _E[j] != 0.0:
                                val = val + _E[j] * ks[j, b, i, col]
                        e = abs(h * val) / (tol * (1.0 + abs(acc[b, i, col])))
                        if e > ratio:
                            ratio = e
            steps += 1
            if steps > max_steps:
                raise RuntimeError("step budget exhausted")
            if ratio <= 1.0:
                x = x + h
                if abs(target - x) < 1e-15 * max(1.0, abs(target)):
                    x = target
                v[:, :, :] = acc
                ks[0, :, :, :] = ks[6]
                fac = 5.0 if ratio == 0.0 else min(5.0, 0.9 * pow(ratio, -0.2))
                h = h * fac
            else:
                h = h * max(0.1, 0.9 * pow(ratio, -0.25))
            if abs(h) < hmin:
                raise FloatingPointError(f"step size underflow at x={x}")
        xs.append(x)
        vs.append(v_arr.copy())
    return np.array(xs), vs
