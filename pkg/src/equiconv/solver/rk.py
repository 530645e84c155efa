"""Batched adaptive Dormand-Prince 5(4) for complex linear systems."""

import numpy as np

from ..errors import StepFailure

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
_A_NZ = [[(j, a) for j, a in enumerate(row) if a] for row in _A]
_E_NZ = [(j, e) for j, e in enumerate(_E) if e]
# stage abscissae stay strictly inside the current segment
_SHRINK = 1.0 - 1e-13
_NUDGE = 1e-13


def integrate(rhs, v0, x0, x1, tol=1e-10, stops=(), h0=None, max_steps=200000):
    """Integrate v' = rhs(x, v) from x0 to x1, landing exactly on ``stops``.

    All arrays in the batch share the step size; the error is measured as
    max |err| / (tol * (1 + |v|)) over the batch.

    Returns
    -------
    xs : ndarray
        The stop abscissae (including x0 and x1) in integration order.
    vs : list of ndarray
        State at each stop.
    """
    direction = 1.0 if x1 >= x0 else -1.0
    span = abs(x1 - x0)
    targets = sorted({float(s) for s in stops if min(x0, x1) < s < max(x0, x1)} | {float(x1)},
                     key=lambda s: direction * s)
    v = np.array(v0, dtype=complex)
    x = float(x0)
    xs, vs = [x], [v.copy()]
    if span == 0.0:
        return np.array(xs), vs
    h = direction * (h0 if h0 is not None else min(0.01, span / 16))
    hmin = 1e-14 * max(span, 1.0)
    steps = 0
    for target in targets:
        # restart the first stage on each segment: coefficients may jump at stops
        k1 = rhs(x + direction * _NUDGE * max(1.0, abs(x)), v)
        while direction * (target - x) > 0:
            if direction * (x + h - target) > 0:
                h = target - x
            ks = [k1]
            for s in range(1, 7):
                acc = v.copy()
                for j, a in _A_NZ[s]:
                    acc += (h * a) * ks[j]
                ks.append(rhs(x + _C[s] * h * _SHRINK, acc))
            v5 = acc  # last stage input is the 5th-order solution
            err = h * sum(e * ks[j] for j, e in _E_NZ)
            ratio = float(np.max(np.abs(err) / (tol * (1.0 + np.abs(v5))))) if err.size else 0.0
            steps += 1
            if steps > max_steps:
                raise StepFailure("step budget exhausted")
            if ratio <= 1.0:
                x = x + h
                if abs(target - x) < 1e-15 * max(1.0, abs(target)):
                    x = target
                v = v5
                k1 = ks[6]
                fac = 5.0 if ratio == 0 else min(5.0, 0.9 * ratio ** -0.2)
                h = h * fac
            else:
                h = h * max(0.1, 0.9 * ratio ** -0.25)
            if abs(h) < hmin:
                raise StepFailure(f"step size underflow at x={x}")
        xs.append(x)
        vs.append(v.copy())
    return np.array(xs), vs
