"""Characteristic determinant, characteristic values and the eta residual."""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from ..errors import WindingMismatch
from ..model import SpectralPoint
from ..regularity import theta_matrix, unit_roots
from .green import _bc_matrices, fundamental_states, model_eta, model_eta_batch

MAX_DEPTH = 12
WINDING_TOL = 1e-7
PHASE_STEP = np.pi / 3
NEWTON_ACCEPT = 1e-8
SPLIT = 0.5 + 0.0123  # off-centre split keeps lattice-aligned roots off edges


def char_det(op, rho, plus=None, tol=1e-11):
    """Characteristic determinant at rho.

    Model operators use det(eta) built on the bounded system z_k; general ones
    use det(U_j(y_k)) on the initial-value basis at lambda = rho^n.
    """
    return complex(char_det_batch(op, [rho], plus, tol)[0])


def char_det_batch(op, rhos, plus=None, tol=1e-11):
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    n = op.n
    if op.is_model:
        if plus is None:
            plus = tuple(range(n // 2))
        return np.linalg.det(model_eta_batch(op.bc, rhos, plus))
    return delta_iv(op, rhos ** n, tol)


def delta_iv(op, lams, tol=1e-11):
    """det(A0 + A1 Phi(1)) on the initial-value basis, batched over lambda."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    A0, A1 = _bc_matrices(op.bc)
    if op.expr.is_model:
        n = op.n
        out = []
        for lam in lams:
            A = np.zeros((n, n), dtype=complex)
            A[np.arange(n - 1), np.arange(1, n)] = 1j
            A[n - 1, 0] = 1j * lam
            out.append(np.linalg.det(A0 + A1 @ expm(A)))
        return np.array(out)
    _, states = fundamental_states(op.expr, lams, [], tol)
    return np.linalg.det(A0[None] + A1[None] @ states[-1])


def eta_residual(op, rho):
    """|det eta(rho) - det Theta| for the model operator."""
    eta = model_eta(op.bc, complex(rho), tuple(range(op.n // 2)))
    return float(abs(np.linalg.det(eta) - np.linalg.det(_theta_unordered(op.bc))))


def _theta_unordered(bc):
    """Theta with rows in the stored order, matching eta's row order."""
    n = bc.n
    q = n // 2
    eps = unit_roots(n)
    powers = eps[None, :] ** bc.sigma[:, None]
    coef = np.where(np.arange(n)[None, :] < q, bc.a[:, None], bc.b[:, None])
    return coef * powers


# --------------------------------------------------------------------------
# root finding
# --------------------------------------------------------------------------

@dataclass
class CharValueSet:
    rho_values: list
    multiplicities: list
    progression_ids: list = field(default_factory=list)
    fit_c: list = field(default_factory=list)
    fit_residuals: list = field(default_factory=list)
    R: float = 0.0

    @property
    def points(self):
        return [SpectralPoint.from_rho(r, self.n) for r in self.rho_values] if self.rho_values else []

    n: int = 2

    def expanded(self):
        """rho values repeated according to multiplicity."""
        out = []
        for r, m in zip(self.rho_values, self.multiplicities):
            out.extend([r] * m)
        return out

    def lambdas(self):
        return [r ** self.n for r in self.rho_values]

    def rows(self):
        """Tuples (re, im, multiplicity, progression, c_re, c_im, residual)."""
        out = []
        for r, m, p in zip(self.rho_values, self.multiplicities, self.progression_ids):
            c = self.fit_c[p] if p >= 0 else complex(np.nan, np.nan)
            res = self.fit_residuals[p] if p >= 0 else np.nan
            out.append((r.real, r.imag, m, p, c.real, c.imag, res))
        return out


class _Evaluator:
    """Cached, batched characteristic determinant on one sector."""

    def __init__(self, op, plus, tol):
        self.op = op
        self.plus = plus
        self.tol = tol
        self.cache = {}

    def coarse(self):
        """Same determinant at a looser ODE tolerance, for phase tracking."""
        if self.op.is_model:
            return self
        if not hasattr(self, "_coarse"):
            self._coarse = _Evaluator(self.op, self.plus, max(self.tol, WINDING_TOL))
        return self._coarse

    def __call__(self, rhos):
        rhos = np.asarray(rhos, dtype=complex)
        keys = [(round(z.real, 13), round(z.imag, 13)) for z in rhos]
        todo = [i for i, k in enumerate(keys) if k not in self.cache]
        if todo:
            vals = char_det_batch(self.op, rhos[todo], self.plus, self.tol)
            for i, v in zip(todo, vals):
                self.cache[keys[i]] = complex(v)
        return np.array([self.cache[k] for k in keys])


def _polar(r, phi):
    return r * np.exp(1j * phi)


def _rect_path(rect):
    r0, r1, p0, p1 = rect
    return [
        lambda t: _polar(r0 + (r1 - r0) * t, p0),
        lambda t: _polar(r1, p0 + (p1 - p0) * t),
        lambda t: _polar(r1 - (r1 - r0) * t, p1),
        lambda t: _polar(r0, p1 - (p1 - p0) * t),
    ]


def _windings(ev, rects, rate=2.0, max_points=1 << 16):
    """Winding numbers of ev around many polar rectangles, evaluated jointly.

    All boundary samples of all rectangles go into one batched call per
    refinement round. An entry is None when a zero sits on that boundary or
    the phase cannot be resolved.
    """
    paths = [_rect_path(r) for r in rects]
    ts = [[np.linspace(0.0, 1.0, 17 + int(np.ceil(length * rate / (0.5 * PHASE_STEP))))
           for length in _edge_lengths(r)] for r in rects]
    result = [None] * len(rects)
    pending = list(range(len(rects)))
    while pending:
        zs = [paths[i][e](ts[i][e]) for i in pending for e in range(4)]
        allv = ev(np.concatenate(zs))
        pos = 0
        still = []
        for i in pending:
            total, done, failed = 0.0, True, False
            for e in range(4):
                t = ts[i][e]
                vals = allv[pos:pos + t.size]
                pos += t.size
                if failed:
                    continue
                if np.any(vals == 0) or not np.all(np.isfinite(vals)):
                    failed = True
                    continue
                ratio = vals[1:] / vals[:-1]
                dphi = np.angle(ratio)
                # large relative change signals a nearby zero that could alias
                rel = np.abs(ratio - 1.0) / np.minimum(1.0, np.abs(ratio))
                bad = (np.abs(dphi) > PHASE_STEP) | (rel > 1.0)
                if np.any(bad):
                    done = False
                    if t.size > max_points:
                        failed = True
                        continue
                    ts[i][e] = np.sort(np.concatenate([t, 0.5 * (t[:-1][bad] + t[1:][bad])]))
                else:
                    total += float(np.sum(dphi))
            if failed:
                result[i] = None
            elif not done:
                still.append(i)
            else:
                w = total / (2 * np.pi)
                result[i] = int(round(w)) if abs(w - round(w)) <= 0.1 else None
        pending = still
    return result


def _edge_lengths(rect):
    r0, r1, p0, p1 = rect
    return (r1 - r0, r1 * (p1 - p0), r1 - r0, r0 * (p1 - p0))


def _rect_winding(ev, rect, rate=2.0):
    """Winding number of ev around one polar rectangle (r0, r1, p0, p1)."""
    return _windings(ev, [rect], rate)[0]


def _newton_batch(ev, z, m, max_step, max_iter=60):
    """Multiplicity-aware Newton iteration run on many starting points at once.

    Returns the iterates and a flag per point telling whether the last step
    was below NEWTON_ACCEPT relative to |z|.
    """
    z = np.array(z, dtype=complex)
    m = np.asarray(m, dtype=float)
    max_step = np.asarray(max_step, dtype=float)
    active = np.ones(z.size, dtype=bool)
    last = np.full(z.size, np.inf)
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            idx = np.nonzero(active)[0]
            if idx.size == 0:
                break
            zi = z[idx]
            h = 1e-6 * (1.0 + np.abs(zi))
            vals = ev(np.concatenate([zi, zi + h, zi - h])).reshape(3, idx.size)
            f0, fp, fm = vals
            d = (fp - fm) / (2 * h)
            ok = (f0 != 0) & (d != 0) & np.isfinite(d) & np.isfinite(f0)
            step = np.where(ok, m[idx] * f0 / np.where(ok, d, 1.0), 0.0)
            big = np.abs(step) > max_step[idx]
            step[big] *= max_step[idx][big] / np.abs(step[big])
            z[idx] = zi - step
            last[idx] = np.where(f0 == 0, 0.0, np.where(ok, np.abs(step), np.inf))
            active[idx] = ok & (np.abs(step) >= 1e-15 * (1.0 + np.abs(zi)))
    # noisy determinants stall near 1e-12; a wandering iterate keeps large steps
    return z, last < NEWTON_ACCEPT * (1.0 + np.abs(z))


def _inside(z, rect, margin=1e-9):
    r0, r1, p0, p1 = rect
    r, p = abs(z), np.angle(z)
    p = p0 + ((p - p0) % (2 * np.pi))
    return r0 - margin <= r <= r1 + margin and p <= p1 + margin


def _sector_windows(n, delta0):
    """Polar angle windows covering S_0 once, each with its fixed plus set."""
    eps = unit_roots(n)
    if n % 2 == 0:
        return [(-delta0, 2 * np.pi / n - delta0, tuple(range(n // 2)))]
    half = np.pi / (2 * n)
    wins = []
    for centre in (0.0, np.pi):
        ang = (np.angle(np.exp(1j * centre) * eps) + 1e-9) % (2 * np.pi)
        plus = tuple(int(k) for k in np.nonzero(ang < np.pi)[0])
        wins.append((centre - half - delta0, centre + half - delta0, plus))
    return wins


def _split(rect, frac=SPLIT):
    r0, r1, q0, q1 = rect
    if (r1 - r0) >= 0.5 * (r0 + r1) * (q1 - q0):
        rm = r0 + frac * (r1 - r0)
        return [(r0, rm, q0, q1), (rm, r1, q0, q1)]
    qm = q0 + frac * (q1 - q0)
    return [(r0, r1, q0, qm), (r0, r1, qm, q1)]


def _size(rect):
    r0, r1, q0, q1 = rect
    return max(r1 - r0, 0.5 * (r0 + r1) * (q1 - q0))


def _locate(ev, rects, rate, max_depth=MAX_DEPTH):
    """Roots and multiplicities inside the given rectangles (breadth first)."""
    roots, mults = [], []
    evw = ev.coarse()
    ws = _windings(evw, rects, rate)
    level = []
    for rect, w in zip(rects, ws):
        if w is None:
            r0, r1, q0, q1 = rect
            rect = (r0, r1 + 1e-4 * (1 + r1), q0, q1)
            w = _rect_winding(evw, rect, rate)
            if w is None:
                raise WindingMismatch(f"phase tracking failed on {rect}")
        if w < 0:
            raise WindingMismatch(f"negative winding {w} on {rect}")
        if w:
            level.append((rect, w))
    # the depth budget counts splits once rectangles are of unit size
    depth = -int(np.ceil(np.log2(max(max(_size(r) for r in rects), 1.0))))
    while level:
        # try Newton on rectangles holding one root, or tiny ones holding a cluster
        cand = [(r, w) for r, w in level if w == 1 or _size(r) < 1e-3 * (1 + r[1]) or depth >= max_depth]
        rest = [(r, w) for r, w in level if not (w == 1 or _size(r) < 1e-3 * (1 + r[1]) or depth >= max_depth)]
        if cand:
            centres = [_polar(0.5 * (r[0] + r[1]), 0.5 * (r[2] + r[3])) for r, _ in cand]
            zs, conv = _newton_batch(ev, centres, [w for _, w in cand], [_size(r) for r, _ in cand])
            for (r, w), z, c in zip(cand, zs, conv):
                if c and np.isfinite(z) and _inside(z, r, 1e-6 * (1 + r[1])):
                    roots.append(complex(z))
                    mults.append(w)
                elif depth >= max_depth:
                    raise WindingMismatch(f"could not isolate {w} roots in {r}")
                else:
                    rest.append((r, w))
        if not rest:
            break
        children, parents = [], []
        for r, w in rest:
            children.extend(_split(r))
            parents.append(w)
        cw = _windings(evw, children, rate)
        nxt = []
        for i, w in enumerate(parents):
            pair = children[2 * i:2 * i + 2]
            wpair = cw[2 * i:2 * i + 2]
            if None in wpair:
                pair = _split(rest[i][0], SPLIT + 0.0311)
                wpair = _windings(evw, pair, rate)
            if None in wpair or sum(wpair) != w:
                raise WindingMismatch(f"children windings {wpair} != {w} on {rest[i][0]}")
            nxt.extend((c, wc) for c, wc in zip(pair, wpair) if wc)
        level = nxt
        depth += 1
    return roots, mults


def find_char_values(op, R, r_min=0.5, tol=1e-10, delta0=0.0137):
    """Characteristic values rho in S_0 with |rho| <= R.

    Winding numbers are counted by phase tracking along polar rectangles,
    starting from the whole sector; rectangles are split along their longer
    side until they
    hold a single (possibly multiple) root, and each root is polished by a
    multiplicity-aware Newton iteration. lambda = 0 is checked on a small
    lambda-disk separately.

    Raises
    ------
    WindingMismatch
        If counts cannot be reconciled within the subdivision depth.
    """
    n = op.n
    R_eff = R * (1 + 1e-3) + 1e-3
    roots, mults = [], []
    for p0, p1, plus in _sector_windows(n, delta0):
        ev = _Evaluator(op, plus, tol)
        rr, mm = _locate(ev, [(r_min, R_eff, p0, p1)], rate=float(op.n))
        roots += rr
        mults += mm
    # lambda = 0
    m0 = _zero_multiplicity(op, r_min)
    if m0:
        roots.append(0j)
        mults.append(m0)
    # represent each root on the fixed branch and keep |rho| <= R
    pts = []
    for z, m in zip(roots, mults):
        if abs(z) > R:
            continue
        sp = SpectralPoint.from_lambda(z ** n, n) if z != 0 else SpectralPoint(0j, 0j, "S1")
        pts.append((sp.rho, m))
    pts.sort(key=lambda t: (abs(t[0]), np.angle(t[0])))
    cv = CharValueSet([p for p, _ in pts], [m for _, m in pts], R=R, n=n)
    _fit_progressions(cv, n)
    return cv


def _zero_multiplicity(op, r_min):
    """Number of characteristic values lambda with |lambda| < r_min^n."""
    rad = r_min ** op.n
    th = np.linspace(0.0, 2 * np.pi, 129)
    vals = delta_iv(op, rad * np.exp(1j * th))
    if np.any(vals == 0):
        return 0
    dphi = np.angle(vals[1:] / vals[:-1])
    if np.max(np.abs(dphi)) > PHASE_STEP:
        th = np.linspace(0.0, 2 * np.pi, 1025)
        vals = delta_iv(op, rad * np.exp(1j * th))
        dphi = np.angle(vals[1:] / vals[:-1])
    return int(round(np.sum(dphi) / (2 * np.pi)))


def _fit_progressions(cv, n):
    """Fit rho_j = 2 pi j + c per progression on the upper half of the roots."""
    if not cv.rho_values:
        return
    rhos = np.array(cv.rho_values)
    # map to the representative nearest the positive real axis (even n)
    rep = rhos.copy()
    if n % 2 == 0:
        w = np.exp(-2j * np.pi / n)
        rep = np.where(np.angle(rep) > np.pi / n, rep * w, rep)
    angles = np.mod(rep.real, 2 * np.pi)
    groups = 2 if n % 2 == 0 else 1
    pts = np.exp(1j * angles)
    if groups == 2 and rhos.size >= 2:
        # two-means on the circle, deterministic start at the most distant pair
        i0 = 0
        i1 = int(np.argmax(np.abs(pts - pts[i0])))
        cents = np.array([pts[i0], pts[i1]])
        for _ in range(50):
            lab = np.argmin(np.abs(pts[:, None] - cents[None, :]), axis=1)
            new = np.array([np.mean(pts[lab == g]) if np.any(lab == g) else cents[g] for g in range(2)])
            new = new / np.maximum(np.abs(new), 1e-300)
            if np.allclose(new, cents):
                break
            cents = new
        if abs(cents[0] - cents[1]) < 0.2:
            lab = np.zeros(rhos.size, dtype=int)
            groups = 1
    else:
        lab = np.zeros(rhos.size, dtype=int)
        groups = 1
    cv.progression_ids = [int(v) for v in lab]
    cv.fit_c, cv.fit_residuals = [], []
    for g in range(groups):
        members = rep[lab == g]
        tail = members[np.abs(members) >= 0.5 * np.abs(rep).max()] if members.size > 2 else members
        if tail.size == 0:
            tail = members
        cg = np.angle(np.mean(np.exp(1j * np.mod(tail.real, 2 * np.pi))))
        j = np.round((tail.real - cg) / (2 * np.pi))
        c = complex(np.mean(tail - 2 * np.pi * j))
        cv.fit_c.append(c)
        cv.fit_residuals.append(float(np.max(np.abs(tail - 2 * np.pi * j - c))))


def theta_det(bc):
    return complex(np.linalg.det(theta_matrix(bc)))
