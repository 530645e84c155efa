"""Finite Fourier sequences on the circle: A- and PF-norms, partial sums,
the commutator estimate and a computable localization bound.

The basis is e_l(x) = exp(i l x) / sqrt(2 pi) on [0, 2 pi). With this
normalization the product of two sequences is their convolution divided by
sqrt(2 pi), and ||[S_r, gamma] F||_A <= ||gamma'||_A ||F||_PF holds exactly.
"""

from dataclasses import dataclass

import numpy as np

SQRT_2PI = np.sqrt(2 * np.pi)
DEFAULT_M = 512
KINDS = ("pseudofunction", "smooth-multiplier")


@dataclass(frozen=True)
class CoefficientSequence:
    """Coefficients c(l) for l = -M..M, stored in ``coefficients[l + M]``."""

    coefficients: np.ndarray
    kind: str = "pseudofunction"

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 1 or c.size % 2 == 0:
            raise ValueError("coefficients must be a 1-d array of odd length 2M+1")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        object.__setattr__(self, "coefficients", c)

    @property
    def M(self) -> int:
        return (self.coefficients.size - 1) // 2

    @property
    def support(self):
        return (-self.M, self.M)

    @property
    def indices(self):
        return np.arange(-self.M, self.M + 1)

    def __getitem__(self, l):
        l = int(l)
        return self.coefficients[l + self.M] if abs(l) <= self.M else 0j

    def padded(self, M):
        """Same sequence on a wider index range (never truncates)."""
        if M < self.M:
            raise ValueError("padding cannot shrink the support")
        c = np.zeros(2 * M + 1, dtype=complex)
        c[M - self.M:M + self.M + 1] = self.coefficients
        return CoefficientSequence(c, self.kind)

    def __add__(self, other):
        M = max(self.M, other.M)
        return CoefficientSequence(self.padded(M).coefficients + other.padded(M).coefficients, self.kind)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, c):
        return CoefficientSequence(c * self.coefficients, self.kind)

    def evaluate(self, x):
        """Sum_l c(l) e_l(x)."""
        x = np.asarray(x, dtype=float)
        return np.exp(1j * np.multiply.outer(x, self.indices)) @ self.coefficients / SQRT_2PI

    @classmethod
    def zero(cls, M=0, kind="pseudofunction"):
        return cls(np.zeros(2 * M + 1, dtype=complex), kind)

    @classmethod
    def single_mode(cls, l, value=1.0, M=None, kind="pseudofunction"):
        M = abs(int(l)) if M is None else int(M)
        c = np.zeros(2 * M + 1, dtype=complex)
        c[int(l) + M] = value
        return cls(c, kind)

    @classmethod
    def from_function(cls, fn, M, kind="smooth-multiplier", n_fft=None):
        """Coefficients <fn, e_l> by FFT on a uniform grid of [0, 2 pi)."""
        n_fft = n_fft or max(8 * (2 * M + 1), 4096)
        x = 2 * np.pi * np.arange(n_fft) / n_fft
        F = np.fft.fft(np.asarray(fn(x), dtype=complex)) * (SQRT_2PI / n_fft)
        idx = np.arange(-M, M + 1) % n_fft
        return cls(F[idx], kind)


def point_mass(x0, M=DEFAULT_M):
    """Truncated coefficients of the unit point mass at x0 (not a pseudofunction)."""
    l = np.arange(-M, M + 1)
    return CoefficientSequence(np.exp(-1j * l * x0) / SQRT_2PI)


def box(x0, width, M=DEFAULT_M):
    """Unit-mass box of half-width ``width`` centred at x0.

    Its coefficients decay like 1/|l|, so it is a pseudofunction that
    approximates the point mass at x0.
    """
    l = np.arange(-M, M + 1)
    return CoefficientSequence(np.exp(-1j * l * x0) * np.sinc(l * width / np.pi) / SQRT_2PI)


def raised_cosine_cutoff(x0, inner, outer, M=DEFAULT_M):
    """gamma = 0 within torus distance ``inner`` of x0, 1 beyond ``outer``."""
    if not 0 <= inner < outer <= np.pi:
        raise ValueError("need 0 <= inner < outer <= pi")

    def g(x):
        d = np.abs((x - x0 + np.pi) % (2 * np.pi) - np.pi)
        t = np.clip((d - inner) / (outer - inner), 0.0, 1.0)
        return 0.5 - 0.5 * np.cos(np.pi * t)

    return CoefficientSequence.from_function(g, M)


def random_sequence(rng, M, kind="pseudofunction", decay=0.0):
    """Random complex coefficients, optionally damped by (1 + |l|)^-decay."""
    l = np.arange(-M, M + 1)
    c = rng.standard_normal(2 * M + 1) + 1j * rng.standard_normal(2 * M + 1)
    return CoefficientSequence(c / (1.0 + np.abs(l)) ** decay, kind)


def cutoff_index(r):
    """Largest retained |l| for the partial sum of radius r."""
    return int(np.floor(r / (2 * np.pi) + 1e-12))


def pf_partial_sum(F: CoefficientSequence, r) -> CoefficientSequence:
    """S_r(F) = sum over |l| <= r / 2 pi of F(l) e_l.

    >>> F = CoefficientSequence(np.ones(7))
    >>> pf_partial_sum(F, 2 * np.pi * 2).coefficients.real.tolist()
    [0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0]
    """
    keep = np.abs(F.indices) <= cutoff_index(r)
    return CoefficientSequence(np.where(keep, F.coefficients, 0), F.kind)


def norms(seq: CoefficientSequence):
    """A-norm, PF-norm and A-norm of the derivative."""
    a = np.abs(seq.coefficients)
    return {
        "a_norm": float(np.sum(a)),
        "pf_norm": float(np.max(a)) if a.size else 0.0,
        "derivative_a_norm": float(np.sum(np.abs(seq.indices) * a)),
    }


def multiply(gamma: CoefficientSequence, F: CoefficientSequence) -> CoefficientSequence:
    """Coefficients of the pointwise product gamma * F (exact finite convolution)."""
    c = np.convolve(gamma.coefficients, F.coefficients) / SQRT_2PI
    return CoefficientSequence(c, F.kind)


def commutator(F: CoefficientSequence, gamma: CoefficientSequence, r) -> CoefficientSequence:
    """[S_r, gamma] F = S_r(gamma F) - gamma S_r(F)."""
    return pf_partial_sum(multiply(gamma, F), r) - multiply(gamma, pf_partial_sum(F, r))


def commutator_bound_holds(F, gamma, r, slack=1e-12):
    """Return (lhs, rhs, ok) for ||[S_r, gamma] F||_A <= ||gamma'||_A ||F||_PF."""
    lhs = norms(commutator(F, gamma, r))["a_norm"]
    rhs = norms(gamma)["derivative_a_norm"] * norms(F)["pf_norm"]
    return lhs, rhs, lhs <= rhs + slack


def localization_bound(F: CoefficientSequence, gamma_K: CoefficientSequence, r) -> float:
    """||gamma_K S_r(F)||_A, an upper bound for the A(K) seminorm of S_r(F)."""
    return norms(multiply(gamma_K, pf_partial_sum(F, r)))["a_norm"]


def torus_demo(x0=np.pi, width=0.05, inner=0.1, outer=0.2, ks=(10, 20, 40, 80), M=DEFAULT_M,
               point=False):
    """Localization curve for a box (or the raw point mass) at x0.

    K is the set at torus distance >= ``outer`` from x0. Returns rows
    (r, bound, a_norm, pf_norm) with the norms taken of S_r(F).
    """
    F = point_mass(x0, M) if point else box(x0, width, M)
    if not point and width >= inner:
        raise ValueError("the cutoff must vanish on the support of F")
    gamma = raised_cosine_cutoff(x0, inner, outer, M)
    rows = []
    for k in ks:
        r = 2 * np.pi * k
        nm = norms(pf_partial_sum(F, r))
        rows.append((r, localization_bound(F, gamma, r), nm["a_norm"], nm["pf_norm"]))
    return rows
