"""Fourier-Klibanov orthonormal basis of L2(-ell, ell).

The basis is obtained by Gram-Schmidt orthonormalization of the family
x^(n-1) e^x, n = 1..N, so every basis function has the form
Psi_n(x) = P_n(x) e^x with deg P_n = n - 1.  All inner products reduce to
exponential moments of monomials, which are evaluated in closed form, so
no quadrature error enters the basis or the structure matrices built on
top of it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BasisError",
    "Polynomial",
    "BasisSet",
    "exp_moment",
    "inner_product",
    "build_basis",
    "eval_basis",
    "dump_polynomials",
]

MAX_N = 12  # double-precision conditioning limit for the monomial-e^x family
GRAM_DEFECT_LIMIT = 1e-8


class BasisError(ValueError):
    """Basis construction or evaluation rejected the inputs."""


def exp_moment(k: int, c: float, ell: float) -> float:
    """Integral of x^k e^(cx) over [-ell, ell].

    Evaluated as the power series sum_m c^m/m! * int x^(k+m) dx, whose
    terms are all nonnegative after reducing to c >= 0 via the x -> -x
    symmetry.  The integration-by-parts recurrence in terms of I_{k-1}
    is equivalent but amplifies rounding by ~k!/c^k, which is
    catastrophic already at k ~ 15 for small |c|.
    """
    if k < 0:
        raise BasisError(f"moment order must be nonnegative, got {k}")
    if ell <= 0:
        raise BasisError(f"interval half-length must be positive, got {ell}")
    if c == 0.0:
        return (ell ** (k + 1) - (-ell) ** (k + 1)) / (k + 1)
    if c < 0.0:
        return (-1.0) ** k * exp_moment(k, -c, ell)
    total = 0.0
    c_pow = 1.0  # c^m / m!
    m = 0
    while True:
        p = k + m
        if p % 2 == 0:
            term = c_pow * 2.0 * ell ** (p + 1) / (p + 1)
            total += term
            if term <= 1e-18 * total and m > c * ell:
                break
        c_pow *= c / (m + 1)
        m += 1
        if m > 10_000:  # unreachable for sane (c, ell); guards infinite loop
            raise BasisError(f"exp_moment series did not converge for k={k}, c={c}, ell={ell}")
    return total


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial stored densely; coeffs[k] multiplies x^k."""

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        c = tuple(float(v) for v in self.coeffs)
        # normalize: strip trailing zeros, keep at least one coefficient
        end = len(c)
        while end > 1 and c[end - 1] == 0.0:
            end -= 1
        object.__setattr__(self, "coeffs", c[:end])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial((0.0,))
        return Polynomial(tuple(k * c for k, c in enumerate(self.coeffs) if k > 0))

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(tuple(np.polynomial.polynomial.polymul(self.coeffs, other.coeffs)))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(tuple(np.polynomial.polynomial.polyadd(self.coeffs, other.coeffs)))

    def scaled(self, alpha: float) -> "Polynomial":
        return Polynomial(tuple(alpha * c for c in self.coeffs))

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)


def inner_product(p: Polynomial, q: Polynomial, exp_weight: int, ell: float) -> float:
    """Exact value of the integral of p(x) q(x) e^(exp_weight * x) over [-ell, ell]."""
    prod = np.polynomial.polynomial.polymul(p.coeffs, q.coeffs)
    return float(sum(c * exp_moment(k, float(exp_weight), ell) for k, c in enumerate(prod) if c != 0.0))


@dataclass(frozen=True)
class BasisSet:
    """Orthonormal functions Psi_n = P_n(x) e^x on [-ell, ell], n = 1..N."""

    N: int
    ell: float
    polys: tuple[Polynomial, ...]

    def coefficient_matrix(self) -> np.ndarray:
        """Row n holds the monomial coefficients of P_{n+1}, zero padded to N."""
        out = np.zeros((self.N, self.N))
        for n, p in enumerate(self.polys):
            out[n, : len(p.coeffs)] = p.coeffs
        return out

    def gram_defect(self) -> float:
        """Max deviation of the exact Gram matrix from the identity."""
        g = np.empty((self.N, self.N))
        for m in range(self.N):
            for n in range(self.N):
                g[m, n] = inner_product(self.polys[m], self.polys[n], 2, self.ell)
        return float(np.max(np.abs(g - np.eye(self.N))))


def _monomial_gram(n: int, ell: float) -> np.ndarray:
    # G[i, j] = <x^i e^x, x^j e^x> = exp_moment(i + j, 2, ell)
    moments = [exp_moment(k, 2.0, ell) for k in range(2 * n - 1)]
    return np.array([[moments[i + j] for j in range(n)] for i in range(n)])


def build_basis(N: int, ell: float) -> BasisSet:
    """Gram-Schmidt orthonormalization of {x^(n-1) e^x} under the exact inner product.

    Modified Gram-Schmidt over monomial coefficient vectors, with one
    re-orthogonalization pass; each P_n is normalized to a positive
    leading coefficient so the basis is reproducible across
    implementations.

    Raises
    ------
    BasisError
        If N is outside 1..12, ell is not positive, or the resulting
        Gram matrix deviates from the identity by more than 1e-8.
    """
    if not 1 <= N <= MAX_N:
        raise BasisError(f"cut-off constant must be in 1..{MAX_N}, got {N}")
    if not (ell > 0 and math.isfinite(ell)):
        raise BasisError(f"interval half-length must be positive and finite, got {ell}")
    gram = _monomial_gram(N, ell)

    vecs: list[np.ndarray] = []
    for n in range(N):
        v = np.zeros(N)
        v[n] = 1.0
        for _ in range(2):  # MGS + one re-orthogonalization pass
            for q in vecs:
                v -= (v @ gram @ q) * q
        v /= math.sqrt(v @ gram @ v)
        if v[n] < 0:  # leading coefficient of P_n sits at index n-1 (0-based n)
            v = -v
        vecs.append(v)

    polys = tuple(Polynomial(tuple(v[: n + 1])) for n, v in enumerate(vecs))
    basis = BasisSet(N=N, ell=ell, polys=polys)
    defect = basis.gram_defect()
    if defect > GRAM_DEFECT_LIMIT:
        raise BasisError(
            f"Gram matrix deviates from identity by {defect:.3e} (> {GRAM_DEFECT_LIMIT:.0e}) "
            f"at N={N}; the monomial-exponential family is too ill-conditioned here"
        )
    return basis


def _derivative_poly(p: Polynomial, order: int) -> Polynomial:
    # d/dx maps P e^x to (P + P') e^x
    out = p
    for _ in range(order):
        out = out + out.derivative()
    return out


def eval_basis(basis: BasisSet, derivative_order: int, xs: np.ndarray) -> np.ndarray:
    """Evaluate d^r Psi_n / dx^r on a grid; returns an (N, len(xs)) matrix.

    Derivatives are exact: differentiation acts on the polynomial part as
    P -> P + P', so every order is again a polynomial times e^x.
    """
    if derivative_order not in (0, 1, 2, 3):
        raise BasisError(f"derivative order must be in 0..3, got {derivative_order}")
    xs = np.asarray(xs, dtype=float)
    if xs.size and (xs.min() < -basis.ell - 1e-12 or xs.max() > basis.ell + 1e-12):
        raise BasisError(
            f"evaluation points must lie in [-{basis.ell}, {basis.ell}], "
            f"got range [{xs.min()}, {xs.max()}]"
        )
    ex = np.exp(xs)
    out = np.empty((basis.N, xs.size))
    for n, p in enumerate(basis.polys):
        out[n] = _derivative_poly(p, derivative_order)(xs) * ex
    return out


def dump_polynomials(basis: BasisSet, path) -> None:
    """Debug CSV of polynomial coefficients: columns n, k, coeff (n is 1-based)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "k", "coeff"])
        for n, p in enumerate(basis.polys, start=1):
            for k, c in enumerate(p.coeffs):
                w.writerow([n, k, f"{c:.17g}"])
