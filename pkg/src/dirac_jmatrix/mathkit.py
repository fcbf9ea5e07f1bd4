"""Special functions and Gauss-Hermite quadrature.

Everything here works with the *normalized* Hermite polynomials
``Hn(y) = H_n(y) / sqrt(sqrt(pi) 2^n n!)`` whenever large orders are
involved; the raw polynomials overflow long before the orders used by the
scattering code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special

__all__ = [
    "QuadratureRule",
    "hermite_eval",
    "hermite_normalized",
    "hermite_function_table",
    "derivative_matrix",
    "gauss_hermite",
    "dawson",
    "kummer_1f1",
    "log_norm_constant",
    "log_gamma_ratio",
    "ConvergenceError",
]

PI_M14 = math.pi ** -0.25


class ConvergenceError(RuntimeError):
    """A series or eigen-solver failed to converge."""


def hermite_eval(n: int, y):
    """Physicists' Hermite polynomial H_n(y) by upward recursion.

    Overflows for n of a few hundred at large |y|; use
    :func:`hermite_normalized` there.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    y = np.asarray(y, dtype=float)
    h_prev = np.ones_like(y)
    if n == 0:
        return h_prev[()] if h_prev.ndim == 0 else h_prev
    h = 2.0 * y
    for j in range(1, n):
        h_prev, h = h, 2.0 * y * h - 2.0 * j * h_prev
    return h[()] if h.ndim == 0 else h


def hermite_normalized(n: int, y):
    """Normalized Hermite polynomial, orthonormal under the weight exp(-y^2)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    y = np.asarray(y, dtype=float)
    prev = np.zeros_like(y)
    cur = np.full_like(y, PI_M14)
    for j in range(n):
        # sqrt((j+1)/2) Hn_{j+1} = y Hn_j - sqrt(j/2) Hn_{j-1}
        prev, cur = cur, (y * cur - math.sqrt(j / 2.0) * prev) / math.sqrt((j + 1) / 2.0)
    return cur[()] if cur.ndim == 0 else cur


def hermite_function_table(n_max: int, y, *, extended: bool = False) -> np.ndarray:
    """Hermite functions h_j(y) = exp(-y^2/2) Hn_j(y) for j = 0..n_max.

    Returns an array of shape ``(n_max + 1,) + y.shape``.  The Gaussian is
    folded into the seed so the recursion never over/underflows for
    |y| < ~37.  With ``extended=True`` the recursion runs in long double
    and the result is rounded once to float64 (nearly correctly rounded
    where long double is wider than double).
    """
    dt = np.longdouble if extended else np.float64
    y = np.asarray(y, dtype=float).astype(dt)
    out = np.empty((n_max + 1,) + y.shape, dtype=dt)
    seed = np.arccos(dt(-1)) ** dt(-0.25) if extended else PI_M14
    out[0] = seed * np.exp(-0.5 * y * y)
    if n_max >= 1:
        out[1] = np.sqrt(dt(2.0)) * y * out[0]
    for j in range(1, n_max):
        out[j + 1] = np.sqrt(dt(2.0) / (j + 1)) * y * out[j] - np.sqrt(dt(j) / (j + 1)) * out[j - 1]
    return out.astype(np.float64)


def derivative_matrix(size: int) -> np.ndarray:
    """Matrix of <h_i | d/dy | h_j> for Hermite functions, i, j < size.

    Exact (not truncated products): d/dy h_j = sqrt(j/2) h_{j-1} - sqrt((j+1)/2) h_{j+1}.
    """
    d = np.zeros((size, size))
    j = np.arange(1, size)
    d[j - 1, j] = np.sqrt(j / 2.0)
    d[j, j - 1] = -np.sqrt(j / 2.0)
    return d


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule from the Golub-Welsch construction.

    ``eigenvectors[n, k]`` is the n-th component of the normalized eigenvector
    belonging to ``nodes[k]``; it equals Hn_n(nodes[k]) * sqrt(weights[k]).
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    eigenvectors: np.ndarray

    def integrate(self, f) -> float:
        """Approximate the integral of exp(-y^2) f(y) over the real line."""
        return float(np.dot(self.weights, f(self.nodes)))


def gauss_hermite(order: int) -> QuadratureRule:
    """Build the ``order``-point rule by diagonalizing the Jacobi matrix."""
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    off = np.sqrt(np.arange(1, order) / 2.0)
    try:
        nodes = scipy.linalg.eigh_tridiagonal(np.zeros(order), off, eigvals_only=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceError(f"Jacobi matrix eigensolver failed for K={order}") from exc
    # symmetrize nodes against round-off: eta_k = -eta_{K-1-k}
    nodes = 0.5 * (nodes - nodes[::-1])
    # The LAPACK eigenvectors only carry absolute accuracy, which wipes out
    # the tiny tail weights.  The eigenvector belonging to eta_k is
    # proportional to (Hn_0(eta_k), ..., Hn_{K-1}(eta_k)), so rebuild it from
    # the recursion with the Gaussian folded in; the ratio is then accurate
    # to relative precision and the first component positive.
    h = hermite_function_table(order - 1, nodes)
    norm2 = np.sum(h * h, axis=0)
    vecs = h / np.sqrt(norm2)
    weights = np.exp(-nodes * nodes) / norm2
    for arr in (nodes, weights, vecs):
        arr.setflags(write=False)
    return QuadratureRule(order, nodes, weights, vecs)


def dawson(x):
    """Dawson's integral D(x) = exp(-x^2) * int_0^x exp(t^2) dt."""
    return scipy.special.dawsn(x)


def log_norm_constant(nu: float) -> float:
    """log of A_nu = [pi^(1/4) 2^nu sqrt(Gamma(2 nu + 1))]^-1.

    Integer nu gives the even-channel constant A_n, half-integer nu the
    odd-channel A_{n+1/2}.
    """
    return -(0.25 * math.log(math.pi) + nu * math.log(2.0) + 0.5 * math.lgamma(2.0 * nu + 1.0))


def log_gamma_ratio(a: float, b: float) -> float:
    """log(Gamma(a) / Gamma(b)) for positive a, b."""
    return math.lgamma(a) - math.lgamma(b)


def _series_1f1(a: float, c: float, z: float, rtol: float, max_terms: int):
    term = 1.0
    total = 1.0
    biggest = 1.0
    for k in range(max_terms):
        term *= (a + k) / (c + k) * z / (k + 1)
        total += term
        biggest = max(biggest, abs(term))
        if term == 0.0 or abs(term) <= rtol * abs(total):
            return total, biggest
    raise ConvergenceError(f"1F1({a}; {c}; {z}) did not converge in {max_terms} terms")


def kummer_1f1(a: float, c: float, z: float, *, rtol: float = 1e-15, max_terms: int = 10_000) -> float:
    """Confluent hypergeometric function 1F1(a; c; z) by its power series.

    Both the direct series and the Kummer-transformed form
    exp(z) 1F1(c - a; c; -z) are available; the one with less cancellation
    (smaller largest-term / |sum|) is returned.  Intended for |z| <= 50.
    """
    if c <= 0 and float(c).is_integer():
        raise ValueError(f"1F1 undefined for non-positive integer c={c}")
    if z == 0.0:
        return 1.0
    direct, big_d = _series_1f1(a, c, z, rtol, max_terms)
    kummer, big_k = _series_1f1(c - a, c, -z, rtol, max_terms)
    kummer *= math.exp(z)
    big_k *= math.exp(z)
    cond_d = big_d / abs(direct) if direct != 0 else math.inf
    cond_k = big_k / abs(kummer) if kummer != 0 else math.inf
    return direct if cond_d <= cond_k else kummer
