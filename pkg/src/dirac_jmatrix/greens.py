"""Finite-matrix Green functions G(z) = (H - z Omega)^{-1}.

Three routes are provided:

* the spectral sum over the simultaneous eigenvectors of (H, Omega);
* an eigenvalues-only form, a ratio of characteristic polynomials of the
  full pencil and of the pencil with row m / column n deleted;
* eigenvector squares recovered from eigenvalues alone.

Overlap eigenvalue normalization is fixed to one (Gamma^T Omega Gamma = I);
the symbol sigma used for kinematic ratios elsewhere is unrelated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .mathkit import ConvergenceError

__all__ = [
    "GreenEigen",
    "PoleError",
    "diagonalize",
    "green_element",
    "green_elements",
    "green_matrix",
    "green_element_eigenvalues_only",
    "eigenvector_squares_from_eigenvalues",
]


class PoleError(ArithmeticError):
    """z sits on (or numerically at) an eigenvalue of the finite pencil."""

    def __init__(self, z: float, nearest: float):
        super().__init__(f"z={z!r} is within pole tolerance of eigenvalue {nearest!r}")
        self.z = z
        self.nearest = nearest


@dataclass(frozen=True)
class GreenEigen:
    eigenvalues: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def scale(self) -> float:
        return max(float(np.max(np.abs(self.eigenvalues))), 1.0)


def _as_overlap(omega, n: int) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.ndim == 1:
        omega = np.diag(omega)
    if omega.shape != (n, n):
        raise ValueError(f"overlap shape {omega.shape} does not match H ({n}, {n})")
    return omega


def diagonalize(H, omega=None) -> GreenEigen:
    """Solve H v = e Omega v with Omega-orthonormal eigenvectors, ascending e.

    A diagonal Omega is folded into H by the symmetric substitution
    Omega^{-1/2} H Omega^{-1/2}; a full positive-definite Omega goes to the
    generalized LAPACK driver.
    """
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    if H.shape != (n, n):
        raise ValueError("H must be square")
    omega = np.eye(n) if omega is None else _as_overlap(omega, n)
    try:
        if np.count_nonzero(omega - np.diag(np.diag(omega))) == 0:
            d = np.diag(omega)
            if np.any(d <= 0):
                raise ValueError("overlap diagonal must be positive")
            r = 1.0 / np.sqrt(d)
            Hs = r[:, None] * H * r[None, :]
            vals, vecs = scipy.linalg.eigh(0.5 * (Hs + Hs.T))
            vecs = r[:, None] * vecs
        else:
            vals, vecs = scipy.linalg.eigh(0.5 * (H + H.T), 0.5 * (omega + omega.T))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"generalized eigensolver failed: {exc}") from exc
    # deterministic signs: largest-magnitude component positive
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivot, np.arange(n)])
    vecs = vecs * np.where(signs == 0, 1.0, signs)
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return GreenEigen(vals, vecs)


def _check_pole(eig: GreenEigen, z: float, rtol: float):
    gap = np.abs(eig.eigenvalues - z)
    i = int(np.argmin(gap))
    if gap[i] <= rtol * eig.scale:
        raise PoleError(z, float(eig.eigenvalues[i]))


def green_element(eig: GreenEigen, n: int, m: int, z: float, *, pole_rtol: float = 1e-12) -> float:
    """sum_i Gamma_{ni} Gamma_{mi} / (e_i - z)."""
    _check_pole(eig, z, pole_rtol)
    G = eig.vectors
    return float(np.sum(G[n] * G[m] / (eig.eigenvalues - z)))


def green_elements(eig: GreenEigen, rows, cols, z: float, *, pole_rtol: float = 1e-12) -> np.ndarray:
    """Sub-block G[rows][:, cols] from the spectral sum."""
    _check_pole(eig, z, pole_rtol)
    G = eig.vectors
    w = 1.0 / (eig.eigenvalues - z)
    return (G[list(rows)] * w) @ G[list(cols)].T


def green_matrix(eig: GreenEigen, z: float, *, pole_rtol: float = 1e-12) -> np.ndarray:
    idx = range(eig.dim)
    return green_elements(eig, idx, idx, z, pole_rtol=pole_rtol)


def _delete(a: np.ndarray, row: int, col: int) -> np.ndarray:
    return np.delete(np.delete(a, row, axis=0), col, axis=1)


def _pencil_det(A: np.ndarray, B: np.ndarray, z: float) -> complex:
    """det(A - z B) from the generalized eigenvalue pairs (s_i, t_i) of the pencil.

    With the complex QZ factorization A = Q S Z^H, B = Q T Z^H,
    det(A - z B) = det(Q) conj(det(Z)) prod(s_i - z t_i).  Writing the
    product over pairs instead of over ratios s_i / t_i keeps singular B
    (infinite eigenvalues) on the same footing.
    """
    if A.shape[0] == 0:
        return 1.0 + 0j
    S, T, Q, Z = scipy.linalg.qz(A, B, output="complex")
    c = np.linalg.det(Q) * np.conj(np.linalg.det(Z))
    return complex(c * np.prod(np.diag(S) - z * np.diag(T)))


def green_element_eigenvalues_only(H, omega, n: int, m: int, z: float, *, imag_tol: float = 1e-8) -> float:
    """G_nm(z) from eigenvalues of the full and the reduced pencil.

    For n = m the reduced pencil is symmetric; its eigenvalues and those of
    the full pencil, together with the overlap determinants, give

        G_nn(z) = [det(Omega^(nn)) / det(Omega)] prod_i(e^(nn)_i - z) / prod_j(e_j - z).

    For n != m the cofactor minor (row m and column n deleted) is not
    symmetric, so its eigenvalues may be complex; the product is formed in
    complex arithmetic and an imaginary residue above ``imag_tol`` (relative)
    raises ``ArithmeticError``.
    """
    H = np.asarray(H, dtype=float)
    size = H.shape[0]
    omega = np.eye(size) if omega is None else _as_overlap(omega, size)
    full = scipy.linalg.eigh(H, omega, eigvals_only=True)
    det_omega_full = np.prod(np.linalg.eigvalsh(omega))
    denom = det_omega_full * np.prod(full - z)
    if n == m:
        sub_h, sub_o = _delete(H, n, n), _delete(omega, n, n)
        if sub_h.size == 0:
            return float(1.0 / denom)
        rho = np.linalg.eigvalsh(sub_o)
        reduced = scipy.linalg.eigh(sub_h, sub_o, eigvals_only=True)
        return float(np.prod(rho) * np.prod(reduced - z) / denom)
    num = (-1.0) ** (n + m) * _pencil_det(_delete(H, m, n), _delete(omega, m, n), z)
    val = num / denom
    if abs(val.imag) > imag_tol * max(abs(val.real), 1e-300):
        raise ArithmeticError(f"imaginary residue {val.imag:.3e} in G[{n},{m}]")
    return float(val.real)


def eigenvector_squares_from_eigenvalues(H, k: int, n: int, *, gap_rtol: float = 1e-10) -> float:
    """Gamma_{nk}^2 = prod_i (e^(nn)_i - e_k) / prod_{j != k} (e_j - e_k), orthonormal basis."""
    H = np.asarray(H, dtype=float)
    e = np.linalg.eigvalsh(H)
    if e.size == 1:
        return 1.0
    span = max(e[-1] - e[0], 1e-300)
    if np.min(np.diff(e)) <= gap_rtol * span:
        raise ValueError("degenerate spectrum: eigenvector squares are ill-defined")
    reduced = np.linalg.eigvalsh(_delete(H, n, n))
    others = np.delete(e, k)
    return float(np.prod(reduced - e[k]) / np.prod(others - e[k]))
