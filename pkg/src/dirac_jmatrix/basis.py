"""Spinor bases: the energy-dependent outer basis and the middle-subspace basis.

A middle basis is described by a :class:`SpinorLayout`: every basis spinor is
a pair of coefficient vectors over the Hermite functions h_j(lambda x), one for
the upper and one for the lower component.  Matrix elements of the free
Dirac operator, the overlap and the potential then follow from small dense
products, which keeps the two supported schemes on one code path:

``"minimal"``
    the 2N spinors xi_n, xi_{-n-1} with lower components tied to the upper
    ones through tau (closed forms in :func:`middle_h0_overlap`).
``"complete"`` (default)
    the same 2N spinors plus lower-only Hermite spinors that close the space
    under the free operator.  Only this variant reproduces the free-particle
    identity T = 1, R = 0; see the project notes for the analysis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mathkit import derivative_matrix, hermite_function_table
from .refsol import Kinematics

__all__ = [
    "BasisParams",
    "MiddleBasisIndex",
    "SpinorLayout",
    "MiddleSystem",
    "outer_basis_table",
    "eval_outer_basis",
    "eval_middle_basis",
    "middle_h0_overlap",
    "outer_j_matrix",
    "outer_j_block",
    "boundary_couplings",
    "minimal_layout",
    "complete_layout",
    "layout_h0_overlap",
    "build_middle_system",
]

SCHEMES = ("complete", "minimal")


@dataclass(frozen=True)
class BasisParams:
    lam: float
    tau: float
    N: int
    K: int | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError("N must be an integer >= 2")
        if self.K is None:
            object.__setattr__(self, "K", 2 * self.N + 20)
        if self.K < 2 * self.N:
            raise ValueError(f"quadrature order K={self.K} must be >= 2N={2 * self.N}")


@dataclass(frozen=True)
class MiddleBasisIndex:
    """Bijection between the merged index i (zeta_i = xi_{i-N}) and (channel, n)."""

    N: int

    def label(self, i: int) -> tuple[str, int]:
        if not 0 <= i < 2 * self.N:
            raise IndexError(f"middle index {i} outside 0..{2 * self.N - 1}")
        return ("even", i - self.N) if i >= self.N else ("odd", self.N - 1 - i)

    def index(self, channel: str, n: int) -> int:
        if not 0 <= n < self.N:
            raise IndexError(f"channel index {n} outside 0..{self.N - 1}")
        if channel == "even":
            return self.N + n
        if channel == "odd":
            return self.N - 1 - n
        raise ValueError(f"unknown channel {channel!r}")

    def xi_label(self, i: int) -> int:
        """The xi subscript m in -N..N-1."""
        return i - self.N

    @property
    def even_corner(self) -> int:
        """Index of xi_{N-1}."""
        return 2 * self.N - 1

    @property
    def odd_corner(self) -> int:
        """Index of xi_{-N}."""
        return 0


def outer_basis_table(channel: str, n_max: int, kin: Kinematics, x):
    """Upper and lower components of phi_n^{+-}(x, eps) for n = 0..n_max.

    Both arrays have shape ``(n_max + 1,) + x.shape``.  The lower component is
    (1/(M+eps)) d/dx of the upper one, written out in Hermite functions.
    """
    x = np.asarray(x, dtype=float)
    h = hermite_function_table(2 * n_max + 2, kin.lam * x)
    f = kin.lam / (kin.mass + kin.energy)
    if channel in ("even", "+"):
        shift = 0
    elif channel in ("odd", "-"):
        shift = 1
    else:
        raise ValueError(f"unknown channel {channel!r}")
    deg = 2 * np.arange(n_max + 1) + shift
    upper = h[deg]
    # d/dy h_j = sqrt(j/2) h_{j-1} - sqrt((j+1)/2) h_{j+1}
    lower = np.zeros_like(upper)
    for row, j in enumerate(deg):
        if j > 0:
            lower[row] += math.sqrt(j / 2.0) * h[j - 1]
        lower[row] -= math.sqrt((j + 1) / 2.0) * h[j + 1]
    return upper, f * lower


def eval_outer_basis(channel: str, n: int, kin: Kinematics, x):
    upper, lower = outer_basis_table(channel, n, kin, x)
    return upper[n], lower[n]


def _xi_components(channel: str, n: int, tau: float):
    """(degree, coeff) pairs of upper and lower parts of an xi spinor."""
    if channel == "even":
        upper = [(2 * n, 1.0)]
        lower = [(2 * n - 1, tau * math.sqrt(n))] if n > 0 else []
    else:
        upper = [(2 * n + 1, 1.0)]
        lower = [(2 * n, tau * math.sqrt(n + 0.5))]
    return upper, lower


def eval_middle_basis(i: int, params: BasisParams, x):
    """Upper and lower components of zeta_i(x)."""
    channel, n = MiddleBasisIndex(params.N).label(i)
    x = np.asarray(x, dtype=float)
    h = hermite_function_table(2 * n + 1, params.lam * x)
    upper_terms, lower_terms = _xi_components(channel, n, params.tau)
    upper = sum(c * h[d] for d, c in upper_terms)
    lower = sum((c * h[d] for d, c in lower_terms), np.zeros_like(x))
    return upper, lower


def middle_h0_overlap(params: BasisParams, mass: float):
    """Closed-form H0 and overlap of the minimal 2N-spinor middle basis."""
    N, lam, tau = params.N, params.lam, params.tau
    H0 = np.zeros((2 * N, 2 * N))
    omega = np.zeros(2 * N)
    idx = MiddleBasisIndex(N)
    for channel, nu in (("even", 0.0), ("odd", 0.5)):
        for n in range(N):
            i = idx.index(channel, n)
            H0[i, i] = mass + tau * (2.0 * lam - tau * mass) * (n + nu)
            omega[i] = 1.0 + tau * tau * (n + nu)
            if n + 1 < N:
                j = idx.index(channel, n + 1)
                off = -lam * tau * math.sqrt((n + nu + 1.0) * (n + nu + 0.5))
                H0[i, j] = H0[j, i] = off
    return H0, np.diag(omega)


def outer_j_matrix(channel: str, kin: Kinematics, n: int, m: int) -> float:
    """Element of the tridiagonal free wave operator in the outer basis."""
    if n < 0 or m < 0:
        raise ValueError("indices must be non-negative")
    nu = 0.0 if channel in ("even", "+") else 0.5
    if channel not in ("even", "+", "odd", "-"):
        raise ValueError(f"unknown channel {channel!r}")
    pref = kin.lam ** 2 / (kin.energy + kin.mass)
    if n == m:
        return pref * (2.0 * (n + nu) + 0.5 - kin.mu ** 2)
    if n == m + 1:
        return -pref * math.sqrt((n + nu) * (n + nu - 0.5))
    if n == m - 1:
        return -pref * math.sqrt((n + nu + 1.0) * (n + nu + 0.5))
    return 0.0


def outer_j_block(channel: str, kin: Kinematics, size: int) -> np.ndarray:
    J = np.zeros((size, size))
    for n in range(size):
        for m in range(max(0, n - 1), min(size, n + 2)):
            J[n, m] = outer_j_matrix(channel, kin, n, m)
    return J


def boundary_couplings(kin: Kinematics, N: int) -> tuple[float, float]:
    """J_+ = J^+_{N,N-1} and J_- = J^-_{N,N-1}."""
    if N < 1:
        raise ValueError("N must be >= 1")
    pref = kin.lam ** 2 / (kin.energy + kin.mass)
    return -pref * math.sqrt(N * (N - 0.5)), -pref * math.sqrt(N * (N + 0.5))


@dataclass(frozen=True)
class SpinorLayout:
    """Hermite-coefficient description of a middle basis.

    ``upper[j, a]`` / ``lower[j, a]`` is the coefficient of h_j in the upper /
    lower component of basis spinor a.  ``potential_mask[a]`` is False for
    spinors kept out of the potential projector.
    """

    scheme: str
    N: int
    upper: np.ndarray
    lower: np.ndarray
    potential_mask: np.ndarray
    even_corner: int
    odd_corner: int
    labels: tuple = field(default=())

    @property
    def dim(self) -> int:
        return self.upper.shape[1]

    @property
    def degrees(self) -> int:
        return self.upper.shape[0]

    def channel_of(self, a: int) -> str:
        return self.labels[a][0]


def _xi_columns(N: int, tau: float, degrees: int):
    idx = MiddleBasisIndex(N)
    cu = np.zeros((degrees, 2 * N))
    cl = np.zeros((degrees, 2 * N))
    labels = []
    for i in range(2 * N):
        channel, n = idx.label(i)
        up, lo = _xi_components(channel, n, tau)
        for d, c in up:
            cu[d, i] = c
        for d, c in lo:
            cl[d, i] = c
        labels.append((channel, f"xi[{idx.xi_label(i)}]"))
    return cu, cl, labels


def minimal_layout(params: BasisParams) -> SpinorLayout:
    N = params.N
    cu, cl, labels = _xi_columns(N, params.tau, 2 * N)
    idx = MiddleBasisIndex(N)
    return SpinorLayout(
        "minimal", N, cu, cl, np.ones(2 * N, dtype=bool), idx.even_corner, idx.odd_corner, tuple(labels)
    )


def complete_layout(params: BasisParams) -> SpinorLayout:
    """Xi spinors followed by lower-only spinors (0, h_j).

    Even channel adds j = 1, 3, ..., 2N-1; odd channel adds j = 0, 2, ..., 2N.
    The two highest ones (j = 2N-1, 2N) are the boundary complements that
    connect the middle block to the outer tails; they are excluded from
    the potential projector.
    """
    N = params.N
    degrees = 2 * N + 1
    cu, cl, labels = _xi_columns(N, params.tau, degrees)
    extra_deg = [2 * n - 1 for n in range(1, N + 1)] + [2 * n for n in range(N + 1)]
    extra_ch = ["even"] * N + ["odd"] * (N + 1)
    cu_x = np.zeros((degrees, len(extra_deg)))
    cl_x = np.zeros((degrees, len(extra_deg)))
    for a, d in enumerate(extra_deg):
        cl_x[d, a] = 1.0
        labels.append((extra_ch[a], f"lower[{d}]"))
    mask = np.ones(2 * N + len(extra_deg), dtype=bool)
    for a, d in enumerate(extra_deg):
        if d >= 2 * N - 1:
            mask[2 * N + a] = False
    idx = MiddleBasisIndex(N)
    return SpinorLayout(
        "complete",
        N,
        np.hstack([cu, cu_x]),
        np.hstack([cl, cl_x]),
        mask,
        idx.even_corner,
        idx.odd_corner,
        tuple(labels),
    )


def layout_h0_overlap(layout: SpinorLayout, mass: float, lam: float):
    """Free Dirac matrix and overlap from the component coefficients."""
    cu, cl = layout.upper, layout.lower
    D = lam * derivative_matrix(layout.degrees)
    H0 = mass * (cu.T @ cu) - mass * (cl.T @ cl) - cu.T @ D @ cl + cl.T @ D @ cu
    omega = cu.T @ cu + cl.T @ cl
    return 0.5 * (H0 + H0.T), 0.5 * (omega + omega.T)


@dataclass(frozen=True)
class MiddleSystem:
    layout: SpinorLayout
    mass: float
    params: BasisParams
    H0: np.ndarray
    overlap: np.ndarray
    V: np.ndarray

    @property
    def H(self) -> np.ndarray:
        return self.H0 + self.V

    @property
    def scheme(self) -> str:
        return self.layout.scheme


def build_middle_system(params: BasisParams, mass: float, V: np.ndarray | None = None, scheme: str = "complete") -> MiddleSystem:
    """H0, overlap and (optionally) a precomputed potential matrix.

    The minimal scheme uses the closed forms; the complete scheme uses the
    generic component products.
    """
    if scheme == "minimal":
        layout = minimal_layout(params)
        H0, omega = middle_h0_overlap(params, mass)
    elif scheme == "complete":
        layout = complete_layout(params)
        H0, omega = layout_h0_overlap(layout, mass, params.lam)
    else:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    V = np.zeros_like(H0) if V is None else np.array(V, dtype=float)
    if V.shape != H0.shape:
        raise ValueError(f"potential matrix shape {V.shape} does not match {H0.shape}")
    for a in (H0, omega, V):
        a.setflags(write=False)
    return MiddleSystem(layout, mass, params, H0, omega, V)
