"""Physical potentials and their matrix elements in the Hermite basis.

The Dirac potential matrix carries V + S on the upper diagonal, V - S on the
lower diagonal and U off the diagonal.  Scalar-function matrix elements
F_{nm} = <h_n | F(y / lambda) | h_m> are approximated by a Gauss-Hermite rule.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.interpolate
import scipy.special

from .basis import BasisParams, MiddleBasisIndex, SpinorLayout
from .mathkit import QuadratureRule, gauss_hermite

__all__ = [
    "PotentialSpec",
    "PotentialBlocks",
    "ParityError",
    "zero",
    "gaussian",
    "square",
    "smooth_barrier",
    "odd_gaussian",
    "tabulated",
    "load_table",
    "function_matrix_element",
    "function_matrix",
    "assemble_potential_blocks",
    "layout_potential_matrix",
    "classify_parity",
    "check_short_range",
]

Func = Callable[[np.ndarray], np.ndarray]


class ParityError(ValueError):
    """Declared parity is violated by the sampled potential."""


def zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def gaussian(height: float, width: float = 1.0, center: float = 0.0) -> Func:
    """height * exp(-((x - center)/width)^2)."""
    if width <= 0:
        raise ValueError("width must be positive")

    def f(x):
        t = (np.asarray(x, dtype=float) - center) / width
        return height * np.exp(-t * t)

    return f


def odd_gaussian(height: float, width: float = 1.0, center: float = 0.0) -> Func:
    """height * t * exp(-t^2) with t = (x - center)/width; odd about the center."""
    if width <= 0:
        raise ValueError("width must be positive")

    def f(x):
        t = (np.asarray(x, dtype=float) - center) / width
        return height * t * np.exp(-t * t)

    return f


def square(height: float, half_width: float = 1.0, center: float = 0.0) -> Func:
    """Sharp barrier of the given height on |x - center| < half_width."""
    if half_width <= 0:
        raise ValueError("half_width must be positive")

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x - center) < half_width, height, 0.0)

    f.breakpoints = (center - half_width, center + half_width)
    return f


def smooth_barrier(height: float, half_width: float = 1.0, smoothness: float = 0.1, center: float = 0.0) -> Func:
    """Woods-Saxon-like plateau: a product of two logistic steps of width ``smoothness``."""
    if half_width <= 0 or smoothness <= 0:
        raise ValueError("half_width and smoothness must be positive")

    def f(x):
        d = np.abs(np.asarray(x, dtype=float) - center) - half_width
        return height * scipy.special.expit(-d / smoothness)

    return f


def tabulated(x_samples, values) -> Func:
    """Cubic-spline interpolant of sampled values, zero outside the samples."""
    xs = np.asarray(x_samples, dtype=float)
    vs = np.asarray(values, dtype=float)
    if xs.ndim != 1 or xs.shape != vs.shape or xs.size < 4:
        raise ValueError("need matching 1-D sample arrays with at least 4 points")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("tabulated x values must be strictly increasing")
    spline = scipy.interpolate.CubicSpline(xs, vs)
    lo, hi = xs[0], xs[-1]

    def f(x):
        x = np.asarray(x, dtype=float)
        inside = (x >= lo) & (x <= hi)
        return np.where(inside, spline(np.clip(x, lo, hi)), 0.0)

    f.support = (lo, hi)
    return f


def load_table(path) -> Func:
    """Read a two-column (x, value) text file; '#' starts a comment."""
    path = Path(path)
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns, found {data.shape[1]}")
    return tabulated(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class PotentialSpec:
    V: Func = zero
    S: Func = zero
    U: Func = zero
    X: float = 10.0
    parity: str = "auto"
    name: str = ""

    def __post_init__(self):
        if self.parity not in ("auto", "even", "odd", "none"):
            raise ValueError(f"parity must be auto/even/odd/none, got {self.parity!r}")
        if not self.X > 0:
            raise ValueError("range X must be positive")

    def v_plus(self, x):
        return self.V(x) + self.S(x)

    def v_minus(self, x):
        return self.V(x) - self.S(x)


def _scale(spec: PotentialSpec, x) -> float:
    vals = [np.max(np.abs(f(x))) for f in (spec.V, spec.S, spec.U)]
    return max(max(vals), 1e-300)


def check_short_range(spec: PotentialSpec, samples: int = 64, rtol: float = 1e-10) -> float:
    """Largest |V| + |S| + |U| just outside [-X, X], relative to the peak inside."""
    inside = np.linspace(-spec.X, spec.X, 4 * samples + 1)
    outside = spec.X * (1.0 + np.linspace(1e-6, 3.0, samples))
    outside = np.concatenate([outside, -outside])
    tail = np.abs(spec.V(outside)) + np.abs(spec.S(outside)) + np.abs(spec.U(outside))
    return float(np.max(tail)) / _scale(spec, inside)


def _parity_residuals(spec: PotentialSpec, samples: int):
    x = np.linspace(spec.X / samples, spec.X, samples)
    scale = _scale(spec, np.concatenate([-x[::-1], [0.0], x]))

    def sym(f):
        return np.max(np.abs(f(x) - f(-x)))

    def anti(f):
        return np.max(np.abs(f(x) + f(-x)))

    even = max(sym(spec.V), sym(spec.S), anti(spec.U)) / scale
    odd = max(anti(spec.V), anti(spec.S), sym(spec.U)) / scale
    return even, odd


def classify_parity(spec: PotentialSpec, samples: int = 64, rtol: float = 1e-10) -> str:
    """'even', 'odd' or 'none' for the potential matrix under x -> -x.

    Even: V and S even, U odd.  Odd: V and S odd, U even.  Functions that are
    identically zero satisfy both; ties go to 'even'.
    """
    if samples < 16:
        raise ValueError("samples must be >= 16")
    even, odd = _parity_residuals(spec, samples)
    if even < rtol:
        return "even"
    if odd < rtol:
        return "odd"
    return "none"


def _parity_split(F: Func, lam: float, rule: QuadratureRule):
    """Even and odd parts of F on the nodes (the nodes are mirror-symmetric)."""
    vals = np.asarray(F(rule.nodes / lam), dtype=float)
    mirrored = vals[::-1]
    return 0.5 * (vals + mirrored), 0.5 * (vals - mirrored)


def function_matrix_element(F: Func, n: int, m: int, lam: float, rule: QuadratureRule) -> float:
    """Quadrature value of <h_n | F(y / lam) | h_m>.

    Only the part of F with the parity of n + m contributes, so the other
    part is dropped before summing; elements that vanish by symmetry come
    out exactly zero.
    """
    if not (0 <= n < rule.order and 0 <= m < rule.order):
        raise IndexError(f"indices ({n}, {m}) exceed quadrature order {rule.order}")
    even, odd = _parity_split(F, lam, rule)
    vals = even if (n + m) % 2 == 0 else odd
    return float(np.sum(rule.eigenvectors[n] * rule.eigenvectors[m] * vals))


def function_matrix(F: Func, lam: float, rule: QuadratureRule, size: int | None = None) -> np.ndarray:
    """All F_{nm} for n, m < size (default: the rule order) in two products."""
    size = rule.order if size is None else size
    if size > rule.order:
        raise IndexError(f"size {size} exceeds quadrature order {rule.order}")
    L = rule.eigenvectors[:size]
    even, odd = _parity_split(F, lam, rule)
    idx = np.arange(size)
    same = (idx[:, None] + idx[None, :]) % 2 == 0
    mat = np.where(same, (L * even) @ L.T, (L * odd) @ L.T)
    return 0.5 * (mat + mat.T)


@dataclass(frozen=True)
class PotentialBlocks:
    """The four N x N blocks, each indexed by the channel index n (not zeta order)."""

    V_even_pp: np.ndarray
    V_even_mm: np.ndarray
    V_odd_pm: np.ndarray
    V_odd_mp: np.ndarray

    def assemble(self) -> np.ndarray:
        """2N x 2N matrix in zeta order (odd channel reversed in the first half)."""
        N = self.V_even_pp.shape[0]
        idx = MiddleBasisIndex(N)
        even = [idx.index("even", n) for n in range(N)]
        odd = [idx.index("odd", n) for n in range(N)]
        out = np.zeros((2 * N, 2 * N))
        out[np.ix_(even, even)] = self.V_even_pp
        out[np.ix_(odd, odd)] = self.V_even_mm
        out[np.ix_(even, odd)] = self.V_odd_pm
        out[np.ix_(odd, even)] = self.V_odd_mp
        return out


def _function_matrices(spec: PotentialSpec, lam: float, rule: QuadratureRule, size: int):
    padded = np.zeros((3, size + 1, size + 1))
    k = min(size, rule.order)
    for slot, f in enumerate((spec.v_plus, spec.v_minus, spec.U)):
        padded[slot, :k, :k] = function_matrix(f, lam, rule, k)
    return padded


def _verify_parity(spec: PotentialSpec, rtol: float = 1e-8):
    if spec.parity in ("even", "odd"):
        even, odd = _parity_residuals(spec, 64)
        bad = even if spec.parity == "even" else odd
        if bad >= rtol:
            raise ParityError(
                f"declared parity {spec.parity!r} violated: relative asymmetry {bad:.3e}"
            )


def assemble_potential_blocks(spec: PotentialSpec, params: BasisParams, rule: QuadratureRule | None = None) -> PotentialBlocks:
    """Closed-form block assembly for the minimal scheme's 2N spinors."""
    _verify_parity(spec)
    N, tau = params.N, params.tau
    rule = gauss_hermite(params.K) if rule is None else rule
    Vp, Vm, U = _function_matrices(spec, params.lam, rule, 2 * N)
    n = np.arange(N)
    e, o = 2 * n, 2 * n + 1
    em = np.maximum(e - 1, 0)  # index 2n-1, weight sqrt(n) kills n = 0
    sn = np.sqrt(n)
    sh = np.sqrt(n + 0.5)
    ix = np.ix_

    pp = Vp[ix(e, e)] + tau**2 * np.outer(sn, sn) * Vm[ix(em, em)] + tau * (
        sn[:, None] * U[ix(em, e)] + sn[None, :] * U[ix(e, em)]
    )
    mm = Vp[ix(o, o)] + tau**2 * np.outer(sh, sh) * Vm[ix(e, e)] + tau * (
        sh[:, None] * U[ix(e, o)] + sh[None, :] * U[ix(o, e)]
    )
    pm = Vp[ix(e, o)] + tau**2 * np.outer(sn, sh) * Vm[ix(em, e)] + tau * (
        sn[:, None] * U[ix(em, o)] + sh[None, :] * U[ix(e, e)]
    )
    mp = pm.T.copy()
    blocks = (pp, mm, pm, mp)
    for b in blocks:
        b.setflags(write=False)
    return PotentialBlocks(*blocks)


def layout_potential_matrix(spec: PotentialSpec, layout: SpinorLayout, params: BasisParams, rule: QuadratureRule | None = None) -> np.ndarray:
    """Potential matrix for any :class:`SpinorLayout`, projected by its mask."""
    _verify_parity(spec)
    rule = gauss_hermite(params.K) if rule is None else rule
    Vp, Vm, U = _function_matrices(spec, params.lam, rule, layout.degrees)
    d = layout.degrees
    Vp, Vm, U = Vp[:d, :d], Vm[:d, :d], U[:d, :d]
    cu, cl = layout.upper, layout.lower
    V = cu.T @ Vp @ cu + cl.T @ Vm @ cl + cu.T @ U @ cl + cl.T @ U @ cu
    keep = layout.potential_mask.astype(float)
    V = V * np.outer(keep, keep)
    return 0.5 * (V + V.T)
