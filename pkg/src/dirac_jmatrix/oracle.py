"""Reference amplitudes by direct integration of the 1D Dirac and Schrodinger equations.

Nothing in here touches the J-matrix machinery.  A 2x2 real fundamental
matrix is propagated across the interaction region with an adaptive
Runge-Kutta method; plane-wave matching at both ends then gives T and R.
Closed-form square-barrier solutions are provided to check the integrator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

from .potential import PotentialSpec
from .refsol import Kinematics

__all__ = [
    "OracleResult",
    "OracleError",
    "dirac_generator",
    "integrate_dirac",
    "nonrelativistic_oracle",
    "square_barrier_dirac",
    "square_barrier_schrodinger",
]


class OracleError(RuntimeError):
    """Integration or plane-wave matching failed."""


@dataclass(frozen=True)
class OracleResult:
    energy: float
    T: complex
    R: complex
    unitarity_defect: float
    steps: int
    tol: float


def dirac_generator(energy: float, mass: float, V: float, S: float, U: float) -> np.ndarray:
    """Matrix A with (u, l)' = A (u, l) for the time-independent Dirac equation."""
    return np.array([[-U, energy + mass - V + S], [mass + V + S - energy, U]], dtype=float)


def _breakpoints(spec: PotentialSpec, lo: float, hi: float):
    pts = set()
    for f in (spec.V, spec.S, spec.U):
        for p in getattr(f, "breakpoints", ()) or ():
            if lo < p < hi:
                pts.add(float(p))
    return sorted(pts)


def _propagate(rhs, x0: float, x1: float, breaks, tol: float):
    """Fundamental matrix Phi(x1) with Phi(x0) = I, restarting at breakpoints."""
    nodes = [x0] + (breaks if x1 > x0 else breaks[::-1]) + [x1]
    phi = np.eye(2)
    steps = 0
    for a, b in zip(nodes, nodes[1:]):
        sol = scipy.integrate.solve_ivp(
            rhs, (a, b), phi.ravel(order="F"), method="DOP853", rtol=tol, atol=tol * 1e-3
        )
        if not sol.success:
            raise OracleError(f"integration failed on [{a}, {b}]: {sol.message}")
        phi = sol.y[:, -1].reshape(2, 2, order="F")
        steps += sol.t.size - 1
    return phi, steps


def _matrix_rhs(gen):
    def rhs(x, y):
        A = gen(x)
        Y = y.reshape(2, 2, order="F")
        return (A @ Y).ravel(order="F")

    return rhs


def _solve_match(columns, target) -> tuple[complex, complex]:
    A = np.column_stack(columns).astype(complex)
    if abs(np.linalg.det(A)) < 1e-14 * np.linalg.norm(A) ** 2:
        raise OracleError("plane-wave matching system is singular")
    T, R = np.linalg.solve(A, target)
    return complex(T), complex(R)


def integrate_dirac(spec: PotentialSpec, kin: Kinematics, tol: float = 1e-10, *, margin: float | None = None, direction: str = "backward") -> OracleResult:
    """T and R for a particle incident from the left.

    Boundary forms: psi = (1, i w) e^{ikx} + R (1, -i w) e^{-ikx} on the left,
    psi = T (1, i w) e^{ikx} on the right.  The potential is set to zero
    beyond X + margin (default margin 2/lambda).
    """
    eps, M = kin.energy, kin.mass
    margin = 2.0 / kin.lam if margin is None else margin
    xr = spec.X + margin
    xl = -xr

    def gen(x):
        if abs(x) > xr:
            return dirac_generator(eps, M, 0.0, 0.0, 0.0)
        return dirac_generator(eps, M, float(spec.V(x)), float(spec.S(x)), float(spec.U(x)))

    k, w = kin.k, kin.omega
    right = lambda x: np.array([1.0, 1j * w]) * np.exp(1j * k * x)  # noqa: E731
    left = lambda x: np.array([1.0, -1j * w]) * np.exp(-1j * k * x)  # noqa: E731
    breaks = _breakpoints(spec, xl, xr)
    if direction == "backward":
        # psi(xl) = Phi psi(xr):  T Phi chi+(xr) - R chi-(xl) = chi+(xl)
        phi, steps = _propagate(_matrix_rhs(gen), xr, xl, breaks, tol)
        T, R = _solve_match([phi @ right(xr), -left(xl)], right(xl))
    elif direction == "forward":
        # psi(xr) = Phi psi(xl):  T chi+(xr) - R Phi chi-(xl) = Phi chi+(xl)
        phi, steps = _propagate(_matrix_rhs(gen), xl, xr, breaks, tol)
        T, R = _solve_match([right(xr), -(phi @ left(xl))], phi @ right(xl))
    else:
        raise ValueError("direction must be 'backward' or 'forward'")
    defect = abs(abs(T) ** 2 + abs(R) ** 2 - 1.0)
    return OracleResult(eps, T, R, defect, steps, tol)


def nonrelativistic_oracle(spec: PotentialSpec, E: float, mass: float, tol: float = 1e-10, *, margin: float = 2.0) -> OracleResult:
    """Schrodinger amplitudes for -psi''/(2M) + (V + S) psi = E psi."""
    if not E > 0:
        raise ValueError("kinetic energy must be positive")
    k = math.sqrt(2.0 * mass * E)
    xr = spec.X + margin
    xl = -xr

    def gen(x):
        v = float(spec.V(x) + spec.S(x)) if abs(x) <= xr else 0.0
        return np.array([[0.0, 1.0], [2.0 * mass * (v - E), 0.0]])

    right = lambda x: np.array([1.0, 1j * k]) * np.exp(1j * k * x)  # noqa: E731
    left = lambda x: np.array([1.0, -1j * k]) * np.exp(-1j * k * x)  # noqa: E731
    phi, steps = _propagate(_matrix_rhs(gen), xr, xl, _breakpoints(spec, xl, xr), tol)
    T, R = _solve_match([phi @ right(xr), -left(xl)], right(xl))
    return OracleResult(E, T, R, abs(abs(T) ** 2 + abs(R) ** 2 - 1.0), steps, tol)


def square_barrier_dirac(kin: Kinematics, half_width: float, V0: float = 0.0, S0: float = 0.0, U0: float = 0.0):
    """Closed form for a constant (V0, S0, U0) on |x| < half_width.

    Inside, the generator is constant so the transfer matrix is its matrix
    exponential; outside, plane waves.  Covers the Klein zone, where the
    interior wavenumber sqrt((eps - V0)^2 - (M + S0)^2 - U0^2) is real again.
    """
    a = half_width
    P = scipy.linalg.expm(dirac_generator(kin.energy, kin.mass, V0, S0, U0) * (-2.0 * a))
    k, w = kin.k, kin.omega
    right = lambda x: np.array([1.0, 1j * w]) * np.exp(1j * k * x)  # noqa: E731
    left = lambda x: np.array([1.0, -1j * w]) * np.exp(-1j * k * x)  # noqa: E731
    return _solve_match([P @ right(a), -left(-a)], right(-a))


def square_barrier_schrodinger(E: float, mass: float, V0: float, half_width: float):
    """Textbook plane-wave matching for a rectangular barrier on |x| < a.

    The usual formulas are for a barrier on [0, 2a]; shifting it to be
    centred leaves t alone and multiplies r by exp(-2ika).
    """
    a = half_width
    k = math.sqrt(2.0 * mass * E)
    q = np.sqrt(complex(2.0 * mass * (E - V0)))
    if abs(q) < 1e-14:
        t = np.exp(-2j * k * a) / (1.0 - 1j * k * a)
        r = -1j * k * a * np.exp(-2j * k * a) / (1.0 - 1j * k * a)
        return complex(t), complex(r)
    L = 2.0 * a
    den = np.cos(q * L) - 1j * (k * k + q * q) / (2.0 * k * q) * np.sin(q * L)
    t = np.exp(-1j * k * L) / den
    r = 1j * (q * q - k * k) / (2.0 * k * q) * np.sin(q * L) * np.exp(-1j * k * L) / den
    return complex(t), complex(r)
