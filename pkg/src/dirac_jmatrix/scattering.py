"""Transmission and reflection amplitudes from the finite middle system.

Per parameter set the middle matrices are built and diagonalized once.
Each energy then only needs the four corner elements of the Green function,
the reference coefficients up to index N and a handful of complex products.
"""
from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisParams, MiddleSystem, SpinorLayout, boundary_couplings, build_middle_system, complete_layout
from .greens import GreenEigen, PoleError, diagonalize, green_elements
from .mathkit import QuadratureRule, gauss_hermite
from .potential import PotentialSpec, assemble_potential_blocks, classify_parity, layout_potential_matrix
from .refsol import (
    InitialRelationError,
    KinematicRatios,
    RatioError,
    kinematic_ratios,
    kinematics_from_energy,
    reference_coefficients,
)

__all__ = [
    "CornerGreens",
    "ScatteringResult",
    "AmplitudeError",
    "JMatrixSolver",
    "PlateauReport",
    "PlateauRegion",
    "corner_greens",
    "amplitudes_decoupled",
    "amplitudes_coupled",
    "amplitudes_direct",
    "outer_coefficients",
    "solve_middle_coefficients",
    "energy_sweep",
    "plateau_scan",
    "largest_plateau",
]

DECOUPLE_RTOL = 1e-10
UNITARITY_FLAG = 1e-3
NUDGE = 1e-8
MU_LIMIT = 3.0


class AmplitudeError(ArithmeticError):
    """A denominator of the amplitude formulas vanished."""


@dataclass(frozen=True)
class CornerGreens:
    gpp: float
    gmm: float
    gpm: float
    gmp: float

    @property
    def coupling(self) -> float:
        return max(abs(self.gpm), abs(self.gmp))

    def decoupled(self) -> "CornerGreens":
        return CornerGreens(self.gpp, self.gmm, 0.0, 0.0)


def corner_greens(eig: GreenEigen, z: float, index_map) -> CornerGreens:
    """Corner elements at xi_{N-1} (even) and xi_{-N} (odd).

    ``index_map`` is anything exposing ``even_corner`` and ``odd_corner``
    (a :class:`MiddleBasisIndex` or a :class:`SpinorLayout`).
    """
    ie, io = index_map.even_corner, index_map.odd_corner
    g = green_elements(eig, (ie, io), (ie, io), z)
    return CornerGreens(float(g[0, 0]), float(g[1, 1]), float(g[0, 1]), float(g[1, 0]))


def _nonzero(den: complex, what: str) -> complex:
    if den == 0 or not np.isfinite(den):
        raise AmplitudeError(f"vanishing denominator in {what}")
    return den


def amplitudes_decoupled(cg: CornerGreens, ratios: KinematicRatios, j_plus: float, j_minus: float):
    """W_+ and W_- when the two parity channels do not talk to each other."""
    r = ratios
    gp = cg.gpp * j_plus
    gm = cg.gmm * j_minus
    dp = _nonzero(1.0 + gp * r.alpha_plus, "even channel 1 + G J alpha+")
    dm = _nonzero(1.0 + gm * r.beta_plus, "odd channel 1 + G J beta+")
    w_plus = -r.rho_prev * (1.0 + gp * r.alpha_minus) / dp
    w_minus = r.sigma_prev * (1.0 + gm * r.beta_minus) / dm
    return complex(w_plus), complex(w_minus)


def amplitudes_coupled(cg: CornerGreens, ratios: KinematicRatios, j_plus: float, j_minus: float):
    """General closed form with the cross elements G_{+-} and G_{-+}."""
    r = ratios
    dp = _nonzero(1.0 + cg.gpp * j_plus * r.alpha_plus, "even channel 1 + G J alpha+")
    dm = _nonzero(1.0 + cg.gmm * j_minus * r.beta_plus, "odd channel 1 + G J beta+")
    cross = r.alpha_plus * r.beta_plus * j_plus * j_minus * cg.gpm * cg.gmp / (dp * dm)
    pref = 1.0 / _nonzero(1.0 - cross, "channel-mixing determinant")
    ep = r.rho_prev * (1.0 + cg.gpp * j_plus * r.alpha_minus) / dp
    em = r.sigma_prev * (1.0 + cg.gmm * j_minus * r.beta_minus) / dm
    xp = cg.gpm * j_minus * r.alpha_plus / dp
    xm = cg.gmp * j_plus * r.beta_plus / dm
    gam = r.gamma_plus
    w_plus = pref * (-ep + xp / gam * (r.sigma - em + gam * r.rho * xm))
    w_minus = pref * (em - gam * xm * (r.rho - ep + r.sigma / gam * xp))
    return complex(w_plus), complex(w_minus)


def amplitudes_direct(cg: CornerGreens, ratios: KinematicRatios, j_plus: float, j_minus: float):
    """Solve the two boundary matching rows as a dense 2x2 complex system.

    Independent of the closed forms; used to cross-check them.
    """
    r, N = ratios, ratios.N
    pp, pm, qp, qm = r.p_plus, r.p_minus, r.q_plus, r.q_minus
    A = np.array(
        [
            [pp[N - 1] + cg.gpp * j_plus * pp[N], cg.gpm * j_minus * qp[N]],
            [cg.gmp * j_plus * pp[N], qp[N - 1] + cg.gmm * j_minus * qp[N]],
        ],
        dtype=complex,
    )
    rhs = np.array(
        [
            -(pm[N - 1] + cg.gpp * j_plus * pm[N]) + cg.gpm * j_minus * qm[N],
            (qm[N - 1] + cg.gmm * j_minus * qm[N]) - cg.gmp * j_plus * pm[N],
        ],
        dtype=complex,
    )
    try:
        w = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise AmplitudeError("singular boundary matching system") from exc
    return complex(w[0]), complex(w[1])


def outer_coefficients(ratios: KinematicRatios, w_plus: complex, w_minus: complex, m: int):
    """b_m^+ = W_+ p_m^+ + p_m^-,  b_m^- = W_- q_m^+ - q_m^-."""
    r = ratios
    return (
        complex(w_plus * r.p_plus[m] + r.p_minus[m]),
        complex(w_minus * r.q_plus[m] - r.q_minus[m]),
    )


def solve_middle_coefficients(system: MiddleSystem, ratios: KinematicRatios, b_plus_N: complex, b_minus_N: complex, energy: float) -> np.ndarray:
    """Middle expansion coefficients from the inhomogeneous middle equation.

    (H - eps Omega) a = -J_+ b_N^+ e_{even corner} - J_- b_N^- e_{odd corner}.
    The first 2N entries follow the zeta order, so entry 0 is b_{N-1}^- and
    entry 2N-1 is b_{N-1}^+; any extra spinors of the complete scheme follow.
    """
    kin = kinematics_from_energy(system.mass, energy, system.params.lam)
    j_plus, j_minus = boundary_couplings(kin, system.params.N)
    A = system.H - energy * system.overlap
    rhs = np.zeros(A.shape[0], dtype=complex)
    rhs[system.layout.even_corner] -= j_plus * b_plus_N
    rhs[system.layout.odd_corner] -= j_minus * b_minus_N
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise PoleError(energy, energy) from exc


@dataclass(frozen=True)
class ScatteringResult:
    energy: float
    k: float = math.nan
    T: complex = complex(math.nan, math.nan)
    R: complex = complex(math.nan, math.nan)
    w_plus: complex = complex(math.nan, math.nan)
    w_minus: complex = complex(math.nan, math.nan)
    theta_plus: float | None = None
    theta_minus: float | None = None
    unitarity_defect: float = math.nan
    channel_coupling: float = math.nan
    path: str = ""
    evaluated_at: float = math.nan
    flags: tuple[str, ...] = ()
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@functools.lru_cache(maxsize=16)
def _rule(order: int) -> QuadratureRule:
    return gauss_hermite(order)


class JMatrixSolver:
    """Scattering amplitudes for one potential and one basis parameter set."""

    def __init__(self, mass: float, spec: PotentialSpec, params: BasisParams, scheme: str = "complete"):
        if mass < 0:
            raise ValueError("mass must be non-negative")
        self.mass = float(mass)
        self.spec = spec
        self.params = params
        self.parity = classify_parity(spec) if spec.parity == "auto" else spec.parity
        rule = _rule(params.K)
        if scheme == "minimal":
            V = assemble_potential_blocks(spec, params, rule).assemble()
        elif scheme == "complete":
            V = layout_potential_matrix(spec, complete_layout(params), params, rule)
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        self.system = build_middle_system(params, self.mass, V, scheme)
        self.eig = diagonalize(self.system.H, self.system.overlap)

    @property
    def layout(self) -> SpinorLayout:
        return self.system.layout

    def corner_greens(self, energy: float) -> CornerGreens:
        return corner_greens(self.eig, energy, self.layout)

    def ratios(self, energy: float) -> KinematicRatios:
        kin = kinematics_from_energy(self.mass, energy, self.params.lam)
        coeffs = reference_coefficients(kin, self.params.N + 1)
        return kinematic_ratios(coeffs, self.params.N)

    def solve(self, energy: float, path: str = "auto") -> ScatteringResult:
        """Amplitudes at one energy; numerical failures propagate as exceptions."""
        kin = kinematics_from_energy(self.mass, energy, self.params.lam)
        coeffs = reference_coefficients(kin, self.params.N + 1)
        ratios = kinematic_ratios(coeffs, self.params.N)
        cg = corner_greens(self.eig, energy, self.layout)
        j_plus, j_minus = boundary_couplings(kin, self.params.N)
        coupling = cg.coupling
        if path == "auto":
            small = coupling < DECOUPLE_RTOL * abs(cg.gpp)
            path = "decoupled" if (self.parity == "even" and small) else "coupled"
        if path == "decoupled":
            w_plus, w_minus = amplitudes_decoupled(cg, ratios, j_plus, j_minus)
            th_p, th_m = 0.5 * np.angle(w_plus), 0.5 * np.angle(w_minus)
        elif path == "coupled":
            w_plus, w_minus = amplitudes_coupled(cg, ratios, j_plus, j_minus)
            th_p = th_m = None
        else:
            raise ValueError(f"unknown path {path!r}")
        T = 0.5 * (w_plus + w_minus)
        R = 0.5 * (w_plus - w_minus)
        defect = abs(abs(T) ** 2 + abs(R) ** 2 - 1.0)
        flags = []
        if defect > UNITARITY_FLAG:
            flags.append("unitarity")
        if kin.mu > MU_LIMIT:
            flags.append("mu>3")
        return ScatteringResult(
            energy=energy,
            k=kin.k,
            T=T,
            R=R,
            w_plus=w_plus,
            w_minus=w_minus,
            theta_plus=None if th_p is None else float(th_p),
            theta_minus=None if th_m is None else float(th_m),
            unitarity_defect=float(defect),
            channel_coupling=float(coupling),
            path=path,
            evaluated_at=energy,
            flags=tuple(flags),
        )

    def evaluate(self, energy: float, max_nudges: int = 4) -> ScatteringResult:
        """Like :meth:`solve` but never raises: poles are nudged, failures recorded."""
        z = energy
        nudged = False
        for _ in range(max_nudges + 1):
            try:
                res = self.solve(z)
            except (PoleError, AmplitudeError):
                z += NUDGE * max(self.mass, 1.0)
                nudged = True
                continue
            except (RatioError, InitialRelationError, ValueError, ArithmeticError) as exc:
                return ScatteringResult(energy=energy, flags=("error",), error=f"{type(exc).__name__}: {exc}")
            flags = res.flags + (("nudged",) if nudged else ())
            return dataclasses.replace(res, energy=energy, evaluated_at=z, flags=flags)
        return ScatteringResult(energy=energy, flags=("error",), error="pole: nudging did not clear the Harris eigenvalue")


def _continuous_phases(values):
    """Shift each phase by a multiple of pi to follow its predecessor."""
    out = list(values)
    prev = None
    for i, th in enumerate(out):
        if th is None:
            prev = None
            continue
        if prev is not None:
            th = th + math.pi * round((prev - th) / math.pi)
        out[i] = th
        prev = th
    return out


def energy_sweep(solver: JMatrixSolver, energies) -> list[ScatteringResult]:
    """Evaluate every energy in order; phases are made continuous along the grid."""
    results = [solver.evaluate(float(e)) for e in energies]
    tp = _continuous_phases([r.theta_plus for r in results])
    tm = _continuous_phases([r.theta_minus for r in results])
    return [dataclasses.replace(r, theta_plus=a, theta_minus=b) for r, a, b in zip(results, tp, tm)]


@dataclass(frozen=True)
class PlateauRegion:
    lam_lo: int
    lam_hi: int
    tau_lo: int
    tau_hi: int
    spread: float
    width: float
    area: int


@dataclass(frozen=True)
class PlateauReport:
    energy: float
    lambdas: np.ndarray
    taus: np.ndarray
    Ns: tuple[int, ...]
    tol: float
    grids: dict = field(repr=False)
    regions: dict = field(default_factory=dict)
    max_spread: dict = field(default_factory=dict)

    def width(self, N: int) -> float:
        reg = self.regions.get(N)
        return 0.0 if reg is None else reg.width

    def interior_value(self, N: int) -> float:
        """|T|^2 at the centre cell of the plateau."""
        reg = self.regions[N]
        i = (reg.lam_lo + reg.lam_hi) // 2
        j = (reg.tau_lo + reg.tau_hi) // 2
        return float(self.grids[N][i, j])

    def interior_lambda(self, N: int) -> float:
        reg = self.regions[N]
        return float(self.lambdas[(reg.lam_lo + reg.lam_hi) // 2])

    @property
    def growth_ok(self) -> bool:
        widths = [self.width(N) for N in self.Ns]
        return all(b >= a for a, b in zip(widths, widths[1:]))


def largest_plateau(grid: np.ndarray, lambdas, tol: float) -> PlateauRegion | None:
    """Largest axis-aligned block of the (lambda, tau) grid with max - min < tol.

    Size is the cell count; ties go to the wider lambda range.  Cells that
    are NaN (failed evaluations) never belong to a plateau.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    nl, nt = grid.shape
    best = None
    best_key = (-1, -1.0)
    for i0 in range(nl):
        col_min = np.full(nt, np.inf)
        col_max = np.full(nt, -np.inf)
        for i1 in range(i0, nl):
            row = grid[i1]
            col_min = np.minimum(col_min, np.where(np.isnan(row), np.inf, row))
            col_max = np.maximum(col_max, np.where(np.isnan(row), np.inf, row))
            for j0 in range(nt):
                lo, hi = np.inf, -np.inf
                for j1 in range(j0, nt):
                    lo = min(lo, col_min[j1])
                    hi = max(hi, col_max[j1])
                    if hi == np.inf or not hi - lo < tol:  # inf marks a NaN cell
                        break
                    area = (i1 - i0 + 1) * (j1 - j0 + 1)
                    width = float(lambdas[i1] - lambdas[i0])
                    if (area, width) > best_key:
                        best_key = (area, width)
                        best = PlateauRegion(i0, i1, j0, j1, float(hi - lo), width, area)
    return best


def plateau_scan(mass: float, spec: PotentialSpec, energy: float, lambdas, taus, Ns, *, tol: float = 1e-4, scheme: str = "complete", K=None) -> PlateauReport:
    """|T(energy)|^2 over the (lambda, tau) grid for each N, and its largest plateau."""
    lambdas = np.asarray(lambdas, dtype=float)
    taus = np.asarray(taus, dtype=float)
    if lambdas.size == 0 or taus.size == 0 or len(Ns) == 0:
        raise ValueError("plateau grids must be non-empty")
    grids, regions, spreads = {}, {}, {}
    for N in Ns:
        grid = np.full((lambdas.size, taus.size), np.nan)
        for i, lam in enumerate(lambdas):
            for j, tau in enumerate(taus):
                params = BasisParams(lam, tau, int(N), K)
                res = JMatrixSolver(mass, spec, params, scheme).evaluate(energy)
                if res.ok:
                    grid[i, j] = abs(res.T) ** 2
        grid.setflags(write=False)
        grids[N] = grid
        finite = grid[np.isfinite(grid)]
        spreads[N] = float(finite.max() - finite.min()) if finite.size else math.nan
        region = largest_plateau(grid, lambdas, tol)
        if region is not None:
            regions[N] = region
    return PlateauReport(energy, lambdas, taus, tuple(int(n) for n in Ns), tol, grids, regions, spreads)
