"""Free-Dirac reference solutions in the energy-dependent Hermite spinor basis.

The even (+) and odd (-) channels are expanded as

    S^+(x) = sum_n s_n^+ phi_n^+(x),    C^+(x) = sum_n c_n^+ phi_n^+(x)

and likewise for the odd channel.  The sine-like coefficients are Hermite
functions of mu = k / lambda; the cosine-like ones are seeded from closed
forms at n = 0, 1 and continued by the three-term recursion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mathkit import dawson, hermite_function_table, kummer_1f1, log_norm_constant

__all__ = [
    "Kinematics",
    "ReferenceCoeffs",
    "KinematicRatios",
    "RatioError",
    "InitialRelationError",
    "kinematics_from_energy",
    "sine_coefficients",
    "cosine_coefficients",
    "reference_coefficients",
    "recursion_coefficients",
    "recursion_residuals",
    "initial_relation_residuals",
    "kinematic_ratios",
    "eval_reference_wavefunctions",
    "partial_sums",
    "summation_factors",
    "truncated_tail",
]

SQRT_2PI = math.sqrt(2.0 * math.pi)
PI_14 = math.pi ** 0.25
SUMMATION_ORDER = 16


class RatioError(ArithmeticError):
    """A kinematic ratio would divide by a vanishing p_n or q_n."""


class InitialRelationError(ArithmeticError):
    """Cosine-like seeds violate their inhomogeneous initial relation."""


@dataclass(frozen=True)
class Kinematics:
    mass: float
    energy: float
    lam: float
    k: float
    mu: float
    omega: float


def kinematics_from_energy(mass: float, energy: float, lam: float = 1.0) -> Kinematics:
    """Wavenumber and dimensionless kinematics for positive-energy scattering."""
    if lam <= 0:
        raise ValueError("basis scale lambda must be positive")
    if not energy > mass:
        raise ValueError(
            f"energy {energy} <= mass {mass}: bound/negative-energy regime not supported"
        )
    k = math.sqrt((energy - mass) * (energy + mass))
    omega = math.sqrt((energy - mass) / (energy + mass))
    return Kinematics(mass, energy, lam, k, k / lam, omega)


def recursion_coefficients(channel: str, n_max: int, mu: float):
    """Diagonal and off-diagonal entries of the reference recursion.

    Row n reads  diag[n] f_n - low[n] f_{n-1} - up[n] f_{n+1} = 0  with
    diag = 2(n+nu) + 1/2 - mu^2; nu = 0 for the even channel, 1/2 for the odd.
    """
    nu = _shift(channel)
    n = np.arange(n_max + 1, dtype=float)
    diag = 2.0 * (n + nu) + 0.5 - mu * mu
    low = np.sqrt(np.clip((n + nu) * (n + nu - 0.5), 0.0, None))
    up = np.sqrt((n + nu + 1.0) * (n + nu + 0.5))
    return diag, low, up


def _shift(channel: str) -> float:
    if channel in ("even", "+"):
        return 0.0
    if channel in ("odd", "-"):
        return 0.5
    raise ValueError(f"unknown channel {channel!r}")


def sine_coefficients(kin: Kinematics, n_max: int, norm_a: float = 1.0, norm_b: float = 1.0):
    """s_n^+ and s_n^- for n = 0..n_max.

    A_n e^{-mu^2/2} H_2n(mu) is the normalized Hermite function h_2n(mu), so
    the coefficients come straight from the stable Hermite-function recursion,
    run in extended precision so they stay smooth in mu at the ulp level.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    h = hermite_function_table(2 * n_max + 1, kin.mu, extended=True)
    sign = (-1.0) ** np.arange(n_max + 1)
    s_plus = sign * SQRT_2PI * norm_a * h[0::2]
    s_minus = sign * SQRT_2PI * norm_b * h[1::2]
    return s_plus, s_minus


def _cosine_seeds(mu: float, norm_a: float, norm_b: float):
    z = mu * mu
    d = float(dawson(mu))
    grow = math.exp(0.5 * z)
    shrink = math.exp(-0.5 * z)
    # mu e^{-z/2} 1F1(1/2; 3/2; z) = e^{z/2} D(mu)
    c0p = 2.0 * norm_a * math.sqrt(2.0 / math.gamma(0.5)) * grow * d
    # e^{-z/2} 1F1(-1/2; 1/2; z) = e^{z/2} (1 - 2 mu D(mu))
    c0m = norm_b * math.sqrt(2.0 / math.gamma(1.5)) * grow * (1.0 - 2.0 * mu * d)
    c1p = 2.0 * norm_a * math.sqrt(2.0 / math.gamma(1.5)) * mu * shrink * kummer_1f1(-0.5, 1.5, z)
    c1m = norm_b * math.sqrt(2.0 / math.gamma(2.5)) * shrink * kummer_1f1(-1.5, 0.5, z)
    return (c0p, c1p), (c0m, c1m)


def initial_relation_residuals(c_plus, c_minus, mu: float, norm_a: float = 1.0, norm_b: float = 1.0):
    """Relative residuals of the inhomogeneous n = 0 relations for c^+ and c^-."""
    z = mu * mu
    src_p = math.sqrt(2.0) * norm_a / PI_14 * mu * math.exp(0.5 * z)
    src_m = -norm_b / PI_14 * math.exp(0.5 * z)
    rp = z * c_plus[0] - (0.5 * c_plus[0] - math.sqrt(0.5) * c_plus[1] + src_p)
    rm = z * c_minus[0] - (1.5 * c_minus[0] - math.sqrt(1.5) * c_minus[1] + src_m)
    scale_p = max(abs(z * c_plus[0]), abs(0.5 * c_plus[0]), abs(math.sqrt(0.5) * c_plus[1]), abs(src_p), 1e-300)
    scale_m = max(abs(z * c_minus[0]), abs(1.5 * c_minus[0]), abs(math.sqrt(1.5) * c_minus[1]), abs(src_m), 1e-300)
    return abs(rp) / scale_p, abs(rm) / scale_m


def _upward(channel: str, f0: float, f1: float, n_max: int, mu: float) -> np.ndarray:
    diag, low, up = recursion_coefficients(channel, n_max, mu)
    f = np.empty(n_max + 1)
    f[0] = f0
    f[1] = f1
    for n in range(1, n_max):
        f[n + 1] = (diag[n] * f[n] - low[n] * f[n - 1]) / up[n]
    return f


def cosine_coefficients(
    kin: Kinematics, n_max: int, norm_a: float = 1.0, norm_b: float = 1.0, *, rtol: float = 1e-9
):
    """c_n^+ and c_n^- for n = 0..n_max.

    Seeds at n = 0 use Dawson's integral, at n = 1 the Kummer series; the
    pair is checked against the inhomogeneous initial relations before the
    upward recursion runs.  Upward recursion is stable once n > mu^2/4;
    below that the seeds carry a factor e^{mu^2/2} and accuracy degrades
    like e^{mu^2} * machine epsilon, so keep mu <= 3.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    (c0p, c1p), (c0m, c1m) = _cosine_seeds(kin.mu, norm_a, norm_b)
    rp, rm = initial_relation_residuals((c0p, c1p), (c0m, c1m), kin.mu, norm_a, norm_b)
    if rp > rtol or rm > rtol:
        raise InitialRelationError(
            f"initial relation violated at mu={kin.mu}: residuals {rp:.3e} (+), {rm:.3e} (-)"
        )
    c_plus = _upward("even", c0p, c1p, n_max, kin.mu)
    c_minus = _upward("odd", c0m, c1m, n_max, kin.mu)
    return c_plus, c_minus


@dataclass(frozen=True)
class ReferenceCoeffs:
    kin: Kinematics
    n_max: int
    s_plus: np.ndarray
    s_minus: np.ndarray
    c_plus: np.ndarray
    c_minus: np.ndarray
    norm_a: float = 1.0
    norm_b: float = 1.0

    @property
    def log_norm_even(self) -> np.ndarray:
        """log A_n for n = 0..n_max."""
        return np.array([log_norm_constant(n) for n in range(self.n_max + 1)])

    @property
    def log_norm_odd(self) -> np.ndarray:
        """log A_{n+1/2} for n = 0..n_max."""
        return np.array([log_norm_constant(n + 0.5) for n in range(self.n_max + 1)])


def reference_coefficients(kin: Kinematics, n_max: int, norm_a: float = 1.0, norm_b: float = 1.0) -> ReferenceCoeffs:
    s_plus, s_minus = sine_coefficients(kin, n_max, norm_a, norm_b)
    c_plus, c_minus = cosine_coefficients(kin, n_max, norm_a, norm_b)
    arrays = (s_plus, s_minus, c_plus, c_minus)
    for a in arrays:
        a.setflags(write=False)
    return ReferenceCoeffs(kin, n_max, *arrays, norm_a=norm_a, norm_b=norm_b)


def recursion_residuals(coeffs: ReferenceCoeffs, n_upto: int | None = None) -> dict[str, np.ndarray]:
    """Scaled residuals of the three-term recursion for rows 1..n_upto.

    Each residual is divided by max(|f_{n-1}|, |f_n|, |f_{n+1}|) times the
    largest recursion coefficient in the row.  The n = 0 rows are the
    initial relations and are reported separately (homogeneous for s).
    """
    n_upto = coeffs.n_max - 1 if n_upto is None else n_upto
    out = {}
    mu = coeffs.kin.mu
    for name, channel in (("s_plus", "even"), ("c_plus", "even"), ("s_minus", "odd"), ("c_minus", "odd")):
        f = getattr(coeffs, name)
        diag, low, up = recursion_coefficients(channel, n_upto + 1, mu)
        n = np.arange(1, n_upto + 1)
        res = diag[n] * f[n] - low[n] * f[n - 1] - up[n] * f[n + 1]
        fscale = np.maximum.reduce([abs(f[n - 1]), abs(f[n]), abs(f[n + 1])])
        cscale = np.maximum.reduce([abs(diag[n]), low[n], up[n]])
        out[name] = np.abs(res) / (fscale * cscale)
    # homogeneous initial relations for the sine-like coefficients
    s0p = (0.5 - mu * mu) * coeffs.s_plus[0] - math.sqrt(0.5) * coeffs.s_plus[1]
    s0m = (1.5 - mu * mu) * coeffs.s_minus[0] - math.sqrt(1.5) * coeffs.s_minus[1]
    out["s_plus_initial"] = abs(s0p) / max(abs(coeffs.s_plus[0]), abs(coeffs.s_plus[1]), 1e-300)
    out["s_minus_initial"] = abs(s0m) / max(abs(coeffs.s_minus[0]), abs(coeffs.s_minus[1]), 1e-300)
    return out


@dataclass(frozen=True)
class KinematicRatios:
    """p, q combinations at the boundary index N and the ratios built from them.

    p_n^{+-} = (s_n^+ +- i c_n^+) / 2A and q_n^{+-} = (c_n^- +- i s_n^-) / 2B;
    the superscript is the sign of the imaginary part, the channel is fixed
    (p even, q odd).
    """

    N: int
    p_plus: np.ndarray
    p_minus: np.ndarray
    q_plus: np.ndarray
    q_minus: np.ndarray
    alpha_plus: complex
    alpha_minus: complex
    beta_plus: complex
    beta_minus: complex
    gamma_plus: complex
    gamma_minus: complex
    rho: complex
    rho_prev: complex
    sigma: complex
    sigma_prev: complex


def _safe_div(num: complex, den: complex, what: str) -> complex:
    if den == 0 or abs(den) < 1e-300 * max(1.0, abs(num)):
        raise RatioError(f"vanishing denominator in {what}")
    return num / den


def kinematic_ratios(coeffs: ReferenceCoeffs, N: int) -> KinematicRatios:
    if N < 1 or N > coeffs.n_max:
        raise ValueError(f"need 1 <= N <= n_max={coeffs.n_max}, got N={N}")
    sl = slice(0, N + 1)
    a2, b2 = 2.0 * coeffs.norm_a, 2.0 * coeffs.norm_b
    p_plus = (coeffs.s_plus[sl] + 1j * coeffs.c_plus[sl]) / a2
    p_minus = (coeffs.s_plus[sl] - 1j * coeffs.c_plus[sl]) / a2
    q_plus = (coeffs.c_minus[sl] + 1j * coeffs.s_minus[sl]) / b2
    q_minus = (coeffs.c_minus[sl] - 1j * coeffs.s_minus[sl]) / b2
    n, m = N, N - 1
    return KinematicRatios(
        N=N,
        p_plus=p_plus,
        p_minus=p_minus,
        q_plus=q_plus,
        q_minus=q_minus,
        alpha_plus=_safe_div(p_plus[n], p_plus[m], f"alpha+ (p+_{m})"),
        alpha_minus=_safe_div(p_minus[n], p_minus[m], f"alpha- (p-_{m})"),
        beta_plus=_safe_div(q_plus[n], q_plus[m], f"beta+ (q+_{m})"),
        beta_minus=_safe_div(q_minus[n], q_minus[m], f"beta- (q-_{m})"),
        gamma_plus=_safe_div(p_plus[n], q_plus[n], f"gamma+ (q+_{n})"),
        gamma_minus=_safe_div(p_minus[n], q_minus[n], f"gamma- (q-_{n})"),
        rho=_safe_div(p_minus[n], p_plus[n], f"rho (p+_{n})"),
        rho_prev=_safe_div(p_minus[m], p_plus[m], f"rho (p+_{m})"),
        sigma=_safe_div(q_minus[n], q_plus[n], f"sigma (q+_{n})"),
        sigma_prev=_safe_div(q_minus[m], q_plus[m], f"sigma (q+_{m})"),
    )


def eval_reference_wavefunctions(kin: Kinematics, x, norm_a: float = 1.0, norm_b: float = 1.0) -> dict[str, np.ndarray]:
    """Exact sine-like spinors S^+(x), S^-(x); each entry has shape (2,) + x.shape."""
    x = np.asarray(x, dtype=float)
    kx = kin.k * x
    s_plus = norm_a * np.stack([np.cos(kx), -kin.omega * np.sin(kx)])
    s_minus = norm_b * np.stack([np.sin(kx), kin.omega * np.cos(kx)])
    return {"S_plus": s_plus, "S_minus": s_minus}


def summation_factors(n_max: int, order: int | None = SUMMATION_ORDER) -> np.ndarray:
    """Smooth weights exp(-36 (n / n_max)^order) for n = 0..n_max.

    The Hermite expansions of the sine- and cosine-like solutions are not
    square summable; their raw partial sums oscillate with O(1) amplitude
    and never settle pointwise.  Weighting the terms with a smooth cutoff
    (a summation method, not a change of the series) recovers the functions
    to near machine precision well inside |lambda x| < sqrt(4 n_max).
    ``order=None`` gives the raw partial sums.
    """
    n = np.arange(n_max + 1, dtype=float)
    if order is None:
        return np.ones_like(n)
    return np.exp(-36.0 * (n / max(n_max, 1)) ** order)


def partial_sums(coeffs: ReferenceCoeffs, x, n_lo: int = 0, n_hi: int | None = None, *, order: int | None = SUMMATION_ORDER) -> dict[str, np.ndarray]:
    """Weighted sums over n_lo..n_hi of s and c coefficients times the outer basis.

    Weights come from :func:`summation_factors` for the full range 0..n_hi.
    """
    from .basis import outer_basis_table

    n_hi = coeffs.n_max if n_hi is None else n_hi
    x = np.asarray(x, dtype=float)
    w = summation_factors(n_hi, order)[n_lo:]
    out = {}
    for channel, s, c, tag in (
        ("even", coeffs.s_plus, coeffs.c_plus, "plus"),
        ("odd", coeffs.s_minus, coeffs.c_minus, "minus"),
    ):
        upper, lower = outer_basis_table(channel, n_hi, coeffs.kin, x)
        sl = slice(n_lo, n_hi + 1)
        for name, f in (("S", s), ("C", c)):
            wf = w * f[sl]
            comp_u = np.tensordot(wf, upper[sl], axes=1)
            comp_l = np.tensordot(wf, lower[sl], axes=1)
            out[f"{name}_{tag}"] = np.stack([comp_u, comp_l])
    return out


def truncated_tail(coeffs: ReferenceCoeffs, kin: Kinematics, N: int, x, *, order: int | None = SUMMATION_ORDER) -> dict[str, np.ndarray]:
    """S_N and C_N: the series with the first N terms removed, on the grid x.

    Uses every coefficient up to ``coeffs.n_max``; keep n_max >= N + 60.
    """
    if coeffs.kin != kin:
        raise ValueError("coefficients were computed for different kinematics")
    return partial_sums(coeffs, x, n_lo=N, order=order)
