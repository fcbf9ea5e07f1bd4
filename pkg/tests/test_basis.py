import math

import numpy as np
import pytest

from dirac_jmatrix.basis import (
    BasisParams,
    MiddleBasisIndex,
    boundary_couplings,
    build_middle_system,
    complete_layout,
    eval_middle_basis,
    eval_outer_basis,
    layout_h0_overlap,
    middle_h0_overlap,
    outer_basis_table,
    outer_j_block,
    outer_j_matrix,
    minimal_layout,
)
from dirac_jmatrix.mathkit import gauss_hermite
from dirac_jmatrix.refsol import Kinematics, kinematics_from_energy, sine_coefficients


def kin_mu(mu, lam=1.0, mass=1.0):
    k = mu * lam
    eps = math.sqrt(mass * mass + k * k)
    return Kinematics(mass, eps, lam, k, mu, k / (eps + mass))


def deriv5(f, x, h=1e-3):
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


# ---- parameters and index map ------------------------------------------------

@pytest.mark.parametrize(
    "kwargs",
    [dict(lam=0.0, tau=1, N=4), dict(lam=1, tau=-1, N=4), dict(lam=1, tau=1, N=1), dict(lam=1, tau=1, N=4, K=7)],
)
def test_params_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        BasisParams(**kwargs)


def test_params_default_quadrature_order():
    assert BasisParams(1.0, 1.0, 10).K == 40


def test_index_map_is_bijection():
    idx = MiddleBasisIndex(7)
    seen = set()
    for i in range(14):
        ch, n = idx.label(i)
        assert idx.index(ch, n) == i
        seen.add((ch, n))
    assert seen == {(c, n) for c in ("even", "odd") for n in range(7)}
    assert idx.label(idx.even_corner) == ("even", 6)
    assert idx.label(idx.odd_corner) == ("odd", 6)
    assert idx.xi_label(0) == -7 and idx.xi_label(13) == 6
    with pytest.raises(IndexError):
        idx.label(14)
    with pytest.raises(IndexError):
        idx.index("even", 7)


# ---- outer basis ---------------------------------------------------------------

def test_outer_even_zero_at_origin():
    kin = kinematics_from_energy(1.0, 1.6, 1.3)
    up, lo = eval_outer_basis("even", 0, kin, 0.0)
    assert up == pytest.approx(math.pi ** -0.25, rel=1e-15)
    assert lo == 0.0


@pytest.mark.parametrize("n", [0, 1, 5, 17])
def test_outer_odd_upper_vanishes_at_origin(n):
    kin = kinematics_from_energy(1.0, 1.6, 1.3)
    assert eval_outer_basis("odd", n, kin, 0.0)[0] == 0.0


@pytest.mark.parametrize("channel", ["even", "odd"])
@pytest.mark.parametrize("n", [0, 3, 12])
def test_outer_lower_is_scaled_derivative(channel, n):
    kin = kinematics_from_energy(1.0, 2.2, 0.8)
    x = np.linspace(-4, 4, 33)
    up = lambda t: eval_outer_basis(channel, n, kin, t)[0]  # noqa: E731
    lo = eval_outer_basis(channel, n, kin, x)[1]
    fd = deriv5(up, x) / (kin.mass + kin.energy)
    assert np.max(np.abs(lo - fd)) <= 1e-6 * max(np.max(np.abs(lo)), 1e-3)


def test_outer_cross_channel_orthogonal_by_quadrature():
    kin = kinematics_from_energy(1.0, 1.9, 1.1)
    rule = gauss_hermite(80)
    y = rule.nodes
    x = y / kin.lam
    g = np.exp(y * y) * rule.weights
    ue, le = outer_basis_table("even", 15, kin, x)
    uo, lo = outer_basis_table("odd", 15, kin, x)
    gram = (ue * g) @ uo.T + (le * g) @ lo.T
    assert np.max(np.abs(gram)) < 1e-12


def test_unknown_channel():
    kin = kin_mu(1.0)
    with pytest.raises(ValueError):
        outer_basis_table("up", 3, kin, 0.0)
    with pytest.raises(ValueError):
        outer_j_matrix("up", kin, 0, 0)


# ---- middle basis ---------------------------------------------------------------

def test_xi0_lower_is_identically_zero():
    p = BasisParams(1.2, 0.7, 5)
    i0 = MiddleBasisIndex(5).index("even", 0)
    _, lo = eval_middle_basis(i0, p, np.linspace(-6, 6, 101))
    assert np.all(lo == 0.0)


def test_middle_uppers_match_outer_uppers():
    p = BasisParams(1.2, 0.7, 6)
    kin = kinematics_from_energy(1.0, 1.7, p.lam)
    x = np.linspace(-5, 5, 61)
    idx = MiddleBasisIndex(6)
    for ch in ("even", "odd"):
        for n in range(6):
            mu_up, _ = eval_middle_basis(idx.index(ch, n), p, x)
            out_up, _ = eval_outer_basis(ch, n, kin, x)
            np.testing.assert_allclose(mu_up, out_up, rtol=0, atol=1e-15)


def test_middle_basis_parity():
    p = BasisParams(0.9, 1.1, 5)
    x = np.linspace(0.1, 5, 23)
    idx = MiddleBasisIndex(5)
    for n in range(5):
        u1, l1 = eval_middle_basis(idx.index("even", n), p, x)
        u2, l2 = eval_middle_basis(idx.index("even", n), p, -x)
        np.testing.assert_allclose(u1, u2, atol=1e-15)
        np.testing.assert_allclose(l1, -l2, atol=1e-15)
        u1, l1 = eval_middle_basis(idx.index("odd", n), p, x)
        u2, l2 = eval_middle_basis(idx.index("odd", n), p, -x)
        np.testing.assert_allclose(u1, -u2, atol=1e-15)
        np.testing.assert_allclose(l1, l2, atol=1e-15)


# ---- closed-form matrices ---------------------------------------------------------

def test_h0_overlap_first_elements():
    lam, tau, M = 1.3, 0.6, 2.0
    p = BasisParams(lam, tau, 4)
    H0, om = middle_h0_overlap(p, M)
    idx = MiddleBasisIndex(4)
    e0, o0 = idx.index("even", 0), idx.index("odd", 0)
    assert H0[e0, e0] == pytest.approx(M)
    assert om[e0, e0] == pytest.approx(1.0)
    assert H0[o0, o0] == pytest.approx(M + tau * (2 * lam - tau * M) / 2)
    assert om[o0, o0] == pytest.approx(1 + tau * tau / 2)


def test_h0_structure_and_overlap_diagonal():
    N, tau = 6, 0.8
    p = BasisParams(1.1, tau, N)
    H0, om = middle_h0_overlap(p, 1.5)
    idx = MiddleBasisIndex(N)
    ev = [idx.index("even", n) for n in range(N)]
    od = [idx.index("odd", n) for n in range(N)]
    assert np.all(H0[np.ix_(ev, od)] == 0.0)
    for block in (ev, od):
        sub = H0[np.ix_(block, block)]
        assert np.all(np.triu(sub, 2) == 0.0) and np.all(np.tril(sub, -2) == 0.0)
    assert np.count_nonzero(om - np.diag(np.diag(om))) == 0
    np.testing.assert_allclose(np.diag(om)[ev], 1 + tau**2 * np.arange(N))
    np.testing.assert_allclose(np.diag(om)[od], 1 + tau**2 * (np.arange(N) + 0.5))


@pytest.mark.parametrize("N", [3, 7, 10])
def test_closed_forms_match_quadrature(N):
    lam, tau, M = 1.2, 0.9, 1.0
    p = BasisParams(lam, tau, N)
    H0, om = middle_h0_overlap(p, M)
    rule = gauss_hermite(2 * N + 20)
    y = rule.nodes
    g = np.exp(y * y) * rule.weights  # plain integral over y
    x = y / lam
    dim = 2 * N
    U = np.empty((dim, y.size))
    L = np.empty_like(U)
    dU = np.empty_like(U)
    dL = np.empty_like(U)
    for i in range(dim):
        U[i], L[i] = eval_middle_basis(i, p, x)
        dU[i] = deriv5(lambda t: eval_middle_basis(i, p, t)[0], x)
        dL[i] = deriv5(lambda t: eval_middle_basis(i, p, t)[1], x)
    # H0 (u, l) = (M u - l', u' - M l); measure lambda dx = dy
    Hq = (U * g) @ (M * U - dL).T + (L * g) @ (dU - M * L).T
    Oq = (U * g) @ U.T + (L * g) @ L.T
    assert np.max(np.abs(Oq - om)) < 1e-10
    assert np.max(np.abs(Hq - H0)) < 1e-8


def test_minimal_layout_reproduces_closed_forms():
    p = BasisParams(0.7, 1.4, 8)
    H0, om = middle_h0_overlap(p, 1.3)
    H0g, omg = layout_h0_overlap(minimal_layout(p), 1.3, p.lam)
    np.testing.assert_allclose(H0g, H0, atol=1e-13)
    np.testing.assert_allclose(omg, om, atol=1e-13)


def test_complete_layout_shapes_and_mask():
    N = 5
    lay = complete_layout(BasisParams(1.0, 1.0, N))
    assert lay.dim == 2 * N + N + (N + 1)
    assert lay.degrees == 2 * N + 1
    # exactly the two boundary complements are excluded
    assert np.count_nonzero(~lay.potential_mask) == 2
    excluded = np.flatnonzero(~lay.potential_mask)
    degs = sorted(int(np.flatnonzero(lay.lower[:, a])[0]) for a in excluded)
    assert degs == [2 * N - 1, 2 * N]
    assert lay.even_corner == 2 * N - 1 and lay.odd_corner == 0


def test_complete_layout_spans_full_component_space():
    N = 6
    lay = complete_layout(BasisParams(1.3, 0.4, N))
    C = np.vstack([lay.upper, lay.lower])
    # every upper degree < 2N and every lower degree <= 2N
    rows = list(range(2 * N)) + [lay.degrees + j for j in range(2 * N + 1)]
    assert np.linalg.matrix_rank(C[rows]) == lay.dim == len(rows)


def test_complete_scheme_tau_independent_spectrum():
    spectra = []
    for tau in (0.3, 1.0, 2.5):
        sysm = build_middle_system(BasisParams(1.1, tau, 6), 1.0)
        from scipy.linalg import eigh

        spectra.append(eigh(sysm.H0, sysm.overlap, eigvals_only=True))
    np.testing.assert_allclose(spectra[0], spectra[1], atol=1e-10)
    np.testing.assert_allclose(spectra[0], spectra[2], atol=1e-10)


def test_nonrelativistic_kinetic_matrix_from_schur_complement():
    # Eliminate the lower components of the even channel of the complete
    # basis: at eps = M + E the upper block must reduce to
    # -E + (lambda^2 / 2M) K with K the -d^2/dy^2 matrix on h_0, h_2, ...
    M, lam = 1.0, 1e-3
    N = 8
    sysm = build_middle_system(BasisParams(lam, lam / M, N), M)
    lay = sysm.layout
    even = [a for a in range(lay.dim) if lay.channel_of(a) == "even"]
    up_deg = list(range(0, 2 * N, 2))
    lo_deg = list(range(1, 2 * N, 2))
    T = np.vstack([lay.upper[up_deg][:, even], lay.lower[lo_deg][:, even]])
    Tinv = np.linalg.inv(T)
    E = lam * lam / M
    A = sysm.H0[np.ix_(even, even)] - (M + E) * sysm.overlap[np.ix_(even, even)]
    Ap = Tinv.T @ A @ Tinv
    nu = len(up_deg)
    S = Ap[:nu, :nu] - Ap[:nu, nu:] @ np.linalg.solve(Ap[nu:, nu:], Ap[nu:, :nu])
    j = np.array(up_deg, dtype=float)
    K = np.diag(j + 0.5)
    off = -0.5 * np.sqrt((j[:-1] + 1) * (j[:-1] + 2))
    K += np.diag(off, 1) + np.diag(off, -1)
    nr = -E * np.eye(nu) + lam * lam / (2 * M) * K
    assert np.max(np.abs(S - nr)) <= 1e-5 * np.max(np.abs(nr))


# ---- free wave operator in the outer basis ------------------------------------------

def test_outer_j_first_element_and_tridiagonal():
    kin = kinematics_from_energy(1.0, 1.8, 0.9)
    pref = kin.lam**2 / (kin.energy + kin.mass)
    assert outer_j_matrix("even", kin, 0, 0) == pytest.approx(pref * (0.5 - kin.mu**2))
    assert outer_j_matrix("even", kin, 2, 0) == 0.0
    assert outer_j_matrix("odd", kin, 1, 3) == 0.0
    J = outer_j_block("odd", kin, 6)
    np.testing.assert_array_equal(J, J.T)


@pytest.mark.parametrize("channel", ["even", "odd"])
def test_outer_j_annihilates_sine_coefficients(channel):
    kin = kin_mu(1.3)
    sp, sm = sine_coefficients(kin, 32)
    s = sp if channel == "even" else sm
    J = outer_j_block(channel, kin, 33)
    res = (J @ s)[:31]
    scale = np.abs(J).max() * np.abs(s).max()
    assert np.max(np.abs(res)) <= 1e-10 * scale


def test_outer_j_matches_quadrature():
    # <phi_n|H0 - eps|phi_m> computed from the Hermite-function tables
    kin = kinematics_from_energy(1.0, 1.45, 1.2)
    rule = gauss_hermite(90)
    y = rule.nodes
    g = np.exp(y * y) * rule.weights
    x = y / kin.lam
    for ch in ("even", "odd"):
        U, L = outer_basis_table(ch, 12, kin, x)
        h = 1e-3
        dU = (outer_basis_table(ch, 12, kin, x - 2 * h)[0] - 8 * outer_basis_table(ch, 12, kin, x - h)[0]
              + 8 * outer_basis_table(ch, 12, kin, x + h)[0] - outer_basis_table(ch, 12, kin, x + 2 * h)[0]) / (12 * h)
        dL = (outer_basis_table(ch, 12, kin, x - 2 * h)[1] - 8 * outer_basis_table(ch, 12, kin, x - h)[1]
              + 8 * outer_basis_table(ch, 12, kin, x + h)[1] - outer_basis_table(ch, 12, kin, x + 2 * h)[1]) / (12 * h)
        M, e = kin.mass, kin.energy
        Jq = (U * g) @ ((M - e) * U - dL).T + (L * g) @ (dU - (M + e) * L).T
        np.testing.assert_allclose(Jq[:12, :12], outer_j_block(ch, kin, 12), atol=1e-7)


def test_boundary_couplings_consistent_and_negative():
    for eps in (1.01, 1.5, 4.0):
        kin = kinematics_from_energy(1.0, eps, 1.1)
        for N in (2, 9, 30):
            jp, jm = boundary_couplings(kin, N)
            assert jp == outer_j_matrix("even", kin, N, N - 1)
            assert jm == outer_j_matrix("odd", kin, N, N - 1)
            assert jp < 0 and jm < 0


def test_build_middle_system_validation():
    p = BasisParams(1.0, 1.0, 4)
    with pytest.raises(ValueError):
        build_middle_system(p, 1.0, scheme="other")
    with pytest.raises(ValueError):
        build_middle_system(p, 1.0, V=np.zeros((3, 3)), scheme="minimal")
    s = build_middle_system(p, 1.0, scheme="minimal")
    assert s.H.shape == (8, 8) and s.scheme == "minimal"
    with pytest.raises(ValueError):
        s.H0[0, 0] = 2.0
