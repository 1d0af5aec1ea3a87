import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_transport_state, small_problem
from trt_multilevel import lonwf, transport
from trt_multilevel.lonwf import assemble_grey, assemble_group_EF, solve_group_lonwf, solve_lonwf
from trt_multilevel.phase_space import build_double_gauss, build_uniform_mesh
from trt_multilevel.physics import C_LIGHT, DomainError
from trt_multilevel.transport import SQRT3, ClosureFactors, TransportBoundary

INF = np.inf


def _iso_factors(G, N, quad):
    K, H, Gp, f = transport.isotropic_factors(quad)
    one = np.ones((G, N, 2))
    z = np.zeros(2)
    return ClosureFactors(K * one, K * one, H * one, H * one, Gp * one, -Gp * one, f * one, z, z, z, z)


def _halves(psi, quad):
    w = quad.weights[None, :, None, None]
    return np.sum(w[:, quad.pos] * psi[:, quad.pos], 1), np.sum(w[:, quad.neg] * psi[:, quad.neg], 1)


@pytest.mark.parametrize("tau", [1e-2, 1.0, 1e2])
def test_lld_single_cell_attenuation(tau):
    q = build_double_gauss(8)
    fac = _iso_factors(1, 1, q)
    # tau~ = sigma K h / H = sqrt(3) sigma h
    mesh = build_uniform_mesh(tau / SQRT3, 1)
    inflow = ((np.array([1.0]), np.array([1.0 / SQRT3]), np.array([0.5])), (np.zeros(1),) * 3)
    z = np.zeros((1, 1, 2))
    php, _ = solve_lonwf(fac, np.ones((1, 1)), np.zeros((1, 1)), z, z, INF, mesh, inflow)
    want = 1.0 / (1.0 + tau + 0.5 * tau**2)
    assert php[0, 0, 1] == pytest.approx(want, rel=1e-12)
    if tau == 1.0:
        assert php[0, 0, 1] == pytest.approx(0.4, rel=1e-14)


def test_equilibrium_and_zero_solutions():
    q = build_double_gauss(8)
    mesh = build_uniform_mesh(2.0, 4)
    G, N = 3, 4
    fac = _iso_factors(G, N, q)
    B = np.array([1.0, 2.0, 3.0])[:, None] * np.ones((G, N))
    sigma = np.array([0.5, 5.0, 50.0])[:, None] * np.ones((G, N))
    prev = np.repeat(B[:, :, None], 2, axis=2)  # K phi with K = 1
    none = (None, None)
    pp, pm = solve_lonwf(fac, sigma, sigma * B, prev, prev, 1e-3, mesh, none)
    assert np.allclose(pp, prev, rtol=1e-12) and np.allclose(pm, prev, rtol=1e-12)
    z = np.zeros((G, N, 2))
    inflow = ((np.zeros(G),) * 3, (np.zeros(G),) * 3)
    pp, pm = solve_lonwf(fac, sigma, 0 * sigma, z, z, 1e-3, mesh, inflow)
    assert np.all(pp == 0) and np.all(pm == 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["vacuum", "reflective"]))
def test_lonwf_reproduces_transport_moments(seed, right):
    """With factors from the transport solution, the low-order sweep returns
    exactly the quadrature half-range integrals of that solution."""
    pb = small_problem(right_boundary=right)
    T, sigma, planck, _, _, psi_prev, psi = random_transport_state(pb, seed)
    fac = transport.compute_closure_factors(psi, pb.quad, pb.bc)
    kp, km = transport.weighted_half_moments(psi_prev, pb.quad)
    pp, pm = solve_lonwf(fac, sigma, sigma * planck, kp, km, pb.time.dt, pb.mesh, pb.inflow)
    hp, hm = _halves(psi, pb.quad)
    assert np.allclose(pp, hp, rtol=1e-11, atol=0)
    assert np.allclose(pm, hm, rtol=1e-11, atol=0)


def test_reconstructed_moments_match_quadrature():
    pb = small_problem()
    _, _, _, _, _, _, psi = random_transport_state(pb, 3)
    fac = transport.compute_closure_factors(psi, pb.quad, pb.bc)
    hp, hm = _halves(psi, pb.quad)
    mom = assemble_group_EF(hp, hm, fac, pb.inflow)
    E, F = transport.group_moments_from_intensity(psi, pb.quad)
    assert np.allclose(mom.E_corner, E, rtol=1e-13)
    assert np.allclose(mom.F_corner, F, rtol=1e-12, atol=1e-12 * np.abs(F).max())
    # interior face flux is the upwind composite of the angular flux
    q = pb.quad
    w, mu = q.weights, q.mu
    face = (w[q.pos] * mu[q.pos]) @ psi[:, q.pos, :-1, 1] + (w[q.neg] * mu[q.neg]) @ psi[:, q.neg, 1:, 0]
    assert np.allclose(mom.F_face[:, 1:-1], face, rtol=1e-12, atol=1e-12 * np.abs(face).max())


def test_reconstruction_limits():
    fac = _iso_factors(1, 1, build_double_gauss(4))
    B = np.full((1, 1, 2), 2.0)
    mom = assemble_group_EF(B, B, fac, (None, None))
    assert np.allclose(mom.E_cell, 4.0 / C_LIGHT) and np.allclose(mom.F_cell, 0.0)
    fac.G_plus[:] = 1.0
    mom = assemble_group_EF(B, 0 * B, fac, (None, None))
    assert np.allclose(mom.F_cell, C_LIGHT * mom.E_cell)


def test_single_group_view_and_linearity():
    pb = small_problem()
    T, sigma, planck, _, _, psi_prev, psi = random_transport_state(pb, 5)
    fac = transport.compute_closure_factors(psi, pb.quad, pb.bc)
    kp, km = transport.weighted_half_moments(psi_prev, pb.quad)
    args = (sigma, sigma * planck, kp, km, pb.time.dt, pb.mesh, pb.inflow)
    pp, pm = solve_lonwf(fac, *args)
    gp, gm = solve_group_lonwf(2, fac, *args)
    assert np.allclose(gp, pp[2], rtol=1e-15) and np.allclose(gm, pm[2], rtol=1e-15)
    doubled = [tuple(2 * a for a in side) for side in pb.inflow]
    pp2, pm2 = solve_lonwf(fac, sigma, 2 * sigma * planck, 2 * kp, 2 * km, pb.time.dt, pb.mesh, doubled)
    assert np.allclose(pp2, 2 * pp, rtol=1e-13) and np.allclose(pm2, 2 * pm, rtol=1e-13)


def test_negative_removal_rejected():
    fac = _iso_factors(1, 1, build_double_gauss(2))
    z = np.zeros((1, 1, 2))
    with pytest.raises(DomainError):
        solve_lonwf(fac, -np.ones((1, 1)), np.zeros((1, 1)), z, z, INF, build_uniform_mesh(1.0, 1), (None, None))


# -- grey assembly -----------------------------------------------------------------

def _random_moments(r, G, N):
    Ec = r.uniform(0.01, 1.0, (G, N, 2)) * 10 ** r.uniform(-3, 3, (G, 1, 1))
    Fc = r.uniform(-1, 1, (G, N, 2)) * C_LIGHT * Ec
    Ef = r.uniform(0.01, 1.0, (G, N + 1))
    Ff = r.uniform(-1, 1, (G, N + 1)) * C_LIGHT * Ef
    return lonwf.GroupMoments(Ec, Fc, Ec.mean(-1), Fc.mean(-1), Ef, Ff)


def _assemble_random(r, G, N):
    mesh = build_uniform_mesh(1.0, N)
    mom = _random_moments(r, G, N)
    sigma = 10 ** r.uniform(-2, 6, (G, N))
    planck = r.uniform(0.1, 1.0, (G, N))
    f = r.uniform(0.2, 0.9, (G, N, 2))
    z = np.zeros(2)
    fac = ClosureFactors(*(np.ones((G, N, 2)),) * 7, z, z, z, z)
    dsig = -sigma
    return mesh, mom, sigma, planck, f, assemble_grey(mom, sigma, planck, f, dsig, mesh, fac)


def test_grey_assembly_identities_random_spectra(rng):
    for _ in range(100):
        G, N = rng.integers(1, 12), rng.integers(1, 6)
        mesh, mom, sigma, planck, f, co = _assemble_random(rng, G, N)
        E = mom.E_cell.sum(0)
        assert np.allclose(co.sigma_E * E, (sigma * mom.E_cell).sum(0), rtol=1e-13, atol=0)
        fE = (f * mom.E_corner).mean(-1).sum(0)
        assert np.allclose(co.f * E, fE, rtol=1e-13, atol=0)
        sf = lonwf.face_values(sigma, mesh.widths)
        lhs = co.sigma_R * mom.F_face.sum(0) + co.eta * co.E_face
        rhs = (sf * mom.F_face).sum(0)
        scale = (sf * np.abs(mom.F_face)).sum(0)
        assert np.all(np.abs(lhs - rhs) <= 1e-13 * scale)
        assert np.all(co.sigma_E >= sigma.min(0) * (1 - 1e-14)) and np.all(co.sigma_E <= sigma.max(0) * (1 + 1e-14))
        assert np.all(co.sigma_B >= sigma.min(0) * (1 - 1e-14)) and np.all(co.sigma_B <= sigma.max(0) * (1 + 1e-14))


def test_two_group_arithmetic_and_single_group_collapse():
    mesh = build_uniform_mesh(1.0, 1)
    E = np.ones((2, 1, 2))
    mom = lonwf.GroupMoments(E, 0 * E, E.mean(-1), 0 * E.mean(-1), np.ones((2, 2)), np.ones((2, 2)))
    z = np.zeros(2)
    fac = ClosureFactors(*(np.ones((2, 1, 2)),) * 7, z, z, z, z)
    sigma = np.array([[2.0], [4.0]])
    co = assemble_grey(mom, sigma, np.ones((2, 1)), np.full((2, 1, 2), 0.4), 0 * sigma, mesh, fac)
    assert co.sigma_E[0] == pytest.approx(3.0)

    r = np.random.default_rng(1)
    mesh, mom, sigma, planck, f, co = _assemble_random(r, 1, 4)
    assert np.allclose(co.sigma_E, sigma[0]) and np.allclose(co.sigma_B, sigma[0])
    assert np.allclose(co.sigma_R, lonwf.face_values(sigma, mesh.widths)[0])
    assert np.allclose(co.eta, 0.0, atol=1e-12 * sigma.max())
    assert np.allclose(co.f, (f[0] * mom.E_corner[0]).mean(-1) / mom.E_cell[0])


def test_zero_flux_fallback():
    mesh = build_uniform_mesh(1.0, 2)
    E = np.ones((2, 2, 2))
    mom = lonwf.GroupMoments(E, 0 * E, E.mean(-1), 0 * E.mean(-1), np.ones((2, 3)), np.zeros((2, 3)))
    z = np.zeros(2)
    fac = ClosureFactors(*(np.ones((2, 2, 2)),) * 7, z, z, z, z)
    sigma = np.array([[1.0, 2.0], [3.0, 4.0]])
    co = assemble_grey(mom, sigma, np.ones((2, 2)), np.full((2, 2, 2), 1 / 3), 0 * sigma, mesh, fac)
    assert np.all(co.eta == 0.0)
    assert np.allclose(co.sigma_R, lonwf.face_values(co.sigma_E, mesh.widths))


def test_grey_balance_consistent_with_transport():
    """The grey energy balance evaluated at the summed transport moments
    vanishes (cell balance of the corner-balance scheme)."""
    pb = small_problem(groups=8)
    T, sigma, planck, dsig, dpl, psi_prev, psi = random_transport_state(pb, 11)
    fac = transport.compute_closure_factors(psi, pb.quad, pb.bc)
    hp, hm = _halves(psi, pb.quad)
    mom = assemble_group_EF(hp, hm, fac, pb.inflow)
    co = assemble_grey(mom, sigma, planck, fac.f, dsig, pb.mesh, fac, dpl)
    E_prev = transport.group_moments_from_intensity(psi_prev, pb.quad)[0].mean(-1).sum(0)
    c, a, h, dt = C_LIGHT, pb.units.a_r, pb.mesh.widths, pb.time.dt
    absorb = c * (co.sigma_E * co.E - co.sigma_B * a * T**4)
    res = h * (co.E - E_prev) / dt + co.F[1:] - co.F[:-1] + h * absorb
    scale = h * (np.abs(co.E) / dt + c * co.sigma_E * co.E) + np.abs(co.F[1:]) + np.abs(co.F[:-1])
    assert np.all(np.abs(res) <= 1e-12 * scale)
    # emission derivative sums to d/dT of c sigma_B a T^4
    eps = 1e-6 * T
    s_up, b_up = pb.material(T + eps)
    s_dn, b_dn = pb.material(T - eps)
    fd = ((2 * s_up * b_up).sum(0) - (2 * s_dn * b_dn).sum(0)) / (2 * eps)
    assert np.allclose(co.d_emission, fd, rtol=1e-5)
