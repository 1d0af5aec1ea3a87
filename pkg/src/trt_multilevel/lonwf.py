"""Multigroup low-order weighted-flux (LONWF) equations.

Each group and half-range is a Cauchy problem in space, discretized with
lumped linear discontinuous elements (two corner unknowns per cell) and
backward Euler in time.  The sweep unknown is u = H phi, which makes the
cell system identical in form to the corner-balance transport sweep.
"""

from dataclasses import dataclass

import numpy as np

from .physics import C_LIGHT, DomainError

_ZERO_FLUX = 1e-30
_REFLECT_TOL = 1e-14
_REFLECT_MAXIT = 10000


def _lld_sweep(r, s, u_in, widths, reverse):
    """Corner system (1 + h r_up) u_up + u_dn = h s_up + 2 u_in,
    -u_up + (1 + h r_dn) u_dn = h s_dn, swept cell by cell.

    r, s: (G, N, 2).  Returns u (G, N, 2).
    """
    G, N, _ = r.shape
    u = np.empty((G, N, 2))
    up, dn = (1, 0) if reverse else (0, 1)
    cells = range(N - 1, -1, -1) if reverse else range(N)
    for i in cells:
        h = widths[i]
        A = 1.0 + h * r[:, i, up]
        B = 1.0 + h * r[:, i, dn]
        rhs_up = h * s[:, i, up] + 2.0 * u_in
        rhs_dn = h * s[:, i, dn]
        det = A * B + 1.0
        u[:, i, up] = (rhs_up * B - rhs_dn) / det
        u[:, i, dn] = (A * rhs_dn + rhs_up) / det
        u_in = u[:, i, dn]
    return u


def solve_lonwf(factors, sigma, emission, prev_plus, prev_minus, dt, mesh, inflow, c=C_LIGHT):
    """Solve the LONWF equations of every group for (phi^+, phi^-).

    ``emission`` is sigma_g B_g per cell, ``prev_plus``/``prev_minus`` are the
    stored products (K phi)^{j-1} at corners and ``inflow`` is the per-side
    output of :func:`transport.inflow_half_moments` (None = reflective).
    """
    sigma = np.asarray(sigma, dtype=float)
    G, N = sigma.shape
    inv_cdt = 0.0 if np.isinf(dt) else 1.0 / (c * dt)
    removal = (sigma + inv_cdt)[:, :, None]
    if np.any(removal < 0):
        raise DomainError("negative removal in LONWF sweep")
    em = np.asarray(emission, float)[:, :, None]
    widths = mesh.widths

    Kp, Hp, Km, Hm = factors.K_plus, factors.H_plus, factors.K_minus, factors.H_minus
    r_p, r_m = Kp * removal / Hp, Km * removal / Hm
    s_p = em + inv_cdt * prev_plus if inv_cdt else np.broadcast_to(em, (G, N, 2))
    s_m = em + inv_cdt * prev_minus if inv_cdt else np.broadcast_to(em, (G, N, 2))

    left, right = inflow
    u_m = np.zeros((G, N, 2))

    def do_plus():
        u_in = left[1] if left is not None else u_m[:, 0, 0]
        return _lld_sweep(r_p, s_p, u_in, widths, False)

    def do_minus(u_p):
        u_in = right[1] if right is not None else u_p[:, N - 1, 1]
        return _lld_sweep(r_m, s_m, u_in, widths, True)

    if left is None and right is not None:
        u_m = do_minus(None)
        u_p = do_plus()
    else:
        u_p = do_plus()
        u_m = do_minus(u_p)
        if left is None:
            for _ in range(_REFLECT_MAXIT):
                before = u_m[:, 0, 0].copy()
                u_p = do_plus()
                u_m = do_minus(u_p)
                if np.max(np.abs(u_m[:, 0, 0] - before)) <= _REFLECT_TOL * max(np.max(np.abs(u_m)), 1e-300):
                    break
            else:
                raise RuntimeError("reflective LONWF iteration did not converge")
    return u_p / Hp, u_m / Hm


def solve_group_lonwf(g, factors, sigma, emission, prev_plus, prev_minus, dt, mesh, inflow, c=C_LIGHT):
    """Single-group view of :func:`solve_lonwf`; returns (phi^+, phi^-) of shape (N, 2)."""
    sl = slice(g, g + 1)
    sub = _slice_factors(factors, sl)
    sub_inflow = [None if side is None else tuple(a[sl] for a in side) for side in inflow]
    phi_p, phi_m = solve_lonwf(
        sub, np.asarray(sigma)[sl], np.asarray(emission)[sl],
        np.asarray(prev_plus)[sl], np.asarray(prev_minus)[sl], dt, mesh, sub_inflow, c,
    )
    return phi_p[0], phi_m[0]


def _slice_factors(factors, sl):
    from .transport import ClosureFactors

    return ClosureFactors(
        factors.K_plus[sl], factors.K_minus[sl], factors.H_plus[sl], factors.H_minus[sl],
        factors.G_plus[sl], factors.G_minus[sl], factors.f[sl],
        factors.E_in, factors.F_in, factors.E_ho, factors.F_ho,
    )


@dataclass
class GroupMoments:
    """Group energy densities and fluxes reconstructed from (phi^+, phi^-).

    Corner arrays are (G, N, 2), cell arrays (G, N) and face arrays (G, N+1);
    face values come from the upwind corner of each half-range.
    """

    E_corner: np.ndarray
    F_corner: np.ndarray
    E_cell: np.ndarray
    F_cell: np.ndarray
    E_face: np.ndarray
    F_face: np.ndarray


def assemble_group_EF(phi_plus, phi_minus, factors, inflow, c=C_LIGHT):
    Gp, Gm = factors.G_plus, factors.G_minus
    E_corner = (phi_plus + phi_minus) / c
    F_corner = Gm * phi_minus + Gp * phi_plus
    G, N, _ = phi_plus.shape

    # per-face partial moments of each half-range, from the upwind side
    phi_p_face = np.empty((G, N + 1))
    gphi_p_face = np.empty((G, N + 1))
    phi_m_face = np.empty((G, N + 1))
    gphi_m_face = np.empty((G, N + 1))
    phi_p_face[:, 1:] = phi_plus[:, :, 1]
    gphi_p_face[:, 1:] = (Gp * phi_plus)[:, :, 1]
    phi_m_face[:, :-1] = phi_minus[:, :, 0]
    gphi_m_face[:, :-1] = (Gm * phi_minus)[:, :, 0]
    left, right = inflow
    if left is None:
        phi_p_face[:, 0] = phi_m_face[:, 0]
        gphi_p_face[:, 0] = -gphi_m_face[:, 0]
    else:
        phi_p_face[:, 0], gphi_p_face[:, 0] = left[0], left[2]
    if right is None:
        phi_m_face[:, N] = phi_p_face[:, N]
        gphi_m_face[:, N] = -gphi_p_face[:, N]
    else:
        phi_m_face[:, N], gphi_m_face[:, N] = right[0], right[2]

    return GroupMoments(
        E_corner=E_corner,
        F_corner=F_corner,
        E_cell=E_corner.mean(axis=-1),
        F_cell=F_corner.mean(axis=-1),
        E_face=(phi_p_face + phi_m_face) / c,
        F_face=gphi_p_face + gphi_m_face,
    )


@dataclass
class GreyCoefficients:
    """Spectrum-averaged coefficients of the grey low-order system.

    Cell arrays (N,): sigma_E, sigma_B, f, dsigma_E, E and ``d_emission``,
    the temperature derivative of the emission rate c sigma_B a T^4 (None
    when only the a T^4 factor is to be linearized).  Face arrays (N+1,):
    sigma_R, eta, F, E_face.  ``f_bnd`` holds the Eddington factor at the
    boundary corners and the remaining fields the grey boundary moments of
    the latest transport solve, indexed [left, right].
    """

    sigma_E: np.ndarray
    sigma_B: np.ndarray
    f: np.ndarray
    dsigma_E: np.ndarray
    sigma_R: np.ndarray
    eta: np.ndarray
    f_bnd: np.ndarray
    E: np.ndarray
    F: np.ndarray
    E_face: np.ndarray
    E_in: np.ndarray
    F_in: np.ndarray
    E_ho: np.ndarray
    F_ho: np.ndarray
    d_emission: np.ndarray = None


def face_values(cell, widths):
    """Width-weighted face averages of a (..., N) cell array -> (..., N+1)."""
    out = np.empty(cell.shape[:-1] + (cell.shape[-1] + 1,))
    out[..., 0] = cell[..., 0]
    out[..., -1] = cell[..., -1]
    hl, hr = widths[:-1], widths[1:]
    out[..., 1:-1] = (hl * cell[..., :-1] + hr * cell[..., 1:]) / (hl + hr)
    return out


def assemble_grey(moments, sigma, planck, f, dsigma, mesh, factors, dplanck=None):
    """Grey absorption coefficients, Eddington factor, compensation term and
    Frechet derivative of sigma_E from the group spectrum.  With ``dplanck``
    the emission derivative sum_g 2 (sigma_g' B_g + sigma_g B_g') is added.

    All group sums run in ascending group order.
    """
    E_g = moments.E_cell
    E = E_g.sum(axis=0)
    if np.any(E <= 0):
        raise RuntimeError("nonpositive total radiation energy in grey assembly")
    sigma_E = (sigma * E_g).sum(axis=0) / E
    B_tot = planck.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        sigma_B = np.where(B_tot > 0, (sigma * planck).sum(axis=0) / B_tot, sigma_E)
    fE_cell = (f * moments.E_corner).mean(axis=-1)
    f_bar = fE_cell.sum(axis=0) / E
    dsigma_E = (dsigma * E_g).sum(axis=0) / E

    widths = mesh.widths
    sig_face = face_values(sigma, widths)
    F_g = moments.F_face
    E_g_face = np.empty_like(F_g)
    E_g_face[:, 1:-1] = 0.5 * (E_g[:, :-1] + E_g[:, 1:])
    E_g_face[:, 0] = moments.E_face[:, 0]
    E_g_face[:, -1] = moments.E_face[:, -1]
    E_face = E_g_face.sum(axis=0)
    F = F_g.sum(axis=0)
    absF = np.abs(F_g).sum(axis=0)
    flat = absF <= _ZERO_FLUX * C_LIGHT * E_face
    safe = np.where(flat, 1.0, absF)
    sigma_R = (sig_face * np.abs(F_g)).sum(axis=0) / safe
    eta = ((sig_face - sigma_R) * F_g).sum(axis=0) / E_face
    if np.any(flat):
        sigma_R = np.where(flat, face_values(sigma_E, widths), sigma_R)
        eta = np.where(flat, 0.0, eta)

    Ec = moments.E_corner
    f_bnd = np.array([
        (f[:, 0, 0] * Ec[:, 0, 0]).sum() / Ec[:, 0, 0].sum(),
        (f[:, -1, 1] * Ec[:, -1, 1]).sum() / Ec[:, -1, 1].sum(),
    ])
    d_emission = None
    if dplanck is not None:
        d_emission = 2.0 * (dsigma * planck + sigma * dplanck).sum(axis=0)
    return GreyCoefficients(
        sigma_E, sigma_B, f_bar, dsigma_E, sigma_R, eta, f_bnd, E, F, E_face,
        factors.E_in, factors.F_in, factors.E_ho, factors.F_ho, d_emission,
    )
