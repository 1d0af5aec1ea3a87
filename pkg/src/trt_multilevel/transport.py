"""High-order multigroup transport: backward-Euler simple corner balance
sweeps and extraction of the low-order closure factors.

Intensities are stored as ``psi[g, m, i, k]``: group, direction, cell and
corner (k = 0 left, k = 1 right).  All sweeps are vectorized over groups and
over the directions of one half-range.
"""

from dataclasses import dataclass

import numpy as np

from .physics import C_LIGHT, DomainError

SQRT3 = np.sqrt(3.0)
GAMMA = 1.0 / (1.0 + 0.5 * SQRT3)

PRESCRIBED = "prescribed"
VACUUM = "vacuum"
REFLECTIVE = "reflective"
BOUNDARY_KINDS = (PRESCRIBED, VACUUM, REFLECTIVE)

_DEGENERATE = 1e-30
_REFLECT_TOL = 1e-14
_REFLECT_MAXIT = 10000


def angular_weight(mu):
    """w(mu) = gamma (1 + sqrt(3)|mu|); integrates to one over a half-range."""
    return GAMMA * (1.0 + SQRT3 * np.abs(mu))


@dataclass(frozen=True)
class TransportBoundary:
    """Boundary data for both slab faces.

    ``inflow_left`` holds the intensity entering at x = 0 (mu > 0) and
    ``inflow_right`` the intensity entering at x = X (mu < 0).  Either is a
    per-group array (isotropic inflow) or a (G, n_half) array ordered like
    the incoming half of the quadrature.
    """

    left: str = VACUUM
    right: str = VACUUM
    inflow_left: np.ndarray = None
    inflow_right: np.ndarray = None

    def __post_init__(self):
        for side in (self.left, self.right):
            if side not in BOUNDARY_KINDS:
                raise DomainError(f"unknown boundary kind {side!r}")
        for kind, val in ((self.left, self.inflow_left), (self.right, self.inflow_right)):
            if kind == PRESCRIBED:
                if val is None or np.any(np.asarray(val) < 0):
                    raise DomainError("prescribed inflow must be given and nonnegative")

    def incoming(self, side, n_groups, n_half):
        """Inflow intensities (G, n_half) for ``side`` in {0, 1}; None if reflective."""
        kind = (self.left, self.right)[side]
        if kind == REFLECTIVE:
            return None
        if kind == VACUUM:
            return np.zeros((n_groups, n_half))
        val = np.asarray((self.inflow_left, self.inflow_right)[side], dtype=float)
        if val.ndim == 1:
            val = np.repeat(val[:, None], n_half, axis=1)
        return val

    @property
    def closed(self):
        return self.left == REFLECTIVE and self.right == REFLECTIVE


def _sweep_half(sig_t, src, mu_abs, inflow, widths, reverse):
    """Sweep one half-range of directions through the mesh.

    sig_t: (G, N) removal; src: (G, n, N, 2) corner sources; inflow: (G, n).
    Returns (G, n, N, 2).
    """
    G, n, N, _ = src.shape
    out = np.empty_like(src)
    up, dn = (1, 0) if reverse else (0, 1)
    a = 0.5 * mu_abs
    cells = range(N - 1, -1, -1) if reverse else range(N)
    for i in cells:
        h = widths[i]
        ab = a + 0.5 * h * sig_t[:, i, None]
        det = ab * ab + a * a
        rhs_up = 0.5 * h * src[:, :, i, up] + mu_abs * inflow
        rhs_dn = 0.5 * h * src[:, :, i, dn]
        out[:, :, i, up] = (ab * rhs_up - a * rhs_dn) / det
        out[:, :, i, dn] = (ab * rhs_dn + a * rhs_up) / det
        inflow = out[:, :, i, dn]
    return out


def sweep(sigma, emission, psi_prev, dt, mesh, quad, bc, c=C_LIGHT):
    """Backward-Euler SCB solve of the multigroup transport equation.

    ``sigma`` and ``emission`` (= sigma_g B_g) are (G, N) cell arrays and
    ``psi_prev`` the previous-time intensity (ignored when dt is infinite).
    """
    sigma = np.asarray(sigma, dtype=float)
    G, N = sigma.shape
    M, n = quad.mu.size, quad.n_half
    inv_cdt = 0.0 if np.isinf(dt) else 1.0 / (c * dt)
    # zero removal (steady free streaming) still gives a regular corner system
    if dt <= 0 or np.any(sigma + inv_cdt < 0):
        raise DomainError("negative effective removal in sweep")
    sig_t = sigma + inv_cdt
    src = np.broadcast_to(np.asarray(emission, float)[:, None, :, None], (G, M, N, 2))
    if inv_cdt > 0:
        src = src + inv_cdt * psi_prev

    psi = np.zeros((G, M, N, 2)) if psi_prev is None else np.array(psi_prev, dtype=float)
    widths = mesh.widths
    mu_pos = quad.mu[quad.pos]
    mu_neg = np.abs(quad.mu[quad.neg])
    left_in = bc.incoming(0, G, n)
    right_in = bc.incoming(1, G, n)

    def do_pos():
        inflow = left_in if left_in is not None else psi[:, quad.neg, 0, 0][:, ::-1]
        psi[:, quad.pos] = _sweep_half(sig_t, src[:, quad.pos], mu_pos, inflow, widths, False)

    def do_neg():
        inflow = right_in if right_in is not None else psi[:, quad.pos, N - 1, 1][:, ::-1]
        psi[:, quad.neg] = _sweep_half(sig_t, src[:, quad.neg], mu_neg, inflow, widths, True)

    if bc.left == REFLECTIVE and bc.right != REFLECTIVE:
        do_neg()
        do_pos()
        return psi
    do_pos()
    do_neg()
    if not bc.closed:
        return psi
    for _ in range(_REFLECT_MAXIT):
        before = psi[:, quad.neg, 0, 0].copy()
        do_pos()
        do_neg()
        after = psi[:, quad.neg, 0, 0]
        if np.max(np.abs(after - before)) <= _REFLECT_TOL * max(np.max(np.abs(after)), 1e-300):
            return psi
    raise RuntimeError("reflective boundary iteration did not converge")


def sweep_group(g, sigma, emission, psi_prev, dt, mesh, quad, bc, c=C_LIGHT):
    """Single-group view of :func:`sweep`; returns psi[m, i, k] for group g."""
    sl = slice(g, g + 1)
    sub_bc = TransportBoundary(
        bc.left,
        bc.right,
        None if bc.inflow_left is None else np.asarray(bc.inflow_left)[sl],
        None if bc.inflow_right is None else np.asarray(bc.inflow_right)[sl],
    )
    prev = None if psi_prev is None else np.asarray(psi_prev)[sl]
    return sweep(np.asarray(sigma)[sl], np.asarray(emission)[sl], prev, dt, mesh, quad, sub_bc, c)[0]


@dataclass
class ClosureFactors:
    """Corner-resolved closure factors, each (G, N, 2), plus boundary data.

    Boundary arrays are indexed [left, right]:  E_in/F_in are the grey
    moments of the prescribed inflow alone, E_ho/F_ho the full grey moments
    of the high-order solution at the boundary face.
    """

    K_plus: np.ndarray
    K_minus: np.ndarray
    H_plus: np.ndarray
    H_minus: np.ndarray
    G_plus: np.ndarray
    G_minus: np.ndarray
    f: np.ndarray
    E_in: np.ndarray
    F_in: np.ndarray
    E_ho: np.ndarray
    F_ho: np.ndarray
    n_degenerate: int = 0
    n_clipped: int = 0


def isotropic_factors(quad):
    """Factor values of a direction-independent intensity on ``quad``."""
    w, mu = quad.weights, quad.mu
    pw, pm = w[quad.pos], mu[quad.pos]
    half = pw.sum()
    K = np.sum(pw * angular_weight(pm)) / half
    H = np.sum(pw * pm * angular_weight(pm)) / half
    G = np.sum(pw * pm) / half
    f = np.sum(w * mu**2) / np.sum(w)
    return K, H, G, f


def _half_ratios(psi, w, mu, scale):
    # psi: (G, n, N, 2) on one half-range
    wb = w[None, :, None, None]
    mb = mu[None, :, None, None]
    den = np.sum(wb * psi, axis=1)
    wt = angular_weight(mb)
    k = np.sum(wb * wt * psi, axis=1)
    h = np.sum(wb * np.abs(mb) * wt * psi, axis=1)
    g = np.sum(wb * mb * psi, axis=1)
    bad = den <= _DEGENERATE * scale
    safe = np.where(bad, 1.0, den)
    return k / safe, h / safe, g / safe, bad


def compute_closure_factors(psi, quad, bc, c=C_LIGHT, clip=False):
    """K, H, G (per half-range) and the Eddington factor f at every corner."""
    psi = np.asarray(psi, dtype=float)
    n_clipped = 0
    if clip:
        neg = psi < 0
        n_clipped = int(np.count_nonzero(neg))
        psi = np.where(neg, 0.0, psi)
    scale = max(float(np.max(np.abs(psi))), 1e-300)
    w, mu = quad.weights, quad.mu
    K0, H0, G0, f0 = isotropic_factors(quad)

    Kp, Hp, Gp, badp = _half_ratios(psi[:, quad.pos], w[quad.pos], mu[quad.pos], scale)
    Km, Hm, Gm, badm = _half_ratios(psi[:, quad.neg], w[quad.neg], mu[quad.neg], scale)
    Kp, Hp, Gp = (np.where(badp, v, x) for v, x in ((K0, Kp), (H0, Hp), (G0, Gp)))
    Km, Hm, Gm = (np.where(badm, v, x) for v, x in ((K0, Km), (H0, Hm), (-G0, Gm)))

    wb = w[None, :, None, None]
    den = np.sum(wb * psi, axis=1)
    bad = den <= _DEGENERATE * scale
    f = np.where(bad, f0, np.sum(wb * quad.mu[None, :, None, None] ** 2 * psi, axis=1) / np.where(bad, 1.0, den))

    E_in, F_in, E_ho, F_ho = boundary_moments(psi, quad, bc, c)
    n_deg = int(np.count_nonzero(badp) + np.count_nonzero(badm))
    return ClosureFactors(Kp, Km, Hp, Hm, Gp, Gm, f, E_in, F_in, E_ho, F_ho, n_deg, n_clipped)


def _face_intensity(psi, quad, bc, side):
    """Angular intensity (G, M) on a boundary face, incoming part from bc."""
    G, M, N, _ = psi.shape
    n = quad.n_half
    face = np.empty((G, M))
    if side == 0:
        face[:, quad.neg] = psi[:, quad.neg, 0, 0]
        inc = bc.incoming(0, G, n)
        face[:, quad.pos] = face[:, quad.neg][:, ::-1] if inc is None else inc
    else:
        face[:, quad.pos] = psi[:, quad.pos, N - 1, 1]
        inc = bc.incoming(1, G, n)
        face[:, quad.neg] = face[:, quad.pos][:, ::-1] if inc is None else inc
    return face


def boundary_moments(psi, quad, bc, c=C_LIGHT):
    """Grey (E_in, F_in, E_ho, F_ho), each indexed [left, right]."""
    w, mu = quad.weights, quad.mu
    E_in, F_in, E_ho, F_ho = (np.zeros(2) for _ in range(4))
    for side, inc_dirs in ((0, quad.pos), (1, quad.neg)):
        face = _face_intensity(psi, quad, bc, side)
        E_ho[side] = np.sum(face @ w) / c
        F_ho[side] = np.sum(face @ (w * mu))
        E_in[side] = np.sum(face[:, inc_dirs] @ w[inc_dirs]) / c
        F_in[side] = np.sum(face[:, inc_dirs] @ (w * mu)[inc_dirs])
    return E_in, F_in, E_ho, F_ho


def inflow_half_moments(bc, quad, n_groups):
    """Partial moments of the prescribed inflow for the low-order sweeps.

    Returns per side a tuple (phi, H*phi, G*phi) of (G,) arrays, or None for
    a reflective side.
    """
    out = []
    for side, dirs in ((0, quad.pos), (1, quad.neg)):
        inc = bc.incoming(side, n_groups, quad.n_half)
        if inc is None:
            out.append(None)
            continue
        w, mu = quad.weights[dirs], quad.mu[dirs]
        phi = inc @ w
        hphi = inc @ (w * np.abs(mu) * angular_weight(mu))
        gphi = inc @ (w * mu)
        out.append((phi, hphi, gphi))
    return out


def group_moments_from_intensity(psi, quad, c=C_LIGHT):
    """Corner values of E_g = (1/c) sum w psi and F_g = sum w mu psi, (G, N, 2)."""
    wb = quad.weights[None, :, None, None]
    E = np.sum(wb * psi, axis=1) / c
    F = np.sum(wb * quad.mu[None, :, None, None] * psi, axis=1)
    return E, F


def weighted_half_moments(psi, quad):
    """(K phi)^+ and (K phi)^- at every corner: half-range sums of w(mu) psi."""
    w, mu = quad.weights, quad.mu
    kp = np.einsum("m,gmik->gik", w[quad.pos] * angular_weight(mu[quad.pos]), psi[:, quad.pos])
    km = np.einsum("m,gmik->gik", w[quad.neg] * angular_weight(mu[quad.neg]), psi[:, quad.neg])
    return kp, km
