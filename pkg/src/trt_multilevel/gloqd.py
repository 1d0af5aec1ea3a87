"""Effective grey quasidiffusion equations coupled to the material energy
balance, discretized by a staggered finite-volume scheme.

Unknowns: E at cell centers, F at faces, plus E on the two boundary faces
(closed by half-cell momentum equations and the boundary conditions).  In
the interleaved ordering [E_b0, F_0, E_0, F_1, ..., E_{N-1}, F_N, E_bN] the
system is tridiagonal once T has been eliminated cell by cell.

The finite-volume momentum rows are not an exact image of the corner-balance
transport moments on coarse, optically thick cells.  A per-face consistency
correction, recomputed from the current low-order moments every cycle and
folded into the compensation coefficient, removes that mismatch so the grey
solution coincides with the summed group moments at a converged iterate.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .physics import DEFAULT_UNITS
from .transport import REFLECTIVE

T_FLOOR = 1e-6
_DEGENERATE = 1e-30


@dataclass
class GreySystemState:
    E: np.ndarray
    F: np.ndarray
    T: np.ndarray
    E_bnd: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def copy(self):
        return GreySystemState(self.E.copy(), self.F.copy(), self.T.copy(), self.E_bnd.copy())


@dataclass
class GreySolveInfo:
    clamped: np.ndarray
    balance: float


def boundary_factor(side, coeffs, c):
    """C_b = (F_HO - F_in) / (c (E_HO - E_in)): the outgoing half-range ratio."""
    dE = coeffs.E_ho[side] - coeffs.E_in[side]
    if abs(dE) <= _DEGENERATE * max(abs(coeffs.E_ho[side]), 1e-300):
        return -0.5 if side == 0 else 0.5
    return (coeffs.F_ho[side] - coeffs.F_in[side]) / (c * dE)


def grey_boundary_condition(side, coeffs, kind, units=DEFAULT_UNITS):
    """Boundary relation alpha E + beta F = delta on face ``side`` (0 left, 1 right)."""
    if kind == REFLECTIVE:
        return 0.0, 1.0, 0.0
    c = units.c
    cb = boundary_factor(side, coeffs, c)
    return -c * cb, 1.0, coeffs.F_in[side] - c * cb * coeffs.E_in[side]


def _meb_elimination(coeffs, T_prev, T_lin, E_lin, dt, cv, units):
    """Linearized emission-absorption term Q = q0 + q1 E and T = t0 + t1 E.

    Q = c [sigma_E E + dsigma_E E_lin (T - T_lin)] - [W + W' (T - T_lin)]
    with W = c sigma_B a T_lin^4 and cv (T - T_prev)/dt = Q.  W' is
    ``coeffs.d_emission`` when present, else 4 c sigma_B a T_lin^3.
    """
    c, a = units.c, units.a_r
    sE, sB, dsE = coeffs.sigma_E, coeffs.sigma_B, coeffs.dsigma_E
    W = c * sB * a * T_lin**4
    dW = coeffs.d_emission if coeffs.d_emission is not None else 4.0 * W / T_lin
    kappa = c * dsE * E_lin - dW
    rho = (dW - c * dsE * E_lin) * T_lin - W
    m = cv / dt
    D = m - kappa
    if np.any(D <= 0):
        raise RuntimeError("nonpositive MEB elimination coefficient")
    t0 = (m * T_prev + rho) / D
    t1 = c * sE / D
    q0 = m * (t0 - T_prev)
    q1 = m * t1
    return q0, q1, t0, t1


def _face_energy(E, E_bnd):
    """E as it enters the compensation term of each momentum row."""
    return np.concatenate(([E_bnd[0]], 0.5 * (E[:-1] + E[1:]), [E_bnd[1]]))


def _apply_banded(ab, x):
    y = ab[1] * x
    y[:-1] += ab[0, 1:] * x[1:]
    y[1:] += ab[2, :-1] * x[:-1]
    return y


def consistency_term(coeffs, prev, dt, mesh, kinds, units=DEFAULT_UNITS):
    """Per-face correction rho such that the momentum rows, with eta + rho in
    place of eta, hold exactly for the spectrum-summed low-order moments
    carried by ``coeffs`` (E, F, E_face)."""
    N = mesh.n_cells
    zero = np.zeros(N)
    ab, rhs = assemble_system(coeffs, prev, zero, zero, dt, mesh, kinds, units)
    x = np.empty(2 * N + 3)
    x[0], x[-1] = coeffs.E_face[0], coeffs.E_face[-1]
    x[1::2] = coeffs.F
    x[2:-1:2] = coeffs.E
    res = (_apply_banded(ab, x) - rhs)[1::2]
    return -res / _face_energy(coeffs.E, coeffs.E_face[[0, -1]])


def solve_gloqd_meb(coeffs, prev, T_lin, E_lin, dt, mesh, cv, kinds, units=DEFAULT_UNITS, consistent=True):
    """One Newton-linearized backward-Euler solve of the grey system + MEB.

    ``prev`` is the previous-time GreySystemState, ``T_lin``/``E_lin`` the
    current inner iterate.  ``kinds`` gives the boundary kinds (left, right).
    With ``consistent`` the momentum rows carry the discrete consistency
    term, so the grey solution reproduces the low-order moments at a fixed
    point.  Returns the new GreySystemState and a GreySolveInfo.
    """
    h = mesh.widths
    q0, q1, t0, t1 = _meb_elimination(coeffs, prev.T, T_lin, E_lin, dt, cv, units)
    rho = consistency_term(coeffs, prev, dt, mesh, kinds, units) if consistent else None
    ab, rhs = assemble_system(coeffs, prev, q0, q1, dt, mesh, kinds, units, rho)
    x = solve_banded((1, 1), ab, rhs)
    if not np.all(np.isfinite(x)):
        raise RuntimeError("singular grey low-order system")
    E = x[2:-1:2].copy()
    F = x[1::2].copy()
    E_bnd = np.array([x[0], x[-1]])
    T = t0 + t1 * E
    clamped = T < T_FLOOR
    if np.any(clamped):
        T = np.where(clamped, T_FLOOR, T)

    eps_change = cv * (T - prev.T)
    balance = float(np.sum(h * (eps_change + E - prev.E)) / dt + F[-1] - F[0])
    return GreySystemState(E, F, T, E_bnd), GreySolveInfo(clamped, balance)


def assemble_system(coeffs, prev, q0, q1, dt, mesh, kinds, units=DEFAULT_UNITS, rho=None):
    """Banded matrix (solve_banded layout) and right-hand side of the grey
    system with the linearized emission term Q = q0 + q1 E.  ``rho`` is an
    optional face correction added to the compensation term."""
    c = units.c
    h = mesh.widths
    N = h.size
    n = 2 * N + 3
    ab = np.zeros((3, n))  # solve_banded layout: ab[1 + i - j, j] = A[i, j]

    def put(i, j, v):
        ab[1 + i - j, j] += v

    rhs = np.zeros(n)
    iE = lambda i: 2 * i + 2
    iF = lambda j: 2 * j + 1
    tF = 1.0 / (c * dt) + coeffs.sigma_R
    f, fb, eta = coeffs.f, coeffs.f_bnd, coeffs.eta
    if rho is not None:
        eta = eta + rho

    # boundary conditions
    al, bl, dl = grey_boundary_condition(0, coeffs, kinds[0], units)
    ar, br, dr = grey_boundary_condition(1, coeffs, kinds[1], units)
    put(0, 0, al); put(0, 1, bl); rhs[0] = dl
    put(n - 1, n - 1, ar); put(n - 1, n - 2, br); rhs[n - 1] = dr

    # half-cell momentum equations on the boundary faces
    r = 1
    put(r, 1, tF[0]); put(r, 0, -c * fb[0] / (0.5 * h[0]) + eta[0]); put(r, 2, c * f[0] / (0.5 * h[0]))
    rhs[r] = prev.F[0] / (c * dt)
    r = n - 2
    put(r, r, tF[N]); put(r, n - 1, c * fb[1] / (0.5 * h[-1]) + eta[N]); put(r, r - 1, -c * f[-1] / (0.5 * h[-1]))
    rhs[r] = prev.F[N] / (c * dt)

    # interior momentum equations
    for j in range(1, N):
        r = iF(j)
        hf = 0.5 * (h[j - 1] + h[j])
        put(r, r, tF[j])
        put(r, iE(j - 1), -c * f[j - 1] / hf + 0.5 * eta[j])
        put(r, iE(j), c * f[j] / hf + 0.5 * eta[j])
        rhs[r] = prev.F[j] / (c * dt)

    # energy balance with T eliminated
    for i in range(N):
        r = iE(i)
        put(r, r, h[i] * (1.0 / dt + q1[i]))
        put(r, iF(i + 1), 1.0)
        put(r, iF(i), -1.0)
        rhs[r] = h[i] * (prev.E[i] / dt - q0[i])
    return ab, rhs


def total_energy_balance(state, prev, dt, mesh, cv):
    """Discrete residual sum h (eps - eps_prev + E - E_prev)/dt + F_N - F_0."""
    h = mesh.widths
    return float(np.sum(h * (cv * (state.T - prev.T) + state.E - prev.E)) / dt + state.F[-1] - state.F[0])


def meb_residual(T, E, T_prev, dt, cv, sigma_E, sigma_B, units=DEFAULT_UNITS):
    """Backward-Euler residual of cv dT/dt = c (sigma_E E - sigma_B a T^4).

    ``sigma_E`` and ``sigma_B`` must be evaluated at ``T`` by the caller.
    """
    c, a = units.c, units.a_r
    return cv * (T - T_prev) / dt - c * (sigma_E * E - sigma_B * a * T**4)
