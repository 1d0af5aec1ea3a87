"""Time stepping with the multilevel iteration: outer transport iterations
and inner two-grid V-cycles (multigroup LONWF on the fine photon-energy grid,
grey quasidiffusion + MEB on the one-group grid).  Also holds the
temperature-lagged reference solver used as a verification oracle.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import gloqd, lonwf, transport
from .config import RunConfig
from .phase_space import (
    TimeGrid,
    build_double_gauss,
    build_fc_energy_grid,
    build_uniform_mesh,
)
from .physics import (
    ConstantOpacity,
    FleckCummingsOpacity,
    MaterialEOS,
    UnitSystem,
    group_opacity,
    group_opacity_dT,
    group_planckian,
    group_planckian_dT,
)

log = logging.getLogger(__name__)

MAX_CLAMPED_CYCLES = 3


class NonConvergenceError(RuntimeError):
    pass


@dataclass
class Problem:
    """Discretized problem assembled from a RunConfig."""

    config: RunConfig
    units: UnitSystem
    mesh: object
    quad: object
    grid: object
    time: TimeGrid
    eos: MaterialEOS
    opacity: object
    bc: transport.TransportBoundary

    @classmethod
    def from_config(cls, cfg):
        cfg.validate()
        units = UnitSystem(cfg.speed_of_light, cfg.radiation_constant)
        grid = build_fc_energy_grid(cfg.groups, cfg.hnu_a, cfg.hnu_b, cfg.hnu_max)
        edges = grid.edges
        if cfg.opacity == "constant":
            opacity = ConstantOpacity(cfg.opacity_value)
        else:
            opacity = FleckCummingsOpacity()
        inflow = {}
        for side, kind, T_b in (("left", cfg.left_boundary, cfg.T_left), ("right", cfg.right_boundary, cfg.T_right)):
            inflow[side] = group_planckian(T_b, edges, units) if kind == transport.PRESCRIBED else None
        bc = transport.TransportBoundary(cfg.left_boundary, cfg.right_boundary, inflow["left"], inflow["right"])
        return cls(
            config=cfg,
            units=units,
            mesh=build_uniform_mesh(cfg.length, cfg.cells),
            quad=build_double_gauss(cfg.quadrature_half),
            grid=grid,
            time=TimeGrid(cfg.dt, cfg.t_end),
            eos=MaterialEOS(cfg.cv_coefficient * units.a_r * cfg.cv_temperature**3),
            opacity=opacity,
            bc=bc,
        )

    @property
    def kinds(self):
        return (self.bc.left, self.bc.right)

    @property
    def inflow(self):
        return transport.inflow_half_moments(self.bc, self.quad, self.grid.n_groups)

    def material(self, T, derivative=False):
        """(sigma_g, B_g[, dsigma_g/dT, dB_g/dT]) as (G, N) arrays at cell temperatures T."""
        edges = self.grid.edges
        sigma = group_opacity(T, edges, self.opacity).T
        planck = group_planckian(T, edges, self.units).T
        if derivative:
            return (
                sigma, planck,
                group_opacity_dT(T, edges, self.opacity).T,
                group_planckian_dT(T, edges, self.units).T,
            )
        return sigma, planck


@dataclass
class TimeStepState:
    t: float
    psi: np.ndarray
    factors: transport.ClosureFactors
    kphi_plus: np.ndarray
    kphi_minus: np.ndarray
    grey: gloqd.GreySystemState
    E_groups: np.ndarray = None


@dataclass
class IterationStats:
    transport_iterations: list = field(default_factory=list)
    cycles: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    clamp_events: int = 0

    @property
    def N_ti(self):
        return int(sum(self.transport_iterations))

    @property
    def N_c(self):
        return int(sum(self.cycles))


def relative_change(new, old):
    """max |new - old| / max |new| (pointwise L-infinity)."""
    scale = np.max(np.abs(new))
    return float(np.max(np.abs(new - old)) / scale) if scale > 0 else float(np.max(np.abs(new - old)))


def initial_state(problem, T0=None):
    """Equilibrium start: psi = B_g(T0) in every direction and corner."""
    N, G = problem.mesh.n_cells, problem.grid.n_groups
    if T0 is None:
        T0 = np.full(N, problem.config.T_initial)
    T0 = np.asarray(T0, dtype=float)
    _, planck = problem.material(T0)
    M = problem.quad.mu.size
    psi = np.repeat(np.repeat(planck[:, None, :, None], M, axis=1), 2, axis=3)
    return state_from_intensity(problem, psi, T0, t=0.0)


def state_from_intensity(problem, psi, T, t=0.0):
    quad, c = problem.quad, problem.units.c
    factors = transport.compute_closure_factors(psi, quad, problem.bc, c, problem.config.clip_negative)
    kp, km = transport.weighted_half_moments(psi, quad)
    phi_p = np.sum(quad.weights[quad.pos][None, :, None, None] * psi[:, quad.pos], axis=1)
    phi_m = np.sum(quad.weights[quad.neg][None, :, None, None] * psi[:, quad.neg], axis=1)
    mom = lonwf.assemble_group_EF(phi_p, phi_m, factors, problem.inflow, c)
    grey = gloqd.GreySystemState(
        E=mom.E_cell.sum(axis=0),
        F=mom.F_face.sum(axis=0),
        T=np.array(T, dtype=float),
        E_bnd=mom.E_face.sum(axis=0)[[0, -1]],
    )
    return TimeStepState(t, psi, factors, kp, km, grey, mom.E_cell)


def v_cycle(problem, prev, factors, T, E, dt, lmax, tol, stats=None, tag=(0, 0)):
    """Inner two-grid cycles at frozen closure factors.

    Each cycle solves the group LONWF equations at the current temperature,
    collapses the spectrum to grey coefficients and solves the coupled grey
    system + MEB for new (T, E, F).  Stops after ``lmax`` cycles or when
    both relative changes drop below ``tol``.
    """
    c = problem.units.c
    inflow = problem.inflow
    clamp_run = np.zeros_like(T, dtype=int)
    grey = None
    for ell in range(1, lmax + 1):
        sigma, planck, dsigma, dplanck = problem.material(T, derivative=True)
        phi_p, phi_m = lonwf.solve_lonwf(
            factors, sigma, sigma * planck, prev.kphi_plus, prev.kphi_minus,
            dt, problem.mesh, inflow, c,
        )
        mom = lonwf.assemble_group_EF(phi_p, phi_m, factors, inflow, c)
        coeffs = lonwf.assemble_grey(mom, sigma, planck, factors.f, dsigma, problem.mesh, factors, dplanck)
        grey, info = gloqd.solve_gloqd_meb(
            coeffs, prev.grey, T, E, dt, problem.mesh, problem.eos.cv, problem.kinds, problem.units,
        )
        if np.any(info.clamped):
            clamp_run = np.where(info.clamped, clamp_run + 1, 0)
            if stats is not None:
                stats.clamp_events += int(np.count_nonzero(info.clamped))
            log.warning("temperature clamped in %d cells", np.count_nonzero(info.clamped))
            if np.any(clamp_run > MAX_CLAMPED_CYCLES):
                raise NonConvergenceError("temperature clamping persisted")
        else:
            clamp_run[:] = 0
        dT = relative_change(grey.T, T)
        dE = relative_change(grey.E, E)
        if stats is not None:
            stats.residuals.append((tag[0], tag[1], ell, dT, dE))
        T, E = grey.T, grey.E
        if dT <= tol and dE <= tol:
            break
    return grey, (phi_p, phi_m, mom), ell


def advance_time_step(problem, state, stats=None, step=0):
    """One backward-Euler step of the multilevel method.

    Returns the new TimeStepState and (M_ti, M_c) for the step.
    """
    cfg = problem.config
    dt = problem.time.dt
    c = problem.units.c
    T = state.grey.T.copy()
    E = state.grey.E.copy()
    factors = state.factors
    psi = state.psi
    n_ti = n_c = 0
    s = 0
    while True:
        if s > 0:
            sigma, planck = problem.material(T)
            psi = transport.sweep(sigma, sigma * planck, state.psi, dt, problem.mesh, problem.quad, problem.bc, c)
            factors = transport.compute_closure_factors(psi, problem.quad, problem.bc, c, cfg.clip_negative)
            n_ti += 1
        grey, (phi_p, phi_m, mom), n_cyc = v_cycle(
            problem, state, factors, T, E, dt, cfg.lmax, cfg.epsilon_cycle, stats, (step, s),
        )
        n_c += n_cyc
        dT = relative_change(grey.T, T)
        dE = relative_change(grey.E, E)
        T, E = grey.T, grey.E
        # at least one transport sweep per step so the intensity is current
        if s > 0 and dT <= cfg.epsilon and dE <= cfg.epsilon:
            break
        s += 1
        if s > cfg.max_outer:
            raise NonConvergenceError(
                f"step {step}: no outer convergence after {cfg.max_outer} transport iterations "
                f"(dT={dT:.3e}, dE={dE:.3e})"
            )
    new = TimeStepState(
        t=state.t + dt,
        psi=psi,
        factors=factors,
        kphi_plus=factors.K_plus * phi_p,
        kphi_minus=factors.K_minus * phi_m,
        grey=grey,
        E_groups=mom.E_cell,
    )
    if stats is not None:
        stats.transport_iterations.append(n_ti)
        stats.cycles.append(n_c)
    return new, (n_ti, n_c)


@dataclass
class RunOutput:
    times: np.ndarray
    x: np.ndarray
    T: np.ndarray
    E: np.ndarray
    stats: IterationStats
    final: TimeStepState
    spectrum: np.ndarray = None
    transport_sweeps: int = 0


def run(config, T0=None, progress=None):
    """Integrate from t = 0 to t_end with the multilevel method."""
    problem = Problem.from_config(config)
    state = initial_state(problem, T0)
    stats = IterationStats()
    n = problem.time.n_steps
    T_hist = [state.grey.T.copy()]
    E_hist = [state.grey.E.copy()]
    spectra = [state.E_groups.copy()] if config.spectrum else None
    for j in range(1, n + 1):
        state, _ = advance_time_step(problem, state, stats, step=j)
        T_hist.append(state.grey.T.copy())
        E_hist.append(state.grey.E.copy())
        if spectra is not None:
            spectra.append(state.E_groups.copy())
        if progress is not None:
            progress(j, n, stats)
    return RunOutput(
        times=problem.time.times.copy(),
        x=problem.mesh.centers,
        T=np.array(T_hist),
        E=np.array(E_hist),
        stats=stats,
        final=state,
        spectrum=None if spectra is None else np.array(spectra),
        transport_sweeps=stats.N_ti,
    )


def _solve_multigroup_meb(problem, T_start, T_prev, E_g, dt, tol=1e-14, maxit=100):
    """Newton solve of cv (T - T_prev)/dt = sum_g sigma_g(T) (c E_g - 2 B_g(T)) per cell."""
    cv, c = problem.eos.cv, problem.units.c
    edges = problem.grid.edges
    T = T_start.copy()
    for _ in range(maxit):
        sigma = group_opacity(T, edges, problem.opacity).T
        dsig = group_opacity_dT(T, edges, problem.opacity).T
        planck = group_planckian(T, edges, problem.units).T
        dplanck = group_planckian_dT(T, edges, problem.units).T
        R = cv * (T - T_prev) / dt - np.sum(sigma * (c * E_g - 2.0 * planck), axis=0)
        dR = cv / dt - np.sum(dsig * (c * E_g - 2.0 * planck) - 2.0 * sigma * dplanck, axis=0)
        step = R / dR
        T_new = T - step
        # keep iterates positive
        while np.any(T_new <= 0):
            step = np.where(T_new <= 0, 0.5 * step, step)
            T_new = T - step
        done = np.all(np.abs(T_new - T) <= tol * T_new)
        T = T_new
        if done:
            return T
    raise NonConvergenceError("multigroup MEB Newton iteration failed")


def reference_fixed_point(config, T0=None):
    """Unaccelerated temperature-lagged iteration on the high-order system.

    Each iteration sweeps all groups with sigma_g(T), B_g(T) and then solves
    the multigroup material energy balance for T with the new intensity.
    Returns a RunOutput whose ``transport_sweeps`` counts every sweep.
    """
    problem = Problem.from_config(config)
    state = initial_state(problem, T0)
    dt, c = problem.time.dt, problem.units.c
    quad = problem.quad
    wb = quad.weights[None, :, None, None]
    psi_prev = state.psi
    T = state.grey.T.copy()
    E = state.grey.E.copy()
    T_hist, E_hist = [T.copy()], [E.copy()]
    stats = IterationStats()
    for j in range(1, problem.time.n_steps + 1):
        T_prev = T.copy()
        for k in range(1, config.oracle_max_iterations + 1):
            sigma, planck = problem.material(T)
            psi = transport.sweep(sigma, sigma * planck, psi_prev, dt, problem.mesh, quad, problem.bc, c)
            E_g = np.sum(wb * psi, axis=1).mean(axis=-1) / c
            T_new = _solve_multigroup_meb(problem, T, T_prev, E_g, dt)
            E_new = E_g.sum(axis=0)
            dT, dE = relative_change(T_new, T), relative_change(E_new, E)
            T, E = T_new, E_new
            if dT <= config.oracle_tolerance and dE <= config.oracle_tolerance:
                break
        else:
            raise NonConvergenceError(f"reference iteration failed at step {j}")
        stats.transport_iterations.append(k)
        stats.cycles.append(0)
        psi_prev = psi
        T_hist.append(T.copy())
        E_hist.append(E.copy())
    final = state_from_intensity(problem, psi_prev, T, problem.time.times[-1])
    return RunOutput(
        times=problem.time.times.copy(),
        x=problem.mesh.centers,
        T=np.array(T_hist),
        E=np.array(E_hist),
        stats=stats,
        final=final,
        transport_sweeps=stats.N_ti,
    )
