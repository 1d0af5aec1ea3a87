import numpy as np
import pytest
from scipy.integrate import quad

from trt_multilevel.physics import PLANCK_NORM


def planck_fraction_oracle(lo, hi):
    """Adaptive quadrature of (15/pi^4) x^3/(e^x - 1), scaled by e^lo so
    far-Wien bands stay representable.  Returns (value * e^lo)."""

    def f(x):
        if x <= 0:
            return 0.0
        return PLANCK_NORM * x**3 * np.exp(lo - x) / -np.expm1(-x)

    if np.isinf(hi):
        val, _ = quad(f, lo, np.inf, epsabs=0, epsrel=1e-13, limit=500)
        return val
    pts = [p for p in (1.0, 3.0, 10.0, 30.0) if lo < p < hi]
    val, _ = quad(f, lo, hi, epsabs=0, epsrel=1e-13, limit=500, points=pts or None)
    return val


def fc_group_opacity_oracle(T, e_lo, e_hi, coefficient=27.0):
    """sigma_g = int sigma_nu b_nu / int b_nu by adaptive quadrature."""
    lo, hi = e_lo / T, e_hi / T

    def b(x):
        return x**3 * np.exp(lo - x) / -np.expm1(-x) if x > 0 else 0.0

    def sb(x):
        if x <= 0:
            return coefficient / T**3  # limit of sigma_nu b_nu as x -> 0
        return coefficient / (x * T) ** 3 * (-np.expm1(-x)) * b(x)

    kw = dict(epsabs=0, epsrel=1e-13, limit=500)
    num, _ = quad(sb, lo, hi, **kw)
    den, _ = quad(b, lo, hi, **kw)
    return num / den


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


def small_problem(**kw):
    from trt_multilevel import Problem, RunConfig

    base = dict(cells=5, groups=6, quadrature_half=4, dt=2e-3, t_end=0.004)
    base.update(kw)
    return Problem.from_config(RunConfig(**base).validate())


def random_transport_state(problem, seed, T=None):
    """Transport solve from a random previous intensity at random T; returns
    (T, sigma, planck, dsigma, dplanck, psi_prev, psi)."""
    from trt_multilevel import transport

    r = np.random.default_rng(seed)
    N, G, M = problem.mesh.n_cells, problem.grid.n_groups, problem.quad.mu.size
    if T is None:
        T = r.uniform(0.05, 1.0, N)
    sigma, planck, dsigma, dplanck = problem.material(T, derivative=True)
    psi_prev = planck[:, None, :, None] * r.uniform(0.2, 2.0, (G, M, N, 2))
    psi = transport.sweep(sigma, sigma * planck, psi_prev, problem.time.dt, problem.mesh, problem.quad,
                          problem.bc, problem.units.c)
    return T, sigma, planck, dsigma, dplanck, psi_prev, psi


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
