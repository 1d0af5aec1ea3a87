import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trt_multilevel.phase_space import (
    EnergyGrid,
    SpatialMesh,
    TimeGrid,
    build_double_gauss,
    build_fc_energy_grid,
    build_uniform_mesh,
)
from trt_multilevel.physics import DomainError


@given(st.integers(1, 16))
def test_double_gauss_moments(n):
    q = build_double_gauss(n)
    assert q.mu.size == 2 * n
    assert np.all(np.diff(q.mu) > 0)
    assert np.all(q.mu[q.neg] < 0) and np.all(q.mu[q.pos] > 0)
    assert q.weights.sum() == pytest.approx(2.0, rel=1e-14)
    assert q.weights[q.pos].sum() == pytest.approx(1.0, rel=1e-14)
    # exact half-range polynomial moments up to degree 2n-1
    for k in range(2 * n):
        assert np.sum(q.weights[q.pos] * q.mu[q.pos] ** k) == pytest.approx(1.0 / (k + 1), rel=1e-12)
    assert np.allclose(q.mu[q.mirror], -q.mu, atol=1e-15)
    assert np.allclose(q.weights[q.mirror], q.weights, rtol=1e-15)


def test_double_gauss_rejects_zero():
    with pytest.raises(DomainError):
        build_double_gauss(0)


def test_fc_energy_grid_layout():
    g = build_fc_energy_grid(256, 1e-4, 10.0, 1e7)
    assert g.n_groups == 256
    e = g.edges
    assert e[0] == 0.0 and e[1] == pytest.approx(1e-4) and e[-2] == pytest.approx(10.0) and e[-1] == 1e7
    ratios = e[2:-1] / e[1:-2]
    assert np.allclose(ratios, ratios[0], rtol=1e-12)
    assert np.allclose(g.coarse().edges, [0.0, 1e7])


def test_energy_grid_validation():
    with pytest.raises(DomainError):
        EnergyGrid([1.0, 0.5])
    with pytest.raises(DomainError):
        build_fc_energy_grid(2, 1e-4, 10.0, 1e7)
    with pytest.raises(DomainError):
        build_fc_energy_grid(8, 10.0, 1.0, 1e7)


def test_uniform_mesh():
    m = build_uniform_mesh(4.0, 10)
    assert m.n_cells == 10
    assert np.allclose(m.widths, 0.4)
    assert m.length == 4.0
    assert np.allclose(m.centers[[0, -1]], [0.2, 3.8])
    with pytest.raises(DomainError):
        SpatialMesh([0.0, 1.0, 1.0])


def test_time_grid():
    t = TimeGrid(2e-3, 0.3)
    assert t.n_steps == 150
    assert t.times[-1] == pytest.approx(0.3)
    with pytest.raises(DomainError):
        TimeGrid(0.07, 0.3)
    with pytest.raises(DomainError):
        TimeGrid(0.0, 1.0)
