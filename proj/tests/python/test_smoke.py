import math
import os
from pathlib import Path

import numpy as np
import pytest

import rsbridge

SOURCE = Path(os.environ.get("RSB_SOURCE_DIR", Path(__file__).resolve().parents[2]))

BOX = """
[geometry]
shape = box
[mesh]
resolution = 5
[solver]
time_steps = 6
tolerance = 1e-8
max_iterations = 200
[densities]
initial_center = 0.3, 0.3, 0.3
initial_sigma = 0.15
terminal_center = 0.7, 0.7, 0.7
terminal_sigma = 0.15
[particles]
count = 20
steps = 30
"""


@pytest.fixture(scope="module")
def box():
    cfg = rsbridge.parse_config(BOX)
    problem, summary = rsbridge.run(cfg)
    return problem, summary


def test_version():
    assert rsbridge.__version__.count(".") == 2


def test_helix_point_and_sdf():
    p = rsbridge.helix_point(0.0)
    assert p == pytest.approx([0.75, 0.5, 0.0])
    assert rsbridge.tube_sdf(p) == pytest.approx(-0.1)
    assert rsbridge.tube_sdf([0.0, 0.0, 0.5]) > 0.0


def test_mesh_arrays(box):
    problem, _ = box
    v = problem.vertices
    assert v.shape == (216, 3)
    assert problem.tets.shape == (750, 4)
    assert problem.lumped_mass.sum() == pytest.approx(1.0)
    assert problem.convection_matrix is None


def test_mass_matrix_matches_lumped_rows(box):
    scipy_sparse = pytest.importorskip("scipy.sparse")
    problem, _ = box
    n = len(problem.lumped_mass)
    m = scipy_sparse.csr_matrix(problem.mass_matrix, shape=(n, n))
    k = scipy_sparse.csr_matrix(problem.stiffness_matrix, shape=(n, n))
    np.testing.assert_allclose(m.sum(axis=1).A1, problem.lumped_mass, rtol=1e-12)
    assert abs(k @ np.ones(n)).max() < 1e-10
    assert abs(m - m.T).max() == 0.0


def test_solution(box):
    problem, summary = box
    sol = summary.solution
    assert sol.converged
    assert sol.time_steps == 6
    np.testing.assert_allclose(sol.rho(0), problem.rho0, rtol=1e-10, atol=1e-10)
    assert sol.phi(3).min() > 0.0
    assert len(summary.masses) == 7
    assert summary.mass_error < 0.05
    assert math.isfinite(summary.control_norm)


def test_simulate_is_deterministic(box):
    problem, summary = box
    a = rsbridge.simulate(problem, summary)
    b = rsbridge.simulate(problem, summary)
    free = rsbridge.simulate(problem)
    assert len(a) == 20
    assert a.positions(0).shape == (31, 3)
    np.testing.assert_array_equal(a.positions(7), b.positions(7))
    assert a.terminal_mean[2] > free.terminal_mean[2]


def test_errors():
    with pytest.raises(rsbridge.ConfigError):
        rsbridge.parse_config("[solver]\ntime_steps = 0\n")
    with pytest.raises(rsbridge.ConfigError):
        rsbridge.parse_config("[nowhere]\nkey = 1\n")
    assert issubclass(rsbridge.MeshError, rsbridge.Error)


def test_shipped_config_loads():
    cfg = rsbridge.load_config(str(SOURCE / "configs" / "spiral_drift_desk.cfg"))
    assert cfg.resolution == 40
    assert "[solver]" in cfg.dump()
