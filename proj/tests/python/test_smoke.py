import math

import numpy as np
import pytest

import magsim


def test_version_and_commands():
    assert magsim.__version__ == "0.3.0"
    assert "reconstruct" in magsim.command_names()


def test_config_overrides_and_strictness():
    cfg = magsim.load_config(overrides=["seed=5", "physical.t1_magnon_ns=150"])
    assert cfg["seed"] == 5
    assert cfg["physical"]["t1_magnon_ns"] == 150
    with pytest.raises(magsim.MagsimError, match="no_such_key"):
        magsim.load_config(overrides=["physical.no_such_key=1"])


def test_operators_against_numpy():
    dim = 12
    a = magsim.fock_annihilation(dim)
    expected = np.diag(np.sqrt(np.arange(1, dim)), 1)
    np.testing.assert_allclose(a, expected, atol=1e-14)
    d = magsim.displacement(0.4 - 0.3j, 40)
    np.testing.assert_allclose(d.conj().T @ d, np.eye(40), atol=1e-9)
    np.testing.assert_allclose(magsim.parity(4).diagonal(), [1, -1, 1, -1])


def test_wigner_of_fock_one_matches_closed_form():
    rho = np.zeros((6, 6), complex)
    rho[1, 1] = 1.0
    for alpha in (0.0, 0.5, 0.3 + 0.8j):
        r2 = abs(alpha) ** 2
        expected = -(2 / math.pi) * (1 - 4 * r2) * math.exp(-2 * r2)
        assert magsim.wigner_analytic(rho, alpha) == pytest.approx(expected, abs=1e-9)


def test_nnls_matches_active_set_solution():
    a = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    b = np.array([-1.0, 2.0, 1.0])
    x = magsim.nnls(a, b)
    # x0 is pinned at zero; x1 solves the remaining 1-D least squares.
    np.testing.assert_allclose(x, [0.0, 1.5], atol=1e-12)
    p = magsim.project_to_simplex(np.array([0.8, 0.6, -0.2]))
    np.testing.assert_allclose(p, [0.6, 0.4, 0.0], atol=1e-12)


def test_reconstruction_round_trip():
    psi = np.zeros(4, complex)
    psi[0] = psi[1] = 1 / math.sqrt(2)
    rho = np.outer(psi, psi.conj())
    m = magsim.analytic_map(rho, magsim.alpha_grid_square(5, 1.0))
    rec, result = magsim.reconstruct(m, 4, target=psi)
    assert result["fidelity"] > 0.999
    np.testing.assert_allclose(rec, rho, atol=1e-6)


def test_anticross_runs_in_process():
    cfg = magsim.load_config(overrides=["experiments.anticross.coil_ma={\"first\": -5, \"last\": -4, \"step\": 0.05}"])
    summary, result = magsim.run("anticross", cfg)
    assert summary.startswith("anticross:")
    assert result["metadata"]["experiment"] == "anticross"


def test_selftest_passes():
    ok, report = magsim.selftest()
    assert ok, report
