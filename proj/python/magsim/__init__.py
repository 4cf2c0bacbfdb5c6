"""Qutrit-magnon pulse simulator and Wigner tomography."""

import json

from . import _magsim
from ._magsim import (
    MagsimError,
    alpha_grid_square,
    coherent_state,
    displacement,
    fock_annihilation,
    fock_state,
    nnls,
    parity,
    project_to_simplex,
    wigner_analytic,
)

__version__ = _magsim.__version__

__all__ = [
    "MagsimError",
    "alpha_grid_square",
    "analytic_map",
    "coherent_state",
    "command_names",
    "default_config",
    "displacement",
    "effective_coupling_mhz",
    "fidelity",
    "fock_annihilation",
    "fock_state",
    "load_config",
    "nnls",
    "parity",
    "project_to_simplex",
    "reconstruct",
    "run",
    "selftest",
    "wigner_analytic",
]


def default_config():
    return json.loads(_magsim.default_config())


def load_config(path="", overrides=()):
    """Defaults, then the JSON file (if any), then "a.b=value" overrides."""
    return json.loads(_magsim.load_config(str(path), list(overrides)))


def command_names():
    return list(_magsim.command_names())


def run(command, config=None, overrides=()):
    """Run a subcommand in process; returns (summary line, result dict)."""
    cfg = load_config("", overrides) if config is None else config
    summary, result = _magsim.run_command(command, json.dumps(cfg))
    return summary, json.loads(result)


def selftest():
    return _magsim.selftest()


def effective_coupling_mhz(config=None):
    return _magsim.effective_coupling_mhz(json.dumps(config or default_config()))


def analytic_map(rho, alphas, noise_sigma=0.0, seed=0):
    return json.loads(_magsim.analytic_map(rho, list(alphas), noise_sigma, seed))


def reconstruct(wigner_map, d_rec, target=None, bootstrap=0, seed=0):
    """Returns (rho, result dict) for a map dict as produced by analytic_map."""
    rho, result = _magsim.reconstruct(json.dumps(wigner_map), d_rec, target, bootstrap, seed)
    return rho, json.loads(result)


def fidelity(rho, target):
    return _magsim.fidelity(rho, target)
