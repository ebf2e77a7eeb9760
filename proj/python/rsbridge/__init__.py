"""Reflected Schrodinger bridge solver on masked tetrahedral meshes."""

from ._core import (
    BridgeSolution,
    ConfigError,
    Ensemble,
    Error,
    HelixSpec,
    IoError,
    MeshError,
    Problem,
    RunConfig,
    SolveSummary,
    SolverError,
    __version__,
    build_problem,
    helix_point,
    load_config,
    parse_config,
    simulate,
    solve,
    tube_sdf,
    write_artifacts,
)


def run(config, overrides=()):
    """Load a config file (or take a RunConfig), build the problem and solve it."""
    if not isinstance(config, RunConfig):
        config = load_config(str(config), list(overrides))
    problem = build_problem(config)
    return problem, solve(problem)
