"""Exact structured dynamic programming for hybrid discrete/continuous MDPs."""

from ._kdmdp import (
    DomainError,
    GridSolution,
    Model,
    ModelError,
    NumericalError,
    ParseError,
    ResourceCapError,
    Solution,
    __version__,
    discretize_gaussian,
    generate_rover,
    grid_solve,
    load_model,
    load_model_file,
    simulate,
    solve,
)

__all__ = [
    "DomainError",
    "GridSolution",
    "Model",
    "ModelError",
    "NumericalError",
    "ParseError",
    "ResourceCapError",
    "Solution",
    "__version__",
    "discretize_gaussian",
    "generate_rover",
    "grid_solve",
    "load_model",
    "load_model_file",
    "simulate",
    "solve",
]
