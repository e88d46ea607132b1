from ._lakesim import (
    CompatibilityError,
    ConfigError,
    Domain,
    GeometryError,
    SolverError,
    discrete_gronwall_bound,
    exponent_table,
    fnv1a_hex,
    run_config,
    solve_dirichlet,
    solve_neumann,
    verify,
    weighted_lp_norm,
)

__all__ = [
    "CompatibilityError",
    "ConfigError",
    "Domain",
    "GeometryError",
    "SolverError",
    "discrete_gronwall_bound",
    "exponent_table",
    "fnv1a_hex",
    "run_config",
    "solve_dirichlet",
    "solve_neumann",
    "verify",
    "weighted_lp_norm",
]
