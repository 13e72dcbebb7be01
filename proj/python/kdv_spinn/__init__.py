"""Structure-preserving PINN for the Korteweg-de Vries equation."""

from ._core import (
    ConfigError,
    Error,
    InvalidArgument,
    Mlp,
    cli,
    config_entries,
    energy,
    hirota_two_soliton,
    mass,
    oracle,
    property_checks,
    residual,
    run_case,
    soliton,
    two_soliton_ic,
)

__all__ = [
    "ConfigError",
    "Error",
    "InvalidArgument",
    "Mlp",
    "cli",
    "config_entries",
    "energy",
    "hirota_two_soliton",
    "mass",
    "oracle",
    "property_checks",
    "residual",
    "run_case",
    "soliton",
    "two_soliton_ic",
]
