"""Kerr-resonator ring simulator: W-state protocol, spectra and constraints."""

from ._abhsim import (
    ConfigError,
    Error,
    cli,
    constraints,
    normalize_config,
    phase_scan,
    preset_names,
    preset_text,
    run,
    tau2,
    verify,
    version,
)

__all__ = [
    "ConfigError",
    "Error",
    "cli",
    "constraints",
    "normalize_config",
    "phase_scan",
    "preset_names",
    "preset_text",
    "run",
    "tau2",
    "verify",
    "version",
]
