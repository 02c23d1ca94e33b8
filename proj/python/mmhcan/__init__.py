"""Multi-modal hypergraph fault diagnosis toolkit."""

import json

from . import _mmhcan
from ._mmhcan import (
    ConfigError,
    ContractError,
    DataError,
    DimensionError,
    DomainError,
    Error,
    NonFiniteError,
    command_names,
    hyperedge_members,
    laplacian,
    perturb,
    preset,
    preset_names,
    run_command,
    snr_db,
    spectrogram,
    stft,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "DataError",
    "DimensionError",
    "DomainError",
    "Error",
    "NonFiniteError",
    "command_names",
    "default_config",
    "hyperedge_members",
    "laplacian",
    "metrics",
    "perturb",
    "preset",
    "preset_names",
    "run_command",
    "snr_db",
    "spectrogram",
    "stft",
]


def default_config():
    return json.loads(_mmhcan.default_config())


def metrics(probs, labels, classes):
    return json.loads(_mmhcan.metrics(probs, list(labels), classes))
