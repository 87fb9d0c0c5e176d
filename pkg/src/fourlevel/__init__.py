"""Ground states and phase diagrams of 4-level atoms (lambda and N schemes)
coupled to two field modes."""
from .model import (
    ConfigError,
    CouplingEdge,
    Kind,
    ModelConfig,
    Region,
    conserved_quantities,
    coupling_edges,
    lambda_config,
    n_config,
    validate,
)

__version__ = "0.1.0"
