"""Two-site random-matrix relaxation: exact dynamics, Wick diagrammatics, effective equations."""

__version__ = "0.1.0"

from .model import (
    BlockRandomMatrix,
    Hamiltonian,
    SpectrumConfig,
    WaveVector,
    assemble_hamiltonian,
    build_h0,
    make_initial_state,
    sample_interaction,
)
from .propagator import (
    RelaxationTrace,
    SpectralFactors,
    duhamel_term,
    eigendecompose,
    evolve,
    remainder_norm,
    site_probability,
)

__all__ = [
    "BlockRandomMatrix",
    "Hamiltonian",
    "RelaxationTrace",
    "SpectralFactors",
    "SpectrumConfig",
    "WaveVector",
    "assemble_hamiltonian",
    "build_h0",
    "duhamel_term",
    "eigendecompose",
    "evolve",
    "make_initial_state",
    "remainder_norm",
    "sample_interaction",
    "site_probability",
]
