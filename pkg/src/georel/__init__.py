"""Geometric relational embeddings: ultrahyperbolic, box, hypercomplex and Poincare-ball models."""

from .data import ElAxiom, HyperFact, NestedTriple, Triple, Vocab
from .errors import CheckpointError, DataFormatError, DomainError, GeoRelError, InconsistentAxiomError, NonFiniteError
from .models import HMI, BoxEL, NestE, ShrinkE, UltraE
from .training import load_checkpoint, save_checkpoint

__version__ = "0.1.0"

__all__ = [
    "HMI",
    "BoxEL",
    "CheckpointError",
    "DataFormatError",
    "DomainError",
    "ElAxiom",
    "GeoRelError",
    "HyperFact",
    "InconsistentAxiomError",
    "NestE",
    "NestedTriple",
    "NonFiniteError",
    "ShrinkE",
    "Triple",
    "UltraE",
    "Vocab",
    "load_checkpoint",
    "save_checkpoint",
]
