"""Estimators for the four embedding families plus the HMI label model."""

from .boxel import BoxEL, boxel_axiom_loss, boxel_total_loss, subsumption_score
from .hmi import HMI
from .neste import NestE, neste_atomic_score, neste_nested_score, neste_total_loss
from .shrinke import ShrinkE, shrinke_score
from .ultrae import UltraE, ultrae_score

MODEL_REGISTRY = {cls.model_tag: cls for cls in (UltraE, ShrinkE, NestE, BoxEL, HMI)}

__all__ = [
    "MODEL_REGISTRY",
    "BoxEL",
    "HMI",
    "NestE",
    "ShrinkE",
    "UltraE",
    "boxel_axiom_loss",
    "boxel_total_loss",
    "neste_atomic_score",
    "neste_nested_score",
    "neste_total_loss",
    "shrinke_score",
    "subsumption_score",
    "ultrae_score",
]
