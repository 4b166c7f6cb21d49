"""Noncommutative integration of Dirac operators on homogeneous spaces:
declarative Lie-algebra models, jet-based verification of every geometric
and representation-theoretic identity, and certified explicit solutions."""

from .model import Model, ModelError, bundled_model_path, load_model
from .report import VerificationReport
from .suites import SUITES, SuiteConfig, run_suite

__all__ = [
    "Model", "ModelError", "SUITES", "SuiteConfig", "VerificationReport",
    "bundled_model_path", "load_model", "run_suite",
]

__version__ = "0.1.0"
