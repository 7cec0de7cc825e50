"""Workbench for a graded linear lambda-calculus with quantitative
equational reasoning over quantale-valued bounds, together with finite
metric and probabilistic models for auditing derived bounds."""

__version__ = "0.1.0"

from .quantale import (INF, SymbolicBound, get_quantale, get_semiring,
                       scalar_mul)
from .parser import parse_context, parse_term, parse_type, print_term
from .typecheck import check, infer
from .rewrite import RewriteStep, SchemaId, beta_normalize
from .vequation import TheorySpec, VEquation, VProof, synthesize, validate
from .theory import load_theory, load_theory_text
from .proofscript import load_proof, parse_proof
from .metmodel import interp, model_distance, timed_model
from .probmodel import FinDist, tv_distance

__all__ = [
    "INF", "SymbolicBound", "get_quantale", "get_semiring", "scalar_mul",
    "parse_context", "parse_term", "parse_type", "print_term",
    "check", "infer", "RewriteStep", "SchemaId", "beta_normalize",
    "TheorySpec", "VEquation", "VProof", "synthesize", "validate",
    "load_theory", "load_theory_text", "load_proof", "parse_proof",
    "interp", "model_distance", "timed_model", "FinDist", "tv_distance",
    "__version__",
]
