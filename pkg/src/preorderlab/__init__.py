"""Testing preorders for probabilistic processes, decided with exact arithmetic."""

from .composition import ComposedPLTS, compose, prune
from .core import PLTS, TAU, Label, Subdist, Transition, action, success
from .derivation import apply_derivation_based, extreme_derivative, is_convergent
from .failsim import FailureSimCandidate, bounded_candidate_search, fs_leq, validate_candidate
from .frontend import SourceModel, load_model, parse_model, serialize_model
from .polytope import OutcomePolytope
from .preorders import Verdict, preorder_on_suite
from .resolution import apply_resolution_based

__all__ = [
    "ComposedPLTS",
    "FailureSimCandidate",
    "Label",
    "OutcomePolytope",
    "PLTS",
    "SourceModel",
    "Subdist",
    "TAU",
    "Transition",
    "Verdict",
    "action",
    "apply_derivation_based",
    "apply_resolution_based",
    "bounded_candidate_search",
    "compose",
    "extreme_derivative",
    "fs_leq",
    "is_convergent",
    "load_model",
    "parse_model",
    "preorder_on_suite",
    "prune",
    "serialize_model",
    "success",
    "validate_candidate",
]
