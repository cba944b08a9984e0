"""Learning graphs, their flows and complexities, and their compilation into
verified dual adversary solutions, with the k-distinctness constructions."""

__version__ = "0.1.0"

from .adversary import build_certificate, objective_value, rescale_balance, verify_agreement_classes, verify_feasibility
from .complexity import ComplexityReport, graph_complexity, negative_complexity
from .domain import FunctionSpec, SymmetryElement, apply_symmetry, enumerate_inputs, evaluate, is_accepting
from .flows import Flow, condition_flow, flow_cost, optimal_flow, validate_flow
from .graph import LearningGraph, build_layered_graph

__all__ = [
    "ComplexityReport",
    "Flow",
    "FunctionSpec",
    "LearningGraph",
    "SymmetryElement",
    "apply_symmetry",
    "build_certificate",
    "build_layered_graph",
    "condition_flow",
    "enumerate_inputs",
    "evaluate",
    "flow_cost",
    "graph_complexity",
    "is_accepting",
    "negative_complexity",
    "objective_value",
    "optimal_flow",
    "rescale_balance",
    "validate_flow",
    "verify_agreement_classes",
    "verify_feasibility",
]
