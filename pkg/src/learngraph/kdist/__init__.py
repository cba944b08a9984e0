"""Learning graphs for k-distinctness: promised instances, exact counting,
the baseline construction and the staged construction."""

from .alg1 import Alg1Tiny, KeyVertexSampler, alg1_collapsed, build_alg1_tiny, key_vertex_flow
from .baseline import BaselineConstruction, baseline_collapsed, build_baseline_graph
from .counting import count_by_specification, exact_mean_type, expected_subtuples, tuple_count_ratio_bound
from .params import D_function, StageParams, StepLabel, flow_on_arc, rho_exponents, stage_params, step_schedule, valid_specs_for_step
from .promise import PromisedInstance, build_promised_instance
from .scaling import ScalingFit, scaling_experiment
