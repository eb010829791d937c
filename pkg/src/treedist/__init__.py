"""Edit, segmental, bottom-up segmental and bottom-up distances between unordered trees."""

from .cost import (
    CostFunction, mapping_cost, pair_weight, parse_cost_file, unit_cost, validate_metric,
)
from .dp import DistanceResult, RunStats, WeightTable, distance, weight_table
from .ilp import IlpModel, export_lp
from .mapping import DistanceClass, brute_force_distance, is_valid
from .matching import FORBIDDEN, max_weight_bijection, max_weight_matching
from .solver import IlpSolution, SolverConfig, Status, solve
from .tree import Tree, TreeSyntaxError, parse_bracket, parse_cslogs, random_tree, render_bracket

__all__ = [
    "CostFunction", "DistanceClass", "DistanceResult", "FORBIDDEN", "IlpModel", "IlpSolution",
    "RunStats", "SolverConfig", "Status", "Tree", "TreeSyntaxError", "WeightTable",
    "brute_force_distance", "distance", "export_lp", "is_valid", "mapping_cost",
    "max_weight_bijection", "max_weight_matching", "pair_weight", "parse_bracket",
    "parse_cost_file", "parse_cslogs", "random_tree", "render_bracket", "solve", "unit_cost",
    "validate_metric", "weight_table",
]
