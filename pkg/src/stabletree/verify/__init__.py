"""Exact oracles, statistical kernel and the verification suites."""

from .shapes import ShapeTable, enumerate_shape_law, formula_shape_law, tree_signature
from .stats import TestReport, chi_square, ks_two_sample, ks_vs_cdf, moment_z
from .suites import SUITES, run_suite

__all__ = [
    "ShapeTable",
    "enumerate_shape_law",
    "formula_shape_law",
    "tree_signature",
    "TestReport",
    "chi_square",
    "ks_two_sample",
    "ks_vs_cdf",
    "moment_z",
    "SUITES",
    "run_suite",
]
