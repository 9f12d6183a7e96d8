"""Improper integrals to infinity defined through termination functions."""

from .evaluator import (
    GOLDEN,
    IntegralResult,
    LimitPolicy,
    LimitReport,
    evaluate,
    linearity_check,
    uniqueness_report,
)
from .integrand import Integrand, catalog_get
from .termination import (
    TerminationDerivative,
    combine,
    make_box,
    make_exp_pair,
    make_pair,
    make_step,
    make_triple,
    validate,
)

__version__ = "0.1.0"
