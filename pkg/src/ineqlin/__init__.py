"""Inequality indexes as functionals of a discrete measure, their influence
functions, and linearized variance estimation for survey samples."""

from .engine import ComposedFunctional, evaluate, gateaux_numeric, influence
from .errors import DesignError, DomainError
from .indexes import AMATO, GINI, ZENGA, IndexKind, as_composition, atkinson
from .measure import DiscreteMeasure
from .survey import (
    SRSWOR,
    Bernoulli,
    Poisson,
    SampleData,
    StratifiedSRSWOR,
    draw_sample,
    empirical_measure,
    estimate_with_variance,
    plug_in,
)

__version__ = "0.1.0"

__all__ = [
    "AMATO",
    "GINI",
    "ZENGA",
    "Bernoulli",
    "ComposedFunctional",
    "DesignError",
    "DiscreteMeasure",
    "DomainError",
    "IndexKind",
    "Poisson",
    "SRSWOR",
    "SampleData",
    "StratifiedSRSWOR",
    "as_composition",
    "atkinson",
    "draw_sample",
    "empirical_measure",
    "estimate_with_variance",
    "evaluate",
    "gateaux_numeric",
    "influence",
    "plug_in",
]
