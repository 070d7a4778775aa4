"""Taxonomic class-incremental learning: curricula, splits, training runs."""

from ._tcil import (
    ConfigError,
    ParseError,
    TaxonomyTree,
    curriculum,
    expansion_matrix,
    run,
    sigma,
    split,
    summarize,
    tc_inheritance_matrix,
    verify,
)

__all__ = [
    "ConfigError",
    "ParseError",
    "TaxonomyTree",
    "curriculum",
    "expansion_matrix",
    "run",
    "sigma",
    "split",
    "summarize",
    "tc_inheritance_matrix",
    "verify",
]
