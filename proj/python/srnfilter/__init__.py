"""Filtering for partially observed stochastic reaction networks."""

from ._srnfilter import (
    SrnError,
    builtin_names,
    cli,
    model_json,
    observe,
    run_filter,
    simulate,
)

__all__ = [
    "SrnError",
    "builtin_names",
    "cli",
    "model_json",
    "observe",
    "run_filter",
    "simulate",
]
