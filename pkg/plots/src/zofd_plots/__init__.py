"""Figure rendering for experiment CSV artifacts."""

from .charts import (
    CHARTS,
    KIND_LETTERS,
    EmptyInputError,
    MonotonicityWarning,
    PlotSpec,
    SchemaError,
    build_figure,
    kind_letter,
    load_frame,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "CHARTS",
    "KIND_LETTERS",
    "EmptyInputError",
    "MonotonicityWarning",
    "PlotSpec",
    "SchemaError",
    "build_figure",
    "kind_letter",
    "load_frame",
    "render",
    "__version__",
]
