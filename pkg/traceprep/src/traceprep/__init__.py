"""Dataset-to-trace preparation for the cascade selection simulator."""

__version__ = "0.1.0"

from .cascade import (
    CascadeSpec,
    SpecError,
    build_trace,
    load_dataset,
    load_spec,
    read_trace,
    report_rates,
    train_cascade,
    write_trace,
)

__all__ = [
    "CascadeSpec",
    "SpecError",
    "build_trace",
    "load_dataset",
    "load_spec",
    "read_trace",
    "report_rates",
    "train_cascade",
    "write_trace",
]
