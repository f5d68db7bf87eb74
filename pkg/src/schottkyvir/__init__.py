"""Schottky-uniformised Riemann surfaces, their classical differentials,
variational operators, Virasoro-graph n-point operators and modular
transformation checks."""

from .differentials import (
    LimitPointConfig,
    PeriodMatrix,
    Surface,
    TruncationPolicy,
    get_surface,
    reference_params,
)
from .forms import FormValue
from .schottky import (
    GroupElement,
    HandleData,
    MobiusMap,
    SchottkyError,
    SchottkyParams,
    ValidationReport,
    derive_handle_data,
    enumerate_group,
    generator,
    mobius_transform,
    validate,
)

__version__ = "0.1.0"
