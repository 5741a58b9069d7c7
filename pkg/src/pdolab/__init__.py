"""Spectral solver and verification workbench for parabolic equations with time-measurable symbols."""
from .errors import AdmissibilityError, CapabilityError, DomainError, InputError
from .grid import BandLimitedFamily, Field, SpacetimeGrid
from .report import EstimateReport, ReportRow
from .symbols import PiecewiseConstantTrack, SamplePlan, Symbol
from .weights import BallFamily, WeightSpec

__all__ = [
    "AdmissibilityError", "BallFamily", "BandLimitedFamily", "CapabilityError", "DomainError",
    "EstimateReport", "Field", "InputError", "PiecewiseConstantTrack", "ReportRow", "SamplePlan",
    "SpacetimeGrid", "Symbol", "WeightSpec",
]
__version__ = "0.1.0"
