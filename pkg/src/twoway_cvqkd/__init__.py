"""Finite-size, continuous-mode key rates for two-way and one-way CV-QKD."""

from .errors import (
    ConfigParseError,
    ConfigValidationError,
    CVQKDError,
    DegenerateCalibrationError,
    DegenerateComplementError,
    InvalidArgumentError,
    NoCrossingError,
    NumericFailureError,
    UnphysicalEigenvalueError,
    UnphysicalStateError,
)
from .finite_size import EstimationBudget
from .gaussian_core import QuadratureCovariance, SymplecticTransform
from .protocols import (
    KeyRateBreakdown,
    ModeMatchMatrix,
    TwoWayParams,
    key_rate_one_way,
    key_rate_two_way,
)
from .sweep import SweepConfig, find_max_distance, find_max_noise, load_config

__version__ = "0.1.0"
