"""Rational filters and FEAST-style subspace iteration for Hermitian pencils."""

from .errors import (DomainError, FilterConstructionError, InsufficientDataError,
                     MatrixMarketError, PoleProximityError, RankDeficiencyWarning,
                     SingularShiftError)
from .filters import (FilterSpec, RationalFilter, build_filter, build_gauss_filter,
                      build_trapezoid_filter, build_zolotarev_filter, eval_filter)
from .linalg import HermitianPencil, load_matrix_market, write_matrix_market
from .feast import FeastConfig, FeastReport, SpectralInterval, feast_solve
from .analysis import worst_case_factor
from .loadbalance import IntervalPlan, plan_partition, solve_plan

__version__ = "0.1.0"
