from ._accel import HAVE_NUMBA, USE_NUMBA
from .power import (
    DEFAULT_STARTS,
    START_PROFILES,
    EstimateReport,
    doubling_study,
    indicator_lower_bound,
    indicator_ratio,
    parseval_norm_check,
    power_iterate,
    reference_norm,
    run_estimates,
    start_vector,
)
from .windowed import WindowedOperator, apply_windowed
