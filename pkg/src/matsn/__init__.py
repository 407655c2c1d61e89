"""Matrix variate skew-normal laws: density, characteristic function, moments,
samplers, and deciders for six integral stochastic orders."""
from .distribution import (
    MsnParams,
    MvSnParams,
    SampleBatch,
    UnivariateSnParams,
    build_params,
    cf,
    density,
    log_density,
    mean,
    sample,
    sample_additive,
    sample_rejection,
    second_moment,
    tau,
)
from .errors import MatsnError
from .orders import OrderKind, OrderVerdict, Status, check_order

__all__ = [
    "MsnParams", "MvSnParams", "SampleBatch", "UnivariateSnParams", "build_params", "cf", "density",
    "log_density", "mean", "sample", "sample_additive", "sample_rejection", "second_moment", "tau",
    "MatsnError", "OrderKind", "OrderVerdict", "Status", "check_order",
]
