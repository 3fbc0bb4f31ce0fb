from optimizers.base import (
    ALGORITHMS,
    EXTERNAL_ALGORITHMS,
    Optimizer,
    OptimizerSpec,
    algorithm_names,
    create_optimizer,
    optimizer_class,
    run_optimizer,
)
from optimizers import local_search, population, continuous, swarm  # noqa: F401  (registers the algorithms)
