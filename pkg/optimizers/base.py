import logging
import numbers
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Type

import numpy as np

from core.cache import SearchSpaceCache
from core.exceptions import BudgetExhausted, InvalidHyperparameters, UnknownAlgorithm
from core.fitness import EvalBudget, FitnessMode, FitnessSource, OptimizerRun
from core.space import Configuration, NeighbourhoodKind, ParameterSpace

EXTERNAL_ALGORITHMS = ("smac", "irace")  # Traces produced by third-party tools, import only


class Hyperparameter(NamedTuple):
    """One entry of an algorithm's hyperparameter schema.

    kind is one of bool, int, float, str, neighbourhood or range (a [low, high] pair of floats).
    """

    name: str
    kind: str
    default: Any
    choices: Optional[Tuple[Any, ...]] = None
    low: Optional[float] = None
    high: Optional[float] = None

    def check(self, value: Any) -> Tuple[Any, Optional[str]]:
        if self.kind == "bool":
            if not isinstance(value, bool):
                return value, f"{self.name} must be a boolean, got {value!r}"
            return value, None

        if self.kind == "neighbourhood":
            try:
                return NeighbourhoodKind.parse(value).value, None
            except ValueError as e:
                return value, str(e)

        if self.kind == "str":
            if self.choices is not None and value not in self.choices:
                return value, f"{self.name} must be one of {list(self.choices)}, got {value!r}"
            return value, None

        if self.kind == "range":
            if not isinstance(value, (list, tuple)) or len(value) != 2:
                return value, f"{self.name} must be a [low, high] pair, got {value!r}"
            low, high = (float(v) for v in value)
            if low > high:
                return value, f"{self.name} range is reversed: {value!r}"
            for bound in (low, high):
                problem = self._check_bounds(bound)
                if problem:
                    return value, problem
            return [low, high], None

        if isinstance(value, bool) or not isinstance(value, numbers.Real):
            return value, f"{self.name} must be a number, got {value!r}"
        if self.kind == "int":
            if float(value) != int(value):
                return value, f"{self.name} must be an integer, got {value!r}"
            value = int(value)
        else:
            value = float(value)
        return value, self._check_bounds(value)

    def _check_bounds(self, value: float) -> Optional[str]:
        if self.low is not None and value < self.low:
            return f"{self.name} must be >= {self.low}, got {value}"
        if self.high is not None and value > self.high:
            return f"{self.name} must be <= {self.high}, got {value}"
        return None


def resolve_hyperparameters(
    algorithm: str, schema: Sequence[Hyperparameter], values: Optional[Dict[str, Any]]
) -> Dict[str, Any]:
    """Schema defaults overlaid with values; every problem is collected before raising"""
    values = dict(values or {})
    known = {h.name for h in schema}
    problems = [f"unknown hyperparameter '{name}'" for name in sorted(set(values) - known)]

    resolved = {}
    for h in schema:
        value, problem = h.check(values.get(h.name, h.default))
        if problem:
            problems.append(problem)
        resolved[h.name] = value

    if problems:
        raise InvalidHyperparameters(algorithm, problems)
    return resolved


def neighbourhood_parameter(default: str = "hamming") -> Hyperparameter:
    return Hyperparameter("neighbourhood", "neighbourhood", default)


@dataclass
class OptimizerSpec:
    algorithm: str
    hyperparameters: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {"algorithm": self.algorithm, "hyperparameters": dict(self.hyperparameters), "seed": self.seed}


class Optimizer:
    """Common contract: search until the budget or the algorithm's own stop condition ends the run.

    Subclasses implement `search`, calling `fitness.evaluate` for every point they look at.
    BudgetExhausted (and its SpaceExhausted / SearchStalled variants) ends the run cooperatively.
    """

    name: str = ""
    schema: Tuple[Hyperparameter, ...] = ()

    def __init__(self, hyperparameters: Optional[Dict[str, Any]] = None, seed: int = 0):
        self.hyperparameters = resolve_hyperparameters(self.name, self.schema, hyperparameters)
        self.seed = seed
        self.logger = logging.getLogger(self.__class__.__module__)

    @property
    def neighbourhood(self) -> NeighbourhoodKind:
        return NeighbourhoodKind.parse(self.hyperparameters.get("neighbourhood", "hamming"))

    def run(self, fitness: FitnessSource) -> OptimizerRun:
        rng = np.random.default_rng(self.seed)
        try:
            self.search(fitness, rng)
        except BudgetExhausted as e:
            self.logger.debug(f"{self.name} (seed {self.seed}) stopped: {e.message}")
        run = fitness.result(self.name, self.seed, self.hyperparameters)
        self.logger.debug(f"{self.name} (seed {self.seed}) best {run.best_fitness} after {run.evals_used} evaluations")
        return run

    def search(self, fitness: FitnessSource, rng: np.random.Generator):
        raise NotImplementedError


ALGORITHMS: Dict[str, Type[Optimizer]] = {}


def register(name: str) -> Callable[[Type[Optimizer]], Type[Optimizer]]:
    def decorator(cls: Type[Optimizer]) -> Type[Optimizer]:
        cls.name = name
        ALGORITHMS[name] = cls
        return cls

    return decorator


def algorithm_names() -> List[str]:
    return sorted(ALGORITHMS)


def optimizer_class(name: str) -> Type[Optimizer]:
    try:
        return ALGORITHMS[name]
    except KeyError:
        raise UnknownAlgorithm(name, ALGORITHMS)


def create_optimizer(spec: OptimizerSpec) -> Optimizer:
    return optimizer_class(spec.algorithm)(spec.hyperparameters, seed=spec.seed)


def run_optimizer(
    spec: OptimizerSpec,
    cache: SearchSpaceCache,
    max_evals: int,
    mode: FitnessMode = FitnessMode.DETERMINISTIC_MEAN,
) -> OptimizerRun:
    """One seeded run of spec on cache. Hyperparameters are validated before any evaluation."""
    optimizer = create_optimizer(spec)
    draws = np.random.default_rng([spec.seed, 1])  # Sample draws independent of the search stream
    fitness = FitnessSource(cache, EvalBudget(max_evals), mode=mode, rng=draws)
    return optimizer.run(fitness)


def mutate(space: ParameterSpace, x: Configuration, count: int, rng: np.random.Generator) -> Configuration:
    """Give `count` distinct dimensions a different random value; dimensions with one value are skipped"""
    free = [i for i, m in enumerate(space.dims) if m > 1]
    count = min(count, len(free))
    if count <= 0:
        return tuple(x)

    y = list(x)
    for i in rng.choice(free, size=count, replace=False):
        shift = int(rng.integers(1, space.dims[i]))
        y[i] = (y[i] + shift) % space.dims[i]
    return tuple(y)
