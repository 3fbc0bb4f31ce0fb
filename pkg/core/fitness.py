import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, NamedTuple, Optional, Set

import numpy as np

from core.cache import SearchSpaceCache
from core.exceptions import BudgetExhausted, InvalidParameter, MissingEntry, SearchStalled, SpaceExhausted
from core.space import Configuration
from helpers.constants import FAIL_FITNESS


class FitnessMode(Enum):
    DETERMINISTIC_MEAN = "deterministic"
    STOCHASTIC_DRAW = "stochastic"

    @classmethod
    def parse(cls, value) -> "FitnessMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass
class EvalBudget:
    max_evals: int
    used: int = 0
    visited: Set[Configuration] = field(default_factory=set)

    def __post_init__(self):
        if self.max_evals < 1:
            raise InvalidParameter(f"Budget must allow at least one evaluation, got {self.max_evals}")

    @property
    def remaining(self) -> int:
        return self.max_evals - self.used

    @property
    def exhausted(self) -> bool:
        return self.used >= self.max_evals


class TraceEntry(NamedTuple):
    eval_index: int
    configuration: Configuration
    fitness: float


@dataclass
class OptimizerRun:
    """Outcome of one seeded run.

    best_fitness is always the stored mean runtime of best_config. In stochastic mode that is
    not the lowest draw seen: best_draw keeps the raw sample that made best_config the incumbent.
    """

    algorithm: str
    seed: int
    best_config: Optional[Configuration]
    best_fitness: float
    evals_used: int
    trace: List[TraceEntry]
    best_draw: Optional[float] = None
    hyperparameters: Dict[str, Any] = field(default_factory=dict)

    def best_so_far(self) -> List[float]:
        return list(np.minimum.accumulate([t.fitness for t in self.trace])) if self.trace else []

    def prefix(self, budget: int, cache: SearchSpaceCache) -> "OptimizerRun":
        """The run as it stood after `budget` costing evaluations"""
        head = self.trace[:budget]
        best = min(head, key=lambda t: t.fitness) if head else None
        return OptimizerRun(
            algorithm=self.algorithm,
            seed=self.seed,
            best_config=best.configuration if best else None,
            best_fitness=cache.fitness_of(best.configuration) if best else FAIL_FITNESS,
            evals_used=len(head),
            trace=head,
            best_draw=best.fitness if best else None,
            hyperparameters=self.hyperparameters,
        )

    def to_dict(self, cache: Optional[SearchSpaceCache] = None) -> Dict[str, Any]:
        space = cache.space if cache is not None else None

        def show(x):
            return list(space.to_values(x)) if space is not None else list(x)

        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "hyperparameters": self.hyperparameters,
            "best_config": show(self.best_config) if self.best_config is not None else None,
            "best_fitness": self.best_fitness,
            "evals_used": self.evals_used,
            "trace": [[t.eval_index, show(t.configuration), t.fitness] for t in self.trace],
        }


class FitnessSource:
    """Cache-backed evaluator owning one run's budget, trace and incumbent.

    Deterministic mode returns stored means and charges only first visits. Stochastic mode
    draws one of the stored samples on every call and charges every call.
    """

    def __init__(
        self,
        cache: SearchSpaceCache,
        budget: EvalBudget,
        mode: FitnessMode = FitnessMode.DETERMINISTIC_MEAN,
        rng: Optional[np.random.Generator] = None,
        stall_limit: Optional[int] = None,
    ):
        self.cache = cache
        self.space = cache.space
        self.budget = budget
        self.mode = mode
        self.rng = rng if rng is not None else np.random.default_rng()
        self.logger = logging.getLogger(__name__)
        self.stall_limit = stall_limit if stall_limit is not None else max(100_000, 20 * self.space.size())

        self.trace: List[TraceEntry] = []
        self.best_config: Optional[Configuration] = None
        self.best_fitness = float("inf")
        self.repeats = 0  # Consecutive zero-cost evaluations

    @property
    def deterministic(self) -> bool:
        return self.mode is FitnessMode.DETERMINISTIC_MEAN

    def is_visited(self, x: Configuration) -> bool:
        return self.deterministic and tuple(x) in self.budget.visited

    def evaluate(self, x: Configuration) -> float:
        x = tuple(int(i) for i in x)
        if self.deterministic:
            return self._evaluate_mean(x)
        return self._evaluate_draw(x)

    def _evaluate_mean(self, x: Configuration) -> float:
        budget = self.budget
        if len(budget.visited) >= self.space.size():
            raise SpaceExhausted(budget.used, budget.max_evals)
        if x in budget.visited:
            self.repeats += 1
            if self.repeats > self.stall_limit:
                raise SearchStalled(budget.used, budget.max_evals, self.repeats)
            return self.cache.fitness_of(x)

        if budget.exhausted:
            raise BudgetExhausted(budget.used, budget.max_evals)

        fitness = self.cache.fitness_of(x)
        budget.visited.add(x)
        self._charge(x, fitness)
        return fitness

    def _evaluate_draw(self, x: Configuration) -> float:
        if self.budget.exhausted:
            raise BudgetExhausted(self.budget.used, self.budget.max_evals)

        entry = self.cache.entry(x)
        if not entry.ok:
            fitness = FAIL_FITNESS
        else:
            samples = entry.times if entry.times is not None and len(entry.times) else np.array([entry.mean])
            fitness = float(samples[self.rng.integers(len(samples))])
        self._charge(x, fitness)
        return fitness

    def _charge(self, x: Configuration, fitness: float):
        self.budget.used += 1
        self.repeats = 0
        self.trace.append(TraceEntry(self.budget.used, x, fitness))
        if fitness < self.best_fitness:
            self.best_fitness = fitness
            self.best_config = x

    def random_unvisited(self, rng: np.random.Generator, attempts: int = 32) -> Configuration:
        """Uniform configuration among those not visited yet (any configuration in stochastic mode)"""
        for _ in range(attempts):
            x = self.space.random_configuration(rng)
            if not self.is_visited(x):
                return x

        visited = np.fromiter((self.space.flat_index(v) for v in self.budget.visited), dtype=np.int64)
        free = np.setdiff1d(np.arange(self.space.size()), visited, assume_unique=True)
        if not len(free):
            raise SpaceExhausted(self.budget.used, self.budget.max_evals)
        return self.space.configuration_at(int(rng.choice(free)))

    def result(self, algorithm: str, seed: int, hyperparameters: Optional[Dict[str, Any]] = None) -> OptimizerRun:
        best_fitness = FAIL_FITNESS
        if self.best_config is not None:
            try:
                best_fitness = self.cache.fitness_of(self.best_config)
            except MissingEntry:
                best_fitness = self.best_fitness
        return OptimizerRun(
            algorithm=algorithm,
            seed=seed,
            best_config=self.best_config,
            best_fitness=best_fitness,
            evals_used=self.budget.used,
            trace=list(self.trace),
            best_draw=None if self.best_config is None else self.best_fitness,
            hyperparameters=dict(hyperparameters or {}),
        )
