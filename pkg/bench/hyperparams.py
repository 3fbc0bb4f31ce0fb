import itertools
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from core.cache import SearchSpaceCache
from core.exceptions import EmptySelection, InvalidParameter
from core.fitness import FitnessMode
from helpers.constants import DEFAULT_GRID_REPETITIONS
from optimizers import OptimizerSpec, optimizer_class, run_optimizer
from optimizers.base import resolve_hyperparameters
from optimizers.defaults import HyperparameterDefaults

DEFAULT_K_MAX = 16.0
DEFAULT_RESOLUTION = 1e-3

logger = logging.getLogger(__name__)


def setting_key(setting: Dict[str, Any]) -> str:
    return json.dumps(setting, sort_keys=True)


class GridEntry(NamedTuple):
    problem: str  # Cache label, kernel@device
    budget: int
    setting: str  # setting_key of the hyperparameters
    mean: float
    std: float


def expand_grid(grid: Dict[str, Sequence[Any]]) -> List[Dict[str, Any]]:
    names = sorted(grid)
    return [dict(zip(names, values)) for values in itertools.product(*(grid[name] for name in names))]


def run_hyperparameter_grid(
    algorithm: str,
    grid: Dict[str, Sequence[Any]],
    caches: Sequence[SearchSpaceCache],
    budgets: Sequence[int],
    repetitions: int = DEFAULT_GRID_REPETITIONS,
    base_seed: int = 0,
    mode: FitnessMode = FitnessMode.DETERMINISTIC_MEAN,
) -> List[GridEntry]:
    """Mean and standard deviation of the best fitness of every grid setting per problem and budget.

    Each repetition runs once at the largest budget; smaller budgets read the prefix of its trace.
    """
    schema = optimizer_class(algorithm).schema
    settings = [resolve_hyperparameters(algorithm, schema, s) for s in expand_grid(grid)]
    top = max(budgets)
    entries = []
    for cache in caches:
        cache.require_complete()
        for setting in settings:
            best: Dict[int, List[float]] = defaultdict(list)
            for rep in range(repetitions):
                run = run_optimizer(OptimizerSpec(algorithm, setting, base_seed + rep), cache, top, mode)
                for budget in budgets:
                    best[budget].append(run.prefix(budget, cache).best_fitness)
            for budget in budgets:
                values = np.array(best[budget])
                std = values.std(ddof=1) if len(values) > 1 else 0.0
                entries.append(GridEntry(cache.metadata.label, budget, setting_key(setting), float(values.mean()), float(std)))
        logger.info(f"Grid of {len(settings)} {algorithm} settings done on {cache.metadata.label}")
    return entries


@dataclass
class Selection:
    budget: int
    setting: Dict[str, Any]
    k: float
    candidates: List[str]
    rank_sum: float


class _BudgetGrid:
    """Grid entries of one budget, restricted to the settings every problem has"""

    def __init__(self, entries: Iterable[GridEntry], budget: int):
        table: Dict[str, Dict[str, GridEntry]] = defaultdict(dict)
        for entry in entries:
            if entry.budget == budget:
                table[entry.problem][entry.setting] = entry
        if not table:
            raise InvalidParameter(f"No grid results at budget {budget}")
        self.problems = sorted(table)
        self.settings = sorted(set.intersection(*(set(table[p]) for p in self.problems)))
        if not self.settings:
            raise InvalidParameter(f"No hyperparameter setting was run on every problem at budget {budget}")
        self.table = table

    def best(self, problem: str) -> GridEntry:
        return min((self.table[problem][s] for s in self.settings), key=lambda e: (e.mean, e.setting))

    def required_k(self, problem: str, setting: str) -> float:
        best = self.best(problem)
        gap = self.table[problem][setting].mean - best.mean
        if gap <= 0:
            return 0.0
        return gap / best.std if best.std > 0 else math.inf

    def admitted(self, k: float) -> List[str]:
        bounds = {p: (self.best(p).mean, self.best(p).std) for p in self.problems}
        return [
            s
            for s in self.settings
            if all(self.table[p][s].mean <= bounds[p][0] + k * bounds[p][1] for p in self.problems)
        ]

    def nearest_miss(self) -> Dict[str, Any]:
        needed = {s: {p: self.required_k(p, s) for p in self.problems} for s in self.settings}
        setting = min(self.settings, key=lambda s: (max(needed[s].values()), s))
        return {"setting": setting, "required_k": needed[setting]}


def minimal_admitting_k(entries: Iterable[GridEntry], budget: int) -> float:
    """Exact smallest k at which some setting is admitted for every problem"""
    grid = _BudgetGrid(entries, budget)
    return min(max(grid.required_k(p, s) for p in grid.problems) for s in grid.settings)


def select_hyperparameters(
    entries: Iterable[GridEntry],
    budget: int,
    k_max: float = DEFAULT_K_MAX,
    resolution: float = DEFAULT_RESOLUTION,
) -> Selection:
    """Setting admitted for every problem at the smallest k found by bisection over [0, k_max].

    A setting is admitted for a problem when its mean fitness is within k standard deviations of the
    problem's best setting. Several survivors are ordered by their rank sum over problems, then by key.
    """
    grid = _BudgetGrid(entries, budget)

    if grid.admitted(0.0):
        k = 0.0
    else:
        if not grid.admitted(k_max):
            raise EmptySelection(budget, k_max, grid.nearest_miss())
        lo, hi = 0.0, k_max
        while hi - lo > resolution:
            mid = (lo + hi) / 2
            if grid.admitted(mid):
                hi = mid
            else:
                lo = mid
        k = hi

    candidates = grid.admitted(k)
    ranks = np.zeros(len(candidates))
    for problem in grid.problems:
        ranks += rankdata([grid.table[problem][s].mean for s in candidates])
    order = sorted(range(len(candidates)), key=lambda i: (ranks[i], candidates[i]))
    chosen = order[0]
    logger.debug(f"Budget {budget}: k = {k:.4f}, {len(candidates)} candidates, chose {candidates[chosen]}")
    return Selection(budget, json.loads(candidates[chosen]), k, candidates, float(ranks[chosen]))


def select_defaults(
    algorithm: str,
    entries: Iterable[GridEntry],
    budgets: Sequence[int],
    defaults: Optional[HyperparameterDefaults] = None,
    k_max: float = DEFAULT_K_MAX,
    resolution: float = DEFAULT_RESOLUTION,
) -> HyperparameterDefaults:
    """Selections of every budget written into a defaults table"""
    entries = list(entries)
    defaults = defaults or HyperparameterDefaults({})
    for budget in budgets:
        selection = select_hyperparameters(entries, budget, k_max, resolution)
        defaults.update(algorithm, budget, selection.setting)
        logger.info(f"{algorithm} at budget {budget}: {selection.setting} (k = {selection.k:.3f})")
    return defaults
