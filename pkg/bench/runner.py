import asyncio
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from aiofsm import StateMachine, transition
from bench.results import ResultRecord, ResultsFile, sort_records
from core.cache import SearchSpaceCache
from core.exceptions import InvalidParameter, MissingDefaults, UnknownAlgorithm
from core.fitness import FitnessMode
from helpers.constants import DEFAULT_BUDGETS, DEFAULT_REPETITIONS
from optimizers import ALGORITHMS, OptimizerSpec, run_optimizer
from optimizers.base import resolve_hyperparameters
from optimizers.defaults import HyperparameterDefaults


@dataclass
class AlgorithmEntry:
    name: str
    hyperparameters: Optional[Dict[str, Any]] = None  # Used at every budget instead of the defaults file


@dataclass
class ExperimentPlan:
    caches: List[str]
    algorithms: List[AlgorithmEntry]
    budgets: List[int] = field(default_factory=lambda: list(DEFAULT_BUDGETS))
    repetitions: int = DEFAULT_REPETITIONS
    mode: FitnessMode = FitnessMode.DETERMINISTIC_MEAN
    base_seed: int = 0
    nested: bool = True

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentPlan":
        algorithms = []
        for entry in data["algorithms"]:
            if isinstance(entry, str):
                algorithms.append(AlgorithmEntry(entry))
            else:
                algorithms.append(AlgorithmEntry(entry["name"], entry.get("hyperparameters")))
        return cls(
            caches=list(data["caches"]),
            algorithms=algorithms,
            budgets=[int(b) for b in data.get("budgets", DEFAULT_BUDGETS)],
            repetitions=int(data.get("repetitions", DEFAULT_REPETITIONS)),
            mode=FitnessMode.parse(data.get("mode", FitnessMode.DETERMINISTIC_MEAN)),
            base_seed=int(data.get("base_seed", 0)),
            nested=bool(data.get("nested", True)),
        )

    @classmethod
    def load(cls, path: str) -> "ExperimentPlan":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def seed(self, rep: int) -> int:
        return self.base_seed + rep


class CellTask(NamedTuple):
    """One optimizer run whose trace serves every budget in `budgets`"""

    cache_path: str
    algorithm: str
    hyperparameters: Dict[str, Any]
    budgets: Tuple[int, ...]
    rep: int
    seed: int
    mode: str


_CACHES: Dict[str, SearchSpaceCache] = {}


def load_caches(paths: List[str]):
    """Worker initializer: every worker process holds its own read-only copy of the caches"""
    for path in paths:
        if path not in _CACHES:
            _CACHES[path] = SearchSpaceCache.load(path)


def _cache(path: str) -> SearchSpaceCache:
    load_caches([path])
    return _CACHES[path]


def run_cell_task(task: CellTask) -> List[Dict[str, Any]]:
    cache = _cache(task.cache_path)
    spec = OptimizerSpec(task.algorithm, task.hyperparameters, seed=task.seed)
    run = run_optimizer(spec, cache, max(task.budgets), FitnessMode.parse(task.mode))

    records = []
    for budget in task.budgets:
        head = run.prefix(budget, cache)
        records.append(
            ResultRecord(
                kernel=cache.metadata.kernel,
                device=cache.metadata.device,
                cache=cache.metadata.label,
                algorithm=task.algorithm,
                budget=budget,
                rep=task.rep,
                seed=task.seed,
                best_fitness=head.best_fitness,
                fraction=cache.fraction_of_optimum(head.best_fitness),
                evals_used=head.evals_used,
            ).__dict__
        )
    return records


def independent_seed(seed: int, budget: int) -> int:
    return int(np.random.SeedSequence([seed, budget]).generate_state(1)[0])


def budget_groups(resolved: Dict[int, Dict[str, Any]]) -> List[Tuple[Tuple[int, ...], Dict[str, Any]]]:
    """Budgets sharing identical hyperparameters, so that one run's trace prefixes serve them all"""
    groups: Dict[str, List[int]] = {}
    for budget in sorted(resolved):
        groups.setdefault(json.dumps(resolved[budget], sort_keys=True), []).append(budget)
    return [(tuple(budgets), resolved[budgets[0]]) for budgets in groups.values()]


class AsyncTaskManagerMixin:
    def __init__(self):
        try:
            self.running_tasks
        except AttributeError:
            raise ValueError("Need to set a running_tasks: list instance variable")

    def add_new_bg_task(self, task):
        self.running_tasks.append(asyncio.ensure_future(task))

    async def terminate_running_tasks(self):
        for task in self.running_tasks:
            task.cancel()
            try:
                await task
            except (asyncio.CancelledError, Exception):
                pass
        self.running_tasks = []


class RunnerState(Enum):
    IDLE = "idle"
    RUNNING = "running"
    FINISHED = "finished"
    FAILED = "failed"


class ExperimentRunner(StateMachine, AsyncTaskManagerMixin):
    """Runs the cache x algorithm x budget x repetition matrix of a plan and appends it to a results file.

    Cells already present in the results file are skipped, so an interrupted run can be resumed.
    """

    def __init__(
        self,
        plan: ExperimentPlan,
        results_path: str,
        workers: int = 1,
        defaults: Optional[HyperparameterDefaults] = None,
    ):
        self.state = RunnerState.IDLE
        self.running_tasks = []
        StateMachine.__init__(self)
        AsyncTaskManagerMixin.__init__(self)
        self.plan = plan
        self.results = ResultsFile(results_path)
        self.workers = workers
        self.defaults = defaults or HyperparameterDefaults.load()
        self.caches: Dict[str, SearchSpaceCache] = {}
        self.logger = logging.getLogger(__name__)

    @property
    def is_finished(self) -> bool:
        return self.state == RunnerState.FINISHED

    @property
    def is_failed(self) -> bool:
        return self.state == RunnerState.FAILED

    def resolve(self) -> Dict[str, Dict[int, Dict[str, Any]]]:
        """Validated hyperparameters per algorithm and budget; every missing default is reported at once"""
        resolved: Dict[str, Dict[int, Dict[str, Any]]] = {}
        missing: Dict[str, List[int]] = {}
        for entry in self.plan.algorithms:
            if entry.name not in ALGORITHMS:
                raise UnknownAlgorithm(entry.name, ALGORITHMS)
            schema = ALGORITHMS[entry.name].schema
            resolved[entry.name] = {}
            for budget in self.plan.budgets:
                if entry.hyperparameters is not None:
                    values = entry.hyperparameters
                else:
                    try:
                        values = self.defaults.lookup(entry.name, budget)
                    except MissingDefaults:
                        missing.setdefault(entry.name, []).append(budget)
                        continue
                resolved[entry.name][budget] = resolve_hyperparameters(entry.name, schema, values)
        if missing:
            algorithm, budgets = next(iter(missing.items()))
            gaps = "; ".join(f"{a}: {b}" for a, b in missing.items())
            self.logger.error(f"Missing default hyperparameters: {gaps}")
            raise MissingDefaults(algorithm, budgets)
        return resolved

    @transition(source=RunnerState.IDLE, target=RunnerState.RUNNING, on_error=RunnerState.FAILED)
    def prepare(self) -> List[CellTask]:
        if self.plan.repetitions < 1 or not self.plan.budgets:
            raise InvalidParameter("A plan needs at least one budget and one repetition")
        resolved = self.resolve()
        for path in self.plan.caches:
            cache = _cache(path)
            cache.require_complete()
            self.caches[path] = cache

        done = self.results.keys()
        tasks = []
        for path, cache in self.caches.items():
            for algorithm, per_budget in resolved.items():
                for budgets, hyperparameters in budget_groups(per_budget):
                    for rep in range(self.plan.repetitions):
                        todo = tuple(b for b in budgets if (cache.metadata.label, algorithm, b, rep) not in done)
                        if not todo:
                            continue
                        seed = self.plan.seed(rep)
                        if self.plan.nested:
                            tasks.append(CellTask(path, algorithm, hyperparameters, todo, rep, seed, self.plan.mode.value))
                        else:
                            tasks.extend(
                                CellTask(path, algorithm, hyperparameters, (b,), rep, independent_seed(seed, b), self.plan.mode.value)
                                for b in todo
                            )
        self.logger.info(f"Prepared {len(tasks)} runs over {len(self.caches)} caches ({len(done)} cells already done)")
        return tasks

    @transition(source=RunnerState.RUNNING, target=RunnerState.FINISHED, on_error=RunnerState.FAILED)
    async def execute(self, tasks: List[CellTask]) -> List[ResultRecord]:
        if self.workers <= 1:
            rows = [row for task in tasks for row in run_cell_task(task)]
        else:
            rows = await self._execute_in_pool(tasks)

        records = sort_records(ResultRecord.from_dict(row) for row in rows)
        self.results.append(records)
        self.logger.info(f"Experiment finished: {len(records)} new cells")
        return records

    async def _execute_in_pool(self, tasks: List[CellTask]) -> List[Dict[str, Any]]:
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(self.workers, initializer=load_caches, initargs=(list(self.caches),)) as pool:
            for task in tasks:
                self.add_new_bg_task(loop.run_in_executor(pool, run_cell_task, task))
            try:
                batches = await asyncio.gather(*self.running_tasks)
            except Exception:
                await self.terminate_running_tasks()
                raise
        self.running_tasks = []
        return [row for batch in batches for row in batch]

    async def run(self) -> List[ResultRecord]:
        return await self.execute(self.prepare())


def run_experiment(
    plan: ExperimentPlan, results_path: str, workers: int = 1, defaults: Optional[HyperparameterDefaults] = None
) -> List[ResultRecord]:
    return asyncio.run(ExperimentRunner(plan, results_path, workers, defaults).run())
