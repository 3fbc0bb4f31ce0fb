import math
from collections import deque
from typing import Deque, Set, Tuple

import numpy as np

from core.fitness import FitnessSource
from core.space import Configuration
from helpers.constants import FAIL_FITNESS
from helpers.conversions import fraction_count
from optimizers.base import Hyperparameter, Optimizer, mutate, neighbourhood_parameter, register
from optimizers.hill_climbing import HILL_CLIMBER_CHOICES, HillClimber, HillClimberKind


@register("random")
class RandomSampling(Optimizer):
    """Uniform draws; in deterministic mode only unseen configurations are drawn"""

    def search(self, fitness: FitnessSource, rng: np.random.Generator):
        while True:
            fitness.evaluate(fitness.random_unvisited(rng))


class MultiStartLocalSearch(Optimizer):
    climber_kind = HillClimberKind.RANDOM_FIRST

    def climber(self, fitness: FitnessSource, rng: np.random.Generator) -> HillClimber:
        return HillClimber(
            fitness,
            self.neighbourhood,
            rng,
            kind=self.climber_kind,
            restart_search=self.hyperparameters.get("restart_search", True),
        )

    def search(self, fitness: FitnessSource, rng: np.random.Generator):
        climber = self.climber(fitness, rng)
        while True:
            x = fitness.random_unvisited(rng)
            climber.climb(x, fitness.evaluate(x))


@register("first-mls")
class FirstMLS(MultiStartLocalSearch):
    schema = (Hyperparameter("restart_search", "bool", True), neighbourhood_parameter())


@register("best-mls")
class BestMLS(MultiStartLocalSearch):
    schema = (neighbourhood_parameter(),)
    climber_kind = HillClimberKind.BEST_IMPROVEMENT


class IteratedLocalSearch(MultiStartLocalSearch):
    """Climb, perturb part of the local minimum, climb again; restart after a run of failures"""

    def perturb(self, fitness: FitnessSource, x: Configuration, rng: np.random.Generator) -> Configuration:
        eligible = sum(1 for m in fitness.space.dims if m > 1)
        count = fraction_count(self.hyperparameters["perturbation_size"], eligible)
        return mutate(fitness.space, x, count, rng)

    def search(self, fitness: FitnessSource, rng: np.random.Generator):
        climber = self.climber(fitness, rng)
        exit_after = self.hyperparameters["exit_after_no_improve"]

        x = fitness.random_unvisited(rng)
        x, fx = climber.climb(x, fitness.evaluate(x))
        failures = 0
        while True:
            y = self.perturb(fitness, x, rng)
            y, fy = climber.climb(y, fitness.evaluate(y))
            if fy < fx:
                x, fx = y, fy
                failures = 0
                continue

            failures += 1
            if failures >= exit_after:
                self.logger.debug(f"No improvement for {failures} cycles, restarting")
                x = fitness.random_unvisited(rng)
                x, fx = climber.climb(x, fitness.evaluate(x))
                failures = 0


ILS_SCHEMA = (
    Hyperparameter("perturbation_size", "float", 1.0, low=1e-9, high=1.0),
    Hyperparameter("exit_after_no_improve", "int", 25, low=1),
)


@register("first-ils")
class FirstILS(IteratedLocalSearch):
    schema = ILS_SCHEMA + (neighbourhood_parameter(), Hyperparameter("restart_search", "bool", True))


@register("best-ils")
class BestILS(IteratedLocalSearch):
    schema = ILS_SCHEMA + (neighbourhood_parameter(),)
    climber_kind = HillClimberKind.BEST_IMPROVEMENT


class TabuMemory:
    """FIFO of recently visited configurations with O(1) membership"""

    def __init__(self, size: int):
        self.size = size
        self.queue: Deque[Configuration] = deque()
        self.members: Set[Configuration] = set()

    def __contains__(self, x: Configuration) -> bool:
        return x in self.members

    def __len__(self):
        return len(self.queue)

    def push(self, x: Configuration):
        if x in self.members:
            self.queue.remove(x)
        self.queue.append(x)
        self.members.add(x)
        while len(self.queue) > self.size:
            self.members.discard(self.queue.popleft())

    def clear(self):
        self.queue.clear()
        self.members.clear()


class TabuSearch(Optimizer):
    """Always moves to a non-tabu neighbour, improving or not; the incumbent is tracked by the fitness source"""

    schema = (Hyperparameter("tabu_size", "int", 2000, low=1), neighbourhood_parameter())
    best_move = True

    def search(self, fitness: FitnessSource, rng: np.random.Generator):
        memory = TabuMemory(self.hyperparameters["tabu_size"])
        x = fitness.random_unvisited(rng)
        fx = fitness.evaluate(x)
        memory.push(x)
        while True:
            candidates = [y for y in fitness.space.neighbours(x, self.neighbourhood) if y not in memory]
            if candidates:
                x, fx = self.step(fitness, candidates, fx, rng)
            else:
                x = self.escape(fitness, memory, rng)
                fx = fitness.evaluate(x)
            memory.push(x)

    def step(self, fitness: FitnessSource, candidates, fx: float, rng) -> Tuple[Configuration, float]:
        if self.best_move:
            scored = [(fitness.evaluate(y), i) for i, y in enumerate(candidates)]
            best_f, best_i = min(scored)
            return candidates[best_i], best_f

        y = candidates[int(rng.integers(len(candidates)))]
        return y, fitness.evaluate(y)

    def escape(self, fitness: FitnessSource, memory: TabuMemory, rng: np.random.Generator) -> Configuration:
        """Uniform jump to a configuration outside the tabu list, clearing the list if nothing is left"""
        space = fitness.space
        if len(memory) >= space.size():
            self.logger.debug("Tabu list covers the whole space, clearing it")
            memory.clear()
            return space.random_configuration(rng)

        for _ in range(64):
            y = space.random_configuration(rng)
            if y not in memory:
                return y
        tabu = np.fromiter((space.flat_index(v) for v in memory.members), dtype=np.int64)
        free = np.setdiff1d(np.arange(space.size()), tabu)
        return space.configuration_at(int(rng.choice(free)))


@register("first-tabu")
class FirstTabu(TabuSearch):
    """Moves to the first non-tabu neighbour of a random scan, improving or not"""

    best_move = False


@register("best-tabu")
class BestTabu(TabuSearch):
    best_move = True


@register("simulated-annealing")
class SimulatedAnnealing(Optimizer):
    """Mutate, optionally climb, accept by the Metropolis rule under a geometric schedule.

    Fitness differences are divided by the first feasible fitness seen, so the default
    temperature works on any runtime scale.
    """

    schema = (
        Hyperparameter("explore", "float", 1.0, low=1e-9, high=1.0),
        Hyperparameter("hill_climber", "str", "RandomFirst", choices=HILL_CLIMBER_CHOICES),
        neighbourhood_parameter(),
        Hyperparameter("initial_temperature", "float", 1.0, low=0.0),
        Hyperparameter("cooling", "float", 0.95, low=0.0, high=1.0),
    )

    @staticmethod
    def acceptance_probability(delta: float, temperature: float) -> float:
        if delta <= 0:
            return 1.0
        if temperature <= 0:
            return 0.0
        return math.exp(-delta / temperature)

    def search(self, fitness: FitnessSource, rng: np.random.Generator):
        space = fitness.space
        climber = HillClimber(fitness, self.neighbourhood, rng, kind=HillClimberKind.parse(self.hyperparameters["hill_climber"]))
        eligible = sum(1 for m in space.dims if m > 1)
        count = fraction_count(self.hyperparameters["explore"], eligible)
        temperature = self.hyperparameters["initial_temperature"]
        cooling = self.hyperparameters["cooling"]

        x = fitness.random_unvisited(rng)
        x, fx = climber.climb(x, fitness.evaluate(x))
        scale = abs(fx) if 0 < abs(fx) < FAIL_FITNESS else None
        while True:
            y = mutate(space, x, count, rng)
            y, fy = climber.climb(y, fitness.evaluate(y))
            if scale is None and 0 < abs(fy) < FAIL_FITNESS:
                scale = abs(fy)

            delta = (fy - fx) / (scale or 1.0)
            if rng.random() < self.acceptance_probability(delta, temperature):
                x, fx = y, fy
            temperature *= cooling
