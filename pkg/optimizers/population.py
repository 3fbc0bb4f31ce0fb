import re
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from core.fitness import FitnessSource
from core.space import Configuration
from helpers.conversions import fraction_count
from optimizers.base import Hyperparameter, Optimizer, mutate, neighbourhood_parameter, register
from optimizers.hill_climbing import HILL_CLIMBER_CHOICES, HillClimber, HillClimberKind

REPRODUCTORS = ("uniform", "1point", "2point")
SELECTOR_PATTERN = re.compile(r"^(RTS|tour(\d+))$")


class Member(NamedTuple):
    configuration: Configuration
    fitness: float


def uniform_crossover(a: Configuration, b: Configuration, rng: np.random.Generator) -> Tuple[Configuration, Configuration]:
    mask = rng.random(len(a)) < 0.5
    first = tuple(int(x if m else y) for x, y, m in zip(a, b, mask))
    second = tuple(int(y if m else x) for x, y, m in zip(a, b, mask))
    return first, second


def one_point_crossover(a: Configuration, b: Configuration, cut: int) -> Tuple[Configuration, Configuration]:
    return tuple(a[:cut]) + tuple(b[cut:]), tuple(b[:cut]) + tuple(a[cut:])


def two_point_crossover(a: Configuration, b: Configuration, cuts: Tuple[int, int]) -> Tuple[Configuration, Configuration]:
    """Swap the segment [cuts[0], cuts[1]) between the parents"""
    i, j = sorted(cuts)
    return (
        tuple(a[:i]) + tuple(b[i:j]) + tuple(a[j:]),
        tuple(b[:i]) + tuple(a[i:j]) + tuple(b[j:]),
    )


def crossover(reproductor: str, a: Configuration, b: Configuration, rng: np.random.Generator):
    n = len(a)
    if reproductor == "uniform" or n < 2:
        return uniform_crossover(a, b, rng)
    if reproductor == "1point":
        return one_point_crossover(a, b, int(rng.integers(1, n)))
    cuts = rng.choice(np.arange(1, n + 1), size=2, replace=False)
    return two_point_crossover(a, b, (int(cuts[0]), int(cuts[1])))


def hamming_distance(a: Configuration, b: Configuration) -> int:
    return sum(1 for x, y in zip(a, b) if x != y)


def tournament_selection(pool: Sequence[Member], size: int, entrants: int, rng: np.random.Generator) -> List[Member]:
    """`size` tournaments over pool, each between `entrants` uniformly drawn members (with replacement)"""
    selected = []
    for _ in range(size):
        drawn = rng.integers(len(pool), size=entrants)
        winner = min(drawn, key=lambda i: (pool[i].fitness, i))
        selected.append(pool[int(winner)])
    return selected


def restricted_tournament_selection(
    population: Sequence[Member], children: Sequence[Member], window: int, rng: np.random.Generator
) -> List[Member]:
    """Each child meets the Hamming-closest of `window` drawn members and replaces it only if strictly better"""
    population = list(population)
    for child in children:
        drawn = rng.choice(len(population), size=min(window, len(population)), replace=False)
        closest = min(drawn, key=lambda i: (hamming_distance(population[i].configuration, child.configuration), i))
        if child.fitness < population[closest].fitness:
            population[closest] = child
    return population


class EvolutionarySearch(Optimizer):
    """Generational loop shared by the genetic algorithm and genetic local search"""

    def improve(self, fitness: FitnessSource, x: Configuration, rng: np.random.Generator) -> Member:
        raise NotImplementedError

    def vary(self, fitness: FitnessSource, child: Configuration, rng: np.random.Generator) -> Configuration:
        return child

    def select(self, population: List[Member], children: List[Member], rng: np.random.Generator) -> List[Member]:
        match = SELECTOR_PATTERN.match(self.hyperparameters["selector"])
        if match.group(2):
            return tournament_selection(population + children, len(population), int(match.group(2)), rng)
        return restricted_tournament_selection(population, children, len(population), rng)

    def search(self, fitness: FitnessSource, rng: np.random.Generator):
        pop_size = self.hyperparameters["pop_size"]
        reproductor = self.hyperparameters["reproductor"]
        population = [self.improve(fitness, fitness.random_unvisited(rng), rng) for _ in range(pop_size)]

        generation = 0
        while True:
            children: List[Member] = []
            while len(children) < pop_size:
                a, b = rng.integers(len(population), size=2)
                for child in crossover(reproductor, population[a].configuration, population[b].configuration, rng):
                    if len(children) < pop_size:
                        children.append(self.improve(fitness, self.vary(fitness, child, rng), rng))
            population = self.select(population, children, rng)
            generation += 1
            self.logger.debug(f"Generation {generation}: best member {min(m.fitness for m in population)}")


class SelectorParameter(Hyperparameter):
    def check(self, value):
        match = SELECTOR_PATTERN.match(str(value))
        if match is None or match.group(2) == "0":
            return value, f"selector must be RTS or tourK with K >= 1, got {value!r}"
        return value, None


@register("gls")
class GeneticLocalSearch(EvolutionarySearch):
    schema = (
        Hyperparameter("hill_climber", "str", "RandomFirst", choices=HILL_CLIMBER_CHOICES),
        Hyperparameter("pop_size", "int", 16, low=2),
        Hyperparameter("reproductor", "str", "uniform", choices=REPRODUCTORS),
        SelectorParameter("selector", "str", "RTS"),
        neighbourhood_parameter(),
    )

    def improve(self, fitness, x, rng) -> Member:
        climber = HillClimber(fitness, self.neighbourhood, rng, kind=HillClimberKind.parse(self.hyperparameters["hill_climber"]))
        return Member(*climber.climb(x, fitness.evaluate(x)))


@register("ga")
class GeneticAlgorithm(EvolutionarySearch):
    schema = (
        Hyperparameter("mutation", "float", 0.02, low=0.0, high=1.0),
        Hyperparameter("pop_size", "int", 40, low=2),
        Hyperparameter("reproductor", "str", "1point", choices=REPRODUCTORS),
        SelectorParameter("selector", "str", "tour8"),
    )

    def improve(self, fitness, x, rng) -> Member:
        return Member(x, fitness.evaluate(x))

    def vary(self, fitness, child, rng) -> Configuration:
        eligible = sum(1 for m in fitness.space.dims if m > 1)
        return mutate(fitness.space, child, fraction_count(self.hyperparameters["mutation"], eligible), rng)
