import logging
from enum import Enum
from typing import Iterator, Tuple

import numpy as np

from core.fitness import FitnessSource
from core.space import Configuration, NeighbourhoodKind


class HillClimberKind(Enum):
    NONE = "None"
    RANDOM_FIRST = "RandomFirst"
    BEST_IMPROVEMENT = "BestImprovement"

    @classmethod
    def parse(cls, value) -> "HillClimberKind":
        if isinstance(value, cls):
            return value
        if value is None:
            return cls.NONE
        return cls(str(value))


HILL_CLIMBER_CHOICES = tuple(k.value for k in HillClimberKind)


class HillClimber:
    """Descends from a point until no neighbour is strictly better.

    RandomFirst walks the dimensions in a random permutation and, inside a dimension, the candidate
    values in random order, moving at the first strict improvement. With restart_search the scan
    starts over with a fresh permutation after every move; without it the scan carries on with the
    next dimension. The climb ends once every dimension has been scanned from the current point
    without improvement. BestImprovement evaluates the whole neighbourhood and moves to its strictly
    best member (lowest neighbour index on ties).
    """

    def __init__(
        self,
        fitness: FitnessSource,
        neighbourhood: NeighbourhoodKind,
        rng: np.random.Generator,
        kind: HillClimberKind = HillClimberKind.RANDOM_FIRST,
        restart_search: bool = True,
    ):
        self.fitness = fitness
        self.space = fitness.space
        self.neighbourhood = neighbourhood
        self.rng = rng
        self.kind = kind
        self.restart_search = restart_search
        self.logger = logging.getLogger(__name__)

    def climb(self, x: Configuration, fx: float) -> Tuple[Configuration, float]:
        if self.kind is HillClimberKind.RANDOM_FIRST:
            return self._first_improvement(x, fx)
        if self.kind is HillClimberKind.BEST_IMPROVEMENT:
            return self._best_improvement(x, fx)
        return x, fx

    def candidates(self, x: Configuration, dim: int) -> Iterator[Configuration]:
        """Neighbours of x differing in dimension dim, in random order"""
        m = self.space.dims[dim]
        if self.neighbourhood is NeighbourhoodKind.HAMMING:
            values = [j for j in range(m) if j != x[dim]]
        else:
            values = [j for j in (x[dim] - 1, x[dim] + 1) if 0 <= j < m]
        for j in self.rng.permutation(values) if len(values) > 1 else values:
            yield x[:dim] + (int(j),) + x[dim + 1:]

    def _first_improvement(self, x: Configuration, fx: float) -> Tuple[Configuration, float]:
        n = self.space.n
        order = self.rng.permutation(n)
        position = 0
        unimproved = 0
        moves = 0
        while unimproved < n:
            dim = int(order[position % n])
            moved = False
            for y in self.candidates(x, dim):
                fy = self.fitness.evaluate(y)
                if fy < fx:
                    x, fx = y, fy
                    moved = True
                    break

            if not moved:
                unimproved += 1
                position += 1
                continue

            moves += 1
            unimproved = 0
            if self.restart_search:
                order = self.rng.permutation(n)
                position = 0
            else:
                position += 1
        self.logger.debug(f"First-improvement climb ended after {moves} moves at {fx}")
        return x, fx

    def _best_improvement(self, x: Configuration, fx: float) -> Tuple[Configuration, float]:
        while True:
            best, best_f = None, fx
            for y in self.space.neighbours(x, self.neighbourhood):
                fy = self.fitness.evaluate(y)
                if fy < best_f:
                    best, best_f = y, fy
            if best is None:
                return x, fx
            x, fx = best, best_f
