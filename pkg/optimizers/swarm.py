from typing import Tuple

import numpy as np
from scipy.optimize import differential_evolution

from core.fitness import FitnessSource
from optimizers.base import Hyperparameter, Optimizer, register
from optimizers.continuous import SCIPY_ITERATIONS, STAGNATION_WINDOW, SnappedObjective, Stagnated, scipy_seed

INERTIA = 0.729
COGNITIVE = 1.49445
SOCIAL = 1.49445
VELOCITY_SCALE = 0.1  # Initial velocities drawn in +-VELOCITY_SCALE of the unit box

DE_STRATEGIES = ("best1bin", "best1exp", "best2bin", "best2exp")
MIN_DE_MEMBERS = 5


def ring_neighbourhood(index: int, swarm_size: int, neighbours: int) -> np.ndarray:
    """Indices of the `neighbours` ring members centred on index (itself included)"""
    neighbours = min(neighbours, swarm_size)
    start = index - neighbours // 2
    return np.arange(start, start + neighbours) % swarm_size


def pso_step(
    positions: np.ndarray,
    velocities: np.ndarray,
    personal_best: np.ndarray,
    local_best: np.ndarray,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray]:
    """Constriction velocity update followed by clamping the positions to the unit box"""
    r1 = rng.random(positions.shape)
    r2 = rng.random(positions.shape)
    velocities = (
        INERTIA * velocities
        + COGNITIVE * r1 * (personal_best - positions)
        + SOCIAL * r2 * (local_best - positions)
    )
    return np.clip(positions + velocities, 0.0, 1.0), velocities


@register("pso")
class ParticleSwarm(Optimizer):
    schema = (
        Hyperparameter("num_particles", "int", 20, low=1),
        Hyperparameter("neighbours_evaluated", "int", 10, low=1),
    )

    def search(self, fitness: FitnessSource, rng: np.random.Generator):
        size = self.hyperparameters["num_particles"]
        neighbours = self.hyperparameters["neighbours_evaluated"]
        objective = SnappedObjective(fitness, window=max(STAGNATION_WINDOW, 2 * size))
        rings = [ring_neighbourhood(i, size, neighbours) for i in range(size)]

        positions = np.empty((0, fitness.space.n))
        while True:
            try:
                if len(positions) == 0:
                    positions, velocities, best, best_f = self._initialize(objective, size, rng)
                local = np.array([best[ring[np.argmin(best_f[ring])]] for ring in rings])
                positions, velocities = pso_step(positions, velocities, best, local, rng)
                for i in range(size):
                    value = objective(positions[i])
                    if value < best_f[i]:
                        best[i], best_f[i] = positions[i], value
            except Stagnated:
                self.logger.debug("Swarm stagnated, scattering the particles")
                positions = np.empty((0, fitness.space.n))

    def _initialize(self, objective: SnappedObjective, size: int, rng: np.random.Generator):
        positions = np.array([objective.fresh_point(rng) for _ in range(size)])
        velocities = rng.uniform(-VELOCITY_SCALE, VELOCITY_SCALE, positions.shape)
        values = np.array([objective(p) for p in positions])
        return positions, velocities, positions.copy(), values



@register("differential-evolution")
class DifferentialEvolution(Optimizer):
    """scipy differential evolution with dithered mutation and greedy one-to-one replacement.

    scipy sizes the population as pop_size * n members, at least MIN_DE_MEMBERS. Every
    (re)start seeds a Latin hypercube population whose first member is an unvisited cell.
    """

    schema = (
        Hyperparameter("pop_size", "int", 4, low=1),
        Hyperparameter("method", "str", "best1bin", choices=DE_STRATEGIES),
        Hyperparameter("recombination", "float", 0.7, low=0.0, high=1.0),
        Hyperparameter("mutation", "range", [0.2, 0.7], low=0.0, high=1.99),
    )

    def members(self, dim: int) -> int:
        return max(MIN_DE_MEMBERS, self.hyperparameters["pop_size"] * dim)

    @property
    def mutation(self):
        low, high = self.hyperparameters["mutation"]
        return (low, high) if high > low else low

    def search(self, fitness: FitnessSource, rng: np.random.Generator):
        h = self.hyperparameters
        objective = SnappedObjective(fitness, window=max(STAGNATION_WINDOW, 2 * self.members(fitness.space.n)))

        while True:
            try:
                result = differential_evolution(
                    objective,
                    objective.bounds,
                    strategy=h["method"],
                    maxiter=SCIPY_ITERATIONS,
                    popsize=h["pop_size"],
                    tol=0.0,
                    mutation=self.mutation,
                    recombination=h["recombination"],
                    seed=scipy_seed(rng),
                    polish=False,
                    init="latinhypercube",
                    x0=objective.fresh_point(rng),
                )
                self.logger.debug(f"Population converged at {result.fun} after {result.nit} generations, restarting")
            except Stagnated:
                self.logger.debug("Population stagnated, restarting")
