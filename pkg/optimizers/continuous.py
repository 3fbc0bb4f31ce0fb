import logging
from enum import Enum
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from scipy.optimize import basinhopping, dual_annealing, minimize

from core.fitness import FitnessSource
from core.space import Configuration, ParameterSpace
from optimizers.base import Hyperparameter, Optimizer, register

HOP_STEP = 0.1
STAGNATION_WINDOW = 100  # Consecutive zero-cost evaluations before a restart
SCIPY_ITERATIONS = 10**6  # Iteration cap handed to scipy; the evaluation budget ends runs first

logger = logging.getLogger(__name__)


def grid_points(m: int) -> np.ndarray:
    """Cell centres B_i = (2i + 1) / 2m of m equal cells on [0, 1]"""
    return (2 * np.arange(m) + 1) / (2.0 * m)


def snap_indices(dims: Sequence[int], p: Sequence[float]) -> np.ndarray:
    """Index of the closest grid point per dimension; exactly between two points the lower index wins"""
    dims = np.asarray(dims)
    return np.clip(np.ceil(np.asarray(p, dtype=float) * dims) - 1, 0, dims - 1).astype(int)


def snap_index(m: int, y: float) -> int:
    return int(snap_indices([m], [y])[0])


def snap(values: Sequence, y: float):
    return values[snap_index(len(values), y)]


def snap_config(space: ParameterSpace, p: Sequence[float]) -> Configuration:
    return tuple(int(i) for i in snap_indices(space.dims, p))


def cell_centre(space: ParameterSpace, x: Configuration) -> np.ndarray:
    return (np.asarray(x, dtype=float) + 0.5) / np.asarray(space.dims, dtype=float)


def cell_widths(space: ParameterSpace) -> np.ndarray:
    return 1.0 / np.asarray(space.dims, dtype=float)


def scipy_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2**31 - 1))


class Stagnated(Exception):
    """Internal signal: the walk keeps landing on evaluated configurations"""


class SnappedObjective:
    """f(snap_config(p)) on the unit box, counting consecutive evaluations that cost no budget.

    This is the function handed to scipy. Budget accounting stays in the fitness source, so
    BudgetExhausted and Stagnated both unwind straight out of the scipy call.
    """

    def __init__(self, fitness: FitnessSource, window: int = STAGNATION_WINDOW):
        self.fitness = fitness
        self.space = fitness.space
        self.window = window
        self.idle = 0

    def __call__(self, p: np.ndarray) -> float:
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        used = self.fitness.budget.used
        value = self.fitness.evaluate(snap_config(self.space, p))
        if self.fitness.budget.used == used:
            self.idle += 1
            if self.idle > self.window:
                self.idle = 0
                raise Stagnated()
        else:
            self.idle = 0
        return value

    def fresh_point(self, rng: np.random.Generator) -> np.ndarray:
        return cell_centre(self.space, self.fitness.random_unvisited(rng))

    @property
    def bounds(self):
        return [(0.0, 1.0)] * self.space.n


class LocalMinimizerKind(Enum):
    NELDER_MEAD = "NelderMead"
    PATTERN_SEARCH = "PatternSearch"  # scipy's Powell direction-set search


METHOD_NAMES = ("Powell", "Nelder-Mead", "COBYLA", "SLSQP", "CG", "L-BFGS-B", "NelderMead", "PatternSearch")


def minimizer_for(method: str) -> LocalMinimizerKind:
    """Map a requested minimizer name onto one of the derivative-free minimizers"""
    if method in ("Powell", "PatternSearch"):
        return LocalMinimizerKind.PATTERN_SEARCH
    if method not in ("Nelder-Mead", "NelderMead"):
        logger.warning(f"Minimizer '{method}' is not available, using Nelder-Mead instead")
    return LocalMinimizerKind.NELDER_MEAD


def cell_nelder_mead(fun, x0, args=(), bounds=None, widths=None, **kwargs):
    """Bounded Nelder-Mead whose initial simplex spans one cell in every dimension.

    Passed to scipy as a custom `method`, so basin hopping and dual annealing can use it
    through minimizer_kwargs.
    """
    x0 = np.asarray(x0, dtype=float)
    simplex = [x0]
    for i, width in enumerate(widths):
        vertex = x0.copy()
        vertex[i] = vertex[i] + width if vertex[i] + width <= 1.0 else vertex[i] - width
        simplex.append(vertex)
    options = {"initial_simplex": np.array(simplex), "xatol": float(np.min(widths)) / 2, "fatol": 0.0}
    return minimize(fun, x0, args=args, method="Nelder-Mead", bounds=bounds, options=options)


def minimizer_kwargs(kind: LocalMinimizerKind, space: ParameterSpace) -> Dict[str, Any]:
    bounds = [(0.0, 1.0)] * space.n
    if kind is LocalMinimizerKind.PATTERN_SEARCH:
        return {"method": "Powell", "bounds": bounds}
    return {"method": cell_nelder_mead, "bounds": bounds, "options": {"widths": cell_widths(space)}}


def local_minimize(kind: LocalMinimizerKind, objective: SnappedObjective, x0: np.ndarray) -> Tuple[np.ndarray, float]:
    result = minimize(objective, x0, **minimizer_kwargs(kind, objective.space))
    return np.clip(result.x, 0.0, 1.0), float(result.fun)


def uniform_displacement(step: float, rng: np.random.Generator):
    """Basin-hopping step: uniform move of at most `step` per coordinate, clamped to the unit box"""

    def take_step(x: np.ndarray) -> np.ndarray:
        return np.clip(x + rng.uniform(-step, step, size=len(x)), 0.0, 1.0)

    return take_step


@register("basin-hopping")
class BasinHopping(Optimizer):
    """scipy basin hopping: displace, minimize locally, accept by the Metropolis rule at `temperature`"""

    schema = (
        Hyperparameter("method", "str", "Powell", choices=METHOD_NAMES),
        Hyperparameter("temperature", "float", 1.0, low=0.0),
        Hyperparameter("step_size", "float", HOP_STEP, low=0.0, high=1.0),
    )

    def search(self, fitness: FitnessSource, rng: np.random.Generator):
        h = self.hyperparameters
        objective = SnappedObjective(fitness)
        local = minimizer_kwargs(minimizer_for(h["method"]), fitness.space)

        while True:
            try:
                basinhopping(
                    objective,
                    objective.fresh_point(rng),
                    niter=SCIPY_ITERATIONS,
                    T=h["temperature"],
                    minimizer_kwargs=local,
                    take_step=uniform_displacement(h["step_size"], rng),
                    seed=scipy_seed(rng),
                )
            except Stagnated:
                self.logger.debug("Basin hopping stagnated, restarting from an unvisited cell")


@register("dual-annealing")
class DualAnnealing(Optimizer):
    """scipy dual annealing on the snapped objective.

    scipy restarts the schedule itself once the temperature falls below
    initial_temperature * restart_temperature_ratio. A stagnated or finished call starts
    over from an unvisited cell.
    """

    schema = (
        Hyperparameter("method", "str", "Powell", choices=METHOD_NAMES),
        Hyperparameter("visiting_param", "float", 2.62, low=1.01, high=2.99),
        Hyperparameter("acceptance_param", "float", -5.0, low=-1.0e4, high=-1.0e-4),
        Hyperparameter("initial_temperature", "float", 5230.0, low=0.01, high=5.0e4),
        Hyperparameter("restart_temperature_ratio", "float", 1.0e-5, low=1.0e-12, high=0.999),
    )

    def search(self, fitness: FitnessSource, rng: np.random.Generator):
        h = self.hyperparameters
        objective = SnappedObjective(fitness)
        local = minimizer_kwargs(minimizer_for(h["method"]), fitness.space)

        while True:
            try:
                dual_annealing(
                    objective,
                    objective.bounds,
                    maxiter=SCIPY_ITERATIONS,
                    minimizer_kwargs=local,
                    initial_temp=h["initial_temperature"],
                    restart_temp_ratio=h["restart_temperature_ratio"],
                    visit=h["visiting_param"],
                    accept=h["acceptance_param"],
                    seed=scipy_seed(rng),
                    x0=objective.fresh_point(rng),
                )
            except Stagnated:
                self.logger.debug("Dual annealing stagnated, restarting from an unvisited cell")
