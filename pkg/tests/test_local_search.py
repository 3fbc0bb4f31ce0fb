import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.exceptions import InvalidHyperparameters
from core.fitness import EvalBudget, FitnessSource
from core.generators import generate_nk_landscape
from core.space import NeighbourhoodKind
from optimizers import OptimizerSpec, run_optimizer
from optimizers.base import mutate
from optimizers.hill_climbing import HillClimber, HillClimberKind
from optimizers.local_search import FirstILS, FirstTabu, SimulatedAnnealing, TabuMemory, TabuSearch


def is_local_minimum(cache, x, kind):
    fx = cache.fitness_of(x)
    return all(cache.fitness_of(y) >= fx for y in cache.space.neighbours(x, kind))


def test_climb_monotone_line(monotone_cache, fitness_source):
    fitness = fitness_source(monotone_cache)
    climber = HillClimber(fitness, NeighbourhoodKind.ADJACENT, np.random.default_rng(0))
    x, fx = climber.climb((0,), fitness.evaluate((0,)))
    assert x == (7,)
    assert fx == 1.0
    # Seven moves, one new point each
    assert fitness.budget.used == 8


def test_climb_from_local_minimum_ends_immediately(monotone_cache, fitness_source):
    fitness = fitness_source(monotone_cache)
    climber = HillClimber(fitness, NeighbourhoodKind.ADJACENT, np.random.default_rng(0))
    assert climber.climb((7,), fitness.evaluate((7,))) == ((7,), 1.0)
    assert fitness.budget.used == 2


def test_best_improvement_climb(bowl_cache, fitness_source):
    fitness = fitness_source(bowl_cache)
    climber = HillClimber(fitness, NeighbourhoodKind.HAMMING, np.random.default_rng(0), kind=HillClimberKind.BEST_IMPROVEMENT)
    x, fx = climber.climb((0, 0, 1), fitness.evaluate((0, 0, 1)))
    assert x == (2, 1, 0)
    assert fx == 1.0


def test_no_climber_returns_the_start(bowl_cache, fitness_source):
    fitness = fitness_source(bowl_cache)
    climber = HillClimber(fitness, NeighbourhoodKind.HAMMING, np.random.default_rng(0), kind=HillClimberKind.parse(None))
    assert climber.climb((0, 0, 0), 99.0) == ((0, 0, 0), 99.0)


@settings(max_examples=25, deadline=None)
@given(
    st.integers(min_value=0, max_value=2**8 - 1),
    st.integers(min_value=0, max_value=1000),
    st.sampled_from([HillClimberKind.RANDOM_FIRST, HillClimberKind.BEST_IMPROVEMENT]),
    st.booleans(),
)
def test_climb_ends_in_local_minimum(start, seed, kind, restart_search):
    cache = generate_nk_landscape(8, 3, seed=5)
    fitness = FitnessSource(cache, EvalBudget(10_000))
    climber = HillClimber(fitness, NeighbourhoodKind.HAMMING, np.random.default_rng(seed), kind, restart_search)
    x0 = cache.space.configuration_at(start)
    x, fx = climber.climb(x0, fitness.evaluate(x0))
    assert fx == cache.fitness_of(x)
    assert is_local_minimum(cache, x, NeighbourhoodKind.HAMMING)


def test_mutate_changes_exactly_count_dimensions(small_space):
    rng = np.random.default_rng(2)
    for count in (1, 2, 3):
        y = mutate(small_space, (0, 0, 0), count, rng)
        assert sum(1 for a, b in zip(y, (0, 0, 0)) if a != b) == count
    # A zero count leaves the point alone
    assert mutate(small_space, (0, 0, 0), 0, rng) == (0, 0, 0)


def test_ils_perturbation_size(bowl_cache, fitness_source):
    ils = FirstILS({"perturbation_size": 0.05, "exit_after_no_improve": 3})
    fitness = fitness_source(bowl_cache)
    y = ils.perturb(fitness, (1, 1, 1), np.random.default_rng(0))
    assert sum(1 for a, b in zip(y, (1, 1, 1)) if a != b) == 1


def test_tabu_memory():
    memory = TabuMemory(2)
    memory.push((0,))
    memory.push((1,))
    memory.push((2,))
    assert len(memory) == 2
    assert (0,) not in memory
    assert (1,) in memory and (2,) in memory

    # Pushing a member again refreshes it
    memory.push((1,))
    memory.push((3,))
    assert (1,) in memory and (2,) not in memory

    memory.clear()
    assert len(memory) == 0


def test_tabu_never_revisits_within_memory(monotone_cache, fitness_source):
    tabu = TabuSearch({"tabu_size": 100, "neighbourhood": "adjacent"}, seed=1)
    fitness = fitness_source(monotone_cache, max_evals=8)
    run = tabu.run(fitness)
    configurations = [t.configuration for t in run.trace]
    assert len(configurations) == len(set(configurations)) == 8
    assert run.best_fitness == 1.0


def test_first_tabu_takes_the_first_scanned_neighbour(bowl_cache, fitness_source):
    tabu = FirstTabu()
    x = (1, 1, 0)
    candidates = list(bowl_cache.space.neighbours(x, NeighbourhoodKind.HAMMING))
    fx = bowl_cache.fitness_of(x)
    moves = []
    for seed in range(60):
        fitness = fitness_source(bowl_cache)
        y, fy = tabu.step(fitness, candidates, fx, np.random.default_rng(seed))
        assert y in candidates
        assert fy == bowl_cache.fitness_of(y)
        assert fitness.budget.used == 1
        moves.append(fy)
    # Worsening moves are taken as readily as improving ones
    assert any(fy > fx for fy in moves)
    assert any(fy < fx for fy in moves)


def test_simulated_annealing_acceptance():
    assert SimulatedAnnealing.acceptance_probability(-1.0, 0.5) == 1.0
    assert SimulatedAnnealing.acceptance_probability(0.0, 0.0) == 1.0
    assert SimulatedAnnealing.acceptance_probability(1.0, 0.0) == 0.0
    assert SimulatedAnnealing.acceptance_probability(1.0, 1.0) == pytest.approx(np.exp(-1.0))


def test_hyperparameter_validation():
    with pytest.raises(InvalidHyperparameters) as ex_info:
        SimulatedAnnealing({"explore": 2.0, "hill_climber": "Steepest", "colour": "red"})
    problems = ex_info.value.problems
    assert len(problems) == 3
    assert any("colour" in p for p in problems)


def test_random_sampling_full_budget_finds_optimum(synthetic_cache):
    run = run_optimizer(OptimizerSpec("random", {}, seed=1), synthetic_cache, max_evals=synthetic_cache.size)
    assert synthetic_cache.fraction_of_optimum(run.best_fitness) == 1.0
    assert len({t.configuration for t in run.trace}) == synthetic_cache.size
