import pytest

from core.generators import RidgeProfile, generate_synthetic_kernel_space
from core.space import ParameterSpace
from optimizers import OptimizerSpec, algorithm_names, run_optimizer

SEEDS = range(15)
BUDGETS = [1, 7, 25, 60]

# Enough members to cover the 24-point bowl from the initial population
EXHAUST_HYPERPARAMETERS = {"gls": {"pop_size": 24}}


@pytest.fixture(scope="module")
def rugged_mi50():
    return generate_synthetic_kernel_space(ParameterSpace.fixture("convolution_mi50"), 0.1, RidgeProfile.RUGGED, seed=11)


@pytest.fixture(scope="module")
def rugged_pnpoly():
    return generate_synthetic_kernel_space(ParameterSpace.fixture("pnpoly"), 0.1, RidgeProfile.RUGGED, seed=12)


@pytest.mark.parametrize("budget", BUDGETS)
@pytest.mark.parametrize("algorithm", algorithm_names())
def test_every_evaluation_is_a_new_configuration_within_budget(algorithm, budget, synthetic_cache):
    for seed in SEEDS:
        run = run_optimizer(OptimizerSpec(algorithm, {}, seed=seed), synthetic_cache, max_evals=budget)
        configurations = [t.configuration for t in run.trace]
        assert run.evals_used == len(configurations) == len(set(configurations)) <= budget
        if budget == 1:
            assert run.evals_used == 1
        assert [t.eval_index for t in run.trace] == list(range(1, run.evals_used + 1))


@pytest.mark.parametrize("algorithm", algorithm_names())
def test_every_algorithm_exhausts_a_small_space(algorithm, bowl_cache):
    spec = OptimizerSpec(algorithm, EXHAUST_HYPERPARAMETERS.get(algorithm, {}), seed=3)
    run = run_optimizer(spec, bowl_cache, max_evals=500)
    assert run.evals_used == bowl_cache.size
    assert run.best_fitness == bowl_cache.f_opt


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("algorithm", ["random", "first-mls", "dual-annealing"])
def test_budget_equal_to_space_size_finds_the_optimum(algorithm, seed, rugged_mi50):
    run = run_optimizer(OptimizerSpec(algorithm, {}, seed=seed), rugged_mi50, max_evals=rugged_mi50.size)
    assert run.evals_used == rugged_mi50.size
    assert rugged_mi50.fraction_of_optimum(run.best_fitness) == 1.0


@pytest.mark.parametrize("seed", range(2))
@pytest.mark.parametrize("algorithm", ["random", "first-mls"])
def test_budget_equal_to_space_size_finds_the_optimum_on_pnpoly(algorithm, seed, rugged_pnpoly):
    run = run_optimizer(OptimizerSpec(algorithm, {}, seed=seed), rugged_pnpoly, max_evals=rugged_pnpoly.size)
    assert run.evals_used == rugged_pnpoly.size
    assert rugged_pnpoly.fraction_of_optimum(run.best_fitness) == 1.0
