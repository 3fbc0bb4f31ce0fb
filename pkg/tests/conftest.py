import numpy as np
import pytest

from core.cache import CacheMetadata, SearchSpaceCache
from core.fitness import EvalBudget, FitnessMode, FitnessSource
from core.generators import RidgeProfile, generate_nk_landscape, generate_synthetic_kernel_space
from core.space import ParameterSpace


@pytest.fixture
def small_space():
    """24 points: two numeric parameters and a categorical one"""
    return ParameterSpace([("x", [4, 1, 3, 2]), ("y", [10, 20, 30]), ("mode", ["b", "a"])])


@pytest.fixture
def line_space():
    return ParameterSpace([("x", list(range(8)))])


@pytest.fixture
def monotone_cache(line_space):
    """Strictly decreasing along the only dimension; optimum 1.0 at index 7"""
    return SearchSpaceCache.from_fitness(line_space, [8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0], CacheMetadata("line", "cpu"))


@pytest.fixture
def bowl_cache(small_space):
    """Separable convex bowl, single minimum 1.0 at index vector (2, 1, 0)"""
    fitness = [1.0 + (x - 2) ** 2 + (y - 1) ** 2 + 0.5 * m for x, y, m in small_space.enumerate()]
    return SearchSpaceCache.from_fitness(small_space, fitness, CacheMetadata("bowl", "cpu"))


@pytest.fixture
def synthetic_cache():
    space = ParameterSpace([("a", list(range(6))), ("b", list(range(5))), ("c", list(range(4)))])
    return generate_synthetic_kernel_space(space, 0.1, RidgeProfile.RIDGE, seed=3)


@pytest.fixture
def nk_cache():
    return generate_nk_landscape(8, 2, seed=7)


@pytest.fixture
def cache_file(tmp_path, synthetic_cache):
    path = tmp_path / "synthetic.json"
    synthetic_cache.save(str(path))
    return str(path)


@pytest.fixture
def fitness_source():
    def make(cache, max_evals=10_000, mode=FitnessMode.DETERMINISTIC_MEAN, seed=0, **kwargs):
        return FitnessSource(cache, EvalBudget(max_evals), mode=mode, rng=np.random.default_rng(seed), **kwargs)

    return make
