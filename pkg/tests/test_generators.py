import numpy as np
import pytest

from core.exceptions import InvalidParameter
from core.generators import RidgeProfile, generate_nk_landscape, generate_synthetic_kernel_space
from core.space import ParameterSpace
from helpers.constants import FAIL_FITNESS, SAMPLES_PER_CONFIGURATION


def test_nk_landscape(nk_cache):
    assert nk_cache.size == 2**8
    assert nk_cache.is_complete
    assert nk_cache.fail_count == 0
    assert ((nk_cache.fitness > 0) & (nk_cache.fitness < 1)).all()
    assert nk_cache.metadata.label == "nk-n8-k2-s7@synthetic"


def test_nk_landscape_is_seeded():
    a = generate_nk_landscape(6, 3, seed=11)
    b = generate_nk_landscape(6, 3, seed=11)
    c = generate_nk_landscape(6, 3, seed=12)
    np.testing.assert_array_equal(a.fitness, b.fitness)
    assert not np.array_equal(a.fitness, c.fitness)


def test_nk_landscape_rejects_bad_k():
    with pytest.raises(InvalidParameter):
        generate_nk_landscape(4, 4, seed=0)
    with pytest.raises(InvalidParameter):
        generate_nk_landscape(4, -1, seed=0)


def test_synthetic_kernel_space(synthetic_cache):
    assert synthetic_cache.size == 120
    assert synthetic_cache.metadata.device == "synthetic"
    assert 0 < synthetic_cache.fail_count < 40

    ok = np.flatnonzero(synthetic_cache.ok)
    for index in ok[:10]:
        samples = synthetic_cache.times[index]
        assert len(samples) == SAMPLES_PER_CONFIGURATION
        assert synthetic_cache.means[index] == pytest.approx(samples.mean())
    assert (synthetic_cache.fitness[~synthetic_cache.ok] == FAIL_FITNESS).all()


@pytest.mark.parametrize("profile", list(RidgeProfile))
def test_synthetic_profiles(profile):
    space = ParameterSpace([("a", list(range(5))), ("b", list(range(5)))])
    cache = generate_synthetic_kernel_space(space, 0.0, profile, seed=1, scale_ms=2.0)
    assert cache.fail_count == 0
    assert cache.f_opt >= 1.5


def test_synthetic_rejects_bad_fail_fraction(small_space):
    with pytest.raises(InvalidParameter):
        generate_synthetic_kernel_space(small_space, 1.0)
