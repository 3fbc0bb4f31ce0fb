import logging
from enum import Enum

import numpy as np

from core.cache import CacheMetadata, SearchSpaceCache
from core.exceptions import InvalidParameter
from core.space import ParameterSpace
from helpers.constants import SAMPLES_PER_CONFIGURATION

logger = logging.getLogger(__name__)

MAX_NK_BITS = 24
SAMPLE_JITTER = 0.011  # Relative spread of repeated runtime measurements


class RidgeProfile(Enum):
    BOWL = "bowl"
    RIDGE = "ridge"
    RUGGED = "rugged"


def generate_nk_landscape(n: int, k: int, seed: int) -> SearchSpaceCache:
    """Randomized NK landscape over n binary parameters.

    Component i reads bit i and k other bits drawn without replacement; its table holds
    2^(k+1) uniform(0, 1) values. Fitness is the mean of the n components.
    """
    if not 0 <= k < n:
        raise InvalidParameter(f"NK landscape needs 0 <= K < N, got N={n}, K={k}")
    if n > MAX_NK_BITS:
        raise InvalidParameter(f"N={n} is above the enumerable limit of {MAX_NK_BITS} bits")

    rng = np.random.default_rng(seed)
    space = ParameterSpace([(f"b{i}", [0, 1]) for i in range(n)])
    bits = space.coordinates()  # (n, 2^n)

    fitness = np.zeros(space.size())
    for i in range(n):
        others = rng.choice([j for j in range(n) if j != i], size=k, replace=False)
        table = rng.random(2 ** (k + 1))
        context = bits[i].copy()
        for j in others:
            context = (context << 1) | bits[j]
        fitness += table[context]
    fitness /= n

    metadata = CacheMetadata(kernel=f"nk-n{n}-k{k}-s{seed}", device="synthetic")
    logger.info(f"Generated NK landscape N={n} K={k} seed={seed}")
    return SearchSpaceCache.from_fitness(space, fitness, metadata)


def _smooth_runtime(space: ParameterSpace, profile: RidgeProfile, rng: np.random.Generator) -> np.ndarray:
    coords = (space.coordinates() + 0.5) / np.asarray(space.dims)[:, None]  # Cell centres in [0, 1]
    centre = rng.random(space.n)[:, None]
    weights = rng.uniform(0.5, 2.0, space.n)[:, None]
    runtime = 1.0 + (weights * (coords - centre) ** 2).sum(axis=0)

    if profile is RidgeProfile.RIDGE:
        frequency = rng.integers(1, 4, space.n)[:, None]
        phase = rng.random(space.n)[:, None]
        runtime *= 1.0 + 0.3 * (np.sin(np.pi * (frequency * coords + phase)) ** 2).mean(axis=0)
    elif profile is RidgeProfile.RUGGED:
        runtime *= 1.0 + 0.4 * rng.random(space.size())
    return runtime


def generate_synthetic_kernel_space(
    space: ParameterSpace,
    fail_fraction: float,
    profile: RidgeProfile = RidgeProfile.RIDGE,
    seed: int = 0,
    scale_ms: float = 1.0,
) -> SearchSpaceCache:
    """Desk-scale stand-in for a measured GPU kernel cache.

    Every configuration fails with probability fail_fraction; the others get a smooth runtime
    with multiplicative noise and SAMPLES_PER_CONFIGURATION jittered samples whose average is the mean.
    """
    if not 0 <= fail_fraction < 1:
        raise InvalidParameter(f"fail_fraction must lie in [0, 1), got {fail_fraction}")
    profile = RidgeProfile(profile)

    rng = np.random.default_rng(seed)
    size = space.size()
    runtime = scale_ms * _smooth_runtime(space, profile, rng) * rng.lognormal(0.0, 0.05, size)
    failed = rng.random(size) < fail_fraction

    samples = runtime[:, None] * (1.0 + SAMPLE_JITTER * rng.standard_normal((size, SAMPLES_PER_CONFIGURATION)))
    samples = np.round(np.abs(samples), 9)
    means = samples.mean(axis=1)

    times = [None if bad else row for bad, row in zip(failed, samples)]
    metadata = CacheMetadata(kernel=f"synthetic-{profile.value}-s{seed}", device="synthetic")
    logger.info(f"Generated synthetic space of {size} points, {int(failed.sum())} failing")
    return SearchSpaceCache(space, np.where(failed, np.nan, means), ~failed, times=times, metadata=metadata)
