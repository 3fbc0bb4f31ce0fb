import json
import logging
import math
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from core.exceptions import (
    CacheFormatError,
    InvalidConfiguration,
    InvalidParameter,
    MissingEntry,
    NoFeasiblePoint,
    PartialCacheError,
)
from core.space import Configuration, ParameterSpace
from helpers.constants import FAIL_FITNESS
from helpers.conversions import configuration_key, parse_scalar, value_token

logger = logging.getLogger(__name__)


class CacheMetadata(NamedTuple):
    kernel: str = "unknown"
    device: str = "unknown"
    units: str = "ms"

    @property
    def label(self) -> str:
        return f"{self.kernel}@{self.device}"


class CacheEntry(NamedTuple):
    times: Optional[np.ndarray]
    mean: float
    ok: bool

    @property
    def fitness(self) -> float:
        return self.mean if self.ok else FAIL_FITNESS


class SearchSpaceCache:
    """Precomputed measurements for (ideally) every configuration of a space.

    Storage is dense by flat configuration index. Failed configurations keep ok=False and
    report FAIL_FITNESS. Treat instances as immutable once built.
    """

    def __init__(
        self,
        space: ParameterSpace,
        means: np.ndarray,
        ok: np.ndarray,
        times: Optional[List[Optional[np.ndarray]]] = None,
        present: Optional[np.ndarray] = None,
        metadata: Optional[CacheMetadata] = None,
    ):
        size = space.size()
        self.space = space
        self.metadata = metadata or CacheMetadata()
        self.means = np.asarray(means, dtype=float).reshape(size)
        self.ok = np.asarray(ok, dtype=bool).reshape(size)
        self.present = np.ones(size, dtype=bool) if present is None else np.asarray(present, dtype=bool)
        self.times = times if times is not None else [None] * size
        if len(self.times) != size:
            raise CacheFormatError(f"Expected {size} sample lists, got {len(self.times)}")

        self.fitness = np.where(self.ok, self.means, FAIL_FITNESS)
        self.fitness[~self.present] = np.nan
        self.fitness.setflags(write=False)

    @classmethod
    def from_fitness(cls, space: ParameterSpace, fitness: Sequence[float], metadata: Optional[CacheMetadata] = None):
        """Complete cache from one fitness per configuration; FAIL_FITNESS values become failed entries"""
        fitness = np.asarray(fitness, dtype=float)
        ok = fitness < FAIL_FITNESS
        times = [np.array([f]) if good else None for f, good in zip(fitness, ok)]
        return cls(space, np.where(ok, fitness, np.nan), ok, times=times, metadata=metadata)

    @property
    def is_complete(self) -> bool:
        return bool(self.present.all())

    @property
    def size(self) -> int:
        return self.space.size()

    @property
    def ok_count(self) -> int:
        return int((self.ok & self.present).sum())

    @property
    def fail_count(self) -> int:
        return int((~self.ok & self.present).sum())

    def require_complete(self):
        if not self.is_complete:
            raise PartialCacheError(int((~self.present).sum()), self.size)

    def entry(self, x: Configuration) -> CacheEntry:
        index = self.space.flat_index(self.space.validate(x))
        if not self.present[index]:
            raise MissingEntry(x)
        return CacheEntry(self.times[index], float(self.means[index]), bool(self.ok[index]))

    def fitness_of(self, x: Configuration) -> float:
        index = self.space.flat_index(self.space.validate(x))
        if not self.present[index]:
            raise MissingEntry(x)
        return float(self.fitness[index])

    @property
    def f_opt(self) -> float:
        feasible = self.ok & self.present
        if not feasible.any():
            raise NoFeasiblePoint()
        return float(self.means[feasible].min())

    def optimal_configurations(self) -> List[Configuration]:
        best = self.f_opt
        indices = np.flatnonzero(self.ok & self.present & (self.means == best))
        return [self.space.configuration_at(int(i)) for i in indices]

    def fraction_of_optimum(self, f: float) -> float:
        """f_opt / f, the share of the best runtime achieved by a found runtime f"""
        best = self.f_opt
        if not f >= best:
            raise InvalidParameter(f"Runtime {f} is below the optimum {best} of {self.metadata.label}")
        return best / f

    def to_dict(self) -> Dict[str, Any]:
        entries = {}
        for index, x in enumerate(self.space.enumerate()):
            if not self.present[index]:
                continue
            key = configuration_key(self.space.to_values(x))
            if self.ok[index]:
                times = self.times[index]
                entries[key] = {
                    "times": None if times is None else [float(t) for t in times],
                    "time": float(self.means[index]),
                }
            else:
                entries[key] = {"times": None, "time": None}
        return {"metadata": self.metadata._asdict(), "space": self.space.to_dict(), "cache": entries}

    def save(self, path: str):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)
        logger.info(f"Cache {self.metadata.label} saved to {path} ({self.size} points, {self.fail_count} failed)")

    @classmethod
    def load(cls, path: str) -> "SearchSpaceCache":
        with open(path) as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise CacheFormatError(f"{path} is not valid JSON: {e}")
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SearchSpaceCache":
        if "space" in data and "cache" in data:
            return _import_native(data)
        if "tune_params" in data and "cache" in data:
            return _import_kernel_tuner(data)
        raise CacheFormatError("Unrecognized cache layout: expected 'space' or 'tune_params' next to 'cache'")


class _CacheBuilder:
    def __init__(self, space: ParameterSpace, metadata: CacheMetadata):
        size = space.size()
        self.space = space
        self.metadata = metadata
        self.means = np.full(size, np.nan)
        self.ok = np.zeros(size, dtype=bool)
        self.present = np.zeros(size, dtype=bool)
        self.times: List[Optional[np.ndarray]] = [None] * size
        self.renormalized = 0
        self.tokens = [{value_token(v): j for j, v in enumerate(p.values)} for p in space.parameters]

    def configuration_from_key(self, key: str) -> Configuration:
        parts = key.split(",")
        if len(parts) != self.space.n:
            raise InvalidConfiguration(key, f"expected {self.space.n} comma separated values")
        x = []
        for part, tokens in zip(parts, self.tokens):
            token = value_token(parse_scalar(part))
            if token not in tokens:
                raise InvalidConfiguration(key, f"value '{part}' not in the parameter list")
            x.append(tokens[token])
        return tuple(x)

    def add(self, key: str, times: Any, time: Any):
        index = self.space.flat_index(self.configuration_from_key(key))
        self.present[index] = True

        samples = None
        if isinstance(times, list) and times and all(isinstance(t, (int, float)) for t in times):
            samples = np.asarray(times, dtype=float)
        is_number = isinstance(time, (int, float)) and not isinstance(time, bool) and math.isfinite(time)

        if not is_number and samples is None:
            self.ok[index] = False
            return
        if is_number and time >= FAIL_FITNESS:
            self.ok[index] = False
            return

        mean = float(time) if is_number else float(samples.mean())
        if samples is not None:
            average = float(samples.mean())
            if abs(mean - average) > 1e-9 * abs(average):
                self.renormalized += 1
            mean = average
        self.means[index] = mean
        self.ok[index] = True
        self.times[index] = samples if samples is not None else np.array([mean])

    def build(self) -> SearchSpaceCache:
        if self.renormalized:
            logger.warning(f"{self.renormalized} stored means differed from their samples; replaced by sample averages")
        missing = int((~self.present).sum())
        if missing:
            logger.warning(f"Cache {self.metadata.label} is partial: {missing} of {self.space.size()} configurations missing")
        return SearchSpaceCache(self.space, self.means, self.ok, self.times, self.present, self.metadata)


def _import_native(data: Dict[str, Any]) -> SearchSpaceCache:
    meta = data.get("metadata") or {}
    metadata = CacheMetadata(
        kernel=str(meta.get("kernel", "unknown")), device=str(meta.get("device", "unknown")), units=str(meta.get("units", "ms"))
    )
    builder = _CacheBuilder(ParameterSpace.from_dict(data["space"]), metadata)
    for key, record in data["cache"].items():
        record = record or {}
        builder.add(key, record.get("times"), record.get("time"))
    return builder.build()


def _import_kernel_tuner(data: Dict[str, Any]) -> SearchSpaceCache:
    """Published Kernel Tuner cache files: tune_params, comma joined keys, 'time' holding a mean or an error string"""
    tune_params = data["tune_params"]
    names = data.get("tune_params_keys") or list(tune_params)
    space = ParameterSpace([(name, tune_params[name]) for name in names])
    metadata = CacheMetadata(kernel=str(data.get("kernel_name", "unknown")), device=str(data.get("device_name", "unknown")))
    builder = _CacheBuilder(space, metadata)
    for key, record in data["cache"].items():
        if not isinstance(record, dict):
            raise CacheFormatError(f"Entry {key} is not an object")
        builder.add(key, record.get("times"), record.get("time"))
    return builder.build()
