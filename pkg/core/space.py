import itertools
import json
import logging
import numbers
import os
from enum import Enum
from typing import Any, Dict, Iterator, List, NamedTuple, Sequence, Tuple

import numpy as np

from core.exceptions import InvalidConfiguration, InvalidSpaceDefinition, MalformedBitstring
from helpers.constants import SPACES_DIR

Configuration = Tuple[int, ...]  # Index vector into the parameter value lists


class NeighbourhoodKind(Enum):
    HAMMING = "hamming"
    ADJACENT = "adjacent"

    @classmethod
    def parse(cls, value) -> "NeighbourhoodKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"Unknown neighbourhood '{value}', expected one of {[k.value for k in cls]}")


class Parameter(NamedTuple):
    name: str
    values: tuple


def _is_numeric(values: Sequence[Any]) -> bool:
    return all(isinstance(v, numbers.Real) and not isinstance(v, bool) for v in values)


class ParameterSpace:
    """Finite Cartesian search space X = S1 x S2 x ... x Sn.

    Numeric value lists are sorted ascending so that list adjacency means adjacency in value.
    Categorical lists keep the order they were given in. Instances are immutable.
    """

    def __init__(self, parameters: Sequence[Tuple[str, Sequence[Any]]]):
        if not parameters:
            raise InvalidSpaceDefinition("A space needs at least one parameter")

        params = []
        seen = set()
        for name, values in parameters:
            if name in seen:
                raise InvalidSpaceDefinition(f"Parameter '{name}' is defined twice")
            seen.add(name)

            values = list(values)
            if not values:
                raise InvalidSpaceDefinition(f"Parameter '{name}' has no values")
            if len(set(values)) != len(values):
                raise InvalidSpaceDefinition(f"Parameter '{name}' has duplicated values")
            if _is_numeric(values):
                values = sorted(values)
            params.append(Parameter(str(name), tuple(values)))

        self._params: Tuple[Parameter, ...] = tuple(params)
        self._dims: Tuple[int, ...] = tuple(len(p.values) for p in params)
        strides = [1] * len(self._dims)
        for i in range(len(self._dims) - 2, -1, -1):
            strides[i] = strides[i + 1] * self._dims[i + 1]
        self._strides: Tuple[int, ...] = tuple(strides)
        self._lookup = [{v: j for j, v in enumerate(p.values)} for p in params]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ParameterSpace":
        try:
            return cls([(p["name"], p["values"]) for p in data["parameters"]])
        except (KeyError, TypeError) as e:
            raise InvalidSpaceDefinition(f"Malformed space definition: {e}")

    @classmethod
    def load(cls, path: str) -> "ParameterSpace":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    @classmethod
    def fixture(cls, name: str) -> "ParameterSpace":
        """Load one of the bundled kernel spaces: convolution, convolution_mi50, gemm, pnpoly"""
        return cls.load(os.path.join(SPACES_DIR, f"{name}.json"))

    def to_dict(self) -> Dict[str, Any]:
        return {"parameters": [{"name": p.name, "values": list(p.values)} for p in self._params]}

    @property
    def parameters(self) -> Tuple[Parameter, ...]:
        return self._params

    @property
    def names(self) -> List[str]:
        return [p.name for p in self._params]

    @property
    def dims(self) -> Tuple[int, ...]:
        return self._dims

    @property
    def n(self) -> int:
        return len(self._params)

    def size(self) -> int:
        return int(np.prod(self._dims, dtype=np.int64))

    def __len__(self):
        return self.size()

    def __eq__(self, other):
        return isinstance(other, ParameterSpace) and self._params == other._params

    def __hash__(self):
        return hash(self._params)

    def __repr__(self):
        sizes = "x".join(str(d) for d in self._dims)
        return f"ParameterSpace({self.n} parameters, {sizes} = {self.size()} points)"

    def validate(self, x: Sequence[int]) -> Configuration:
        if len(x) != self.n:
            raise InvalidConfiguration(tuple(x), f"expected {self.n} indices, got {len(x)}")
        for i, (xi, m) in enumerate(zip(x, self._dims)):
            if isinstance(xi, bool) or not isinstance(xi, numbers.Integral) or not 0 <= xi < m:
                raise InvalidConfiguration(tuple(x), f"index {xi!r} of dimension {i} outside [0, {m})")
        return tuple(int(xi) for xi in x)

    def to_values(self, x: Sequence[int]) -> tuple:
        x = self.validate(x)
        return tuple(p.values[xi] for p, xi in zip(self._params, x))

    def from_values(self, values: Sequence[Any]) -> Configuration:
        if len(values) != self.n:
            raise InvalidConfiguration(tuple(values), f"expected {self.n} values, got {len(values)}")
        x = []
        for i, (v, lookup) in enumerate(zip(values, self._lookup)):
            if v not in lookup:
                raise InvalidConfiguration(tuple(values), f"value {v!r} not allowed for '{self._params[i].name}'")
            x.append(lookup[v])
        return tuple(x)

    def flat_index(self, x: Sequence[int]) -> int:
        return sum(xi * s for xi, s in zip(x, self._strides))

    def configuration_at(self, index: int) -> Configuration:
        if not 0 <= index < self.size():
            raise InvalidConfiguration(index, f"flat index outside [0, {self.size()})")
        return tuple(int(i) for i in np.unravel_index(index, self._dims))

    def coordinates(self) -> np.ndarray:
        """Index vectors of every configuration, shape (n, size), in enumeration order"""
        return np.indices(self._dims).reshape(self.n, -1)

    def enumerate(self) -> Iterator[Configuration]:
        """Every configuration exactly once, lexicographic in index vectors"""
        return itertools.product(*(range(m) for m in self._dims))

    def random_configuration(self, rng: np.random.Generator) -> Configuration:
        return tuple(int(rng.integers(m)) for m in self._dims)

    def neighbours(self, x: Sequence[int], kind: NeighbourhoodKind) -> List[Configuration]:
        """Neighbours ordered by ascending dimension, then ascending index; x never included"""
        x = self.validate(x)
        result = []
        for i, m in enumerate(self._dims):
            if kind is NeighbourhoodKind.HAMMING:
                candidates = range(m)
            else:
                candidates = (x[i] - 1, x[i] + 1)
            for j in candidates:
                if j == x[i] or not 0 <= j < m:
                    continue
                result.append(x[:i] + (j,) + x[i + 1:])
        return result

    def bitstring_encode(self, x: Sequence[int]) -> str:
        """One-hot segment of length |S_i| per parameter, concatenated"""
        x = self.validate(x)
        return "".join("".join("1" if j == xi else "0" for j in range(m)) for xi, m in zip(x, self._dims))

    def bitstring_decode(self, bits: str) -> Configuration:
        bits = bits.replace("|", "")
        total = sum(self._dims)
        if len(bits) != total or set(bits) - {"0", "1"}:
            raise InvalidConfiguration(bits, f"expected {total} binary digits")

        x = []
        offset = 0
        for segment, m in enumerate(self._dims):
            chunk = bits[offset:offset + m]
            if chunk.count("1") != 1:
                raise MalformedBitstring(segment, chunk.count("1"))
            x.append(chunk.index("1"))
            offset += m
        return tuple(x)
