import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, NamedTuple, Tuple

import networkx as nx
import numpy as np
from scipy import sparse

from core.cache import SearchSpaceCache
from core.exceptions import NodeLimitExceeded
from core.space import NeighbourhoodKind, ParameterSpace
from helpers.constants import DEFAULT_NODE_LIMIT, FAIL_FITNESS

logger = logging.getLogger(__name__)


class PointType(Enum):
    MINIMUM = "minimum"
    MAXIMUM = "maximum"
    SADDLE = "saddle"
    PLATEAU = "plateau"
    FAIL = "fail"


def neighbour_pairs(space: ParameterSpace, kind: NeighbourhoodKind) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """(source, neighbour) flat index arrays, one block per dimension and index offset"""
    coords = space.coordinates()
    flat = np.arange(space.size())
    stride = 1
    for dim in range(space.n - 1, -1, -1):
        m = space.dims[dim]
        offsets = (-1, 1) if kind is NeighbourhoodKind.ADJACENT else [d for d in range(1 - m, m) if d != 0]
        for offset in offsets:
            valid = (coords[dim] + offset >= 0) & (coords[dim] + offset < m)
            sources = flat[valid]
            yield sources, sources + offset * stride
        stride *= m


class PointCensus(NamedTuple):
    kind: NeighbourhoodKind
    point_types: np.ndarray  # PointType value per flat index
    counts: Dict[str, int]

    @property
    def minima(self) -> np.ndarray:
        return np.flatnonzero(self.point_types == PointType.MINIMUM.value)


def _require_enumerable(cache: SearchSpaceCache, node_limit: int):
    cache.require_complete()
    if cache.size > node_limit:
        raise NodeLimitExceeded(cache.size, node_limit)


def classify_points(
    cache: SearchSpaceCache, kind: NeighbourhoodKind = NeighbourhoodKind.ADJACENT, node_limit: int = DEFAULT_NODE_LIMIT
) -> PointCensus:
    """Label every configuration by comparing it with its neighbours.

    A minimum has only strictly worse neighbours. Fail points are labelled fail whatever their
    neighbours, so they never count as minima.
    """
    _require_enumerable(cache, node_limit)
    size = cache.size
    fitness = cache.fitness
    better = np.zeros(size, dtype=np.int64)
    worse = np.zeros(size, dtype=np.int64)
    equal = np.zeros(size, dtype=np.int64)
    for sources, targets in neighbour_pairs(cache.space, kind):
        diff = fitness[targets] - fitness[sources]
        better += np.bincount(sources[diff < 0], minlength=size)
        worse += np.bincount(sources[diff > 0], minlength=size)
        equal += np.bincount(sources[diff == 0], minlength=size)

    types = np.full(size, PointType.SADDLE.value, dtype=object)
    types[(better == 0) & (equal == 0)] = PointType.MINIMUM.value
    types[(better == 0) & (equal > 0)] = PointType.PLATEAU.value
    types[(better > 0) & (worse == 0)] = PointType.MAXIMUM.value
    types[fitness >= FAIL_FITNESS] = PointType.FAIL.value

    counts = {t.value: int((types == t.value).sum()) for t in PointType}
    logger.info(f"Census of {cache.metadata.label} ({kind.value}): {counts}")
    return PointCensus(kind, types, counts)


@dataclass
class FitnessFlowGraph:
    """Directed graph over all configurations with an edge u -> v when v is a strictly better neighbour of u"""

    space: ParameterSpace
    kind: NeighbourhoodKind
    fitness: np.ndarray
    sources: np.ndarray
    targets: np.ndarray
    census: PointCensus

    @property
    def size(self) -> int:
        return len(self.fitness)

    @property
    def edge_count(self) -> int:
        return len(self.sources)

    @property
    def minima(self) -> np.ndarray:
        return self.census.minima

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.sources, minlength=self.size)

    def sinks(self) -> np.ndarray:
        return np.flatnonzero(self.out_degree() == 0)

    def adjacency(self) -> sparse.csr_matrix:
        """A[u, v] = 1 for every edge u -> v"""
        data = np.ones(self.edge_count)
        return sparse.csr_matrix((data, (self.sources, self.targets)), shape=(self.size, self.size))

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph(neighbourhood=self.kind.value)
        for index in range(self.size):
            x = self.space.configuration_at(index)
            graph.add_node(
                index,
                configuration=",".join(str(v) for v in self.space.to_values(x)),
                fitness=float(self.fitness[index]),
                point_type=str(self.census.point_types[index]),
            )
        graph.add_edges_from(zip(self.sources.tolist(), self.targets.tolist()))
        return graph

    def is_acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self.to_networkx())


def build_ffg(
    cache: SearchSpaceCache, kind: NeighbourhoodKind = NeighbourhoodKind.ADJACENT, node_limit: int = DEFAULT_NODE_LIMIT
) -> FitnessFlowGraph:
    """Fitness flow graph of a complete cache: an edge to every strictly better neighbour.

    Sinks (out-degree 0) are the local minima plus the plateau points, which have equal but no
    better neighbours. Plateau points are sinks but not minima.
    """
    census = classify_points(cache, kind, node_limit)
    fitness = cache.fitness
    sources, targets = [], []
    for src, dst in neighbour_pairs(cache.space, kind):
        downhill = fitness[dst] < fitness[src]
        sources.append(src[downhill])
        targets.append(dst[downhill])

    sources = np.concatenate(sources) if sources else np.zeros(0, dtype=np.int64)
    targets = np.concatenate(targets) if targets else np.zeros(0, dtype=np.int64)
    order = np.lexsort((targets, sources))
    graph = FitnessFlowGraph(cache.space, kind, np.array(fitness), sources[order], targets[order], census)
    logger.info(f"Fitness flow graph of {cache.metadata.label}: {graph.size} nodes, {graph.edge_count} edges")
    return graph
