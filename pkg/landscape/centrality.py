import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.stats import spearmanr

from core.cache import SearchSpaceCache
from core.exceptions import DegenerateCentrality, InvalidParameter, PageRankNotConverged
from core.space import NeighbourhoodKind
from helpers.constants import CENTRALITY_P_MAX, DEFAULT_DAMPING, DEFAULT_NODE_LIMIT
from helpers.conversions import percent_to_fraction
from landscape.flow_graph import FitnessFlowGraph, build_ffg

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITERATIONS = 100_000


def pagerank_matrix(
    adjacency: sparse.spmatrix,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITERATIONS,
) -> np.ndarray:
    """Power iteration on the column-stochastic transpose of a row-source adjacency matrix.

    Rank lost through dangling nodes and through damping is spread uniformly over all nodes.
    """
    if not 0 <= damping <= 1:
        raise InvalidParameter(f"Damping must lie in [0, 1], got {damping}")
    size = adjacency.shape[0]
    if size == 0:
        raise InvalidParameter("PageRank of an empty graph")

    out_degree = np.asarray(adjacency.sum(axis=1)).ravel()
    inverse = np.divide(1.0, out_degree, out=np.zeros(size), where=out_degree > 0)
    transition = sparse.csr_matrix(adjacency.multiply(inverse[:, None]).T)

    rank = np.full(size, 1.0 / size)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        updated = damping * transition.dot(rank)
        updated += (1.0 - updated.sum()) / size
        residual = float(np.abs(updated - rank).sum())
        rank = updated
        if residual < tol:
            logger.debug(f"PageRank converged after {iteration} iterations (residual {residual:.2e})")
            return rank / rank.sum()
    raise PageRankNotConverged(max_iter, residual)


def pagerank(
    graph: FitnessFlowGraph,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITERATIONS,
) -> np.ndarray:
    return pagerank_matrix(graph.adjacency(), damping, tol, max_iter)


def proportion_of_centrality(minima_fitness: Sequence[float], minima_rank: Sequence[float], f_opt: float, p: float) -> float:
    """Share of the minima's centrality held by minima within (1 + p) f_opt; p = 0 keeps exactly the global minima"""
    minima_fitness = np.asarray(minima_fitness, dtype=float)
    minima_rank = np.asarray(minima_rank, dtype=float)
    total = minima_rank.sum()
    if len(minima_rank) == 0 or total <= 0:
        raise DegenerateCentrality("Local minima hold no centrality; the landscape has no usable minima")

    if p == 0:
        inside = minima_fitness <= f_opt
    else:
        inside = minima_fitness < (1.0 + p) * f_opt
    return float(minima_rank[inside].sum() / total)


class MinimumRecord(NamedTuple):
    index: int
    configuration: Tuple[Any, ...]
    fitness: float
    fraction: float
    pagerank: float


@dataclass
class CentralityReport:
    cache_label: str
    neighbourhood: str
    damping: float
    f_opt: float
    minima: List[MinimumRecord]
    curve: List[Tuple[int, float]]
    census: Dict[str, int]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cache": self.cache_label,
            "neighbourhood": self.neighbourhood,
            "damping": self.damping,
            "f_opt": self.f_opt,
            "census": self.census,
            "metadata": self.metadata,
            "minima": [m._asdict() for m in self.minima],
            "proportion_of_centrality": [{"p": p, "C_p": c} for p, c in self.curve],
        }

    def write_json(self, path: str):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    def write_minima_csv(self, path: str):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["index", "configuration", "fitness", "fraction", "pagerank"])
            for m in self.minima:
                writer.writerow([m.index, ",".join(str(v) for v in m.configuration), m.fitness, m.fraction, m.pagerank])

    def write_curve_csv(self, path: str):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["p", "C_p"])
            writer.writerows(self.curve)


def centrality_report(
    cache: SearchSpaceCache,
    kind: NeighbourhoodKind = NeighbourhoodKind.ADJACENT,
    damping: float = DEFAULT_DAMPING,
    p_max: int = CENTRALITY_P_MAX,
    graph: Optional[FitnessFlowGraph] = None,
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> CentralityReport:
    """PageRank of the fitness flow graph and the C_p curve for p = 0, 1, ..., p_max percent"""
    graph = graph if graph is not None else build_ffg(cache, kind, node_limit)
    f_opt = cache.f_opt
    rank = pagerank(graph, damping)

    minima = [
        MinimumRecord(
            index=int(i),
            configuration=cache.space.to_values(cache.space.configuration_at(int(i))),
            fitness=float(graph.fitness[i]),
            fraction=cache.fraction_of_optimum(float(graph.fitness[i])),
            pagerank=float(rank[i]),
        )
        for i in graph.minima
    ]
    minima.sort(key=lambda m: (m.fitness, m.index))
    fitness = [m.fitness for m in minima]
    ranks = [m.pagerank for m in minima]
    curve = [(p, proportion_of_centrality(fitness, ranks, f_opt, percent_to_fraction(p))) for p in range(p_max + 1)]

    report = CentralityReport(
        cache_label=cache.metadata.label,
        neighbourhood=graph.kind.value,
        damping=damping,
        f_opt=f_opt,
        minima=minima,
        curve=curve,
        census=graph.census.counts,
        metadata={
            "sink_rule": "uniform teleport from dangling nodes",
            "minimum_rule": "all neighbours strictly worse; fail points excluded",
            "band_rule": "p = 0: fitness <= f_opt; p > 0: fitness < (1 + p) f_opt",
            "edges": graph.edge_count,
        },
    )
    logger.info(f"{cache.metadata.label}: {len(minima)} minima, C_0 = {curve[0][1]:.3f}, C_{p_max} = {curve[-1][1]:.3f}")
    return report


def minima_fraction_report(
    cache: SearchSpaceCache, kind: NeighbourhoodKind = NeighbourhoodKind.ADJACENT, graph: Optional[FitnessFlowGraph] = None
) -> np.ndarray:
    """f_opt / f over the local minima, in descending order"""
    graph = graph if graph is not None else build_ffg(cache, kind)
    f_opt = cache.f_opt
    return np.sort(f_opt / graph.fitness[graph.minima])[::-1]


def descent_arrival_probabilities(graph: FitnessFlowGraph) -> np.ndarray:
    """Exact arrival distribution of randomized first-improvement descents started uniformly.

    Each step moves to a uniformly chosen strictly better neighbour, which is where a first-improvement
    scan in random order ends up. Mass is pushed through the graph in decreasing fitness order.
    """
    size = graph.size
    adjacency = graph.adjacency()
    out_degree = np.diff(adjacency.indptr)
    mass = np.full(size, 1.0 / size)
    for node in np.argsort(-graph.fitness, kind="stable"):
        degree = out_degree[node]
        if degree:
            targets = adjacency.indices[adjacency.indptr[node]:adjacency.indptr[node + 1]]
            mass[targets] += mass[node] / degree
            mass[node] = 0.0
    return mass


def simulate_descents(graph: FitnessFlowGraph, walks: int, rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo estimate of descent_arrival_probabilities"""
    adjacency = graph.adjacency()
    counts = np.zeros(graph.size)
    for start in rng.integers(graph.size, size=walks):
        node = int(start)
        while adjacency.indptr[node + 1] > adjacency.indptr[node]:
            targets = adjacency.indices[adjacency.indptr[node]:adjacency.indptr[node + 1]]
            node = int(targets[rng.integers(len(targets))])
        counts[node] += 1
    return counts / walks


def descent_rank_correlation(graph: FitnessFlowGraph, rank: np.ndarray, arrivals: Optional[np.ndarray] = None) -> float:
    """Spearman correlation over the local minima between descent arrivals and PageRank"""
    arrivals = descent_arrival_probabilities(graph) if arrivals is None else arrivals
    minima = graph.minima
    if len(minima) < 2:
        return 1.0
    rho, _ = spearmanr(arrivals[minima], rank[minima])
    return float(rho)
