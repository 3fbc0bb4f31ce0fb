import csv
import logging
from enum import Enum
from typing import Optional

import networkx as nx
import numpy as np
from graphviz import Digraph

from landscape.flow_graph import FitnessFlowGraph, PointType

logger = logging.getLogger(__name__)

COLOUR_FLOOR = 0.75  # Fractions of the optimum below this share one colour
FLOOD_COLOUR = "#4169e1"
MINIMUM_SIZE = 2.0
NODE_SIZE = 0.5


class ExportFormat(Enum):
    DOT = "dot"
    GRAPHML = "graphml"
    CSV = "csv"


def node_colour(fraction: float) -> str:
    """Green at the optimum shading to red at COLOUR_FLOOR; the flood colour below it"""
    if fraction < COLOUR_FLOOR:
        return FLOOD_COLOUR
    share = min(1.0, (fraction - COLOUR_FLOOR) / (1.0 - COLOUR_FLOOR))
    red = int(round(255 * (1.0 - share)))
    green = int(round(255 * share))
    return f"#{red:02x}{green:02x}00"


def node_size(point_type: str) -> float:
    return MINIMUM_SIZE if point_type == PointType.MINIMUM.value else NODE_SIZE


def _fractions(graph: FitnessFlowGraph, f_opt: float) -> np.ndarray:
    return f_opt / graph.fitness


def to_dot(graph: FitnessFlowGraph, f_opt: float, pagerank: Optional[np.ndarray] = None) -> Digraph:
    dot = Digraph(name="fitness_flow_graph", format="svg", node_attr={"style": "filled", "shape": "circle", "label": ""})
    dot.attr(neighbourhood=graph.kind.value)
    fractions = _fractions(graph, f_opt)
    for index in range(graph.size):
        point_type = str(graph.census.point_types[index])
        size = node_size(point_type)
        attributes = {
            "fillcolor": node_colour(fractions[index]),
            "width": str(size),
            "height": str(size),
            "tooltip": f"{graph.fitness[index]:g}",
        }
        if pagerank is not None:
            attributes["pagerank"] = f"{pagerank[index]:.6g}"
        dot.node(str(index), **attributes)
    for source, target in zip(graph.sources.tolist(), graph.targets.tolist()):
        dot.edge(str(source), str(target))
    return dot


def to_annotated_networkx(graph: FitnessFlowGraph, f_opt: float, pagerank: Optional[np.ndarray] = None) -> nx.DiGraph:
    annotated = graph.to_networkx()
    fractions = _fractions(graph, f_opt)
    for index, data in annotated.nodes(data=True):
        data["fraction"] = float(fractions[index])
        data["colour"] = node_colour(fractions[index])
        data["size"] = node_size(data["point_type"])
        if pagerank is not None:
            data["pagerank"] = float(pagerank[index])
    return annotated


def export_graph(
    graph: FitnessFlowGraph, path: str, fmt: ExportFormat, f_opt: float, pagerank: Optional[np.ndarray] = None
) -> str:
    fmt = ExportFormat(fmt)
    if fmt is ExportFormat.DOT:
        to_dot(graph, f_opt, pagerank).save(path)
    elif fmt is ExportFormat.GRAPHML:
        nx.write_graphml(to_annotated_networkx(graph, f_opt, pagerank), path)
    else:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["source", "target", "source_fitness", "target_fitness"])
            for source, target in zip(graph.sources.tolist(), graph.targets.tolist()):
                writer.writerow([source, target, graph.fitness[source], graph.fitness[target]])
    logger.info(f"Exported {graph.size} nodes and {graph.edge_count} edges as {fmt.value} to {path}")
    return path
