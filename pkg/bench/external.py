import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from bench.results import ResultRecord
from core.cache import SearchSpaceCache
from core.exceptions import TraceParseError

TRACE_COLUMNS = ("algorithm", "cache", "budget", "rep", "best_fitness")

logger = logging.getLogger(__name__)


@dataclass
class ExternalImport:
    records: List[ResultRecord]
    repetitions: Dict[Tuple[str, str, int], int] = field(default_factory=dict)  # (algorithm, cache, budget) -> reps


def _field(row: Dict[str, str], name: str, cast, line: int):
    try:
        return cast(row[name].strip())
    except (TypeError, ValueError, AttributeError):
        raise TraceParseError(line, f"bad {name} value {row.get(name)!r}")


def import_external_trace(path: str, caches: Dict[str, SearchSpaceCache]) -> ExternalImport:
    """Result cells of a tool run outside this toolkit (e.g. SMAC or irace) from a CSV trace.

    caches maps cache labels (kernel@device) to the caches the fraction of the optimum is taken from.
    """
    records = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = [c for c in TRACE_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise TraceParseError(1, f"missing columns {missing}")

        for row in reader:
            line = reader.line_num
            if None in row or any(row[c] is None for c in TRACE_COLUMNS):
                raise TraceParseError(line, "wrong number of fields")
            label = row["cache"].strip()
            if label not in caches:
                raise TraceParseError(line, f"unknown cache {label!r}")
            cache = caches[label]

            budget = _field(row, "budget", int, line)
            rep = _field(row, "rep", int, line)
            best = _field(row, "best_fitness", float, line)
            if budget < 1 or rep < 0:
                raise TraceParseError(line, "budget must be positive and rep non-negative")
            if not math.isfinite(best) or best <= 0:
                raise TraceParseError(line, f"best_fitness must be a positive runtime, got {best}")
            if best < cache.f_opt:
                raise TraceParseError(line, f"best_fitness {best} is below the optimum {cache.f_opt} of {label}")

            records.append(
                ResultRecord(
                    kernel=cache.metadata.kernel,
                    device=cache.metadata.device,
                    cache=label,
                    algorithm=row["algorithm"].strip(),
                    budget=budget,
                    rep=rep,
                    seed=rep,
                    best_fitness=best,
                    fraction=cache.fraction_of_optimum(best),
                    evals_used=budget,
                    external=True,
                )
            )

    counts: Dict[Tuple[str, str, int], int] = defaultdict(int)
    for record in records:
        counts[(record.algorithm, record.cache, record.budget)] += 1
    logger.info(f"Imported {len(records)} external cells from {path}")
    return ExternalImport(records, dict(counts))
