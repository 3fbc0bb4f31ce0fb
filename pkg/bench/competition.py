import csv
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from bench.results import ResultRecord
from bench.statistics import DEFAULT_ALPHA, Outcome, ttest_win

DEFAULT_SPLITS = (200,)

logger = logging.getLogger(__name__)

Cell = Tuple[str, int]  # (cache, budget)


class Band(NamedTuple):
    label: str
    low: Optional[int]  # Exclusive
    high: Optional[int]  # Inclusive

    def contains(self, budget: int) -> bool:
        return (self.low is None or budget > self.low) and (self.high is None or budget <= self.high)


def budget_bands(splits: Sequence[int]) -> List[Band]:
    """Bands (.., s1], (s1, s2], .., (sk, ..) for sorted split budgets"""
    edges = sorted(set(int(s) for s in splits))
    if not edges:
        return [Band("all", None, None)]
    bands = [Band(f"<={edges[0]}", None, edges[0])]
    bands += [Band(f"{lo}-{hi}", lo, hi) for lo, hi in zip(edges, edges[1:])]
    bands.append(Band(f">{edges[-1]}", edges[-1], None))
    return bands


class TotalRow(NamedTuple):
    algorithm: str
    band: str
    wins: int
    losses: int
    ties: int


@dataclass
class CompetitionResult:
    """Pairwise t-test outcomes per (cache, budget) cell and their win counts per budget band.

    heatmaps[band][i, j] counts the cells where algorithms[j] (column) beat algorithms[i] (row).
    """

    algorithms: List[str]
    bands: List[Band]
    outcomes: Dict[Cell, Dict[Tuple[str, str], Outcome]]
    heatmaps: Dict[str, np.ndarray]
    ties: Dict[str, np.ndarray]
    repetitions: Dict[str, Dict[int, int]] = field(default_factory=dict)
    alpha: float = DEFAULT_ALPHA

    def totals(self) -> List[TotalRow]:
        rows = []
        for band in self.bands:
            heatmap, ties = self.heatmaps[band.label], self.ties[band.label]
            for i, algorithm in enumerate(self.algorithms):
                rows.append(
                    TotalRow(
                        algorithm,
                        band.label,
                        wins=int(heatmap[:, i].sum()),
                        losses=int(heatmap[i, :].sum()),
                        ties=int(ties[i, :].sum()),
                    )
                )
        return rows

    def write_heatmap_csv(self, band: str, path: str):
        heatmap = self.heatmaps[band]
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["loser\\winner"] + self.algorithms)
            for algorithm, row in zip(self.algorithms, heatmap):
                writer.writerow([algorithm] + [int(v) for v in row])

    def write_totals_csv(self, path: str):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(TotalRow._fields)
            writer.writerows(self.totals())

    def to_dict(self) -> Dict:
        return {
            "test": "welch",
            "sided": "one-sided towards the larger mean",
            "alpha": self.alpha,
            "algorithms": self.algorithms,
            "bands": [band._asdict() for band in self.bands],
            "heatmaps": {label: heatmap.astype(int).tolist() for label, heatmap in self.heatmaps.items()},
            "totals": [row._asdict() for row in self.totals()],
            "repetitions": {a: {str(k): v for k, v in reps.items()} for a, reps in self.repetitions.items()},
        }


def fraction_samples(
    records: Iterable[ResultRecord], exclude_devices: Sequence[str] = ()
) -> Dict[Cell, Dict[str, List[float]]]:
    samples: Dict[Cell, Dict[str, List[float]]] = defaultdict(lambda: defaultdict(list))
    for record in records:
        if record.device in exclude_devices:
            continue
        samples[(record.cache, record.budget)][record.algorithm].append(record.fraction)
    return samples


def competition_heatmaps(
    records: Iterable[ResultRecord],
    splits: Sequence[int] = DEFAULT_SPLITS,
    exclude_devices: Sequence[str] = (),
    alpha: float = DEFAULT_ALPHA,
) -> CompetitionResult:
    records = list(records)
    samples = fraction_samples(records, exclude_devices)
    algorithms = sorted({a for per_algorithm in samples.values() for a in per_algorithm})
    index = {a: i for i, a in enumerate(algorithms)}
    bands = budget_bands(splits)
    heatmaps = {band.label: np.zeros((len(algorithms), len(algorithms)), dtype=int) for band in bands}
    ties = {band.label: np.zeros((len(algorithms), len(algorithms)), dtype=int) for band in bands}

    outcomes: Dict[Cell, Dict[Tuple[str, str], Outcome]] = {}
    for cell in sorted(samples):
        band = next(b for b in bands if b.contains(cell[1]))
        per_algorithm = samples[cell]
        outcomes[cell] = {}
        for a, b in itertools.combinations(sorted(per_algorithm), 2):
            outcome = ttest_win(per_algorithm[a], per_algorithm[b], alpha)
            outcomes[cell][(a, b)] = outcome
            if outcome == Outcome.A_WINS:
                heatmaps[band.label][index[b], index[a]] += 1
            elif outcome == Outcome.B_WINS:
                heatmaps[band.label][index[a], index[b]] += 1
            else:
                ties[band.label][index[a], index[b]] += 1
                ties[band.label][index[b], index[a]] += 1

    repetitions: Dict[str, Dict[int, int]] = defaultdict(dict)
    for per_algorithm in samples.values():
        for algorithm, fractions in per_algorithm.items():
            counts = repetitions[algorithm]
            counts[len(fractions)] = counts.get(len(fractions), 0) + 1

    logger.info(f"Compared {len(algorithms)} algorithms over {len(outcomes)} cells in {len(bands)} bands")
    return CompetitionResult(algorithms, bands, outcomes, heatmaps, ties, dict(repetitions), alpha)
