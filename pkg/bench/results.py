import json
import logging
import os
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Set, Tuple

CellKey = Tuple[str, str, int, int]  # (cache, algorithm, budget, rep)


@dataclass(frozen=True)
class ResultRecord:
    kernel: str
    device: str
    cache: str
    algorithm: str
    budget: int
    rep: int
    seed: int
    best_fitness: float
    fraction: float
    evals_used: int
    external: bool = False

    @property
    def key(self) -> CellKey:
        return self.cache, self.algorithm, self.budget, self.rep

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Dict) -> "ResultRecord":
        return cls(
            kernel=str(data["kernel"]),
            device=str(data["device"]),
            cache=str(data["cache"]),
            algorithm=str(data["algorithm"]),
            budget=int(data["budget"]),
            rep=int(data["rep"]),
            seed=int(data["seed"]),
            best_fitness=float(data["best_fitness"]),
            fraction=float(data["fraction"]),
            evals_used=int(data["evals_used"]),
            external=bool(data.get("external", False)),
        )


def sort_records(records: Iterable[ResultRecord]) -> List[ResultRecord]:
    return sorted(records, key=lambda r: r.key)


class ResultsFile:
    """Append-only JSON-lines store; a cell key is written at most once"""

    def __init__(self, path: str):
        self.path = path
        self.logger = logging.getLogger(__name__)

    def load(self) -> List[ResultRecord]:
        if not os.path.exists(self.path):
            return []
        with open(self.path) as f:
            return [ResultRecord.from_dict(json.loads(line)) for line in f if line.strip()]

    def keys(self) -> Set[CellKey]:
        return {r.key for r in self.load()}

    def append(self, records: Iterable[ResultRecord]) -> int:
        existing = self.keys()
        fresh = []
        for record in sort_records(records):
            if record.key not in existing:
                existing.add(record.key)
                fresh.append(record)
        with open(self.path, "a") as f:
            for record in fresh:
                f.write(record.to_json() + "\n")
        self.logger.info(f"Appended {len(fresh)} result records to {self.path}")
        return len(fresh)
