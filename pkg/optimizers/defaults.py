import json
import logging
from typing import Any, Dict, List

from core.exceptions import MissingDefaults
from helpers.constants import DEFAULTS_FILE


class HyperparameterDefaults:
    """Selected hyperparameters per algorithm and budget, as shipped in data/hyperparameters/defaults.json.

    File layout: {algorithm: {"external": bool, "budgets": {"<budget>": {name: value}}}}
    """

    def __init__(self, table: Dict[str, Dict[str, Any]]):
        self.table = table
        self.logger = logging.getLogger(__name__)

    @classmethod
    def load(cls, path: str = DEFAULTS_FILE) -> "HyperparameterDefaults":
        with open(path) as f:
            return cls(json.load(f))

    def save(self, path: str):
        with open(path, "w") as f:
            json.dump(self.table, f, indent=2, sort_keys=True)

    @property
    def algorithms(self) -> List[str]:
        return sorted(self.table)

    def is_external(self, algorithm: str) -> bool:
        return bool(self.table.get(algorithm, {}).get("external", False))

    def budgets(self, algorithm: str) -> List[int]:
        return sorted(int(b) for b in self.table.get(algorithm, {}).get("budgets", {}))

    def lookup(self, algorithm: str, budget: int, strict: bool = True) -> Dict[str, Any]:
        """Hyperparameters of algorithm at budget.

        Non-strict lookups fall back to the largest tabulated budget not above the request, or the
        smallest tabulated budget when the request is below all of them.
        """
        columns = self.budgets(algorithm)
        if budget in columns:
            return dict(self.table[algorithm]["budgets"][str(budget)])
        if strict or not columns:
            raise MissingDefaults(algorithm, [budget])

        below = [b for b in columns if b <= budget]
        column = below[-1] if below else columns[0]
        self.logger.info(f"No {algorithm} defaults at budget {budget}, using the budget {column} column")
        return dict(self.table[algorithm]["budgets"][str(column)])

    def update(self, algorithm: str, budget: int, hyperparameters: Dict[str, Any], external: bool = False):
        entry = self.table.setdefault(algorithm, {"external": external, "budgets": {}})
        entry["budgets"][str(budget)] = dict(hyperparameters)
