import math
from collections import defaultdict
from enum import Enum
from typing import Dict, Iterable, List, NamedTuple, Sequence

import numpy as np
from scipy import stats

from bench.results import ResultRecord

CONFIDENCE_Z = 1.96
DEFAULT_ALPHA = 0.05


class CurvePoint(NamedTuple):
    budget: int
    mean_evals: float
    mean_fraction: float
    ci: float  # Half-width of the 95% normal-approximation interval
    reps: int


class Outcome(Enum):
    A_WINS = "A_wins"
    B_WINS = "B_wins"
    TIE = "tie"

    def swapped(self) -> "Outcome":
        if self == Outcome.A_WINS:
            return Outcome.B_WINS
        if self == Outcome.B_WINS:
            return Outcome.A_WINS
        return self


class WelchResult(NamedTuple):
    statistic: float
    df: float
    pvalue: float  # One-sided, H1: mean(a) > mean(b)


def fraction_curve(records: Iterable[ResultRecord], cache: str, algorithm: str) -> List[CurvePoint]:
    """Mean fraction of the optimum per budget for one (cache, algorithm) pair.

    The x coordinate is the mean number of evaluations actually spent, which is below the budget
    when a run exhausted the space.
    """
    per_budget: Dict[int, List[ResultRecord]] = defaultdict(list)
    for record in records:
        if record.cache == cache and record.algorithm == algorithm:
            per_budget[record.budget].append(record)

    points = []
    for budget in sorted(per_budget):
        runs = per_budget[budget]
        fractions = np.array([r.fraction for r in runs])
        ci = CONFIDENCE_Z * fractions.std(ddof=1) / math.sqrt(len(runs)) if len(runs) > 1 else 0.0
        points.append(
            CurvePoint(
                budget=budget,
                mean_evals=float(np.mean([r.evals_used for r in runs])),
                mean_fraction=float(fractions.mean()),
                ci=float(ci),
                reps=len(runs),
            )
        )
    return points


def welch_statistics(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    va, vb = a.var(ddof=1) / len(a), b.var(ddof=1) / len(b)
    df = (va + vb) ** 2 / (va**2 / (len(a) - 1) + vb**2 / (len(b) - 1))
    result = stats.ttest_ind(a, b, equal_var=False, alternative="greater")
    return WelchResult(float(result.statistic), float(df), float(result.pvalue))


def ttest_win(a: Sequence[float], b: Sequence[float], alpha: float = DEFAULT_ALPHA) -> Outcome:
    """Whether sample a (fraction of the optimum, higher is better) beats sample b.

    Welch's test, one-sided in the direction of the larger mean. Two constant samples are compared
    directly: equal constants tie, otherwise the larger one wins.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        return Outcome.TIE

    mean_a, mean_b = a.mean(), b.mean()
    if np.ptp(a) == 0 and np.ptp(b) == 0:
        if mean_a == mean_b:
            return Outcome.TIE
        return Outcome.A_WINS if mean_a > mean_b else Outcome.B_WINS
    if mean_a == mean_b or len(a) < 2 or len(b) < 2:
        return Outcome.TIE

    if mean_a > mean_b:
        pvalue = welch_statistics(a, b).pvalue
        winner = Outcome.A_WINS
    else:
        pvalue = welch_statistics(b, a).pvalue
        winner = Outcome.B_WINS
    if math.isnan(pvalue) or pvalue >= alpha:
        return Outcome.TIE
    return winner
