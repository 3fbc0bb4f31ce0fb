from typing import Any, Dict, Iterable, List, Optional


class TuningError(Exception):
    """ Base class for every domain error raised by the toolkit """


class InvalidSpaceDefinition(TuningError):
    """ Raised when a space definition has empty, duplicated or malformed parameters """


class InvalidConfiguration(TuningError):
    """ Raised when an index or value vector does not belong to the space """

    def __init__(self, configuration: Any, reason: str, message="Configuration {} rejected: {}"):
        self.configuration = configuration
        self.reason = reason
        self.message = message.format(configuration, reason)
        super().__init__(self.message)


class MalformedBitstring(TuningError):
    """ Raised when a bitstring segment does not hold exactly one set bit """

    def __init__(self, segment: int, set_bits: int, message="segment {} has {} set bits"):
        self.segment = segment
        self.set_bits = set_bits
        self.message = message.format(segment, set_bits)
        super().__init__(self.message)


class InvalidParameter(TuningError):
    """ Raised when a generator or analysis receives out of range arguments """


class BudgetExhausted(TuningError):
    """ Cooperative stop signal: the evaluation budget is spent """

    def __init__(self, used: int, max_evals: int, message="Budget exhausted after {} of {} evaluations"):
        self.used = used
        self.max_evals = max_evals
        self.message = message.format(used, max_evals)
        super().__init__(self.message)


class SpaceExhausted(BudgetExhausted):
    """ Every configuration of the space has been evaluated """

    def __init__(self, used: int, max_evals: int):
        super().__init__(used, max_evals, message="Search space exhausted after {} evaluations (budget {})")


class SearchStalled(BudgetExhausted):
    """ The search kept revisiting cached configurations without spending budget """

    def __init__(self, used: int, max_evals: int, repeats: int):
        self.repeats = repeats
        super().__init__(
            used, max_evals, message=f"Search stalled after {repeats} cached repeats ({{}} of {{}} evaluations used)"
        )


class MissingEntry(TuningError):
    """ Raised when a partial cache has no measurement for a configuration """

    def __init__(self, configuration: Any, message="No cache entry for configuration {}"):
        self.configuration = configuration
        self.message = message.format(configuration)
        super().__init__(self.message)


class PartialCacheError(TuningError):
    """ Raised when an operation needs every configuration of the space to be cached """

    def __init__(self, missing: int, size: int, message="Cache is partial: {} of {} configurations missing"):
        self.missing = missing
        self.size = size
        self.message = message.format(missing, size)
        super().__init__(self.message)


class NoFeasiblePoint(TuningError):
    """ Raised when a cache holds no successfully measured configuration """

    def __init__(self, message="Cache has no feasible (non-failing) configuration"):
        self.message = message
        super().__init__(self.message)


class CacheFormatError(TuningError):
    """ Raised when a cache file cannot be interpreted """


class UnknownAlgorithm(TuningError):
    def __init__(self, name: str, known: Iterable[str] = ()):
        self.name = name
        self.message = f"Unknown algorithm '{name}'. Known algorithms: {', '.join(sorted(known))}"
        super().__init__(self.message)


class InvalidHyperparameters(TuningError):
    """ Raised before any evaluation when hyperparameters do not match the algorithm schema """

    def __init__(self, algorithm: str, problems: List[str]):
        self.algorithm = algorithm
        self.problems = problems
        self.message = f"Invalid hyperparameters for {algorithm}: {'; '.join(problems)}"
        super().__init__(self.message)


class MissingDefaults(TuningError):
    """ Raised when the defaults file has no hyperparameters for an (algorithm, budget) pair """

    def __init__(self, algorithm: str, budgets: Iterable[int]):
        self.algorithm = algorithm
        self.budgets = sorted(budgets)
        self.message = f"No default hyperparameters for {algorithm} at budget(s) {self.budgets}"
        super().__init__(self.message)


class NodeLimitExceeded(TuningError):
    def __init__(self, size: int, limit: int):
        self.size = size
        self.limit = limit
        self.message = (
            f"Space has {size} configurations, above the graph node limit of {limit}. "
            f"Sample a sub-space or raise the limit explicitly."
        )
        super().__init__(self.message)


class PageRankNotConverged(TuningError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        self.message = f"PageRank did not converge in {iterations} iterations (L1 residual {residual:.3e})"
        super().__init__(self.message)


class DegenerateCentrality(TuningError):
    """ Raised when the local minima carry no centrality at all """


class EmptySelection(TuningError):
    """ Raised when no hyperparameter setting is admitted for every problem, even at the largest k """

    def __init__(self, budget: int, k_max: float, diagnostics: Optional[Dict[str, Any]] = None):
        self.budget = budget
        self.k_max = k_max
        self.diagnostics = diagnostics or {}
        self.message = f"No common hyperparameter setting at budget {budget} for k <= {k_max}: {self.diagnostics}"
        super().__init__(self.message)


class TraceParseError(TuningError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        self.message = f"Line {line}: {reason}"
        super().__init__(self.message)
