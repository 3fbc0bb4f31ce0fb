import logging

import pytest

from core.exceptions import MissingDefaults, UnknownAlgorithm
from helpers.constants import DEFAULT_BUDGETS
from optimizers import ALGORITHMS, EXTERNAL_ALGORITHMS, algorithm_names, create_optimizer, OptimizerSpec
from optimizers.base import optimizer_class, resolve_hyperparameters
from optimizers.defaults import HyperparameterDefaults


@pytest.fixture
def defaults():
    return HyperparameterDefaults.load()


def test_registry():
    assert algorithm_names() == sorted(
        [
            "random",
            "first-mls",
            "best-mls",
            "first-ils",
            "best-ils",
            "first-tabu",
            "best-tabu",
            "simulated-annealing",
            "gls",
            "ga",
            "basin-hopping",
            "dual-annealing",
            "pso",
            "differential-evolution",
        ]
    )
    with pytest.raises(UnknownAlgorithm):
        optimizer_class("smac")
    with pytest.raises(UnknownAlgorithm):
        create_optimizer(OptimizerSpec("hill-climbing"))


def test_defaults_cover_every_algorithm_and_budget(defaults):
    assert set(defaults.algorithms) == set(ALGORITHMS) | set(EXTERNAL_ALGORITHMS)
    for algorithm in ALGORITHMS:
        assert not defaults.is_external(algorithm)
        assert defaults.budgets(algorithm) == DEFAULT_BUDGETS
    for algorithm in EXTERNAL_ALGORITHMS:
        assert defaults.is_external(algorithm)


def test_defaults_match_the_schemas(defaults):
    for algorithm, cls in ALGORITHMS.items():
        for budget in DEFAULT_BUDGETS:
            resolve_hyperparameters(algorithm, cls.schema, defaults.lookup(algorithm, budget))


def test_selected_values(defaults):
    assert defaults.lookup("dual-annealing", 200) == {"method": "Powell"}
    assert defaults.lookup("ga", 25)["selector"] == "tour8"
    assert defaults.lookup("differential-evolution", 25)["pop_size"] == 1


def test_strict_lookup(defaults):
    with pytest.raises(MissingDefaults) as ex_info:
        defaults.lookup("pso", 300)
    assert ex_info.value.budgets == [300]


def test_lenient_lookup(defaults, caplog):
    with caplog.at_level(logging.INFO):
        assert defaults.lookup("pso", 300, strict=False) == defaults.lookup("pso", 200)
    assert "budget 200 column" in caplog.text
    assert defaults.lookup("pso", 10, strict=False) == defaults.lookup("pso", 25)
    with pytest.raises(MissingDefaults):
        defaults.lookup("nelder-mead", 100, strict=False)


def test_update_and_save(tmp_path):
    table = HyperparameterDefaults({})
    table.update("pso", 100, {"num_particles": 10, "neighbours_evaluated": 2})
    path = tmp_path / "defaults.json"
    table.save(str(path))
    assert HyperparameterDefaults.load(str(path)).lookup("pso", 100) == {"num_particles": 10, "neighbours_evaluated": 2}
