import numpy as np
import pytest

from core.exceptions import BudgetExhausted, InvalidHyperparameters
from optimizers import OptimizerSpec, run_optimizer
from optimizers.continuous import cell_centre, snap_config
from optimizers.swarm import DifferentialEvolution, ParticleSwarm, pso_step, ring_neighbourhood


def test_ring_neighbourhood():
    assert list(ring_neighbourhood(0, 10, 3)) == [9, 0, 1]
    assert list(ring_neighbourhood(5, 10, 4)) == [3, 4, 5, 6]
    assert sorted(ring_neighbourhood(2, 4, 10)) == [0, 1, 2, 3]


def test_pso_step_stays_in_the_box():
    rng = np.random.default_rng(0)
    positions = rng.random((8, 3))
    velocities = rng.uniform(-2.0, 2.0, (8, 3))
    new_positions, new_velocities = pso_step(positions, velocities, positions, np.ones((8, 3)), rng)
    assert ((new_positions >= 0.0) & (new_positions <= 1.0)).all()
    assert new_velocities.shape == (8, 3)


def test_pso_step_at_rest():
    rng = np.random.default_rng(0)
    positions = np.full((2, 2), 0.5)
    new_positions, velocities = pso_step(positions, np.zeros((2, 2)), positions, positions, rng)
    np.testing.assert_array_equal(new_positions, positions)
    np.testing.assert_array_equal(velocities, np.zeros((2, 2)))


def test_de_population_size():
    assert DifferentialEvolution({"pop_size": 1}).members(3) == 5
    assert DifferentialEvolution({"pop_size": 4}).members(3) == 12


def test_de_mutation_range_validation():
    assert DifferentialEvolution({"mutation": [0.2, 0.7]}).hyperparameters["mutation"] == [0.2, 0.7]
    with pytest.raises(InvalidHyperparameters):
        DifferentialEvolution({"mutation": [0.7, 0.2]})
    with pytest.raises(InvalidHyperparameters):
        DifferentialEvolution({"mutation": 0.5})
    with pytest.raises(InvalidHyperparameters):
        DifferentialEvolution({"method": "rand1bin"})


def test_pso_defaults():
    pso = ParticleSwarm()
    assert pso.hyperparameters == {"num_particles": 20, "neighbours_evaluated": 10}


@pytest.mark.parametrize("mutation, expected", [([0.2, 0.7], (0.2, 0.7)), ([0.5, 0.5], 0.5)])
def test_de_hands_its_settings_to_scipy(mutation, expected, monkeypatch, synthetic_cache):
    calls = []

    def fake(func, bounds, **kwargs):
        calls.append(kwargs)
        func(kwargs["x0"])
        raise BudgetExhausted(1, 1)

    monkeypatch.setattr("optimizers.swarm.differential_evolution", fake)
    hyperparameters = {"pop_size": 3, "method": "best2exp", "recombination": 0.4, "mutation": mutation}
    run = run_optimizer(OptimizerSpec("differential-evolution", hyperparameters, seed=2), synthetic_cache, max_evals=10)

    assert run.evals_used == 1
    kwargs = calls[0]
    assert kwargs["popsize"] == 3
    assert kwargs["strategy"] == "best2exp"
    assert kwargs["mutation"] == expected
    assert kwargs["recombination"] == 0.4
    assert kwargs["polish"] is False
    assert kwargs["init"] == "latinhypercube"
    x0 = kwargs["x0"]
    np.testing.assert_allclose(x0, cell_centre(synthetic_cache.space, snap_config(synthetic_cache.space, x0)))
