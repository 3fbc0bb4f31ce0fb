import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from core.exceptions import BudgetExhausted
from core.space import ParameterSpace
from optimizers import OptimizerSpec, run_optimizer
from optimizers.continuous import (
    LocalMinimizerKind,
    SnappedObjective,
    Stagnated,
    cell_centre,
    cell_nelder_mead,
    grid_points,
    local_minimize,
    minimizer_for,
    snap,
    snap_config,
    snap_index,
    snap_indices,
)

CONTINUOUS = ["basin-hopping", "dual-annealing", "pso", "differential-evolution"]
FIXTURES = ["convolution", "convolution_mi50", "gemm", "pnpoly"]


def test_grid_points():
    np.testing.assert_allclose(grid_points(4), [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(grid_points(1), [0.5])


def test_snap():
    values = ["a", "b", "c", "d"]
    assert snap(values, 0.0) == "a"
    assert snap(values, 1.0) == "d"
    assert snap(values, 0.4) == "b"
    # Exactly between two grid points the lower index wins
    assert snap_index(4, 0.5) == 1


@pytest.mark.parametrize("name", FIXTURES)
def test_grid_points_snap_to_their_own_value(name):
    for parameter in ParameterSpace.fixture(name).parameters:
        values = parameter.values
        for j, b in enumerate(grid_points(len(values))):
            assert snap(values, b) == values[j]


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=64), st.floats(min_value=0.0, max_value=1.0))
def test_snap_picks_the_closest_grid_point(m, y):
    points = grid_points(m)
    i = snap_index(m, y)
    assert abs(points[i] - y) <= np.min(np.abs(points - y)) + 1e-12


def test_uniform_points_snap_uniformly():
    space = ParameterSpace.fixture("convolution_mi50")
    rng = np.random.default_rng(2024)
    draws = 100_000
    indices = snap_indices(space.dims, rng.random((draws, space.n)))
    flat = np.ravel_multi_index(tuple(indices.T), space.dims)
    counts = np.bincount(flat, minlength=space.size())
    assert chisquare(counts).pvalue > 0.01

    for i, m in enumerate(space.dims):
        per_value = np.bincount(indices[:, i], minlength=m)
        np.testing.assert_allclose(per_value, draws / m, rtol=0.05)


def test_cell_centres_snap_back(small_space):
    for x in small_space.enumerate():
        assert snap_config(small_space, cell_centre(small_space, x)) == x


def test_minimizer_for(caplog):
    assert minimizer_for("Powell") is LocalMinimizerKind.PATTERN_SEARCH
    assert minimizer_for("Nelder-Mead") is LocalMinimizerKind.NELDER_MEAD
    assert "not available" not in caplog.text
    assert minimizer_for("COBYLA") is LocalMinimizerKind.NELDER_MEAD
    assert "not available" in caplog.text


def test_snapped_objective_stagnates(bowl_cache, fitness_source):
    objective = SnappedObjective(fitness_source(bowl_cache), window=3)
    point = cell_centre(bowl_cache.space, (2, 1, 0))
    assert objective(point) == 1.0
    for _ in range(3):
        assert objective(point) == 1.0
    with pytest.raises(Stagnated):
        objective(point)


def test_snapped_objective_clips(bowl_cache, fitness_source):
    objective = SnappedObjective(fitness_source(bowl_cache))
    assert objective(np.array([-3.0, -3.0, -3.0])) == bowl_cache.fitness_of((0, 0, 0))
    assert objective.bounds == [(0.0, 1.0)] * 3


def test_fresh_points_are_unvisited_cell_centres(bowl_cache, fitness_source):
    fitness = fitness_source(bowl_cache)
    objective = SnappedObjective(fitness)
    rng = np.random.default_rng(5)
    for _ in range(bowl_cache.size):
        p = objective.fresh_point(rng)
        x = snap_config(bowl_cache.space, p)
        np.testing.assert_allclose(p, cell_centre(bowl_cache.space, x))
        assert x not in fitness.budget.visited
        objective(p)
    assert fitness.budget.used == bowl_cache.size


@pytest.mark.parametrize("kind", list(LocalMinimizerKind))
def test_local_minimize_descends(kind, bowl_cache, fitness_source):
    objective = SnappedObjective(fitness_source(bowl_cache))
    start = cell_centre(bowl_cache.space, (0, 2, 1))
    x, fx = local_minimize(kind, objective, start)
    assert fx < bowl_cache.fitness_of((0, 2, 1))
    assert fx == bowl_cache.fitness_of(snap_config(bowl_cache.space, x))


def test_cell_nelder_mead_first_simplex_spans_one_cell(bowl_cache):
    seen = []

    def record(p):
        seen.append(np.array(p))
        return float(np.sum(p))

    start = cell_centre(bowl_cache.space, (3, 2, 1))
    widths = 1.0 / np.array(bowl_cache.space.dims)
    cell_nelder_mead(record, start, bounds=[(0.0, 1.0)] * 3, widths=widths)
    vertices = {snap_config(bowl_cache.space, p) for p in seen[:4]}
    assert vertices == {(3, 2, 1), (2, 2, 1), (3, 1, 1), (3, 2, 0)}


@pytest.fixture
def scipy_calls(monkeypatch):
    """Replace a scipy global optimizer by a fake that evaluates its start point and ends the run"""
    calls = []

    def install(name):
        def fake(func, *args, **kwargs):
            calls.append((args, kwargs))
            func(kwargs["x0"] if "x0" in kwargs else args[0])
            raise BudgetExhausted(1, 1)

        monkeypatch.setattr(f"optimizers.continuous.{name}", fake)
        return calls

    return install


def test_dual_annealing_hands_its_settings_to_scipy(scipy_calls, bowl_cache):
    calls = scipy_calls("dual_annealing")
    run = run_optimizer(OptimizerSpec("dual-annealing", {"method": "Nelder-Mead"}, seed=1), bowl_cache, max_evals=10)

    assert run.evals_used == 1
    (bounds,), kwargs = calls[0]
    assert bounds == [(0.0, 1.0)] * 3
    assert kwargs["visit"] == 2.62
    assert kwargs["accept"] == -5.0
    assert kwargs["initial_temp"] == 5230.0
    assert kwargs["restart_temp_ratio"] == 1e-5
    assert kwargs["minimizer_kwargs"]["method"] is cell_nelder_mead
    x0 = kwargs["x0"]
    np.testing.assert_allclose(x0, cell_centre(bowl_cache.space, snap_config(bowl_cache.space, x0)))


def test_basin_hopping_hands_its_settings_to_scipy(scipy_calls, bowl_cache):
    calls = scipy_calls("basinhopping")
    hyperparameters = {"temperature": 0.5, "step_size": 0.2}
    run = run_optimizer(OptimizerSpec("basin-hopping", hyperparameters, seed=1), bowl_cache, max_evals=10)

    assert run.evals_used == 1
    (x0,), kwargs = calls[0]
    assert kwargs["T"] == 0.5
    assert kwargs["minimizer_kwargs"]["method"] == "Powell"
    step = kwargs["take_step"](np.full(3, 0.5))
    assert ((step >= 0.3 - 1e-12) & (step <= 0.7 + 1e-12)).all()
    assert not hasattr(kwargs["take_step"], "stepsize")


@pytest.mark.parametrize("algorithm", CONTINUOUS)
def test_continuous_runs(algorithm, synthetic_cache):
    run = run_optimizer(OptimizerSpec(algorithm, {}, seed=4), synthetic_cache, max_evals=40)
    assert run.evals_used <= 40
    assert run.best_fitness >= synthetic_cache.f_opt

    again = run_optimizer(OptimizerSpec(algorithm, {}, seed=4), synthetic_cache, max_evals=40)
    assert [t.configuration for t in again.trace] == [t.configuration for t in run.trace]

