import json

import pytest

from core.cache import SearchSpaceCache
from main import main


def test_generate_nk(tmp_path):
    output = tmp_path / "nk.json"
    assert main(["generate", "nk", "--n", "10", "--k", "3", "--seed", "1", "--output", str(output)]) == 0
    cache = SearchSpaceCache.load(str(output))
    assert cache.size == 1024
    assert len(json.loads(output.read_text())["cache"]) == 1024
    assert cache.metadata.kernel == "nk-n10-k3-s1"


def test_generate_synthetic_from_bundled_space(tmp_path):
    output = tmp_path / "pnpoly.json"
    assert main(["generate", "synthetic", "--space", "pnpoly", "--fail-fraction", "0.2", "--output", str(output)]) == 0
    cache = SearchSpaceCache.load(str(output))
    assert cache.is_complete
    assert cache.fail_count > 0


def test_generate_rejects_bad_parameters(tmp_path, capsys):
    assert main(["generate", "nk", "--n", "4", "--k", "4", "--output", str(tmp_path / "nk.json")]) == 1
    assert "error:" in capsys.readouterr().err


def test_tune(cache_file, tmp_path, capsys):
    trace = tmp_path / "trace.json"
    argv = ["tune", cache_file, "--algo", "first-tabu", "--budget", "30", "--trace", str(trace)]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "evals used:    30 / 30" in out

    run = json.loads(trace.read_text())
    assert run["algorithm"] == "first-tabu"
    assert len(run["trace"]) == 30


def test_tune_with_explicit_hyperparameters(cache_file, tmp_path):
    argv = ["tune", cache_file, "--algo", "ga", "--budget", "40", "--hyperparameters", '{"pop_size": 4}', "--trace", ""]
    assert main(argv) == 0


def test_tune_errors(cache_file, tmp_path):
    assert main(["tune", str(tmp_path / "missing.json"), "--algo", "random", "--budget", "5"]) == 1
    argv = ["tune", cache_file, "--algo", "ga", "--budget", "5", "--hyperparameters", '{"colour": "red"}']
    assert main(argv) == 1


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["tune"],
        ["tune", "cache.json", "--algo", "hill-climbing", "--budget", "5"],
        ["tune", "cache.json", "--algo", "random", "--budget", "five"],
        ["tune", "cache.json", "--algo", "random", "--budget", "5", "--hyperparameters", "{oops"],
        ["analyze", "cache.json", "--neighbourhood", "diagonal"],
    ],
)
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as ex_info:
        main(argv)
    assert ex_info.value.code == 2


def test_analyze(cache_file, tmp_path):
    reports = tmp_path / "reports"
    argv = ["analyze", cache_file, "--p-max", "15", "--export", "graphml", "--fidelity-walks", "500", "--output-dir", str(reports)]
    assert main(argv) == 0

    stem = "synthetic-ridge-s3_synthetic"
    assert len((reports / f"{stem}_cp.csv").read_text().splitlines()) == 17
    report = json.loads((reports / f"{stem}_centrality.json").read_text())
    assert report["cache"] == "synthetic-ridge-s3@synthetic"
    assert "descent_rank_correlation" in report["metadata"]
    assert (reports / f"{stem}_ffg.graphml").exists()
    assert (reports / f"{stem}_minima.csv").exists()


def test_analyze_node_limit(cache_file, tmp_path):
    assert main(["analyze", cache_file, "--node-limit", "10", "--output-dir", str(tmp_path)]) == 1


def test_import_cache(tmp_path):
    kernel_tuner = {
        "kernel_name": "vector_add",
        "device_name": "A100",
        "tune_params_keys": ["block_size_x"],
        "tune_params": {"block_size_x": [64, 128, 256]},
        "cache": {
            "64": {"block_size_x": 64, "time": 1.5, "times": [1.4, 1.6]},
            "128": {"block_size_x": 128, "time": 1.0, "times": [1.0, 1.0]},
            "256": {"block_size_x": 256, "time": "CompilationFailedConfig"},
        },
    }
    path = tmp_path / "vector_add.json"
    path.write_text(json.dumps(kernel_tuner))
    assert main(["import-cache", str(path)]) == 0

    cache = SearchSpaceCache.load(str(tmp_path / "vector_add.normalized.json"))
    assert cache.metadata.label == "vector_add@A100"
    assert (cache.ok_count, cache.fail_count) == (2, 1)
    assert cache.f_opt == 1.0


def test_bench(cache_file, tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(
        json.dumps(
            {
                "caches": [cache_file],
                "algorithms": [
                    {"name": "random", "hyperparameters": {}},
                    {"name": "best-mls", "hyperparameters": {"neighbourhood": "adjacent"}},
                ],
                "budgets": [20, 60],
                "repetitions": 4,
            }
        )
    )
    external = tmp_path / "smac.csv"
    external.write_text(
        "algorithm,cache,budget,rep,best_fitness\n"
        + "".join(f"smac,synthetic-ridge-s3@synthetic,20,{rep},1000.0\n" for rep in range(4))
    )
    reports = tmp_path / "reports"
    argv = ["bench", "--plan", str(plan), "--results", str(tmp_path / "results.jsonl"), "--workers", "1"]
    argv += ["--external", str(external), "--report-dir", str(reports)]
    assert main(argv) == 0

    assert len((tmp_path / "results.jsonl").read_text().splitlines()) == 16
    heatmap = (reports / "heatmap_le200.csv").read_text().splitlines()
    assert heatmap[0] == "loser\\winner,best-mls,random,smac"
    assert (reports / "heatmap_gt200.csv").exists()
    assert "smac" in (reports / "totals.csv").read_text()
    curves = (reports / "curves.csv").read_text().splitlines()
    assert curves[0] == "cache,algorithm,budget,mean_evals,mean_fraction,ci,reps"
    assert len(curves) == 1 + 2 * 2 + 1


def test_config_file_supplies_required_flags(cache_file, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"algo": "random", "budget": 12, "trace": str(tmp_path / "run.json")}))
    assert main(["--config", str(config), "tune", cache_file]) == 0
    assert len(json.loads((tmp_path / "run.json").read_text())["trace"]) == 12


def test_config_file_with_unknown_key(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"colour": "red"}))
    with pytest.raises(SystemExit) as ex_info:
        main(["--config", str(config), "generate", "nk", "--n", "4", "--k", "1", "--output", str(tmp_path / "x.json")])
    assert ex_info.value.code == 2
