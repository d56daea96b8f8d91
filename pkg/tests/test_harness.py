import json
from pathlib import Path

import numpy as np
import pytest

from rtlab.cli import main, resolve_threads
from rtlab.experiments import (REGISTRY, ConfigError, ExperimentSpec, UsageError, experiment_stream,
                               list_experiments, rows_to_csv, run, validate)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
NAMES = ["verify-grid", "verify-norms", "verify-kernels", "birkhoff", "wiener-wintner", "cotlar",
         "return-times", "bourgain-L", "bourgain-J", "tree-select", "wavepacket", "model-op",
         "sign-lower-bound", "transfer-constants"]


def quick(name):
    return json.loads((CONFIGS / "quick" / f"{name}.json").read_text())


def test_registry_lists_all_fourteen():
    assert sorted(NAMES) == list_experiments()
    assert len(list_experiments()) == 14


def test_validate_rejects_negative_N():
    with pytest.raises(ConfigError, match="N"):
        validate("verify-grid", {"N": -41})
    with pytest.raises(ConfigError):
        validate("birkhoff", {"N": -5})
    with pytest.raises(ConfigError):
        validate("birkhoff", {"unknown_key": 1})
    with pytest.raises(UsageError):
        validate("no-such-experiment", {})


@pytest.mark.parametrize("name", NAMES)
def test_shipped_configs_validate_verbatim(name):
    for path in (CONFIGS / f"{name}.json", CONFIGS / "quick" / f"{name}.json"):
        params = json.loads(path.read_text())
        full = validate(name, params)
        assert all(full[k] == v for k, v in params.items())
        assert set(full) == set(REGISTRY[name].properties)


def test_stream_depends_on_seed_and_name_only():
    a = np.random.default_rng(experiment_stream(7, "cotlar")).random(4)
    b = np.random.default_rng(experiment_stream(7, "cotlar")).random(4)
    c = np.random.default_rng(experiment_stream(7, "birkhoff")).random(4)
    d = np.random.default_rng(experiment_stream(8, "cotlar")).random(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c) and not np.array_equal(a, d)


def test_seed_must_be_unsigned_64_bit():
    with pytest.raises(UsageError):
        run(ExperimentSpec("birkhoff", quick("birkhoff"), seed=-1))
    with pytest.raises(UsageError):
        run(ExperimentSpec("birkhoff", quick("birkhoff"), seed=2 ** 64))
    assert run(ExperimentSpec("birkhoff", quick("birkhoff"), seed=2 ** 64 - 1)).status == "pass"


def test_csv_formatting():
    text = rows_to_csv([{"a": 1, "b": 0.1}, {"b": True, "c": None}, {"a": "x"}])
    assert text == "a,b,c\n1,0.1,\n,true,\nx,,\n"


def test_report_contents(tmp_path):
    rep = run(ExperimentSpec("sign-lower-bound", quick("sign-lower-bound"), 3, str(tmp_path)))
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["spec"] == {"name": "sign-lower-bound", "params": rep.params, "seed": 3,
                            "output_dir": str(tmp_path)}
    assert set(data["fits"]["best_ratio"]) >= {"exponent", "stderr", "residuals"}
    assert {v["status"] for v in data["verdicts"]} <= {"pass", "fail", "informative"}
    assert data["operations"] and data["claim"] and data["version"]
    assert data["wall_clock_s"] >= 0
    header = (tmp_path / "cells.csv").read_text().splitlines()[0].split(",")
    assert {"L", "q", "measured", "fit_exponent", "stderr"} <= set(header)


def test_failing_verdict_sets_exit_code(tmp_path):
    cfg = tmp_path / "c.json"
    # a tolerance of 1e-12 cannot be met at N = 100: the run must report fail
    cfg.write_text(json.dumps({"N": 100, "tolerance": 1e-12}))
    assert main(["birkhoff", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert json.loads((tmp_path / "o" / "report.json").read_text())["status"] == "fail"
    cfg.write_text(json.dumps({"N": 1000}))
    assert main(["birkhoff", "--config", str(cfg), "--out", str(tmp_path / "p")]) == 0


def test_cli_errors(tmp_path, capsys):
    assert main(["nonsense"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"N": -3}))
    assert main(["verify-grid", "--config", str(bad)]) == 2
    assert "N" in capsys.readouterr().err
    assert main(["birkhoff", "--kernel", "bump"]) == 2
    bad.write_text("[1, 2]")
    assert main(["birkhoff", "--config", str(bad)]) == 2


def test_cli_list_and_validate(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert all(n in out for n in NAMES)
    assert main(["list", "--json"]) == 0
    assert set(json.loads(capsys.readouterr().out)) == set(NAMES)
    assert main(["validate", "cotlar", "--config", str(CONFIGS / "cotlar.json")]) == 0
    assert json.loads(capsys.readouterr().out)["valid"]


def test_kernel_flag_reaches_the_experiment(tmp_path):
    assert main(["verify-kernels", "--config", str(CONFIGS / "quick" / "verify-kernels.json"),
                 "--kernel", "bump", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["spec"]["params"]["kernel"] == "bump"
    assert data["verdicts"][-1]["status"] == "informative"  # no discrete tables for the bump


def test_threads_env_override(monkeypatch):
    assert resolve_threads(3, {}) == 3
    assert resolve_threads(3, {"RTLAB_THREADS": "5"}) == 5
    assert resolve_threads(0, {}) == 1
    with pytest.raises(UsageError):
        resolve_threads(1, {"RTLAB_THREADS": "many"})
    monkeypatch.setenv("RTLAB_THREADS", "2")
    seen = {}
    import rtlab.cli as cli
    real = cli.run

    def spy(spec):
        seen["threads"] = spec.threads
        return real(spec)
    monkeypatch.setattr(cli, "run", spy)
    assert main(["birkhoff", "--config", str(CONFIGS / "quick" / "birkhoff.json"), "--threads", "7"]) == 0
    assert seen["threads"] == 2


def test_cells_do_not_depend_on_thread_count():
    one = run(ExperimentSpec("bourgain-L", quick("bourgain-L"), 11, threads=1))
    many = run(ExperimentSpec("bourgain-L", quick("bourgain-L"), 11, threads=3))
    assert one.cells_csv() == many.cells_csv()
