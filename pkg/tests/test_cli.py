from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import pytest

from kgp.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from kgp.io import read_coefficients, read_csv

MANUFACTURED: dict[str, Any] = {
    "b": 1.0,
    "eps": 0.05,
    "truncation": {"J": 8, "K": 8},
    "f": {"kind": "power_law", "p": 3},
    "g": {"kind": "power_law", "p": 3},
    "forcing": {
        "kind": "manufactured",
        "u": [{"j": 2, "k": 1, "amplitude": 0.3}],
        "v": [{"j": 1, "k": 0, "amplitude": 0.2}],
    },
    "solver": {"tol_residual": 1e-11},
}


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    kgp_level = logging.getLogger("kgp").level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)
    logging.getLogger("kgp").setLevel(kgp_level)


def run(tmp_path: Path, command: str, config: dict[str, Any], *extra: str) -> tuple[int, Path]:
    tmp_path.mkdir(parents=True, exist_ok=True)
    config_path = tmp_path / "run.json"
    config_path.write_text(json.dumps(config))
    out = tmp_path / "out"
    code = main([command, "--config", str(config_path), "--out", str(out), *extra])
    return code, out


def report(out: Path) -> dict[str, Any]:
    return json.loads((out / "report.json").read_text())


def test_check_passes_for_cubic_nonlinearities(tmp_path, capsys):
    code, out = run(tmp_path, "check", {"b": 1.0, "truncation": {"J": 4, "K": 4}}, "--seed", "3")
    assert code == EXIT_OK
    hypotheses = json.loads((out / "hypotheses.json").read_text())
    assert hypotheses["passed"]
    assert hypotheses["spectrum"]["eta"] == 1.0
    assert hypotheses["eps_threshold"] == 0.5
    assert not hypotheses["eps_warning"]
    assert "f: " in capsys.readouterr().out


def test_check_fails_when_a_hypothesis_fails(tmp_path):
    config = {
        "b": 1.0,
        "truncation": {"J": 4, "K": 4},
        "f": {"kind": "polynomial", "coefficients": [0, 1], "p": 2},
    }
    code, out = run(tmp_path, "check", config)
    assert code == EXIT_NUMERICAL
    hypotheses = json.loads((out / "hypotheses.json").read_text())
    assert hypotheses["f"]["h3"]["status"] == "fail"
    assert hypotheses["g"]["passed"]


def test_check_flags_large_coupling(tmp_path):
    code, out = run(tmp_path, "check", {"b": 1.0, "eps": 0.6, "truncation": {"J": 2, "K": 2}})
    assert code == EXIT_OK
    assert report(out)["eps_warning"]


@pytest.mark.parametrize(
    "config",
    [
        {"b": 3.0, "truncation": {"J": 4, "K": 4}},
        {"b": -1.0, "truncation": {"J": 4, "K": 4}},
        {"b": 1.0, "truncation": {"J": 0, "K": 4}},
        {"b": 1.0},
        {"b": 1.0, "truncation": {"J": 2, "K": 2}, "f": {"kind": "power_law", "p": 3, "amplitude": "const:-1"}},
    ],
)
def test_configuration_errors_exit_with_two(tmp_path, capsys, config):
    code, _ = run(tmp_path, "check", config)
    assert code == EXIT_CONFIG
    assert "error: " in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    code = main(["spectrum", "--config", str(tmp_path / "missing.json")])
    assert code == EXIT_CONFIG


def test_bad_log_level(tmp_path):
    code, _ = run(tmp_path, "spectrum", {"b": 1.0, "truncation": {"J": 2, "K": 2}}, "--log-level", "LOUD")
    assert code == EXIT_CONFIG


def test_solve_recovers_the_manufactured_target(tmp_path):
    code, out = run(tmp_path, "solve", MANUFACTURED)
    assert code == EXIT_OK

    payload = report(out)
    assert payload["command"] == "solve"
    assert payload["converged"]
    assert payload["target_error_l2"] < 1e-8
    assert payload["tail_residual"] is not None

    solution = read_coefficients(out / "solution.csv")
    assert solution.trunc.shape == (8, 9)
    assert solution.eps == 0.05
    assert abs(solution.v.coeff(1, 0) - 0.2) < 1e-8


def test_solve_is_deterministic(tmp_path):
    code_a, out_a = run(tmp_path / "a", "solve", MANUFACTURED)
    code_b, out_b = run(tmp_path / "b", "solve", MANUFACTURED)
    assert code_a == code_b == EXIT_OK
    assert (out_a / "solution.csv").read_bytes() == (out_b / "solution.csv").read_bytes()


def test_solve_that_runs_out_of_iterations(tmp_path, capsys):
    config = {**MANUFACTURED, "solver": {"max_newton": 1}}
    code, out = run(tmp_path, "solve", config)
    assert code == EXIT_NUMERICAL
    payload = report(out)
    assert payload["converged"] is False
    assert "did not reach" in payload["error"]
    assert (out / "solution.csv").exists()
    assert "error: newton did not reach" in capsys.readouterr().err


def test_solve_with_refinement(tmp_path):
    config = {**MANUFACTURED, "solver": {"tol_residual": 1e-11, "refine": [{"J": 4, "K": 4}]}}
    code, out = run(tmp_path, "solve", config)
    assert code == EXIT_OK
    payload = report(out)
    assert (payload["J"], payload["K"]) == (8, 8)
    assert payload["stage_increment"] is not None


def test_search_with_a_linear_system_finds_nothing(tmp_path):
    config = {
        "b": 1.0,
        "eps": 0.1,
        "truncation": {"J": 3, "K": 3},
        "f": {"kind": "zero"},
        "g": {"kind": "zero"},
        "solver": {"search": 2},
    }
    code, out = run(tmp_path, "solve", config)
    assert code == EXIT_OK
    assert report(out)["found"] == 0


def test_search_rejects_a_forcing(tmp_path):
    code, _ = run(tmp_path, "solve", {**MANUFACTURED, "solver": {"search": 1}})
    assert code == EXIT_CONFIG


def test_sweep_writes_the_table(tmp_path):
    config = {**MANUFACTURED, "eps": 0.0, "eps_list": [0.1, 0.05]}
    code, out = run(tmp_path, "sweep", config)
    assert code == EXIT_OK

    columns, data = read_csv(out / "sweep.csv")
    assert columns == ["eps", "err_u_l2", "err_v_l2", "phi", "res_dual"]
    assert data[:, 0].tolist() == [0.1, 0.05, 0.0]
    assert data[-1, 1] == 0.0
    assert data[0, 1] > data[1, 1] > 0
    assert report(out)["completed"]


def test_sweep_needs_an_eps_list(tmp_path):
    code, _ = run(tmp_path, "sweep", MANUFACTURED)
    assert code == EXIT_CONFIG


def test_represent_range_source(tmp_path):
    config = {
        "b": 1.0,
        "truncation": {"J": 4, "K": 2},
        "represent": {
            "terms": [{"j": 2, "k": 1, "amplitude": 1.0}, {"j": 1, "k": 0, "amplitude": 0.5}],
            "shifts": [0.1, 0.05],
        },
    }
    code, out = run(tmp_path, "represent", config)
    assert code == EXIT_OK
    payload = report(out)
    assert payload["range_ok"]
    assert payload["sup_violation"] < 1e-12
    assert payload["w1_l2"] > 0
    assert isinstance(payload["profile_tail"], float)
    assert (out / "w1.csv").exists()
    assert (out / "modulus.csv").exists()


def test_represent_kernel_source_is_not_in_the_range(tmp_path):
    config = {
        "b": 1.0,
        "truncation": {"J": 4, "K": 4},
        "represent": {"terms": [{"j": 1, "k": 1, "amplitude": 1.0}]},
    }
    code, out = run(tmp_path, "represent", config)
    assert code == EXIT_NUMERICAL
    payload = report(out)
    assert payload["range_ok"] is False
    assert payload["sup_violation"] == pytest.approx(3.141592653589793, rel=1e-9)
    assert isinstance(payload["profile_tail"], float)
    assert payload["profile_K"] == 4

    columns, _ = read_csv(out / "profile_p.csv")
    assert columns == ["k", "re_p", "im_p"]


def test_represent_without_w1(tmp_path):
    config = {
        "b": 1.0,
        "truncation": {"J": 4, "K": 4},
        "represent": {"terms": [{"j": 1, "k": 1, "amplitude": 1.0}], "w1": False},
    }
    code, out = run(tmp_path, "represent", config)
    assert code == EXIT_OK
    assert "range_ok" not in report(out)


def test_spectrum_table(tmp_path, capsys):
    code, out = run(tmp_path, "spectrum", {"b": 1.0, "truncation": {"J": 4, "K": 4}})
    assert code == EXIT_OK
    payload = report(out)
    assert payload["eta"] == 1.0
    assert payload["kernel_modes"] == 8

    lines = (out / "spectrum.csv").read_text().splitlines()
    assert lines[0].startswith("# eta=1.0")
    assert lines[1] == "j,k,lambda,class"
    assert len(lines) == 2 + 4 * 9
    assert "kernel_modes=8" in capsys.readouterr().out


def test_spectrum_collision_exits_with_two(tmp_path, capsys):
    code, _ = run(tmp_path, "spectrum", {"b": 3.0, "truncation": {"J": 4, "K": 4}})
    assert code == EXIT_CONFIG
    assert "(1, 2)" in capsys.readouterr().err


def test_output_dir_from_config(tmp_path):
    out = tmp_path / "from_config"
    config_path = tmp_path / "run.json"
    config_path.write_text(json.dumps({"b": 1.0, "truncation": {"J": 2, "K": 2}, "output_dir": str(out)}))
    assert main(["spectrum", "--config", str(config_path)]) == EXIT_OK
    assert (out / "report.json").exists()


def test_commands_are_traced(tmp_path):
    from .testing_processor import fetch_traces

    run(tmp_path, "spectrum", {"b": 1.0, "truncation": {"J": 2, "K": 2}})
    traces = fetch_traces()
    assert [t.name for t in traces] == ["kgp spectrum"]


def test_solve_restarts_from_its_own_solution_file(tmp_path):
    code, out = run(tmp_path / "first", "solve", MANUFACTURED)
    assert code == EXIT_OK
    saved = out / "solution.csv"

    restart = {
        **MANUFACTURED,
        "solver": {"tol_residual": 1e-11, "initial_guess": {"kind": "from_file", "path": str(saved)}},
    }
    code, out = run(tmp_path / "second", "solve", restart)
    assert code == EXIT_OK
    payload = report(out)
    assert payload["iterations"] <= 2
    assert payload["residuals"]["dual_H"] <= 1e-11
