"""
End-to-end tests for the command line and the command layer
"""

import sys
import os
import json

import pandas as pd
import pytest

# Add the current directory to the Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from commands.command_manager import CommandManager
from core.errors import EXIT_FAILURE, EXIT_INVALID_INPUT, EXIT_OK
from interfaces.cli import build_parser, float_list, main
from utils.config import load_config

SMALL_RUN = """
n = 2

[profile]
hpp_poly = [0.25, -0.25]

[grids]
abel_N = 512

[quadrature]
quad_panels = 32
"""


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for key in ("TORIC_LOG_LEVEL", "TORIC_LOG_JSON", "TORIC_OUTPUT_DIR", "TORIC_SEED"):
        monkeypatch.delenv(key, raising=False)


@pytest.fixture
def run_config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(SMALL_RUN)
    return path


def _run(config, out, *args):
    return main(["--config", str(config), "--out", str(out), *args])


def test_float_list():
    assert float_list("1,-1, 0.5") == [1.0, -1.0, 0.5]
    assert build_parser().parse_args(["forward", "--alpha", "1,-1"]).alpha == [1.0, -1.0]


def test_forward(run_config, tmp_path, capsys):
    out = tmp_path / "out"
    code = _run(run_config, out, "forward", "--alpha", "1,-1", "--center", "8", "--width", "1")
    assert code == EXIT_OK
    value = float(capsys.readouterr().out.strip())
    frame = pd.read_csv(out / "forward.csv")
    assert list(frame.columns) == ["alpha", "c", "w", "value", "error_estimate"]
    assert frame["value"].iloc[0] == pytest.approx(value, rel=1e-12)
    assert value > 0.0


def test_forward_rejects_wrong_alpha_length(run_config, tmp_path):
    assert _run(run_config, tmp_path / "out", "forward", "--alpha", "1,2,3") == EXIT_INVALID_INPUT


def test_fu_then_reconstruct(run_config, tmp_path, capsys):
    out = tmp_path / "out"
    assert _run(run_config, out, "fu") == EXIT_OK
    fu = pd.read_csv(out / "fu.csv")
    assert list(fu.columns) == ["nu", "s1", "f_u"]
    assert len(fu) == 512

    capsys.readouterr()
    assert _run(run_config, out, "reconstruct", "--fu-csv", str(out / "fu.csv")) == EXIT_OK
    line = capsys.readouterr().out
    assert "sup_error=" in line and "N=512" in line
    recon = pd.read_csv(out / "reconstruction.csv")
    assert list(recon.columns) == ["mu", "V_recovered", "hpp_recovered", "hpp_reference", "abs_error"]
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["command"] == "reconstruct"


def test_fu_at_explicit_nu(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(SMALL_RUN + "\n[fu]\nnu = [5.0, 8.0, 16.0]\n")
    out = tmp_path / "out"
    assert _run(path, out, "fu") == EXIT_OK
    fu = pd.read_csv(out / "fu.csv")
    assert fu["nu"].tolist() == [5.0, 8.0, 16.0]


def test_outputs_are_byte_identical_across_runs(run_config, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert _run(run_config, first, "fu") == EXIT_OK
    assert _run(run_config, second, "fu") == EXIT_OK
    assert (first / "fu.csv").read_bytes() == (second / "fu.csv").read_bytes()
    manifest_a = json.loads((first / "run_manifest.json").read_text())
    manifest_b = json.loads((second / "run_manifest.json").read_text())
    manifest_a["config"].pop("output_dir")
    manifest_b["config"].pop("output_dir")
    assert manifest_a == manifest_b


def test_roundtrip_pass_and_corruption(run_config, tmp_path, capsys):
    out = tmp_path / "out"
    assert _run(run_config, out, "--tol", "0.1", "roundtrip") == EXIT_OK
    assert capsys.readouterr().out.startswith("PASS")
    assert (out / "roundtrip.csv").exists()
    assert _run(run_config, out, "--tol", "0.1", "roundtrip", "--fu-scale", "1.1") == EXIT_FAILURE
    assert capsys.readouterr().out.startswith("FAIL")


def test_verify_selected_suites(run_config, tmp_path):
    out = tmp_path / "out"
    code = _run(run_config, out, "verify", "--suite", "jacobian", "--suite", "volume")
    assert code == EXIT_OK
    table = pd.read_csv(out / "verify.csv")
    # suites run in their fixed order regardless of the flag order
    assert table["suite"].tolist() == ["volume", "jacobian"]
    assert table["passed"].all()


def test_verify_failure_exits_one(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(SMALL_RUN + "\n[tolerances]\njacobian = 1e-30\n")
    assert _run(path, tmp_path / "out", "verify", "--suite", "jacobian") == EXIT_FAILURE


def test_invalid_input_exit_codes(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("n = 1\n")
    assert main(["--config", str(bad), "fu"]) == EXIT_INVALID_INPUT
    assert main(["no-such-command"]) == EXIT_INVALID_INPUT
    assert main(["verify", "--suite", "nonsense"]) == EXIT_INVALID_INPUT
    invalid_profile = tmp_path / "invalid.toml"
    invalid_profile.write_text("[profile]\nhpp_poly = [-10.0]\n")
    assert main(["--config", str(invalid_profile), "--out", str(tmp_path / "o"), "fu"]) == EXIT_INVALID_INPUT


def test_reconstruct_needs_existing_table(run_config, tmp_path):
    code = _run(run_config, tmp_path / "out", "reconstruct", "--fu-csv", str(tmp_path / "missing.csv"))
    assert code == EXIT_INVALID_INPUT


@pytest.mark.asyncio
async def test_command_manager_dispatch(run_config, tmp_path):
    config = load_config(run_config, env={}, overrides={"output_dir": str(tmp_path / "out")})
    manager = CommandManager(config)
    await manager.initialize()
    assert await manager.get_available_commands() == ["forward", "fu", "reconstruct", "roundtrip", "verify"]

    missing = await manager.handle_command("plot", None)
    assert missing["success"] is False
    assert missing["exit_code"] == EXIT_INVALID_INPUT


@pytest.mark.asyncio
async def test_verify_command_runs_suites_concurrently(run_config, tmp_path):
    from argparse import Namespace
    from commands.verify_command import VerifyCommand

    config = load_config(run_config, env={}, overrides={"output_dir": str(tmp_path / "out")})
    result = await VerifyCommand().run(config, Namespace(suite=["change_of_variables", "jacobian"]))
    assert result["success"] is True
    assert result["exit_code"] == EXIT_OK
    assert "change_of_variables" in result["response"]


def test_change_of_variables_suite_passes_with_default_tolerances():
    from commands.verify_command import check_change_of_variables

    result = check_change_of_variables(load_config(env={}))
    assert result.passed
    assert result.observed <= 1e-6


def test_tolerance_failures_map_to_exit_one():
    from core.errors import ToleranceError, exit_code_for

    assert exit_code_for(ToleranceError("sup error 0.1 exceeds tolerance 0.005")) == EXIT_FAILURE


@pytest.mark.asyncio
async def test_roundtrip_failure_keeps_its_report(run_config, tmp_path):
    from argparse import Namespace
    from commands.roundtrip_command import RoundtripCommand

    config = load_config(run_config, env={}, overrides={"output_dir": str(tmp_path / "out")})
    result = await RoundtripCommand().run(config, Namespace(fu_scale=1.2))
    assert result["success"] is False
    assert result["exit_code"] == EXIT_FAILURE
    assert result["response"].startswith("FAIL")
    manifest = json.loads((tmp_path / "out" / "run_manifest.json").read_text())
    assert manifest["results"]["passed"] is False
