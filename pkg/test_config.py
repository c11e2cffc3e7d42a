"""
Tests for run configuration loading, validation and precedence
"""

import sys
import os

import numpy as np
import pandas as pd
import pytest

# Add the current directory to the Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from core.errors import InvalidInputError
from utils.config import QuadratureSettings, RunConfig, load_config


def _write(path, text):
    path.write_text(text)
    return path


def test_defaults():
    config = load_config(env={})
    assert config.n == 2
    assert config.seed == 20240101
    assert config.grids.abel_N == 2048
    assert config.grids.nu_max == 4096.0
    assert config.grids.s_max == pytest.approx(1.0 - 4.0 / 4096.0)
    assert config.quadrature.quad_panels == 256
    assert config.quadrature.mc_samples == 10_000_000
    assert config.quadrature.mc_batch == 1 << 20
    assert config.extraction.extract_panels == 1024
    assert config.tolerances.roundtrip == 5e-3
    assert config.tolerances.fu_match == 1e-5
    assert config.tolerances.jacobian == 1e-6
    assert config.tolerances.abel_normalization == 1e-6
    assert config.tolerances.error_window == (0.05, 0.95)


def test_file_values(tmp_path):
    path = _write(tmp_path / "run.toml", """
n = 3
seed = 7

[profile]
hpp_poly = [0.25, -0.25]

[grids]
abel_N = 512

[tolerances]
roundtrip = 1e-2
""")
    config = load_config(path, env={})
    assert config.n == 3 and config.seed == 7
    assert config.grids.abel_N == 512
    assert config.tolerances.roundtrip == 1e-2
    profile = config.build_profile()
    assert profile.n == 3
    assert profile.hpp(1.0) == pytest.approx(0.0)


def test_precedence_flag_over_env_over_file(tmp_path):
    path = _write(tmp_path / "run.toml", 'seed = 1\noutput_dir = "from_file"\n')
    env = {"TORIC_SEED": "2", "TORIC_OUTPUT_DIR": "from_env", "TORIC_LOG_JSON": "1"}
    config = load_config(path, env=env)
    assert config.seed == 2
    assert str(config.output_dir) == "from_env"
    assert config.log_json is True
    config = load_config(path, env=env, overrides={"seed": 3, "tolerances.roundtrip": 0.5, "output_dir": None})
    assert config.seed == 3
    assert config.tolerances.roundtrip == 0.5
    assert str(config.output_dir) == "from_env"


def test_relative_profile_table_resolves_against_config_file(tmp_path):
    t = np.linspace(0.0, 1.0, 21)
    pd.DataFrame({"t": t, "hpp": 0.2 * t * (1 - t)}).to_csv(tmp_path / "profile.csv", index=False)
    path = _write(tmp_path / "run.toml", '[profile]\nhpp_table = "profile.csv"\n')
    config = load_config(path, env={})
    assert config.build_profile().hpp(0.5) == pytest.approx(0.05, abs=1e-3)


@pytest.mark.parametrize("text", [
    "n = 1\n",
    "[grids]\nabel_N = 0\n",
    "[quadrature]\nmc_samples = -5\n",
    "[fu]\nnu = [8.0, 3.5]\n",
    "[forward]\nalpha = [1.0, 2.0, 3.0]\n",
    "[profile]\nhpp_poly = [0.1]\nhpp_table = \"x.csv\"\n",
    "[tolerances]\nerror_window = [0.9, 0.1]\n",
    "unknown_key = 1\n",
    "n = \n",
])
def test_invalid_files_are_rejected(tmp_path, text):
    path = _write(tmp_path / "bad.toml", text)
    with pytest.raises(InvalidInputError):
        load_config(path, env={})


def test_missing_file():
    with pytest.raises(InvalidInputError):
        load_config("does/not/exist.toml", env={})


def test_invalid_profile_is_rejected_at_build_time(tmp_path):
    path = _write(tmp_path / "run.toml", "[profile]\nhpp_poly = [-10.0]\n")
    config = load_config(path, env={})
    with pytest.raises(InvalidInputError, match="not a valid symplectic potential"):
        config.build_profile()


def test_panels_for_caps_high_dimensions():
    q = QuadratureSettings(quad_panels=256, high_dim_panels=32)
    assert q.panels_for(2) == 256
    assert q.panels_for(3) == 32
    assert QuadratureSettings(quad_panels=16).panels_for(4) == 16


def test_manifest_is_json_ready():
    manifest = RunConfig().manifest()
    assert manifest["n"] == 2
    assert manifest["output_dir"] == "out"
    assert manifest["grids"]["abel_N"] == 2048
