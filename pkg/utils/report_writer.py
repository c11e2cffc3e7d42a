"""
CSV and manifest output for toric-spectral runs
Files carry no timestamps so identical runs write identical bytes.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from core.errors import InvalidInputError
from utils.numerics import GridFunction

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.15g"
MANIFEST_NAME = "run_manifest.json"
FU_COLUMNS = ("nu", "s1", "f_u")


class ReportWriter:
    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)
        self.logger = logging.getLogger(__name__)

    def _path(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self._path(name)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        self.logger.info(f"📄 Wrote {len(frame)} rows to {path}")
        return path

    def write_manifest(self, command: str, config: Dict[str, Any],
                       results: Optional[Dict[str, Any]] = None) -> Path:
        """Resolved parameters and result summary of one run"""
        path = self._path(MANIFEST_NAME)
        payload = {"command": command, "config": config, "results": _jsonable(results or {})}
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def fu_frame(s1: np.ndarray, values: np.ndarray, nu: Optional[np.ndarray] = None) -> pd.DataFrame:
    """Rows (nu, s1, f_u); s1 = 0 maps to the nu = 4 limit"""
    s1 = np.asarray(s1, dtype=float)
    nu = 4.0 / (1.0 - s1) if nu is None else np.asarray(nu, dtype=float)
    return pd.DataFrame({"nu": nu, "s1": s1, "f_u": np.asarray(values, dtype=float)})


def read_fu_csv(path: Union[str, Path]) -> GridFunction:
    """f_u samples on a uniform s_1 grid starting at 0, as written by the fu command"""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise InvalidInputError(f"Cannot read f_u data {path}: {e}") from e
    missing = set(FU_COLUMNS) - set(frame.columns)
    if missing:
        raise InvalidInputError(f"f_u data {path} is missing columns {sorted(missing)}")
    s1 = frame["s1"].to_numpy(dtype=float)
    if s1.size < 8 or s1[0] != 0.0:
        raise InvalidInputError(f"f_u data {path} must start at s1 = 0 and hold at least 8 rows")
    steps = np.diff(s1)
    if np.any(steps <= 0) or not np.allclose(steps, steps.mean(), rtol=1e-6, atol=0.0):
        raise InvalidInputError(f"f_u data {path} is not on a uniform s1 grid")
    return GridFunction(0.0, float(s1[-1]), frame["f_u"].to_numpy(dtype=float))
