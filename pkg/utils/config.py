"""
Run configuration for toric-spectral
TOML run files validated by pydantic; environment variables and command-line
flags override file values (flag > env > file > default).
"""

import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.errors import InvalidInputError
from core.metric import RadialProfile, from_poly, from_table, is_valid

logger = logging.getLogger(__name__)

ENV_KEYS = {
    "TORIC_OUTPUT_DIR": "output_dir",
    "TORIC_SEED": "seed",
    "TORIC_LOG_LEVEL": "log_level",
    "TORIC_LOG_JSON": "log_json",
}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ProfileSpec(_Section):
    """h''(t) = sum hpp_poly[i] t^i, or a CSV table with columns t, hpp"""
    hpp_poly: Optional[List[float]] = None
    hpp_table: Optional[Path] = None

    @model_validator(mode="after")
    def _one_source(self):
        if self.hpp_poly is not None and self.hpp_table is not None:
            raise ValueError("give either hpp_poly or hpp_table, not both")
        if self.hpp_poly is not None and not self.hpp_poly:
            raise ValueError("hpp_poly needs at least one coefficient")
        return self

    def build(self, n: int) -> RadialProfile:
        if self.hpp_table is not None:
            return from_table(self.hpp_table, n)
        return from_poly(self.hpp_poly if self.hpp_poly is not None else [0.0], n)


class GridSettings(_Section):
    abel_N: int = Field(2048, ge=8)
    nu_max: float = Field(4096.0, gt=4.0)
    fu_direct_panels: int = Field(32, ge=2)
    smooth_inverse: bool = False

    @property
    def s_max(self) -> float:
        return 1.0 - 4.0 / self.nu_max


class QuadratureSettings(_Section):
    quad_panels: int = Field(256, ge=2)
    # panels per axis once n >= 3, where the tensor rule grows as (4 panels)^n
    high_dim_panels: int = Field(32, ge=2)
    mc_samples: int = Field(10_000_000, gt=0)
    mc_batch: int = Field(1 << 20, gt=0)
    workers: int = Field(1, ge=1)
    rho_F_nodes: int = Field(4096, ge=8)

    def panels_for(self, n: int) -> int:
        return self.quad_panels if n <= 2 else min(self.quad_panels, self.high_dim_panels)


class Tolerances(_Section):
    roundtrip: float = Field(5e-3, gt=0)
    fu_match: float = Field(1e-5, gt=0)
    jacobian: float = Field(1e-6, gt=0)
    abel_normalization: float = Field(1e-6, gt=0)
    abel_roundtrip: float = Field(1e-3, gt=0)
    rho_F: float = Field(1e-3, gt=0)
    volume: float = Field(1e-3, gt=0)
    change_of_variables: float = Field(1e-6, gt=0)
    extraction: float = Field(5e-2, gt=0)
    mc_sigmas: float = Field(3.0, gt=0)
    error_window: Tuple[float, float] = (0.05, 0.95)

    @field_validator("error_window")
    @classmethod
    def _window(cls, v):
        lo, hi = v
        if not 0.0 <= lo < hi <= 1.0:
            raise ValueError(f"error_window must satisfy 0 <= lo < hi <= 1, got {v}")
        return v


class ForwardSettings(_Section):
    alpha: Optional[List[float]] = None
    center: float = 1.0
    width: float = Field(0.5, gt=0)
    scheme: Literal["tensor_duffy", "monte_carlo"] = "tensor_duffy"


class FuSettings(_Section):
    """Explicit nu values for the fu command; empty means the uniform s_1 grid"""
    nu: List[float] = Field(default_factory=list)

    @field_validator("nu")
    @classmethod
    def _beyond_four(cls, v):
        bad = [x for x in v if x <= 4.0]
        if bad:
            raise ValueError(f"f_u is defined for nu > 4; rejected grid entries {bad}")
        return v


class ExtractionSettings(_Section):
    nu0: List[float] = Field(default_factory=lambda: [8.0, 16.0, 32.0])
    widths: List[float] = Field(default_factory=lambda: [1.0, 0.5, 0.25])
    extract_panels: int = Field(1024, ge=2)


class RunConfig(_Section):
    n: int = Field(2, ge=2)
    seed: int = 20240101
    output_dir: Path = Path("out")
    log_level: str = "INFO"
    log_json: bool = False
    profile: ProfileSpec = ProfileSpec()
    grids: GridSettings = GridSettings()
    quadrature: QuadratureSettings = QuadratureSettings()
    tolerances: Tolerances = Tolerances()
    forward: ForwardSettings = ForwardSettings()
    fu: FuSettings = FuSettings()
    extraction: ExtractionSettings = ExtractionSettings()

    @model_validator(mode="after")
    def _alpha_length(self):
        if self.forward.alpha is not None and len(self.forward.alpha) != self.n:
            raise ValueError(f"forward.alpha has length {len(self.forward.alpha)}, expected n = {self.n}")
        return self

    def build_profile(self) -> RadialProfile:
        """The configured profile; invalid profiles abort with the validity diagnostic"""
        profile = self.profile.build(self.n)
        report = is_valid(profile, seed=self.seed)
        if not report.valid:
            raise InvalidInputError(f"Configured profile is not a valid symplectic potential: {report.message}")
        return profile

    def manifest(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _nested_set(data: Dict[str, Any], dotted: str, value: Any):
    head, _, rest = dotted.partition(".")
    if rest:
        _nested_set(data.setdefault(head, {}), rest, value)
    else:
        data[head] = value


def load_config(path: Optional[Path] = None, env: Optional[Mapping[str, str]] = None,
                overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Build a RunConfig from an optional TOML file, TORIC_* environment variables
    and flag overrides (dotted keys such as "tolerances.roundtrip").
    """
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                data = tomllib.load(f)
        except FileNotFoundError as e:
            raise InvalidInputError(f"Config file not found: {path}") from e
        except tomllib.TOMLDecodeError as e:
            raise InvalidInputError(f"Config file {path} is not valid TOML: {e}") from e
        table = data.get("profile", {}).get("hpp_table")
        if table is not None and not Path(table).is_absolute():
            data["profile"]["hpp_table"] = str(Path(path).parent / table)

    env = os.environ if env is None else env
    for key, field_name in ENV_KEYS.items():
        if env.get(key):
            data[field_name] = env[key]

    for dotted, value in (overrides or {}).items():
        if value is not None:
            _nested_set(data, dotted, value)

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        raise InvalidInputError(f"Invalid configuration:\n{e}") from e
    logger.debug(f"Resolved config: n={config.n}, seed={config.seed}, abel_N={config.grids.abel_N}")
    return config
