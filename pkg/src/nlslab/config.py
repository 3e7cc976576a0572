"""Experiment configuration: one JSON schema shared by the service, the
CLI, and the runner operations.

A config carries everything a run needs: the model, the lattice, the time
grid, detector thresholds, the initial condition recipe, a seed, and the
output directory.  Parsing is strict (unknown keys rejected, all numeric
knobs positive) so a typo surfaces as a named validation error instead of
a silently defaulted run.
"""

import json
from fractions import Fraction
from typing import List, Literal, Optional, Sequence, Tuple, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field as PydanticField,
    field_validator,
    model_validator,
)

from .diagnostics import (
    BLOWUP_FACTOR,
    GROWTH_SEQ_FACTOR,
    SCATTER_FRAC,
    SCATTER_TOL,
    SCATTER_WINDOW,
    VALID_TAIL,
)
from .lattice import Grid
from .model import ModelParams

__all__ = [
    "DetectorConfig",
    "ExperimentConfig",
    "GridConfig",
    "InitialConfig",
    "ModelConfig",
    "TimeConfig",
    "load_config",
    "parse_sigma",
]

DEFAULT_Z_LENGTH = 64.0


def parse_sigma(value: Union[int, str, Fraction]) -> Fraction:
    """Exact nonlinearity power from an int or a "num/den" string."""
    if isinstance(value, bool):
        raise ValueError("sigma must be an integer or a 'num/den' string")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise ValueError(
        f"sigma must be an integer or a 'num/den' string, got {value!r}"
    )


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ModelConfig(_StrictModel):
    """Equation parameters; sigma stays an exact rational end to end."""

    d: int
    n: int
    sigma: Union[int, str]
    lam: int = PydanticField(alias="lambda")

    @field_validator("sigma", mode="before")
    @classmethod
    def _sigma_parses(cls, v):
        # before-mode so a raw bool is rejected, not coerced to an int
        parse_sigma(v)
        return v

    def to_params(self) -> ModelParams:
        return ModelParams(d=self.d, n=self.n, sigma=parse_sigma(self.sigma), lam=self.lam)


class GridConfig(_StrictModel):
    hermite_modes: int = PydanticField(gt=0)
    z_points: List[int]
    z_length: Optional[List[float]] = None

    @field_validator("z_points")
    @classmethod
    def _points_positive(cls, v):
        if not v or any(p <= 0 for p in v):
            raise ValueError("z_points must be a non-empty list of positive ints")
        return v

    @field_validator("z_length")
    @classmethod
    def _lengths_positive(cls, v):
        if v is not None and any(length <= 0 for length in v):
            raise ValueError("z_length entries must be positive")
        return v

    @model_validator(mode="after")
    def _lengths_match(self):
        if self.z_length is not None and len(self.z_length) != len(self.z_points):
            raise ValueError("z_length must have one entry per z axis")
        return self

    def axes(self) -> Tuple[Tuple[int, float], ...]:
        lengths = self.z_length or [DEFAULT_Z_LENGTH] * len(self.z_points)
        return tuple(zip(self.z_points, lengths))

    def to_grid(self) -> Grid:
        return Grid(hermite_modes=self.hermite_modes, z_axes=self.axes())


class TimeConfig(_StrictModel):
    dt: float = PydanticField(gt=0.0)
    t_max: float = PydanticField(gt=0.0)
    sample_stride: Optional[int] = PydanticField(default=None, gt=0)


class DetectorConfig(_StrictModel):
    """Verdict thresholds; blowup_factor applies to the squared gradient."""

    blowup_factor: float = PydanticField(default=BLOWUP_FACTOR, gt=0.0)
    scatter_frac: float = PydanticField(default=SCATTER_FRAC, gt=0.0)
    scatter_tol: float = PydanticField(default=SCATTER_TOL, gt=0.0)
    window_frac: float = PydanticField(default=SCATTER_WINDOW, gt=0.0, le=1.0)
    tail_valid: float = PydanticField(default=VALID_TAIL, gt=0.0)
    growth_seq_factor: float = PydanticField(default=GROWTH_SEQ_FACTOR, gt=1.0)


class InitialConfig(_StrictModel):
    """Initial condition recipe.

    gaussian: separable packet from the amplitude/width/offset/velocity
    knobs.  ground_state_scaled: the config-grid ground state scaled by
    `amplitude`.  file: a serialized field read from `path`, checked
    against the config header.
    """

    kind: Literal["gaussian", "ground_state_scaled", "file"]
    amplitude: float = PydanticField(default=1.0, gt=0.0)
    width_y: float = PydanticField(default=1.0, gt=0.0)
    width_z: Union[float, List[float]] = 1.0
    offset_z: Union[float, List[float]] = 0.0
    phase_velocity: Union[float, List[float]] = 0.0
    path: Optional[str] = None

    @field_validator("width_z")
    @classmethod
    def _widths_positive(cls, v):
        widths = v if isinstance(v, list) else [v]
        if any(w <= 0 for w in widths):
            raise ValueError("width_z must be positive")
        return v

    @model_validator(mode="after")
    def _kind_keys(self):
        if self.kind == "file" and not self.path:
            raise ValueError("initial.kind 'file' requires initial.path")
        return self


class ExperimentConfig(_StrictModel):
    model: ModelConfig
    grid: GridConfig
    time: TimeConfig
    initial: InitialConfig
    detectors: DetectorConfig = DetectorConfig()
    seed: int = 0
    output_dir: str = "."

    @model_validator(mode="after")
    def _grid_matches_model(self):
        free = self.model.d - self.model.n
        if len(self.grid.z_points) != free:
            raise ValueError(
                f"grid.z_points has {len(self.grid.z_points)} axes but "
                f"d - n = {free}"
            )
        return self

    def canonical_json(self) -> str:
        """Byte-stable reserialization (sorted keys, aliased names)."""
        payload = self.model_dump(by_alias=True)
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def load_config(path) -> ExperimentConfig:
    """Parse a JSON config file; raises pydantic.ValidationError with the
    offending key named."""
    with open(path, "r", encoding="utf-8") as fh:
        return ExperimentConfig.model_validate(json.load(fh))
