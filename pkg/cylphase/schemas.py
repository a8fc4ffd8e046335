from pathlib import Path
from typing import Annotated, Any, Literal
import json

from annotated_types import Len
from pydantic import AfterValidator, BaseModel, ConfigDict, Field, ValidationError, model_validator

from cylphase import L_MAX
from cylphase.core import reduce_angle
from cylphase.errors import ConfigError
from cylphase.utils import config_error_from_validation, make_error


def is_finite(value: float):
    if value != value or value in (float('inf'), float('-inf')):
        raise ValueError('Value must be finite')
    return value


def is_ordered(window: tuple[int, int]):
    if window[1] < window[0]:
        raise ValueError('Window upper bound is below lower bound')
    return window


# Custom types
PositiveInt = Annotated[int, Field(gt=0)]
PositiveFloat = Annotated[float, Field(gt=0), AfterValidator(is_finite)]
Angle = Annotated[float, AfterValidator(is_finite), AfterValidator(reduce_angle)]
WindowHalfWidth = Annotated[int, Field(ge=1, le=4096)]
EllWindow = Annotated[tuple[int, int], AfterValidator(is_ordered)]


__all__ = [
    'StateSpec',
    'GridSpec',
    'DynamicsSpec',
    'TomographySpec',
    'ExperimentConfig',
    'WignerGridFile',
    'load_config',
]


class Schema(BaseModel):
    model_config = ConfigDict(extra='forbid', populate_by_name=True)


class StateSpec(Schema):
    kind: Literal['eigenstate', 'coherent', 'superposition', 'file'] = 'coherent'
    l0: int = 0
    phi0: Angle = 0.0
    l1: int | None = None
    l2: int | None = None
    theta: Angle = 0.0
    path: str | None = None

    @model_validator(mode='after')
    def check_kind_parameters(self):
        if self.kind == 'superposition':
            if self.l1 is None or self.l2 is None:
                raise ValueError('superposition needs l1 and l2')
            if self.l1 == self.l2:
                raise ValueError('superposition needs l1 != l2')
        if self.kind == 'file' and not self.path:
            raise ValueError('file state needs a path')
        return self


class GridSpec(Schema):
    half_width: WindowHalfWidth = L_MAX
    center: int | None = None
    n_phi: PositiveInt = 256


class DynamicsSpec(Schema):
    lam: float = Field(0.0, alias='lambda')
    dt: PositiveFloat = 1e-3
    t_final: Annotated[float, Field(ge=0)] = 1.0
    method: Literal['schrodinger', 'wigner_exact', 'semiclassical'] = 'schrodinger'
    save_every: PositiveInt = 100


class TomographySpec(Schema):
    n_phi: PositiveInt | None = None
    counts: PositiveInt | None = None
    roundtrip: bool = False


class ExperimentConfig(Schema):
    command: Literal['wigner', 'evolve', 'tomo', 'selftest'] = 'wigner'
    state: StateSpec = StateSpec()
    grid: GridSpec = GridSpec()
    dynamics: DynamicsSpec = DynamicsSpec()
    tomography: TomographySpec = TomographySpec()
    l_max: PositiveInt = L_MAX
    output: str = 'out'
    format: Literal['csv', 'json'] = 'csv'
    seed: int = 0


class WignerGridFile(Schema):
    ell_window: EllWindow
    phi_samples: Annotated[list[float], Len(min_length=2)]
    values: list[list[float]]
    tail: list[float] | None = None

    @model_validator(mode='after')
    def check_shape(self):
        rows = self.ell_window[1] - self.ell_window[0] + 1
        if len(self.values) != rows:
            raise ValueError(f'values needs {rows} rows')
        if any(len(row) != len(self.phi_samples) for row in self.values):
            raise ValueError('every row needs one value per phi sample')
        if self.tail is not None and len(self.tail) != len(self.phi_samples):
            raise ValueError('tail needs one value per phi sample')
        return self


def _merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        elif value is not None:
            out[key] = value
    return out


def load_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """File values first, flag values on top, then validation"""
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(
                f"Cannot read config file {path}: {exc}",
                [make_error(['config'], 'file', str(exc))]
            )
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must hold a JSON object")
    data = _merge(data, overrides or {})
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise config_error_from_validation(exc)
