"""Scenario files: schema, loading and validation.

A scenario is one YAML (or JSON) document with the top-level keys
``engine, object, pointers, sweep, grid, ensemble, output, seed``.
Unknown keys anywhere are rejected.

Example::

    engine: quantum
    object: {preset: anomalous}
    pointers:
      - {preset: gaussian}
      - {preset: thermal, params: {frequency: 1.0, temperature: 1.0}}
    sweep: {geometric: {start: 1.0e-4, stop: 1.0e-2, num: 5}}
    grid: {n_points: 1024}
    output: {dir: runs, stem: anomalous}
"""

from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ScenarioError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


ComplexEntry = Union[float, str]


def parse_complex_matrix(rows):
    return np.array([[complex(str(v).replace(" ", "")) for v in row] for row in rows], dtype=complex)


class ObjectSpec(_Strict):
    """Either a named preset or an inline quantum object (matrices of numbers
    or complex strings such as ``"0.5-0.5j"``; postselection vectors as columns)."""

    preset: Optional[str] = None
    state: Optional[List[List[ComplexEntry]]] = None
    observable: Optional[Union[List[List[ComplexEntry]], str]] = None
    postselection: Optional[List[List[ComplexEntry]]] = None

    @model_validator(mode="after")
    def _one_form(self):
        inline = [self.state, self.postselection]
        if self.preset is None and any(v is None for v in inline + [self.observable]):
            raise ValueError("give either 'preset' or all of 'state', 'observable', 'postselection'")
        if self.preset is not None and any(v is not None for v in inline):
            raise ValueError("'preset' cannot be combined with inline 'state'/'postselection'")
        return self


class PointerSpec(_Strict):
    preset: str
    params: Dict[str, float] = Field(default_factory=dict)
    label: Optional[str] = None

    @property
    def name(self):
        return self.label or self.preset


class GeometricRange(_Strict):
    start: float = Field(gt=0)
    stop: float = Field(gt=0)
    num: int = Field(ge=2)

    @model_validator(mode="after")
    def _ordered(self):
        if self.stop <= self.start:
            raise ValueError("stop must exceed start")
        return self


class SweepSpec(_Strict):
    epsilons: Optional[List[float]] = None
    geometric: Optional[GeometricRange] = None
    outcomes: Optional[List[int]] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.epsilons is None) == (self.geometric is None):
            raise ValueError("give exactly one of 'epsilons' or 'geometric'")
        return self

    @field_validator("epsilons")
    @classmethod
    def _sorted_nonnegative(cls, v):
        if v is None:
            return v
        if not v:
            raise ValueError("epsilon list is empty")
        if any(e < 0 or not np.isfinite(e) for e in v):
            raise ValueError("epsilons must be finite and non-negative")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("epsilons must be strictly increasing")
        return v

    def values(self):
        if self.epsilons is not None:
            return [float(e) for e in self.epsilons]
        g = self.geometric
        return [float(e) for e in np.geomspace(g.start, g.stop, g.num)]


class GridSpec(_Strict):
    n_points: int = Field(default=1024, ge=16)
    length: Optional[float] = Field(default=None, gt=0)


class EnsembleSpec(_Strict):
    n_samples: int = Field(default=1_000_000, ge=10_000)
    n_bins: int = Field(default=41, ge=2)
    q_range: float = Field(default=4.0, gt=0)
    substeps: int = Field(default=64, ge=1)


class OutputSpec(_Strict):
    dir: str = "runs"
    stem: str = "report"


class Scenario(_Strict):
    engine: Literal["quantum", "classical"]
    object: ObjectSpec
    pointers: List[PointerSpec] = Field(min_length=1)
    sweep: SweepSpec
    grid: GridSpec = Field(default_factory=GridSpec)
    ensemble: EnsembleSpec = Field(default_factory=EnsembleSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)
    seed: int = 0

    @model_validator(mode="after")
    def _presets_exist(self):
        from .classical import OBSERVABLES
        from .gallery import (CLASSICAL_OBJECT_PRESETS, CLASSICAL_POINTER_PRESETS,
                              OBJECT_PRESETS, POINTER_PRESETS)

        if self.engine == "quantum":
            objects, pointers = OBJECT_PRESETS, POINTER_PRESETS
        else:
            objects, pointers = CLASSICAL_OBJECT_PRESETS, CLASSICAL_POINTER_PRESETS
            if self.object.preset is None:
                raise ValueError("classical scenarios need an object preset")
            if self.object.observable not in OBSERVABLES:
                raise ValueError(f"classical observable must be one of {sorted(OBSERVABLES)}")
        if self.object.preset is not None and self.object.preset not in objects:
            raise ValueError(f"unknown {self.engine} object preset {self.object.preset!r}; "
                             f"choose from {sorted(objects)}")
        for p in self.pointers:
            if p.preset not in pointers:
                raise ValueError(f"unknown {self.engine} pointer preset {p.preset!r}; "
                                 f"choose from {sorted(pointers)}")
        names = [p.name for p in self.pointers]
        if len(set(names)) != len(names):
            raise ValueError("pointer names must be unique (use 'label' to disambiguate)")
        return self


def _error_pairs(exc):
    out = []
    for err in exc.errors():
        path = ".".join(str(part) for part in err["loc"]) or "<root>"
        out.append((path, err["msg"]))
    return out


def parse_scenario(data):
    """Validate a mapping into a Scenario, raising ScenarioError with field paths."""
    if not isinstance(data, dict):
        raise ScenarioError([("<root>", "scenario must be a mapping")])
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(_error_pairs(exc)) from None


def load_scenario(path):
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ScenarioError([("<file>", str(exc))]) from None
    return parse_scenario(data)
