"""Run configuration: a JSON-compatible key-value tree with strict keys.

Unknown keys are rejected by name, defaults are filled, and the
mode-dependent requirements (nonzero mass for solving, a seed for
verify runs) are enforced at parse time.
"""

from __future__ import annotations

import json
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError
from .metric import MetricSpec, RankOneBump, TranslatedCenter


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PerturbationCfg(_StrictModel):
    type: Literal["none", "translated_center", "rank_one_bump"] = "none"
    # translated_center
    offset: Optional[list[float]] = None
    reference_radius: float = 1.0
    # rank_one_bump
    direction: Optional[list[float]] = None
    eps: Optional[float] = None

    @model_validator(mode="after")
    def _fields_match_type(self):
        if self.type == "translated_center" and self.offset is None:
            raise ValueError("translated_center requires offset")
        if self.type == "rank_one_bump" and (self.direction is None or self.eps is None):
            raise ValueError("rank_one_bump requires direction and eps")
        return self


class SweepCfg(_StrictModel):
    r_start: float = 0.1
    r_end: float = 0.02
    ratio: float = 0.8

    @model_validator(mode="after")
    def _ranges(self):
        if not 0.5 < self.ratio < 0.95:
            raise ValueError("schedule ratio must lie in (0.5, 0.95)")
        if not 0.0 < self.r_end <= self.r_start:
            raise ValueError("need 0 < r_end <= r_start")
        return self


class ResolutionCfg(_StrictModel):
    lmax: int = 16
    nlat: Optional[int] = None
    nlon: Optional[int] = None

    @model_validator(mode="after")
    def _ranges(self):
        if self.lmax < 8:
            raise ValueError("lmax must be at least 8")
        if self.nlat is not None and self.nlat < self.lmax + 2:
            raise ValueError("nlat must be at least lmax + 2")
        if self.nlon is not None and self.nlon < 2 * self.lmax + 4:
            raise ValueError("nlon must be at least 2*lmax + 4")
        return self


class TolerancesCfg(_StrictModel):
    solver: float = 1e-10
    newton: float = 1e-10
    basin: float = 1e-8

    @model_validator(mode="after")
    def _positive(self):
        for name in ("solver", "newton", "basin"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"tolerance {name} must be positive")
        return self


class OutputsCfg(_StrictModel):
    directory: str = "out"
    formats: list[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])


class BasinCfg(_StrictModel):
    trials: int = 20
    dtau: float = 0.1
    dphi: float = 0.05
    r: float = 0.05


class RunSpec(_StrictModel):
    """Validated run configuration with defaults applied."""

    n: int = 2
    mass_sigma: float
    perturbation: PerturbationCfg = Field(default_factory=PerturbationCfg)
    r_min: float = 1.0
    mode: Literal["sweep", "verify", "oracle-check"] = "sweep"
    sweep: SweepCfg = Field(default_factory=SweepCfg)
    resolution: ResolutionCfg = Field(default_factory=ResolutionCfg)
    tolerances: TolerancesCfg = Field(default_factory=TolerancesCfg)
    outputs: OutputsCfg = Field(default_factory=OutputsCfg)
    basin: BasinCfg = Field(default_factory=BasinCfg)
    seed: Optional[int] = None
    r_max_solver: float = 0.15

    @model_validator(mode="after")
    def _mode_requirements(self):
        if self.mass_sigma == 0.0 and self.mode in ("sweep", "verify"):
            raise ValueError("nonzero mass required")
        if self.mode == "verify" and self.seed is None:
            raise ValueError("seed required for verify mode")
        if self.sweep.r_start > self.r_max_solver:
            raise ValueError("sweep r_start exceeds r_max_solver")
        return self

    def metric_spec(self):
        pert = None
        cfg = self.perturbation
        if cfg.type == "translated_center":
            pert = TranslatedCenter(offset=tuple(cfg.offset),
                                    reference_radius=cfg.reference_radius)
        elif cfg.type == "rank_one_bump":
            pert = RankOneBump(direction=tuple(cfg.direction), eps=cfg.eps)
        return MetricSpec(n=self.n, sigma=self.mass_sigma,
                          perturbation=pert, r_min=self.r_min)


def _friendly_message(err: ValidationError):
    for item in err.errors():
        loc = ".".join(str(p) for p in item["loc"]) if item["loc"] else "config"
        if item["type"] == "missing":
            if loc == "mass_sigma":
                return "mass_sigma required"
            return f"{loc} required"
        if item["type"] == "extra_forbidden":
            return f"unknown key: {loc}"
        msg = item["msg"]
        prefix = "Value error, "
        if msg.startswith(prefix):
            msg = msg[len(prefix):]
        return f"{loc}: {msg}" if item["loc"] else msg
    return str(err)


def parse_config(text):
    """Parse and validate a JSON configuration into a RunSpec."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration is not valid JSON: {exc}") from exc
    return validate_config(data)


def validate_config(data):
    """Validate an already-decoded configuration tree."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    try:
        return RunSpec.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_friendly_message(exc)) from exc
