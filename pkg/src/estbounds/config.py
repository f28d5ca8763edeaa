"""Run configuration: one JSON object per run, unknown fields rejected."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .engine import Tolerances

COMMANDS = ("fig1", "fig2", "fig3", "bound", "quantum-check")


class ConfigError(ValueError):
    """Invalid or unparsable configuration."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSpec(_Strict):
    family: Literal["qubit", "poisson", "kronecker"]
    m: int = Field(1, ge=1)
    r: float = Field(1.0, gt=0.0, le=1.0)
    theta_min: Optional[float] = Field(None, gt=0.0, lt=1.0)
    D: Optional[int] = Field(None, ge=1)
    grid: Optional[list[float]] = None


class ConstraintSpec(_Strict):
    kind: Literal["barankin", "ecrb", "crb"]
    test_points: Optional[list[float]] = None
    n: Optional[int] = Field(None, ge=1)
    spacing: Optional[float] = None

    @model_validator(mode="after")
    def _points_or_rule(self):
        if self.kind != "crb" and self.test_points is None and (self.n is None or self.spacing is None):
            raise ValueError("give either test_points or both n and spacing")
        return self


class TolSpec(_Strict):
    tau_supp: float = Field(Tolerances.tau_supp, ge=0.0)
    tau_rank: float = Field(Tolerances.tau_rank, gt=0.0)
    tau_div: float = Field(Tolerances.tau_div, gt=0.0)
    n_nodes: int = Field(20001, ge=3)

    @model_validator(mode="after")
    def _odd_nodes(self):
        if self.n_nodes % 2 == 0:
            raise ValueError("n_nodes must be odd for Simpson's rule")
        return self

    def engine(self) -> Tolerances:
        return Tolerances(self.tau_supp, self.tau_rank, self.tau_div)


class RunConfig(_Strict):
    command: Literal["fig1", "fig2", "fig3", "bound", "quantum-check"]
    model: Optional[ModelSpec] = None
    constraint: Optional[ConstraintSpec] = None
    theta: Optional[float] = None
    thetas: Optional[list[float]] = None
    m_min: int = Field(1, ge=1)
    m_max: int = Field(30, ge=1)
    m_values: Optional[list[int]] = None
    n_values: list[int] = Field(default_factory=lambda: [3, 4, 5])
    spacing: Optional[float] = None
    r: float = Field(1.0, gt=0.0, le=1.0)
    n_samples: int = Field(200, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    truncation: int = Field(60, ge=1)
    tolerances: TolSpec = Field(default_factory=TolSpec)
    output: Optional[str] = None
    samples_output: Optional[str] = None
    format: Literal["csv", "json"] = "csv"

    @model_validator(mode="after")
    def _command_needs(self):
        if self.command == "bound" and (self.model is None or self.constraint is None or self.theta is None):
            raise ValueError("command 'bound' needs model, constraint and theta")
        if self.m_max < self.m_min:
            raise ValueError("m_max must be >= m_min")
        return self

    def ms(self) -> list[int]:
        if self.m_values is not None:
            return sorted(set(self.m_values))
        return list(range(self.m_min, self.m_max + 1))


def _describe(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"  field {loc}: {e['msg']}")
    return "invalid configuration:\n" + "\n".join(lines)


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse a JSON document; ``overrides`` (e.g. from CLI flags) replace top-level keys."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a single JSON object")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from exc


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, overrides)
