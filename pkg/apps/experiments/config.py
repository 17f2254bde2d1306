"""
Run Configuration
Validated run documents (JSON, or YAML by file extension) and their
resolution against the scenario defaults.
"""
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from apps.scenarios.services.scenario_service import (
    MOVING_WATER_PRESETS,
    SCENARIOS,
    Scenario,
    get_scenario,
)
from apps.solver.exceptions import ConfigurationError
from apps.solver.services.fluxes import FLUX_REGISTRY, FluxParams
from apps.solver.services.sbp_service import NODE_FAMILIES

logger = logging.getLogger(__name__)


class RunConfig(BaseModel):
    """
    One run: a scenario name plus overrides of its defaults

    Unset fields fall back to the scenario. steps selects fixed stepping;
    cfl without steps selects adaptive stepping. A non-positive
    subcell_threshold switches subcells off.
    """
    model_config = ConfigDict(extra='forbid')

    scenario: str
    N: Optional[int] = Field(default=None, ge=1)
    p: Optional[int] = Field(default=None, ge=0)
    node_family: Optional[str] = None
    flux: Optional[str] = None
    a1: Optional[float] = None
    a2: Optional[float] = None
    surface_a1: Optional[float] = None
    surface_a2: Optional[float] = None
    m4: float = 0.0
    k9: float = 0.0
    k10: float = 0.0
    k11: float = 0.0
    l10: float = 0.0
    limiter: Optional[bool] = None
    limit_discharge: bool = False
    subcell_threshold: Optional[float] = None
    include_neighbors: Optional[bool] = None
    cfl: Optional[float] = Field(default=None, gt=0)
    steps: Optional[int] = Field(default=None, ge=1)
    T: Optional[float] = Field(default=None, gt=0)
    output_dir: Optional[str] = None
    seed: Optional[int] = None
    m: Optional[float] = None
    E: Optional[float] = None
    preset: Optional[str] = None

    @field_validator('scenario')
    @classmethod
    def known_scenario(cls, value: str) -> str:
        if value not in SCENARIOS:
            raise ValueError(f"unknown scenario '{value}' (choose from {', '.join(SCENARIOS)})")
        return value

    @field_validator('flux')
    @classmethod
    def known_flux(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and value not in FLUX_REGISTRY:
            raise ValueError(f"unknown flux '{value}' (choose from {', '.join(FLUX_REGISTRY)})")
        return value

    @field_validator('node_family')
    @classmethod
    def known_family(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and value not in NODE_FAMILIES:
            raise ValueError(f"unknown node family '{value}' (choose from {', '.join(NODE_FAMILIES)})")
        return value

    @field_validator('preset')
    @classmethod
    def known_preset(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and value not in MOVING_WATER_PRESETS:
            raise ValueError(f"unknown preset '{value}' (choose from {', '.join(MOVING_WATER_PRESETS)})")
        return value

    def scenario_options(self) -> Dict[str, Any]:
        if self.scenario != 'moving_water':
            if any(v is not None for v in (self.m, self.E, self.preset)):
                raise ConfigurationError("m, E and preset only apply to the moving_water scenario")
            return {}
        return {'m': self.m, 'E': self.E, 'preset': self.preset}

    def build_scenario(self) -> Scenario:
        return get_scenario(self.scenario, **self.scenario_options())

    def resolve(self, scenario: Optional[Scenario] = None) -> 'ResolvedRun':
        """Merge the overrides into the scenario defaults"""
        scenario = scenario or self.build_scenario()
        a1 = scenario.a1 if self.a1 is None else self.a1
        a2 = scenario.a2 if self.a2 is None else self.a2

        if self.steps is not None:
            steps, cfl = self.steps, self.cfl or scenario.cfl
        elif self.cfl is not None:
            steps, cfl = None, self.cfl
        else:
            steps, cfl = scenario.steps, scenario.cfl

        threshold = scenario.subcell_threshold if self.subcell_threshold is None else self.subcell_threshold
        if threshold is not None and threshold <= 0:
            threshold = None

        return ResolvedRun(
            scenario=scenario.name,
            N=self.N or scenario.n_elements,
            p=scenario.degree if self.p is None else self.p,
            node_family=self.node_family or scenario.node_family,
            flux=self.flux or scenario.flux,
            a1=a1,
            a2=a2,
            surface_a1=a1 if self.surface_a1 is None else self.surface_a1,
            surface_a2=a2 if self.surface_a2 is None else self.surface_a2,
            m4=self.m4,
            k9=self.k9,
            k10=self.k10,
            k11=self.k11,
            l10=self.l10,
            limiter=scenario.limiter if self.limiter is None else self.limiter,
            limit_discharge=self.limit_discharge,
            subcell_threshold=threshold,
            include_neighbors=(scenario.include_neighbors if self.include_neighbors is None
                               else self.include_neighbors),
            cfl=cfl,
            steps=steps,
            T=self.T or scenario.t_final,
            g=scenario.g,
        )


@dataclass(frozen=True)
class ResolvedRun:
    """Fully specified run parameters"""
    scenario: str
    N: int
    p: int
    node_family: str
    flux: str
    a1: float
    a2: float
    surface_a1: float
    surface_a2: float
    m4: float
    k9: float
    k10: float
    k11: float
    l10: float
    limiter: bool
    limit_discharge: bool
    subcell_threshold: Optional[float]
    include_neighbors: bool
    cfl: float
    steps: Optional[int]
    T: float
    g: float

    @property
    def volume_params(self) -> FluxParams:
        return FluxParams(a1=self.a1, a2=self.a2, m4=self.m4, k9=self.k9,
                          k10=self.k10, k11=self.k11, l10=self.l10)

    @property
    def surface_params(self) -> FluxParams:
        return FluxParams(a1=self.surface_a1, a2=self.surface_a2, m4=self.m4, k9=self.k9,
                          k10=self.k10, k11=self.k11, l10=self.l10)

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def parse_run_config(data: Dict[str, Any]) -> RunConfig:
    """
    Validate a config mapping

    Raises:
        ConfigurationError: unknown keys, bad values or unknown names
    """
    if not isinstance(data, dict):
        raise ConfigurationError("Run config must be a mapping")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigurationError(f"Invalid run config: {problems}") from e


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """
    Read a run config file; .yaml/.yml is parsed with safe_load, anything else as JSON

    Raises:
        ConfigurationError: missing file, parse error or validation error
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigurationError(f"Cannot read config {path}: {str(e)}") from e

    try:
        if path.suffix.lower() in ('.yaml', '.yml'):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigurationError(f"Cannot parse config {path}: {str(e)}") from e

    config = parse_run_config(data)
    logger.info(f"Loaded run config {path} (scenario={config.scenario})")
    return config
