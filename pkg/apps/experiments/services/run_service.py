"""
Run Service
Executes one configured run: builds the operator, mesh and spatial
discretisation for a scenario, integrates in time and writes the solution,
the per-step diagnostics and a JSON summary.
"""
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from django.conf import settings

from apps.experiments.config import ResolvedRun, RunConfig
from apps.scenarios.services.scenario_service import Scenario, error_norms
from apps.solver.services.limiter import PositivityLimiter
from apps.solver.services.physics import PhysicsContext, SweState, velocity
from apps.solver.services.sbp_service import SbpOperator, sbp_operator
from apps.solver.services.semidisc import Mesh, SemiDiscretisation, SolutionField, SubcellConfig
from apps.solver.services.time_integration import StepControl, StepRecord, evolve

logger = logging.getLogger(__name__)

SOLUTION_COLUMNS = ['element', 'node', 'x', 'b', 'h', 'hv', 'v']
DIAGNOSTICS_COLUMNS = ['step', 't', 'dt', 'mass', 'momentum', 'entropy', 'entropy_rate',
                       'min_h', 'n_subcell_elements']


@dataclass
class RunOutcome:
    """Everything a run produced, before it is written anywhere"""
    config: ResolvedRun
    scenario: Scenario
    mesh: Mesh
    window: slice
    op: SbpOperator
    ctx: PhysicsContext
    initial: SolutionField
    final: SolutionField
    diagnostics: pd.DataFrame
    wall_time: float

    @property
    def errors(self) -> Optional[Dict[str, float]]:
        if not self.scenario.has_exact:
            return None
        norms = error_norms(self.final, self.scenario.exact_at(self.config.T), self.mesh, self.op,
                            self.window)
        return norms.as_dict()

    @property
    def entropy_drift(self) -> float:
        """Relative change of the total entropy over the run"""
        first = float(self.diagnostics['entropy'].iloc[0])
        last = float(self.diagnostics['entropy'].iloc[-1])
        return (last - first) / abs(first) if first != 0 else last - first

    @property
    def mass_drift(self) -> float:
        first = float(self.diagnostics['mass'].iloc[0])
        last = float(self.diagnostics['mass'].iloc[-1])
        return (last - first) / abs(first) if first != 0 else last - first

    def metric_value(self, metric: Optional[str] = None) -> float:
        metric = metric or self.scenario.metric
        if metric == 'max_error':
            return self.errors['max_error']
        return abs(self.entropy_drift)

    def solution_frame(self) -> pd.DataFrame:
        """Nodal solution on the scenario window"""
        state = self.final
        w = self.window
        h, hv, b = state.h[w], state.hv[w], state.b[w]
        x = self.mesh.node_coordinates(self.op)[w]
        n_elements, n_nodes = h.shape
        v = velocity(SweState(h=np.maximum(h, 0.0), hv=hv), self.ctx)
        return pd.DataFrame({
            'element': np.repeat(np.arange(n_elements), n_nodes),
            'node': np.tile(np.arange(n_nodes), n_elements),
            'x': x.ravel(),
            'b': b.ravel(),
            'h': h.ravel(),
            'hv': hv.ravel(),
            'v': v.ravel(),
        }, columns=SOLUTION_COLUMNS)

    def summary(self) -> Dict[str, Any]:
        frame = self.diagnostics
        return {
            'scenario': self.scenario.name,
            'parameters': self.config.as_dict(),
            'scenario_options': dict(self.scenario.options or {}),
            'metric': self.scenario.metric,
            'metric_value': self.metric_value(),
            'errors': self.errors,
            'entropy_drift': self.entropy_drift,
            'mass_drift': self.mass_drift,
            'steps': int(frame['step'].iloc[-1]),
            't_final': float(frame['t'].iloc[-1]),
            'min_h': float(frame['min_h'].min()),
            'max_subcell_elements': int(frame['n_subcell_elements'].max()),
        }


def _diagnostics_row(record: StepRecord) -> Dict[str, Any]:
    diag = record.diagnostics
    return {
        'step': record.step,
        't': record.t,
        'dt': record.dt,
        'mass': diag.mass,
        'momentum': diag.momentum,
        'entropy': diag.entropy,
        'entropy_rate': diag.entropy_rate,
        'min_h': record.min_h,
        'n_subcell_elements': record.n_subcell_elements,
    }


class RunService:
    """Executes runs and writes their output files"""

    def __init__(self):
        self.output_root = Path(settings.EXPERIMENTS['OUTPUT_ROOT'])
        self.precision = settings.EXPERIMENTS['CSV_PRECISION']

    @property
    def float_format(self) -> str:
        return f"%.{self.precision - 1}e"

    def execute(self, config: RunConfig, track_entropy_rate: bool = True) -> RunOutcome:
        """
        Run a configuration in memory

        Raises:
            ConfigurationError: invalid names, degrees or scenario options
            NonFiniteStateError: the solution blew up
            LimiterPreconditionError: negative element mean after a stage
        """
        scenario = config.build_scenario()
        resolved = config.resolve(scenario)

        op = sbp_operator(resolved.node_family, resolved.p)
        mesh, window = scenario.build_mesh(resolved.N)
        ctx = PhysicsContext.from_settings(resolved.g)
        semi = SemiDiscretisation(
            mesh=mesh,
            op=op,
            ctx=ctx,
            vol_params=resolved.volume_params,
            surface_flux=resolved.flux,
            surface_params=resolved.surface_params,
            subcell=SubcellConfig(threshold=resolved.subcell_threshold,
                                  include_neighbors=resolved.include_neighbors),
        )
        limiter = PositivityLimiter(op, ctx, enabled=resolved.limiter,
                                    limit_discharge=resolved.limit_discharge)
        control = StepControl(t_final=resolved.T, cfl=resolved.cfl, steps=resolved.steps)
        initial = scenario.initial_field(mesh, op)

        logger.info(
            f"Run {scenario.name}: N={resolved.N} p={resolved.p} {resolved.node_family} "
            f"flux={resolved.flux} a1={resolved.a1} a2={resolved.a2} limiter={resolved.limiter}"
        )
        started = time.perf_counter()
        rows: List[Dict[str, Any]] = []
        final = initial
        first = True
        for record in evolve(semi, initial, control, limiter, track_entropy_rate=track_entropy_rate):
            rows.append(_diagnostics_row(record))
            if first:
                # the limiter may have touched the initial data
                initial = record.state
                first = False
            final = record.state
            if record.n_subcell_elements:
                logger.debug(f"Step {record.step}: {record.n_subcell_elements} subcell elements")
        wall_time = time.perf_counter() - started

        logger.info(f"Run {scenario.name} finished after {len(rows) - 1} steps in {wall_time:.2f}s")
        return RunOutcome(
            config=resolved,
            scenario=scenario,
            mesh=mesh,
            window=window,
            op=op,
            ctx=ctx,
            initial=initial,
            final=final,
            diagnostics=pd.DataFrame(rows, columns=DIAGNOSTICS_COLUMNS),
            wall_time=wall_time,
        )

    def output_dir(self, config: RunConfig) -> Path:
        if config.output_dir:
            return Path(config.output_dir)
        return self.output_root / config.scenario

    def write(self, outcome: RunOutcome, directory: Path) -> Dict[str, Path]:
        """Write solution.csv, diagnostics.csv and summary.json"""
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            'solution': directory / 'solution.csv',
            'diagnostics': directory / 'diagnostics.csv',
            'summary': directory / 'summary.json',
        }
        outcome.solution_frame().to_csv(paths['solution'], index=False, float_format=self.float_format)
        outcome.diagnostics.to_csv(paths['diagnostics'], index=False, float_format=self.float_format)
        with open(paths['summary'], 'w') as f:
            json.dump(outcome.summary(), f, indent=2, sort_keys=True)
            f.write('\n')
        logger.info(f"Wrote run output to {directory}")
        return paths

    def run(self, config: RunConfig) -> Dict[str, Any]:
        """
        Execute a run and write its output

        Returns:
            Summary dict with the added keys 'output_dir' and 'wall_time',
            which summary.json leaves out
        """
        outcome = self.execute(config)
        directory = self.output_dir(config)
        self.write(outcome, directory)
        summary = outcome.summary()
        summary['output_dir'] = str(directory)
        summary['wall_time'] = outcome.wall_time
        return summary


# Singleton instance
_run_service = None


def get_run_service() -> RunService:
    """Get or create run service instance"""
    global _run_service
    if _run_service is None:
        _run_service = RunService()
    return _run_service
