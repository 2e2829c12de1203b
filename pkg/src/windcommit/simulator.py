"""Rolling-horizon experiment driver.

Per step: assemble the lookahead window (actuals first, forecasts after),
build the scenario tree, solve the stochastic commitment MILP, then realize
the first interval by fixing the stage-1 commitments and redispatching the
continuous variables against the actual wind and demand. Startup costs are
booked once, when a unit actually turns on relative to the previous realized
state.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .agents import (AuditLog, ChatBackend, NullBackend, compute_error_stats,
                     refine_probabilities)
from .errors import DomainError, SolverError
from .milp import SolveStatus, solve_lp, solve_milp
from .scenario_tree import (ArParams, ProbabilityVector, QuantileSet,
                            apply_errors, build_error_tree, default_probabilities)
from .uc_model import Generator, UcInstance, build_milp, decode_solution

MODES = ("baseline", "llm")


def table_i_generators():
    """The three-unit test system (costs converted to $ and $/GWh)."""
    return [
        Generator("unit1", 4e6, 10.0, 3.0, 40_000.0, 4.0, 4.0),
        Generator("unit2", 2e6, 12.0, 2.0, 60_000.0, 4.0, 4.0),
        Generator("unit3", 4e6, 15.0, 0.0, 120_000.0, 6.0, 6.0),
    ]


@dataclass
class SimulationConfig:
    dt: float = 0.5
    total_steps: int = 48
    lookahead: int = 8
    mode: str = "baseline"
    trials: int = 10
    seed: int = 0
    ar: ArParams = field(default_factory=ArParams)
    quantiles: QuantileSet = field(default_factory=lambda: QuantileSet((0.01, 0.1, 0.5, 0.9, 0.99)))
    generators: list = field(default_factory=table_i_generators)
    voll: float = 300_000.0
    wind_cap: float = 20.0
    initial_commitment: tuple = None
    initial_output: tuple = None
    ramp_mode: str = "startup-aware"
    probability_rule: str = "paper-default"
    default_probs: tuple = None   # explicit override of the default vector
    error_mode: str = "per-unit"
    nonanticipativity_stages: int = 1
    gap_tol: float = 1e-6
    node_limit: int = 500_000
    max_retries: int = 2
    history_window: int = 0       # 0 = all realized history
    calibration_floor: float = 0.01
    calibration_shrink: float = 0.5

    def __post_init__(self):
        if self.total_steps < 1 or self.lookahead < 1 or self.trials < 1:
            raise DomainError("total_steps, lookahead, and trials must be >= 1")
        if self.dt <= 0:
            raise DomainError("dt must be positive")
        if self.mode not in MODES:
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.initial_commitment is None:
            # warm system: every unit on at its minimum output
            self.initial_commitment = tuple(True for _ in self.generators)
        if self.initial_output is None:
            self.initial_output = tuple(g.p_min for g in self.generators)
        self.initial_commitment = tuple(bool(v) for v in self.initial_commitment)
        self.initial_output = tuple(float(v) for v in self.initial_output)
        if len(self.initial_commitment) != len(self.generators):
            raise DomainError("initial_commitment length does not match generators")
        if len(self.initial_output) != len(self.generators):
            raise DomainError("initial_output length does not match generators")

    def resolved_default_probabilities(self) -> ProbabilityVector:
        if self.default_probs is not None:
            return ProbabilityVector(tuple(self.default_probs))
        return default_probabilities(self.quantiles, self.probability_rule)

    def to_dict(self):
        """Effective configuration, embedded in reports for reproducibility."""
        return {
            "dt": self.dt, "total_steps": self.total_steps,
            "lookahead": self.lookahead, "mode": self.mode,
            "trials": self.trials, "seed": self.seed,
            "phi": self.ar.phi, "eps_c": self.ar.eps_c,
            "quantiles": list(self.quantiles.levels),
            "default_probabilities": list(self.resolved_default_probabilities().p),
            "generators": [
                {"name": g.name, "startup_cost": g.startup_cost, "p_max": g.p_max,
                 "p_min": g.p_min, "gen_cost": g.gen_cost,
                 "ramp_up": g.ramp_up, "ramp_down": g.ramp_down}
                for g in self.generators
            ],
            "voll": self.voll, "wind_cap": self.wind_cap,
            "initial_commitment": list(self.initial_commitment),
            "initial_output": list(self.initial_output),
            "ramp_mode": self.ramp_mode,
            "probability_rule": self.probability_rule,
            "error_mode": self.error_mode,
            "nonanticipativity_stages": self.nonanticipativity_stages,
            "gap_tol": self.gap_tol,
            "max_retries": self.max_retries,
            "history_window": self.history_window,
            "calibration_floor": self.calibration_floor,
            "calibration_shrink": self.calibration_shrink,
        }


@dataclass(frozen=True)
class SystemState:
    commitment: tuple
    output: tuple


@dataclass
class StepRecord:
    step: int
    commitment: tuple
    output: tuple
    wind: float
    demand: float
    load_curtail: float
    wind_curtail: float
    cost: float
    probabilities: tuple
    provenance: str
    solve_time: float

    def balance_residual(self):
        return (sum(self.output) + self.wind - self.wind_curtail
                - self.demand + self.load_curtail)


@dataclass
class SimulationReport:
    steps: list
    total_cost: float
    load_curtail_gwh: float
    wind_curtail_gwh: float
    mode: str
    trial_id: int
    seed: int
    dt: float

    @classmethod
    def from_steps(cls, steps, mode, trial_id, seed, dt):
        return cls(
            steps=list(steps),
            total_cost=sum(r.cost for r in steps),
            load_curtail_gwh=sum(r.load_curtail for r in steps) * dt,
            wind_curtail_gwh=sum(r.wind_curtail for r in steps) * dt,
            mode=mode, trial_id=trial_id, seed=seed, dt=dt,
        )


def assemble_window(data, step: int, cfg: SimulationConfig):
    """Lookahead window: the current step's actuals first, forecasts after."""
    length = len(data.demand_actual)
    if not 0 <= step < length:
        raise DomainError(f"step {step} out of range for {length}-step data")
    k = min(cfg.lookahead, length - step)
    demand = np.empty(k)
    wind = np.empty(k)
    demand[0] = data.demand_actual[step]
    wind[0] = data.wind_actual[step]
    for i in range(1, k):
        demand[i] = data.demand_forecast[step + i]
        wind[i] = data.wind_forecast[step + i]
    return demand, wind


def _solve_planning(inst, cfg):
    problem, idx = build_milp(inst)
    sol = solve_milp(problem, gap_tol=cfg.gap_tol, node_limit=cfg.node_limit)
    if sol.status is not SolveStatus.OPTIMAL:
        raise SolverError(f"planning MILP returned {sol.status.value}; "
                          f"instance should always be feasible via curtailment slack")
    return decode_solution(inst, idx, sol.values, sol.objective), sol


def _redispatch(cfg, state, committed, demand_actual, wind_actual):
    """Fix stage-1 commitments and redispatch continuously against actuals."""
    inst = UcInstance(
        generators=cfg.generators, dt=cfg.dt, voll=cfg.voll,
        demand=np.array([demand_actual]),
        wind=np.array([[wind_actual]]),
        probabilities=ProbabilityVector((1.0,)),
        initial_commitment=state.commitment,
        initial_output=state.output,
        nonanticipativity_stages=1,
        ramp_mode=cfg.ramp_mode,
    )
    problem, idx = build_milp(inst)
    for g in range(len(cfg.generators)):
        j = idx.y(0, g, 0)
        v = 1.0 if committed[g] else 0.0
        problem.lower[j] = v
        problem.upper[j] = v
    lp = solve_lp(problem)
    if lp.status is not SolveStatus.OPTIMAL:
        raise SolverError(f"realization dispatch returned {lp.status.value}")
    sol = decode_solution(inst, idx, lp.values, lp.objective)
    return sol


def run_step(state: SystemState, demand_window, wind_window, probs: ProbabilityVector,
             cfg: SimulationConfig, step: int = 0, provenance: str = "default"):
    """One rolling step: plan over the window, realize the first interval."""
    t0 = time.perf_counter()
    k = len(demand_window)
    tree = build_error_tree(cfg.quantiles, cfg.ar, k, probabilities=probs)
    wind = apply_errors(tree, wind_window, cfg.wind_cap, cfg.error_mode)
    inst = UcInstance(
        generators=cfg.generators, dt=cfg.dt, voll=cfg.voll,
        demand=demand_window, wind=wind, probabilities=probs,
        initial_commitment=state.commitment, initial_output=state.output,
        nonanticipativity_stages=min(cfg.nonanticipativity_stages, k),
        ramp_mode=cfg.ramp_mode,
    )
    plan, _ = _solve_planning(inst, cfg)
    committed = tuple(bool(round(plan.y[0, g, 0])) for g in range(len(cfg.generators)))

    dispatch = _redispatch(cfg, state, committed, demand_window[0], wind_window[0])
    output = tuple(float(dispatch.P[0, g, 0]) for g in range(len(cfg.generators)))
    load_curtail = float(dispatch.load_curtail[0, 0])
    wind_curtail = float(dispatch.wind_curtail[0, 0])

    startup = sum(g.startup_cost
                  for g, on, was_on in zip(cfg.generators, committed, state.commitment)
                  if on and not was_on)
    generation = cfg.dt * sum(g.gen_cost * p for g, p in zip(cfg.generators, output))
    curtail_cost = cfg.voll * cfg.dt * load_curtail
    record = StepRecord(
        step=step, commitment=committed, output=output,
        wind=float(wind_window[0]), demand=float(demand_window[0]),
        load_curtail=load_curtail, wind_curtail=wind_curtail,
        cost=startup + generation + curtail_cost,
        probabilities=tuple(probs.p), provenance=provenance,
        solve_time=time.perf_counter() - t0,
    )
    return record, SystemState(committed, output)


def run_simulation(cfg: SimulationConfig, data, backend: ChatBackend | None = None,
                   trial_id: int = 0, audit: AuditLog | None = None) -> SimulationReport:
    """Drive all steps of one simulated day."""
    if len(data.demand_actual) < cfg.total_steps:
        raise DomainError("day data shorter than total_steps")
    defaults = cfg.resolved_default_probabilities()
    state = SystemState(cfg.initial_commitment, cfg.initial_output)
    records = []
    for step in range(cfg.total_steps):
        demand_w, wind_w = assemble_window(data, step, cfg)
        if cfg.mode == "llm":
            lo = 0
            if cfg.history_window > 0:
                lo = max(0, step + 1 - cfg.history_window)
            actual = data.wind_actual[lo:step + 1]
            forecast = data.wind_forecast[lo:step + 1]
            stats = compute_error_stats(actual, forecast)
            probs, tag = refine_probabilities(
                backend if backend is not None else NullBackend(),
                stats, cfg.quantiles, defaults,
                history=list(zip(actual, forecast)),
                max_retries=cfg.max_retries, audit=audit,
                floor=cfg.calibration_floor, shrink=cfg.calibration_shrink)
        else:
            probs, tag = defaults, "default"
        record, state = run_step(state, demand_w, wind_w, probs, cfg,
                                 step=step, provenance=tag)
        records.append(record)
    return SimulationReport.from_steps(records, cfg.mode, trial_id, cfg.seed, cfg.dt)


@dataclass
class MetricStats:
    mean: float
    std: float
    min: float
    max: float
    cv: float

    @classmethod
    def from_values(cls, values):
        v = np.asarray(values, dtype=float)
        mean = float(np.mean(v))
        std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
        cv = std / mean if mean != 0 else 0.0
        return cls(mean, std, float(np.min(v)), float(np.max(v)), cv)


@dataclass
class ComparisonSummary:
    baseline_cost: float
    baseline_load_curtail: float
    baseline_wind_curtail: float
    cost: MetricStats
    load_curtail: MetricStats
    wind_curtail: MetricStats
    success_rate: float
    step_envelope: list   # (step, min, mean, max, baseline) per step
    trial_costs: list


def compare_trials(baseline: SimulationReport, trials) -> ComparisonSummary:
    """Cross-trial statistics against the baseline run."""
    trials = list(trials)
    if not trials:
        raise DomainError("compare_trials needs at least one trial")
    costs = [t.total_cost for t in trials]
    envelope = []
    for i, base_rec in enumerate(baseline.steps):
        step_costs = [t.steps[i].cost for t in trials]
        envelope.append((i, min(step_costs), sum(step_costs) / len(step_costs),
                         max(step_costs), base_rec.cost))
    return ComparisonSummary(
        baseline_cost=baseline.total_cost,
        baseline_load_curtail=baseline.load_curtail_gwh,
        baseline_wind_curtail=baseline.wind_curtail_gwh,
        cost=MetricStats.from_values(costs),
        load_curtail=MetricStats.from_values([t.load_curtail_gwh for t in trials]),
        wind_curtail=MetricStats.from_values([t.wind_curtail_gwh for t in trials]),
        success_rate=sum(1 for c in costs if c < baseline.total_cost) / len(costs),
        step_envelope=envelope,
        trial_costs=costs,
    )
