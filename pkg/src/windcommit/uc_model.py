"""Unit-commitment instance to MILP translation and solution evaluation.

Variables per scenario n, generator g, stage t: commitment y (binary),
startup s (continuous in [0,1]; integral at any optimum because its cost
coefficient is positive), output P. Per scenario/stage: wind and load
curtailment slacks. Constraints: power balance, generation limits, startup
logic, ramping, curtailment bounds, and non-anticipativity coupling for the
leading shared stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .milp import ConstraintRow, MilpProblem
from .scenario_tree import ProbabilityVector

RAMP_MODES = ("startup-aware", "literal")


@dataclass(frozen=True)
class Generator:
    """Thermal unit parameters. Costs in $, powers in GW, ramps in GW/h."""

    name: str
    startup_cost: float
    p_max: float
    p_min: float
    gen_cost: float
    ramp_up: float
    ramp_down: float

    def __post_init__(self):
        if not 0 <= self.p_min <= self.p_max:
            raise DomainError(f"generator {self.name}: need 0 <= p_min <= p_max")
        if self.startup_cost < 0 or self.gen_cost < 0:
            raise DomainError(f"generator {self.name}: costs must be nonnegative")
        if self.ramp_up <= 0 or self.ramp_down <= 0:
            raise DomainError(f"generator {self.name}: ramp limits must be positive")


@dataclass
class UcInstance:
    """One rolling-window stochastic unit-commitment problem."""

    generators: list
    dt: float
    voll: float
    demand: np.ndarray          # (stages,)
    wind: np.ndarray            # (scenarios, stages)
    probabilities: ProbabilityVector
    initial_commitment: tuple   # on/off per generator at t=0
    initial_output: tuple       # GW per generator at t=0
    nonanticipativity_stages: int = 1
    ramp_mode: str = "startup-aware"

    def __post_init__(self):
        self.demand = np.asarray(self.demand, dtype=float)
        self.wind = np.asarray(self.wind, dtype=float)
        self.initial_commitment = tuple(bool(v) for v in self.initial_commitment)
        self.initial_output = tuple(float(v) for v in self.initial_output)
        if self.demand.ndim != 1 or self.wind.ndim != 2:
            raise DomainError("demand must be 1-D and wind 2-D")
        if self.wind.shape[1] != self.demand.shape[0]:
            raise DomainError("wind stage count does not match demand length")
        if len(self.probabilities) != self.wind.shape[0]:
            raise DomainError("probability vector length does not match scenarios")
        if np.any(self.demand < 0) or np.any(self.wind < 0):
            raise DomainError("demand and wind must be nonnegative")
        g = len(self.generators)
        if len(self.initial_commitment) != g or len(self.initial_output) != g:
            raise DomainError("initial state length does not match generators")
        for gen, on, p0 in zip(self.generators, self.initial_commitment, self.initial_output):
            if not 0 <= p0 <= gen.p_max:
                raise DomainError(f"initial output of {gen.name} outside [0, p_max]")
            if not on and p0 != 0:
                raise DomainError(f"{gen.name} initially off but with nonzero output")
        if not 1 <= self.nonanticipativity_stages <= self.stages:
            raise DomainError("nonanticipativity_stages outside [1, stages]")
        if self.dt <= 0:
            raise DomainError("dt must be positive")
        if self.voll < 0:
            raise DomainError("voll must be nonnegative")
        if self.ramp_mode not in RAMP_MODES:
            raise DomainError(f"unknown ramp mode {self.ramp_mode!r}")

    @property
    def stages(self):
        return self.demand.shape[0]

    @property
    def scenarios(self):
        return self.wind.shape[0]


@dataclass(frozen=True)
class UcIndexMap:
    """Variable layout of the UC MILP: blocks y | s | P | wcur | lcur."""

    scenarios: int
    generators: int
    stages: int

    def _ngt(self, n, g, t):
        return (n * self.generators + g) * self.stages + t

    def y(self, n, g, t):
        return self._ngt(n, g, t)

    def s(self, n, g, t):
        return self.scenarios * self.generators * self.stages + self._ngt(n, g, t)

    def p(self, n, g, t):
        return 2 * self.scenarios * self.generators * self.stages + self._ngt(n, g, t)

    def wcur(self, n, t):
        base = 3 * self.scenarios * self.generators * self.stages
        return base + n * self.stages + t

    def lcur(self, n, t):
        base = 3 * self.scenarios * self.generators * self.stages
        return base + self.scenarios * self.stages + n * self.stages + t

    @property
    def num_vars(self):
        return (3 * self.generators + 2) * self.scenarios * self.stages


@dataclass
class UcSolution:
    """Decoded UC decision arrays: y/s/P indexed (scenario, generator, stage),
    curtailments (scenario, stage)."""

    y: np.ndarray
    s: np.ndarray
    P: np.ndarray
    wind_curtail: np.ndarray
    load_curtail: np.ndarray
    objective: float


@dataclass
class CostBreakdown:
    startup_total: float
    generation_total: float
    load_curtail_cost: float
    total: float
    per_stage: list
    load_curtail_energy: float
    wind_curtail_energy: float


@dataclass
class Violation:
    constraint: str
    scenario: int
    stage: int
    magnitude: float


def _ramp_rows(inst, idx, rows):
    """Ramping constraints; t is 0-based, t=0 anchored at the initial state."""
    dt = inst.dt
    for n in range(inst.scenarios):
        for g, gen in enumerate(inst.generators):
            ru, rd = dt * gen.ramp_up, dt * gen.ramp_down
            m_up = max(gen.p_min, ru)
            m_dn = max(gen.p_min, rd)
            for t in range(inst.stages):
                p_t = idx.p(n, g, t)
                if t == 0:
                    y0 = 1.0 if inst.initial_commitment[g] else 0.0
                    p0 = inst.initial_output[g]
                    if inst.ramp_mode == "literal":
                        rows.append(ConstraintRow([p_t], [1.0], "<=", p0 + ru * y0,
                                                  f"ramp_up[n{n},g{g},t{t}]"))
                        rows.append(ConstraintRow([p_t], [-1.0], "<=", -p0 + rd * y0,
                                                  f"ramp_dn[n{n},g{g},t{t}]"))
                    else:
                        y_t = idx.y(n, g, t)
                        rows.append(ConstraintRow(
                            [p_t], [1.0], "<=",
                            p0 + ru * y0 + m_up * (1.0 - y0),
                            f"ramp_up[n{n},g{g},t{t}]"))
                        rows.append(ConstraintRow(
                            [p_t, y_t], [-1.0, m_dn - rd], "<=", m_dn - p0,
                            f"ramp_dn[n{n},g{g},t{t}]"))
                else:
                    p_prev = idx.p(n, g, t - 1)
                    y_prev = idx.y(n, g, t - 1)
                    if inst.ramp_mode == "literal":
                        rows.append(ConstraintRow(
                            [p_t, p_prev, y_prev], [1.0, -1.0, -ru], "<=", 0.0,
                            f"ramp_up[n{n},g{g},t{t}]"))
                        rows.append(ConstraintRow(
                            [p_prev, p_t, y_prev], [1.0, -1.0, -rd], "<=", 0.0,
                            f"ramp_dn[n{n},g{g},t{t}]"))
                    else:
                        y_t = idx.y(n, g, t)
                        # P(t)-P(t-1) <= ru*y(t-1) + m_up*(1-y(t-1))
                        rows.append(ConstraintRow(
                            [p_t, p_prev, y_prev], [1.0, -1.0, m_up - ru], "<=", m_up,
                            f"ramp_up[n{n},g{g},t{t}]"))
                        # P(t-1)-P(t) <= rd*y(t) + m_dn*(1-y(t))
                        rows.append(ConstraintRow(
                            [p_prev, p_t, y_t], [1.0, -1.0, m_dn - rd], "<=", m_dn,
                            f"ramp_dn[n{n},g{g},t{t}]"))


def build_milp(instance: UcInstance):
    """Translate an instance into (MilpProblem, UcIndexMap)."""
    inst = instance
    N, G, K = inst.scenarios, len(inst.generators), inst.stages
    idx = UcIndexMap(N, G, K)
    nv = idx.num_vars

    objective = np.zeros(nv)
    lower = np.zeros(nv)
    upper = np.zeros(nv)
    is_integer = np.zeros(nv, dtype=bool)
    names = [""] * nv
    pi = inst.probabilities.as_array()

    for n in range(N):
        for g, gen in enumerate(inst.generators):
            for t in range(K):
                jy, js, jp = idx.y(n, g, t), idx.s(n, g, t), idx.p(n, g, t)
                upper[jy] = 1.0
                is_integer[jy] = True
                upper[js] = 1.0
                upper[jp] = gen.p_max
                objective[js] = pi[n] * gen.startup_cost
                objective[jp] = pi[n] * inst.dt * gen.gen_cost
                names[jy] = f"y_n{n}_g{g}_t{t}"
                names[js] = f"s_n{n}_g{g}_t{t}"
                names[jp] = f"p_n{n}_g{g}_t{t}"
        for t in range(K):
            jw, jl = idx.wcur(n, t), idx.lcur(n, t)
            upper[jw] = inst.wind[n, t]
            upper[jl] = inst.demand[t]
            objective[jl] = pi[n] * inst.voll * inst.dt
            names[jw] = f"wc_n{n}_t{t}"
            names[jl] = f"lc_n{n}_t{t}"

    rows = []
    for n in range(N):
        for t in range(K):
            # sum_g P - wcur + lcur = demand - wind
            indices = [idx.p(n, g, t) for g in range(G)] + [idx.wcur(n, t), idx.lcur(n, t)]
            coeffs = [1.0] * G + [-1.0, 1.0]
            rows.append(ConstraintRow(indices, coeffs, "=",
                                      float(inst.demand[t] - inst.wind[n, t]),
                                      f"balance[n{n},t{t}]"))
    for n in range(N):
        for g, gen in enumerate(inst.generators):
            for t in range(K):
                jy, jp = idx.y(n, g, t), idx.p(n, g, t)
                rows.append(ConstraintRow([jp, jy], [1.0, -gen.p_min], ">=", 0.0,
                                          f"gen_min[n{n},g{g},t{t}]"))
                rows.append(ConstraintRow([jp, jy], [1.0, -gen.p_max], "<=", 0.0,
                                          f"gen_max[n{n},g{g},t{t}]"))
                js = idx.s(n, g, t)
                if t == 0:
                    y0 = 1.0 if inst.initial_commitment[g] else 0.0
                    rows.append(ConstraintRow([js, jy], [1.0, -1.0], ">=", -y0,
                                              f"startup[n{n},g{g},t{t}]"))
                else:
                    rows.append(ConstraintRow([js, jy, idx.y(n, g, t - 1)],
                                              [1.0, -1.0, 1.0], ">=", 0.0,
                                              f"startup[n{n},g{g},t{t}]"))
    _ramp_rows(inst, idx, rows)
    for t in range(inst.nonanticipativity_stages):
        for n in range(1, N):
            for g in range(G):
                rows.append(ConstraintRow([idx.y(n, g, t), idx.y(0, g, t)],
                                          [1.0, -1.0], "=", 0.0,
                                          f"na_y[n{n},g{g},t{t}]"))
                rows.append(ConstraintRow([idx.p(n, g, t), idx.p(0, g, t)],
                                          [1.0, -1.0], "=", 0.0,
                                          f"na_p[n{n},g{g},t{t}]"))

    problem = MilpProblem(nv, objective, lower, upper, is_integer, rows, names)
    problem.validate()
    return problem, idx


def decode_solution(instance: UcInstance, idx: UcIndexMap, values,
                    objective: float) -> UcSolution:
    """Map a flat MILP value vector back to decision arrays (binaries rounded,
    tiny numerical negatives clipped)."""
    x = np.asarray(values, dtype=float)
    N, G, K = idx.scenarios, idx.generators, idx.stages
    y = np.zeros((N, G, K))
    s = np.zeros((N, G, K))
    P = np.zeros((N, G, K))
    wcur = np.zeros((N, K))
    lcur = np.zeros((N, K))
    for n in range(N):
        for g in range(G):
            for t in range(K):
                y[n, g, t] = round(x[idx.y(n, g, t)])
                s[n, g, t] = max(0.0, x[idx.s(n, g, t)])
                P[n, g, t] = max(0.0, x[idx.p(n, g, t)])
        for t in range(K):
            wcur[n, t] = max(0.0, x[idx.wcur(n, t)])
            lcur[n, t] = max(0.0, x[idx.lcur(n, t)])
    return UcSolution(y, s, P, wcur, lcur, float(objective))


def evaluate_solution(instance: UcInstance, sol: UcSolution) -> CostBreakdown:
    """Recompute all cost terms from first principles."""
    inst = instance
    N, G, K = inst.scenarios, len(inst.generators), inst.stages
    if sol.P.shape != (N, G, K) or sol.load_curtail.shape != (N, K):
        raise DomainError("solution dimensions do not match instance")
    pi = inst.probabilities.as_array()
    startup_cost = np.array([g.startup_cost for g in inst.generators])
    gen_cost = np.array([g.gen_cost for g in inst.generators])

    startup_total = 0.0
    generation_total = 0.0
    load_cost = 0.0
    per_stage = []
    for t in range(K):
        st = float(np.sum(pi[:, None] * startup_cost[None, :] * sol.s[:, :, t]))
        gn = float(np.sum(pi[:, None] * gen_cost[None, :] * sol.P[:, :, t]) * inst.dt)
        lc = float(np.sum(pi * sol.load_curtail[:, t]) * inst.voll * inst.dt)
        startup_total += st
        generation_total += gn
        load_cost += lc
        per_stage.append(st + gn + lc)
    load_energy = float(np.sum(pi[:, None] * sol.load_curtail) * inst.dt)
    wind_energy = float(np.sum(pi[:, None] * sol.wind_curtail) * inst.dt)
    total = startup_total + generation_total + load_cost
    return CostBreakdown(startup_total, generation_total, load_cost, total,
                         per_stage, load_energy, wind_energy)


def check_feasibility(instance: UcInstance, sol: UcSolution, tol: float = 1e-6):
    """Recheck every model constraint directly in domain terms; returns the
    list of violations (empty iff feasible within tol)."""
    inst = instance
    N, G, K = inst.scenarios, len(inst.generators), inst.stages
    if sol.P.shape != (N, G, K):
        raise DomainError("solution dimensions do not match instance")
    out = []

    def add(cid, n, t, mag):
        if mag > tol:
            out.append(Violation(cid, n, t, float(mag)))

    y0 = np.array([1.0 if on else 0.0 for on in inst.initial_commitment])
    p0 = np.asarray(inst.initial_output)
    for n in range(N):
        for t in range(K):
            resid = (np.sum(sol.P[n, :, t]) + inst.wind[n, t] - sol.wind_curtail[n, t]
                     - inst.demand[t] + sol.load_curtail[n, t])
            add("balance", n, t, abs(resid))
            add("wind_curtail_ub", n, t, sol.wind_curtail[n, t] - inst.wind[n, t])
            add("wind_curtail_lb", n, t, -sol.wind_curtail[n, t])
            add("load_curtail_ub", n, t, sol.load_curtail[n, t] - inst.demand[t])
            add("load_curtail_lb", n, t, -sol.load_curtail[n, t])
        for g, gen in enumerate(inst.generators):
            ru, rd = inst.dt * gen.ramp_up, inst.dt * gen.ramp_down
            m_up = max(gen.p_min, ru)
            m_dn = max(gen.p_min, rd)
            for t in range(K):
                y = sol.y[n, g, t]
                add(f"binary[{gen.name}]", n, t, abs(y - round(y)))
                add(f"gen_min[{gen.name}]", n, t, y * gen.p_min - sol.P[n, g, t])
                add(f"gen_max[{gen.name}]", n, t, sol.P[n, g, t] - y * gen.p_max)
                yp = y0[g] if t == 0 else sol.y[n, g, t - 1]
                pp = p0[g] if t == 0 else sol.P[n, g, t - 1]
                add(f"startup[{gen.name}]", n, t, (y - yp) - sol.s[n, g, t])
                add(f"startup_lb[{gen.name}]", n, t, -sol.s[n, g, t])
                dp = sol.P[n, g, t] - pp
                if inst.ramp_mode == "literal":
                    add(f"ramp_up[{gen.name}]", n, t, dp - ru * yp)
                    add(f"ramp_dn[{gen.name}]", n, t, -dp - rd * yp)
                else:
                    add(f"ramp_up[{gen.name}]", n, t, dp - (ru * yp + m_up * (1 - yp)))
                    add(f"ramp_dn[{gen.name}]", n, t, -dp - (rd * y + m_dn * (1 - y)))
    for t in range(inst.nonanticipativity_stages):
        for n in range(1, N):
            for g, gen in enumerate(inst.generators):
                add(f"na_y[{gen.name}]", n, t, abs(sol.y[n, g, t] - sol.y[0, g, t]))
                add(f"na_p[{gen.name}]", n, t, abs(sol.P[n, g, t] - sol.P[0, g, t]))
    return out
