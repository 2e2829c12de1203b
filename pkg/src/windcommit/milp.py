"""Generic mixed-integer linear programming.

An LP core (scipy's HiGHS interior/simplex via ``linprog``) plus a
deterministic branch-and-bound layer: best-bound node selection,
most-fractional branching, ties broken by lowest variable index.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from .errors import DomainError, SolverError

DEFAULT_GAP_TOL = 1e-6
DEFAULT_INT_TOL = 1e-6
DEFAULT_NODE_LIMIT = 500_000


class SolveStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    GAP_LIMIT = "GapLimit"
    NODE_LIMIT = "NodeLimit"


@dataclass
class ConstraintRow:
    """Sparse constraint row: sum(coeffs[i] * x[indices[i]]) <sense> rhs."""

    indices: list
    coeffs: list
    sense: str  # "<=", "=", ">="
    rhs: float
    name: str = ""


@dataclass
class MilpProblem:
    """Minimization MILP in sparse row form.

    ``is_integer`` flags binary variables; their bounds must lie in [0, 1].
    """

    num_vars: int
    objective: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    is_integer: np.ndarray
    rows: list = field(default_factory=list)
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.is_integer = np.asarray(self.is_integer, dtype=bool)
        if not self.names:
            self.names = [f"x{i}" for i in range(self.num_vars)]

    def validate(self):
        n = self.num_vars
        for arr, label in ((self.objective, "objective"), (self.lower, "lower"),
                           (self.upper, "upper"), (self.is_integer, "integrality")):
            if arr.shape != (n,):
                raise DomainError(f"{label} has length {arr.shape}, expected {n}")
        if np.any(np.isnan(self.objective)) or np.any(np.isinf(self.objective)):
            raise DomainError("objective contains NaN or infinite coefficients")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise DomainError("bounds contain NaN")
        if np.any(self.lower > self.upper + 1e-12):
            raise DomainError("lower bound exceeds upper bound")
        bad = self.is_integer & ((self.lower < -1e-9) | (self.upper > 1 + 1e-9))
        if np.any(bad):
            raise DomainError("binary variable with bounds outside [0, 1]")
        for row in self.rows:
            if row.sense not in ("<=", "=", ">="):
                raise DomainError(f"unknown constraint sense {row.sense!r}")
            if math.isnan(row.rhs) or math.isinf(row.rhs):
                raise DomainError(f"constraint {row.name!r} has non-finite rhs")
            for j, c in zip(row.indices, row.coeffs):
                if not (0 <= j < n):
                    raise DomainError(f"constraint {row.name!r} references variable {j}")
                if math.isnan(c) or math.isinf(c):
                    raise DomainError(f"constraint {row.name!r} has non-finite coefficient")


@dataclass
class LpResult:
    status: SolveStatus
    values: np.ndarray | None
    objective: float | None


@dataclass
class MilpSolution:
    status: SolveStatus
    values: np.ndarray | None
    objective: float | None
    gap: float
    nodes_explored: int


def _split_rows(problem):
    """Assemble sparse (A_ub, b_ub, A_eq, b_eq); >= rows are negated into <=."""
    ub_data, ub_i, ub_j, b_ub = [], [], [], []
    eq_data, eq_i, eq_j, b_eq = [], [], [], []
    for row in problem.rows:
        if row.sense == "=":
            r = len(b_eq)
            b_eq.append(row.rhs)
            for j, c in zip(row.indices, row.coeffs):
                eq_i.append(r)
                eq_j.append(j)
                eq_data.append(c)
        else:
            sign = 1.0 if row.sense == "<=" else -1.0
            r = len(b_ub)
            b_ub.append(sign * row.rhs)
            for j, c in zip(row.indices, row.coeffs):
                ub_i.append(r)
                ub_j.append(j)
                ub_data.append(sign * c)
    n = problem.num_vars
    A_ub = csr_matrix((ub_data, (ub_i, ub_j)), shape=(len(b_ub), n)) if b_ub else None
    A_eq = csr_matrix((eq_data, (eq_i, eq_j)), shape=(len(b_eq), n)) if b_eq else None
    return A_ub, (np.array(b_ub) if b_ub else None), A_eq, (np.array(b_eq) if b_eq else None)


def _linprog_bounds(lower, upper):
    lo = np.where(np.isneginf(lower), -np.inf, lower)
    hi = np.where(np.isposinf(upper), np.inf, upper)
    return np.column_stack([lo, hi])


def _solve_lp_arrays(c, A_ub, b_ub, A_eq, b_eq, lower, upper):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=_linprog_bounds(lower, upper), method="highs")
    if res.status == 0:
        return LpResult(SolveStatus.OPTIMAL, np.asarray(res.x, dtype=float), float(res.fun))
    if res.status == 2:
        return LpResult(SolveStatus.INFEASIBLE, None, None)
    if res.status == 3:
        return LpResult(SolveStatus.UNBOUNDED, None, None)
    raise SolverError(f"LP solve failed: {res.message}")


def solve_lp(problem: MilpProblem) -> LpResult:
    """Solve the LP relaxation (integrality ignored)."""
    problem.validate()
    if problem.num_vars == 0:
        return LpResult(SolveStatus.OPTIMAL, np.zeros(0), 0.0)
    A_ub, b_ub, A_eq, b_eq = _split_rows(problem)
    return _solve_lp_arrays(problem.objective, A_ub, b_ub, A_eq, b_eq,
                            problem.lower, problem.upper)


def _fractionality(x, int_idx):
    """Distance of each integer variable to its nearest integer."""
    v = x[int_idx]
    return np.abs(v - np.round(v))


def solve_milp(problem: MilpProblem, gap_tol: float = DEFAULT_GAP_TOL,
               int_tol: float = DEFAULT_INT_TOL, node_limit: int = DEFAULT_NODE_LIMIT,
               time_limit: float | None = None) -> MilpSolution:
    """Branch and bound over LP relaxations.

    Deterministic: best-bound node selection with FIFO tie-break,
    most-fractional branching with lowest-index tie-break.
    """
    problem.validate()
    if gap_tol < 0:
        raise DomainError("gap_tol must be nonnegative")
    if problem.num_vars == 0:
        return MilpSolution(SolveStatus.OPTIMAL, np.zeros(0), 0.0, 0.0, 0)

    c = problem.objective
    A_ub, b_ub, A_eq, b_eq = _split_rows(problem)
    int_idx = np.flatnonzero(problem.is_integer)
    start = time.perf_counter()

    def lp(lower, upper):
        return _solve_lp_arrays(c, A_ub, b_ub, A_eq, b_eq, lower, upper)

    root = lp(problem.lower, problem.upper)
    nodes = 1
    if root.status is SolveStatus.INFEASIBLE:
        return MilpSolution(SolveStatus.INFEASIBLE, None, None, math.inf, nodes)
    if root.status is SolveStatus.UNBOUNDED:
        return MilpSolution(SolveStatus.UNBOUNDED, None, None, math.inf, nodes)
    if int_idx.size == 0:
        return MilpSolution(SolveStatus.OPTIMAL, root.values, root.objective, 0.0, nodes)

    incumbent = None
    incumbent_obj = math.inf

    def cutoff():
        if incumbent is None:
            return math.inf
        return incumbent_obj - gap_tol * max(1.0, abs(incumbent_obj))

    def try_incumbent(values, objective):
        nonlocal incumbent, incumbent_obj
        if objective < incumbent_obj:
            incumbent = values
            incumbent_obj = objective

    # Rounding heuristic at the root: fix binaries per a rounding of the
    # relaxation and re-solve; a feasible point gives early pruning power.
    frac = root.values[int_idx]
    for rounded in (np.round(frac), np.ceil(frac - int_tol)):
        lo, hi = problem.lower.copy(), problem.upper.copy()
        lo[int_idx] = rounded
        hi[int_idx] = rounded
        res = lp(lo, hi)
        nodes += 1
        if res.status is SolveStatus.OPTIMAL:
            try_incumbent(res.values, res.objective)

    heap = []
    counter = 0

    def push(bound, values, lower, upper):
        nonlocal counter
        heapq.heappush(heap, (bound, counter, values, lower, upper))
        counter += 1

    if np.max(_fractionality(root.values, int_idx)) <= int_tol:
        try_incumbent(root.values, root.objective)
    else:
        push(root.objective, root.values, problem.lower, problem.upper)

    status = SolveStatus.OPTIMAL
    best_bound = root.objective
    while heap:
        bound, _, values, lower, upper = heapq.heappop(heap)
        best_bound = bound
        if bound >= cutoff():
            break  # best-bound order: everything remaining is pruned
        if nodes >= node_limit:
            status = SolveStatus.NODE_LIMIT
            break
        if time_limit is not None and time.perf_counter() - start > time_limit:
            status = SolveStatus.GAP_LIMIT
            break

        fr = _fractionality(values, int_idx)
        j = int(int_idx[int(np.argmax(fr))])  # argmax takes the lowest index on ties
        floor_v = math.floor(values[j] + int_tol)
        for child_lo, child_hi in (((j, None), (j, floor_v)), ((j, floor_v + 1), (j, None))):
            lo, hi = lower, upper
            if child_lo[1] is not None:
                lo = lower.copy()
                lo[j] = child_lo[1]
            if child_hi[1] is not None:
                hi = upper.copy()
                hi[j] = child_hi[1]
            if lo[j] > hi[j]:
                continue
            res = lp(lo, hi)
            nodes += 1
            if res.status is not SolveStatus.OPTIMAL:
                continue
            if res.objective >= cutoff():
                continue
            if np.max(_fractionality(res.values, int_idx)) <= int_tol:
                try_incumbent(res.values, res.objective)
            else:
                push(res.objective, res.values, lo, hi)

    if not heap and status is SolveStatus.OPTIMAL:
        best_bound = incumbent_obj if incumbent is not None else best_bound

    if incumbent is None:
        if status is SolveStatus.OPTIMAL:
            return MilpSolution(SolveStatus.INFEASIBLE, None, None, math.inf, nodes)
        return MilpSolution(status, None, None, math.inf, nodes)

    gap = max(0.0, (incumbent_obj - best_bound) / max(1.0, abs(incumbent_obj)))
    if status is SolveStatus.OPTIMAL or gap <= gap_tol:
        return MilpSolution(SolveStatus.OPTIMAL, incumbent, incumbent_obj, gap, nodes)
    return MilpSolution(status, incumbent, incumbent_obj, gap, nodes)


def check_milp_feasibility(problem: MilpProblem, values, row_tol: float = 1e-6,
                           int_tol: float = DEFAULT_INT_TOL):
    """Independent re-check of a point: returns (row, residual) violations."""
    x = np.asarray(values, dtype=float)
    out = []
    for k, row in enumerate(problem.rows):
        lhs = sum(c * x[j] for j, c in zip(row.indices, row.coeffs))
        resid = lhs - row.rhs
        if row.sense == "<=" and resid > row_tol:
            out.append((row.name or f"row{k}", resid))
        elif row.sense == ">=" and resid < -row_tol:
            out.append((row.name or f"row{k}", -resid))
        elif row.sense == "=" and abs(resid) > row_tol:
            out.append((row.name or f"row{k}", abs(resid)))
    lo_viol = problem.lower - x
    hi_viol = x - problem.upper
    for j in np.flatnonzero(lo_viol > row_tol):
        out.append((f"lb[{problem.names[j]}]", float(lo_viol[j])))
    for j in np.flatnonzero(hi_viol > row_tol):
        out.append((f"ub[{problem.names[j]}]", float(hi_viol[j])))
    for j in np.flatnonzero(problem.is_integer):
        r = abs(x[j] - round(x[j]))
        if r > int_tol:
            out.append((f"int[{problem.names[j]}]", float(r)))
    return out
