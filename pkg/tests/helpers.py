"""Independent oracles used across the test suite.

These deliberately avoid the package's own solution paths: the normal
quantile oracle integrates the density and bisects, and the MILP oracle
enumerates every binary assignment and dispatches each with a directly
assembled scipy LP.
"""

import itertools
import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import linprog


def normal_cdf_numeric(x, mu=0.0, sigma=1.0):
    """CDF via numerical quadrature of the density (no erf, no ndtr)."""
    z = (x - mu) / sigma
    pdf = lambda u: math.exp(-u * u / 2.0) / math.sqrt(2.0 * math.pi)
    val, _ = quad(pdf, 0.0, z, epsabs=1e-14, epsrel=1e-13)
    return 0.5 + val


def bisect_inverse_normal_cdf(q, mu=0.0, sigma=1.0, tol=1e-11):
    """Bisection on the quadrature CDF; standard-normal result shifted/scaled."""
    lo, hi = -10.0, 10.0
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if normal_cdf_numeric(mid) < q:
            lo = mid
        else:
            hi = mid
    return mu + sigma * (lo + hi) / 2.0


def error_tree_recursion_oracle(levels, phi, eps_c, stages):
    """Step-by-step recursion, independently of the closed form."""
    inj = [eps_c * bisect_inverse_normal_cdf(q) for q in levels]
    errors = np.zeros((len(levels), stages))
    for n in range(len(levels)):
        for k in range(1, stages):
            if k == 1:
                errors[n, k] = phi * errors[n, k - 1] + inj[n]
            else:
                errors[n, k] = phi * errors[n, k - 1]
    return errors


def _dense_lp(problem, lower, upper):
    """Solve an LP over a MilpProblem's rows with directly assembled dense
    matrices (bypasses the package's LP wrapper)."""
    n = problem.num_vars
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for row in problem.rows:
        dense = np.zeros(n)
        for j, c in zip(row.indices, row.coeffs):
            dense[j] += c
        if row.sense == "<=":
            A_ub.append(dense)
            b_ub.append(row.rhs)
        elif row.sense == ">=":
            A_ub.append(-dense)
            b_ub.append(-row.rhs)
        else:
            A_eq.append(dense)
            b_eq.append(row.rhs)
    res = linprog(problem.objective,
                  A_ub=np.array(A_ub) if A_ub else None,
                  b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=np.array(A_eq) if A_eq else None,
                  b_eq=np.array(b_eq) if b_eq else None,
                  bounds=list(zip(lower, upper)), method="highs")
    return res


def brute_force_milp(problem):
    """Enumerate all binary assignments, LP-dispatch each, return
    (best_objective, best_values) or (None, None) if infeasible."""
    binaries = np.flatnonzero(problem.is_integer)
    best_obj, best_x = None, None
    for assignment in itertools.product((0.0, 1.0), repeat=len(binaries)):
        lower = problem.lower.copy()
        upper = problem.upper.copy()
        for j, v in zip(binaries, assignment):
            if v < problem.lower[j] - 1e-9 or v > problem.upper[j] + 1e-9:
                break
            lower[j] = v
            upper[j] = v
        else:
            res = _dense_lp(problem, lower, upper)
            if res.status == 0 and (best_obj is None or res.fun < best_obj - 1e-12):
                best_obj, best_x = res.fun, np.asarray(res.x)
    return best_obj, best_x
