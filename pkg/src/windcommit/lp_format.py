"""LP text interchange format, solution files, and the external-solver adapter.

The format is the classic ASCII LP layout: an objective section, named
constraint rows, a bounds section, and Binary/General integrality sections.
Every variable gets an explicit bounds line so files round-trip exactly.
"""

from __future__ import annotations

import math
import re
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AdapterError, DomainError
from .milp import ConstraintRow, MilpProblem, MilpSolution, SolveStatus

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _fmt(v):
    return repr(float(v))


def _terms(indices, coeffs, names):
    parts = []
    for j, c in zip(indices, coeffs):
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(c))} {names[j]}")
    if not parts:
        return "0 " + names[0] if names else ""
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def write_lp(problem: MilpProblem) -> str:
    """Render a MilpProblem in LP interchange format."""
    names = problem.names
    lines = ["Minimize"]
    obj_idx = np.flatnonzero(problem.objective)
    lines.append(" obj: " + _terms(obj_idx, problem.objective[obj_idx], names))
    lines.append("Subject To")
    for k, row in enumerate(problem.rows):
        rname = row.name or f"c{k}"
        lines.append(f" {rname}: {_terms(row.indices, row.coeffs, names)} "
                     f"{row.sense} {_fmt(row.rhs)}")
    lines.append("Bounds")
    for j in range(problem.num_vars):
        lo, hi = problem.lower[j], problem.upper[j]
        if lo == hi:
            lines.append(f" {names[j]} = {_fmt(lo)}")
        elif math.isinf(lo) and math.isinf(hi):
            lines.append(f" {names[j]} free")
        elif math.isinf(lo):
            lines.append(f" {names[j]} <= {_fmt(hi)}")
        elif math.isinf(hi):
            lines.append(f" {names[j]} >= {_fmt(lo)}")
        else:
            lines.append(f" {_fmt(lo)} <= {names[j]} <= {_fmt(hi)}")
    binaries = [names[j] for j in np.flatnonzero(problem.is_integer)]
    if binaries:
        lines.append("Binary")
        lines.extend(f" {b}" for b in binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp_file(problem, path):
    Path(path).write_text(write_lp(problem), encoding="ascii")


_SECTIONS = {
    "minimize": "objective",
    "subject": "constraints",
    "bounds": "bounds", "binary": "binary", "binaries": "binary",
    "general": "general", "generals": "general",
    "end": "end",
}

_TOKEN = re.compile(rf"({_NUM})|(<=|>=|=|\+|-|:)|([A-Za-z_][A-Za-z0-9_.,\[\]]*)")


def _tokenize(text):
    tokens = []
    for raw in text.splitlines():
        line = raw.split("\\")[0]
        pos = 0
        while pos < len(line):
            if line[pos].isspace():
                pos += 1
                continue
            m = _TOKEN.match(line, pos)
            if not m:
                raise DomainError(f"unparseable LP text at: {line[pos:pos + 20]!r}")
            tokens.append(m.group(0))
            pos = m.end()
    return tokens


def _is_number(tok):
    return re.fullmatch(_NUM, tok) is not None


class _LpParser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.pos = 0
        self.var_index = {}
        self.obj = {}
        self.rows = []
        self.bounds = {}
        self.integers = set()

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def var(self, name):
        if name not in self.var_index:
            self.var_index[name] = len(self.var_index)
        return self.var_index[name]

    def section_of(self, tok):
        """Section name for a keyword token; side-effect free."""
        if tok is None:
            return "end"
        return _SECTIONS.get(tok.lower())

    def parse_expr(self, stop_tokens):
        """Parse a linear expression until a comparator or section keyword."""
        coeffs = {}
        sign = 1.0
        pending = None  # numeric coefficient awaiting a variable name
        while True:
            tok = self.peek()
            if tok is None or tok in stop_tokens or self.section_of(tok) is not None:
                break
            self.next()
            if tok == "+":
                sign = 1.0
            elif tok == "-":
                sign = -sign if pending is None else -sign
            elif _is_number(tok):
                pending = (pending if pending is not None else 1.0) * float(tok)
            else:
                name = tok
                # a label like "c1:" -- skip label and continue
                if self.peek() == ":":
                    self.next()
                    continue
                c = sign * (pending if pending is not None else 1.0)
                j = self.var(name)
                coeffs[j] = coeffs.get(j, 0.0) + c
                sign = 1.0
                pending = None
        if pending is not None:
            # trailing bare constant such as "0" in an empty objective
            if pending * sign != 0.0:
                raise DomainError("constant term in LP expression is not supported")
        return coeffs

    def parse(self):
        section = None
        while True:
            tok = self.peek()
            sec = self.section_of(tok)
            if sec is not None:
                self.next()
                if sec == "end":
                    break
                if sec == "constraints" and self.peek() and self.peek().lower() == "to":
                    self.next()
                section = sec
                continue
            if section == "objective":
                self.obj = self.parse_expr(("<=", ">=", "="))
            elif section == "constraints":
                coeffs = self.parse_expr(("<=", ">=", "="))
                sense = self.next()
                if sense not in ("<=", ">=", "="):
                    raise DomainError(f"expected comparator in constraint, got {sense!r}")
                rhs_tok = self.next()
                if rhs_tok == "-":
                    rhs_tok = "-" + self.next()
                elif rhs_tok == "+":
                    rhs_tok = self.next()
                if rhs_tok is None or not _is_number(rhs_tok):
                    raise DomainError("expected numeric right-hand side")
                self.rows.append((coeffs, sense, float(rhs_tok)))
            elif section == "bounds":
                self.parse_bound_line()
            elif section in ("binary", "general"):
                self.integers.add(self.var(self.next()))
            else:
                raise DomainError(f"unexpected token {tok!r} before any section")
        return self

    def read_signed_number(self):
        tok = self.next()
        if tok == "-":
            return -float(self.next())
        if tok == "+":
            return float(self.next())
        return float(tok)

    def parse_bound_line(self):
        tok = self.peek()
        if _is_number(tok) or tok in ("-", "+"):
            lo = self.read_signed_number()
            if self.next() != "<=":
                raise DomainError("malformed bounds line")
            j = self.var(self.next())
            if self.next() != "<=":
                raise DomainError("malformed bounds line")
            hi = self.read_signed_number()
            self.bounds[j] = (lo, hi)
            return
        j = self.var(self.next())
        nxt = self.peek()
        if nxt is not None and nxt.lower() == "free":
            self.next()
            self.bounds[j] = (-math.inf, math.inf)
            return
        op = self.next()
        val = self.read_signed_number()
        lo, hi = self.bounds.get(j, (0.0, math.inf))
        if op == "<=":
            self.bounds[j] = (lo, val)
        elif op == ">=":
            self.bounds[j] = (val, hi)
        elif op == "=":
            self.bounds[j] = (val, val)
        else:
            raise DomainError(f"malformed bounds operator {op!r}")


def parse_lp(text: str) -> MilpProblem:
    """Parse LP interchange text back into a MilpProblem."""
    p = _LpParser(text).parse()
    n = len(p.var_index)
    names = [None] * n
    for name, j in p.var_index.items():
        names[j] = name
    objective = np.zeros(n)
    for j, c in p.obj.items():
        objective[j] = c
    lower = np.zeros(n)
    upper = np.full(n, math.inf)
    for j, (lo, hi) in p.bounds.items():
        lower[j], upper[j] = lo, hi
    is_integer = np.zeros(n, dtype=bool)
    for j in p.integers:
        is_integer[j] = True
        if math.isinf(upper[j]):
            upper[j] = 1.0
    rows = []
    for k, (coeffs, sense, rhs) in enumerate(p.rows):
        idx = sorted(coeffs)
        rows.append(ConstraintRow(idx, [coeffs[j] for j in idx], sense, rhs, f"c{k}"))
    problem = MilpProblem(n, objective, lower, upper, is_integer, rows, names)
    problem.validate()
    return problem


def parse_lp_file(path):
    return parse_lp(Path(path).read_text(encoding="ascii"))


def write_solution(solution: MilpSolution, names) -> str:
    """Render a solution file: a status line, then one name/value pair per line."""
    lines = [f"status {solution.status.value}"]
    if solution.objective is not None:
        lines.append(f"objective {_fmt(solution.objective)}")
    if solution.values is not None:
        for name, v in zip(names, solution.values):
            lines.append(f"{name} {_fmt(v)}")
    return "\n".join(lines) + "\n"


def parse_solution(text: str, problem: MilpProblem) -> MilpSolution:
    status = None
    objective = None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise AdapterError(f"malformed solution line {lineno}: {raw!r}", text)
        key, val = parts
        if key == "status":
            try:
                status = SolveStatus(val)
            except ValueError:
                raise AdapterError(f"unknown solver status {val!r}", text) from None
        elif key == "objective":
            objective = float(val)
        else:
            if key not in problem.names:
                raise AdapterError(f"solution names unknown variable {key!r}", text)
            values[key] = float(val)
    if status is None:
        raise AdapterError("solution file has no status line", text)
    if status in (SolveStatus.OPTIMAL, SolveStatus.GAP_LIMIT, SolveStatus.NODE_LIMIT) and values:
        vec = np.array([values.get(name, 0.0) for name in problem.names])
    else:
        vec = None
    return MilpSolution(status, vec, objective, 0.0, 0)


@dataclass
class ExternalSolverAdapter:
    """Runs a configured solver command over LP/solution files.

    ``command`` is an argv template; the placeholders ``{lp}`` and ``{sol}``
    are substituted with the problem and solution file paths.
    """

    command: list
    timeout: float = 300.0

    def solve(self, problem: MilpProblem) -> MilpSolution:
        problem.validate()
        with tempfile.TemporaryDirectory(prefix="windcommit_lp_") as tmp:
            lp_path = Path(tmp) / "problem.lp"
            sol_path = Path(tmp) / "solution.sol"
            write_lp_file(problem, lp_path)
            argv = [a.format(lp=str(lp_path), sol=str(sol_path)) for a in self.command]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True,
                                      timeout=self.timeout)
            except FileNotFoundError as e:
                raise AdapterError(f"solver executable not found: {argv[0]}") from e
            except subprocess.TimeoutExpired as e:
                raise AdapterError(f"solver timed out after {self.timeout}s") from e
            if proc.returncode != 0:
                raise AdapterError(f"solver exited with code {proc.returncode}",
                                   proc.stdout + proc.stderr)
            if not sol_path.exists():
                raise AdapterError("solver produced no solution file",
                                   proc.stdout + proc.stderr)
            return parse_solution(sol_path.read_text(encoding="ascii"), problem)
