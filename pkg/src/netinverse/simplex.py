"""Self-contained linear-program solver with primal and dual certificates.

Dense two-phase revised simplex, minimization only.  Built for desk-scale
problems (up to a few hundred variables) where determinism, exact
reproducibility, and availability of duals matter more than raw speed.

Conventions
-----------
* Objective sense is MIN.
* Duals are shadow prices, ``d(objective)/d(rhs)``: nonnegative for binding
  ``>=`` rows, nonpositive for binding ``<=`` rows, free for equalities.
* Entering variable: most negative reduced cost, lowest column index among
  candidates within tolerance.  A stall counter switches to Bland's rule to
  guarantee termination on degenerate problems.
* Leaving variable: minimum ratio, ties broken by lowest basis-variable
  index (Bland-compatible).

Every OPTIMAL result is verified internally (feasibility, duality gap,
complementary slackness); a result that cannot be certified is reported as
NUMERICAL_FAILURE, never returned as if correct.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import SolverError

FEAS_TOL = 1e-8
OPT_TOL = 1e-9
GAP_TOL = 1e-7
_PIVOT_TOL = 1e-10
_DROP_TOL = 1e-7
_MAX_PIVOTS = 100_000


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class _Variable:
    name: str
    lower: float
    upper: float


@dataclass(frozen=True)
class _Constraint:
    coeffs: tuple[tuple[int, float], ...]
    relation: str
    rhs: float
    name: str


class LinearProgram:
    """Mutable builder for a minimization LP.

    Variables are referenced by the integer index returned from
    :meth:`add_variable`.  Constraints may use relation ``"<="``, ``"="``,
    or ``">="``.
    """

    def __init__(self) -> None:
        self._variables: list[_Variable] = []
        self._objective: list[float] = []
        self._constraints: list[_Constraint] = []
        self._names: set[str] = set()

    # -- construction -----------------------------------------------------

    def add_variable(
        self,
        name: str,
        lower: float = 0.0,
        upper: float = math.inf,
        cost: float = 0.0,
    ) -> int:
        if name in self._names:
            raise SolverError(f"duplicate variable name {name!r}")
        if lower > upper:
            raise SolverError(f"variable {name!r} has lower {lower} > upper {upper}")
        if math.isnan(lower) or math.isnan(upper) or not math.isfinite(cost):
            raise SolverError(f"variable {name!r} has invalid bounds or cost")
        self._names.add(name)
        self._variables.append(_Variable(name, lower, upper))
        self._objective.append(cost)
        return len(self._variables) - 1

    def add_constraint(
        self,
        coeffs: Mapping[int, float],
        relation: str,
        rhs: float,
        name: str = "",
    ) -> int:
        if relation not in ("<=", "=", ">="):
            raise SolverError(f"unknown relation {relation!r}")
        if not math.isfinite(rhs):
            raise SolverError(f"constraint rhs must be finite, got {rhs!r}")
        for j, a in coeffs.items():
            if not 0 <= j < len(self._variables):
                raise SolverError(f"constraint references undeclared variable index {j}")
            if not math.isfinite(a):
                raise SolverError(f"non-finite coefficient for variable index {j}")
        row = tuple(sorted(coeffs.items()))
        self._constraints.append(_Constraint(row, relation, rhs, name))
        return len(self._constraints) - 1

    def set_objective(self, coeffs: Mapping[int, float]) -> None:
        """Replace the objective with the given (sparse) coefficient map."""

        self._objective = [0.0] * len(self._variables)
        for j, c in coeffs.items():
            if not 0 <= j < len(self._variables):
                raise SolverError(f"objective references undeclared variable index {j}")
            self._objective[j] = float(c)

    # -- introspection ----------------------------------------------------

    @property
    def num_variables(self) -> int:
        return len(self._variables)

    @property
    def num_constraints(self) -> int:
        return len(self._constraints)

    def variable_name(self, index: int) -> str:
        return self._variables[index].name

    def dump(self) -> str:
        """Human-readable text form of the LP, for bug reports."""

        def term(j: int, a: float) -> str:
            return f"{a:+g}*{self._variables[j].name}"

        lines = ["min " + " ".join(term(j, c) for j, c in enumerate(self._objective) if c)]
        for i, con in enumerate(self._constraints):
            label = con.name or f"r{i}"
            body = " ".join(term(j, a) for j, a in con.coeffs)
            lines.append(f"  {label}: {body} {con.relation} {con.rhs:g}")
        for v in self._variables:
            lines.append(f"  {v.lower:g} <= {v.name} <= {v.upper:g}")
        return "\n".join(lines)


@dataclass(frozen=True)
class LpSolution:
    """Primal/dual certificate for one solve.

    ``duals`` has one entry per constraint in declaration order.
    ``dual_objective`` includes variable-bound contributions so that it
    equals ``objective`` at every certified OPTIMAL result.
    """

    status: Status
    objective: float = math.nan
    primal: dict[str, float] = field(default_factory=dict)
    duals: tuple[float, ...] = ()
    dual_objective: float = math.nan
    pivots: int = 0

    def __getitem__(self, name: str) -> float:
        return self.primal[name]


# ---------------------------------------------------------------------------
# standardized problem
# ---------------------------------------------------------------------------


@dataclass
class _Standardized:
    a: np.ndarray              # m x n, structural + slack columns
    b: np.ndarray              # m, nonnegative
    c: np.ndarray              # n
    row_flip: list[bool]       # row was negated during normalization
    row_origin: list[int]      # original constraint index, -1 for bound rows
    bound_row_var: list[int]   # original variable index for bound rows, -1 otherwise
    slack_of_row: list[int]    # column of the slack/surplus for each row, -1 if none
    col_var: list[int]         # original variable index per structural column
    col_sign: list[float]      # +1 / -1 multiplier applied to the column
    col_shift: list[float]     # original value = shift + sign * column value
    n_structural: int
    const_offset: float


def _standardize(lp: LinearProgram) -> _Standardized:
    n_orig = lp.num_variables
    col_var: list[int] = []
    col_sign: list[float] = []
    col_shift: list[float] = []
    var_cols: list[list[int]] = []
    const_offset = 0.0
    upper_rows: list[tuple[int, float]] = []  # (original var, rhs u - l)

    for j in range(n_orig):
        v = lp._variables[j]
        lo, hi = v.lower, v.upper
        if lo == -math.inf and hi == math.inf:
            col_var += [j, j]
            col_sign += [1.0, -1.0]
            col_shift += [0.0, 0.0]
            var_cols.append([len(col_var) - 2, len(col_var) - 1])
        elif lo == -math.inf:
            # x = u - x'', x'' >= 0
            col_var.append(j)
            col_sign.append(-1.0)
            col_shift.append(hi)
            const_offset += lp._objective[j] * hi
            var_cols.append([len(col_var) - 1])
        else:
            col_var.append(j)
            col_sign.append(1.0)
            col_shift.append(lo)
            const_offset += lp._objective[j] * lo
            var_cols.append([len(col_var) - 1])
            if hi != math.inf:
                upper_rows.append((j, hi - lo))

    n_struct = len(col_var)
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    relations: list[str] = []
    row_origin: list[int] = []
    bound_row_var: list[int] = []

    for i, con in enumerate(lp._constraints):
        row = np.zeros(n_struct)
        shift_term = 0.0
        for j, a in con.coeffs:
            for k in var_cols[j]:
                row[k] += a * col_sign[k]
            shift_term += a * col_shift[var_cols[j][0]] if len(var_cols[j]) == 1 else 0.0
        rows.append(row)
        rhs.append(con.rhs - shift_term)
        relations.append(con.relation)
        row_origin.append(i)
        bound_row_var.append(-1)

    for j, cap in upper_rows:
        row = np.zeros(n_struct)
        row[var_cols[j][0]] = 1.0
        rows.append(row)
        rhs.append(cap)
        relations.append("<=")
        row_origin.append(-1)
        bound_row_var.append(j)

    # normalize rhs >= 0
    row_flip = []
    for i in range(len(rows)):
        if rhs[i] < 0:
            rows[i] = -rows[i]
            rhs[i] = -rhs[i]
            relations[i] = {"<=": ">=", ">=": "<=", "=": "="}[relations[i]]
            row_flip.append(True)
        else:
            row_flip.append(False)

    # slack / surplus columns
    m = len(rows)
    slack_cols = sum(1 for r in relations if r in ("<=", ">="))
    a = np.zeros((m, n_struct + slack_cols))
    if m:
        a[:, :n_struct] = np.vstack(rows)
    slack_of_row = [-1] * m
    k = n_struct
    for i, rel in enumerate(relations):
        if rel == "<=":
            a[i, k] = 1.0
            slack_of_row[i] = k
            k += 1
        elif rel == ">=":
            a[i, k] = -1.0
            slack_of_row[i] = k
            k += 1

    c = np.zeros(n_struct + slack_cols)
    for k2 in range(n_struct):
        c[k2] = lp._objective[col_var[k2]] * col_sign[k2]

    return _Standardized(
        a=a,
        b=np.asarray(rhs, dtype=float),
        c=c,
        row_flip=row_flip,
        row_origin=row_origin,
        bound_row_var=bound_row_var,
        slack_of_row=slack_of_row,
        col_var=col_var,
        col_sign=col_sign,
        col_shift=col_shift,
        n_structural=n_struct,
        const_offset=const_offset,
    )


class _Pivoter:
    """Shared pivoting loop for both simplex phases."""

    def __init__(self, a: np.ndarray, b: np.ndarray, stall_limit: int):
        self.a = a
        self.b = b
        self.stall_limit = stall_limit
        self.bland = False
        self.degenerate_run = 0
        self.pivots = 0

    def run(self, c: np.ndarray, basis: list[int], allowed: np.ndarray) -> str:
        """Pivot until optimal or unbounded; returns 'optimal' or 'unbounded'."""

        a, b = self.a, self.b
        m = len(basis)
        while True:
            if self.pivots > _MAX_PIVOTS:
                raise SolverError("pivot limit exceeded")
            lu = lu_factor(a[:, basis])
            x_b = lu_solve(lu, b)
            y = lu_solve(lu, c[basis], trans=1)
            reduced = c - a.T @ y
            candidates = np.flatnonzero((reduced < -OPT_TOL) & allowed)
            if candidates.size == 0:
                return "optimal"
            if self.bland:
                enter = int(candidates[0])
            else:
                best = reduced[candidates].min()
                enter = int(candidates[reduced[candidates] <= best + OPT_TOL][0])
            direction = lu_solve(lu, a[:, enter])
            pos = np.flatnonzero(direction > _PIVOT_TOL)
            if pos.size == 0:
                return "unbounded"
            ratios = x_b[pos] / direction[pos]
            rmin = ratios.min()
            ties = pos[ratios <= rmin + FEAS_TOL]
            leave = int(min(ties, key=lambda i: basis[i]))
            if x_b[leave] <= FEAS_TOL:
                self.degenerate_run += 1
                if self.degenerate_run > self.stall_limit:
                    self.bland = True
            else:
                self.degenerate_run = 0
            basis[leave] = enter
            self.pivots += 1


def _drive_out_artificials(
    std: _Standardized,
    basis: list[int],
    n_real: int,
    art_of_row: list[int],
) -> None:
    """Pivot artificial variables out of the basis; drop redundant rows.

    A basic artificial sits at value ~0 after a feasible phase 1.  If its row
    has no eligible real column to pivot on, the row is linearly dependent on
    the others and is removed from the problem.
    """

    while True:
        row_of = {col: i for i, col in enumerate(basis)}
        art_rows = [i for i, col in enumerate(basis) if col >= n_real]
        if not art_rows:
            return
        i = art_rows[0]
        lu = lu_factor(std.a[:, basis])
        e = np.zeros(len(basis))
        e[i] = 1.0
        w = lu_solve(lu, e, trans=1)
        tableau_row = w @ std.a[:, :n_real]
        eligible = [
            j
            for j in range(n_real)
            if abs(tableau_row[j]) > _DROP_TOL and j not in row_of
        ]
        if eligible:
            basis[i] = eligible[0]
            continue
        # redundant row: remove it together with its artificial column
        keep = [k for k in range(std.a.shape[0]) if k != i]
        std.a = std.a[keep, :]
        std.b = std.b[keep]
        std.row_flip = [std.row_flip[k] for k in keep]
        std.row_origin = [std.row_origin[k] for k in keep]
        std.bound_row_var = [std.bound_row_var[k] for k in keep]
        std.slack_of_row = [std.slack_of_row[k] for k in keep]
        del basis[i]
        # artificial column indices shift as rows disappear; art columns are
        # only referenced through `basis`, which no longer contains this one


def _solve_once(lp: LinearProgram, force_bland: bool) -> LpSolution:
    std = _standardize(lp)
    m, n_real = std.a.shape[0], std.a.shape[1]

    if m == 0:
        if np.any(std.c < -OPT_TOL):
            return LpSolution(Status.UNBOUNDED)
        primal = _recover_primal(lp, std, np.zeros(n_real))
        obj = std.const_offset
        return LpSolution(Status.OPTIMAL, obj, primal, (), obj, 0)

    # phase 1: artificials for rows without a usable slack basis
    art_of_row: list[int] = [-1] * m
    art_cols: list[int] = []
    basis: list[int] = [-1] * m
    for i in range(m):
        slack = std.slack_of_row[i]
        if slack >= 0 and std.a[i, slack] > 0:
            basis[i] = slack
        else:
            col = n_real + len(art_cols)
            art_of_row[i] = col
            art_cols.append(col)
            basis[i] = col
    a_full = np.hstack([std.a, np.zeros((m, len(art_cols)))])
    for i in range(m):
        if art_of_row[i] >= 0:
            a_full[i, art_of_row[i]] = 1.0

    pivoter = _Pivoter(a_full, std.b, stall_limit=max(50, 2 * m))
    pivoter.bland = force_bland
    std.a = a_full

    if art_cols:
        c1 = np.zeros(a_full.shape[1])
        c1[n_real:] = 1.0
        allowed = np.zeros(a_full.shape[1], dtype=bool)
        allowed[:n_real] = True
        outcome = pivoter.run(c1, basis, allowed)
        if outcome != "optimal":
            raise SolverError("phase 1 reported unbounded")
        lu = lu_factor(a_full[:, basis])
        x_b = lu_solve(lu, std.b)
        infeas = sum(x_b[i] for i in range(m) if basis[i] >= n_real)
        if infeas > FEAS_TOL * max(1.0, float(np.max(std.b, initial=0.0))):
            return LpSolution(Status.INFEASIBLE, pivots=pivoter.pivots)
        _drive_out_artificials(std, basis, n_real, art_of_row)
        a_full = std.a
        m = a_full.shape[0]
        pivoter.a = a_full
        pivoter.b = std.b

    # phase 2
    c2 = np.zeros(a_full.shape[1])
    c2[:n_real] = std.c
    allowed = np.zeros(a_full.shape[1], dtype=bool)
    allowed[:n_real] = True
    outcome = pivoter.run(c2, basis, allowed)
    if outcome == "unbounded":
        return LpSolution(Status.UNBOUNDED, pivots=pivoter.pivots)

    lu = lu_factor(a_full[:, basis])
    x_b = lu_solve(lu, std.b)
    x = np.zeros(n_real)
    for i, col in enumerate(basis):
        if col < n_real:
            x[col] = x_b[i]
    y = lu_solve(lu, c2[basis], trans=1)

    primal = _recover_primal(lp, std, x)
    objective = sum(lp._objective[j] * primal[lp._variables[j].name] for j in range(lp.num_variables))

    duals = [0.0] * lp.num_constraints
    bound_row_term = 0.0
    for i in range(m):
        value = -y[i] if std.row_flip[i] else y[i]
        orig = std.row_origin[i]
        if orig >= 0:
            duals[orig] = float(value)
        else:
            rhs = std.b[i] if not std.row_flip[i] else -std.b[i]
            bound_row_term += value * rhs

    dual_objective = _dual_objective(lp, duals, bound_row_term)
    solution = LpSolution(
        Status.OPTIMAL,
        float(objective),
        primal,
        tuple(duals),
        float(dual_objective),
        pivoter.pivots,
    )
    _verify(lp, solution)
    return solution


def _recover_primal(lp: LinearProgram, std: _Standardized, x: np.ndarray) -> dict[str, float]:
    values = [0.0] * lp.num_variables
    seen_shift = [False] * lp.num_variables
    for k in range(std.n_structural):
        j = std.col_var[k]
        if not seen_shift[j]:
            values[j] += std.col_shift[k]
            seen_shift[j] = True
        values[j] += std.col_sign[k] * x[k]
    return {lp._variables[j].name: float(values[j]) for j in range(lp.num_variables)}


def _dual_objective(
    lp: LinearProgram,
    duals: list[float],
    bound_row_term: float,
) -> float:
    # c.x = sum_i y_i b_i + l.(c - A'y) + sum_{upper rows} y_r (u - l)
    total = bound_row_term
    for i, con in enumerate(lp._constraints):
        total += duals[i] * con.rhs
    reduced = list(lp._objective)
    for i, con in enumerate(lp._constraints):
        for j, a in con.coeffs:
            reduced[j] -= duals[i] * a
    for j, v in enumerate(lp._variables):
        if v.lower not in (0.0, -math.inf):
            total += v.lower * reduced[j]
    return total


def _verify(lp: LinearProgram, sol: LpSolution) -> None:
    x = [sol.primal[v.name] for v in lp._variables]
    scale = max(1.0, max((abs(c.rhs) for c in lp._constraints), default=1.0))
    for i, con in enumerate(lp._constraints):
        lhs = sum(a * x[j] for j, a in con.coeffs)
        resid = lhs - con.rhs
        if con.relation == "<=" and resid > FEAS_TOL * scale:
            raise SolverError(f"row {i} violated by {resid:g}")
        if con.relation == ">=" and resid < -FEAS_TOL * scale:
            raise SolverError(f"row {i} violated by {resid:g}")
        if con.relation == "=" and abs(resid) > FEAS_TOL * scale:
            raise SolverError(f"row {i} violated by {resid:g}")
        y_i = sol.duals[i]
        if con.relation == "<=" and y_i > GAP_TOL:
            raise SolverError(f"row {i} has wrong dual sign {y_i:g}")
        if con.relation == ">=" and y_i < -GAP_TOL:
            raise SolverError(f"row {i} has wrong dual sign {y_i:g}")
        if con.relation != "=" and abs(y_i) > GAP_TOL and abs(resid) > FEAS_TOL * scale * 10:
            raise SolverError(f"row {i} breaks complementary slackness")
    for j, v in enumerate(lp._variables):
        if x[j] < v.lower - FEAS_TOL * scale or x[j] > v.upper + FEAS_TOL * scale:
            raise SolverError(f"variable {v.name} out of bounds: {x[j]:g}")
    gap = abs(sol.objective - sol.dual_objective)
    if gap > GAP_TOL * (1.0 + abs(sol.objective)):
        raise SolverError(f"duality gap {gap:g} exceeds tolerance")


def solve(lp: LinearProgram) -> LpSolution:
    """Solve a minimization LP, returning a certified solution.

    OPTIMAL results carry primal values, one dual per constraint, and a
    verified duality gap.  INFEASIBLE and UNBOUNDED results carry no
    certificates.  A solve that cannot be certified even after restarting
    under Bland's rule returns NUMERICAL_FAILURE rather than a wrong answer.
    """

    try:
        return _solve_once(lp, force_bland=False)
    except SolverError:
        pass
    try:
        return _solve_once(lp, force_bland=True)
    except SolverError:
        return LpSolution(Status.NUMERICAL_FAILURE)
