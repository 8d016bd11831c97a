"""Solvers for :class:`~alwibp.mip.MipModel` instances.

``solve_exhaustive`` is a model-agnostic depth-first enumeration of the 0-1
variables with activity-bound propagation and objective pruning. It only
reads the constraint rows, so it is an independent check of the models
against the combinatorial oracle. Continuous variables are resolved by a
linear program once every binary is fixed.

``solve_highs`` hands the same model to HiGHS through ``scipy.optimize.milp``
and is what the LS post-optimization uses at benchmark scale.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp
from scipy.sparse import coo_matrix

from .instance import Instance, LineSolution, is_feasible
from .mip import (BINARY, CONTINUOUS, LS1, STATIONS, MipModel, SolverSolution, build_ls,
                  check_solution, solution_values, values_to_solution)

log = logging.getLogger(__name__)

EPS = 1e-9
OPTIMAL, FEASIBLE, INFEASIBLE, LIMIT = "optimal", "feasible", "infeasible", "limit"


@dataclass
class SolveResult:
    status: str
    solution: Optional[SolverSolution] = None
    nodes: int = 0
    seconds: float = 0.0

    @property
    def objective(self):
        return None if self.solution is None else self.solution.objective

    @property
    def proven(self) -> bool:
        return self.status in (OPTIMAL, INFEASIBLE)


class _Limit(Exception):
    pass


class _Enumerator:
    def __init__(self, model: MipModel, node_limit, time_limit):
        self.model = model
        self.names = [v.name for v in model.variables]
        index = {v: k for k, v in enumerate(self.names)}
        self.binary = [v.kind == BINARY for v in model.variables]
        self.order = [k for k, b in enumerate(self.binary) if b]
        self.cont = [k for k, b in enumerate(self.binary) if not b]
        # rows: "<=" or "=" after flipping ">=" rows
        self.rows = []
        self.eq = []
        self.rhs = []
        for con in model.constraints:
            sign = -1 if con.sense == ">=" else 1
            self.rows.append([(index[v], sign * c) for v, c in con.terms])
            self.eq.append(con.sense == "=")
            self.rhs.append(sign * con.rhs)
        obj_row = len(self.rows)
        self.rows.append([(index[v], c) for v, c in model.objective])
        self.eq.append(False)
        self.rhs.append(float("inf"))
        self.obj_row = obj_row
        self.col = [[] for _ in self.names]
        for r, row in enumerate(self.rows):
            for k, c in row:
                self.col[k].append((r, c))
        R = len(self.rows)
        self.lo = [0.0] * R  # finite part of the minimum activity
        self.hi = [0.0] * R
        self.lo_inf = [0] * R  # continuous terms that can push the bound to infinity
        self.hi_inf = [0] * R
        for r, row in enumerate(self.rows):
            for k, c in row:
                if self.binary[k]:
                    self.lo[r] += min(c, 0)
                    self.hi[r] += max(c, 0)
                elif c > 0:
                    self.hi_inf[r] += 1
                else:
                    self.lo_inf[r] += 1
        self.value = [None] * len(self.names)
        self.trail = []
        self.nodes = 0
        self.node_limit = node_limit
        self.deadline = time.monotonic() + time_limit
        self.best = float("inf")
        self.best_values = None

    # -- bound bookkeeping -------------------------------------------------
    def _assign(self, k, val):
        self.value[k] = val
        self.trail.append(k)
        for r, c in self.col[k]:
            self.lo[r] += c * val - min(c, 0)
            self.hi[r] += c * val - max(c, 0)

    def _undo(self, mark):
        while len(self.trail) > mark:
            k = self.trail.pop()
            val = self.value[k]
            for r, c in self.col[k]:
                self.lo[r] -= c * val - min(c, 0)
                self.hi[r] -= c * val - max(c, 0)
            self.value[k] = None

    def _row_ok(self, r):
        if r == self.obj_row:
            return True
        rhs = self.rhs[r]
        if not self.lo_inf[r] and self.lo[r] > rhs + EPS:
            return False
        if self.eq[r] and not self.hi_inf[r] and self.hi[r] < rhs - EPS:
            return False
        return True

    def _propagate(self, k, val) -> bool:
        queue = [k]
        self._assign(k, val)
        while queue:
            k = queue.pop()
            for r, _ in self.col[k]:
                if not self._row_ok(r):
                    return False
                if r == self.obj_row:
                    continue
                rhs = self.rhs[r]
                lo_ok = not self.lo_inf[r]
                hi_ok = self.eq[r] and not self.hi_inf[r]
                for j, c in self.rows[r]:
                    if self.value[j] is not None or not self.binary[j]:
                        continue
                    forced = None
                    if lo_ok:
                        if c > 0 and self.lo[r] + c > rhs + EPS:
                            forced = 0
                        elif c < 0 and self.lo[r] - c > rhs + EPS:
                            forced = 1
                    if forced is None and hi_ok:
                        if c > 0 and self.hi[r] - c < rhs - EPS:
                            forced = 1
                        elif c < 0 and self.hi[r] + c < rhs - EPS:
                            forced = 0
                    if forced is not None:
                        self._assign(j, forced)
                        if not all(self._row_ok(rr) for rr, _ in self.col[j]):
                            return False
                        queue.append(j)
        return True

    # -- search ----------------------------------------------------------
    def _leaf(self):
        if not self.cont:
            obj = self.lo[self.obj_row]
            if obj < self.best - EPS:
                self.best = obj
                self.best_values = {self.names[k]: float(self.value[k]) for k in self.order}
            return
        cidx = {k: p for p, k in enumerate(self.cont)}
        A_ub, b_ub, A_eq, b_eq = [], [], [], []
        for r, row in enumerate(self.rows):
            if r == self.obj_row:
                continue
            coeffs = np.zeros(len(self.cont))
            fixed = 0.0
            touched = False
            for k, c in row:
                if self.binary[k]:
                    fixed += c * self.value[k]
                else:
                    coeffs[cidx[k]] += c
                    touched = True
            if not touched:
                continue
            (A_eq if self.eq[r] else A_ub).append(coeffs)
            (b_eq if self.eq[r] else b_ub).append(self.rhs[r] - fixed)
        cost = np.zeros(len(self.cont))
        base = 0.0
        for k, c in self.rows[self.obj_row]:
            if self.binary[k]:
                base += c * self.value[k]
            else:
                cost[cidx[k]] += c
        res = linprog(cost, A_ub=np.array(A_ub) if A_ub else None, b_ub=b_ub or None,
                      A_eq=np.array(A_eq) if A_eq else None, b_eq=b_eq or None,
                      bounds=[(0, None)] * len(self.cont), method="highs")
        if res.status != 0:
            return
        obj = base + float(res.fun)
        if obj < self.best - EPS:
            self.best = obj
            vals = {self.names[k]: float(self.value[k]) for k in self.order}
            for k, x in zip(self.cont, res.x):
                vals[self.names[k]] = float(x)
            self.best_values = vals

    def _bound(self):
        # continuous objective terms are non-negative variables; negative
        # coefficients would make the bound useless, so treat them as -inf
        if self.lo_inf[self.obj_row]:
            return -float("inf")
        return self.lo[self.obj_row]

    def search(self, pos=0):
        self.nodes += 1
        if self.nodes > self.node_limit:
            raise _Limit
        if (self.nodes & 1023) == 0 and time.monotonic() > self.deadline:
            raise _Limit
        if self._bound() >= self.best - EPS:
            return
        order = self.order
        while pos < len(order) and self.value[order[pos]] is not None:
            pos += 1
        if pos == len(order):
            self._leaf()
            return
        k = order[pos]
        for val in (1, 0):
            mark = len(self.trail)
            if self._propagate(k, val):
                self.search(pos + 1)
            self._undo(mark)

    def run(self):
        for r in range(len(self.rows)):
            if not self._row_ok(r):
                return
        self.search()


def solve_exhaustive(model: MipModel, node_limit: int = 20_000_000,
                     time_limit: float = 600.0) -> SolveResult:
    """Exact optimum of a (small) model by enumerating its 0-1 variables.

    Binaries are branched in declaration order, value 1 first; the builders
    declare the sink placement first, then worker placements, then task
    placements in topological order, so feasible lines are met early.
    """
    start = time.monotonic()
    enum = _Enumerator(model, node_limit, time_limit)
    try:
        enum.run()
        status = OPTIMAL if enum.best_values is not None else INFEASIBLE
    except _Limit:
        status = FEASIBLE if enum.best_values is not None else LIMIT
    sol = None
    if enum.best_values is not None:
        vals = {v.name: enum.best_values.get(v.name, 0.0) for v in model.variables}
        sol = SolverSolution(vals, model.objective_value(vals))
    return SolveResult(status, sol, enum.nodes, time.monotonic() - start)


def solve_highs(model: MipModel, time_limit: float = 60.0) -> SolveResult:
    """Solve with HiGHS (branch and cut) via scipy."""
    start = time.monotonic()
    names = [v.name for v in model.variables]
    index = {v: k for k, v in enumerate(names)}
    c = np.zeros(len(names))
    for v, coef in model.objective:
        c[index[v]] += coef
    rows, cols, data, lo, hi = [], [], [], [], []
    for r, con in enumerate(model.constraints):
        for v, coef in con.terms:
            rows.append(r)
            cols.append(index[v])
            data.append(coef)
        lo.append(con.rhs if con.sense in ("=", ">=") else -np.inf)
        hi.append(con.rhs if con.sense in ("=", "<=") else np.inf)
    integrality = np.array([1 if v.kind == BINARY else 0 for v in model.variables])
    ub = np.array([1.0 if v.kind == BINARY else np.inf for v in model.variables])
    constraints = []
    if model.constraints:
        A = coo_matrix((data, (rows, cols)), shape=(len(model.constraints), len(names))).tocsr()
        constraints.append(LinearConstraint(A, lo, hi))
    bounds = Bounds(np.zeros(len(names)), ub)
    for presolve in (True, False):
        res = milp(c, constraints=constraints, integrality=integrality, bounds=bounds,
                   options={"time_limit": float(time_limit), "disp": False,
                            "presolve": presolve})
        if res.x is None:
            break
        vals = {}
        for k, v in enumerate(model.variables):
            x = float(res.x[k])
            vals[v.name] = float(round(x)) if v.kind == BINARY else max(0.0, x)
        sol = SolverSolution(vals, model.objective_value(vals))
        # data are integral, so a real violation is far above this tolerance
        verdict = check_solution(model, sol, tol=1e-4)
        if not verdict.violations and not verdict.integrality:
            status = OPTIMAL if res.status == 0 else FEASIBLE
            return SolveResult(status, sol, 0, time.monotonic() - start)
        # HiGHS presolve can report an infeasible point as optimal; retry without it
        log.warning("HiGHS point violates %s (presolve=%s)", verdict.describe().splitlines()[0],
                    presolve)
    seconds = time.monotonic() - start
    if res.x is None and res.status == 2:
        return SolveResult(INFEASIBLE, None, 0, seconds)
    return SolveResult(LIMIT, None, 0, seconds)


SOLVERS = {"highs": solve_highs, "exhaustive": solve_exhaustive}


@dataclass
class LsResult:
    solution: LineSolution
    objective: float
    start_objective: float
    status: str
    improved: bool
    model: MipModel = field(repr=False, default=None)

    @property
    def stations(self) -> int:
        return len(self.solution)


def improve_with_ls(instance: Instance, cih_solution: LineSolution, mode: str = LS1,
                    objective_mode: str = STATIONS, solver: str = "highs",
                    time_limit: float = 60.0) -> LsResult:
    """Post-optimize a CIH line in its LS1/LS2 neighborhood.

    The CIH line is feasible for the neighborhood, so the returned line is
    never worse: if the solver fails, runs out of time without a better
    point, or returns something that does not validate, the start is kept.
    """
    model = build_ls(instance, cih_solution, mode, objective_mode)
    start = solution_values(model, cih_solution)
    if solver == "exhaustive":
        res = solve_exhaustive(model, time_limit=time_limit)
    else:
        res = SOLVERS[solver](model, time_limit=time_limit)
    best, best_obj, improved = cih_solution, start.objective, False
    if res.solution is not None and res.objective < start.objective - 1e-9:
        verdict = check_solution(model, res.solution)
        line = values_to_solution(instance, res.solution.values)
        if verdict.ok and is_feasible(instance, line):
            best, best_obj, improved = line, res.objective, True
            # dropping empty stations can only lower the sink index
            compact = solution_values(model, line).objective
            best_obj = min(best_obj, compact)
        else:
            log.warning("LS solver returned an invalid point: %s", verdict.describe())
    return LsResult(best, best_obj, start.objective, res.status, improved, model)
