"""Integer programming models for ALWIBP-1, its S_min extension and the LS neighborhoods.

Models are plain data (:class:`MipModel`): named variables, named linear
constraints with the constant part moved to the right-hand side, and a linear
objective to minimize. They can be written as CPLEX LP text, read back, and
used to check candidate assignments.

Naming (all indices 1-based; ``q`` is the artificial sink task)::

    x_<s>_<i>    task i at station s            (x_3_q for the sink)
    y_<s>_<w>    worker w at station s          (w = position in the worker list)
    l_<s>_<w>    slack of the worker capacity row (S_min only)
    delta_<w>    idle time of worker w's station  (S_min only)

Constraint names carry the family and their indices, e.g. ``c7_s3_w1`` or
``c5_i2_j4_k3``. Besides the standard families there is
``c9b_s<s>_w<w>``: a worker may only occupy a station that holds at least one
task it can execute. Without it a worker could sit on an empty station.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

from .instance import Instance, InstanceError, LineSolution, Station, big_m

BINARY = "binary"
CONTINUOUS = "continuous"
SENSES = ("<=", "=", ">=")
LS1, LS2 = "LS1", "LS2"
STATIONS, SMIN = "stations", "smin"


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str = BINARY

    def __post_init__(self):
        if self.kind not in (BINARY, CONTINUOUS):
            raise ModelError(f"bad variable kind {self.kind!r}")


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple  # ((variable name, coefficient), ...)
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ModelError(f"bad relation {self.sense!r}")

    def activity(self, values) -> float:
        return sum(c * values.get(v, 0.0) for v, c in self.terms)

    def slack(self, values) -> float:
        """Signed distance to violation; negative means violated."""
        lhs = self.activity(values)
        if self.sense == "<=":
            return self.rhs - lhs
        if self.sense == ">=":
            return lhs - self.rhs
        return -abs(lhs - self.rhs)


@dataclass
class MipModel:
    name: str = "model"
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: tuple = ()
    meta: dict = field(default_factory=dict)  # builder context, not part of the LP

    def __post_init__(self):
        self._index = {}
        for v in self.variables:
            if v.name in self._index:
                raise ModelError(f"duplicate variable {v.name}")
            self._index[v.name] = v

    def add_variable(self, name, kind=BINARY):
        if name in self._index:
            raise ModelError(f"duplicate variable {name}")
        var = Variable(name, kind)
        self.variables.append(var)
        self._index[name] = var
        return name

    def add(self, name, terms, sense, rhs):
        terms = tuple((v, c) for v, c in terms if c != 0)
        self.constraints.append(Constraint(name, terms, sense, rhs))

    def variable(self, name) -> Variable:
        return self._index[name]

    def has_variable(self, name) -> bool:
        return name in self._index

    def check_invariants(self):
        seen = set()
        for con in self.constraints:
            if con.name in seen:
                raise ModelError(f"duplicate constraint {con.name}")
            seen.add(con.name)
            for v, _ in con.terms:
                if v not in self._index:
                    raise ModelError(f"constraint {con.name} uses undeclared {v}")
        for v, _ in self.objective:
            if v not in self._index:
                raise ModelError(f"objective uses undeclared {v}")

    def objective_value(self, values) -> float:
        return sum(c * values.get(v, 0.0) for v, c in self.objective)

    def constraint(self, name) -> Constraint:
        for con in self.constraints:
            if con.name == name:
                return con
        raise KeyError(name)


@dataclass
class SolverSolution:
    values: Dict[str, float]
    objective: Optional[float] = None


# -- naming ------------------------------------------------------------------

def xname(s, i, n):
    return f"x_{s + 1}_{'q' if i == n else i + 1}"


def yname(s, k):
    return f"y_{s + 1}_{k + 1}"


def lname(s, k):
    return f"l_{s + 1}_{k + 1}"


def dname(k):
    return f"delta_{k + 1}"


def _tid(i, n):
    return "q" if i == n else str(i + 1)


# -- builders ----------------------------------------------------------------

def station_lower_bound(instance: Instance) -> int:
    return max(1, math.ceil(sum(instance.times) / instance.cycle_time))


def default_max_stations(instance: Instance) -> int:
    """Station count of the best CIH line; |N|+|W| if the heuristic fails."""
    if not instance.workers:
        from .salbp import best_salbp1
        return len(best_salbp1(instance))
    try:
        from .cih import run_best_of_four
        return run_best_of_four(instance).stations
    except Exception:  # the bound is only a convenience
        return instance.task_count + len(instance.workers)


def _base(instance: Instance, max_stations, kind, capacity_rows=True) -> MipModel:
    if max_stations is None:
        max_stations = default_max_stations(instance)
    lb = station_lower_bound(instance)
    if max_stations < lb:
        raise ModelError(f"max_stations={max_stations} is below the lower bound {lb}")
    n = instance.task_count
    S = range(max_stations)
    W = range(len(instance.workers))
    C = instance.cycle_time
    closure = instance.closure
    sink = n
    model = MipModel(f"{instance.name or 'instance'}_{kind}")
    model.meta.update(instance=instance, stations=max_stations, kind=kind)

    for s in S:
        model.add_variable(xname(s, sink, n))
    for k in W:
        for s in S:
            model.add_variable(yname(s, k))
    for i in instance.topological_order:
        for s in S:
            model.add_variable(xname(s, i, n))

    model.objective = tuple((xname(s, sink, n), s + 1) for s in S)

    tasks = list(range(n)) + [sink]
    for i in tasks:  # c2: each task and the sink at one station
        model.add(f"c2_i{_tid(i, n)}", [(xname(s, i, n), 1) for s in S], "=", 1)
    for k in W:  # c3: each worker at one station
        model.add(f"c3_w{k + 1}", [(yname(s, k), 1) for s in S], "=", 1)
    if instance.workers:  # c4: at most one worker per station
        for s in S:
            model.add(f"c4_s{s + 1}", [(yname(s, k), 1) for k in W], "<=", 1)
    arcs = list(instance.precedence) + [(i, sink) for i in sorted(closure.sink_predecessors)]
    for i, j in arcs:  # c5: precedence, cumulative form
        for k in range(1, max_stations):
            terms = [(xname(s, i, n), 1) for s in range(k, max_stations)]
            terms += [(xname(s, j, n), -1) for s in range(k, max_stations)]
            model.add(f"c5_i{_tid(i, n)}_j{_tid(j, n)}_k{k + 1}", terms, "<=", 0)
    for s in S:  # c6: conventional capacity
        model.add(f"c6_s{s + 1}", [(xname(s, i, n), instance.times[i]) for i in range(n)],
                  "<=", C)
    for k, w in enumerate(instance.workers):
        L = big_m(instance, w)
        model.meta.setdefault("big_m", {})[k] = L
        feasible = [i for i in range(n) if w.can_do(i)]
        if capacity_rows:
            for s in S:  # c7: worker capacity, relaxed by L_w elsewhere
                terms = [(xname(s, i, n), w.times[i]) for i in feasible]
                terms.append((yname(s, k), L))
                model.add(f"c7_s{s + 1}_w{k + 1}", terms, "<=", C + L)
        for s in S:  # c8: incompatible tasks
            for i in sorted(w.infeasible):
                model.add(f"c8_s{s + 1}_w{k + 1}_i{i + 1}",
                          [(yname(s, k), 1), (xname(s, i, n), 1)], "<=", 1)
        for kk in range(1, max_stations):  # c9: worker before the sink, cumulative form
            terms = [(yname(s, k), 1) for s in range(kk, max_stations)]
            terms += [(xname(s, sink, n), -1) for s in range(kk, max_stations)]
            model.add(f"c9_w{k + 1}_k{kk + 1}", terms, "<=", 0)
        for s in S:  # a worker's station holds one of its feasible tasks
            terms = [(yname(s, k), 1)] + [(xname(s, i, n), -1) for i in feasible]
            model.add(f"c9b_s{s + 1}_w{k + 1}", terms, "<=", 0)
    return model


def build_alwibp1(instance: Instance, max_stations: int = None) -> MipModel:
    """Station-minimization model; ``max_stations`` defaults to the CIH count."""
    return _base(instance, max_stations, "alwibp1")


def smin_big_m(instance: Instance, k: int) -> int:
    """Constant deactivating the idle-time row of worker k off its station.

    With y_sw = 0 the slack can reach C + L_w, so the constant must cover
    that even when the instance's total time is below the cycle time.
    """
    L = big_m(instance, instance.workers[k])
    return L + max(sum(instance.times), instance.cycle_time)


def _add_smin_objective(model, instance):
    W = len(instance.workers)
    weight = 1.0 / (instance.cycle_time * W)
    for k in range(W):
        model.add_variable(dname(k), CONTINUOUS)
    model.objective = model.objective + tuple((dname(k), weight) for k in range(W))


def build_smin(instance: Instance, max_stations: int = None) -> MipModel:
    """Hierarchical model: stations first, then the idle time at worker stations."""
    if not instance.workers:
        raise ModelError("the S_min model needs at least one worker")
    model = _base(instance, max_stations, "smin", capacity_rows=False)
    n = instance.task_count
    C = instance.cycle_time
    S = range(model.meta["stations"])
    for k, w in enumerate(instance.workers):
        for s in S:
            model.add_variable(lname(s, k), CONTINUOUS)
    _add_smin_objective(model, instance)
    model.meta["smin_m"] = {}
    for k, w in enumerate(instance.workers):
        L = model.meta["big_m"][k]
        M = smin_big_m(instance, k)
        model.meta["smin_m"][k] = M
        feasible = [i for i in range(n) if w.can_do(i)]
        for s in S:  # c12: slack of the worker capacity row
            terms = [(xname(s, i, n), w.times[i]) for i in feasible]
            terms += [(lname(s, k), 1), (yname(s, k), L)]
            model.add(f"c12_s{s + 1}_w{k + 1}", terms, "=", C + L)
        for s in S:  # c13: delta picks up the slack at the worker's station
            model.add(f"c13_s{s + 1}_w{k + 1}",
                      [(dname(k), 1), (lname(s, k), -1), (yname(s, k), -M)], ">=", -M)
    return model


def build_ls(instance: Instance, cih_solution: LineSolution, mode: str = LS1,
             objective_mode: str = STATIONS) -> MipModel:
    """MIP neighborhood around a CIH line.

    LS1 fixes every worker to its CIH station. LS2 also keeps each task
    within one station of where the CIH put it. With ``objective_mode="smin"``
    the idle time of each worker's (known) station enters the objective.
    """
    if mode not in (LS1, LS2):
        raise ModelError(f"unknown LS mode {mode!r}")
    if objective_mode not in (STATIONS, SMIN):
        raise ModelError(f"unknown objective mode {objective_mode!r}")
    m = len(cih_solution)
    base = build_alwibp1(instance, m)
    start = solution_values(base, cih_solution)
    bad = [c.name for c in base.constraints if c.slack(start.values) < -1e-9]
    if bad:
        raise InstanceError("CIH solution violates the base model: " + ", ".join(bad[:5]))
    n = instance.task_count
    smin = objective_mode == SMIN
    if smin and not instance.workers:
        raise ModelError("the S_min objective needs at least one worker")
    model = _base(instance, m, f"{mode.lower()}_{objective_mode}", capacity_rows=not smin)
    model.meta.update(source=cih_solution, mode=mode, objective_mode=objective_mode)
    where_w = cih_solution.station_of_worker()
    for k in range(len(instance.workers)):  # c15: workers stay where the CIH put them
        model.add(f"c15_w{k + 1}", [(yname(where_w[k], k), 1)], "=", 1)
    if mode == LS2:
        where = cih_solution.station_of_task()
        for i in range(n):
            s = where[i]
            if s == 0:
                fam, window = "c18", (0, 1)
            elif s == m - 1:
                fam, window = "c19", (m - 2, m - 1)
            else:
                fam, window = "c17", (s - 1, s, s + 1)
            window = sorted({t for t in window if 0 <= t < m})
            model.add(f"{fam}_i{i + 1}", [(xname(t, i, n), 1) for t in window], "=", 1)
    if smin:
        _add_smin_objective(model, instance)
        C = instance.cycle_time
        for k, w in enumerate(instance.workers):  # c20: delta is that station's idle time
            s = where_w[k]
            terms = [(xname(s, i, n), w.times[i]) for i in range(n) if w.can_do(i)]
            terms.append((dname(k), 1))
            model.add(f"c20_w{k + 1}", terms, "=", C)
    return model


# -- solutions <-> variable values --------------------------------------------

def solution_values(model: MipModel, solution: LineSolution) -> SolverSolution:
    """Variable values encoding ``solution`` (sink at the last station)."""
    inst = model.meta["instance"]
    n = inst.task_count
    C = inst.cycle_time
    m = model.meta["stations"]
    if len(solution) > m:
        raise ModelError(f"solution uses {len(solution)} stations, model has {m}")
    vals = {v.name: 0.0 for v in model.variables}
    for s, st in enumerate(solution.stations):
        for i in st.tasks:
            vals[xname(s, i, n)] = 1.0
        if st.worker is not None:
            vals[yname(s, st.worker)] = 1.0
    vals[xname(len(solution) - 1, n, n)] = 1.0
    for k, w in enumerate(inst.workers):
        s_w = solution.station_of_worker()[k]
        load = sum(w.times[i] for i in solution.stations[s_w].tasks if w.can_do(i))
        if model.has_variable(dname(k)):
            vals[dname(k)] = float(C - load)
        if model.has_variable(lname(0, k)):
            L = model.meta["big_m"][k]
            for s in range(m):
                tasks = solution.stations[s].tasks if s < len(solution) else ()
                ld = sum(w.times[i] for i in tasks if w.can_do(i))
                y = 1 if s == s_w else 0
                vals[lname(s, k)] = float(C + L * (1 - y) - ld)
    return SolverSolution(vals, model.objective_value(vals))


_XRE = re.compile(r"x_(\d+)_(\d+|q)$")
_YRE = re.compile(r"y_(\d+)_(\d+)$")


def values_to_solution(instance: Instance, values) -> LineSolution:
    """Line encoded by 0-1 values; empty stations are dropped."""
    n = instance.task_count
    tasks, workers = {}, {}
    for name, val in values.items():
        if val < 0.5:
            continue
        mx = _XRE.match(name)
        if mx:
            s, i = int(mx.group(1)), mx.group(2)
            if i != "q":
                if int(i) - 1 >= n:
                    raise ModelError(f"{name} references an unknown task")
                tasks.setdefault(s, set()).add(int(i) - 1)
            continue
        my = _YRE.match(name)
        if my:
            s, k = int(my.group(1)), int(my.group(2)) - 1
            if s in workers:
                raise ModelError(f"two workers at station {s}")
            workers[s] = k
    stations = []
    for s in sorted(set(tasks) | set(workers)):
        stations.append(Station(frozenset(tasks.get(s, ())), workers.get(s)))
    stations = [st for st in stations if st.tasks or st.worker is not None]
    return LineSolution(tuple(stations))


# -- verification ---------------------------------------------------------------

@dataclass
class Verdict:
    violations: list  # (constraint name, slack) with slack < 0
    integrality: list  # binary variables away from {0, 1}
    objective: float
    reported: Optional[float]

    @property
    def objective_ok(self) -> bool:
        return self.reported is None or abs(self.objective - self.reported) <= 1e-6

    @property
    def ok(self) -> bool:
        return not self.violations and not self.integrality and self.objective_ok

    def describe(self) -> str:
        lines = [f"{name}: violated by {-slack:g}" for name, slack in self.violations]
        lines += [f"{v}: not binary ({x:g})" for v, x in self.integrality]
        if not self.objective_ok:
            lines.append(f"objective {self.objective:g} != reported {self.reported:g}")
        return "\n".join(lines) if lines else "feasible"


def check_solution(model: MipModel, sol: SolverSolution, tol: float = 1e-6) -> Verdict:
    for name in sol.values:
        if not model.has_variable(name):
            raise ModelError(f"unknown variable {name!r}")
    vals = sol.values
    violations = []
    for con in model.constraints:
        slack = con.slack(vals)
        if slack < -tol:
            violations.append((con.name, slack))
    integrality = []
    for v in model.variables:
        x = vals.get(v.name, 0.0)
        if v.kind == BINARY and min(abs(x), abs(x - 1)) > tol:
            integrality.append((v.name, x))
        elif v.kind == CONTINUOUS and x < -tol:
            integrality.append((v.name, x))
    return Verdict(violations, integrality, model.objective_value(vals), sol.objective)


def parse_values(text: str) -> SolverSolution:
    """``<name> <value>`` per line; an ``objective <value>`` line is optional."""
    vals = {}
    obj = None
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 2:
            raise ModelError(f"line {no}: expected '<name> <value>'")
        try:
            val = float(parts[1])
        except ValueError:
            raise ModelError(f"line {no}: bad value {parts[1]!r}") from None
        if parts[0].lower() == "objective":
            obj = val
        else:
            vals[parts[0]] = val
    return SolverSolution(vals, obj)


def format_values(sol: SolverSolution, model: MipModel = None) -> str:
    names = [v.name for v in model.variables] if model else sorted(sol.values)
    out = []
    if sol.objective is not None:
        out.append(f"objective {_num(sol.objective)}")
    for name in names:
        val = sol.values.get(name, 0.0)
        if val != 0:
            out.append(f"{name} {_num(val)}")
    return "\n".join(out) + "\n"


# -- LP text -------------------------------------------------------------------

LINE_WIDTH = 78


def _num(x) -> str:
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def _expr(terms) -> list:
    tokens = []
    for k, (v, c) in enumerate(terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = v if mag == 1 else f"{_num(mag)} {v}"
        if k == 0:
            tokens.append(body if sign == "+" else f"- {body}")
        else:
            tokens.append(f"{sign} {body}")
    return tokens


def _wrap(head, tokens, tail=""):
    lines = []
    cur = f" {head}" if head else ""
    for tok in tokens + ([tail] if tail else []):
        if len(cur) + 1 + len(tok) > LINE_WIDTH and cur.strip():
            lines.append(cur)
            cur = "   " + tok
        else:
            cur = f"{cur} {tok}"
    lines.append(cur)
    return lines


def emit_lp(model: MipModel) -> str:
    """CPLEX LP text; identical models give byte-identical output."""
    model.check_invariants()
    out = [f"\\ {model.name}", "Minimize"]
    obj = _expr(model.objective) or ["0"]
    out += _wrap("obj:", obj)
    if model.constraints:
        out.append("Subject To")
        for con in model.constraints:
            tokens = _expr(con.terms) or ["0"]
            out += _wrap(f"{con.name}:", tokens, f"{con.sense} {_num(con.rhs)}")
    cont = [v.name for v in model.variables if v.kind == CONTINUOUS]
    bins = [v.name for v in model.variables if v.kind == BINARY]
    if cont:
        out.append("Bounds")
        out += [f" {v} >= 0" for v in cont]
    if bins:
        out.append("Binaries")
        out += _wrap("", bins)
    out.append("End")
    return "\n".join(out) + "\n"


_SECTION = {"minimize": "obj", "minimise": "obj", "min": "obj", "subject to": "st",
            "such that": "st", "st": "st", "s.t.": "st", "bounds": "bounds",
            "binaries": "bin", "binary": "bin", "bin": "bin", "end": "end"}


_TOKEN = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[A-Za-z_][\w.]*|[+-]")


def _parse_expr(text, where):
    toks = _TOKEN.findall(text)
    terms = []
    sign, coef = 1.0, None
    for tok in toks:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            continue
        try:
            coef = float(tok)
            continue
        except ValueError:
            pass
        c = sign * (1.0 if coef is None else coef)
        terms.append((tok, int(c) if c.is_integer() else c))
        sign, coef = 1.0, None
    if coef is not None and not terms and coef == 0:
        return ()
    if coef is not None:
        raise ModelError(f"{where}: dangling constant")
    return tuple(terms)


def parse_lp(text: str) -> MipModel:
    """Read LP text written by :func:`emit_lp` (a CPLEX LP subset)."""
    name = "model"
    section = None
    chunks = {"obj": [], "st": [], "bounds": [], "bin": []}
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("\\"):
            if section is None and line[1:].strip():
                name = line[1:].strip()
            continue
        if not line:
            continue
        key = _SECTION.get(line.lower())
        if key == "end":
            break
        if key:
            section = key
            continue
        if section is None:
            raise ModelError(f"text outside any section: {line!r}")
        chunks[section].append(line)
    # regroup continuation lines: a statement starts with "<name>:"
    def statements(lines):
        out = []
        for line in lines:
            if re.match(r"^[A-Za-z_][\w.]*\s*:", line) or not out:
                out.append(line)
            else:
                out[-1] += " " + line
        return out

    binaries = " ".join(chunks["bin"]).split()
    continuous = []
    for line in chunks["bounds"]:
        m = re.fullmatch(r"(\S+)\s*>=\s*0", line)
        if not m:
            raise ModelError(f"unsupported bound {line!r}")
        continuous.append(m.group(1))
    variables = [Variable(v, BINARY) for v in binaries] + \
                [Variable(v, CONTINUOUS) for v in continuous]
    model = MipModel(name, variables)
    obj = " ".join(chunks["obj"])
    obj = obj.split(":", 1)[1] if ":" in obj else obj
    model.objective = _parse_expr(obj, "objective")
    for stmt in statements(chunks["st"]):
        cname, body = stmt.split(":", 1)
        m = re.fullmatch(r"(.*?)(<=|>=|=)\s*(\S+)\s*", body)
        if not m:
            raise ModelError(f"constraint {cname}: no relation")
        rhs = float(m.group(3))
        model.constraints.append(Constraint(cname.strip(), _parse_expr(m.group(1), cname),
                                            m.group(2), int(rhs) if rhs.is_integer() else rhs))
    model.check_invariants()
    return model


def feasible_region_contains(outer: MipModel, inner: MipModel) -> list:
    """Constraints of ``outer`` missing from ``inner`` (empty: inner ⊆ outer).

    Both models must declare the same variables; then every point satisfying
    ``inner`` satisfies ``outer`` whenever inner carries all of outer's rows.
    """
    if [v for v in outer.variables] != [v for v in inner.variables]:
        return ["<variable sets differ>"]
    have = {(c.name, c.terms, c.sense, c.rhs) for c in inner.constraints}
    return [c.name for c in outer.constraints if (c.name, c.terms, c.sense, c.rhs) not in have]
