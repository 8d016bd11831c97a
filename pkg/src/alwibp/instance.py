"""Problem data model: instances, worker profiles, line solutions.

Tasks, stations and workers are 0-based internally. File formats and
model variable names use 1-based ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching


class InstanceError(ValueError):
    """Raised when instance data violates a structural invariant."""


class InfeasibleError(RuntimeError):
    """Raised when no feasible line exists for the given data."""


class InfeasibleInstanceError(InstanceError):
    """Structurally valid data that no line can accommodate (e.g. t_i > C)."""


@dataclass(frozen=True)
class WorkerProfile:
    id: str
    times: tuple  # t_wi per task, None where the task is infeasible
    infeasible: frozenset = field(default=frozenset())

    def __post_init__(self):
        times = tuple(self.times)
        object.__setattr__(self, "times", times)
        implied = frozenset(i for i, t in enumerate(times) if t is None)
        infeasible = frozenset(self.infeasible) | implied
        object.__setattr__(self, "infeasible", infeasible)

    def time(self, task: int) -> Optional[int]:
        return None if task in self.infeasible else self.times[task]

    def can_do(self, task: int) -> bool:
        return task not in self.infeasible


def worker_from_times(worker_id: str, times: Sequence[int]) -> WorkerProfile:
    """Build a profile from a raw row where -1 marks an infeasible task."""
    clean = tuple(None if t == -1 else int(t) for t in times)
    return WorkerProfile(str(worker_id), clean)


@dataclass(frozen=True)
class PrecedenceClosure:
    immediate_successors: tuple  # tuple[frozenset[int]]
    all_successors: tuple
    sink_task: int  # index of the artificial task q (== task_count)
    sink_predecessors: frozenset  # D_q


@dataclass(frozen=True)
class Instance:
    times: tuple
    precedence: tuple = ()
    workers: tuple = ()
    cycle_time: int = 1000
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(int(t) for t in self.times))
        arcs = tuple(sorted({(int(i), int(j)) for i, j in self.precedence}))
        object.__setattr__(self, "precedence", arcs)
        object.__setattr__(self, "workers", tuple(self.workers))
        self._validate()

    def _validate(self):
        n = self.task_count
        C = self.cycle_time
        if n < 1:
            raise InstanceError("instance needs at least one task")
        if C < 1:
            raise InstanceError("cycle time must be positive")
        for i, t in enumerate(self.times):
            if t < 0:
                raise InstanceError(f"task {i + 1} has negative time")
            if t > C:
                raise InfeasibleInstanceError(f"task {i + 1} exceeds cycle time ({t} > {C})")
        for i, j in self.precedence:
            if not (0 <= i < n and 0 <= j < n):
                raise InstanceError(f"arc {i + 1}->{j + 1} references unknown task")
        if self._topological_order() is None:
            raise InstanceError("cycle detected in precedence graph")
        if len(self.workers) > n:
            raise InstanceError("more workers than tasks")
        ids = [w.id for w in self.workers]
        if len(set(ids)) != len(ids):
            raise InstanceError("duplicate worker id")
        for w in self.workers:
            if len(w.times) != n:
                raise InstanceError(f"worker {w.id}: expected {n} times, got {len(w.times)}")
            if any(not 0 <= i < n for i in w.infeasible):
                raise InstanceError(f"worker {w.id} references unknown task")
            fits = False
            for i, t in enumerate(w.times):
                if i in w.infeasible:
                    continue
                if t is None or t < 0:
                    raise InstanceError(f"worker {w.id}: bad time for task {i + 1}")
                fits = fits or t <= C
            if not fits:
                raise InfeasibleInstanceError(
                    f"worker {w.id} has no feasible task within the cycle time")

    def _topological_order(self):
        n = self.task_count
        indeg = [0] * n
        succ = [[] for _ in range(n)]
        for i, j in self.precedence:
            succ[i].append(j)
            indeg[j] += 1
        stack = [i for i in range(n - 1, -1, -1) if indeg[i] == 0]
        order = []
        while stack:
            i = stack.pop()
            order.append(i)
            for j in reversed(succ[i]):
                indeg[j] -= 1
                if indeg[j] == 0:
                    stack.append(j)
        return order if len(order) == n else None

    @property
    def task_count(self) -> int:
        return len(self.times)

    @cached_property
    def topological_order(self) -> tuple:
        return tuple(self._topological_order())

    @cached_property
    def successors(self) -> tuple:
        out = [set() for _ in range(self.task_count)]
        for i, j in self.precedence:
            out[i].add(j)
        return tuple(frozenset(s) for s in out)

    @cached_property
    def predecessors(self) -> tuple:
        out = [set() for _ in range(self.task_count)]
        for i, j in self.precedence:
            out[j].add(i)
        return tuple(frozenset(s) for s in out)

    @cached_property
    def closure(self) -> PrecedenceClosure:
        return close_and_sink(self)

    def with_workers(self, workers: Iterable[WorkerProfile]) -> "Instance":
        return Instance(self.times, self.precedence, tuple(workers), self.cycle_time, self.name)

    def worker_index(self, worker_id: str) -> int:
        for k, w in enumerate(self.workers):
            if w.id == worker_id:
                return k
        raise KeyError(worker_id)


def close_and_sink(instance: Instance) -> PrecedenceClosure:
    """Transitive closure of the precedence graph plus the artificial sink q."""
    n = instance.task_count
    succ = instance.successors
    reach = [0] * n
    for i in reversed(instance.topological_order):
        bits = 0
        for j in succ[i]:
            bits |= (1 << j) | reach[j]
        reach[i] = bits
    all_succ = tuple(frozenset(_bits(b)) for b in reach)
    sinks = frozenset(i for i in range(n) if not succ[i])
    return PrecedenceClosure(succ, all_succ, n, sinks)


def _bits(mask: int):
    k = 0
    while mask:
        if mask & 1:
            yield k
        mask >>= 1
        k += 1


def reverse_graph(instance: Instance) -> Instance:
    arcs = [(j, i) for i, j in instance.precedence]
    return Instance(instance.times, arcs, instance.workers, instance.cycle_time, instance.name)


def positional_weights(instance: Instance, closure: PrecedenceClosure = None,
                       worker: WorkerProfile = None) -> dict:
    """pw_i = t_i + sum of t_j over all successors j.

    With a worker, its times are used and only its feasible tasks are summed.
    """
    closure = closure or instance.closure
    if worker is None:
        t = instance.times
        return {i: t[i] + sum(t[j] for j in closure.all_successors[i])
                for i in range(instance.task_count)}
    out = {}
    for i in range(instance.task_count):
        if not worker.can_do(i):
            continue
        out[i] = worker.times[i] + sum(worker.times[j] for j in closure.all_successors[i]
                                       if worker.can_do(j))
    return out


def big_m(instance: Instance, worker: WorkerProfile) -> int:
    """L_w: total extra time of the worker over all its feasible tasks."""
    return sum(abs(worker.times[i] - instance.times[i])
               for i in range(instance.task_count) if worker.can_do(i))


@dataclass(frozen=True)
class Station:
    tasks: frozenset
    worker: Optional[int] = None  # index into Instance.workers

    def __post_init__(self):
        object.__setattr__(self, "tasks", frozenset(self.tasks))


def station_load(instance: Instance, station: Station) -> int:
    if station.worker is None:
        return sum(instance.times[i] for i in station.tasks)
    w = instance.workers[station.worker]
    return sum(w.times[i] for i in station.tasks)


@dataclass(frozen=True)
class LineSolution:
    stations: tuple
    fixed_prefix: int = 0
    fixed_suffix: int = 0

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))

    def __len__(self):
        return len(self.stations)

    @property
    def station_count(self) -> int:
        return len(self.stations)

    def station_of_task(self) -> dict:
        return {i: s for s, st in enumerate(self.stations) for i in st.tasks}

    def station_of_worker(self) -> dict:
        return {st.worker: s for s, st in enumerate(self.stations) if st.worker is not None}

    def released(self) -> "LineSolution":
        return LineSolution(self.stations)

    def mirrored(self) -> "LineSolution":
        """Station order reversed; pairs with reverse_graph."""
        return LineSolution(self.stations[::-1], self.fixed_suffix, self.fixed_prefix)


def idle(instance: Instance, solution: LineSolution, station: int) -> int:
    return instance.cycle_time - station_load(instance, solution.stations[station])


def violations(instance: Instance, solution: LineSolution) -> list:
    """All broken LineSolution invariants, as readable strings naming the rule."""
    out = []
    n = instance.task_count
    where = {}
    for s, st in enumerate(solution.stations):
        if not st.tasks:
            out.append(f"station {s + 1} is empty")
        for i in st.tasks:
            if not 0 <= i < n:
                out.append(f"station {s + 1} holds unknown task {i + 1}")
            elif i in where:
                out.append(f"task {i + 1} assigned twice (c2)")
            else:
                where[i] = s
    for i in range(n):
        if i not in where:
            out.append(f"task {i + 1} unassigned (c2)")
    for i, j in instance.precedence:
        if i in where and j in where and where[i] > where[j]:
            out.append(f"precedence {i + 1}->{j + 1} violated: task {i + 1} at station "
                       f"{where[i] + 1}, task {j + 1} at station {where[j] + 1} (c5)")
    seen = set()
    for s, st in enumerate(solution.stations):
        w = st.worker
        if w is not None:
            if not 0 <= w < len(instance.workers):
                out.append(f"station {s + 1} holds unknown worker")
                continue
            if w in seen:
                out.append(f"worker {instance.workers[w].id} placed twice (c3)")
            seen.add(w)
            bad = sorted(st.tasks & instance.workers[w].infeasible)
            for i in bad:
                out.append(f"worker {instance.workers[w].id} cannot execute task {i + 1} (c8)")
            if bad:
                continue
        if all(0 <= i < n for i in st.tasks):
            load = station_load(instance, st)
            if load > instance.cycle_time:
                rule = "c6" if w is None else "c7"
                out.append(f"station {s + 1} load {load} exceeds cycle time "
                           f"{instance.cycle_time} ({rule})")
    for k, w in enumerate(instance.workers):
        if k not in seen:
            out.append(f"worker {w.id} not placed (c3)")
    return out


def validate(instance: Instance, solution: LineSolution) -> None:
    problems = violations(instance, solution)
    if problems:
        raise InfeasibleError("; ".join(problems))


def is_feasible(instance: Instance, solution: LineSolution) -> bool:
    return not violations(instance, solution)


T1 = Instance(times=(400, 500, 300), precedence=((0, 2), (1, 2)), cycle_time=1000, name="T1")


def seed_tasks(instance: Instance) -> dict:
    """Match every worker to a distinct task it can execute within the cycle time.

    Returns task -> worker index; raises InfeasibleError when no such matching
    exists, in which case no feasible line exists either.
    """
    W = len(instance.workers)
    if not W:
        return {}
    rows, cols = [], []
    for k, w in enumerate(instance.workers):
        for i in range(instance.task_count):
            if w.can_do(i) and w.times[i] <= instance.cycle_time:
                rows.append(k)
                cols.append(i)
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(W, instance.task_count))
    match = maximum_bipartite_matching(graph, perm_type="column")
    if (match < 0).any():
        raise InfeasibleError("workers cannot all receive a distinct feasible task")
    return {int(i): k for k, i in enumerate(match)}
