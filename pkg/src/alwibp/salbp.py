"""Station-oriented constructive SALBP-1 procedure with priority rules.

Stations are opened one at a time and filled with the highest-priority
available task that still fits; a new station opens when nothing fits.
The same routine rebuilds line suffixes inside the insertion heuristic,
optionally with a disabled worker occupying the first rebuilt station.
"""

from __future__ import annotations

from bisect import insort
from dataclasses import dataclass

from .instance import Instance, InfeasibleError, LineSolution, Station, positional_weights


class PlacementError(Exception):
    """The worker could not take any task at its station."""


@dataclass(frozen=True)
class PriorityRule:
    name: str
    descending: bool = True  # only meaningful for MaxTime

    def __str__(self):
        if self.name == "MaxTime" and not self.descending:
            return "MaxTime-asc"
        return self.name


MAX_TIME = PriorityRule("MaxTime")
MAX_TIME_ASC = PriorityRule("MaxTime", descending=False)
MAX_PW = PriorityRule("MaxPW")
MAX_IF = PriorityRule("MaxIF")
MAX_F = PriorityRule("MaxF")
ALL_RULES = (MAX_TIME, MAX_PW, MAX_IF, MAX_F)
RULES_BY_NAME = {str(r): r for r in ALL_RULES + (MAX_TIME_ASC,)}


def priority_keys(instance: Instance, rule: PriorityRule, closure=None, worker=None) -> list:
    """Numeric key per task; larger keys go first."""
    closure = closure or instance.closure
    n = instance.task_count
    if rule.name == "MaxTime":
        if worker is None:
            keys = list(instance.times)
        else:
            keys = [worker.times[i] if worker.can_do(i) else 0 for i in range(n)]
        if not rule.descending:
            keys = [-k for k in keys]
    elif rule.name == "MaxPW":
        pw = positional_weights(instance, closure, worker)
        keys = [pw.get(i, 0) for i in range(n)]
    elif rule.name == "MaxIF":
        keys = [len(closure.immediate_successors[i]) for i in range(n)]
    elif rule.name == "MaxF":
        keys = [len(closure.all_successors[i]) for i in range(n)]
    else:
        raise ValueError(f"unknown priority rule {rule.name!r}")
    return keys


def priority_order(instance: Instance, rule: PriorityRule, closure=None, worker=None) -> list:
    """Tasks sorted by descending key; ties by ascending task id.

    For a worker, its infeasible tasks are moved to the end.
    """
    keys = priority_keys(instance, rule, closure, worker)
    bad = worker.infeasible if worker is not None else frozenset()
    return sorted(range(instance.task_count), key=lambda i: (i in bad, -keys[i], i))


def _ranks(order):
    rank = [0] * len(order)
    for r, i in enumerate(order):
        rank[i] = r
    return rank


class LineBuilder:
    """Precomputed priority ranks for repeated rebuilds of one instance."""

    def __init__(self, instance: Instance, rule: PriorityRule):
        self.instance = instance
        self.rule = rule
        closure = instance.closure
        self.times = instance.times
        self.cycle = instance.cycle_time
        self.succ = [tuple(sorted(s)) for s in instance.successors]
        self.preds = [tuple(sorted(p)) for p in instance.predecessors]
        self.rank = _ranks(priority_order(instance, rule, closure))
        self.worker_rank = [_ranks(priority_order(instance, rule, closure, w))
                            for w in instance.workers]
        self.worker_times = [w.times for w in instance.workers]
        self.worker_bad = [w.infeasible for w in instance.workers]

    def build(self, prefix=(), worker=None, tasks=None) -> list:
        """Stations for ``tasks`` (default: everything outside ``prefix``).

        Returns ``prefix`` extended by the new stations. If ``worker`` is
        given it occupies the first new station; PlacementError is raised
        when it cannot start any available task there.
        """
        n = len(self.times)
        if tasks is None:
            done = set()
            for st in prefix:
                done |= st.tasks
            todo = [i for i in range(n) if i not in done]
        else:
            todo = list(tasks)
        in_todo = [False] * n
        for i in todo:
            in_todo[i] = True
        pred_left = [0] * n
        for i in todo:
            pred_left[i] = sum(1 for p in self.preds[i] if in_todo[p])
        rank = self.rank
        times = self.times
        succ = self.succ
        C = self.cycle
        avail = sorted((rank[i], i) for i in todo if pred_left[i] == 0)
        stations = list(prefix)
        remaining = len(todo)

        def release(i):
            for j in succ[i]:
                if in_todo[j]:
                    pred_left[j] -= 1
                    if pred_left[j] == 0:
                        insort(avail, (rank[j], j))

        if worker is not None and remaining:
            wt = self.worker_times[worker]
            bad = self.worker_bad[worker]
            wrank = self.worker_rank[worker]
            cap = C
            cur = []
            while True:
                best = None
                for r, i in avail:
                    if i in bad or wt[i] > cap:
                        continue
                    if best is None or wrank[i] < wrank[best]:
                        best = i
                if best is None:
                    break
                avail.remove((rank[best], best))
                cur.append(best)
                cap -= wt[best]
                remaining -= 1
                release(best)
            if not cur:
                raise PlacementError(worker)
            stations.append(Station(frozenset(cur), worker))
        elif worker is not None:
            raise PlacementError(worker)

        while remaining:
            cap = C
            cur = []
            while True:
                pick = -1
                for k, (r, i) in enumerate(avail):
                    if times[i] <= cap:
                        pick = k
                        break
                if pick < 0:
                    break
                r, i = avail.pop(pick)
                cur.append(i)
                cap -= times[i]
                remaining -= 1
                release(i)
            if not cur:
                raise InfeasibleError("no available task fits an empty station")
            stations.append(Station(frozenset(cur)))
        return stations


    def build_reserved(self, seeds: dict) -> list:
        """Full line where each worker starts its station with a reserved seed task.

        ``seeds`` maps task -> worker index. Conventional stations never take
        a seed; as soon as a seed becomes available its worker's station opens
        with it and is then filled by the worker's priority order.
        """
        n = len(self.times)
        rank, times, succ, C = self.rank, self.times, self.succ, self.cycle
        pred_left = [len(self.preds[i]) for i in range(n)]
        avail = sorted((rank[i], i) for i in range(n) if pred_left[i] == 0)
        stations = []
        remaining = n

        def release(i):
            for j in succ[i]:
                pred_left[j] -= 1
                if pred_left[j] == 0:
                    insort(avail, (rank[j], j))

        while remaining:
            ready = [i for _, i in avail if i in seeds]
            if ready:
                seed = min(ready)
                worker = seeds[seed]
                wt, bad, wrank = (self.worker_times[worker], self.worker_bad[worker],
                                  self.worker_rank[worker])
                avail.remove((rank[seed], seed))
                cur, cap = [seed], C - wt[seed]
                remaining -= 1
                release(seed)
                while True:
                    fits = [i for _, i in avail
                            if i not in seeds and i not in bad and wt[i] <= cap]
                    if not fits:
                        break
                    best = min(fits, key=wrank.__getitem__)
                    avail.remove((rank[best], best))
                    cur.append(best)
                    cap -= wt[best]
                    remaining -= 1
                    release(best)
                stations.append(Station(frozenset(cur), worker))
                continue
            cap, cur = C, []
            while True:
                pick = -1
                for k, (r, i) in enumerate(avail):
                    if times[i] <= cap and i not in seeds:
                        pick = k
                        break
                if pick < 0:
                    break
                r, i = avail.pop(pick)
                cur.append(i)
                cap -= times[i]
                remaining -= 1
                release(i)
            if not cur:
                raise InfeasibleError("no available task fits an empty station")
            stations.append(Station(frozenset(cur)))
        return stations


def solution_key(instance: Instance, stations, tiebreak_station=-1):
    """Sort key: fewer stations first, then more idle time at the tie-break station."""
    st = stations[tiebreak_station]
    if st.worker is None:
        load = sum(instance.times[i] for i in st.tasks)
    else:
        wt = instance.workers[st.worker].times
        load = sum(wt[i] for i in st.tasks)
    return (len(stations), load - instance.cycle_time)


def _prefix_problems(instance, prefix):
    where = {}
    out = []
    for s, st in enumerate(prefix):
        for i in st.tasks:
            where[i] = s
        if st.worker is None:
            load = sum(instance.times[i] for i in st.tasks)
        else:
            w = instance.workers[st.worker]
            if st.tasks & w.infeasible:
                out.append(f"worker {w.id} holds an infeasible task")
                continue
            load = sum(w.times[i] for i in st.tasks)
        if load > instance.cycle_time:
            out.append(f"station {s + 1} overloaded")
    for i, j in instance.precedence:
        if j in where and (i not in where or where[i] > where[j]):
            out.append(f"task {j + 1} placed before predecessor {i + 1}")
    return out


def build_salbp1(instance: Instance, rule: PriorityRule = MAX_PW, fixed_prefix=None,
                 worker=None, tasks=None, start_station=None) -> LineSolution:
    """Complete a line from a fixed prefix with one priority rule.

    ``worker`` (an index into ``instance.workers``) occupies the first rebuilt
    station, which is ``start_station`` if given. Raises PlacementError when
    the worker cannot execute any available task there.
    """
    prefix = tuple(fixed_prefix.stations) if isinstance(fixed_prefix, LineSolution) else \
        tuple(fixed_prefix or ())
    if start_station is not None and start_station != len(prefix):
        raise ValueError("start_station must directly follow the fixed prefix")
    problems = _prefix_problems(instance, prefix)
    if problems:
        raise InfeasibleError("infeasible prefix: " + "; ".join(problems))
    stations = LineBuilder(instance, rule).build(prefix, worker, tasks)
    return LineSolution(tuple(stations), fixed_prefix=len(prefix))


def best_salbp1(instance: Instance, rules=ALL_RULES) -> LineSolution:
    """Best line over several priority rules, ignoring the workers."""
    bare = instance.with_workers(()) if instance.workers else instance
    best = None
    for rule in rules:
        stations = LineBuilder(bare, rule).build()
        key = solution_key(bare, stations)
        if best is None or key < best[0]:
            best = (key, stations)
    return LineSolution(tuple(best[1]))
