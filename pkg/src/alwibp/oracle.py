"""Exact reference solvers for tiny instances.

A memoized search over (assigned task set, placed worker set). Each step opens
one station, conventional or hosting an unplaced worker, and chooses a
non-empty precedence-feasible load for it. Conventional stations are
restricted to maximal loads once every worker is placed, which is the
classical SALBP-1 dominance rule; before that all loads are enumerated
because a worker placed later may need a task a maximal load would take.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .instance import Instance, LineSolution, Station

DEFAULT_NODE_LIMIT = 10_000_000
DEFAULT_TIME_LIMIT = 60.0


@dataclass
class OracleResult:
    stations: Optional[int]
    solution: Optional[LineSolution] = None
    idle: Optional[int] = None  # total idle of worker stations (smin only)
    nodes: int = 0
    proven: bool = False

    @property
    def feasible(self) -> bool:
        return self.stations is not None

    @property
    def pair(self):
        return (self.stations, self.idle)


class _LimitReached(Exception):
    pass


_INF = float("inf")


class _Search:
    def __init__(self, instance: Instance, smin: bool, use_workers: bool,
                 node_limit: int, time_limit: float):
        self.inst = instance
        self.n = instance.task_count
        self.C = instance.cycle_time
        self.smin = smin
        self.order = instance.topological_order
        self.pred_mask = [0] * self.n
        for i, j in instance.precedence:
            self.pred_mask[j] |= 1 << i
        self.workers = instance.workers if use_workers else ()
        self.full = (1 << self.n) - 1
        self.all_workers = (1 << len(self.workers)) - 1
        self.node_limit = node_limit
        self.deadline = time.monotonic() + time_limit
        self.nodes = 0
        self.memo = {}

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.node_limit:
            raise _LimitReached
        if (self.nodes & 1023) == 0 and time.monotonic() > self.deadline:
            raise _LimitReached

    def loads(self, assigned, times, bad, maximal):
        C = self.C
        pm = self.pred_mask
        rem = [i for i in self.order if not (assigned >> i) & 1 and not (bad >> i) & 1]
        out = []

        def rec(start, T, load):
            done = assigned | T
            if T:
                if not maximal or not self._extensible(rem, done, C - load, times):
                    out.append((T, load))
                    self._tick()
            for k in range(start, len(rem)):
                i = rem[k]
                if (T >> i) & 1 or pm[i] & ~done:
                    continue
                t = times[i]
                if load + t <= C:
                    rec(k + 1, T | (1 << i), load + t)

        rec(0, 0, 0)
        return out

    def _extensible(self, rem, done, cap, times):
        pm = self.pred_mask
        for i in rem:
            if not (done >> i) & 1 and not pm[i] & ~done and times[i] <= cap:
                return True
        return False

    def value(self, assigned, placed):
        key = (assigned, placed)
        hit = self.memo.get(key)
        if hit is not None:
            return hit[0]
        if assigned == self.full:
            v = (0, 0) if placed == self.all_workers else (_INF, _INF)
            self.memo[key] = (v, None)
            return v
        left_tasks = bin(self.full & ~assigned).count("1")
        left_workers = bin(self.all_workers & ~placed).count("1")
        best = (_INF, _INF)
        choice = None
        if left_tasks >= left_workers:
            kinds = [None] + [k for k in range(len(self.workers)) if not (placed >> k) & 1]
            for kind in kinds:
                if kind is None:
                    if left_tasks == left_workers and left_workers:
                        continue
                    times, bad = self.inst.times, 0
                    maximal = left_workers == 0
                    nplaced = placed
                else:
                    w = self.workers[kind]
                    times = w.times
                    bad = sum(1 << i for i in w.infeasible)
                    maximal = False
                    nplaced = placed | (1 << kind)
                for T, load in self.loads(assigned, times, bad, maximal):
                    sub = self.value(assigned | T, nplaced)
                    if sub[0] == _INF:
                        continue
                    extra = self.C - load if (kind is not None and self.smin) else 0
                    cand = (sub[0] + 1, sub[1] + extra)
                    if cand < best:
                        best = cand
                        choice = (T, kind, nplaced)
        self.memo[key] = (best, choice)
        return best

    def solution(self):
        assigned, placed = 0, 0
        stations = []
        while assigned != self.full:
            _, choice = self.memo[(assigned, placed)]
            T, kind, placed = choice
            stations.append(Station(frozenset(i for i in range(self.n) if (T >> i) & 1), kind))
            assigned |= T
        return LineSolution(tuple(stations))


def _solve(instance, smin, use_workers, node_limit, time_limit, fallback):
    search = _Search(instance, smin, use_workers, node_limit, time_limit)
    try:
        best = search.value(0, 0)
    except _LimitReached:
        sol = fallback()
        if sol is None:
            return OracleResult(None, nodes=search.nodes, proven=False)
        return OracleResult(len(sol), sol, _worker_idle(instance, sol) if smin else None,
                            search.nodes, proven=False)
    if best[0] == _INF:
        return OracleResult(None, nodes=search.nodes, proven=True)
    sol = search.solution()
    return OracleResult(best[0], sol, best[1] if smin else None, search.nodes, proven=True)


def _worker_idle(instance, solution):
    from .instance import station_load
    return sum(instance.cycle_time - station_load(instance, st)
               for st in solution.stations if st.worker is not None)


def exact_salbp1(instance: Instance, node_limit=DEFAULT_NODE_LIMIT,
                 time_limit=DEFAULT_TIME_LIMIT) -> OracleResult:
    """Optimal SALBP-1 station count, ignoring any workers."""
    def fallback():
        from .salbp import best_salbp1
        return best_salbp1(instance)
    bare = instance.with_workers(()) if instance.workers else instance
    return _solve(bare, False, False, node_limit, time_limit, fallback)


def exact_alwibp1(instance: Instance, node_limit=DEFAULT_NODE_LIMIT,
                  time_limit=DEFAULT_TIME_LIMIT) -> OracleResult:
    """Optimal station count with every worker placed on a non-empty station."""
    def fallback():
        from .cih import run_best_of_four
        try:
            return run_best_of_four(instance).solution
        except Exception:
            return None
    return _solve(instance, False, True, node_limit, time_limit, fallback)


def exact_smin(instance: Instance, node_limit=DEFAULT_NODE_LIMIT,
               time_limit=DEFAULT_TIME_LIMIT) -> OracleResult:
    """Lexicographic optimum of (station count, total idle of worker stations)."""
    def fallback():
        from .cih import run_best_of_four
        try:
            return run_best_of_four(instance).solution
        except Exception:
            return None
    return _solve(instance, True, True, node_limit, time_limit, fallback)
