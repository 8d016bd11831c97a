"""Shared test utilities: an independent brute-force solver and hypothesis strategies.

The brute-force solver knows nothing about the package's search code. It
enumerates every task-to-station map for increasing station counts, then every
injective worker placement, and checks the line rules directly.
"""

from __future__ import annotations

import itertools

from hypothesis import strategies as st

from alwibp.instance import Instance, LineSolution, Station, WorkerProfile

# acceptance tests append (criterion number, passed, detail); conftest prints them
ACCEPTANCE = []

T1_TIMES = (400, 500, 300)
T1_ARCS = ((0, 2), (1, 2))


def t1(workers=()):
    return Instance(T1_TIMES, T1_ARCS, tuple(workers), 1000, "T1")


def worker(wid, times):
    return WorkerProfile(wid, tuple(None if t is None or t < 0 else t for t in times))


def _line_ok(inst, assign, placement):
    C = inst.cycle_time
    m = len(placement)
    for s in range(m):
        tasks = [i for i, a in enumerate(assign) if a == s]
        k = placement[s]
        if k is None:
            if sum(inst.times[i] for i in tasks) > C:
                return False
        else:
            w = inst.workers[k]
            if any(w.times[i] is None for i in tasks):
                return False
            if sum(w.times[i] for i in tasks) > C:
                return False
    return True


def brute_force(inst: Instance, smin: bool = False, max_m: int = None):
    """(m*, idle*) by plain enumeration; idle* is None unless ``smin``.

    Returns (None, None) when no line exists within ``max_m`` stations.
    """
    n = inst.task_count
    W = len(inst.workers)
    max_m = max_m or n
    for m in range(1, max_m + 1):
        best_idle = None
        found = False
        for assign in itertools.product(range(m), repeat=n):
            if len(set(assign)) != m:
                continue
            if any(assign[i] > assign[j] for i, j in inst.precedence):
                continue
            for perm in itertools.permutations(range(m), W):
                placement = [None] * m
                for k, s in enumerate(perm):
                    placement[s] = k
                if not _line_ok(inst, assign, placement):
                    continue
                found = True
                if not smin:
                    break
                idle = 0
                for k, s in enumerate(perm):
                    w = inst.workers[k]
                    idle += inst.cycle_time - sum(w.times[i] for i in range(n) if assign[i] == s)
                if best_idle is None or idle < best_idle:
                    best_idle = idle
            if found and not smin:
                break
        if found:
            return m, best_idle
    return None, None


def has_line(inst: Instance) -> bool:
    """True if some feasible line exists (workers may compete for the same tasks)."""
    from alwibp.oracle import exact_alwibp1
    return exact_alwibp1(inst).stations is not None


def line(*stations):
    """Build a LineSolution from (tasks, worker) pairs with 1-based task ids."""
    out = []
    for item in stations:
        tasks, w = item if isinstance(item, tuple) else (item, None)
        out.append(Station(frozenset(i - 1 for i in tasks), w))
    return LineSolution(tuple(out))


# -- hypothesis strategies ------------------------------------------------------

@st.composite
def dags(draw, min_n=1, max_n=8):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    arcs = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    perm = draw(st.permutations(range(n)))
    return n, [(perm[i], perm[j]) for i, j in arcs]


@st.composite
def instances(draw, min_n=1, max_n=7, max_workers=2, cycle=1000, generator_like=True):
    """Small valid instances; worker times are >= t_i when ``generator_like``."""
    n, arcs = draw(dags(min_n, max_n))
    times = draw(st.lists(st.integers(1, cycle), min_size=n, max_size=n))
    W = draw(st.integers(0, min(max_workers, n)))
    workers = []
    for k in range(W):
        row = []
        for i in range(n):
            if draw(st.booleans()) and draw(st.integers(0, 4)) == 0:
                row.append(None)
            elif generator_like:
                row.append(draw(st.integers(times[i], 5 * times[i])))
            else:
                row.append(draw(st.integers(0, 2 * cycle)))
        if not any(t is not None and t <= cycle for t in row):
            cheap = draw(st.integers(0, n - 1))
            row[cheap] = times[cheap]
        workers.append(WorkerProfile(f"w{k + 1}", tuple(row)))
    return Instance(tuple(times), arcs, tuple(workers), cycle, "hyp")
