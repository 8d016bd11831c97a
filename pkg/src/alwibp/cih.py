"""Constructive insertion heuristic (CIH) and its four variants.

Starting from a SALBP-1 line that ignores the disabled workers, workers are
inserted one at a time. Every (worker, station) pair of the current segment
is tried by keeping the line before the station and rebuilding from it with
the worker there; the best resulting line is kept and the segment moves on.

Forward insertion freezes the prefix up to the last placed worker. Backward
insertion freezes the suffix from the last placed worker on; the rebuild only
redistributes the tasks of the stations between the candidate station and the
frozen suffix, inserting extra stations before the suffix when needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .instance import (Instance, InfeasibleError, LineSolution, Station, reverse_graph, seed_tasks,
                       validate)
from .salbp import ALL_RULES, LineBuilder, PlacementError, best_salbp1, solution_key

FORWARD = "forward"
BACKWARD = "backward"
NORMAL = "normal"
REVERSED = "reversed"


@dataclass(frozen=True)
class CihVariant:
    station_direction: str = FORWARD
    graph_form: str = NORMAL

    def __post_init__(self):
        if self.station_direction not in (FORWARD, BACKWARD):
            raise ValueError(f"bad station direction {self.station_direction!r}")
        if self.graph_form not in (NORMAL, REVERSED):
            raise ValueError(f"bad graph form {self.graph_form!r}")

    def __str__(self):
        return f"{self.station_direction}/{self.graph_form}"


VARIANTS = tuple(CihVariant(d, g) for d in (FORWARD, BACKWARD) for g in (NORMAL, REVERSED))


@dataclass(frozen=True)
class Segment:
    first_station: int  # 1-based, inclusive
    last_station: int

    def __post_init__(self):
        if self.first_station < 1 or self.last_station < self.first_station:
            raise ValueError(f"empty segment {self.first_station}..{self.last_station}")

    def __iter__(self):
        return iter(range(self.first_station, self.last_station + 1))

    def __len__(self):
        return self.last_station - self.first_station + 1


def initial_segment(m_c: int, w_a: int, direction: str = FORWARD) -> Segment:
    if m_c < 1 or w_a < 1:
        raise ValueError("need at least one station and one worker")
    if w_a == 1:
        return Segment(1, m_c)
    if direction == FORWARD:
        return Segment(1, math.ceil(m_c / w_a))
    return Segment(math.ceil(m_c / w_a), m_c)


def next_segment(s_b: int, m_c: int, w_a: int, direction: str = FORWARD):
    """Segment after the last fixed station ``s_b``; None if nothing is left.

    Forward this is s_b+1 .. s_b+1+floor((m_c-s_b)/w_a), clipped to m_c.
    Backward it is floor((s_b-1)/w_a) .. s_b-1, clipped below at 1.
    A single remaining worker sees the whole unfixed line.
    """
    if w_a < 1:
        raise ValueError("no workers left")
    if direction == FORWARD:
        if s_b >= m_c:
            return None
        if w_a == 1:
            return Segment(s_b + 1, m_c)
        return Segment(s_b + 1, min(m_c, s_b + 1 + (m_c - s_b) // w_a))
    if s_b <= 1:
        return None
    if w_a == 1:
        return Segment(1, s_b - 1)
    return Segment(max(1, (s_b - 1) // w_a), s_b - 1)


def tiebreak_station(solution: LineSolution, variant: CihVariant = None) -> int:
    if variant is not None and variant.station_direction == BACKWARD:
        return len(solution) - solution.fixed_suffix - 1
    return len(solution) - 1


def compare_solutions(instance: Instance, a: LineSolution, b: LineSolution,
                      variant: CihVariant = None) -> int:
    """-1 if ``a`` is strictly better, 1 if ``b`` is, 0 on a full tie."""
    ka = solution_key(instance, a.stations, tiebreak_station(a, variant))
    kb = solution_key(instance, b.stations, tiebreak_station(b, variant))
    return (ka > kb) - (ka < kb)


@dataclass
class CihResult:
    solution: LineSolution
    variant: CihVariant
    reference_stations: int
    calls: list = field(default_factory=list)  # (worker,station) trials per iteration
    fallback: bool = False

    @property
    def stations(self) -> int:
        return len(self.solution)


def salbp_reference(instance: Instance, mode: str = "auto", rules=ALL_RULES,
                    oracle_threshold: int = 12) -> LineSolution:
    """SALBP-1 line used as the CIH starting point.

    ``heuristic``: best priority-rule build; ``oracle``: exact optimum;
    ``auto``: exact when the instance has at most ``oracle_threshold`` tasks.
    """
    bare = instance.with_workers(()) if instance.workers else instance
    if mode not in ("auto", "heuristic", "oracle"):
        raise ValueError(f"unknown reference mode {mode!r}")
    best = best_salbp1(bare, rules)
    if mode == "oracle" or (mode == "auto" and instance.task_count <= oracle_threshold):
        from .oracle import exact_salbp1
        res = exact_salbp1(bare)
        if res.solution is not None and len(res.solution) < len(best):
            best = res.solution
    return best


class _Insertion:
    def __init__(self, instance: Instance, direction: str, rules):
        self.inst = instance
        self.direction = direction
        self.builders = [LineBuilder(instance, r) for r in rules]

    def rebuild(self, prefix, worker, tasks=None, suffix=()):
        best = None
        for b in self.builders:
            try:
                stations = b.build(prefix, worker, tasks)
            except PlacementError:
                continue
            key = solution_key(self.inst, stations)
            if best is None or key < best[0]:
                best = (key, stations)
        if best is None:
            raise PlacementError(worker)
        return best[1] + list(suffix)

    def candidate(self, stations, worker, s):
        """Line with ``worker`` at 1-based station ``s`` plus its sort key."""
        prefix = stations[:s - 1]
        if self.direction == FORWARD:
            new = self.rebuild(prefix, worker)
            return new, solution_key(self.inst, new)
        end = _frozen_start(stations)
        if s > end:
            raise PlacementError(worker)
        region = frozenset().union(*(st.tasks for st in stations[s - 1:end]))
        suffix = stations[end:]
        new = self.rebuild(prefix, worker, region, suffix)
        return new, solution_key(self.inst, new, len(new) - len(suffix) - 1)

    def run(self, reference: LineSolution):
        inst = self.inst
        stations = list(reference.stations)
        pending = list(range(len(inst.workers)))
        m_c = len(stations)
        seg = initial_segment(m_c, len(pending), self.direction) if pending else None
        calls = []
        fallback = False
        while pending:
            trials = [(w, s) for w in pending for s in (seg or ())]
            calls.append(len(trials))
            best = self._select(stations, trials)
            if best is None:
                wider = [(w, s) for w in pending for s in self._unfixed(stations)
                         if s not in set(seg or ())]
                best = self._select(stations, wider)
            if best is None:
                fallback = True
                w = pending[0]
                try:
                    new = _fallback_insert(inst, stations, w, self.direction)
                except InfeasibleError:
                    return self.rescue(), calls, True
                best = (new, w)
            stations, w = best
            pending.remove(w)
            m_c = len(stations)
            if pending:
                if self.direction == FORWARD:
                    s_b = _frozen_end(stations)
                else:
                    s_b = _frozen_start(stations) + 1
                seg = next_segment(s_b, m_c, len(pending), self.direction)
        return stations, calls, fallback

    def rescue(self):
        """Rebuild the whole line around one matched seed task per worker."""
        seeds = seed_tasks(self.inst)
        best = None
        for b in self.builders:
            stations = b.build_reserved(seeds)
            key = solution_key(self.inst, stations)
            if best is None or key < best[0]:
                best = (key, stations)
        return best[1]

    def _unfixed(self, stations):
        if self.direction == FORWARD:
            return range(_frozen_end(stations) + 1, len(stations) + 1)
        return range(1, _frozen_start(stations) + 1)

    def _select(self, stations, trials):
        best = None
        for w, s in trials:
            try:
                new, key = self.candidate(stations, w, s)
            except PlacementError:
                continue
            if best is None or key < best[0]:
                best = (key, new, w)
        if best is None:
            return None
        return best[1], best[2]


def _frozen_end(stations) -> int:
    """1-based index of the last worker station (0 if none)."""
    last = 0
    for k, st in enumerate(stations, start=1):
        if st.worker is not None:
            last = k
    return last


def _frozen_start(stations) -> int:
    """Number of stations before the first worker station."""
    for k, st in enumerate(stations):
        if st.worker is not None:
            return k
    return len(stations)


def _fallback_insert(instance, stations, worker, direction):
    """Place a worker that no segment station could host.

    Forward: move a successor-closed group of the worker's feasible tasks
    into a new last station. Backward mirrors this at the front. As a last
    resort, split one conventional station around a single feasible task.
    """
    if direction == BACKWARD:
        mirrored = _fallback_insert(reverse_graph(instance), stations[::-1], worker, FORWARD)
        return mirrored[::-1]
    w = instance.workers[worker]
    C = instance.cycle_time
    succ = instance.successors
    home = {i: k for k, st in enumerate(stations) if st.worker is None for i in st.tasks}
    moved = set()
    cap = C
    while True:
        cands = [i for i in home if i not in moved and w.can_do(i) and w.times[i] <= cap
                 and succ[i] <= moved]
        if not cands:
            break
        i = min(cands, key=lambda i: (-home[i], i))
        moved.add(i)
        cap -= w.times[i]
    if moved:
        kept = [Station(st.tasks - moved, st.worker) for st in stations]
        kept = [st for st in kept if st.tasks]
        return kept + [Station(frozenset(moved), worker)]
    closure = instance.closure.all_successors
    for k in range(len(stations) - 1, -1, -1):
        st = stations[k]
        if st.worker is not None:
            continue
        for i in sorted(st.tasks):
            if w.can_do(i) and w.times[i] <= C:
                after = st.tasks & closure[i]
                before = st.tasks - after - {i}
                parts = [Station(before), Station(frozenset([i]), worker), Station(after)]
                parts = [p for p in parts if p.tasks]
                return list(stations[:k]) + parts + list(stations[k + 1:])
    raise InfeasibleError(f"worker {w.id} cannot be integrated into the line")


def run_cih(instance: Instance, reference: LineSolution = None,
            variant: CihVariant = CihVariant(), rules=ALL_RULES,
            reference_mode: str = "auto") -> CihResult:
    """One CIH variant. ``reference`` is a SALBP-1 line for the instance in
    the variant's graph form (reversed instances take a reversed-graph line)."""
    work = reverse_graph(instance) if variant.graph_form == REVERSED else instance
    if reference is None:
        reference = salbp_reference(work, reference_mode, rules)
    validate(work.with_workers(()), reference)
    stations, calls, fallback = _Insertion(work, variant.station_direction, rules).run(reference)
    solution = LineSolution(tuple(stations))
    if variant.graph_form == REVERSED:
        solution = solution.mirrored().released()
    validate(instance, solution)
    return CihResult(solution, variant, len(reference), calls, fallback)


def run_best_of_four(instance: Instance, rules=ALL_RULES, reference_mode: str = "auto",
                     variants=VARIANTS) -> CihResult:
    """Run every variant and keep the best line (forward tie-break)."""
    refs = {}
    best = None
    for variant in variants:
        if variant.graph_form not in refs:
            work = reverse_graph(instance) if variant.graph_form == REVERSED else instance
            refs[variant.graph_form] = salbp_reference(work, reference_mode, rules)
        res = run_cih(instance, refs[variant.graph_form], variant, rules)
        if best is None or compare_solutions(instance, res.solution, best.solution) < 0:
            best = res
    return best
