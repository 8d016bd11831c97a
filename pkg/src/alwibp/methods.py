"""Solution methods behind the command line and the experiment scripts."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .cih import BACKWARD, FORWARD, VARIANTS, run_best_of_four, salbp_reference
from .instance import Instance, LineSolution
from .mip import LS1, LS2, SMIN, STATIONS
from .oracle import exact_alwibp1, exact_salbp1, exact_smin

METHODS = ("cih", "cih-ls1", "cih-ls2", "oracle")
VARIANT_CHOICES = ("forward", "backward", "auto")
OBJECTIVES = (STATIONS, SMIN)
DEFAULT_ORACLE_LIMIT = 60.0
DEFAULT_LS_LIMIT = 60.0


@dataclass
class Outcome:
    solution: LineSolution
    method: str
    objective: str
    status: str  # "heuristic", "optimal" or "limit"
    seconds: float
    detail: str = ""

    @property
    def stations(self) -> int:
        return len(self.solution)


def variants_for(choice: str):
    """``forward``/``backward`` keep both graph forms of that insertion direction."""
    if choice == "auto":
        return VARIANTS
    direction = {"forward": FORWARD, "backward": BACKWARD}[choice]
    return tuple(v for v in VARIANTS if v.station_direction == direction)


def solve(instance: Instance, method: str = "cih", variant: str = "auto",
          objective: str = STATIONS, time_limit: Optional[float] = None,
          solver: str = "highs") -> Outcome:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    start = time.monotonic()
    if method == "oracle":
        limit = DEFAULT_ORACLE_LIMIT if time_limit is None else time_limit
        if not instance.workers:
            res = exact_salbp1(instance, time_limit=limit)
        elif objective == SMIN:
            res = exact_smin(instance, time_limit=limit)
        else:
            res = exact_alwibp1(instance, time_limit=limit)
        if res.solution is None:
            from .instance import InfeasibleError
            raise InfeasibleError("no feasible line exists" if res.proven
                                  else "search limit reached without a line")
        return Outcome(res.solution, method, objective, "optimal" if res.proven else "limit",
                       time.monotonic() - start, f"nodes={res.nodes}")
    if not instance.workers:
        line = salbp_reference(instance)
        return Outcome(line, method, objective, "heuristic", time.monotonic() - start)
    cih = run_best_of_four(instance, variants=variants_for(variant))
    if method == "cih":
        return Outcome(cih.solution, method, objective, "heuristic",
                       time.monotonic() - start, f"variant={cih.variant}")
    from .mipsolve import improve_with_ls
    mode = LS1 if method == "cih-ls1" else LS2
    limit = DEFAULT_LS_LIMIT if time_limit is None else time_limit
    ls = improve_with_ls(instance, cih.solution, mode, objective, solver, limit)
    status = "optimal" if ls.status == "optimal" else "heuristic"
    return Outcome(ls.solution, method, objective, status, time.monotonic() - start,
                   f"variant={cih.variant} ls={ls.status} improved={int(ls.improved)}")


def salbp_best_known(instance: Instance, oracle_max_tasks: int = 12,
                     time_limit: float = DEFAULT_ORACLE_LIMIT):
    """(station count, source) of the SALBP-1 reference used for m_up."""
    bare = instance.with_workers(()) if instance.workers else instance
    heur = salbp_reference(bare, "heuristic")
    if bare.task_count <= oracle_max_tasks:
        res = exact_salbp1(bare, time_limit=time_limit)
        if res.proven and res.stations is not None:
            return res.stations, "oracle"
    return len(heur), "heuristic"
