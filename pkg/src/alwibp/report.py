"""Per-instance metrics and the aggregated result tables.

Metrics of a line with m stations against a SALBP-1 reference of m0 stations:

* ``m_up`` = m - m0, and ``m_up_pct`` = 100 m_up / m0;
* ``tau``: mean idle time of the stations hosting disabled workers;
* ``eta_pct``: mean number of tasks at worker stations over the mean number
  at ordinary stations, in percent;
* ``beta_pct`` = 100 |W| / m;
* ``theta``: no extra station was needed;
* ``ties``: the heuristic matched the exact model's station count.
"""

from __future__ import annotations

import csv
import io
import logging
import statistics
from dataclasses import asdict, dataclass
from typing import Optional

from .instance import Instance, LineSolution, station_load, validate

log = logging.getLogger(__name__)

COLUMNS = ("W", "Var", "Inc", "Delta", "t_s", "m_up_mean", "m_up_sd", "m_up_pct_mean",
           "m_up_pct_sd", "tau", "tau_smin", "eta_pct", "eta_smin_pct", "beta_pct_mean",
           "beta_pct_sd", "theta", "ties")


@dataclass
class Record:
    instance: str
    method: str
    m: int
    salbp_m: int
    workers: int
    variability: str = ""
    incompat: float = 0.0
    status: str = "heuristic"  # "optimal" when proven
    seconds: float = 0.0
    m_up: int = 0
    m_up_pct: float = 0.0
    tau: Optional[float] = None
    eta_pct: Optional[float] = None
    beta_pct: float = 0.0
    theta: bool = False
    model_m: Optional[int] = None  # station count of the exact model, if known
    tau_smin: Optional[float] = None
    eta_smin_pct: Optional[float] = None
    salbp_source: str = ""  # "oracle" (proven) or "heuristic"

    @property
    def ties(self) -> Optional[bool]:
        return None if self.model_m is None else self.m == self.model_m


def worker_idle_times(instance: Instance, solution: LineSolution) -> list:
    C = instance.cycle_time
    return [C - station_load(instance, st) for st in solution.stations if st.worker is not None]


def eta_pct(solution: LineSolution) -> Optional[float]:
    worker = [len(st.tasks) for st in solution.stations if st.worker is not None]
    ordinary = [len(st.tasks) for st in solution.stations if st.worker is None]
    if not worker or not ordinary:
        return None
    return 100.0 * statistics.fmean(worker) / statistics.fmean(ordinary)


def compute_metrics(instance: Instance, solution: LineSolution, salbp_m: int,
                    method: str = "", status: str = "heuristic", seconds: float = 0.0,
                    variability: str = "", incompat: float = 0.0,
                    model_m: int = None) -> Record:
    if salbp_m < 1:
        raise ValueError("salbp_m must be >= 1")
    validate(instance, solution)
    m = len(solution)
    m_up = m - salbp_m
    idle = worker_idle_times(instance, solution)
    return Record(
        instance=instance.name, method=method, m=m, salbp_m=salbp_m,
        workers=len(instance.workers), variability=variability, incompat=incompat,
        status=status, seconds=seconds, m_up=m_up, m_up_pct=100.0 * m_up / salbp_m,
        tau=statistics.fmean(idle) if idle else None, eta_pct=eta_pct(solution),
        beta_pct=100.0 * len(instance.workers) / m, theta=m_up == 0, model_m=model_m)


def attach_smin(record: Record, instance: Instance, smin_solution: LineSolution) -> Record:
    """Fill the S_min columns from a line solved with the idle-time objective."""
    idle = worker_idle_times(instance, smin_solution)
    record.tau_smin = statistics.fmean(idle) if idle else None
    record.eta_smin_pct = eta_pct(smin_solution)
    return record


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return statistics.fmean(xs) if xs else None


def _sd(xs):
    xs = [x for x in xs if x is not None]
    if not xs:
        return None
    return statistics.stdev(xs) if len(xs) > 1 else 0.0


def cell_key(record: Record):
    return (record.workers, record.variability, record.incompat)


def aggregate(records, cells=None) -> list:
    """One row per (|W|, variability, incompat) cell, as dicts keyed by COLUMNS.

    ``cells`` fixes the row order; cells without records are omitted with a
    warning. By default the cells present in ``records`` are used, sorted.
    """
    groups = {}
    for rec in records:
        groups.setdefault(cell_key(rec), []).append(rec)
    if cells is None:
        cells = sorted(groups, key=lambda k: (k[0], k[1], k[2]))
    rows = []
    for key in cells:
        recs = groups.get(key)
        if not recs:
            log.warning("no records for cell %s; row omitted", key)
            continue
        W, var, inc = key
        rows.append({
            "W": W, "Var": var, "Inc": inc,
            "Delta": sum(r.status == "optimal" for r in recs),
            "t_s": _mean(r.seconds for r in recs),
            "m_up_mean": _mean(r.m_up for r in recs),
            "m_up_sd": _sd([r.m_up for r in recs]),
            "m_up_pct_mean": _mean(r.m_up_pct for r in recs),
            "m_up_pct_sd": _sd([r.m_up_pct for r in recs]),
            "tau": _mean(r.tau for r in recs),
            "tau_smin": _mean(r.tau_smin for r in recs),
            "eta_pct": _mean(r.eta_pct for r in recs),
            "eta_smin_pct": _mean(r.eta_smin_pct for r in recs),
            "beta_pct_mean": _mean(r.beta_pct for r in recs),
            "beta_pct_sd": _sd([r.beta_pct for r in recs]),
            "theta": sum(r.theta for r in recs),
            "ties": sum(bool(r.ties) for r in recs),
        })
    return rows


_DIGITS = {"Inc": 2, "t_s": 2, "m_up_mean": 2, "m_up_sd": 2, "tau": 1, "tau_smin": 1}


def _fmt(col, val):
    if val is None:
        return ""
    if isinstance(val, bool):
        return str(int(val))
    if isinstance(val, int):
        return str(val)
    if isinstance(val, float):
        return f"{val:.{_DIGITS.get(col, 1)}f}"
    return str(val)


def to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(c, row[c]) for c in COLUMNS])
    return buf.getvalue()


def to_text(rows) -> str:
    cells = [list(COLUMNS)] + [[_fmt(c, row[c]) for c in COLUMNS] for row in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(COLUMNS))]
    out = []
    for r in cells:
        out.append("  ".join(v.rjust(w) for v, w in zip(r, widths)).rstrip())
    return "\n".join(out) + "\n"


RECORD_FIELDS = tuple(f for f in Record.__dataclass_fields__)


def _raw(val):
    if val is None:
        return ""
    if isinstance(val, bool):
        return str(int(val))
    return repr(val) if isinstance(val, float) else str(val)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_FIELDS + ("ties",))
    for rec in records:
        d = asdict(rec)
        writer.writerow([_raw(d[k]) for k in RECORD_FIELDS] + [_raw(rec.ties)])
    return buf.getvalue()


def records_from_csv(text: str) -> list:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        def opt(k, cast):
            return cast(row[k]) if row[k] != "" else None
        out.append(Record(
            instance=row["instance"], method=row["method"], m=int(row["m"]),
            salbp_m=int(row["salbp_m"]), workers=int(row["workers"]),
            variability=row["variability"], incompat=float(row["incompat"]),
            status=row["status"], seconds=float(row["seconds"]), m_up=int(row["m_up"]),
            m_up_pct=float(row["m_up_pct"]), tau=opt("tau", float),
            eta_pct=opt("eta_pct", float), beta_pct=float(row["beta_pct"]),
            theta=row["theta"] == "1", model_m=opt("model_m", int),
            tau_smin=opt("tau_smin", float), eta_smin_pct=opt("eta_smin_pct", float),
            salbp_source=row.get("salbp_source", "")))
    return out
