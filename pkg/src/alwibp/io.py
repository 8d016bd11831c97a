"""Text formats: instance files, the .alb SALBP layout, and line solutions.

Instance file (1-based task ids, '#' starts a comment)::

    TASKS <n>
    <i> <t_i>                      # n lines
    PRECEDENCE <k>
    <i> <j>                        # k lines, arc i -> j
    CYCLE <C>
    WORKERS <w>
    <worker id> <t_w1> ... <t_wn>  # -1 marks an infeasible task

Solution file: one ``STATION <s> [WORKER <w>] TASKS <i1> <i2> ...`` per line.
"""

from __future__ import annotations

import os
import re

from .instance import Instance, InstanceError, LineSolution, Station, worker_from_times


class ParseError(InstanceError):
    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line


def _lines(text):
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield no, body.split()


def _int(tok, no):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected integer, got {tok!r}", no) from None


def parse_instance(text: str, name: str = "") -> Instance:
    rows = list(_lines(text))
    pos = 0
    times = None
    arcs = []
    cycle = None
    workers = []
    seen = set()

    def header_count(tokens, no):
        if len(tokens) != 2:
            raise ParseError(f"{tokens[0]} expects exactly one count", no)
        k = _int(tokens[1], no)
        if k < 0:
            raise ParseError("negative count", no)
        return k

    def take(k, what, no):
        nonlocal pos
        if pos + k > len(rows):
            raise ParseError(f"{what}: expected {k} lines, file ended", no)
        block = rows[pos:pos + k]
        pos += k
        return block

    while pos < len(rows):
        no, tokens = rows[pos]
        pos += 1
        key = tokens[0].upper()
        if key in seen:
            raise ParseError(f"duplicate {key} section", no)
        seen.add(key)
        if key == "TASKS":
            n = header_count(tokens, no)
            times = [None] * n
            for lno, tk in take(n, "TASKS", no):
                if len(tk) != 2:
                    raise ParseError("task line needs '<i> <t_i>'", lno)
                i, t = _int(tk[0], lno), _int(tk[1], lno)
                if not 1 <= i <= n:
                    raise ParseError(f"task id {i} out of range 1..{n}", lno)
                if times[i - 1] is not None:
                    raise ParseError(f"task {i} listed twice", lno)
                if t < 0:
                    raise ParseError(f"task {i} has negative time", lno)
                times[i - 1] = t
        elif key == "PRECEDENCE":
            k = header_count(tokens, no)
            for lno, tk in take(k, "PRECEDENCE", no):
                if len(tk) != 2:
                    raise ParseError("arc line needs '<i> <j>'", lno)
                arcs.append((_int(tk[0], lno), _int(tk[1], lno), lno))
        elif key == "CYCLE":
            cycle = header_count(tokens, no)
        elif key == "WORKERS":
            k = header_count(tokens, no)
            for lno, tk in take(k, "WORKERS", no):
                workers.append((tk[0], [_int(x, lno) for x in tk[1:]], lno))
        else:
            raise ParseError(f"unknown directive {tokens[0]!r}", no)

    if times is None:
        raise ParseError("missing TASKS section")
    if cycle is None:
        raise ParseError("missing CYCLE section")
    n = len(times)
    for i, j, lno in arcs:
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"arc {i}->{j} references unknown task", lno)
        if i == j:
            raise ParseError(f"cycle detected: self-loop on task {i}", lno)
    profiles = []
    for wid, row, lno in workers:
        if len(row) != n:
            raise ParseError(f"worker {wid}: expected {n} times, got {len(row)}", lno)
        if any(t < -1 for t in row):
            raise ParseError(f"worker {wid}: times must be >= 0 or -1", lno)
        profiles.append(worker_from_times(wid, row))
    return Instance(tuple(times), [(i - 1, j - 1) for i, j, _ in arcs], profiles, cycle, name)


def load_instance(path) -> Instance:
    path = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    name = os.path.splitext(os.path.basename(path))[0]
    try:
        return parse_instance(text, name)
    except ParseError as exc:
        raise ParseError(str(exc), path=path) from None


def format_instance(instance: Instance) -> str:
    n = instance.task_count
    out = [f"TASKS {n}"]
    out += [f"{i + 1} {t}" for i, t in enumerate(instance.times)]
    out.append(f"PRECEDENCE {len(instance.precedence)}")
    out += [f"{i + 1} {j + 1}" for i, j in instance.precedence]
    out.append(f"CYCLE {instance.cycle_time}")
    out.append(f"WORKERS {len(instance.workers)}")
    for w in instance.workers:
        row = ["-1" if w.time(i) is None else str(w.times[i]) for i in range(n)]
        out.append(" ".join([w.id] + row))
    return "\n".join(out) + "\n"


def save_instance(instance: Instance, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_instance(instance))


_ALB_SECTION = re.compile(r"<\s*([^>]+?)\s*>")


def parse_alb(text: str, name: str = "", cycle_time: int = None) -> Instance:
    """Read the common SALBP ``.alb`` layout (sections in angle brackets).

    Precedence pairs are written ``i,j``. The order strength line, if present,
    is ignored. ``cycle_time`` overrides the file's value.
    """
    sections = {}
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        m = _ALB_SECTION.fullmatch(line)
        if m:
            current = m.group(1).lower()
            if current == "end":
                break
            sections[current] = []
            continue
        if current is None:
            raise ParseError("data before first section", no)
        sections[current].append((no, line))

    def single(key):
        rows = sections.get(key)
        if not rows:
            raise ParseError(f"missing <{key}> section")
        no, line = rows[0]
        return _int(line, no)

    n = single("number of tasks")
    cycle = cycle_time if cycle_time is not None else single("cycle time")
    times = [None] * n
    for no, line in sections.get("task times", []):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("task time line needs '<i> <t_i>'", no)
        i, t = _int(parts[0], no), _int(parts[1], no)
        if not 1 <= i <= n:
            raise ParseError(f"task id {i} out of range", no)
        times[i - 1] = t
    if any(t is None for t in times):
        raise ParseError("<task times> incomplete")
    arcs = []
    for no, line in sections.get("precedence relations", []):
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ParseError("precedence line needs 'i,j'", no)
        i, j = _int(parts[0], no), _int(parts[1], no)
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"arc {i}->{j} references unknown task", no)
        if i == j:
            raise ParseError(f"cycle detected: self-loop on task {i}", no)
        arcs.append((i - 1, j - 1))
    return Instance(tuple(times), arcs, (), cycle, name)


def load_base(path, cycle_time: int = None) -> Instance:
    """Load a SALBP base file in either the instance format or .alb layout."""
    path = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    name = os.path.splitext(os.path.basename(path))[0]
    if text.lstrip().startswith("<"):
        inst = parse_alb(text, name, cycle_time)
    else:
        inst = parse_instance(text, name)
        if cycle_time is not None:
            inst = Instance(inst.times, inst.precedence, inst.workers, cycle_time, name)
    return inst


def format_alb(instance: Instance) -> str:
    out = ["<number of tasks>", str(instance.task_count), "",
           "<cycle time>", str(instance.cycle_time), "",
           "<task times>"]
    out += [f"{i + 1} {t}" for i, t in enumerate(instance.times)]
    out += ["", "<precedence relations>"]
    out += [f"{i + 1},{j + 1}" for i, j in instance.precedence]
    out += ["", "<end>"]
    return "\n".join(out) + "\n"


def format_solution(instance: Instance, solution: LineSolution) -> str:
    lines = []
    for s, st in enumerate(solution.stations, start=1):
        parts = [f"STATION {s}"]
        if st.worker is not None:
            parts.append(f"WORKER {instance.workers[st.worker].id}")
        parts.append("TASKS")
        parts += [str(i + 1) for i in sorted(st.tasks)]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_solution(text: str, instance: Instance) -> LineSolution:
    stations = {}
    for no, tokens in _lines(text):
        if tokens[0].upper() != "STATION" or len(tokens) < 3:
            raise ParseError("expected 'STATION <s> [WORKER <w>] TASKS ...'", no)
        s = _int(tokens[1], no)
        rest = tokens[2:]
        worker = None
        if rest[0].upper() == "WORKER":
            if len(rest) < 2:
                raise ParseError("WORKER needs an id", no)
            try:
                worker = instance.worker_index(rest[1])
            except KeyError:
                raise ParseError(f"unknown worker {rest[1]!r}", no) from None
            rest = rest[2:]
        if not rest or rest[0].upper() != "TASKS":
            raise ParseError("missing TASKS keyword", no)
        tasks = [_int(x, no) - 1 for x in rest[1:]]
        if s in stations:
            raise ParseError(f"station {s} listed twice", no)
        stations[s] = Station(frozenset(tasks), worker)
    if not stations:
        raise ParseError("empty solution")
    if sorted(stations) != list(range(1, len(stations) + 1)):
        raise ParseError("station numbers must be 1..m")
    return LineSolution(tuple(stations[s] for s in range(1, len(stations) + 1)))


def load_solution(path, instance: Instance) -> LineSolution:
    with open(path, encoding="utf-8") as fh:
        return parse_solution(fh.read(), instance)


def save_solution(instance: Instance, solution: LineSolution, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_solution(instance, solution))
