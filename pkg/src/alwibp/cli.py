"""Command line interface.

    alwibp solve --instance t1w.alwibp --method cih --variant auto --out t1w.sol
    alwibp export-lp --instance t1w.alwibp --objective smin --out t1w.lp
    alwibp import-solution --instance t1w.alwibp --values t1w.values --objective smin
    alwibp check --instance t1w.alwibp --solution t1w.sol
    alwibp generate --dir bases/ --out suite/ --seed 7
    alwibp bench --dir suite/ --out results/

Exit status: 0 on success, 1 when the instance or a solution is infeasible,
2 on usage errors and unreadable or malformed input. Written artifacts never
contain wall-clock times except the bench records; timings go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor

from . import benchgen, report
from .instance import InfeasibleError, InfeasibleInstanceError, InstanceError, violations
from .io import ParseError, format_solution, load_instance, load_solution
from .methods import METHODS, OBJECTIVES, VARIANT_CHOICES, salbp_best_known, solve
from .mip import (LS1, LS2, SMIN, ModelError, build_alwibp1, build_ls, build_smin,
                  check_solution, emit_lp, parse_values, values_to_solution)

log = logging.getLogger("alwibp")

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2
DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


class UsageError(Exception):
    pass


def _threads():
    raw = os.environ.get("ALWIBP_THREADS", "")
    try:
        cap = int(raw) if raw else os.cpu_count() or 1
    except ValueError:
        raise UsageError(f"ALWIBP_THREADS must be an integer, got {raw!r}") from None
    return max(1, min(cap, os.cpu_count() or 1))


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _instance_files(directory):
    if not os.path.isdir(directory):
        raise UsageError(f"not a directory: {directory}")
    return sorted(os.path.join(directory, f) for f in os.listdir(directory)
                  if f.endswith(".alwibp"))


# -- solve ---------------------------------------------------------------------

def _solve_one(path, args_dict):
    inst = load_instance(path)
    out = solve(inst, args_dict["method"], args_dict["variant"], args_dict["objective"],
                args_dict["time_limit"], args_dict["solver"])
    salbp_m, source = salbp_best_known(inst)
    rec = report.compute_metrics(inst, out.solution, salbp_m, method=out.method,
                                 status=out.status)
    rec.salbp_source = source
    return inst, out, rec


def _record_line(rec):
    # deterministic metrics: wall time is reported on stderr only
    rec.seconds = 0.0
    return report.records_to_csv([rec])


def cmd_solve(args):
    opts = dict(method=args.method, variant=args.variant, objective=args.objective,
                time_limit=args.time_limit, solver=args.solver)
    if args.instance:
        inst, out, rec = _solve_one(args.instance, opts)
        _write(args.out, format_solution(inst, out.solution))
        metrics = _record_line(rec)
        if args.out and args.out != "-":
            _write(args.out + ".metrics.csv", metrics)
        else:
            sys.stderr.write(metrics)
        log.info("%s: %d stations (%s, %s) in %.2fs", inst.name, out.stations, out.status,
                 out.detail, out.seconds)
        return EXIT_OK
    files = _instance_files(args.dir)
    if not args.out:
        raise UsageError("--dir needs --out <directory>")
    os.makedirs(args.out, exist_ok=True)
    results = _map(_solve_one, files, opts)
    records, failed = [], 0
    for path, res in zip(files, results):
        if isinstance(res, Exception):
            failed += 1
            log.error("%s: %s", path, res)
            continue
        inst, out, rec = res
        _write(os.path.join(args.out, inst.name + ".sol"), format_solution(inst, out.solution))
        rec.seconds = 0.0
        records.append(rec)
    _write(os.path.join(args.out, "metrics.csv"), report.records_to_csv(records))
    return EXIT_INFEASIBLE if failed else EXIT_OK


def _guarded(fn, path, opts):
    try:
        return fn(path, opts)
    except (InfeasibleError, InstanceError) as exc:
        return exc


def _map(fn, items, opts):
    threads = _threads()
    if threads == 1 or len(items) < 2:
        return [_guarded(fn, p, opts) for p in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_guarded, [fn] * len(items), items, [opts] * len(items)))


# -- models ----------------------------------------------------------------------

def _model_for(args, inst):
    if args.method in ("cih-ls1", "cih-ls2"):
        from .methods import variants_for
        from .cih import run_best_of_four
        cih = run_best_of_four(inst, variants=variants_for(args.variant))
        mode = LS1 if args.method == "cih-ls1" else LS2
        return build_ls(inst, cih.solution, mode, args.objective)
    if args.objective == SMIN:
        return build_smin(inst, args.max_stations)
    return build_alwibp1(inst, args.max_stations)


def cmd_export_lp(args):
    inst = load_instance(args.instance)
    _write(args.out, emit_lp(_model_for(args, inst)))
    return EXIT_OK


def cmd_import_solution(args):
    inst = load_instance(args.instance)
    model = _model_for(args, inst)
    with open(args.values, encoding="utf-8") as fh:
        sol = parse_values(fh.read())
    verdict = check_solution(model, sol)
    print(verdict.describe())
    print(f"objective {verdict.objective:g}")
    if not verdict.ok:
        return EXIT_INFEASIBLE
    if args.out:
        _write(args.out, format_solution(inst, values_to_solution(inst, sol.values)))
    return EXIT_OK


def cmd_check(args):
    inst = load_instance(args.instance)
    sol = load_solution(args.solution, inst)
    problems = violations(inst, sol)
    if problems:
        for p in problems:
            print(p)
        return EXIT_INFEASIBLE
    print(f"feasible: {len(sol)} stations")
    return EXIT_OK


# -- generate / bench ----------------------------------------------------------

def _floats(text):
    return tuple(float(x) for x in text.split(","))


def cmd_generate(args):
    base_dir = args.dir or os.path.join(DATA_DIR, "bases")
    if not os.path.isdir(base_dir):
        raise UsageError(f"not a directory: {base_dir}")
    if not args.out:
        raise UsageError("generate needs --out <directory>")
    configs = benchgen.config_grid(
        seed=args.seed, worker_counts=tuple(int(x) for x in args.workers.split(",")),
        variabilities=tuple(args.variability.split(",")), rates=_floats(args.incompat))
    records = benchgen.generate_suite(base_dir, configs, args.out, args.cycle, args.overwrite)
    log.info("generated %d instances in %s", len(records), args.out)
    return EXIT_OK


_TAG = re.compile(r"_w(\d+)_(low|high)_i(\d+)$")


def _cell_info(directory):
    info = {}
    path = os.path.join(directory, benchgen.MANIFEST)
    if os.path.exists(path):
        for rec in benchgen.read_manifest(path):
            info[rec["file"]] = (rec["variability"], float(rec["incompat"]))
    return info


def _bench_one(path, opts):
    inst = load_instance(path)
    salbp_m, source = salbp_best_known(inst, opts["oracle_max"])
    model_m = None
    if inst.task_count <= opts["oracle_max"]:
        from .oracle import exact_alwibp1
        res = exact_alwibp1(inst, time_limit=opts["time_limit"] or 60.0)
        if res.proven and res.stations is not None:
            model_m = res.stations
    var, inc = opts["cells"].get(os.path.basename(path), ("", 0.0))
    if not var:
        m = _TAG.search(inst.name)
        if m:
            var, inc = m.group(2), int(m.group(3)) / 100
    out = []
    for method in opts["methods"]:
        res = solve(inst, method, opts["variant"], "stations", opts["time_limit"], opts["solver"])
        rec = report.compute_metrics(inst, res.solution, salbp_m, method, res.status,
                                     res.seconds, var, inc, model_m)
        rec.salbp_source = source
        if method != "cih" and inst.workers:
            smin = solve(inst, method, opts["variant"], SMIN, opts["time_limit"], opts["solver"])
            report.attach_smin(rec, inst, smin.solution)
        out.append(rec)
    return out


def cmd_bench(args):
    files = _instance_files(args.dir)
    if not args.out:
        raise UsageError("bench needs --out <directory>")
    methods = tuple(args.methods.split(","))
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}")
    opts = dict(methods=methods, variant=args.variant, time_limit=args.time_limit,
                solver=args.solver, oracle_max=args.oracle_max, cells=_cell_info(args.dir))
    results = _map(_bench_one, files, opts)
    records = []
    for path, res in zip(files, results):
        if isinstance(res, Exception):
            log.error("%s: %s", path, res)
            continue
        records.extend(res)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "records.csv"), report.records_to_csv(records))
    for method in methods:
        rows = report.aggregate([r for r in records if r.method == method])
        _write(os.path.join(args.out, f"table_{method}.csv"), report.to_csv(rows))
        _write(os.path.join(args.out, f"table_{method}.txt"), report.to_text(rows))
        sys.stderr.write(f"== {method}\n" + report.to_text(rows))
    return EXIT_OK


# -- parser -------------------------------------------------------------------------

def _positive(text):
    val = float(text)
    if val <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return val


def build_parser():
    p = argparse.ArgumentParser(prog="alwibp", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_instance=True, allow_dir=False):
        if allow_dir:
            g = sp.add_mutually_exclusive_group(required=True)
            g.add_argument("--instance")
            g.add_argument("--dir")
        elif need_instance:
            sp.add_argument("--instance", required=True)
        sp.add_argument("--method", choices=METHODS, default="cih")
        sp.add_argument("--variant", choices=VARIANT_CHOICES, default="auto")
        sp.add_argument("--objective", choices=OBJECTIVES, default="stations")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--time-limit", type=_positive, default=None)
        sp.add_argument("--solver", choices=("highs", "exhaustive"), default="highs",
                        help="backend for the LS neighborhoods")
        sp.add_argument("--out")

    sp = sub.add_parser("solve", help="solve one instance or a directory")
    common(sp, allow_dir=True)
    sp.set_defaults(func=cmd_solve)

    for name, func in (("export-lp", cmd_export_lp), ("import-solution", cmd_import_solution)):
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--max-stations", type=int, default=None)
        if name == "import-solution":
            sp.add_argument("--values", required=True,
                            help="'<variable> <value>' per line")
        sp.set_defaults(func=func)

    sp = sub.add_parser("check", help="validate a solution file")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--solution", required=True)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("generate", help="derive a worker suite from SALBP bases")
    sp.add_argument("--dir", help="base instances (default: bundled synthetic set)")
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", default="1,2,3,4")
    sp.add_argument("--variability", default="low,high")
    sp.add_argument("--incompat", default="0.10,0.20")
    sp.add_argument("--cycle", type=int, default=1000)
    sp.add_argument("--overwrite", action="store_true")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("bench", help="run methods over a suite and aggregate tables")
    sp.add_argument("--dir", required=True)
    sp.add_argument("--out")
    sp.add_argument("--methods", default="cih,cih-ls1,cih-ls2")
    sp.add_argument("--variant", choices=VARIANT_CHOICES, default="auto")
    sp.add_argument("--time-limit", type=_positive, default=None)
    sp.add_argument("--solver", choices=("highs", "exhaustive"), default="highs")
    sp.add_argument("--oracle-max", type=int, default=12,
                    help="largest task count solved exactly for Ties and m_up")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (InfeasibleError, InfeasibleInstanceError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, ParseError, InstanceError, ModelError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
