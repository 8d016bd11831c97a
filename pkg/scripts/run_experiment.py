"""End-to-end experiment: bases -> worker suite -> methods -> aggregated tables.

Runs in one process (no pool) so it is easy to profile. For large suites
use ``alwibp generate`` and ``alwibp bench`` instead, which run in parallel.

    python scripts/run_experiment.py --out results/ --bases 10 --tasks 12
"""

import argparse
import logging
import os
import time

from alwibp import benchgen, report
from alwibp.io import load_instance
from alwibp.methods import METHODS, salbp_best_known, solve
from alwibp.oracle import exact_alwibp1

log = logging.getLogger("experiment")


def run(suite_dir, methods, oracle_max, time_limit):
    records = []
    manifest = benchgen.read_manifest(os.path.join(suite_dir, benchgen.MANIFEST))
    for k, entry in enumerate(manifest):
        inst = load_instance(os.path.join(suite_dir, entry["file"]))
        salbp_m, source = salbp_best_known(inst, oracle_max)
        model_m = None
        if inst.task_count <= oracle_max:
            opt = exact_alwibp1(inst, time_limit=time_limit)
            model_m = opt.stations if opt.proven else None
        for method in methods:
            out = solve(inst, method, time_limit=time_limit)
            rec = report.compute_metrics(inst, out.solution, salbp_m, method, out.status,
                                         out.seconds, entry["variability"],
                                         float(entry["incompat"]), model_m)
            rec.salbp_source = source
            if method != "cih":
                smin = solve(inst, method, objective="smin", time_limit=time_limit)
                report.attach_smin(rec, inst, smin.solution)
            records.append(rec)
        if (k + 1) % 20 == 0:
            log.info("%d/%d instances", k + 1, len(manifest))
    return records


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--bases", type=int, default=10)
    ap.add_argument("--tasks", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--methods", default="cih,cih-ls1,cih-ls2")
    ap.add_argument("--oracle-max", type=int, default=12)
    ap.add_argument("--time-limit", type=float, default=60.0)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    methods = args.methods.split(",")
    unknown = set(methods) - set(METHODS)
    if unknown:
        ap.error(f"unknown methods: {sorted(unknown)}")
    bases = os.path.join(args.out, "bases")
    suite = os.path.join(args.out, "suite")
    benchgen.write_synthetic_bases(bases, args.bases, args.tasks, args.seed)
    benchgen.generate_suite(bases, benchgen.config_grid(seed=args.seed), suite, overwrite=True)

    t0 = time.monotonic()
    records = run(suite, methods, args.oracle_max, args.time_limit)
    log.info("solved %d records in %.1fs", len(records), time.monotonic() - t0)
    with open(os.path.join(args.out, "records.csv"), "w") as fh:
        fh.write(report.records_to_csv(records))
    for method in methods:
        rows = report.aggregate([r for r in records if r.method == method])
        with open(os.path.join(args.out, f"table_{method}.csv"), "w") as fh:
            fh.write(report.to_csv(rows))
        print(f"== {method}")
        print(report.to_text(rows))


if __name__ == "__main__":
    main()
