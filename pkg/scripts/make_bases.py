"""Write a set of synthetic SALBP base instances (.alb) for suite generation.

    python scripts/make_bases.py --out bases/ --count 100 --tasks 20 --seed 0
"""

import argparse

from alwibp.benchgen import write_synthetic_bases


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--tasks", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--profiles", default="bottom,bimodal",
                    help="time profiles, cycled over the bases")
    args = ap.parse_args()
    paths = write_synthetic_bases(args.out, args.count, args.tasks, args.seed,
                                  tuple(args.profiles.split(",")))
    print(f"wrote {len(paths)} bases to {args.out}")


if __name__ == "__main__":
    main()
