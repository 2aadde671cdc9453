"""Mean ETE versus number of chromophores at fixed diameter.

    python3 scripts/site_count.py --diameter 50 --n 2 5 7 10 14 20 --samples 500
"""

import argparse

from enaqt.ensembles import site_count_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--diameter", type=float, default=30.0)
    ap.add_argument("--n", type=int, nargs="+", default=[2, 3, 5, 7, 10])
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    print("n   mean    std     failed")
    for row in site_count_scan(args.diameter, args.n, args.samples, seed=args.seed, threads=args.threads):
        print(f"{row['n_sites']:<3d} {row['mean']:.4f}  {row['std']:.4f}  {row['n_failed']}")


if __name__ == "__main__":
    main()
