"""Frequency-domain ETE against time propagation on FMO and random models."""

import argparse

from enaqt.bath import BathSpec
from enaqt.dynamics import propagate_time
from enaqt.ensembles import EnsembleSpec, sample_configuration, sample_rng
from enaqt.model import fmo_canonical
from enaqt.solver import TransferProblem, ete_frequency


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--models", type=int, default=20)
    ap.add_argument("--method", default="eig", choices=["eig", "expm", "rk"])
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    models = [fmo_canonical()]
    models += [sample_configuration(EnsembleSpec(), sample_rng(args.seed, i))[1] for i in range(args.models)]
    worst = 0.0
    for k, m in enumerate(models):
        p = TransferProblem(m, BathSpec())
        ef = ete_frequency(p).ete
        et = propagate_time(p, 1e4, method=args.method).result.ete
        worst = max(worst, abs(ef - et))
        print(f"{k:3d}  freq {ef:.6f}  time {et:.6f}  diff {abs(ef - et):.1e}")
    print(f"max |difference| {worst:.2e}")


if __name__ == "__main__":
    main()
