"""Robustness of FMO transfer to geometric disorder and to the initial state."""

import argparse

import numpy as np

from enaqt.bath import BathSpec
from enaqt.ensembles import initial_state_ensemble, perturbation_ensemble
from enaqt.model import PerturbationSpec, fmo_canonical


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=500)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    fmo, bath = fmo_canonical(), BathSpec()
    cases = {
        "small jitter": PerturbationSpec(),
        "redrawn dipoles": PerturbationSpec(pos_jitter=0.0, energy_jitter=0.0, redraw_dipoles=True),
        "random energies": PerturbationSpec(pos_jitter=0.0, angle_jitter=0.0, energy_range=(0.0, 500.0)),
    }
    for name, pspec in cases.items():
        e = perturbation_ensemble(fmo, pspec, args.samples, bath, args.seed, args.threads)
        print(f"{name:16s} mean {np.nanmean(e):.4f}  frac>0.9 {np.mean(e > 0.9):.3f}")
    e = initial_state_ensemble(fmo, args.samples, bath, args.seed)
    print(f"{'initial state':16s} mean {e.mean():.4f}  std {e.std():.4f}")


if __name__ == "__main__":
    main()
