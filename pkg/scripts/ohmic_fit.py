"""Quality of the exponential fit to the Ohmic correlation function and its ETE."""

import argparse

import numpy as np

from enaqt.bath import BathSpec, decompose_ohmic, ohmic_correlation
from enaqt.errors import KernelFitError
from enaqt.model import fmo_canonical
from enaqt.solver import ete


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--terms", type=int, nargs="+", default=[4, 6, 8])
    args = ap.parse_args()

    spec = BathSpec(family="ohmic")
    t = np.linspace(0, 40 / spec.gamma_cm1, 400)
    ref = ohmic_correlation(spec, t)
    for k in args.terms:
        try:
            kern = decompose_ohmic(spec, fit_terms=k)
        except KernelFitError as exc:
            print(f"terms {k:2d}  {exc}")
            continue
        err = np.abs(kern(t) - ref).max() / np.abs(ref).max()
        print(f"terms {k:2d}  residual {kern.fit_residual:.2e}  max rel err {err:.2e}")
    print(f"eta(FMO, Ohmic) = {ete(fmo_canonical(), spec):.4f}")


if __name__ == "__main__":
    main()
