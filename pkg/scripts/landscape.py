"""Lambda-gamma (or any two-parameter) ETE landscape for the FMO monomer.

    python3 scripts/landscape.py --axis1 lambda:1:500:60:log --axis2 gamma:5:500:60:log
"""

import argparse

import numpy as np

from enaqt.bath import BathSpec
from enaqt.landscape import GridAxis, stencil_gradient_norm, sweep
from enaqt.model import fmo_canonical


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--axis1", default="lambda:1:500:30:log")
    ap.add_argument("--axis2", default="gamma:5:500:30:log")
    ap.add_argument("--temperature", type=float, default=298.0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--save", help="write the grid to this .npz file")
    args = ap.parse_args()

    ax1, ax2 = GridAxis.parse(args.axis1), GridAxis.parse(args.axis2)
    grid = sweep(fmo_canonical(), BathSpec(temperature_K=args.temperature), ax1, ax2, threads=args.threads)
    i, j = np.unravel_index(np.nanargmax(grid.ete), grid.ete.shape)
    print(f"max eta {grid.ete[i, j]:.4f} at {ax1.name}={ax1.values[i]:.4g}, {ax2.name}={ax2.values[j]:.4g}")
    print(f"min eta {np.nanmin(grid.ete):.4f}; unphysical cells {grid.metadata['unphysical_points']}")
    if min(len(ax1.values), len(ax2.values)) >= 5:
        print(f"median |grad eta| {np.nanmedian(stencil_gradient_norm(grid)):.4g}")
    if args.save:
        np.savez(args.save, axis1=ax1.values, axis2=ax2.values, ete=grid.ete, raw=grid.raw)


if __name__ == "__main__":
    main()
