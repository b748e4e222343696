"""How much of the kernel matrix survives sparsification.

The squared-exponential kernel decays fast: beyond the cutoff radius implied
by the sparsification threshold, entries are dropped outright and the Gram
matrix between the two clouds becomes sparse.  This script builds the matrix
between a synthetic pair at a few length scales and reports the fill ratio,
then dumps the triplets of the finest one for plotkit's sparsity plot.

Usage: python3 demos/kernel_sparsity.py [outdir]
"""

import os
import sys

from ckreg import KernelParams, build_kernel_matrix
from ckreg.rkhs import cutoff_radius, write_triplets
from ckreg.synth import perturbed_pair


def main(outdir="demo-out"):
    fixed, moving, _ = perturbed_pair(11)
    n, m = len(fixed.points), len(moving.points)
    print(f"clouds: {n} x {m} points, threshold 1e-3\n")
    print(f"{'ell':>6} {'cutoff [m]':>11} {'nonzeros':>9} {'fill':>7}")

    finest = None
    for ell in (0.15, 0.10, 0.06, 0.03):
        p = KernelParams(ell=ell, label_scale=1e-4)
        mat = build_kernel_matrix(fixed, moving.points, p)
        print(f"{ell:>6.2f} {cutoff_radius(p):>11.4f} {mat.nnz:>9} {mat.nnz / (n * m):>7.1%}")
        finest = mat

    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "kernel_triplets.txt")
    write_triplets(finest, path)
    print(f"\nwrote {path} (finest scale)")


if __name__ == "__main__":
    main(*sys.argv[1:])
