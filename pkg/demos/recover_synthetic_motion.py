"""Recover a known rigid motion between two synthetic surface clouds.

Generates a box-surface cloud, displaces a copy of it by a 5 degree / 5 cm
motion, and runs the registration with a per-iteration trace.  The printout
shows the coarse-to-fine length-scale schedule kicking in and the functional
climbing until the transform increment stalls below threshold.  The trace is
also written as CSV so it can be plotted (plotkit reads this schema).

Usage: python3 demos/recover_synthetic_motion.py [outdir]
"""

import os
import sys
import time

from ckreg import KernelParams, RegistrationConfig, register, rot_distance, trans_distance
from ckreg.synth import perturbed_pair


def main(outdir="demo-out"):
    seed = 7
    fixed, moving, h_true = perturbed_pair(seed)
    print(f"cloud: {len(fixed.points)} points, seed {seed}")
    print("true motion: 5 deg rotation, 0.05 m translation\n")

    cfg = RegistrationConfig(kernel=KernelParams(label_scale=1e-4))
    trace = []
    start = time.perf_counter()
    res = register(fixed, moving, cfg, trace=trace)
    elapsed = time.perf_counter() - start

    print(f"{'iter':>4} {'ell':>6} {'F':>12} {'|grad|':>10} {'step':>9}")
    shown = trace[:6] + trace[-3:] if len(trace) > 9 else trace
    last = -1
    for rec in shown:
        if rec.iteration - last > 1:
            print("  ...")
        print(
            f"{rec.iteration:>4} {rec.ell:>6.3f} {rec.value:>12.6e} "
            f"{rec.grad_norm:>10.3e} {rec.step:>9.2e}"
        )
        last = rec.iteration

    print(f"\nconverged: {res.converged} ({res.reason}) "
          f"after {res.iterations} iterations, {elapsed:.2f}s")
    print(f"rotation error:    {rot_distance(res.transform, h_true):.6f}  (Frobenius metric)")
    print(f"translation error: {trans_distance(res.transform, h_true):.6f} m")

    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "trace.csv")
    with open(path, "w") as f:
        f.write("iteration,ell,value,grad_norm,step,rot_inc,trans_inc\n")
        for r in trace:
            f.write(
                f"{r.iteration},{r.ell:.17g},{r.value:.17g},{r.grad_norm:.17g},"
                f"{r.step:.17g},{r.rot_inc:.17g},{r.trans_inc:.17g}\n"
            )
    print(f"\nwrote {path}")


if __name__ == "__main__":
    main(*sys.argv[1:])
