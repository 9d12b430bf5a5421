"""Time progressive Q/Q against the direct tabu baseline on a 2000-face icosphere."""

import argparse
import statistics
import time

from progunfold import shapes
from progunfold.decimate import QQ
from progunfold.pipeline import direct_unfold, progressive_unfold


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--frequency", type=int, default=10, help="icosphere frequency; faces = 20 * f^2")
    args = ap.parse_args()
    mesh = shapes.icosphere(args.frequency)
    prog, direct = [], []
    for seed in range(args.runs):
        t0 = time.perf_counter()
        p = progressive_unfold(mesh, QQ, rng=seed)
        prog.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        d = direct_unfold(mesh, rng=seed)
        direct.append(time.perf_counter() - t0)
        print(f"seed {seed}: progressive {p.status.value} {prog[-1]:.2f} s ({p.iterations} iterations), "
              f"direct {d.status.value} {direct[-1]:.2f} s ({d.iterations} iterations)")
    mp, md = statistics.median(prog), statistics.median(direct)
    print(f"{mesh.n_faces} faces: median progressive {mp:.2f} s, direct {md:.2f} s, ratio {mp / md:.1f}")


if __name__ == "__main__":
    main()
