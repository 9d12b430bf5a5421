"""Unfold the canonical corpus with every collapse strategy and print a summary table."""

import argparse
import time

from progunfold import shapes
from progunfold.decimate import STRATEGIES
from progunfold.pipeline import progressive_unfold
from progunfold.unfold import count_overlaps


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    total = 0.0
    print(f"{'mesh':14s} {'variant':7s} {'status':14s} {'faces':>6s} {'coarse':>6s} {'iters':>6s} "
          f"{'cover%':>7s} {'aspect':>7s} {'time s':>7s}")
    for name, mesh in shapes.canonical_corpus().items():
        for strategy in STRATEGIES.values():
            t0 = time.perf_counter()
            out = progressive_unfold(mesh, strategy, rng=args.seed)
            dt = time.perf_counter() - t0
            total += dt
            assert count_overlaps(out.layout).count == 0
            m = out.metrics
            print(f"{name:14s} {strategy.name:7s} {out.status.value:14s} {out.mesh.n_faces:6d} {out.coarse_faces:6d} "
                  f"{out.iterations:6d} {m.coverage:7.2f} {m.aspect_ratio:7.3f} {dt:7.2f}")
    print(f"total {total:.1f} s")


if __name__ == "__main__":
    main()
