"""Relative Hausdorff error per collapse strategy on the 20-shape corpus.

Each mesh is decimated to 10% of its faces with Q/Q, SE/Q and SE/MP;
prints one row per mesh and the per-strategy medians.
"""

import argparse
import statistics

from progunfold import shapes
from progunfold.decimate import QQ, SEMP, SEQ, decimate_to
from progunfold.metrics import hausdorff_relative


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fraction", type=float, default=0.1)
    ap.add_argument("--density", type=float, default=10.0)
    args = ap.parse_args()
    labels = [("Q/Q", QQ), ("SE/Q", SEQ), ("SE/MP", SEMP)]
    cols = {k: [] for k, _ in labels}
    print(f"{'mesh':14s} " + " ".join(f"{k:>8s}" for k, _ in labels))
    for name, mesh in shapes.shape_corpus().items():
        target = max(4, round(args.fraction * mesh.n_faces))
        row = []
        for label, strategy in labels:
            work = mesh.copy()
            decimate_to(work, target, strategy)
            h = hausdorff_relative(mesh, work, samples_per_area=args.density)
            cols[label].append(h)
            row.append(h)
        print(f"{name:14s} " + " ".join(f"{h:8.3f}" for h in row))
    print(f"{'median':14s} " + " ".join(f"{statistics.median(cols[k]):8.3f}" for k, _ in labels))


if __name__ == "__main__":
    main()
