"""DN symbol of the flat unit disk against |k| for a few mesh resolutions.

Also prints the defect-operator gain on modes k <= N/8, which is what the
ring count trades against.
"""
import argparse
import time

import numpy as np

from dnmaps.dn import defect_gain, defect_operator, dn_matrix, hilbert_transform
from dnmaps.mesh import make_flat_disk


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-boundary", type=int, default=256)
    ap.add_argument("--rings", type=int, nargs="*", default=[0, 32, 64, 80],
                    help="ring counts; 0 means the default")
    ap.add_argument("--top", type=int, default=16, help="highest mode in the symbol check")
    args = ap.parse_args()
    n = args.n_boundary
    theta = 2 * np.pi * np.arange(n) / n
    print("rings  triangles  symbol_err(k<=top)  defect_gain(k<=N/8)  seconds")
    for rings in args.rings:
        t = time.perf_counter()
        mesh = make_flat_disk(n, rings or None)
        D = dn_matrix(mesh)
        err = max(abs((f @ D.matrix @ f) / (f @ f) / k - 1)
                  for k in range(1, args.top + 1)
                  for f in (np.cos(k * theta), np.sin(k * theta)))
        gain = defect_gain(defect_operator(hilbert_transform(D)), n // 8)
        print(f"{rings or 'auto':>5}  {mesh.n_triangles:9d}  {err:18.2e}  {gain:19.3e}  "
              f"{time.perf_counter() - t:7.2f}")


if __name__ == "__main__":
    main()
