"""Compare the DN change under an interior conformal rescaling with the
mesh self-convergence error, window by window."""
import argparse

import numpy as np

from dnmaps.boundary import resample_operator
from dnmaps.dn import dn_distance, dn_matrix
from dnmaps.mesh import make_flat_disk, scale_conformal


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-boundary", type=int, default=256)
    ap.add_argument("--amplitude", type=float, nargs="*", default=[0.1, 0.3, 0.5])
    args = ap.parse_args()
    n = args.n_boundary
    disk = make_flat_disk(n)
    dn0 = dn_matrix(disk)
    fine = resample_operator(dn_matrix(make_flat_disk(2 * n)).operator, n)
    p = disk.positions
    windows = [n // 16, n // 8, n // 4, None]
    print("window  self-conv  " + "  ".join(f"amp={a:<6}" for a in args.amplitude))
    scaled = []
    for a in args.amplitude:
        phi = np.exp(a * (1 - (p ** 2).sum(axis=1)) * (1 + 0.5 * p[:, 0]))
        scaled.append(dn_matrix(scale_conformal(disk, phi)))
    for w in windows:
        row = [dn_distance(dn0, fine, w)] + [dn_distance(s, dn0, w) for s in scaled]
        print(f"{str(w or 'all'):>6}  " + "  ".join(f"{v:9.3e}" for v in row))


if __name__ == "__main__":
    main()
