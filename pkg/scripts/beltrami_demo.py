"""Solve a Beltrami equation for a smooth compactly supported coefficient
and print the Neumann-series diagnostics."""
import argparse
import time

import numpy as np

from dnmaps.beltrami import jacobian, smooth_plateau, solve_beltrami, swirl_bump, write_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=512)
    ap.add_argument("--amplitude", type=float, default=0.3)
    ap.add_argument("--shape", choices=["swirl", "plateau"], default="swirl")
    ap.add_argument("--save", default=None, help="write the map as a binary grid file")
    args = ap.parse_args()
    if args.shape == "swirl":
        mu = swirl_bump(args.grid, 1.0, args.amplitude, 0.2)
    else:
        mu = smooth_plateau(args.grid, 1.0, args.amplitude, 0.3, 0.5)
    t = time.perf_counter()
    sol = solve_beltrami(mu, k_max=30, tol=1e-10, track_residuals=True)
    secs = time.perf_counter() - t
    print(f"sup|mu| = {mu.sup():.4f}, terms used {sol.terms_used}, {secs:.2f} s")
    print("term  |term|_2     ratio    residual")
    ratios = np.concatenate([[np.nan], sol.term_ratios])
    for k, (tn, r, res) in enumerate(zip(sol.term_norms, ratios, sol.residuals)):
        print(f"{k:4d}  {tn:10.3e}  {r:7.3f}  {res:10.3e}")
    J = jacobian(sol.map, sol.affine)[mu.inner_half()]
    print(f"final residual {sol.residual:.3e}; Jacobian range [{J.min():.3f}, {J.max():.3f}]")
    if args.save:
        write_grid(args.save, sol.map)


if __name__ == "__main__":
    main()
