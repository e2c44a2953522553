"""Discrete Dirichlet-to-Neumann maps and the boundary operators built on them."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .boundary import (BoundaryFunction, BoundaryOperator, antiderivative_matrix,
                       band_projector, operator_norm, osc_norm)
from .errors import IndeterminateRank, InvalidInput
from .harmonic import DirichletSolver
from .mesh import TriangleMesh

# relative spread allowed between boundary edge lengths
UNIFORM_TOL = 1e-9
# boundary lengths that differ by less than this are treated as one circle
# (inscribed polygons at different resolutions differ at order 1/N^2)
LENGTH_RTOL = 1e-3


@dataclass(frozen=True, eq=False)
class DnMatrix:
    """DN operator on boundary samples together with where it came from."""

    operator: BoundaryOperator
    mass: np.ndarray
    source: str = ""

    @property
    def matrix(self) -> np.ndarray:
        return self.operator.matrix

    @property
    def length(self) -> float:
        return self.operator.length

    @property
    def n(self) -> int:
        return self.operator.n

    def __call__(self, f: BoundaryFunction) -> BoundaryFunction:
        return self.operator(f)

    def symmetry_defect(self) -> float:
        """``||L^T M - M L|| / ||M L||`` in the Frobenius norm."""
        ml = self.mass[:, None] * self.matrix
        return float(np.linalg.norm(ml - ml.T) / np.linalg.norm(ml))

    def constant_defect(self) -> float:
        return float(np.linalg.norm(self.matrix.sum(axis=1)) / np.linalg.norm(self.matrix))


def dn_matrix(mesh: TriangleMesh) -> DnMatrix:
    """Mass-weighted Schur complement of the cotangent Laplacian.

    Row ``i`` of the result approximates the outward normal derivative at
    boundary vertex ``i`` of the harmonic extension of the input.
    """
    if mesh.is_closed:
        raise InvalidInput("dn_matrix needs a mesh with a boundary")
    h = mesh.boundary_edge_lengths
    if h.max() - h.min() > UNIFORM_TOL * h.mean():
        raise InvalidInput("boundary spacing is not uniform")
    solver = DirichletSolver.of(mesh)
    x = solver.solve_interior(solver.A_ib.toarray())
    schur = solver.A_bb - solver.A_ib.T @ x
    schur = 0.5 * (schur + schur.T)
    mass = 0.5 * (h + np.roll(h, 1))
    op = BoundaryOperator(schur / mass[:, None], float(h.sum()))
    return DnMatrix(op, mass, mesh.name)


def hilbert_transform(dn: DnMatrix) -> BoundaryOperator:
    """``H = d^-1 L``: antiderivative of the Neumann data."""
    n, length = dn.n, dn.length
    return BoundaryOperator(antiderivative_matrix(n, length) @ dn.matrix, length)


def defect_operator(H: BoundaryOperator) -> BoundaryOperator:
    """``H^2 + I`` on mean-zero functions.

    The mean and the Nyquist mode are projected out on both sides: the
    antiderivative kills the Nyquist mode, so ``H^2 + I`` would be the
    identity there for reasons unrelated to the surface.
    """
    P = band_projector(H.n)
    return BoundaryOperator(P @ (H.matrix @ H.matrix + np.eye(H.n)) @ P, H.length)


def comparison_window(n: int) -> int:
    """Highest Fourier mode used when comparing operators at ``n`` nodes.

    The discrete DN symbol drifts away from ``|k|`` in the upper half of the
    resolvable band (about 9% at ``3n/8``), so only ``|k| <= n/4`` is compared.
    """
    return n // 4


def rank_window(n: int) -> int:
    """Highest Fourier mode used for rank detection.

    The discretisation floor of the defect operator grows with ``k``; below
    ``n/16`` it stays under a few 1e-3 on the generated meshes, well clear of
    the defect of handles down to eps = 0.025.
    """
    return max(4, n // 16)


def singular_profile(D: BoundaryOperator, max_mode: int | None = None) -> np.ndarray:
    """Singular values of ``D`` compressed to modes ``1 <= |k| <= max_mode``."""
    P = band_projector(D.n, max_mode)
    return np.linalg.svd(P @ D.matrix @ P, compute_uv=False)


def estimate_genus(D: BoundaryOperator, gap_factor: float = 10.0,
                   max_mode: int | None = None) -> int:
    """Half the numerical rank of a defect operator.

    The rank is read off the profile ``1, s_1, s_2, ...`` where the leading
    ``1`` is the scale of the identity part of ``H^2 + I``.  The rank is the
    number of singular values in front of the widest multiplicative gap,
    which must be at least ``gap_factor``; a widest gap right after the
    leading ``1`` means rank zero.  ``max_mode`` defaults to
    ``rank_window(N)``.
    """
    if not gap_factor > 1:
        raise InvalidInput("gap_factor must exceed 1")
    if max_mode is None:
        max_mode = rank_window(D.n)
    s = singular_profile(D, max_mode)
    s = s[: 2 * max_mode]
    tiny = np.finfo(float).tiny
    seq = np.concatenate([[1.0], s])
    ratios = seq[:-1] / np.maximum(seq[1:], tiny)
    r = int(np.argmax(ratios))
    if ratios[r] < gap_factor:
        raise IndeterminateRank(f"no gap of factor {gap_factor} in the defect profile", s)
    if r % 2:
        raise IndeterminateRank(f"odd numerical rank {r}", s)
    return r // 2


def _unwrap_map(values, period):
    values = np.asarray(values, dtype=float)
    steps = np.diff(np.concatenate([values, [values[0] + period]]))
    if np.any(~(steps > 0)):
        raise InvalidInput("reparametrisation must be strictly increasing and wrap once")
    return values


def _interp_matrix(n: int, length: float, points) -> np.ndarray:
    """Rows evaluate the trigonometric interpolant of ``n`` samples at ``points``.

    The Nyquist mode enters as a cosine, matching the real part convention
    of the inverse real FFT.
    """
    k = np.arange(n // 2 + 1)
    phase = 2 * np.pi * np.outer(np.asarray(points) / length, k)
    # weights of rfft coefficients in irfft at arbitrary points
    w = np.full(len(k), 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    nodes = np.arange(n)
    # coefficient c_k = sum_j f_j exp(-2 pi i k j / n) / n
    basis = np.exp(-2j * np.pi * np.outer(k, nodes) / n) / n
    return ((w * np.cos(phase)) @ basis.real - (w * np.sin(phase)) @ basis.imag)


def _invert_map(values, length_src, length_dst, iters=50):
    """Samples of the inverse of a periodic monotone map at uniform nodes."""
    n = len(values)
    t = length_src * np.arange(n) / n
    disp = values - t * length_dst / length_src
    target = length_dst * np.arange(n) / n
    # Newton on s -> beta(s) - target with beta = linear part + interpolated displacement
    s = np.interp(target, np.concatenate([values - length_dst, values, values + length_dst]),
                  np.concatenate([t - length_src, t, t + length_src]))
    k = 2 * np.pi * np.fft.rfftfreq(n, 1.0 / n) / length_src
    c = np.fft.rfft(disp)
    dc = 1j * k * c
    dc[-1] = 0
    for _ in range(iters):
        E = _interp_matrix(n, length_src, s)
        f = s * length_dst / length_src + E @ disp - target
        dE = np.fft.irfft(dc, n)
        df = length_dst / length_src + E @ dE
        step = f / df
        s = s - step
        if np.max(np.abs(step)) < 1e-15 * length_src:
            break
    return s


def gauge_transform_dn(dn: DnMatrix, sqrt_rho_inv: BoundaryFunction, reparam,
                       target_length: float | None = None) -> DnMatrix:
    """Transport a DN map along a boundary diffeomorphism and conformal factor.

    ``reparam[j]`` is the image, in arclength of the new boundary (of length
    ``target_length``), of the ``j``-th node of the old one.  The result is
    ``b^-1* . rho^-1/2 . L . b*`` sampled on the new uniform grid.
    """
    n, L = dn.n, dn.length
    Lp = float(target_length or L)
    if sqrt_rho_inv.n != n or np.any(~(sqrt_rho_inv.samples > 0)):
        raise InvalidInput("conformal factor must be positive with one sample per node")
    beta = _unwrap_map(reparam, Lp)
    if len(beta) != n:
        raise InvalidInput("reparametrisation needs one sample per node")
    pull = _interp_matrix(n, Lp, beta)              # f' -> f' o beta on old nodes
    push = _interp_matrix(n, L, _invert_map(beta, L, Lp))  # g -> g o beta^-1
    mat = push @ (sqrt_rho_inv.samples[:, None] * dn.matrix) @ pull
    mass = np.full(n, Lp / n)
    return DnMatrix(BoundaryOperator(mat, Lp), mass, f"gauge({dn.source})")


def dn_distance(a, b, max_mode: int | None = None) -> float:
    """``||A - B||`` from ``H^1`` to ``L2``, optionally on modes ``|k| <= max_mode``."""
    A = getattr(a, "operator", a)
    B = getattr(b, "operator", b)
    if A.n != B.n or not np.isclose(A.length, B.length, rtol=LENGTH_RTOL):
        raise InvalidInput("DN matrices live on different boundary grids")
    diff = A.matrix - B.matrix
    if max_mode is not None:
        P = band_projector(A.n, max_mode, keep_mean=True)
        diff = P @ diff @ P
    return operator_norm(BoundaryOperator(diff, A.length), 1.0, 0.0)


def fourier_probes(n: int, max_mode: int | None = None) -> np.ndarray:
    """Columns ``cos(k t)``, ``sin(k t)`` for ``1 <= k <= max_mode``, unit amplitude."""
    top = n // 2 - 1 if max_mode is None else min(int(max_mode), n // 2 - 1)
    theta = 2 * np.pi * np.arange(n) / n
    k = np.arange(1, top + 1)
    return np.hstack([np.cos(np.outer(theta, k)), np.sin(np.outer(theta, k))])


def defect_distance(a: BoundaryOperator, b: BoundaryOperator,
                    max_mode: int | None = None) -> float:
    """Largest oscillation of ``(A - B) f`` over unit-amplitude Fourier modes."""
    if a.matrix.shape != b.matrix.shape:
        raise InvalidInput("operators have different shapes")
    out = (a.matrix - b.matrix) @ fourier_probes(a.n, max_mode)
    return float(np.max(out.max(axis=0) - out.min(axis=0)))


def defect_gain(D: BoundaryOperator, max_mode: int | None = None) -> float:
    """``max ||D f|| / ||f||`` over single Fourier modes in the window."""
    F = fourier_probes(D.n, max_mode)
    return float(np.max(np.linalg.norm(D.matrix @ F, axis=0) / np.linalg.norm(F, axis=0)))


def write_profile_csv(path, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "value"])
        for i, v in enumerate(values, start=1):
            w.writerow([i, f"{v:.17g}"])


__all__ = ["DnMatrix", "dn_matrix", "hilbert_transform", "defect_operator", "estimate_genus",
           "gauge_transform_dn", "dn_distance", "defect_distance", "singular_profile",
           "comparison_window", "rank_window", "fourier_probes", "defect_gain", "osc_norm", "write_profile_csv"]
