"""Conformal moduli of annular regions and the geodesic-length bound they give."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .errors import InvalidInput
from .harmonic import SOLVER_RTOL, assemble_laplacian
from .mesh import TriangleMesh

_CYLINDER_TAG = re.compile(r"^handle-cylinder-(\d+)(~mirror)?$")


@dataclass(frozen=True, eq=False)
class AnnulusRegion:
    """Triangulated annulus: a connected piece with two boundary cycles.

    ``mesh`` carries the triangles with local vertex ids (it is not
    validated as a one-boundary surface); ``cycles`` are the two boundary
    cycles as vertex arrays.
    """

    mesh: TriangleMesh
    cycles: tuple[np.ndarray, np.ndarray]
    name: str = "annulus"

    @classmethod
    def from_triangles(cls, mesh: TriangleMesh, triangle_ids, name: str = "annulus"):
        """Cut the given triangles out of ``mesh`` and check they form an annulus."""
        ids = np.unique(np.asarray(triangle_ids, dtype=np.int64))
        if ids.size == 0:
            raise InvalidInput("empty triangle set")
        tris = mesh.triangles[ids]
        used, local = np.unique(tris, return_inverse=True)
        local = local.reshape(tris.shape)
        sub = TriangleMesh.from_corner_lengths(
            len(used), local, mesh.corner_lengths[ids], np.zeros(0, dtype=np.int64),
            check=False, name=name)
        return cls(sub, _annulus_cycles(sub), name)

    @property
    def euler_characteristic(self) -> int:
        return self.mesh.euler_characteristic


def _annulus_cycles(sub: TriangleMesh):
    if np.any(sub.edge_triangle_count > 2):
        raise InvalidInput("region is not a manifold")
    if np.any(sub.areas <= 0):
        raise InvalidInput("region has degenerate triangles")
    n = sub.n_vertices
    e = sub.edges
    adj = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    if connected_components(adj, directed=False)[0] != 1:
        raise InvalidInput("region is not connected")
    if sub.euler_characteristic != 0:
        raise InvalidInput(f"region has Euler characteristic {sub.euler_characteristic}, not 0")
    bnd = e[sub.edge_triangle_count == 1]
    if len(np.unique(bnd)) != len(bnd):
        raise InvalidInput("boundary is not a disjoint union of simple cycles")
    badj = sp.coo_matrix((np.ones(len(bnd)), (bnd[:, 0], bnd[:, 1])), shape=(n, n))
    _, label = connected_components(badj, directed=False)
    on = np.unique(bnd)
    groups = [on[label[on] == c] for c in np.unique(label[on])]
    if len(groups) != 2:
        raise InvalidInput(f"region has {len(groups)} boundary cycles, expected 2")
    return tuple(groups)


def conformal_modulus(region: AnnulusRegion) -> float:
    """``1 / E(u)`` for the discrete harmonic ``u`` equal to 0 and 1 on the
    two boundary cycles (``E`` the cotangent Dirichlet energy)."""
    if not isinstance(region, AnnulusRegion):
        raise InvalidInput("expected an AnnulusRegion")
    mesh = region.mesh
    L = assemble_laplacian(mesh).tocsr()
    n = mesh.n_vertices
    a, b = region.cycles
    u = np.zeros(n)
    u[b] = 1.0
    fixed = np.zeros(n, dtype=bool)
    fixed[a] = fixed[b] = True
    free = np.flatnonzero(~fixed)
    if free.size:
        A = L[free][:, free].tocsc()
        rhs = -(L[free][:, fixed] @ u[fixed])
        u[free] = spla.spsolve(A, rhs)
        res = np.linalg.norm(A @ u[free] - rhs) / max(np.linalg.norm(rhs), 1e-300)
        if not res <= SOLVER_RTOL:
            raise InvalidInput(f"modulus solve residual {res:.2e}")
    energy = float(u @ (L @ u))
    return 1.0 / energy


def geodesic_length_bound(modulus: float) -> float:
    """``pi / modulus``: the core curve of an embedded annulus of this modulus
    has hyperbolic length at most this."""
    if not modulus > 0:
        raise InvalidInput("modulus must be positive")
    return math.pi / modulus


def handle_annuli_on_double(double: TriangleMesh) -> list[AnnulusRegion]:
    """One annulus per tagged handle cylinder (original and mirror copies)."""
    groups: dict[str, list[int]] = {}
    for t, tag in double.tags.items():
        if _CYLINDER_TAG.match(tag):
            groups.setdefault(tag, []).append(t)
    genus = (double.euler_characteristic - 2) // -2 if double.is_closed else None
    if not groups:
        if genus:
            raise InvalidInput("surface has handles but no handle-cylinder tags")
        return []

    def order(tag):
        m = _CYLINDER_TAG.match(tag)
        return (int(m.group(1)), bool(m.group(2)))

    return [AnnulusRegion.from_triangles(double, groups[tag], tag)
            for tag in sorted(groups, key=order)]


def systole_upper_bound(double: TriangleMesh) -> float:
    """Smallest ``pi / modulus`` over the tagged handle annuli; ``inf`` if none."""
    annuli = handle_annuli_on_double(double)
    if not annuli:
        return math.inf
    return min(geodesic_length_bound(conformal_modulus(a)) for a in annuli)


def annulus_table(double: TriangleMesh) -> list[tuple[str, float, float]]:
    """Rows ``(annulus id, modulus, length bound)``."""
    rows = []
    for a in handle_annuli_on_double(double):
        m = conformal_modulus(a)
        rows.append((a.name, m, geodesic_length_bound(m)))
    return rows


def make_planar_annulus(r_in: float, r_out: float, n_theta: int,
                        n_radial: int | None = None) -> AnnulusRegion:
    """Round annulus on log-polar rings, alternate rings shifted half a step.

    With ``n_radial=None`` the ring spacing in ``log r`` matches the angular
    step, so the triangles are close to equilateral after the log map.
    """
    if not 0 < r_in < r_out or n_theta < 8:
        raise InvalidInput("need 0 < r_in < r_out and n_theta >= 8")
    span = math.log(r_out / r_in)
    step = 2 * math.pi / n_theta
    if n_radial is None:
        n_radial = max(1, round(span / (step * math.sqrt(3) / 2)))
    rho = span * np.arange(n_radial + 1) / n_radial
    j = np.arange(n_theta)
    pts = []
    for k, s in enumerate(rho):
        theta = step * (j + 0.5 * (k % 2))
        pts.append(r_in * math.exp(s) * np.column_stack([np.cos(theta), np.sin(theta)]))
    P = np.vstack(pts)
    jn = (j + 1) % n_theta
    tris = []
    for k in range(n_radial):
        lo = k * n_theta + j
        hi = (k + 1) * n_theta + j
        lo_n = k * n_theta + jn
        hi_n = (k + 1) * n_theta + jn
        if k % 2 == 0:
            tris += [np.column_stack([lo, lo_n, hi]), np.column_stack([lo_n, hi_n, hi])]
        else:
            tris += [np.column_stack([lo, hi_n, hi]), np.column_stack([lo, lo_n, hi_n])]
    T = np.vstack(tris)
    c = P[T]
    corner = np.stack([np.linalg.norm(c[:, 2] - c[:, 1], axis=1),
                       np.linalg.norm(c[:, 0] - c[:, 2], axis=1),
                       np.linalg.norm(c[:, 1] - c[:, 0], axis=1)], axis=1)
    mesh = TriangleMesh.from_corner_lengths(len(P), T, corner, np.zeros(0, dtype=np.int64),
                                            check=False, name="planar-annulus", positions=P)
    return AnnulusRegion(mesh, _annulus_cycles(mesh), "planar-annulus")


def annulus_for_triangle_count(r_in: float, r_out: float, target: int) -> AnnulusRegion:
    """Planar annulus with about ``target`` triangles."""
    span = math.log(r_out / r_in)
    # triangles = 2 n_theta n_radial with n_radial ~ span n_theta / (pi sqrt 3)
    n_theta = int(round(math.sqrt(target * math.pi * math.sqrt(3) / (2 * span))))
    n_theta += n_theta % 2
    return make_planar_annulus(r_in, r_out, n_theta)
