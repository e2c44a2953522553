"""Discrete harmonic analysis on edge-length meshes.

The Laplacian is the cotangent (P1 stiffness) operator.  Its conjugate
differential lives on the circumcentric dual: ``Im w(i->j)`` is the flux of
``grad u`` through the dual edge of ``ij``, crossed from the right of
``i->j`` to its left, which equals ``w_ij (u_j - u_i)``.  With this
convention the imaginary part is closed on the dual cell of every
source-free interior vertex, and the flux out of a point source is exactly
its load.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import dijkstra

from .errors import InvalidInput, NumericalError
from .mesh import Involution, TriangleMesh

SOLVER_RTOL = 1e-10

_dirichlet_cache: "weakref.WeakKeyDictionary[TriangleMesh, DirichletSolver]" = weakref.WeakKeyDictionary()
_closed_cache: "weakref.WeakKeyDictionary[TriangleMesh, _PinnedSolver]" = weakref.WeakKeyDictionary()
_rotation_cache: "weakref.WeakKeyDictionary[TriangleMesh, dict]" = weakref.WeakKeyDictionary()


def cotan_weights(mesh: TriangleMesh) -> np.ndarray:
    """Per-edge weight (cot a + cot b) / 2 over the adjacent corners."""
    return np.bincount(mesh.tri_edges.ravel(), weights=0.5 * mesh.cotangents.ravel(),
                       minlength=mesh.n_edges)


def assemble_laplacian(mesh: TriangleMesh) -> sp.csr_matrix:
    """Cotangent Laplacian (positive semidefinite, constants in the kernel)."""
    w = cotan_weights(mesh)
    i, j = mesh.edges.T
    n = mesh.n_vertices
    off = sp.coo_matrix((np.concatenate([-w, -w]), (np.concatenate([i, j]),
                                                    np.concatenate([j, i]))), shape=(n, n))
    diag = np.bincount(np.concatenate([i, j]), weights=np.concatenate([w, w]), minlength=n)
    L = (off + sp.diags(diag)).tocsr()
    # symmetric by construction; row sums vanish up to round-off
    rows = np.abs(np.asarray(L.sum(axis=1)).ravel())
    if rows.max() > 1e-12 * max(diag.max(), 1.0):
        raise NumericalError("Laplacian row sums do not vanish", rows.max())
    return L


def _checked(solution, matrix, rhs, what):
    res = np.linalg.norm(matrix @ solution - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not res <= SOLVER_RTOL:
        raise NumericalError(f"{what}: relative residual {res:.2e}", res)
    return solution


class DirichletSolver:
    """Factorised interior block of the Laplacian of a mesh with boundary."""

    def __init__(self, mesh: TriangleMesh):
        if mesh.is_closed:
            raise InvalidInput("Dirichlet problems need a boundary")
        L = assemble_laplacian(mesh).tocsc()
        self.mesh = mesh
        self.boundary = mesh.boundary_loop
        self.interior = mesh.interior_vertices
        self.A_ii = L[self.interior][:, self.interior].tocsc()
        self.A_ib = L[self.interior][:, self.boundary].tocsc()
        self.A_bb = L[self.boundary][:, self.boundary].toarray()
        self.lu = spla.splu(self.A_ii)

    @classmethod
    def of(cls, mesh):
        solver = _dirichlet_cache.get(mesh)
        if solver is None:
            solver = _dirichlet_cache[mesh] = cls(mesh)
        return solver

    def solve_interior(self, rhs):
        return _checked(self.lu.solve(rhs), self.A_ii, rhs, "interior solve")

    def extend(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        u = np.empty(self.mesh.n_vertices)
        u[self.boundary] = f
        u[self.interior] = self.solve_interior(-(self.A_ib @ f))
        return u


def harmonic_extend(mesh: TriangleMesh, f) -> np.ndarray:
    """Discrete harmonic function with boundary values ``f`` (loop order)."""
    f = np.asarray(getattr(f, "samples", f), dtype=float)
    if f.shape != mesh.boundary_loop.shape:
        raise InvalidInput("boundary data must have one sample per boundary vertex")
    return DirichletSolver.of(mesh).extend(f)


class _PinnedSolver:
    """Laplacian of a closed mesh with one vertex pinned to remove constants."""

    def __init__(self, mesh: TriangleMesh):
        L = assemble_laplacian(mesh).tocsc()
        self.L = L
        self.free = np.arange(1, mesh.n_vertices)
        self.A = L[self.free][:, self.free].tocsc()
        self.lu = spla.splu(self.A)

    def solve(self, rhs):
        """Mean-zero solution of L x = rhs for a rhs with zero sum."""
        x = np.zeros(len(rhs))
        x[self.free] = self.lu.solve(rhs[self.free])
        x -= x.mean()
        return _checked(x, self.L, rhs, "closed-surface solve")


def _closed_solver(mesh):
    if not mesh.is_closed:
        raise InvalidInput("expected a closed mesh")
    solver = _closed_cache.get(mesh)
    if solver is None:
        solver = _closed_cache[mesh] = _PinnedSolver(mesh)
    return solver


def green_difference(closed: TriangleMesh, q_plus: int, q_minus: int) -> np.ndarray:
    """Potential of a unit source at ``q_plus`` and unit sink at ``q_minus``.

    Solves ``L E = e_plus - e_minus`` in the mean-zero gauge, so ``E`` is
    positive near the source.
    """
    if q_plus == q_minus:
        raise InvalidInput("source and sink must differ")
    solver = _closed_solver(closed)
    rhs = np.zeros(closed.n_vertices)
    rhs[q_plus] += 1.0
    rhs[q_minus] -= 1.0
    return solver.solve(rhs)


def green_function(closed: TriangleMesh, y: int) -> np.ndarray:
    """Column ``y`` of the mean-zero pseudo-inverse of the Laplacian."""
    n = closed.n_vertices
    rhs = np.full(n, -1.0 / n)
    rhs[y] += 1.0
    return _closed_solver(closed).solve(rhs)


@dataclass(frozen=True, eq=False)
class EdgeDifferential:
    """Complex 1-form: one value per edge, oriented from ``edges[:, 0]``."""

    values: np.ndarray

    def oriented(self, mesh: TriangleMesh, a, b) -> np.ndarray:
        """Values on the oriented edges ``a -> b``."""
        a = np.atleast_1d(a)
        b = np.atleast_1d(b)
        ids = mesh.edge_ids(a, b)
        sign = np.where(mesh.edges[ids, 0] == a, 1.0, -1.0)
        return sign * self.values[ids]

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.values).max()) if len(self.values) else 0.0


def conjugate_differential(mesh: TriangleMesh, u) -> EdgeDifferential:
    """``w = du + i *du`` with the dual-flux Hodge star."""
    u = np.asarray(u, dtype=float)
    i, j = mesh.edges.T
    du = u[j] - u[i]
    return EdgeDifferential(du + 1j * cotan_weights(mesh) * du)


def dual_circulation(mesh: TriangleMesh, omega: EdgeDifferential) -> np.ndarray:
    """Circulation of ``Im w`` around each vertex's dual cell (ccw).

    Vanishes wherever ``u`` is discrete-harmonic; at a unit source it is
    minus the load.  Boundary vertices have open dual cells and get NaN.
    """
    i, j = mesh.edges.T
    im = omega.values.imag
    circ = np.bincount(i, weights=im, minlength=mesh.n_vertices) \
        - np.bincount(j, weights=im, minlength=mesh.n_vertices)
    circ[mesh.boundary_loop] = np.nan
    return circ


def triangle_circulation(mesh: TriangleMesh, omega: EdgeDifferential) -> np.ndarray:
    """Circulation of ``Re w`` around each triangle (exact differentials give 0)."""
    t = mesh.triangles
    total = sum(omega.oriented(mesh, t[:, k], t[:, (k + 1) % 3]).real for k in range(3))
    return total


def involution_pullback_check(double: TriangleMesh, tau: Involution,
                              omega: EdgeDifferential) -> float:
    """``max |tau* w + conj(w)|`` over edges.

    ``tau`` reverses orientation, so the pull-back of the dual-edge part
    picks up a sign: ``(tau* w)(e) = Re w(tau e) - i Im w(tau e)``.
    """
    a, b = tau.vertex_map[double.edges].T
    image = omega.oriented(double, a, b)
    pulled = image.real - 1j * image.imag
    return float(np.abs(pulled + np.conj(omega.values)).max()) if len(image) else 0.0


@dataclass(frozen=True)
class LevelCurve:
    """Polyline through edge crossings ``edges[k]`` at parameters ``t[k]``
    (measured from ``mesh.edges[e, 0]``)."""

    edges: np.ndarray
    t: np.ndarray
    closed: bool

    def points(self, mesh: TriangleMesh) -> np.ndarray:
        """Chart coordinates of the crossings (generated meshes only)."""
        p = mesh.positions[mesh.edges[self.edges]]
        return p[:, 0] + self.t[:, None] * (p[:, 1] - p[:, 0])


def trace_level_set(mesh: TriangleMesh, u, c: float) -> list[LevelCurve]:
    """Marching-triangles contour ``u = c``.

    Values at vertices within ``1e-12 osc(u)`` of ``c`` trigger a nudge of
    ``c`` by ``1e-9 osc(u)``.  Curves are closed on closed meshes and may
    end on the boundary otherwise.
    """
    u = np.asarray(u, dtype=float)
    lo, hi = u.min(), u.max()
    if not lo <= c <= hi:
        return []
    osc = hi - lo
    while np.any(np.abs(u - c) <= 1e-12 * osc):
        c += 1e-9 * osc
    i, j = mesh.edges.T
    s = u - c
    cross = (s[i] * s[j]) < 0
    if not cross.any():
        return []
    te = mesh.tri_edges
    hit = cross[te]
    tris = np.flatnonzero(hit.any(axis=1))
    # each crossing triangle links its two crossing edges
    links: dict[int, list[int]] = {}
    for t in tris:
        e1, e2 = te[t][hit[t]]
        links.setdefault(int(e1), []).append(int(e2))
        links.setdefault(int(e2), []).append(int(e1))
    param = np.zeros(len(s[i]))
    param[cross] = s[i][cross] / (s[i][cross] - s[j][cross])
    seen: set[int] = set()
    curves = []
    starts = [e for e, nb in links.items() if len(nb) == 1] + list(links)
    for start in starts:
        if start in seen:
            continue
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [e for e in links[cur] if e != prev and e not in seen]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            chain.append(cur)
            seen.add(cur)
        closed = len(links[start]) == 2 and start in links[chain[-1]] and len(chain) > 2
        idx = np.array(chain)
        curves.append(LevelCurve(idx, param[idx], closed))
    return curves


def hausdorff_to_vertices(mesh: TriangleMesh, curves: list[LevelCurve], vertices) -> float:
    """Two-sided Hausdorff distance between level-set crossings and a vertex set.

    Distances are measured in the edge graph, with each crossing point
    inserted as an extra node on its edge.  This is an upper bound for the
    intrinsic distance.
    """
    vertices = np.asarray(vertices)
    e = np.concatenate([c.edges for c in curves])
    t = np.concatenate([c.t for c in curves])
    n, k = mesh.n_vertices, len(e)
    a, b = mesh.edges[e].T
    ln = mesh.edge_lengths[e]
    cross = n + np.arange(k)
    i = np.concatenate([mesh.edges[:, 0], cross, cross])
    j = np.concatenate([mesh.edges[:, 1], a, b])
    w = np.concatenate([mesh.edge_lengths, t * ln, (1 - t) * ln])
    # zero-length links would vanish from a sparse matrix
    w = np.maximum(w, 1e-300)
    g = sp.coo_matrix((np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
                      shape=(n + k, n + k)).tocsr()
    to_set = dijkstra(g, indices=vertices, min_only=True)[cross]
    back = dijkstra(g, indices=cross, min_only=True)[vertices]
    return float(max(to_set.max(), back.max()))


def _ccw_next(mesh: TriangleMesh) -> dict:
    """``table[v][a] = b``: ``b`` follows ``a`` counterclockwise around ``v``."""
    table = _rotation_cache.get(mesh)
    if table is None:
        table = {}
        for a, b, c in mesh.triangles.tolist():
            table.setdefault(a, {})[b] = c
            table.setdefault(b, {})[c] = a
            table.setdefault(c, {})[a] = b
        _rotation_cache[mesh] = table
    return table


def _right_wing(table, v, incoming, outgoing):
    """Neighbours of ``v`` strictly right of the path in -> v -> out."""
    cw = {y: x for x, y in table[v].items()}
    wing, x = [], cw.get(outgoing)
    guard = 0
    while x != incoming:
        if x is None:
            raise InvalidInput(f"path vertex {v} has an open vertex star")
        wing.append(x)
        x = cw.get(x)
        guard += 1
        if guard > 10_000:
            raise InvalidInput("corrupt vertex star")
    return wing


def mandelstam_coordinate(mesh: TriangleMesh, omega: EdgeDifferential, base: int,
                          target: int, path) -> complex:
    """Integral of ``w`` from ``base`` to ``target`` along a vertex path.

    The real part telescopes along the path edges.  The imaginary part is
    the flux across the path, collected on the dual path running just to
    its right; it changes only by periods when the path is deformed.
    """
    path = [int(v) for v in path]
    if len(path) < 1 or path[0] != base or path[-1] != target:
        raise InvalidInput("path must run from base to target")
    if len(path) == 1:
        return 0j
    try:
        along = omega.oriented(mesh, path[:-1], path[1:])
    except InvalidInput as exc:
        raise InvalidInput("disconnected path") from exc
    table = _ccw_next(mesh)
    closed = path[0] == path[-1]
    flux = 0.0
    stops = range(0, len(path) - 1) if closed else range(1, len(path) - 1)
    for k in stops:
        v = path[k]
        incoming = path[k - 1] if k > 0 else path[-2]
        outgoing = path[k + 1]
        wing = _right_wing(table, v, incoming, outgoing)
        if wing:
            flux += omega.oriented(mesh, [v] * len(wing), wing).imag.sum()
    return complex(along.real.sum(), flux)


def vertex_link(mesh: TriangleMesh, v: int) -> list[int]:
    """Neighbours of an interior vertex in counterclockwise order."""
    ccw = _ccw_next(mesh)[v]
    start = next(iter(ccw))
    ring, x = [start], ccw[start]
    while x != start:
        ring.append(x)
        x = ccw[x]
    return ring
