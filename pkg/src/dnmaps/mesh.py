"""Piecewise-flat triangulated surfaces with at most one boundary circle.

A surface is stored intrinsically: oriented triangles plus one length per
edge.  Generated surfaces additionally remember the planar (or periodic)
chart their flat part was triangulated in, together with the recipe that
produced them, so that handles can be attached later by re-triangulating
around the excision holes.

Boundary loops run with the surface on their left, so that the pair
(outer normal, boundary tangent) is positively oriented.  On a disk this is
the counterclockwise direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.spatial import Delaunay

from .errors import GeometryError, InvalidConfig, InvalidInput

MIN_ANGLE_DEG = 1.0
# radial / tangential spacing of the rings next to a boundary; tuned so the
# discrete DN symbol tracks |k| closely up to k = N/8
RADIAL_RATIO = 0.85
# growth rate of the local spacing away from a hole rim
GRADING = 0.2
DEFAULT_RIM = 48


@dataclass(frozen=True)
class HandleSpec:
    """A flat cylinder joining two excision holes of radius ``eps``."""

    site_a: tuple[float, float]
    site_b: tuple[float, float]
    eps: float
    cyl_len: float
    n_rim: int = DEFAULT_RIM

    @property
    def rim_edge(self) -> float:
        return 2.0 * self.eps * math.sin(math.pi / self.n_rim)

    @property
    def circumference(self) -> float:
        return self.n_rim * self.rim_edge

    @property
    def modulus(self) -> float:
        """Flat-cylinder modulus height / circumference."""
        return self.cyl_len / self.circumference


@dataclass(frozen=True)
class SurfaceRecipe:
    """Everything needed to rebuild a generated surface from scratch.

    ``kind`` is ``"disk"`` (``radius`` is the disk radius, ``resolution`` the
    number of rings) or ``"torus"`` (unit flat torus, ``radius`` is the hole
    radius, ``resolution`` the lattice column count).
    """

    kind: str
    n_boundary: int
    radius: float
    resolution: int
    handles: tuple[HandleSpec, ...] = ()

    @property
    def genus(self) -> int:
        return (1 if self.kind == "torus" else 0) + len(self.handles)


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Oriented triangulated surface with an edge-length metric.

    ``triangles`` are vertex triples in the surface orientation, ``edges``
    are sorted vertex pairs with matching ``edge_lengths``.  ``tags`` maps a
    triangle index to a region label.  ``positions`` (chart coordinates, NaN
    off the flat part) and ``recipe`` are only present on generated meshes.
    """

    n_vertices: int
    triangles: np.ndarray
    edges: np.ndarray
    edge_lengths: np.ndarray
    boundary_loop: np.ndarray
    tags: dict = field(default_factory=dict)
    name: str = "mesh"
    positions: np.ndarray | None = None
    recipe: SurfaceRecipe | None = None

    @classmethod
    def from_corner_lengths(cls, n_vertices, triangles, corner_lengths,
                            boundary_loop, tags=None, check=True, **kw):
        """Build a mesh from per-triangle lengths.

        ``corner_lengths[t, k]`` is the length of the side of triangle ``t``
        opposite its ``k``-th corner.  Shared edges must agree.
        """
        triangles = np.asarray(triangles, dtype=np.int64)
        corner_lengths = np.asarray(corner_lengths, dtype=float)
        pairs = np.stack([triangles[:, [1, 2]], triangles[:, [2, 0]],
                          triangles[:, [0, 1]]], axis=1).reshape(-1, 2)
        pairs = np.sort(pairs, axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        flat = corner_lengths.reshape(-1)
        lengths = np.zeros(len(edges))
        lengths[inverse] = flat
        if np.any(np.abs(lengths[inverse] - flat) > 1e-9 * np.maximum(flat, 1e-300)):
            raise GeometryError("inconsistent lengths on a shared edge")
        mesh = cls(n_vertices=int(n_vertices), triangles=triangles, edges=edges,
                   edge_lengths=lengths,
                   boundary_loop=np.asarray(boundary_loop, dtype=np.int64),
                   tags=dict(tags or {}), **kw)
        if check:
            mesh.validate()
        return mesh

    def with_lengths(self, edge_lengths, name=None) -> "TriangleMesh":
        """Same combinatorics, new metric; the chart is dropped."""
        mesh = replace(self, edge_lengths=np.asarray(edge_lengths, dtype=float),
                       positions=None, recipe=None, name=name or self.name)
        mesh.validate()
        return mesh

    # -- derived combinatorics -------------------------------------------
    @cached_property
    def tri_edges(self) -> np.ndarray:
        """(F, 3) edge index of the side opposite each corner."""
        t = self.triangles
        a = np.concatenate([t[:, 1], t[:, 2], t[:, 0]])
        b = np.concatenate([t[:, 2], t[:, 0], t[:, 1]])
        return self.edge_ids(a, b).reshape(3, -1).T

    @cached_property
    def _edge_lookup(self) -> sp.csr_matrix:
        e = self.edges
        ids = np.arange(1, len(e) + 1)
        m = sp.coo_matrix((np.concatenate([ids, ids]),
                           (np.concatenate([e[:, 0], e[:, 1]]),
                            np.concatenate([e[:, 1], e[:, 0]]))),
                          shape=(self.n_vertices, self.n_vertices))
        return m.tocsr()

    def edge_ids(self, a, b) -> np.ndarray:
        """Edge indices of vertex pairs; raises if a pair is not an edge."""
        a = np.atleast_1d(np.asarray(a, dtype=np.int64))
        b = np.atleast_1d(np.asarray(b, dtype=np.int64))
        ids = np.asarray(self._edge_lookup[a, b]).ravel() - 1
        if np.any(ids < 0):
            raise InvalidInput("vertex pair is not an edge of the mesh")
        return ids

    @cached_property
    def corner_lengths(self) -> np.ndarray:
        return self.edge_lengths[self.tri_edges]

    @cached_property
    def areas(self) -> np.ndarray:
        return _heron(self.corner_lengths)

    @cached_property
    def cotangents(self) -> np.ndarray:
        """(F, 3) cotangent of each corner angle, from the law of cosines."""
        l2 = self.corner_lengths ** 2
        num = np.stack([l2[:, 1] + l2[:, 2] - l2[:, 0],
                        l2[:, 2] + l2[:, 0] - l2[:, 1],
                        l2[:, 0] + l2[:, 1] - l2[:, 2]], axis=1)
        return num / (4.0 * self.areas[:, None])

    @cached_property
    def angles(self) -> np.ndarray:
        return np.arctan2(1.0, self.cotangents) % np.pi

    @cached_property
    def edge_triangle_count(self) -> np.ndarray:
        return np.bincount(self.tri_edges.ravel(), minlength=len(self.edges))

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def is_closed(self) -> bool:
        return len(self.boundary_loop) == 0

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles

    @cached_property
    def boundary_edge_lengths(self) -> np.ndarray:
        b = self.boundary_loop
        return self.edge_lengths[self.edge_ids(b, np.roll(b, -1))]

    @property
    def boundary_length(self) -> float:
        return float(self.boundary_edge_lengths.sum())

    @cached_property
    def interior_vertices(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary_loop] = False
        return np.flatnonzero(mask)

    def tagged(self, tag: str) -> np.ndarray:
        return np.array(sorted(t for t, name in self.tags.items() if name == tag),
                        dtype=np.int64)

    @property
    def max_edge_length(self) -> float:
        return float(self.edge_lengths.max())

    # -- validation -------------------------------------------------------
    def validate(self, uniform_boundary: bool = True) -> None:
        """Check every mesh invariant; raise GeometryError on violation."""
        t = self.triangles
        if t.ndim != 2 or t.shape[1] != 3 or t.min() < 0 or t.max() >= self.n_vertices:
            raise GeometryError("malformed triangle array")
        used = np.zeros(self.n_vertices, dtype=bool)
        used[t.ravel()] = True
        if not used.all():
            raise GeometryError(f"{(~used).sum()} vertices belong to no triangle")
        if np.any(self.edge_lengths <= 0) or not np.all(np.isfinite(self.edge_lengths)):
            raise GeometryError("edge lengths must be positive and finite")
        l = np.sort(self.corner_lengths, axis=1)
        if np.any(l[:, 2] >= l[:, 0] + l[:, 1]):
            raise GeometryError("triangle inequality violated")
        min_angle = np.degrees(self.angles.min())
        if min_angle < MIN_ANGLE_DEG:
            raise GeometryError(f"degenerate triangle: min angle {min_angle:.3g} deg")

        counts = self.edge_triangle_count
        if counts.max() > 2:
            raise GeometryError("non-manifold edge")
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        code = directed[:, 0] * self.n_vertices + directed[:, 1]
        if len(np.unique(code)) != len(code):
            raise GeometryError("inconsistent triangle orientation")

        bnd = np.flatnonzero(counts == 1)
        if len(self.boundary_loop) == 0:
            if len(bnd):
                raise GeometryError("closed mesh has boundary edges")
        else:
            self._check_boundary(directed, code, bnd, uniform_boundary)
        chi = self.euler_characteristic
        twice_genus = 2 - (0 if self.is_closed else 1) - chi
        if twice_genus < 0 or twice_genus % 2:
            raise GeometryError(f"Euler characteristic {chi} inconsistent with one boundary")

    def _check_boundary(self, directed, code, bnd, uniform):
        b = self.boundary_loop
        if len(np.unique(b)) != len(b) or len(b) < 3:
            raise GeometryError("boundary loop must be a simple cycle")
        if len(bnd) != len(b):
            raise GeometryError("boundary must be a single cycle")
        want = b * self.n_vertices + np.roll(b, -1)
        if not np.isin(want, code).all():
            raise GeometryError("boundary loop does not follow the boundary edges "
                                "with the surface on its left")
        ids = self.edge_ids(b, np.roll(b, -1))
        if set(ids.tolist()) != set(bnd.tolist()):
            raise GeometryError("boundary loop misses boundary edges")
        if uniform:
            lb = self.edge_lengths[ids]
            if np.ptp(lb) > 1e-12 * lb.mean():
                raise GeometryError("boundary spacing is not uniform")


def _heron(l):
    a, b, c = np.sort(l, axis=1)[:, ::-1].T
    # Kahan's stable form, a >= b >= c
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(prod, 0.0))


def euler_genus(mesh: TriangleMesh) -> int:
    """Genus from the Euler characteristic and the number of boundary loops."""
    b = 0 if mesh.is_closed else 1
    return (2 - b - mesh.euler_characteristic) // 2


@dataclass(frozen=True, eq=False)
class Involution:
    """Self-inverse vertex permutation of a closed mesh."""

    vertex_map: np.ndarray

    def __call__(self, v):
        return self.vertex_map[v]

    @cached_property
    def fixed_points(self) -> np.ndarray:
        return np.flatnonzero(self.vertex_map == np.arange(len(self.vertex_map)))

    def edge_map(self, mesh: TriangleMesh) -> np.ndarray:
        """Index of the image of every edge."""
        e = self.vertex_map[mesh.edges]
        return mesh.edge_ids(e[:, 0], e[:, 1])

    def check(self, mesh: TriangleMesh) -> None:
        tau = self.vertex_map
        if len(tau) != mesh.n_vertices or not np.array_equal(tau[tau], np.arange(len(tau))):
            raise GeometryError("involution is not a self-inverse permutation")
        try:
            image = self.edge_map(mesh)
        except InvalidInput as exc:
            raise GeometryError("involution does not map edges to edges") from exc
        if not np.array_equal(mesh.edge_lengths[image], mesh.edge_lengths):
            raise GeometryError("involution does not preserve edge lengths")
        n = mesh.n_vertices
        mirrored = _canonical(tau[mesh.triangles][:, ::-1], n)
        if not np.isin(mirrored, _canonical(mesh.triangles, n)).all():
            raise GeometryError("involution does not reverse orientation")


def _canonical(tris, n):
    """Rotation-invariant integer code of oriented triangles."""
    r = np.argmin(tris, axis=1)[:, None]
    rolled = np.take_along_axis(tris, (r + np.arange(3)) % 3, axis=1)
    return (rolled[:, 0] * n + rolled[:, 1]) * n + rolled[:, 2]


# ---------------------------------------------------------------------------
# generators


def make_flat_disk(n_boundary: int, n_rings: int | None = None,
                   radius: float = 1.0) -> TriangleMesh:
    """Planar disk triangulated on concentric rings.

    Rings are equally spaced in radius; each carries about
    ``n_boundary * r / radius`` vertices so that the tangential spacing stays
    close to the boundary spacing.  ``n_rings=None`` picks the ring count
    that makes the radial spacing ``RADIAL_RATIO`` times the boundary
    spacing.
    """
    if n_rings is None:
        n_rings = max(2, round(n_boundary / (2 * math.pi * RADIAL_RATIO)))
    if n_boundary < 8 or n_rings < 2 or not radius > 0:
        raise InvalidConfig("need n_boundary >= 8, n_rings >= 2, radius > 0")
    return build_surface(SurfaceRecipe("disk", int(n_boundary), float(radius), int(n_rings)))


def make_torus_with_hole(n: int, hole_radius: float,
                         n_boundary: int | None = None) -> TriangleMesh:
    """Unit flat torus with a regular polygonal hole centred at (1/2, 1/2).

    The flat part is a periodic Delaunay triangulation of a hexagonal
    lattice with ``n`` columns, refined around the hole.  The hole polygon
    has ``n_boundary`` vertices (default: matched to the lattice spacing).
    """
    if n < 4 or not 0 < hole_radius < 0.5:
        raise InvalidConfig("need n >= 4 and 0 < hole_radius < 0.5")
    if n_boundary is None:
        n_boundary = max(8, 2 * round(math.pi * hole_radius * n))
    if n_boundary < 8:
        raise InvalidConfig("n_boundary must be >= 8")
    return build_surface(SurfaceRecipe("torus", int(n_boundary), float(hole_radius), int(n)))


def attach_handle(mesh: TriangleMesh, site_a: int, site_b: int, eps: float,
                  cyl_len: float, n_rim: int = DEFAULT_RIM) -> TriangleMesh:
    """Cut eps-holes at two interior vertices and join them by a flat cylinder.

    The cylinder has circumference ``n_rim * 2 eps sin(pi / n_rim)`` (the rim
    polygon perimeter, about ``2 pi eps``) and height ``cyl_len``; its
    triangles are tagged ``handle-cylinder-<k>``.  The flat part is
    re-triangulated from the generator recipe, which leaves the boundary
    loop and its neighbourhood untouched.
    """
    if mesh.recipe is None or mesh.positions is None:
        raise InvalidInput("attach_handle needs a generated mesh carrying its chart")
    if not (eps > 0 and cyl_len > 0):
        raise InvalidConfig("eps and cyl_len must be positive")
    sites = []
    for s in (site_a, site_b):
        if s in set(mesh.boundary_loop.tolist()):
            raise InvalidInput(f"site {s} is a boundary vertex")
        p = mesh.positions[s]
        if not np.all(np.isfinite(p)):
            raise InvalidInput(f"site {s} is not on the flat part of the surface")
        sites.append((float(p[0]), float(p[1])))
    recipe = mesh.recipe
    handle = HandleSpec(sites[0], sites[1], float(eps), float(cyl_len), int(n_rim))
    return build_surface(replace(recipe, handles=recipe.handles + (handle,)))


def nearest_vertex(mesh: TriangleMesh, point) -> int:
    """Chart vertex closest to ``point`` (periodic distance on the torus)."""
    if mesh.positions is None:
        raise InvalidInput("mesh has no chart")
    d = mesh.positions - np.asarray(point, dtype=float)
    if mesh.recipe is not None and mesh.recipe.kind == "torus":
        d -= np.round(d)
    dist = np.hypot(d[:, 0], d[:, 1])
    return int(np.nanargmin(dist))


def schottky_double(mesh: TriangleMesh) -> tuple[TriangleMesh, Involution]:
    """Glue the mesh to its orientation-reversed copy along the boundary.

    Vertex ``v`` of the original keeps its id; its mirror image is
    ``V + j`` for the ``j``-th interior vertex.  Mirror triangles carry the
    original tag with a ``~mirror`` suffix.
    """
    if mesh.is_closed:
        raise InvalidInput("schottky_double needs a mesh with boundary")
    n = mesh.n_vertices
    interior = mesh.interior_vertices
    tau = np.arange(n + len(interior))
    tau[interior] = n + np.arange(len(interior))
    tau[n + np.arange(len(interior))] = interior
    mirror = tau[mesh.triangles][:, ::-1]
    triangles = np.vstack([mesh.triangles, mirror])
    corner = np.vstack([mesh.corner_lengths, mesh.corner_lengths[:, ::-1]])
    f = mesh.n_triangles
    tags = dict(mesh.tags)
    tags.update({f + t: f"{name}~mirror" for t, name in mesh.tags.items()})
    double = TriangleMesh.from_corner_lengths(
        len(tau), triangles, corner, np.zeros(0, dtype=np.int64), tags,
        name=f"double({mesh.name})")
    inv = Involution(tau)
    inv.check(double)
    return double, inv


def scale_conformal(mesh: TriangleMesh, factor_at_vertices) -> TriangleMesh:
    """Multiply each edge length by the geometric mean of its endpoint factors."""
    phi = np.asarray(factor_at_vertices, dtype=float)
    if phi.shape != (mesh.n_vertices,):
        raise InvalidInput("need one factor per vertex")
    if np.any(~(phi > 0)):
        raise InvalidInput("conformal factors must be positive")
    e = mesh.edges
    lengths = mesh.edge_lengths * np.sqrt(phi[e[:, 0]] * phi[e[:, 1]])
    return mesh.with_lengths(lengths, name=f"scaled({mesh.name})")


# ---------------------------------------------------------------------------
# construction internals


@dataclass
class _Hole:
    center: np.ndarray
    rim: np.ndarray          # point indices, in angular (ccw) order
    ring1: np.ndarray        # point indices of the first ring outside the rim
    exclusion: float         # background points closer than this are dropped


def _zone(center, r0, n0, s_out, phase=0.0, reverse=False):
    """Rings around a hole of radius r0 with n0 rim vertices, graded out to
    spacing s_out.  Returns (list of ring point arrays, zone radius)."""
    s0 = 2 * math.pi * r0 / n0

    def spacing(r):
        if s0 <= s_out:
            return min(s_out, s0 + GRADING * (r - r0))
        return max(s_out, s0 - GRADING * (r - r0))

    sign = -1.0 if reverse else 1.0
    rings = []
    r, m, ph = r0, n0, phase
    while True:
        th = ph + sign * 2 * math.pi * np.arange(m) / m
        rings.append(np.column_stack([center[0] + r * np.cos(th),
                                      center[1] + r * np.sin(th)]))
        if len(rings) >= 3 and spacing(r) == s_out and r - r0 >= 2 * s_out:
            break
        r += RADIAL_RATIO * spacing(r)
        m = n0 if len(rings) == 1 else max(6, round(2 * math.pi * r / spacing(r)))
        ph = ph + math.pi / m if len(rings) % 2 else phase
    return rings, r


def _disk_background(recipe):
    n, radius, nr = recipe.n_boundary, recipe.radius, recipe.resolution
    pts = [radius * np.column_stack([np.cos(2 * np.pi * np.arange(n) / n),
                                     np.sin(2 * np.pi * np.arange(n) / n)])]
    for i in range(nr - 1, 0, -1):
        r = radius * i / nr
        m = max(6, round(n * i / nr))
        ph = np.pi / m if (nr - i) % 2 else 0.0
        th = ph + 2 * np.pi * np.arange(m) / m
        pts.append(np.column_stack([r * np.cos(th), r * np.sin(th)]))
    pts.append(np.zeros((1, 2)))
    return np.vstack(pts)


def _torus_lattice(n):
    # even row count keeps the stagger periodic
    rows = 2 * max(2, round(n / math.sqrt(3)))
    i, j = np.meshgrid(np.arange(n), np.arange(rows), indexing="xy")
    x = (i + 0.5 * (j % 2)) / n + 0.123 / n
    y = j / rows + 0.377 / rows
    return np.column_stack([x.ravel() % 1.0, y.ravel() % 1.0])


def _delta(p, q, periodic):
    d = p - q
    if periodic:
        d = d - np.round(d)
    return d


def build_surface(recipe: SurfaceRecipe) -> TriangleMesh:
    """Triangulate the surface described by ``recipe``."""
    periodic = recipe.kind == "torus"
    if recipe.kind not in ("disk", "torus"):
        raise InvalidConfig(f"unknown surface kind {recipe.kind!r}")
    n_b = recipe.n_boundary

    if periodic:
        s_bg = 1.0 / recipe.resolution
        center = np.array([0.5, 0.5])
        rings, zr = _zone(center, recipe.radius, n_b, s_bg, reverse=True)
        if zr + s_bg >= 0.5:
            raise InvalidConfig("hole too large: its refinement zone reaches the torus seams")
        points = [np.vstack(rings)]
        rim_count = len(rings[0])
        zones = [(center, zr + 0.7 * s_bg)]
        background = _torus_lattice(recipe.resolution)
    else:
        s_bg = 2 * math.pi * recipe.radius / n_b
        background = _disk_background(recipe)
        points = [background[:n_b]]
        background = background[n_b:]
        zones = []
    layer = recipe.radius / recipe.resolution if not periodic else s_bg

    holes: list[_Hole] = []
    offset = sum(len(p) for p in points)
    for k, h in enumerate(recipe.handles):
        for site in (h.site_a, h.site_b):
            c = np.asarray(site, dtype=float)
            _check_site(recipe, c, h, k, zones, s_bg, layer, periodic)
            rings, zr = _zone(c, h.eps, h.n_rim, s_bg)
            if periodic:
                rings = [r % 1.0 for r in rings]
            if not periodic and np.hypot(*c) + zr + s_bg > recipe.radius - 2 * layer:
                raise GeometryError(f"handle {k}: refinement zone reaches the boundary layer")
            for zc, zrad in zones:
                if np.hypot(*_delta(c, zc, periodic)) < zr + zrad + 0.5 * s_bg:
                    raise GeometryError(f"handle {k}: refinement zones overlap")
            zones.append((c, zr + 0.7 * s_bg))
            rim = offset + np.arange(h.n_rim)
            holes.append(_Hole(c, rim, offset + h.n_rim + np.arange(len(rings[1])),
                               zr + 0.7 * s_bg))
            points.append(np.vstack(rings))
            offset += sum(len(r) for r in rings)

    keep = np.ones(len(background), dtype=bool)
    for c, zrad in zones:
        d = _delta(background, c, periodic)
        keep &= np.hypot(d[:, 0], d[:, 1]) >= zrad
    points.append(background[keep])
    P = np.vstack(points)

    tri, coords = _triangulate(P, periodic)
    rim_sets = [np.arange(rim_count)] if periodic else []
    rim_sets += [h.rim for h in holes]
    inside = np.zeros(len(tri), dtype=bool)
    for rim in rim_sets:
        inside |= np.isin(tri, rim).all(axis=1)
    tri, coords = tri[~inside], coords[~inside]
    if len(np.unique(tri)) != len(P):
        raise GeometryError("triangulation left isolated vertices")

    corner = np.stack([np.linalg.norm(coords[:, 2] - coords[:, 1], axis=1),
                       np.linalg.norm(coords[:, 0] - coords[:, 2], axis=1),
                       np.linalg.norm(coords[:, 1] - coords[:, 0], axis=1)], axis=1)
    tags = {}
    for k, h in enumerate(recipe.handles):
        for hole in holes[2 * k: 2 * k + 2]:
            band = np.concatenate([hole.rim, hole.ring1])
            for t in np.flatnonzero(np.isin(tri, band).all(axis=1)):
                tags[int(t)] = f"handle-collar-{k}"

    positions = np.vstack([P, np.full((0, 2), np.nan)])
    n_vertices = len(P)
    cyl_tris, cyl_corner = [], []
    for k, h in enumerate(recipe.handles):
        a_rim, b_rim = holes[2 * k].rim, holes[2 * k + 1].rim
        t, c, n_new = _cylinder(a_rim, b_rim, h, n_vertices)
        base = len(tri) + sum(len(x) for x in cyl_tris)
        tags.update({base + i: f"handle-cylinder-{k}" for i in range(len(t))})
        cyl_tris.append(t)
        cyl_corner.append(c)
        n_vertices += n_new
    if cyl_tris:
        tri = np.vstack([tri] + cyl_tris)
        corner = np.vstack([corner] + cyl_corner)
        positions = np.vstack([P, np.full((n_vertices - len(P), 2), np.nan)])

    name = recipe.kind if not recipe.handles else f"{recipe.kind}+{len(recipe.handles)}h"
    mesh = TriangleMesh.from_corner_lengths(
        n_vertices, tri, corner, np.arange(n_b), tags,
        name=name, positions=positions, recipe=recipe)
    if euler_genus(mesh) != recipe.genus:
        raise GeometryError(f"built genus {euler_genus(mesh)}, expected {recipe.genus}")
    return mesh


def _check_site(recipe, c, h, k, zones, s_bg, layer, periodic):
    d_ab = np.hypot(*_delta(np.asarray(h.site_a), np.asarray(h.site_b), periodic))
    if d_ab < 4 * h.eps:
        raise GeometryError(f"handle {k}: sites closer than 4 eps")
    if periodic:
        to_bnd = np.hypot(*_delta(c, np.array([0.5, 0.5]), True)) - recipe.radius
    else:
        to_bnd = recipe.radius - np.hypot(*c)
    if to_bnd < 2 * h.eps:
        raise GeometryError(f"handle {k}: site closer than 2 eps to the boundary")


def _triangulate(P, periodic):
    """Delaunay triangles (vertex indices, corner coordinates), ccw oriented."""
    n = len(P)
    if periodic:
        shifts = np.array([(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)], float)
        allp = np.vstack([P + s for s in shifts])
        simp = Delaunay(allp).simplices
        cent = allp[simp].mean(axis=1)
        keep = np.all((cent >= 0.0) & (cent < 1.0), axis=1)
        simp = simp[keep]
        coords = allp[simp]
        tri = simp % n
    else:
        tri = Delaunay(P).simplices.astype(np.int64)
        coords = P[tri]
    u = coords[:, 1] - coords[:, 0]
    v = coords[:, 2] - coords[:, 0]
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    flip = cross < 0
    tri[flip] = tri[flip][:, ::-1]
    coords[flip] = coords[flip][:, ::-1]
    keep = np.abs(cross) > 1e-14 * np.max(np.abs(cross))
    return tri[keep].astype(np.int64), coords[keep]


def _cylinder(a_rim, b_rim, h: HandleSpec, first_new):
    """Product triangulation of the flat cylinder between two rims.

    Rim B is attached with reversed angular order, which keeps the glued
    surface consistently oriented.
    """
    n = h.n_rim
    s = h.rim_edge
    rows = max(1, round(h.cyl_len / s))
    dh = h.cyl_len / rows
    grid = np.empty((rows + 1, n), dtype=np.int64)
    grid[0] = a_rim
    grid[rows] = b_rim[(-np.arange(n)) % n]
    grid[1:rows] = first_new + np.arange((rows - 1) * n).reshape(rows - 1, n)
    j = np.arange(n)
    jn = (j + 1) % n
    tris, corner = [], []
    diag = math.hypot(s, dh)
    for r in range(rows):
        lo, hi = grid[r], grid[r + 1]
        tris.append(np.column_stack([lo[j], lo[jn], hi[jn]]))
        corner.append(np.tile([dh, diag, s], (n, 1)))
        tris.append(np.column_stack([lo[j], hi[jn], hi[j]]))
        corner.append(np.tile([s, dh, diag], (n, 1)))
    return np.vstack(tris), np.vstack(corner), (rows - 1) * n
