"""Line-oriented text format for meshes and the fields living on them.

::

    SURF 1
    V <count>
    T <count>            then one "i j k" line per triangle
    E <count>            then one "i j length" line per edge
    B <count>            then the boundary vertex ids, one per line
    TAG <triangle> <label>
    VF <name> <count>    then "index value" lines
    ED <name> <count>    then "index re im" lines

Reals are written with 17 significant digits so a round trip is exact.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidInput
from .harmonic import EdgeDifferential
from .mesh import TriangleMesh


def _g(x) -> str:
    return f"{float(x):.17g}"


def write_mesh(path, mesh: TriangleMesh, vertex_fields=None, edge_fields=None) -> None:
    """Write ``mesh`` plus optional named vertex functions and edge differentials."""
    out = ["SURF 1", f"V {mesh.n_vertices}", f"T {mesh.n_triangles}"]
    out += [f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    out.append(f"E {mesh.n_edges}")
    out += [f"{a} {b} {_g(l)}" for (a, b), l in zip(mesh.edges.tolist(), mesh.edge_lengths)]
    out.append(f"B {len(mesh.boundary_loop)}")
    out += [str(v) for v in mesh.boundary_loop.tolist()]
    out += [f"TAG {t} {label}" for t, label in sorted(mesh.tags.items())]
    for name, values in (vertex_fields or {}).items():
        values = np.asarray(values, dtype=float)
        if values.shape != (mesh.n_vertices,):
            raise InvalidInput(f"vertex field {name!r} has the wrong length")
        out.append(f"VF {name} {len(values)}")
        out += [f"{i} {_g(v)}" for i, v in enumerate(values)]
    for name, omega in (edge_fields or {}).items():
        values = np.asarray(getattr(omega, "values", omega), dtype=complex)
        if values.shape != (mesh.n_edges,):
            raise InvalidInput(f"edge field {name!r} has the wrong length")
        out.append(f"ED {name} {len(values)}")
        out += [f"{i} {_g(v.real)} {_g(v.imag)}" for i, v in enumerate(values)]
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def read_mesh(path, check: bool = True):
    """Return ``(mesh, vertex_fields, edge_fields)``."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "SURF 1":
        raise InvalidInput("not a SURF 1 file")
    pos = 1
    n_vertices = None
    triangles = edges = lengths = boundary = None
    tags, vfields, efields = {}, {}, {}

    def block(count):
        nonlocal pos
        rows = lines[pos:pos + count]
        if len(rows) != count:
            raise InvalidInput("truncated section")
        pos += count
        return [r.split() for r in rows]

    while pos < len(lines):
        head = lines[pos].split()
        pos += 1
        key = head[0]
        if key == "V":
            n_vertices = int(head[1])
        elif key == "T":
            triangles = np.array(block(int(head[1])), dtype=np.int64).reshape(-1, 3)
        elif key == "E":
            rows = block(int(head[1]))
            edges = np.array([r[:2] for r in rows], dtype=np.int64).reshape(-1, 2)
            lengths = np.array([r[2] for r in rows], dtype=float)
        elif key == "B":
            boundary = np.array([r[0] for r in block(int(head[1]))], dtype=np.int64)
        elif key == "TAG":
            tags[int(head[1])] = " ".join(head[2:])
        elif key == "VF":
            rows = block(int(head[2]))
            vfields[head[1]] = np.array([r[1] for r in rows], dtype=float)
        elif key == "ED":
            rows = block(int(head[2]))
            vals = np.array([[r[1], r[2] if len(r) > 2 else 0.0] for r in rows], dtype=float)
            efields[head[1]] = EdgeDifferential(vals[:, 0] + 1j * vals[:, 1])
        else:
            raise InvalidInput(f"unknown section {key!r}")
    if n_vertices is None or triangles is None or edges is None or boundary is None:
        raise InvalidInput("missing V, T, E or B section")
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    if np.any(edges[:, 0] >= edges[:, 1]) or np.any(order != np.arange(len(edges))):
        raise InvalidInput("edges must be sorted pairs in lexicographic order")
    mesh = TriangleMesh(n_vertices=n_vertices, triangles=triangles, edges=edges,
                        edge_lengths=lengths, boundary_loop=boundary, tags=tags,
                        name=str(path))
    ref = TriangleMesh.from_corner_lengths(n_vertices, triangles,
                                           np.zeros(triangles.shape), boundary, check=False)
    if not np.array_equal(ref.edges, edges):
        raise InvalidInput("edge list does not match the triangles")
    if check:
        mesh.validate(uniform_boundary=len(boundary) > 0)
    return mesh, vfields, efields
