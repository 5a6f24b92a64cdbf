"""Conforming triangular meshes of rectangles and their face skeleton."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError, MeshFormatError, TopologyError

DIRICHLET = "D"
NEUMANN = "N"
DIAGONALS = ("alternate", "right", "left")
MAGIC = "UIPDG-MESH 1"


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangles are stored counterclockwise with one subdomain tag each.

    ``boundary_markers`` overrides the default Dirichlet marker on selected
    boundary edges; keys are sorted vertex pairs.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    subdomains: np.ndarray
    bbox: tuple
    diagonal: str = "alternate"
    boundary_markers: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices, float).reshape(-1, 2))
        object.__setattr__(self, "triangles", _frozen(self.triangles, np.int64).reshape(-1, 3))
        object.__setattr__(self, "subdomains", _frozen(self.subdomains, np.int64).reshape(-1))
        object.__setattr__(self, "bbox", tuple(float(b) for b in self.bbox))
        markers = {tuple(sorted(map(int, k))): v for k, v in dict(self.boundary_markers).items()}
        object.__setattr__(self, "boundary_markers", markers)
        self.validate()

    def validate(self):
        nv = len(self.vertices)
        t = self.triangles
        if len(self.subdomains) != len(t):
            raise ValueError("one subdomain tag per triangle required")
        if t.size and (t.min() < 0 or t.max() >= nv):
            raise ValueError("vertex index out of range")
        if np.any(self.subdomains < 0):
            raise ValueError("subdomain ids must be non-negative")
        if np.any(self.signed_areas <= 0):
            raise ValueError(f"non-positive area in triangle {int(np.argmin(self.signed_areas))}")
        keys = np.sort(t, axis=1)
        if len(np.unique(keys, axis=0)) != len(t):
            raise ValueError("duplicate triangles")
        for v in self.boundary_markers.values():
            if v not in (DIRICHLET, NEUMANN):
                raise ValueError(f"unknown boundary marker {v!r}")

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.subdomains, other.subdomains)
            and self.bbox == other.bbox
            and self.boundary_markers == other.boundary_markers
        )

    __hash__ = None

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return np.abs(self.signed_areas)

    @cached_property
    def diameters(self) -> np.ndarray:
        """h_E, the longest edge of each triangle."""
        p = self.vertices[self.triangles]
        edges = p[:, [1, 2, 0]] - p
        return np.linalg.norm(edges, axis=2).max(axis=1)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def domain_area(self) -> float:
        x0, x1, y0, y1 = self.bbox
        return (x1 - x0) * (y1 - y0)


def quadrant_tags(points, bbox) -> np.ndarray:
    """Subdomain ids of the four-quadrant partition.

    1 lower-left, 2 lower-right, 3 upper-right, 4 upper-left.
    """
    x0, x1, y0, y1 = bbox
    mx, my = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    p = np.atleast_2d(points)
    right = p[:, 0] > mx
    up = p[:, 1] > my
    return np.where(up, np.where(right, 3, 4), np.where(right, 2, 1))


def generate_structured(n: int, domain=(0.0, 1.0, 0.0, 1.0), diagonal="alternate", partition=None) -> Mesh:
    """Split an n x n grid of squares over ``domain`` into 2n^2 triangles.

    ``domain`` is (x0, x1, y0, y1).  ``diagonal`` selects the split rule:
    ``"alternate"`` flips the diagonal in a checkerboard pattern, ``"right"``
    and ``"left"`` use one direction everywhere.  With ``partition="quadrant"``
    the triangles are tagged by the quadrant of their centroid, which needs an
    even ``n`` so that the quadrant lines are mesh lines.
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    if diagonal not in DIAGONALS:
        raise ConfigurationError(f"unknown diagonal rule {diagonal!r}")
    if partition not in (None, "quadrant"):
        raise ConfigurationError(f"unknown partition {partition!r}")
    if partition == "quadrant" and n % 2:
        raise ConfigurationError("quadrant partition requires an even number of subdivisions")
    x0, x1, y0, y1 = map(float, domain)
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j = i.ravel(), j.ravel()
    v00 = j * (n + 1) + i
    v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
    if diagonal == "alternate":
        rising = (i + j) % 2 == 0
    else:
        rising = np.full(i.shape, diagonal == "right")
    # rising diagonal v00-v11, falling diagonal v10-v01
    t1 = np.where(rising[:, None], np.column_stack([v00, v10, v11]), np.column_stack([v00, v10, v01]))
    t2 = np.where(rising[:, None], np.column_stack([v00, v11, v01]), np.column_stack([v10, v11, v01]))
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    tris[0::2], tris[1::2] = t1, t2
    bbox = (x0, x1, y0, y1)
    if partition == "quadrant":
        tags = quadrant_tags(verts[tris].mean(axis=1), bbox)
    else:
        tags = np.zeros(len(tris), dtype=np.int64)
    return Mesh(verts, tris, tags, bbox, diagonal)


def _edge_index(tris):
    """Unique sorted edges and, per triangle, the index of local edge (v_j, v_j+1)."""
    local = tris[:, [[0, 1], [1, 2], [2, 0]]]  # (nt, 3, 2)
    keys = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse = np.unique(keys, axis=0, return_inverse=True)
    return edges, inverse.reshape(-1, 3)


def refine_uniform(mesh: Mesh) -> Mesh:
    """Red refinement: each triangle is split into four by its edge midpoints."""
    t = mesh.triangles
    edges, e_of_t = _edge_index(t)
    nv = len(mesh.vertices)
    mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    verts = np.vstack([mesh.vertices, mids])
    m01, m12, m20 = (nv + e_of_t[:, c] for c in range(3))
    v0, v1, v2 = t[:, 0], t[:, 1], t[:, 2]
    children = np.stack(
        [
            np.column_stack([v0, m01, m20]),
            np.column_stack([m01, v1, m12]),
            np.column_stack([m20, m12, v2]),
            np.column_stack([m01, m12, m20]),
        ],
        axis=1,
    ).reshape(-1, 3)
    tags = np.repeat(mesh.subdomains, 4)
    markers = {}
    if mesh.boundary_markers:
        lookup = {tuple(e): nv + n for n, e in enumerate(edges.tolist())}
        for (a, b), m in mesh.boundary_markers.items():
            mid = lookup.get((a, b))
            if mid is not None:
                markers[(a, mid)] = m
                markers[(b, mid)] = m
    return Mesh(verts, children, tags, mesh.bbox, mesh.diagonal, markers)


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Faces of a mesh, each stored once.

    ``left`` is the lower-indexed incident element and ``normals`` point out
    of it; ``right`` is -1 on boundary faces.  ``(va, vb)`` runs
    counterclockwise around the left element.  ``elem_faces[e, j]`` is the
    face of local edge (v_j, v_{j+1}) of element e.
    """

    va: np.ndarray
    vb: np.ndarray
    left: np.ndarray
    right: np.ndarray
    normals: np.ndarray
    lengths: np.ndarray
    markers: np.ndarray
    elem_faces: np.ndarray

    @property
    def n_faces(self) -> int:
        return len(self.left)

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(self.right >= 0)

    @property
    def boundary(self) -> np.ndarray:
        return np.flatnonzero(self.right < 0)

    @property
    def is_boundary(self) -> np.ndarray:
        return self.right < 0

    @property
    def dirichlet(self) -> np.ndarray:
        return np.flatnonzero((self.right < 0) & (self.markers == DIRICHLET))

    @property
    def neumann(self) -> np.ndarray:
        return np.flatnonzero((self.right < 0) & (self.markers == NEUMANN))


def build_skeleton(mesh: Mesh) -> Skeleton:
    t = mesh.triangles
    nt = len(t)
    edges, e_of_t = _edge_index(t)
    nf = len(edges)
    flat = e_of_t.ravel()
    counts = np.bincount(flat, minlength=nf)
    if np.any(counts > 2):
        raise TopologyError(f"edge {edges[np.argmax(counts)].tolist()} has more than two incident elements")
    owner = np.repeat(np.arange(nt), 3)
    local = np.tile(np.arange(3), nt)
    # element order within each face: lowest element first
    order = np.lexsort((owner, flat))
    first = np.ones(len(order), dtype=bool)
    first[1:] = flat[order][1:] != flat[order][:-1]
    left = np.empty(nf, dtype=np.int64)
    left_local = np.empty(nf, dtype=np.int64)
    right = np.full(nf, -1, dtype=np.int64)
    left[flat[order][first]] = owner[order][first]
    left_local[flat[order][first]] = local[order][first]
    right[flat[order][~first]] = owner[order][~first]

    va = t[left, left_local]
    vb = t[left, (left_local + 1) % 3]
    d = mesh.vertices[vb] - mesh.vertices[va]
    lengths = np.linalg.norm(d, axis=1)
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]

    markers = np.full(nf, "", dtype="<U1")
    markers[right < 0] = DIRICHLET
    if mesh.boundary_markers:
        index = {tuple(e): n for n, e in enumerate(edges.tolist())}
        for key, m in mesh.boundary_markers.items():
            f = index.get(key)
            if f is None or right[f] >= 0:
                raise TopologyError(f"boundary marker on {key} does not match a boundary edge")
            markers[f] = m
    out = Skeleton(va, vb, left, right, normals, lengths, markers, e_of_t)
    for name in ("va", "vb", "left", "right", "normals", "lengths", "markers", "elem_faces"):
        getattr(out, name).setflags(write=False)
    return out


# -- text format ------------------------------------------------------------------


def write_mesh(mesh: Mesh, path) -> None:
    lines = [MAGIC, f"# diagonal {mesh.diagonal}", "# bbox " + " ".join(repr(b) for b in mesh.bbox)]
    lines.append(f"{len(mesh.vertices)} {mesh.n_elements}")
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"{a} {b} {c} {s}" for (a, b, c), s in zip(mesh.triangles.tolist(), mesh.subdomains.tolist())]
    lines += [f"B {a} {b} {m}" for (a, b), m in sorted(mesh.boundary_markers.items())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    """Parse the v1 text format; clockwise triangles are reoriented."""
    raw = Path(path).read_text().splitlines()
    rows = []
    meta = {}
    for no, line in enumerate(raw, start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            parts = s[1:].split()
            if parts:
                meta[parts[0]] = parts[1:]
            continue
        rows.append((no, s))
    if not rows or rows[0][1] != MAGIC:
        raise MeshFormatError(f"expected header {MAGIC!r}", rows[0][0] if rows else 1)
    try:
        no, s = rows[1]
        nv, nt = (int(v) for v in s.split())
    except (IndexError, ValueError):
        raise MeshFormatError("expected '<nv> <nt>'", rows[1][0] if len(rows) > 1 else None) from None
    if len(rows) < 2 + nv + nt:
        raise MeshFormatError(f"expected {nv} vertices and {nt} triangles", rows[-1][0])
    verts = np.empty((nv, 2))
    for i, (no, s) in enumerate(rows[2 : 2 + nv]):
        try:
            x, y = (float(v) for v in s.split())
        except ValueError:
            raise MeshFormatError("expected 'x y'", no) from None
        verts[i] = x, y
    tris = np.empty((nt, 3), dtype=np.int64)
    tags = np.empty(nt, dtype=np.int64)
    for i, (no, s) in enumerate(rows[2 + nv : 2 + nv + nt]):
        try:
            a, b, c, sub = (int(v) for v in s.split())
        except ValueError:
            raise MeshFormatError("expected 'v0 v1 v2 subdomain'", no) from None
        for v in (a, b, c):
            if not 0 <= v < nv:
                raise MeshFormatError(f"vertex index {v} out of range (nv={nv})", no)
        if sub < 0:
            raise MeshFormatError("negative subdomain id", no)
        p = verts[[a, b, c]]
        area = 0.5 * ((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0]))
        if area == 0.0:
            raise MeshFormatError("degenerate triangle", no)
        tris[i] = (a, b, c) if area > 0 else (a, c, b)
        tags[i] = sub
    markers = {}
    for no, s in rows[2 + nv + nt :]:
        parts = s.split()
        if len(parts) != 4 or parts[0] != "B" or parts[3] not in (DIRICHLET, NEUMANN):
            raise MeshFormatError("expected 'B vA vB D|N'", no)
        a, b = int(parts[1]), int(parts[2])
        if not (0 <= a < nv and 0 <= b < nv):
            raise MeshFormatError("vertex index out of range", no)
        markers[(a, b)] = parts[3]
    if "bbox" in meta:
        bbox = tuple(float(v) for v in meta["bbox"])
    else:
        bbox = (verts[:, 0].min(), verts[:, 0].max(), verts[:, 1].min(), verts[:, 1].max())
    diagonal = meta.get("diagonal", ["alternate"])[0]
    return Mesh(verts, tris, tags, bbox, diagonal, markers)
