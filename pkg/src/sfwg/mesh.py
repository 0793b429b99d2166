"""Convex polygonal meshes of planar domains.

A :class:`Mesh` stores vertices and counter-clockwise element cycles and
derives the edge topology on construction. Global edges are stored with
their vertex pair sorted ascending; that order fixes the parameterization
of edge unknowns shared by the two incident elements.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

CONVEXITY_TOL = 1e-14
PARALLEL_TOL = 1e-12
DUPLICATE_TOL = 1e-12


class MeshError(ValueError):
    """Invalid mesh topology, geometry or file contents."""


@dataclass(frozen=True)
class ElementGeom:
    centroid: np.ndarray       # (2,)
    area: float
    diameter: float
    lengths: np.ndarray        # (m,)
    normals: np.ndarray        # (m, 2) unit outward
    tangents: np.ndarray       # (m, 2) unit, counter-clockwise direction


@dataclass(frozen=True)
class ShapeReport:
    m_max: int
    alpha: float
    theta_min: float
    theta_max: float
    parallel_edges: np.ndarray  # (n_elements,) bool


class Mesh:
    """Immutable mesh of strictly convex, counter-clockwise polygons.

    Attributes
    ----------
    vertices : (nv, 2) float array
    elements : list of int arrays, one vertex cycle per element
    edges : (ne, 2) int array, vertex pairs with ``edges[:, 0] < edges[:, 1]``
    edge_elements : (ne, 2) int array, ``[left, right]``; ``right == -1`` on
        the boundary
    element_edges : list of int arrays; local edge ``i`` runs from local
        vertex ``i`` to ``i + 1`` and maps to a global edge index
    """

    def __init__(self, vertices, elements, *, check=True):
        vertices = np.array(vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError("vertices must have shape (n, 2)")
        if not np.all(np.isfinite(vertices)):
            raise MeshError("non-finite vertex coordinate")
        elements = [np.array(c, dtype=np.int64) for c in elements]
        nv = len(vertices)
        for e, cyc in enumerate(elements):
            if cyc.ndim != 1 or len(cyc) < 3:
                raise MeshError(f"element {e} has fewer than 3 vertices")
            if cyc.min() < 0 or cyc.max() >= nv:
                raise MeshError(f"element {e} references a dangling vertex index")
            if len(set(cyc.tolist())) != len(cyc):
                raise MeshError(f"element {e} repeats a vertex")
        vertices.setflags(write=False)
        self.vertices = vertices
        self.elements = elements
        if check:
            self._check_convex()
            self._check_duplicates()
        self._build_edges()

    # -- construction helpers ------------------------------------------------

    def _check_convex(self):
        for e, cyc in enumerate(self.elements):
            p = self.vertices[cyc]
            d = np.roll(p, -1, axis=0) - p
            cross = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
            if np.any(cross <= CONVEXITY_TOL):
                raise MeshError(
                    f"element {e} is not strictly convex and counter-clockwise "
                    f"(min turn cross product {cross.min():.3e})"
                )

    def _check_duplicates(self):
        pairs = cKDTree(self.vertices).query_pairs(DUPLICATE_TOL, p=np.inf)
        if pairs:
            a, b = min(pairs)
            raise MeshError(f"duplicate vertices {a} and {b}")

    def _build_edges(self):
        nv = len(self.vertices)
        sizes = np.array([len(c) for c in self.elements])
        owner = np.repeat(np.arange(len(self.elements)), sizes)
        a = np.concatenate(self.elements)
        b = np.concatenate([np.roll(c, -1) for c in self.elements])
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo * nv + hi
        uniq, first, inverse, counts = np.unique(
            keys, return_index=True, return_inverse=True, return_counts=True
        )
        if np.any(counts > 2):
            raise MeshError("an edge is shared by more than two elements")
        self.edges = np.stack([uniq // nv, uniq % nv], axis=1)
        left = owner[first]
        right = np.full(len(uniq), -1, dtype=np.int64)
        second = np.ones(len(keys), dtype=bool)
        second[first] = False
        right[inverse[second]] = owner[second]
        self.edge_elements = np.stack([left, right], axis=1)
        self.boundary = right < 0
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.element_edges = [inverse[offsets[e]:offsets[e + 1]] for e in range(len(sizes))]
        for arr in (self.edges, self.edge_elements, self.boundary):
            arr.setflags(write=False)

    # -- counts ----------------------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_boundary_edges(self):
        return int(self.boundary.sum())

    @cached_property
    def element_sizes(self):
        return np.array([len(c) for c in self.elements], dtype=np.int64)

    def groups(self):
        """Map edge count ``m`` to the sorted element indices with ``m`` edges."""
        return {int(m): np.flatnonzero(self.element_sizes == m) for m in np.unique(self.element_sizes)}

    # -- geometry --------------------------------------------------------------

    @cached_property
    def areas(self):
        return np.array([_shoelace(self.vertices[c]) for c in self.elements])

    @cached_property
    def centroids(self):
        return np.array([_polygon_centroid(self.vertices[c]) for c in self.elements])

    @cached_property
    def diameters(self):
        out = np.empty(self.n_elements)
        for e, c in enumerate(self.elements):
            p = self.vertices[c]
            out[e] = np.sqrt(((p[:, None, :] - p[None, :, :]) ** 2).sum(-1).max())
        return out

    @cached_property
    def h(self):
        return float(self.diameters.max())

    @cached_property
    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def geom(self, e):
        """Geometry of element ``e``."""
        p = self.vertices[self.elements[e]]
        d = np.roll(p, -1, axis=0) - p
        lengths = np.hypot(d[:, 0], d[:, 1])
        tangents = d / lengths[:, None]
        normals = np.stack([tangents[:, 1], -tangents[:, 0]], axis=1)
        return ElementGeom(
            centroid=self.centroids[e],
            area=float(self.areas[e]),
            diameter=float(self.diameters[e]),
            lengths=lengths,
            normals=normals,
            tangents=tangents,
        )

    def __repr__(self):
        return (f"Mesh(n_vertices={self.n_vertices}, n_elements={self.n_elements}, "
                f"n_edges={self.n_edges})")


def _shoelace(p):
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _polygon_centroid(p):
    x, y = p[:, 0], p[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    cr = x * y1 - x1 * y
    a = 0.5 * cr.sum()
    return np.array([((x + x1) * cr).sum(), ((y + y1) * cr).sum()]) / (6.0 * a)


# -- generators -----------------------------------------------------------------


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return int(n)


def build_uniform_triangle_mesh(n):
    """n x n squares on the unit square, each cut by its lower-left to
    upper-right diagonal."""
    n = _check_n(n)
    t = np.arange(n + 1) / n
    X, Y = np.meshgrid(t, t)
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    ll = (j * (n + 1) + i).ravel()
    lr, ul = ll + 1, ll + n + 1
    ur = ul + 1
    lower = np.stack([ll, lr, ur], axis=1)
    upper = np.stack([ll, ur, ul], axis=1)
    tris = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return Mesh(vertices, tris)


def build_uniform_quad_mesh(n):
    """n x n axis-aligned squares on the unit square."""
    n = _check_n(n)
    t = np.arange(n + 1) / n
    X, Y = np.meshgrid(t, t)
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    ll = (j * (n + 1) + i).ravel()
    quads = np.stack([ll, ll + 1, ll + n + 2, ll + n + 1], axis=1)
    return Mesh(vertices, quads)


def build_hexagon_mesh(n, ny=None, zigzag=0.25):
    """Honeycomb-like mesh of the unit square built from offset brick rows.

    Rows alternate between ``n`` full bricks and ``n - 1`` full bricks with a
    half brick at each end. Interior horizontal lines are bent into a zigzag
    of amplitude ``zigzag * dy`` so every brick becomes a strictly convex,
    centrally symmetric hexagon. Cells touching the top or bottom side are
    pentagons; half bricks are quadrilaterals.
    """
    nx = _check_n(n)
    ny = nx if ny is None else _check_n(ny)
    if ny < 2:
        raise ValueError("hexagon mesh needs at least two rows")
    if not 0 < zigzag < 0.5:
        raise ValueError("zigzag amplitude must lie in (0, 0.5)")
    hx, dy = 1.0 / nx, 1.0 / ny
    index = {}
    coords = []

    def vert(p, line):
        key = (p, line)
        if key not in index:
            y = line * dy
            if 0 < line < ny:
                # middles of the row below bulge upwards
                up_parity = 1 if (line - 1) % 2 == 0 else 0
                y += zigzag * dy * (1 if p % 2 == up_parity else -1)
            index[key] = len(coords)
            coords.append((p * hx / 2, y))
        return index[key]

    def side(lo, hi, line):
        # positions along a line spanned by one cell (boundary lines are straight)
        if line in (0, ny):
            return [lo, hi]
        return list(range(lo, hi + 1))

    elements = []
    for row in range(ny):
        if row % 2 == 0:
            spans = [(2 * i, 2 * i + 2) for i in range(nx)]
        else:
            spans = [(max(2 * i - 1, 0), min(2 * i + 1, 2 * nx)) for i in range(nx + 1)]
        for lo, hi in spans:
            bottom = [vert(p, row) for p in side(lo, hi, row)]
            top = [vert(p, row + 1) for p in side(lo, hi, row + 1)][::-1]
            elements.append(bottom + top)
    return Mesh(np.array(coords), elements)


def build_polygon_mesh(polygons):
    """Mesh from a list of vertex-coordinate polygons, merging shared vertices."""
    index = {}
    coords = []
    elements = []
    for poly in polygons:
        cyc = []
        for x, y in poly:
            key = (round(float(x), 12), round(float(y), 12))
            if key not in index:
                index[key] = len(coords)
                coords.append((float(x), float(y)))
            cyc.append(index[key])
        elements.append(cyc)
    return Mesh(np.array(coords), elements)


def regular_polygon(m, radius=0.5, center=(0.5, 0.5), phase=0.0):
    """Vertices of a regular ``m``-gon, counter-clockwise."""
    t = phase + 2 * np.pi * np.arange(m) / m
    return np.stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)], axis=1)


# -- refinement -------------------------------------------------------------------


def refine_uniform(mesh):
    """Split every triangle into four congruent children through edge midpoints."""
    if np.any(mesh.element_sizes != 3):
        raise MeshError("refine_uniform requires a mesh of triangles")
    nv = mesh.n_vertices
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, mids])
    tri = np.array(mesh.elements)
    ed = np.array(mesh.element_edges) + nv
    # local edge i joins vertex i and i+1
    m01, m12, m20 = ed[:, 0], ed[:, 1], ed[:, 2]
    v0, v1, v2 = tri[:, 0], tri[:, 1], tri[:, 2]
    children = np.stack([
        np.stack([v0, m01, m20], 1),
        np.stack([m01, v1, m12], 1),
        np.stack([m20, m12, v2], 1),
        np.stack([m01, m12, m20], 1),
    ], axis=1).reshape(-1, 3)
    return Mesh(vertices, children)


# -- shape regularity -------------------------------------------------------------


def shape_report(mesh):
    alpha = 1.0
    theta_min, theta_max = math.pi, 0.0
    parallel = np.zeros(mesh.n_elements, dtype=bool)
    for e in range(mesh.n_elements):
        g = mesh.geom(e)
        alpha = max(alpha, float(g.lengths.max() / g.lengths.min()))
        t = g.tangents
        # interior angle at the vertex between incoming edge i-1 and outgoing edge i
        prev = np.roll(t, 1, axis=0)
        cosang = np.clip(-(prev * t).sum(1), -1.0, 1.0)
        ang = np.arccos(cosang)
        theta_min = min(theta_min, float(ang.min()))
        theta_max = max(theta_max, float(ang.max()))
        cross = np.abs(t[:, None, 0] * t[None, :, 1] - t[:, None, 1] * t[None, :, 0])
        np.fill_diagonal(cross, np.inf)
        parallel[e] = bool(np.all((cross < PARALLEL_TOL).any(axis=1)))
    parallel.setflags(write=False)
    return ShapeReport(
        m_max=int(mesh.element_sizes.max()),
        alpha=alpha,
        theta_min=theta_min,
        theta_max=theta_max,
        parallel_edges=parallel,
    )


# -- polymesh v1 text format --------------------------------------------------------


def write_mesh(mesh):
    out = io.StringIO()
    out.write("polymesh 1\n")
    out.write(f"vertices {mesh.n_vertices}\n")
    for x, y in mesh.vertices:
        out.write(f"{float(x)!r} {float(y)!r}\n")
    out.write(f"elements {mesh.n_elements}\n")
    for cyc in mesh.elements:
        out.write(" ".join([str(len(cyc))] + [str(int(i)) for i in cyc]) + "\n")
    return out.getvalue()


def read_mesh(text):
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].split()
        if body:
            lines.append((lineno, body))
    it = iter(lines)

    def expect(keyword):
        try:
            lineno, tok = next(it)
        except StopIteration:
            raise MeshError(f"unexpected end of file, expected '{keyword}'") from None
        if tok[0] != keyword:
            raise MeshError(f"line {lineno}: expected '{keyword}', got '{tok[0]}'")
        return lineno, tok

    def count(lineno, tok):
        if len(tok) != 2:
            raise MeshError(f"line {lineno}: expected '{tok[0]} <count>'")
        try:
            n = int(tok[1])
        except ValueError:
            raise MeshError(f"line {lineno}: bad count '{tok[1]}'") from None
        if n < 0:
            raise MeshError(f"line {lineno}: negative count")
        return n

    lineno, tok = expect("polymesh")
    if tok[1:] != ["1"]:
        raise MeshError(f"line {lineno}: unsupported polymesh version {' '.join(tok[1:])}")
    nv = count(*expect("vertices"))
    verts = []
    for _ in range(nv):
        try:
            lineno, tok = next(it)
        except StopIteration:
            raise MeshError("unexpected end of file in vertex block") from None
        if len(tok) != 2:
            raise MeshError(f"line {lineno}: expected 'x y'")
        try:
            verts.append((float(tok[0]), float(tok[1])))
        except ValueError:
            raise MeshError(f"line {lineno}: bad coordinate") from None
    ne = count(*expect("elements"))
    elems = []
    for _ in range(ne):
        try:
            lineno, tok = next(it)
        except StopIteration:
            raise MeshError("unexpected end of file in element block") from None
        try:
            vals = [int(t) for t in tok]
        except ValueError:
            raise MeshError(f"line {lineno}: bad integer") from None
        if len(vals) < 1 or vals[0] != len(vals) - 1:
            raise MeshError(f"line {lineno}: vertex count does not match entries")
        if any(v < 0 or v >= nv for v in vals[1:]):
            raise MeshError(f"line {lineno}: dangling vertex index")
        elems.append(vals[1:])
    rest = next(it, None)
    if rest is not None:
        raise MeshError(f"line {rest[0]}: trailing content")
    return Mesh(np.array(verts).reshape(-1, 2), elems)


def load_mesh(path):
    with open(path, encoding="utf-8") as fh:
        return read_mesh(fh.read())
