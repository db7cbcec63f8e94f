"""Antipodally symmetric meshes of S^2 and equispaced grids on S^1."""
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ParameterError

MAX_LEVEL = 8
GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class SphereMesh:
    """Triangulated unit sphere.

    ``antipode[i]`` is the index of ``-vertices[i]``; ``quad_weights`` are the
    spherical-excess areas of the faces, in the same order as ``faces``.
    """

    vertices: np.ndarray
    faces: np.ndarray
    antipode: np.ndarray
    quad_weights: np.ndarray
    level: int = 0
    _adjacency: list = field(default=None, repr=False, compare=False)

    @property
    def centroids(self):
        c = self.vertices[self.faces].sum(axis=1)
        return c / np.linalg.norm(c, axis=1, keepdims=True)

    @property
    def edge_lengths(self):
        """Mean chord length of each face's three edges."""
        tri = self.vertices[self.faces]
        d = (np.linalg.norm(tri[:, 0] - tri[:, 1], axis=1)
             + np.linalg.norm(tri[:, 1] - tri[:, 2], axis=1)
             + np.linalg.norm(tri[:, 2] - tri[:, 0], axis=1))
        return d / 3.0

    def edges(self):
        """Unique undirected edges as an (E, 2) array, lower index first."""
        f = self.faces
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def vertex_faces(self):
        """For each vertex, the list of incident face indices."""
        if self._adjacency is None:
            adj = [[] for _ in range(len(self.vertices))]
            for fi, tri in enumerate(self.faces):
                for v in tri:
                    adj[v].append(fi)
            object.__setattr__(self, "_adjacency", adj)
        return self._adjacency

    def to_off(self):
        lines = ["OFF", f"{len(self.vertices)} {len(self.faces)} 0"]
        lines += [" ".join(repr(float(c)) for c in v) for v in self.vertices]
        lines += ["3 " + " ".join(str(int(i)) for i in f) for f in self.faces]
        return "\n".join(lines) + "\n"

    def write_off(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_off())


def spherical_triangle_areas(a, b, c):
    """Spherical excess of unit-vector triangles (Van Oosterom-Strackee)."""
    triple = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    denom = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) \
        + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(triple, denom)


def _icosahedron():
    half = [(0.0, 1.0, GOLDEN), (0.0, -1.0, GOLDEN), (1.0, GOLDEN, 0.0),
            (-1.0, GOLDEN, 0.0), (GOLDEN, 0.0, 1.0), (GOLDEN, 0.0, -1.0)]
    # vertex 2k+1 is the antipode of vertex 2k
    V = np.array([s * np.array(p) for p in half for s in (1.0, -1.0)])
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    edge = min(np.linalg.norm(V[i] - V[j]) for i, j in combinations(range(12), 2))
    faces = []
    for i, j, k in combinations(range(12), 3):
        if all(abs(np.linalg.norm(V[p] - V[q]) - edge) < 1e-9
               for p, q in ((i, j), (j, k), (i, k))):
            faces.append(_outward(V, (i, j, k)))
    antipode = np.arange(12) ^ 1
    return V, np.array(faces, dtype=np.int64), antipode


def _outward(V, tri):
    i, j, k = tri
    if np.dot(V[i], np.cross(V[j], V[k])) < 0:
        return (i, k, j)
    return (i, j, k)


def icosphere(level):
    """Icosahedron subdivided ``level`` times, projected to the unit sphere.

    Each subdivision splits every triangle into four via normalized edge
    midpoints.  The antipodal involution is carried along exactly: the
    midpoint of edge (a, b) is antipodal to the midpoint of edge
    (antipode[a], antipode[b]).
    """
    if not isinstance(level, (int, np.integer)) or not 0 <= level <= MAX_LEVEL:
        raise ParameterError(f"icosphere level must be an integer in [0, {MAX_LEVEL}]")
    V, F, anti = _icosahedron()
    for _ in range(level):
        V, F, anti = _subdivide(V, F, anti)
    areas = spherical_triangle_areas(V[F[:, 0]], V[F[:, 1]], V[F[:, 2]])
    return SphereMesh(vertices=V, faces=F, antipode=anti, quad_weights=areas, level=int(level))


def _subdivide(V, F, anti):
    e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
    e.sort(axis=1)
    edges, inverse = np.unique(e, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    nv = len(V)
    mid = V[edges[:, 0]] + V[edges[:, 1]]
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    newV = np.vstack([V, mid])

    # antipode of a midpoint: look up the edge joining the two antipodal endpoints
    anti_edges = np.sort(anti[edges], axis=1)
    key = {(int(a), int(b)): i for i, (a, b) in enumerate(edges)}
    mid_anti = np.array([key[(int(a), int(b))] for a, b in anti_edges]) + nv
    newAnti = np.concatenate([anti, mid_anti])

    nf = len(F)
    m01 = inverse[:nf] + nv
    m12 = inverse[nf:2 * nf] + nv
    m20 = inverse[2 * nf:] + nv
    a, b, c = F[:, 0], F[:, 1], F[:, 2]
    newF = np.concatenate([
        np.stack([a, m01, m20], axis=1),
        np.stack([m01, b, m12], axis=1),
        np.stack([m20, m12, c], axis=1),
        np.stack([m01, m12, m20], axis=1),
    ])
    return newV, newF, newAnti


def circle_grid(m):
    """``m`` equispaced points on S^1; point k + m/2 is the antipode of point k."""
    if not isinstance(m, (int, np.integer)) or m < 8 or m % 2:
        raise ParameterError("circle grid size must be an even integer >= 8")
    half = m // 2
    theta = 2.0 * np.pi * np.arange(half) / m
    upper = np.column_stack([np.cos(theta), np.sin(theta)])
    # second half is the exact negation of the first
    return np.vstack([upper, -upper])


def surface_integral(mesh, f):
    """Centroid-rule integral of a scalar field over the sphere.

    ``f`` takes an (N, 3) array of unit vectors and returns N values.  The
    reduction runs in fixed face order so the result is reproducible.
    """
    vals = np.asarray(f(mesh.centroids), dtype=float)
    return float(np.sum(vals * mesh.quad_weights))


def tangent_frame(p):
    """Orthonormal (e_u, e_v) at each row of ``p`` with e_u x e_v = p."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    axis = np.zeros_like(p)
    idx = np.argmin(np.abs(p), axis=1)
    axis[np.arange(len(p)), idx] = 1.0
    eu = np.cross(axis, p)
    eu /= np.linalg.norm(eu, axis=1, keepdims=True)
    ev = np.cross(p, eu)
    return eu, ev


def random_sphere_points(n, rng, dim=3):
    x = rng.standard_normal((n, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)
