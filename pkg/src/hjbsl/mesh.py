"""Simplicial meshes of polyhedral approximation domains and P1 interpolation.

Boundary vertices of the built-in meshers lie exactly on the domain
boundary; the polygon-to-domain Hausdorff gap is O(dx^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from .errors import BadParams, LocationFailure, OutsideDomain, RegularityViolation
from .geometry import TOL_BOUNDARY, Disk, Domain, Interval, RectWithHole, as_point

BARY_TOL = 1e-10

TAG_INTERIOR = 0
TAG_OBLIQUE = 1
TAG_DIRICHLET = 2


@dataclass
class Location:
    """Containing simplex and barycentric coordinates of a query point."""

    simplex: int
    bary: np.ndarray


@dataclass
class Mesh:
    vertices: np.ndarray          # (n, dim)
    simplices: np.ndarray         # (m, dim+1) vertex indices
    boundary_tags: np.ndarray     # (n,) TAG_* per vertex
    mesh_size: float
    shape_constant: float
    domain: Domain | None = None
    _bary_mats: np.ndarray = field(default=None, repr=False)
    _cells: dict = field(default=None, repr=False)
    _cell_size: float = field(default=None, repr=False)
    _boundary_edges: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        if self.vertices.ndim == 1:
            self.vertices = self.vertices[:, None]
        self.simplices = np.asarray(self.simplices, dtype=int)
        self.boundary_tags = np.asarray(self.boundary_tags, dtype=int)
        self._build_bary_mats()
        self._build_cells()
        self._build_boundary_edges()

    # -- construction helpers -------------------------------------------------

    def _build_bary_mats(self):
        d = self.dim
        verts = self.vertices[self.simplices]          # (m, d+1, d)
        mats = np.concatenate([verts.transpose(0, 2, 1),
                               np.ones((len(self.simplices), 1, d + 1))], axis=1)
        self._bary_mats = np.linalg.inv(mats)          # (m, d+1, d+1)

    def _build_cells(self):
        h = max(2.0 * self.mesh_size, 1e-12)
        self._cell_size = h
        cells: dict = {}
        verts = self.vertices[self.simplices]
        lo = np.floor(verts.min(axis=1) / h).astype(int)
        hi = np.floor(verts.max(axis=1) / h).astype(int)
        for t in range(len(self.simplices)):
            ranges = [range(lo[t, k], hi[t, k] + 1) for k in range(self.dim)]
            idx = [()]
            for r in ranges:
                idx = [c + (i,) for c in idx for i in r]
            for c in idx:
                cells.setdefault(c, []).append(t)
        self._cells = cells

    def _build_boundary_edges(self):
        faces: dict = {}
        d = self.dim
        for t, simp in enumerate(self.simplices):
            for k in range(d + 1):
                f = tuple(sorted(v for j, v in enumerate(simp) if j != k))
                faces[f] = faces.get(f, 0) + 1
        self._boundary_edges = np.array(
            [f for f, cnt in faces.items() if cnt == 1], dtype=int)

    # -- queries --------------------------------------------------------------

    def _candidates(self, x):
        c = tuple(int(math.floor(xi / self._cell_size)) for xi in x)
        return self._cells.get(c, None)

    def try_locate(self, x) -> Location | None:
        x = as_point(x)
        rhs = np.append(x, 1.0)
        cand = self._candidates(x)
        pools = [cand] if cand is not None else []
        pools.append(range(len(self.simplices)))
        seen_fallback = False
        for pool in pools:
            if seen_fallback:
                break
            seen_fallback = pool is pools[-1]
            best = None
            for t in sorted(pool):
                lam = self._bary_mats[t] @ rhs
                if lam.min() >= -BARY_TOL:
                    best = t, lam
                    break
            if best is not None:
                t, lam = best
                lam = np.clip(lam, 0.0, None)
                lam /= lam.sum()
                return Location(simplex=t, bary=lam)
        return None

    def locate(self, x) -> Location:
        loc = self.try_locate(x)
        if loc is None:
            raise LocationFailure(f"point {x!r} not inside the mesh")
        return loc

    def project(self, x) -> np.ndarray:
        """Projection onto the polyhedral domain (identity on it)."""
        x = as_point(x)
        if self.domain is not None and self.domain.signed_distance(x) > TOL_BOUNDARY:
            raise OutsideDomain(f"point {x!r} outside the closed domain")
        if self.try_locate(x) is not None:
            return x
        if self.dim == 1:
            return np.clip(x, self.vertices.min(), self.vertices.max())
        best, bp = np.inf, None
        for e in self._boundary_edges:
            a, b = self.vertices[e[0]], self.vertices[e[1]]
            ab = b - a
            t = float(np.dot(x - a, ab) / np.dot(ab, ab))
            q = a + min(max(t, 0.0), 1.0) * ab
            d = float(np.linalg.norm(x - q))
            if d < best:
                best, bp = d, q
        return bp

    def interpolation_weights(self, x):
        """Vertex indices and P1 weights at p_dx(x); weights are a convex
        combination summing to one."""
        loc = self.locate(self.project(x))
        return self.simplices[loc.simplex], loc.bary

    def interpolate(self, nodal, x) -> float:
        nodal = np.asarray(nodal, dtype=float)
        verts, w = self.interpolation_weights(x)
        return float(np.dot(nodal[verts], w))

    def barycenters(self) -> np.ndarray:
        return self.vertices[self.simplices].mean(axis=1)

    def simplex_measures(self) -> np.ndarray:
        verts = self.vertices[self.simplices]
        if self.dim == 1:
            return np.abs(verts[:, 1, 0] - verts[:, 0, 0])
        a = verts[:, 1] - verts[:, 0]
        b = verts[:, 2] - verts[:, 0]
        return 0.5 * np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])


def project_to_mesh(mesh: Mesh, x) -> np.ndarray:
    return mesh.project(x)


def locate(mesh: Mesh, x) -> Location:
    return mesh.locate(x)


def interpolate(mesh: Mesh, nodal, x) -> float:
    return mesh.interpolate(nodal, x)


def _mesh_metrics(vertices, simplices):
    verts = vertices[simplices]
    m, k, d = verts.shape
    diam = np.zeros(m)
    for i in range(k):
        for j in range(i + 1, k):
            diam = np.maximum(diam, np.linalg.norm(verts[:, i] - verts[:, j], axis=1))
    mesh_size = float(diam.max())
    if d == 1:
        inradius = 0.5 * np.abs(verts[:, 1, 0] - verts[:, 0, 0])
    else:
        a = np.linalg.norm(verts[:, 1] - verts[:, 0], axis=1)
        b = np.linalg.norm(verts[:, 2] - verts[:, 1], axis=1)
        c = np.linalg.norm(verts[:, 0] - verts[:, 2], axis=1)
        e1 = verts[:, 1] - verts[:, 0]
        e2 = verts[:, 2] - verts[:, 0]
        area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        inradius = 2.0 * area / (a + b + c)
    shape = float(min((inradius / mesh_size).min(), (2.0 * mesh_size / diam).min(), 0.999))
    return mesh_size, shape


def _tags_from_domain(domain: Domain, vertices) -> np.ndarray:
    tags = np.full(len(vertices), TAG_INTERIOR, dtype=int)
    for i, v in enumerate(vertices):
        if abs(domain.signed_distance(v)) <= TOL_BOUNDARY:
            kind, _ = domain.boundary_kind(v)
            tags[i] = TAG_DIRICHLET if kind == "dirichlet" else TAG_OBLIQUE
    return tags


def build_interval_mesh(a: float, b: float, dx: float) -> Mesh:
    """Uniform grid on [a, b] with spacing at most dx."""
    if not (a < b) or not (0 < dx < b - a):
        raise BadParams("require a < b and 0 < dx < b - a")
    n_cells = int(math.ceil((b - a) / dx - 1e-12))
    xs = np.linspace(a, b, n_cells + 1)
    simplices = np.column_stack([np.arange(n_cells), np.arange(1, n_cells + 1)])
    domain = Interval(a, b)
    mesh_size, shape = _mesh_metrics(xs[:, None], simplices)
    return Mesh(vertices=xs[:, None], simplices=simplices,
                boundary_tags=_tags_from_domain(domain, xs[:, None]),
                mesh_size=mesh_size, shape_constant=shape, domain=domain)


def build_disk_mesh(center, radius: float, dx: float,
                    min_shape_constant: float = 0.05) -> Mesh:
    """Concentric-ring point set triangulated by Delaunay.

    All boundary vertices are placed exactly on the circle.
    """
    if not (0 < dx < radius):
        raise BadParams("require 0 < dx < radius")
    center = as_point(center)
    # slight radial oversampling keeps ring cells close to isotropic
    n_r = max(2, int(math.ceil(1.2 * radius / dx)))
    dr = radius / n_r
    pts = [center]
    for j in range(1, n_r + 1):
        n_j = max(6, int(round(2.0 * math.pi * j)))
        offset = 0.5 * (j % 2) * 2.0 * math.pi / n_j
        th = offset + 2.0 * math.pi * np.arange(n_j) / n_j
        ring = center + j * dr * np.column_stack([np.cos(th), np.sin(th)])
        pts.append(ring if ring.ndim == 2 else ring[None, :])
    vertices = np.vstack([np.atleast_2d(p) for p in pts])
    tri = Delaunay(vertices)
    simplices = _drop_degenerate(vertices, tri.simplices)
    domain = Disk(center, radius)
    mesh_size, shape = _mesh_metrics(vertices, simplices)
    if shape < min_shape_constant:
        raise RegularityViolation(f"shape constant {shape:.3g} below "
                                  f"{min_shape_constant:.3g}")
    return Mesh(vertices=vertices, simplices=simplices,
                boundary_tags=_tags_from_domain(domain, vertices),
                mesh_size=mesh_size, shape_constant=shape, domain=domain)


def build_rect_with_hole_mesh(bounds, hole_center, hole_radius, dx: float,
                              min_shape_constant: float = 0.01,
                              **domain_kwargs) -> Mesh:
    """Structured grid plus a snapped ring on the hole circle, Delaunay
    triangulated with hole triangles removed."""
    domain = RectWithHole(bounds=bounds, hole_center=hole_center,
                          hole_radius=hole_radius, **domain_kwargs)
    xmin, xmax, ymin, ymax = domain.bounds
    if not (0 < dx < min(xmax - xmin, ymax - ymin)):
        raise BadParams("dx out of range for the rectangle")
    hx = (xmax - xmin) / int(math.ceil((xmax - xmin) / dx - 1e-12))
    hy = (ymax - ymin) / int(math.ceil((ymax - ymin) / dx - 1e-12))
    h = min(hx, hy)
    xs = np.linspace(xmin, xmax, int(round((xmax - xmin) / hx)) + 1)
    ys = np.linspace(ymin, ymax, int(round((ymax - ymin) / hy)) + 1)
    gx, gy = np.meshgrid(xs, ys)
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    hc, hr = domain.hole_center, domain.hole_radius
    keep = np.linalg.norm(grid - hc, axis=1) > hr + 0.45 * h
    n_h = max(12, int(round(2.0 * math.pi * hr / h)))
    th = 2.0 * math.pi * np.arange(n_h) / n_h
    ring = hc + hr * np.column_stack([np.cos(th), np.sin(th)])
    vertices = np.vstack([grid[keep], ring])
    tri = Delaunay(vertices)
    simplices = _drop_degenerate(vertices, tri.simplices)
    bary = vertices[simplices].mean(axis=1)
    simplices = simplices[np.linalg.norm(bary - hc, axis=1) > hr]
    mesh_size, shape = _mesh_metrics(vertices, simplices)
    if shape < min_shape_constant:
        raise RegularityViolation(f"shape constant {shape:.3g} below "
                                  f"{min_shape_constant:.3g}")
    return Mesh(vertices=vertices, simplices=simplices,
                boundary_tags=_tags_from_domain(domain, vertices),
                mesh_size=mesh_size, shape_constant=shape, domain=domain)


def _drop_degenerate(vertices, simplices, tol: float = 1e-13):
    verts = vertices[simplices]
    e1 = verts[:, 1] - verts[:, 0]
    e2 = verts[:, 2] - verts[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    return simplices[area > tol]


def write_mesh(mesh: Mesh, path):
    """Line-oriented text format: header, vertices with tags, simplices."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"hjbmesh 1 {mesh.dim} {mesh.n_vertices} {len(mesh.simplices)}\n")
        for v, tag in zip(mesh.vertices, mesh.boundary_tags):
            coords = " ".join(repr(float(c)) for c in v)
            fh.write(f"{coords} {tag}\n")
        for s in mesh.simplices:
            fh.write(" ".join(str(int(i)) for i in s) + "\n")


def read_mesh(path, domain: Domain | None = None) -> Mesh:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0] != "hjbmesh" or header[1] != "1":
            raise BadParams(f"bad mesh header in {path}")
        dim, nv, ns = int(header[2]), int(header[3]), int(header[4])
        vertices = np.zeros((nv, dim))
        tags = np.zeros(nv, dtype=int)
        for i in range(nv):
            parts = fh.readline().split()
            vertices[i] = [float(p) for p in parts[:dim]]
            tags[i] = int(parts[dim])
        simplices = np.zeros((ns, dim + 1), dtype=int)
        for t in range(ns):
            simplices[t] = [int(p) for p in fh.readline().split()]
    mesh_size, shape = _mesh_metrics(vertices, simplices)
    return Mesh(vertices=vertices, simplices=simplices, boundary_tags=tags,
                mesh_size=mesh_size, shape_constant=shape, domain=domain)
