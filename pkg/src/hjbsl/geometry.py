"""Bounded domains: signed distances, normals, and oblique boundary projections.

Sign convention: signed_distance is negative strictly inside the domain,
zero on the boundary, positive outside.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadParams,
    NoConvergence,
    NotOnBoundary,
    OutOfLayer,
    OutsideTube,
)

TOL_BOUNDARY = 1e-9
TOL_PROJ = 1e-12
MAX_NEWTON_ITER = 50


def as_point(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass
class ObliqueProjection:
    """Solution of x = p + d * gamma_b(p) with p on the boundary."""

    p: np.ndarray
    d: float
    residual: float
    iterations: int


class Domain:
    """Base class for bounded domains with a smooth (piecewise) boundary."""

    kind: str
    dim: int
    # Radius of the tube around the boundary where the oblique projection
    # is unique, and the layer radius where distance-to-layer is smooth.
    tube_radius: float
    layer_radius: float
    has_dirichlet: bool = False

    def signed_distance(self, x) -> float:
        raise NotImplementedError

    def outward_normal(self, p) -> np.ndarray:
        raise NotImplementedError

    def nearest_point_projection(self, x) -> np.ndarray:
        raise NotImplementedError

    def boundary_kind(self, p):
        """Condition on the boundary piece containing p: ('oblique', None)
        or ('dirichlet', value)."""
        return ("oblique", None)

    def contains(self, x, tol: float = TOL_BOUNDARY) -> bool:
        return self.signed_distance(x) <= tol

    def _check_on_boundary(self, p):
        if abs(self.signed_distance(p)) > TOL_BOUNDARY:
            raise NotOnBoundary(f"point {p!r} is not on the boundary")


class Interval(Domain):
    kind = "interval"
    dim = 1

    def __init__(self, a: float, b: float):
        if not a < b:
            raise BadParams("interval requires a < b")
        self.a = float(a)
        self.b = float(b)
        self.tube_radius = 0.5 * (b - a)
        self.layer_radius = 0.5 * (b - a)

    def signed_distance(self, x) -> float:
        x0 = float(as_point(x)[0])
        return max(self.a - x0, x0 - self.b)

    def outward_normal(self, p) -> np.ndarray:
        self._check_on_boundary(p)
        p0 = float(as_point(p)[0])
        return np.array([-1.0]) if abs(p0 - self.a) <= abs(p0 - self.b) else np.array([1.0])

    def nearest_point_projection(self, x) -> np.ndarray:
        x0 = float(as_point(x)[0])
        if abs(self.signed_distance(x)) >= self.tube_radius:
            raise OutsideTube("no unique nearest endpoint")
        return np.array([self.a]) if abs(x0 - self.a) <= abs(x0 - self.b) else np.array([self.b])


class Disk(Domain):
    kind = "disk"
    dim = 2

    def __init__(self, center=(0.0, 0.0), radius: float = 1.0,
                 tube_radius: float | None = None, layer_radius: float | None = None):
        if radius <= 0:
            raise BadParams("radius must be positive")
        self.center = as_point(center)
        self.radius = float(radius)
        self.tube_radius = 0.5 * radius if tube_radius is None else tube_radius
        self.layer_radius = 0.5 * radius if layer_radius is None else layer_radius

    def signed_distance(self, x) -> float:
        return float(np.linalg.norm(as_point(x) - self.center)) - self.radius

    def outward_normal(self, p) -> np.ndarray:
        self._check_on_boundary(p)
        return (as_point(p) - self.center) / self.radius

    def nearest_point_projection(self, x) -> np.ndarray:
        x = as_point(x)
        r = np.linalg.norm(x - self.center)
        if abs(r - self.radius) >= self.tube_radius or r == 0.0:
            raise OutsideTube("point outside the projection tube")
        return self.center + self.radius * (x - self.center) / r

    def boundary_point(self, theta: float) -> np.ndarray:
        return self.center + self.radius * np.array([math.cos(theta), math.sin(theta)])

    def boundary_angle(self, x) -> float:
        v = as_point(x) - self.center
        return math.atan2(v[1], v[0])


class RectWithHole(Domain):
    """Rectangle minus a closed disk; boundary is piecewise smooth.

    Faces are indexed 0: x=xmin, 1: x=xmax, 2: y=ymin, 3: y=ymax, 4: hole
    circle; corner ties go to the face of smaller index.  Optional Dirichlet
    bands on the left/right faces carry constant exit data.
    """

    kind = "rect_with_hole"
    dim = 2
    has_dirichlet = True

    def __init__(self, bounds=(-1.0, 1.0, -0.5, 0.5), hole_center=(-0.5, 0.0),
                 hole_radius: float = 0.2, dirichlet_half_width: float = 0.2,
                 dirichlet_values=(0.0, 0.2)):
        xmin, xmax, ymin, ymax = map(float, bounds)
        if not (xmin < xmax and ymin < ymax):
            raise BadParams("degenerate rectangle")
        hc = as_point(hole_center)
        if hole_radius <= 0 or not (
            xmin < hc[0] - hole_radius and hc[0] + hole_radius < xmax
            and ymin < hc[1] - hole_radius and hc[1] + hole_radius < ymax
        ):
            raise BadParams("hole must lie strictly inside the rectangle")
        self.bounds = (xmin, xmax, ymin, ymax)
        self.hole_center = hc
        self.hole_radius = float(hole_radius)
        self.dirichlet_half_width = float(dirichlet_half_width)
        self.dirichlet_values = tuple(dirichlet_values)
        self.tube_radius = 0.4 * hole_radius
        self.layer_radius = 0.4 * hole_radius

    def _rect_sd(self, x) -> float:
        xmin, xmax, ymin, ymax = self.bounds
        dx = max(xmin - x[0], x[0] - xmax)
        dy = max(ymin - x[1], x[1] - ymax)
        if dx <= 0.0 and dy <= 0.0:
            return max(dx, dy)
        return math.hypot(max(dx, 0.0), max(dy, 0.0))

    def _hole_sd(self, x) -> float:
        # negative inside the domain means outside the hole
        return self.hole_radius - float(np.linalg.norm(as_point(x) - self.hole_center))

    def signed_distance(self, x) -> float:
        x = as_point(x)
        return max(self._rect_sd(x), self._hole_sd(x))

    def _face_projections(self, x):
        """Candidate (distance, face_index, point) per boundary face."""
        xmin, xmax, ymin, ymax = self.bounds
        x = as_point(x)
        cands = []
        for idx, p in enumerate([
            np.array([xmin, min(max(x[1], ymin), ymax)]),
            np.array([xmax, min(max(x[1], ymin), ymax)]),
            np.array([min(max(x[0], xmin), xmax), ymin]),
            np.array([min(max(x[0], xmin), xmax), ymax]),
        ]):
            cands.append((float(np.linalg.norm(x - p)), idx, p))
        v = x - self.hole_center
        r = np.linalg.norm(v)
        if r > 0:
            p = self.hole_center + self.hole_radius * v / r
            cands.append((float(abs(r - self.hole_radius)), 4, p))
        return cands

    def nearest_face(self, x):
        cands = self._face_projections(x)
        # stable sort keeps the smaller face index on ties
        cands.sort(key=lambda c: (c[0], c[1]))
        return cands[0]

    def nearest_point_projection(self, x) -> np.ndarray:
        if abs(self.signed_distance(x)) >= self.tube_radius:
            raise OutsideTube("point outside the projection tube")
        return self.nearest_face(x)[2]

    def outward_normal(self, p) -> np.ndarray:
        self._check_on_boundary(p)
        face = self.nearest_face(p)[1]
        if face == 0:
            return np.array([-1.0, 0.0])
        if face == 1:
            return np.array([1.0, 0.0])
        if face == 2:
            return np.array([0.0, -1.0])
        if face == 3:
            return np.array([0.0, 1.0])
        v = as_point(p) - self.hole_center
        # outward from the domain points into the hole
        return -v / np.linalg.norm(v)

    def boundary_kind(self, p):
        p = as_point(p)
        xmin, xmax, _, _ = self.bounds
        hw = self.dirichlet_half_width + TOL_BOUNDARY
        if abs(p[0] - xmin) <= TOL_BOUNDARY and abs(p[1]) <= hw:
            return ("dirichlet", self.dirichlet_values[0])
        if abs(p[0] - xmax) <= TOL_BOUNDARY and abs(p[1]) <= hw:
            return ("dirichlet", self.dirichlet_values[1])
        return ("oblique", None)


class ObliqueField:
    """Unit vector field gamma_b(p) on the boundary, non-tangent to it."""

    def __call__(self, p, b) -> np.ndarray:
        raise NotImplementedError


class NormalField(ObliqueField):
    """gamma_b = outward normal (Neumann case)."""

    def __init__(self, domain: Domain):
        self.domain = domain

    def __call__(self, p, b) -> np.ndarray:
        return self.domain.outward_normal(p)


class RotatedNormalField(ObliqueField):
    """Outward normal rotated clockwise by a fixed angle (2D only)."""

    def __init__(self, domain: Domain, angle: float):
        if abs(angle) >= 0.5 * math.pi:
            raise BadParams("rotation must keep the field non-tangent")
        self.domain = domain
        self.angle = float(angle)
        c, s = math.cos(angle), math.sin(angle)
        self._rot = np.array([[c, s], [-s, c]])

    def __call__(self, p, b) -> np.ndarray:
        return self._rot @ self.domain.outward_normal(p)


class FunctionField(ObliqueField):
    """Oblique field from a user handle (p, b) -> unit vector."""

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, p, b) -> np.ndarray:
        return as_point(self.fn(p, b))


def signed_distance(domain: Domain, x) -> float:
    return domain.signed_distance(x)


def outward_normal(domain: Domain, p) -> np.ndarray:
    return domain.outward_normal(p)


def nearest_point_projection(domain: Domain, x) -> np.ndarray:
    return domain.nearest_point_projection(x)


def _check_tube(domain: Domain, x, r_max):
    r = domain.tube_radius if r_max is None else r_max
    if r is not None and not math.isinf(r) and abs(domain.signed_distance(x)) >= r:
        raise OutsideTube(f"|signed_distance|={abs(domain.signed_distance(x)):.3g} "
                          f"outside the tube of radius {r:.3g}")


def oblique_projection(domain: Domain, gamma: ObliqueField, b, x,
                       r_max: float | None = None,
                       tol: float = TOL_PROJ,
                       max_iter: int = MAX_NEWTON_ITER) -> ObliqueProjection:
    """Solve x = p + d * gamma_b(p) for p on the boundary and d algebraic.

    d > 0 strictly outside the closed domain, d = 0 on the boundary.  Pass
    r_max=math.inf to skip the tube precondition (the reflection step does
    this; large time steps can push characteristics beyond the nominal tube).
    """
    x = as_point(x)
    _check_tube(domain, x, r_max)
    if isinstance(domain, Interval):
        e = domain.a if abs(x[0] - domain.a) <= abs(x[0] - domain.b) else domain.b
        g = -1.0 if e == domain.a else 1.0
        d = (x[0] - e) / g
        return ObliqueProjection(p=np.array([e]), d=float(d), residual=0.0, iterations=0)
    if isinstance(domain, RectWithHole):
        if not isinstance(gamma, NormalField):
            raise BadParams("rect_with_hole supports the normal field only")
        return _rect_hole_normal_projection(domain, x)
    if isinstance(domain, Disk):
        if isinstance(gamma, NormalField):
            v = x - domain.center
            r = np.linalg.norm(v)
            if r == 0.0:
                raise OutsideTube("center has no radial projection")
            p = domain.center + domain.radius * v / r
            return ObliqueProjection(p=p, d=float(r - domain.radius),
                                     residual=0.0, iterations=0)
        if isinstance(gamma, RotatedNormalField):
            return _disk_rotated_projection(domain, gamma.angle, x)
        return oblique_projection_newton(domain, gamma, b, x, tol=tol, max_iter=max_iter)
    raise BadParams(f"unsupported domain kind {domain.kind!r}")


def _rect_hole_normal_projection(domain: RectWithHole, x) -> ObliqueProjection:
    """Piecewise projection along the face normals of a rect-with-hole."""
    xmin, xmax, ymin, ymax = domain.bounds
    hv = x - domain.hole_center
    hr = np.linalg.norm(hv)
    if hr < domain.hole_radius and hr > 0:
        p = domain.hole_center + domain.hole_radius * hv / hr
        return ObliqueProjection(p=p, d=float(domain.hole_radius - hr),
                                 residual=0.0, iterations=0)
    # signed per-face excess; positive means beyond the face
    excess = [xmin - x[0], x[0] - xmax, ymin - x[1], x[1] - ymax]
    outside = [i for i, e in enumerate(excess) if e > 0.0]
    if outside:
        # corner wedge: tie toward the smaller face index
        face = min(outside)
    else:
        # inside the domain: project along the normal of the nearest face
        face = domain.nearest_face(x)[1]
        if face == 4:
            p = domain.hole_center + domain.hole_radius * hv / hr
            n = -hv / hr
            d = float(np.dot(x - p, n))
            return ObliqueProjection(p=p, d=d, residual=0.0, iterations=0)
    if face == 0:
        p = np.array([xmin, min(max(x[1], ymin), ymax)])
    elif face == 1:
        p = np.array([xmax, min(max(x[1], ymin), ymax)])
    elif face == 2:
        p = np.array([min(max(x[0], xmin), xmax), ymin])
    else:
        p = np.array([min(max(x[0], xmin), xmax), ymax])
    n = [np.array([-1.0, 0.0]), np.array([1.0, 0.0]),
         np.array([0.0, -1.0]), np.array([0.0, 1.0])][face]
    d = float(np.dot(x - p, n))
    res = float(np.linalg.norm(x - p - d * n))
    return ObliqueProjection(p=p, d=d, residual=res, iterations=0)


def _disk_rotated_projection(domain: Disk, angle: float, x) -> ObliqueProjection:
    """Closed-form solve for gamma = normal rotated by a fixed angle.

    With rho = |x - c| / r the algebraic distance solves
    d^2 + 2 d cos(angle) + 1 = rho^2.
    """
    v = x - domain.center
    rho = np.linalg.norm(v) / domain.radius
    ca = math.cos(angle)
    disc = ca * ca - 1.0 + rho * rho
    if disc < 0.0:
        raise OutsideTube("point too deep inside for the rotated projection")
    d = domain.radius * (-ca + math.sqrt(disc))
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, s], [-s, c]])
    m = np.eye(2) + (d / domain.radius) * rot
    u = np.linalg.solve(m, v)
    p = domain.center + u
    gp = rot @ (u / domain.radius)
    res = float(np.linalg.norm(x - p - d * gp))
    return ObliqueProjection(p=p, d=float(d), residual=res, iterations=0)


def oblique_projection_newton(domain: Disk, gamma: ObliqueField, b, x,
                              tol: float = TOL_PROJ,
                              max_iter: int = MAX_NEWTON_ITER) -> ObliqueProjection:
    """Newton iteration on G(theta, lam) = g(theta) + lam*gamma(g(theta)) - x.

    Initialized at the nearest-point angle and the signed distance.
    """
    x = as_point(x)
    theta = domain.boundary_angle(x)
    lam = domain.signed_distance(x)
    h = 1e-6

    def G(th, la):
        p = domain.boundary_point(th)
        return p + la * gamma(p, b) - x

    res = np.linalg.norm(G(theta, lam))
    for it in range(1, max_iter + 1):
        g0 = G(theta, lam)
        res = np.linalg.norm(g0)
        if res <= tol:
            p = domain.boundary_point(theta)
            return ObliqueProjection(p=p, d=float(lam), residual=float(res), iterations=it)
        col0 = (G(theta + h, lam) - G(theta - h, lam)) / (2 * h)
        col1 = gamma(domain.boundary_point(theta), b)
        try:
            step = np.linalg.solve(np.column_stack([col0, col1]), -g0)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular Newton system") from exc
        theta += step[0]
        lam += step[1]
    raise NoConvergence(f"residual {res:.3g} after {max_iter} iterations")


def layer_distance(domain: Domain, delta: float, x) -> float:
    """Distance from x to the inner layer boundary {d(., boundary) = delta}.

    Satisfies d(x, boundary) + d(x, layer boundary) = delta on the layer.
    """
    if delta < 0 or delta > domain.layer_radius:
        raise BadParams("delta must lie in [0, layer_radius]")
    x = as_point(x)
    sd = domain.signed_distance(x)
    if sd > TOL_BOUNDARY:
        raise OutOfLayer("point outside the closed domain")
    d0 = abs(min(sd, 0.0))
    if d0 > delta + 1e-12:
        raise OutOfLayer("point deeper than the layer width")
    p = domain.nearest_point_projection(x)
    q = p - delta * domain.outward_normal(p)
    return float(np.linalg.norm(x - q))
