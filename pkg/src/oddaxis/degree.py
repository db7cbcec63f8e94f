"""Mapping degree of self-maps of S^1 and S^2.

Two independent routes for S^2: the Kronecker integral (pull back the area
form with central differences and integrate over an icosphere) and a signed
preimage count at a regular value.  On S^1 the winding number comes from
angle lifting, with the line integral of g1 dg2 - g2 dg1 as a cross-check.
"""
from dataclasses import dataclass, field

import numpy as np

from . import sphere as _sphere
from .errors import (DegenerateMapError, IrregularValueError, NonConvergentDegreeError,
                     ParameterError, UndersampledMapError)

NORM_FLOOR = 1e-9
CERTIFY_RESIDUAL = 0.2
FD_RELATIVE_STEP = 1e-5
DEFAULT_TARGET = np.array([0.2672612419124244, -0.5345224838248488, 0.8017837257372732])


@dataclass(frozen=True)
class SphereMap:
    """A map S^d -> S^d for d in {1, 2}.

    ``func`` maps an (N, d+1) array of unit vectors to an (N, d+1) array of
    nonzero vectors; calling the SphereMap normalizes the output and refuses
    values within 1e-9 of the origin.
    """

    dimension: int
    func: object
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ParameterError("SphereMap dimension must be 1 or 2")

    def raw(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.asarray(self.func(pts), dtype=float)

    def __call__(self, pts):
        vals = self.raw(pts)
        norms = np.linalg.norm(vals, axis=1, keepdims=True)
        bad = np.flatnonzero(norms[:, 0] < NORM_FLOOR)
        if bad.size:
            p = np.atleast_2d(pts)[bad[0]]
            raise DegenerateMapError(f"map {self.name} is not sphere-valued near {p}", point=p)
        return vals / norms

    def negated(self):
        return SphereMap(self.dimension, lambda p, f=self.func: -np.asarray(f(p)),
                         name=f"-{self.name}", params=dict(self.params))

    @classmethod
    def from_samples(cls, grid, values, name="samples"):
        """Sample-table map: values at the vertices of a SphereMesh (dimension 2)
        or at the points of a circle grid (dimension 1), interpolated and then
        renormalized."""
        values = np.asarray(values, dtype=float)
        if isinstance(grid, _sphere.SphereMesh):
            interp = _MeshInterpolator(grid, values)
            return cls(2, interp, name=name)
        pts = np.asarray(grid, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(values) != len(pts):
            raise ParameterError("circle samples need matching (m, 2) points and values")
        ang = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi)
        order = np.argsort(ang, kind="stable")
        return cls(1, _CircleInterpolator(ang[order], values[order]), name=name)


class _CircleInterpolator:
    def __init__(self, angles, values):
        self.angles = np.append(angles, angles[0] + 2 * np.pi)
        self.values = np.vstack([values, values[:1]])

    def __call__(self, pts):
        t = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi)
        t = np.where(t < self.angles[0], t + 2 * np.pi, t)
        i = np.clip(np.searchsorted(self.angles, t, side="right") - 1, 0, len(self.angles) - 2)
        w = (t - self.angles[i]) / (self.angles[i + 1] - self.angles[i])
        return (1 - w)[:, None] * self.values[i] + w[:, None] * self.values[i + 1]


class _MeshInterpolator:
    """Gnomonic barycentric interpolation on a SphereMesh."""

    def __init__(self, mesh, values):
        if values.shape != mesh.vertices.shape:
            raise ParameterError("need one R^3 value per mesh vertex")
        self.mesh = mesh
        self.values = values
        tri = mesh.vertices[mesh.faces]              # (F, 3 vertices, 3 coords)
        self.inv = np.linalg.inv(np.transpose(tri, (0, 2, 1)))
        adj = mesh.vertex_faces()
        width = max(len(a) for a in adj)
        self.incident = np.array([a + [a[0]] * (width - len(a)) for a in adj])

    def _bary(self, faces, pts):
        return np.einsum("...ij,...j->...i", self.inv[faces], pts)

    def __call__(self, pts):
        V = self.mesh.vertices
        nearest = np.argmax(pts @ V.T, axis=1)
        cand = self.incident[nearest]                        # (N, w)
        lam = self._bary(cand, pts[:, None, :])              # (N, w, 3)
        score = lam.min(axis=2)
        pick = np.argmax(score, axis=1)
        face = cand[np.arange(len(pts)), pick]
        lam = lam[np.arange(len(pts)), pick]
        miss = np.flatnonzero(score[np.arange(len(pts)), pick] < -1e-12)
        for i in miss:
            allb = self._bary(np.arange(len(self.mesh.faces)), pts[i][None, :])
            j = int(np.argmax(allb.min(axis=1)))
            face[i], lam[i] = j, allb[j]
        return np.einsum("ni,nij->nj", lam, self.values[self.mesh.faces[face]])


@dataclass
class DegreeReport:
    raw_integral: float
    rounded: int
    residual: float
    method: str
    details: dict = field(default_factory=dict)

    @property
    def certified(self):
        return self.residual < CERTIFY_RESIDUAL


def _report(raw, method, **details):
    rounded = int(np.rint(raw))
    return DegreeReport(float(raw), rounded, float(abs(raw - rounded)), method, details)


# ---------------------------------------------------------------- builtin maps

def _suspension(k):
    def f(p):
        x, y, z = p[:, 0], p[:, 1], p[:, 2]
        r = np.hypot(x, y)
        th = k * np.arctan2(y, x)
        return np.column_stack([r * np.cos(th), r * np.sin(th), z])
    return f


def _rotation_matrix(axis, angle):
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def _well_conditioned(rng, n=3, lo=0.5, hi=1.5):
    q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return q1 @ np.diag(rng.uniform(lo, hi, n)) @ q2


def linear_map(A, name="linear"):
    """x -> A x / |A x| on S^2 (or S^1 for 2x2 A)."""
    A = np.asarray(A, dtype=float)
    return SphereMap(A.shape[0] - 1, lambda p: p @ A.T, name=name)


def _circle_power(k):
    def f(p):
        th = k * np.arctan2(p[:, 1], p[:, 0])
        return np.column_stack([np.cos(th), np.sin(th)])
    return f


def parse_map_spec(spec):
    """Split ``"name:key=val,key=val"`` into (name, params)."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise ParameterError(f"bad map parameter {item!r}")
        params[key.strip()] = val.strip()
    return name.strip(), params


def builtin_map(spec):
    """Build a SphereMap from a family tag.

    S^2 families: identity, antipodal, reflection, rotation, constant,
    suspension:k=K (rotate longitude K times), linear:seed=S.
    S^1 families: circle-power:k=K, circle-wobble:eps=E.
    """
    name, params = parse_map_spec(spec)
    try:
        if name == "identity":
            return SphereMap(2, lambda p: p.copy(), name=spec)
        if name == "antipodal":
            return SphereMap(2, lambda p: -p, name=spec)
        if name == "reflection":
            return SphereMap(2, lambda p: p * np.array([1.0, 1.0, -1.0]), name=spec)
        if name == "rotation":
            R = _rotation_matrix((1.0, 2.0, 3.0), 0.7)
            return SphereMap(2, lambda p: p @ R.T, name=spec)
        if name == "constant":
            return SphereMap(2, lambda p: np.tile([0.0, 0.0, 1.0], (len(p), 1)), name=spec)
        if name == "suspension":
            k = int(params.get("k", 1))
            return SphereMap(2, _suspension(k), name=spec, params={"k": k})
        if name == "linear":
            seed = int(params.get("seed", 0))
            A = _well_conditioned(np.random.default_rng(seed))
            return SphereMap(2, lambda p: p @ A.T, name=spec, params={"seed": seed})
        if name == "circle-power":
            k = int(params.get("k", 1))
            return SphereMap(1, _circle_power(k), name=spec, params={"k": k})
        if name == "circle-wobble":
            eps = float(params.get("eps", 0.3))

            def wobble(p):
                th = np.arctan2(p[:, 1], p[:, 0])
                th = th + eps * np.sin(2 * th)
                return np.column_stack([np.cos(th), np.sin(th)])
            return SphereMap(1, wobble, name=spec, params={"eps": eps})
    except ValueError as exc:
        raise ParameterError(f"bad parameters for map {spec!r}: {exc}") from exc
    raise ParameterError(f"unknown map family {name!r}")


NEGATION_SUITE = ("identity", "antipodal", "reflection", "rotation", "suspension:k=-2",
                  "suspension:k=-1", "suspension:k=0", "suspension:k=2",
                  "suspension:k=3", "linear:seed=7")


def random_odd_circle_map(rng, max_power=5):
    """Antipode-preserving S^1 map z -> sum of c_j z^j over odd j in [-max_power, max_power]."""
    powers = np.array([j for j in range(-max_power, max_power + 1) if j % 2])
    coef = (rng.standard_normal(len(powers)) + 1j * rng.standard_normal(len(powers)))
    coef /= np.abs(powers) ** 0.5

    def f(p):
        z = p[:, 0] + 1j * p[:, 1]
        w = (coef[None, :] * z[:, None] ** powers[None, :]).sum(axis=1)
        return np.column_stack([w.real, w.imag])
    return SphereMap(1, f, name="random-odd-circle", params={"powers": powers.tolist()})


def random_odd_sphere_map(rng, k=None):
    """Antipode-preserving S^2 map built from odd pieces.

    s -> A . susp_k(normalize(B s + 0.3 C(s))) with B well conditioned
    (singular values in [0.5, 1.5]), C an odd cubic with |C| <= 1 on S^2, and
    k odd, so the inner map never vanishes and every stage commutes with
    negation.  The degree is sign(det A) * k * sign(det B).
    """
    if k is None:
        k = int(rng.choice([1, -1, 3, -3]))
    if k % 2 == 0:
        raise ParameterError("suspension index must be odd to preserve antipodes")
    B = _well_conditioned(rng)
    A = _well_conditioned(rng)
    c = rng.standard_normal((3, 3, 3, 3))
    c /= np.linalg.norm(c)
    susp = _suspension(k)

    def f(p):
        inner = p @ B.T + 0.3 * np.einsum("ijkl,nj,nk,nl->ni", c, p, p, p)
        inner /= np.linalg.norm(inner, axis=1, keepdims=True)
        return susp(inner) @ A.T

    expected = int(np.sign(np.linalg.det(A)) * k * np.sign(np.linalg.det(B)))
    return SphereMap(2, f, name="random-odd-sphere", params={"k": k, "expected_degree": expected})


# ---------------------------------------------------------------- S^1

def _lift_increments(vals):
    ang = np.arctan2(vals[:, 1], vals[:, 0])
    d = np.diff(np.append(ang, ang[0]))
    return (d + np.pi) % (2 * np.pi) - np.pi


def winding_number(f, m=256, max_m=2 ** 20):
    """Winding number by angle lifting on an m-point grid.

    The grid is doubled until every consecutive image step is below pi/2;
    if that never happens by ``max_m`` the map is reported as undersampled.
    """
    if f.dimension != 1:
        raise ParameterError("winding_number needs a map of S^1")
    while True:
        # circle_grid is already in counterclockwise angle order
        d = _lift_increments(f(_sphere.circle_grid(m)))
        gap = float(np.max(np.abs(d)))
        if gap < np.pi / 2:
            raw = float(np.sum(d)) / (2 * np.pi)
            return _report(raw, "lift", grid=m, max_step=gap)
        if m >= max_m:
            raise UndersampledMapError(
                f"angular step {gap:.3f} rad still >= pi/2 at m={m}; map {f.name} undersampled")
        m *= 2


def winding_integral(g, m=2048, h=1e-6):
    """(1/2pi) * integral over t in [0,1] of g1 g2' - g2 g1', trapezoid rule.

    Derivatives are central differences of the map itself with step ``h``
    in angle, so the periodic trapezoid rule sees a smooth integrand.
    """
    if g.dimension != 1:
        raise ParameterError("winding_integral needs a map of S^1")
    if m < 8 or m % 2:
        raise ParameterError("m must be an even integer >= 8")
    t = 2 * np.pi * np.arange(m) / m

    def at(theta):
        return g(np.column_stack([np.cos(theta), np.sin(theta)]))

    val = at(t)
    dval = (at(t + h) - at(t - h)) / (2 * h)
    integrand = val[:, 0] * dval[:, 1] - val[:, 1] * dval[:, 0]
    # periodic trapezoid: mean value times period 2pi, divided by 2pi
    return float(np.mean(integrand))


# ---------------------------------------------------------------- S^2

def _frame_jacobian(g, p, h):
    """Values g(p) and central-difference derivatives along a positive tangent frame."""
    eu, ev = _sphere.tangent_frame(p)
    h = np.asarray(h, dtype=float).reshape(-1, 1)

    def ev_at(q):
        return g(q / np.linalg.norm(q, axis=1, keepdims=True))

    g0 = g(p)
    du = (ev_at(p + h * eu) - ev_at(p - h * eu)) / (2 * h)
    dv = (ev_at(p + h * ev) - ev_at(p - h * ev)) / (2 * h)
    return g0, du, dv


def jacobian_density(g, p, h):
    """<g, d_u g x d_v g> at the rows of ``p``: the pulled-back area density."""
    g0, du, dv = _frame_jacobian(g, p, h)
    return np.einsum("ij,ij->i", g0, np.cross(du, dv))


def brouwer_degree(g, mesh, max_level=None):
    """Kronecker-integral degree of an S^2 self-map.

    Sums <g, d_u g x d_v g> * area over face centroids, divided by 4 pi.
    If the rounding residual is not below 0.2 the mesh is refined, up to
    ``max_level`` (default: two levels finer, capped at 6).
    """
    if g.dimension != 2:
        raise ParameterError("brouwer_degree needs a map of S^2")
    if max_level is None:
        max_level = min(max(mesh.level, 6), mesh.level + 2)
    while True:
        p = mesh.centroids
        h = FD_RELATIVE_STEP * mesh.edge_lengths
        dens = jacobian_density(g, p, h)
        raw = float(np.sum(dens * mesh.quad_weights)) / (4 * np.pi)
        rep = _report(raw, "integral", mesh_level=mesh.level)
        if rep.certified:
            return rep
        if mesh.level >= max_level:
            raise NonConvergentDegreeError(
                f"degree integral {raw:.4f} not within 0.2 of an integer at level {mesh.level}",
                report=rep)
        mesh = _sphere.icosphere(mesh.level + 1)


def _tangent_coords(y):
    eu, ev = _sphere.tangent_frame(y)
    return np.vstack([eu[0], ev[0]])


def _newton_preimage(g, y, p0, h, iters=40, tol=1e-13):
    """Solve g(p) = y for p on S^2 near p0 by Newton in a tangent chart at p0."""
    P = _tangent_coords(y)
    eu, ev = _sphere.tangent_frame(p0)
    B = np.vstack([eu[0], ev[0]]).T

    def point(u):
        q = p0 + B @ u
        return q / np.linalg.norm(q)

    def resid(u):
        return P @ (g(point(u)[None, :])[0] - y)

    u = np.zeros(2)
    r = resid(u)
    for _ in range(iters):
        if np.linalg.norm(r) < tol:
            break
        J = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            J[:, j] = (resid(u + e) - resid(u - e)) / (2 * h)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        # damp steps that would leave the neighbourhood of the start face
        n = np.linalg.norm(step)
        if n > 0.5:
            step *= 0.5 / n
        u = u + step
        r = resid(u)
    p = point(u)
    if np.linalg.norm(g(p[None, :])[0] - y) > 1e-9:
        return None
    return p


def degree_by_preimage(g, y=None, mesh=None, jac_floor=1e-8):
    """Degree as the signed count of preimages of a regular value ``y``.

    Candidate faces are those whose (spherical) image triangle contains y;
    each is refined by Newton iteration, duplicates are merged, and the
    signs of the Jacobian determinants are summed.  A preimage with
    |det| < ``jac_floor`` raises IrregularValueError; retry with another y.
    """
    if g.dimension != 2:
        raise ParameterError("degree_by_preimage needs a map of S^2")
    mesh = mesh if mesh is not None else _sphere.icosphere(4)
    y = DEFAULT_TARGET if y is None else np.asarray(y, dtype=float)
    y = y / np.linalg.norm(y)
    img = g(mesh.vertices)
    A, B, C = (img[mesh.faces[:, i]] for i in range(3))

    def det3(a, b, c):
        return np.einsum("ij,ij->i", a, np.cross(b, c))

    Y = np.broadcast_to(y, A.shape)
    orient = np.sign(det3(A, B, C))
    d1, d2, d3 = np.sign(det3(Y, B, C)), np.sign(det3(A, Y, C)), np.sign(det3(A, B, Y))
    same_side = (A + B + C) @ y > 0
    hit = same_side & (orient != 0) & (d1 == orient) & (d2 == orient) & (d3 == orient)
    # also catch y on an edge of an image triangle
    edge_hit = same_side & (orient != 0) & ~hit & \
        ((d1 == orient) | (d1 == 0)) & ((d2 == orient) | (d2 == 0)) & ((d3 == orient) | (d3 == 0))
    faces = np.flatnonzero(hit | edge_hit)
    simplicial = int(np.sum(orient[hit]))

    h_edge = float(np.mean(mesh.edge_lengths))
    found = []
    for fi in faces:
        p0 = mesh.vertices[mesh.faces[fi]].sum(axis=0)
        p0 /= np.linalg.norm(p0)
        p = _newton_preimage(g, y, p0, FD_RELATIVE_STEP * h_edge)
        if p is None:
            raise IrregularValueError(f"Newton refinement failed near face {fi}; perturb y")
        if any(np.linalg.norm(p - q) < 1e-3 * h_edge for q, _ in found):
            continue
        jac = float(jacobian_density(g, p[None, :], FD_RELATIVE_STEP * h_edge)[0])
        if abs(jac) < jac_floor:
            raise IrregularValueError(f"ill-conditioned Jacobian {jac:.2e} at preimage {p}")
        found.append((p, jac))
    total = int(sum(np.sign(j) for _, j in found))
    rep = _report(float(total), "preimage", target=y.tolist(), preimages=len(found),
                  simplicial_count=simplicial, mesh_level=mesh.level)
    rep.details["points"] = [q.tolist() for q, _ in found]
    rep.details["jacobians"] = [j for _, j in found]
    return rep


def preimage_degree_retry(g, mesh, rng=None, tries=5):
    """degree_by_preimage, perturbing the target after an irregular value."""
    rng = rng if rng is not None else np.random.default_rng(0)
    y = DEFAULT_TARGET.copy()
    for attempt in range(tries):
        try:
            return degree_by_preimage(g, y, mesh)
        except IrregularValueError:
            if attempt == tries - 1:
                raise
            y = y + 0.05 * rng.standard_normal(3)
            y /= np.linalg.norm(y)


# ---------------------------------------------------------------- antipodes, homotopy

def antipodal_pairs(samples):
    """(points, antipode points) for a SphereMesh, a circle grid, or a grid size."""
    if isinstance(samples, _sphere.SphereMesh):
        return samples.vertices, samples.vertices[samples.antipode]
    if isinstance(samples, (int, np.integer)):
        samples = _sphere.circle_grid(int(samples))
    pts = np.asarray(samples, dtype=float)
    half = len(pts) // 2
    return pts[:half], pts[half:]


def check_antipode_preserving(g, samples):
    """max over antipodal sample pairs of |g(-s) + g(s)|."""
    a, b = antipodal_pairs(samples)
    return float(np.max(np.linalg.norm(g(a) + g(b), axis=1)))


def straight_line_homotopy(g0, g1, t, samples=None):
    """The map normalize((1-t) g0 + t g1).

    Allowed only when g0(s) != -g1(s) at every sample (checked with margin
    1e-6); otherwise the segment can pass through the origin.
    """
    if g0.dimension != g1.dimension:
        raise ParameterError("homotopy endpoints must have the same dimension")
    if samples is not None:
        pts = samples.vertices if isinstance(samples, _sphere.SphereMesh) else np.asarray(samples)
        gap = float(np.min(np.linalg.norm(g0(pts) + g1(pts), axis=1)))
        if gap < 1e-6:
            raise DegenerateMapError("g0(s) = -g1(s) at a sample: straight-line homotopy invalid")
    return SphereMap(g0.dimension, lambda p: (1 - t) * g0(p) + t * g1(p),
                     name=f"homotopy({g0.name},{g1.name},t={t})")
