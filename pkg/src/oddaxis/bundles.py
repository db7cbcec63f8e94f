"""Equivariant sections of Whitney sums of canonical and trivial line bundles.

A section of k gamma + l epsilon over RP^{r-1} is modelled as a function on
S^{r-1} whose components are odd (gamma slots, sign -1) or even (epsilon
slots, sign +1) under s -> -s.  Sections are stacked as the rows of a square
matrix; a bundle is trivialized exactly when that matrix stays invertible
over the whole sphere.
"""
import json
import logging
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from . import degree as _degree
from . import search as _search
from . import sphere as _sphere
from .errors import DimensionError, ParameterError

log = logging.getLogger(__name__)

RP1_DET_FLOOR = 1e-8


@dataclass(frozen=True)
class EquivariantSection:
    """A map S^{r-1} -> R^k with a parity sign per component."""

    sphere_dim: int
    signature: tuple
    func: object
    name: str = "section"

    def __post_init__(self):
        sig = tuple(int(s) for s in self.signature)
        if not sig or any(s not in (-1, 1) for s in sig):
            raise ParameterError("signature must be a nonempty sequence of +1/-1")
        if self.sphere_dim not in (1, 2):
            raise ParameterError("sections live on S^1 or S^2")
        object.__setattr__(self, "signature", sig)

    @property
    def rank(self):
        return len(self.signature)

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.asarray(self.func(pts), dtype=float)
        if out.shape != (len(pts), self.rank):
            raise DimensionError(f"section {self.name} returned shape {out.shape}")
        return out


def canonical_sections_2gamma():
    """Rows (x, y) and (-y, x): two everywhere independent sections of 2 gamma over RP^1."""
    return [
        EquivariantSection(1, (-1, -1), lambda p: np.column_stack([p[:, 0], p[:, 1]]),
                           name="2gamma-row1"),
        EquivariantSection(1, (-1, -1), lambda p: np.column_stack([-p[:, 1], p[:, 0]]),
                           name="2gamma-row2"),
    ]


def canonical_sections_4gamma():
    """The four rows trivializing 4 gamma over RP^2.

    (x, y, z, 0), (-y, x, 0, z), (-z, 0, x, -y), (0, -z, y, x): pairwise
    orthogonal, each of length 1 on S^2, every component odd.
    """
    def row(k):
        def f(p):
            x, y, z = p[:, 0], p[:, 1], p[:, 2]
            o = np.zeros_like(x)
            return np.column_stack([
                (x, y, z, o), (-y, x, o, z), (-z, o, x, -y), (o, -z, y, x)][k])
        return f
    return [EquivariantSection(2, (-1, -1, -1, -1), row(k), name=f"4gamma-row{k + 1}")
            for k in range(4)]


def _antipodal_samples(samples):
    a, b = _degree.antipodal_pairs(samples)
    return np.asarray(a), np.asarray(b)


def check_equivariance(sec, samples):
    """max over antipodal pairs and components of |sigma_i(-s) - sign_i sigma_i(s)|."""
    a, b = _antipodal_samples(samples)
    signs = np.array(sec.signature, dtype=float)
    return float(np.max(np.abs(sec(b) - signs * sec(a))))


def _check_family(secs):
    if not secs:
        raise DimensionError("need at least one section")
    dims = {s.sphere_dim for s in secs}
    ranks = {s.rank for s in secs}
    if len(dims) != 1 or len(ranks) != 1:
        raise DimensionError("sections must share domain and component count")
    if ranks.pop() != len(secs):
        raise DimensionError("section matrix must be square: k sections of k components")


def section_matrix_batch(secs, pts):
    """Stack of section matrices at each row of ``pts``; row i is section i."""
    _check_family(secs)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return np.stack([sec(pts) for sec in secs], axis=1)


def section_matrix(secs, s):
    return section_matrix_batch(secs, np.asarray(s, dtype=float)[None, :])[0]


# ---------------------------------------------------------------- random compliant sections

def _monomials(deg, nvars=3):
    exps = []
    for combo in combinations_with_replacement(range(nvars), deg):
        e = [0] * nvars
        for v in combo:
            e[v] += 1
        exps.append(tuple(e))
    return np.array(exps, dtype=int).reshape(-1, nvars)


def _poly_component(rng, degrees):
    exps = np.vstack([_monomials(d) for d in degrees])
    coef = rng.standard_normal(len(exps))
    return exps, coef


def _eval_poly(exps, coef, p):
    # power tables by repeated multiplication keep (-x)^k = (-1)^k x^k exact
    top = int(exps.max()) if exps.size else 0
    powers = [np.ones_like(p)]
    for _ in range(top):
        powers.append(powers[-1] * p)
    powers = np.stack(powers, axis=2)                     # (N, vars, degree + 1)
    mono = powers[:, 0, exps[:, 0]]
    for v in range(1, exps.shape[1]):
        mono = mono * powers[:, v, exps[:, v]]
    return mono @ coef


def random_compliant_sections_rp2(rng, signature=(-1, -1, 1), count=None):
    """Random polynomial sections on S^2 with the given parity signature.

    Odd slots get homogeneous terms of degree 1 and 3, even slots degree 0
    and 2, so equivariance holds exactly by construction.
    """
    signature = tuple(signature)
    count = len(signature) if count is None else count
    secs = []
    for i in range(count):
        comps = [_poly_component(rng, (1, 3) if s < 0 else (0, 2)) for s in signature]

        def f(p, comps=comps):
            return np.column_stack([_eval_poly(e, c, p) for e, c in comps])
        secs.append(EquivariantSection(2, signature, f, name=f"poly-section{i + 1}"))
    return secs


def _unit_powers(p, kmax):
    """(x + iy)^k for k = 0..kmax by repeated multiplication.

    Repeated products keep (-z)^k = (-1)^k z^k exact in floating point, which
    a transcendental cos/sin evaluation would not.
    """
    z = p[:, 0] + 1j * p[:, 1]
    out = [np.ones_like(z)]
    for _ in range(kmax):
        out.append(out[-1] * z)
    return np.column_stack(out)


def random_compliant_sections_rp1(rng, signature=(-1, 1), count=None, max_harmonic=4):
    """Random trigonometric sections on S^1: odd harmonics in gamma slots, even in epsilon slots."""
    signature = tuple(signature)
    count = len(signature) if count is None else count
    secs = []
    for i in range(count):
        comps = []
        for s in signature:
            ks = np.array([k for k in range(max_harmonic + 1) if k % 2 == (1 if s < 0 else 0)])
            comps.append((ks, rng.standard_normal(len(ks)), rng.standard_normal(len(ks))))

        def f(p, comps=comps):
            zk = _unit_powers(p, max_harmonic)
            return np.column_stack([
                (a * zk[:, ks].real + b * zk[:, ks].imag).sum(axis=1) for ks, a, b in comps])
        secs.append(EquivariantSection(1, signature, f, name=f"trig-section{i + 1}"))
    return secs


# ---------------------------------------------------------------- rank-drop searches

@dataclass
class RP1Witness:
    point: np.ndarray
    det: float
    bracket_width: float
    det_start: float
    det_antipode: float
    start: np.ndarray
    degenerate: bool = False


def rank_drop_search_rp1(secs, grid_points=256, width=1e-12):
    """Locate a zero of det Lambda on the circle for a (-1, +1) section pair.

    det Lambda(-s) = -det Lambda(s) for compliant pairs, so det changes sign
    along the half circle from s0 to -s0; bisecting the arc parameter on
    [0, pi] brackets a zero to ``width``.
    """
    _check_family(secs)
    if secs[0].sphere_dim != 1 or secs[0].signature != (-1, 1):
        raise ParameterError("rank_drop_search_rp1 needs two S^1 sections with signature (-1, +1)")

    def det_at(p):
        L = section_matrix_batch(secs, p[None, :])[0]
        return L[0, 0] * L[1, 1] - L[0, 1] * L[1, 0]

    grid = _sphere.circle_grid(grid_points)
    dets = np.array([det_at(p) for p in grid])
    if np.all(np.abs(dets) < RP1_DET_FLOOR):
        p = grid[0]
        return RP1Witness(p, float(dets[0]), 0.0, float(dets[0]), float(det_at(-p)), p, True)
    p0 = grid[int(np.argmax(np.abs(dets)))]
    perp = np.array([-p0[1], p0[0]])

    def arc(t):
        if t == np.pi:
            return -p0
        return np.cos(t) * p0 + np.sin(t) * perp

    d_start, d_end = det_at(p0), det_at(-p0)
    lo, hi = 0.0, np.pi
    sign_lo = np.sign(d_start)
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        dm = det_at(arc(mid))
        if dm == 0.0:
            lo = hi = mid
            break
        if np.sign(dm) == sign_lo:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    p = arc(t)
    return RP1Witness(p, float(det_at(p)), float(hi - lo), float(d_start), float(d_end), p0)


def rank_drop_search_rp2(secs, mesh_level=4, **kw):
    """Minimize sigma_min of the 3x3 section matrix over S^2."""
    _check_family(secs)
    if secs[0].sphere_dim != 2 or len(secs) != 3:
        raise ParameterError("rank_drop_search_rp2 needs three sections on S^2")
    return _search.minimize_sigma(lambda P: section_matrix_batch(secs, P), 3,
                                  mesh_level=mesh_level, **kw)


@dataclass
class RhoMaps:
    """Normalized column maps of the section matrix, or a short-circuit witness."""

    maps: tuple = ()
    witness: np.ndarray = None
    min_norm: float = None

    @property
    def short_circuit(self):
        return self.witness is not None


def _column_map(secs, k):
    def f(p):
        return np.column_stack([sec(p)[:, k] for sec in secs])
    return f


def extract_rho_maps(secs, mesh):
    """rho_k(s) = (tau_1^k(s), tau_2^k(s), tau_3^k(s)) for k = 1, 2.

    If a column comes within 1e-9 of zero at a mesh vertex, the section
    matrix is singular there and that vertex is returned as the witness.
    """
    _check_family(secs)
    V = mesh.vertices
    maps = []
    worst = np.inf
    for k in range(2):
        raw = _column_map(secs, k)
        norms = np.linalg.norm(raw(V), axis=1)
        i = int(np.argmin(norms))
        worst = min(worst, float(norms[i]))
        if norms[i] < _degree.NORM_FLOOR:
            return RhoMaps(witness=V[i].copy(), min_norm=float(norms[i]))
        maps.append(_degree.SphereMap(2, raw, name=f"rho{k + 1}"))
    return RhoMaps(maps=tuple(maps), min_norm=worst)


@dataclass
class RhoTrace:
    """Record of the degree argument for gamma + gamma + epsilon over RP^2."""

    degrees: tuple
    odd: bool
    equal: bool
    negated_column: bool
    collision: np.ndarray
    collision_gap: float
    collision_sigma: float
    relation: str
    notes: list = field(default_factory=list)


def rho_contradiction_trace(secs, mesh, restarts=20):
    """Run the two column maps through the degree module and find the collision.

    Both rho maps are antipode preserving, hence of odd degree.  If
    deg rho1 = deg rho2 then rho1 cannot be homotopic to -rho2, so
    rho1(s) = rho2(s) somewhere; otherwise rho1(s) = -rho2(s) somewhere.  Either
    way the first two columns are parallel at that s and the section matrix
    is singular.  When the degrees differ the second column of every section is
    negated (which keeps compliance) so the reported degrees agree.
    """
    rho = extract_rho_maps(secs, mesh)
    if rho.short_circuit:
        raise ParameterError("a column vanishes; use the short-circuit witness instead")
    # a column that comes close to zero makes its rho map steep, so allow
    # refinement all the way to the finest mesh
    top = _sphere.MAX_LEVEL
    d1 = _degree.brouwer_degree(rho.maps[0], mesh, max_level=top).rounded
    d2 = _degree.brouwer_degree(rho.maps[1], mesh, max_level=top).rounded
    negate = d1 != d2
    if negate:
        secs = [EquivariantSection(s.sphere_dim, s.signature,
                                   lambda p, f=s.func: np.asarray(f(p)) * np.array([1.0, -1.0, 1.0]),
                                   name=s.name) for s in secs]
        rho = extract_rho_maps(secs, mesh)
        d2 = _degree.brouwer_degree(rho.maps[1], mesh, max_level=top).rounded
    r1, r2 = rho.maps

    def gap(s):
        return float(np.linalg.norm(r1(s[None, :])[0] - r2(s[None, :])[0]))

    V = mesh.vertices
    scan = np.linalg.norm(r1(V) - r2(V), axis=1)
    order = np.argsort(scan, kind="stable")
    spacing = float(np.mean(mesh.edge_lengths))
    best = (float(scan[order[0]]), V[order[0]])
    for i in order[:restarts]:
        s, f, _ = _search.sphere_nelder_mead(gap, V[i], 0.5 * spacing, xtol=1e-12,
                                             max_iter=600, ftarget=1e-12)
        if f < best[0]:
            best = (f, s)
        if f <= 1e-12:
            break
    f, s = best
    sigma = float(np.linalg.svd(section_matrix(secs, s), compute_uv=False)[-1])
    return RhoTrace(degrees=(d1, d2), odd=bool(d1 % 2 and d2 % 2), equal=d1 == d2,
                    negated_column=negate, collision=s, collision_gap=f,
                    collision_sigma=sigma, relation="rho1 = rho2")


# ---------------------------------------------------------------- span families

@dataclass(frozen=True)
class SpanFamily:
    matrices: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrices, dtype=float)
        if M.ndim != 3 or M.shape[0] < 1 or M.shape[1] != M.shape[2]:
            raise DimensionError(f"span family must be r square q x q matrices, got {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ParameterError("span family has non-finite entries")
        object.__setattr__(self, "matrices", M)

    @property
    def r(self):
        return self.matrices.shape[0]

    @property
    def q(self):
        return self.matrices.shape[1]

    def batch(self, pts):
        return np.tensordot(np.atleast_2d(pts), self.matrices, axes=(1, 0))

    def to_json(self):
        return {"q": self.q, "matrices": [m.ravel().tolist() for m in self.matrices]}


def span_morphism(fam, s):
    """A(s) = x_1 A_1 + ... + x_r A_r."""
    s = np.asarray(s, dtype=float).ravel()
    if s.size != fam.r:
        raise DimensionError(f"point has {s.size} coordinates, family has {fam.r} matrices")
    if abs(np.linalg.norm(s) - 1.0) > 1e-9:
        raise ParameterError("span_morphism expects a unit vector")
    return fam.batch(s)[0]


def min_rank_over_sphere(fam, mesh_level=4, circle_points=720, **kw):
    """Smallest sigma_min of A(s) over S^{r-1}, with its argmin and estimated rank."""
    return _search.minimize_sigma(fam.batch, fam.r, mesh_level=mesh_level,
                                  circle_points=circle_points, **kw)


def quaternion_left(a, b, c, d):
    """Matrix of left multiplication by a + b i + c j + d k on R^4."""
    return np.array([[a, -b, -c, -d], [b, a, -d, c], [c, d, a, -b], [d, -c, b, a]], dtype=float)


def quaternion_family():
    """Left multiplication by 1, i, j: every nonzero combination is a scaled rotation."""
    return SpanFamily(np.array([quaternion_left(1, 0, 0, 0), quaternion_left(0, 1, 0, 0),
                                quaternion_left(0, 0, 1, 0)]))


def parse_matrix(entry, q):
    """One matrix from the JSON wire format: flat or nested reals, or {"re", "im"}."""
    if isinstance(entry, dict):
        re = np.asarray(entry.get("re"), dtype=float).reshape(q, q)
        im = np.asarray(entry.get("im", np.zeros(q * q)), dtype=float).reshape(q, q)
        return re + 1j * im
    return np.asarray(entry, dtype=float).reshape(q, q)


def load_matrices(obj):
    """Parse ``{"q": int, "matrices": [...]}``; returns a list of arrays."""
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    try:
        q = int(obj["q"])
        mats = [parse_matrix(m, q) for m in obj["matrices"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterError(f"malformed matrix file: {exc}") from exc
    return mats


def load_span_family(obj):
    mats = load_matrices(obj)
    if any(np.iscomplexobj(m) and np.any(m.imag) for m in mats):
        raise ParameterError("span families must be real")
    return SpanFamily(np.array([np.real(m) for m in mats]))
