"""Derivative-free minimization of sigma_min over spheres.

Everything here works on S^{r-1} embedded in R^r.  A local search runs
Nelder-Mead in the tangent plane at a start point and maps back to the
sphere by normalization (a retraction).  When the objective is the smallest
singular value of a square matrix family, the determinant's sign along mesh
edges gives a second route: bisection across a sign change lands on the
singular set to machine precision.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from . import sphere as _sphere

log = logging.getLogger(__name__)

ZERO_SIGMA = 1e-12
WARN_LOW = 1e-5
WARN_HIGH = 1e-2


def nelder_mead(func, x0, step, xtol=1e-10, max_iter=400, ftarget=-np.inf,
                alpha=1.0, gamma=2.0, rho=0.5, sigma=0.5):
    """Minimize ``func`` over R^d starting from a right-angled simplex.

    Stops when the simplex diameter drops below ``xtol``, after ``max_iter``
    iterations, or once the best value reaches ``ftarget``.
    Returns ``(x_best, f_best, iterations)``.
    """
    x0 = np.asarray(x0, dtype=float)
    d = x0.size
    simplex = np.vstack([x0, x0 + step * np.eye(d)])
    values = np.array([func(x) for x in simplex])
    it = 0
    for it in range(1, max_iter + 1):
        order = np.argsort(values, kind="stable")
        simplex = simplex[order]
        values = values[order]
        if values[0] <= ftarget:
            break
        diam = np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1))
        if diam < xtol:
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + alpha * (centroid - worst)
        fr = func(xr)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = func(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-1]:
            xc = centroid + rho * (xr - centroid)
            fc = func(xc)
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
                continue
        else:
            xc = centroid + rho * (worst - centroid)
            fc = func(xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
                continue
        simplex[1:] = simplex[0] + sigma * (simplex[1:] - simplex[0])
        values[1:] = [func(x) for x in simplex[1:]]
    best = int(np.argmin(values))
    return simplex[best], float(values[best]), it


def tangent_basis(p):
    """Orthonormal basis (as columns) of the plane orthogonal to unit ``p``."""
    p = np.asarray(p, dtype=float)
    q, _ = np.linalg.qr(np.column_stack([p, np.eye(p.size)]))
    return q[:, 1:p.size]


def sphere_nelder_mead(func, start, step, **kw):
    """Nelder-Mead on the sphere through the chart u -> (p + B u)/|p + B u|."""
    p = np.asarray(start, dtype=float)
    B = tangent_basis(p)

    def retract(u):
        x = p + B @ u
        return x / np.linalg.norm(x)

    u, fu, it = nelder_mead(lambda u: func(retract(u)), np.zeros(B.shape[1]), step, **kw)
    return retract(u), fu, it


def slerp(a, b, t):
    x = (1.0 - t) * a + t * b
    return x / np.linalg.norm(x)


def bisect_sign_change(fn, a, b, iters=80):
    """Bisect a real function with fn(a) * fn(b) < 0 along the chord-arc a->b.

    Returns the endpoint of the final bracket with the smaller |fn|.
    """
    fa = fn(a)
    lo, hi = 0.0, 1.0
    pa, pb = a, b
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        pm = slerp(a, b, mid)
        fm = fn(pm)
        if fm == 0.0:
            return pm
        if np.sign(fm) == np.sign(fa):
            lo, pa, fa = mid, pm, fm
        else:
            hi, pb = mid, pm
    return pa if abs(fn(pa)) <= abs(fn(pb)) else pb


@dataclass
class SphereMinimum:
    """Result of a sigma_min search over a sphere."""

    sigma_min: float
    witness: np.ndarray
    rank: int
    flag: str
    scan_min: float
    evaluations: int = 0
    samples: int = 0
    notes: list = field(default_factory=list)


def canonical_sign(s):
    """Pick the lexicographically smaller of s and -s (both are witnesses)."""
    s = np.asarray(s, dtype=float)
    return s if tuple(s) <= tuple(-s) else -s


def sphere_samples(r, mesh_level=4, circle_points=720, rng=None, n_random=4000):
    """Sample points and neighbour edges on S^{r-1} for a coarse scan."""
    if r == 1:
        return np.array([[1.0], [-1.0]]), np.zeros((0, 2), dtype=int), 1.0
    if r == 2:
        pts = _sphere.circle_grid(circle_points)
        # circle_grid puts antipodes in the second half; reorder by angle
        ang = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi)
        pts = pts[np.argsort(ang, kind="stable")]
        idx = np.arange(len(pts))
        edges = np.column_stack([idx, np.roll(idx, -1)])
        return pts, edges, 2 * np.pi / circle_points
    if r == 3:
        mesh = _sphere.icosphere(mesh_level)
        return mesh.vertices, mesh.edges(), float(np.mean(mesh.edge_lengths))
    rng = rng if rng is not None else np.random.default_rng(0)
    pts = _sphere.random_sphere_points(n_random, rng, dim=r)
    return pts, np.zeros((0, 2), dtype=int), n_random ** (-1.0 / (r - 1))


def minimize_sigma(matrix_batch, r, mesh_level=4, restarts=20, max_iter=400,
                   xtol=1e-10, zero_tol=ZERO_SIGMA, use_det=True,
                   circle_points=720, rng=None, rerun=True, threads=1):
    """Minimize s -> sigma_min(M(s)) over S^{r-1}.

    ``matrix_batch`` maps an (N, r) array of points to an (N, q, q) stack.
    Coarse scan, then Nelder-Mead from the ``restarts`` best scan points
    (ties broken by lowest sample index), plus determinant-sign bisection
    across scan edges when ``use_det`` is set.  A minimum left in
    (1e-5, 1e-2) triggers one rerun on a mesh one level finer.
    """
    pts, edges, spacing = sphere_samples(r, mesh_level, circle_points, rng)
    stack = matrix_batch(pts)
    sig = np.linalg.svd(stack, compute_uv=False)[:, -1]
    evals = [len(pts)]

    def objective(s):
        evals[0] += 1
        return float(np.linalg.svd(matrix_batch(s[None, :])[0], compute_uv=False)[-1])

    order = np.argsort(sig, kind="stable")
    candidates = [(float(sig[order[0]]), pts[order[0]])]

    if use_det and len(edges):
        sign, _ = np.linalg.slogdet(stack)
        flip = edges[sign[edges[:, 0]] * sign[edges[:, 1]] < 0]
        if len(flip):
            # the edge with the smallest endpoint sigma is the best bracket
            score = np.minimum(sig[flip[:, 0]], sig[flip[:, 1]])
            a, b = flip[int(np.argmin(score))]

            def det(s):
                evals[0] += 1
                return float(np.linalg.det(matrix_batch(s[None, :])[0]))

            s_star = bisect_sign_change(det, pts[a], pts[b])
            candidates.append((objective(s_star), s_star))

    if min(c[0] for c in candidates) > zero_tol and r >= 2:
        starts = [pts[i] for i in order[:restarts]]

        def run(p):
            return sphere_nelder_mead(objective, p, 0.5 * spacing, xtol=xtol,
                                      max_iter=max_iter, ftarget=zero_tol)

        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(run, starts))
            candidates += [(f, s) for s, f, _ in results]
        else:
            for p in starts:
                s, f, _ = run(p)
                candidates.append((f, s))
                if f <= zero_tol:
                    break

    best_sigma, best_s = min(candidates, key=lambda c: c[0])
    best_s = canonical_sign(best_s / np.linalg.norm(best_s))
    full = np.linalg.svd(matrix_batch(best_s[None, :])[0], compute_uv=False)
    rank = int(np.sum(full > 1e-8 * full[0])) if full[0] > 0 else 0
    result = SphereMinimum(sigma_min=float(best_sigma), witness=best_s, rank=rank,
                           flag="", scan_min=float(sig[order[0]]),
                           evaluations=evals[0], samples=len(pts))
    if WARN_LOW < best_sigma < WARN_HIGH and rerun and r == 3 \
            and mesh_level < _sphere.MAX_LEVEL:
        log.info("sigma_min %.3e in warning band; rerunning at mesh level %d",
                 best_sigma, mesh_level + 1)
        finer = minimize_sigma(matrix_batch, r, mesh_level + 1, restarts, max_iter, xtol,
                               zero_tol, use_det, circle_points, rng, rerun=False,
                               threads=threads)
        finer.evaluations += result.evaluations
        finer.notes.append(f"rerun at mesh level {mesh_level + 1}")
        if finer.sigma_min <= result.sigma_min:
            result = finer
    result.flag = classify(result.sigma_min)
    return result


def classify(sigma_min):
    if sigma_min <= WARN_LOW:
        return "singular"
    if sigma_min < WARN_HIGH:
        return "small-positive"
    return "nonsingular"
