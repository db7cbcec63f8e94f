"""Eigenvectors in odd dimension without the characteristic polynomial.

Real case: maximize |<A(x), x>| for A(x) = Tx/|Tx| on the unit sphere; the
maximum 1 is reached exactly at real eigenvectors.

Complex case: for T on C^n with n odd, the three real 2n x 2n matrices
I, D = realify(T), E = realify(iT) must have a singular combination
alpha I + beta D + gamma E.  Any such witness gives the eigenvalue
rho = -alpha / (beta + i gamma), and a null vector of realify(T - rho I)
gives the eigenvector.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import hessenberg

from . import bundles as _bundles
from . import numerics as _num
from . import search as _search
from .errors import ParameterError, SearchFailureError

log = logging.getLogger(__name__)

WITNESS_TOL = 1e-6
RESIDUAL_TOL = 1e-8
POLISH_SHIFT = 1e-12


@dataclass(frozen=True)
class PolynomialReal:
    """Monic polynomial X^n + a_{n-1} X^{n-1} + ... + a_0; ``coeffs`` = (a_0, ..., a_{n-1})."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(a) for a in self.coeffs)
        if len(c) < 1:
            raise ParameterError("polynomial degree must be >= 1")
        if not all(np.isfinite(c)):
            raise ParameterError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self):
        return len(self.coeffs)

    def __call__(self, x):
        acc = 1.0
        for a in reversed(self.coeffs):
            acc = acc * x + a
        return acc

    @property
    def cauchy_bound(self):
        return 1.0 + sum(abs(a) for a in self.coeffs)


def companion_matrix(coeffs):
    """Companion matrix with ones on the subdiagonal and last column -a_0..-a_{n-1}.

    Accepts a PolynomialReal or a sequence of (possibly complex) lower
    coefficients of a monic polynomial.
    """
    if isinstance(coeffs, PolynomialReal):
        coeffs = coeffs.coeffs
    c = np.asarray(coeffs)
    n = c.size
    if n < 1:
        raise ParameterError("polynomial degree must be >= 1")
    dtype = complex if np.iscomplexobj(c) else float
    C = np.zeros((n, n), dtype=dtype)
    C[np.arange(1, n), np.arange(n - 1)] = 1
    C[:, -1] = -c
    return C


def odd_poly_real_root(p, tol=1e-12):
    """Real root of an odd-degree monic polynomial by bisection.

    The bracket [-M, M] with M = 1 + sum |a_i| always contains a sign change.
    Bisection runs until the bracket can no longer be split in floating
    point, which is well past |p(x)| <= tol and width <= 1e-14 M whenever
    those are reachable; the point with the smallest |p| seen is returned.
    """
    if not isinstance(p, PolynomialReal):
        p = PolynomialReal(p)
    if p.degree % 2 == 0:
        raise ParameterError("odd_poly_real_root needs odd degree")
    M = p.cauchy_bound
    lo, hi = -M, M
    f_lo = p(lo)
    f_hi = p(hi)
    best, f_best = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = p(mid)
        if abs(fm) < abs(f_best):
            best, f_best = mid, fm
        if fm == 0.0:
            break
        if (fm < 0) == (f_lo < 0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    if abs(f_best) > tol:
        log.debug("root residual %.3e above %.1e: floating-point floor reached", abs(f_best), tol)
    return best


def hessenberg_charpoly(T):
    """Coefficients (a_0, ..., a_{n-1}) of det(xI - T) via the Hessenberg recurrence."""
    H = hessenberg(_num.as_real_matrix(T, square=True))
    n = H.shape[0]
    polys = [np.array([1.0])]        # ascending coefficients of p_0 .. p_n
    for k in range(n):
        pk = np.concatenate([[0.0], polys[k]]) - H[k, k] * np.append(polys[k], 0.0)
        prod = 1.0
        for i in range(k - 1, -1, -1):
            prod *= H[i + 1, i]
            term = H[i, k] * prod * polys[i]
            pk[:term.size] -= term
        polys.append(pk)
    return tuple(polys[n][:-1])


@dataclass
class AxisResult:
    eigenvalue: float
    vector: np.ndarray
    residual: float
    method: str
    fallback: bool = False
    alignment: float = 1.0


def _alignment(T, x):
    u = T @ x
    return float((u @ x) ** 2 / (u @ u))


def _alignment_grad(T, x):
    u = T @ x
    a = u @ x
    b = u @ u
    g = (2 * a * ((T + T.T) @ x) * b - a * a * 2 * (T.T @ u)) / (b * b)
    return g - (g @ x) * x


def _inverse_iteration(T, x, steps=30, tol=1e-13):
    n = T.shape[0]
    lam = float(x @ T @ x)
    for _ in range(steps):
        try:
            y = np.linalg.solve(T - (lam + POLISH_SHIFT) * np.eye(n), x)
        except np.linalg.LinAlgError:
            break
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0:
            break
        x = y / ny
        lam = float(x @ T @ x)
        if np.linalg.norm(T @ x - lam * x) <= tol * max(1.0, np.linalg.norm(T, 2)):
            break
    return lam, x


def real_odd_axis(T, seed=0, starts=32, iters=400):
    """Real eigenpair of a real matrix of odd size.

    Multi-start projected gradient ascent of <Tx,x>^2 / |Tx|^2 on the sphere,
    finished by shifted inverse iteration; the first start whose result
    reaches alignment 1 within 1e-10 and residual 1e-8 wins.  If every start
    stalls, falls back to a real root of the characteristic polynomial.
    """
    T = _num.as_real_matrix(T, square=True)
    n = T.shape[0]
    if n % 2 == 0:
        raise ParameterError("real_odd_axis needs odd dimension")
    if _num.smallest_singular_value(T) < 1e-12:
        v = _num.null_vector(T, 1e-12)
        return AxisResult(0.0, v, float(np.linalg.norm(T @ v)), "null-vector")
    rng = np.random.default_rng(seed)
    X0 = rng.standard_normal((starts, n))
    X0 /= np.linalg.norm(X0, axis=1, keepdims=True)
    for x in X0:
        f = _alignment(T, x)
        eta = 1.0
        for _ in range(iters):
            if f > 1 - 1e-4:
                break
            g = _alignment_grad(T, x)
            if np.linalg.norm(g) < 1e-14:
                break
            while eta > 1e-12:
                xn = x + eta * g
                xn /= np.linalg.norm(xn)
                fn = _alignment(T, xn)
                if fn > f:
                    x, f = xn, fn
                    eta *= 2.0
                    break
                eta *= 0.5
            else:
                break
        lam, v = _inverse_iteration(T, x)
        res = float(np.linalg.norm(T @ v - lam * v))
        if res <= RESIDUAL_TOL and _alignment(T, v) >= 1 - 1e-10:
            return AxisResult(lam, v, res, "alignment", alignment=_alignment(T, v))
    log.info("alignment search stalled on all %d starts; using characteristic polynomial", starts)
    lam = odd_poly_real_root(PolynomialReal(hessenberg_charpoly(T)))
    _, V = _num.jacobi_svd(T - lam * np.eye(n))
    lam, v = _inverse_iteration(T, V[:, -1])
    return AxisResult(lam, v, float(np.linalg.norm(T @ v - lam * v)), "charpoly", fallback=True,
                      alignment=_alignment(T, v))


def _immediate_witness(mats, rel=1e-14):
    """A witness read off directly when one matrix is singular or two are parallel."""
    r = len(mats)
    for i, A in enumerate(mats):
        if _num.smallest_singular_value(A) <= rel * max(np.linalg.norm(A), 1.0):
            s = np.zeros(r)
            s[i] = 1.0
            return s
    for i in range(r):
        for j in range(i + 1, r):
            Ai, Aj = mats[i], mats[j]
            c = np.sum(Ai * Aj) / np.sum(Aj * Aj)
            if np.linalg.norm(Ai - c * Aj) <= rel * np.linalg.norm(Ai):
                s = np.zeros(r)
                s[i], s[j] = 1.0, -c
                return s / np.linalg.norm(s)
    return None


def singular_combination_search(A1, A2, A3, mesh_level=4, **kw):
    """Minimize sigma_min(s1 A1 + s2 A2 + s3 A3) over the unit sphere.

    A singular member or a parallel pair gives a witness without searching.
    """
    fam = _bundles.SpanFamily(np.array([A1, A2, A3], dtype=float))
    s = _immediate_witness(fam.matrices)
    if s is not None:
        s = _search.canonical_sign(s)
        full = np.linalg.svd(fam.batch(s)[0], compute_uv=False)
        sigma = float(full[-1])
        rank = int(np.sum(full > 1e-8 * full[0])) if full[0] > 0 else 0
        return _search.SphereMinimum(sigma, s, rank, _search.classify(sigma), sigma,
                                     evaluations=1, samples=0, notes=["immediate witness"])
    return _bundles.min_rank_over_sphere(fam, mesh_level=mesh_level, **kw)


@dataclass
class SpectralCertificate:
    eigenvalue: complex
    eigenvector: np.ndarray
    residual: float
    witness: np.ndarray
    witness_sigma: float
    method: str
    polish_steps: int = 0
    witness_tol: float = WITNESS_TOL

    def to_dict(self):
        return {
            "eigenvalue": {"re": float(self.eigenvalue.real), "im": float(self.eigenvalue.imag)},
            "eigenvector": {"re": self.eigenvector.real.tolist(),
                            "im": self.eigenvector.imag.tolist()},
            "residual": float(self.residual),
            "residual_tol": RESIDUAL_TOL,
            "witness": {"point": [float(c) for c in self.witness],
                        "sigma_min": float(self.witness_sigma),
                        "sigma_tol": self.witness_tol},
            "method": self.method,
            "polish_steps": self.polish_steps,
        }


def _fix_phase(v):
    k = int(np.argmax(np.abs(v)))
    return v * (np.abs(v[k]) / v[k])


def complex_odd_eigen(T, mesh_level=4, restarts=32, max_iter=400, polish_steps=2,
                      max_polish=8, threads=1, witness_tol=WITNESS_TOL):
    """Eigenpair of a complex matrix of odd size via a singular combination of I, D, E."""
    T = _num.as_complex_matrix(T)
    n = T.shape[0]
    if n % 2 == 0:
        raise ParameterError("complex_odd_eigen handles odd dimension only")
    I = np.eye(2 * n)
    fam = _bundles.SpanFamily(np.array([I, _num.realify(T), _num.realify_i(T)]))
    hit = _search.minimize_sigma(fam.batch, 3, mesh_level=mesh_level, restarts=restarts,
                                 max_iter=max_iter, zero_tol=1e-10, use_det=False,
                                 threads=threads)
    alpha, beta, gamma = hit.witness
    if hit.sigma_min > witness_tol:
        raise SearchFailureError(
            f"no singular combination found: best sigma_min {hit.sigma_min:.3e}",
            witness=hit.witness, sigma_min=hit.sigma_min)
    w = complex(beta, gamma)
    if abs(w) ** 2 <= 1e-12:
        # sigma_min(+-I) = 1, so this cannot happen for a small witness
        raise SearchFailureError("witness lies on the identity axis", witness=hit.witness,
                                 sigma_min=hit.sigma_min)
    rho = -alpha / w
    M = _num.realify(T - rho * np.eye(n))
    tol = max(10 * hit.sigma_min, witness_tol) / abs(w)
    v = _num.real_to_complex_vector(_num.null_vector(M, tol))
    v /= np.linalg.norm(v)

    steps = 0
    residual = np.linalg.norm(T @ v - rho * v)
    while steps < max_polish and (steps < polish_steps or residual > 1e-2 * RESIDUAL_TOL):
        try:
            y = np.linalg.solve(T - (rho + POLISH_SHIFT) * np.eye(n), v)
        except np.linalg.LinAlgError:
            break
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0:
            break
        v = y / ny
        rho = complex(np.vdot(v, T @ v))
        residual = np.linalg.norm(T @ v - rho * v)
        steps += 1
    v = _fix_phase(v)
    residual = float(np.linalg.norm(T @ v - rho * v))
    return SpectralCertificate(complex(rho), v, residual, hit.witness, hit.sigma_min,
                               "singular-combination", steps, witness_tol)
