"""Small dense real/complex linear algebra.

Matrices are plain numpy arrays. The routines here are meant for the tiny
sizes used throughout the package (q <= 64), where a readable Python
implementation is fast enough and easy to audit.  Batched scans over many
sphere samples use LAPACK through ``batch_smallest_singular_values``.
"""
import numpy as np

from .errors import DimensionError, NoNullVectorError, ParameterError

PIVOT_FLOOR = 1e-300


def as_real_matrix(M, square=False):
    """Validate ``M`` as a finite real 2-D array and return a float copy."""
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ParameterError("matrix has non-finite entries")
    return A


def as_complex_matrix(T):
    A = np.array(T, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionError(f"expected a square complex matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ParameterError("matrix has non-finite entries")
    return A


def determinant(M):
    """Determinant by Gaussian elimination with partial pivoting.

    The sign comes from the parity of the row swaps.  A pivot below 1e-300
    in magnitude is treated as exact singularity and 0.0 is returned.
    """
    A = as_real_matrix(M, square=True)
    n = A.shape[0]
    det = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        pivot = A[p, k]
        if abs(pivot) < PIVOT_FLOOR:
            return 0.0
        if p != k:
            A[[k, p]] = A[[p, k]]
            det = -det
        det *= pivot
        if k + 1 < n:
            factors = A[k + 1:, k] / pivot
            A[k + 1:, k:] -= np.outer(factors, A[k, k:])
    return float(det)


def jacobi_svd(M, max_sweeps=60):
    """One-sided (Hestenes) Jacobi SVD.

    Returns ``(sigma, V)`` with singular values in descending order and the
    matching right singular vectors as columns of ``V``.  Wide matrices are
    padded with zero rows so that every column of V is a right singular vector.
    """
    A = as_real_matrix(M)
    m, n = A.shape
    if m < n:
        A = np.vstack([A, np.zeros((n - m, n))])
    V = np.eye(n)
    eps = np.finfo(float).eps
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                ai = A[:, i]
                aj = A[:, j]
                alpha = ai @ ai
                beta = aj @ aj
                gamma = ai @ aj
                if gamma == 0.0 or abs(gamma) <= eps * np.sqrt(alpha * beta):
                    continue
                rotated = True
                diff = beta - alpha
                if abs(diff) > 1e150 * abs(gamma):
                    t = gamma / diff        # tan of a negligible angle; zeta would overflow
                else:
                    zeta = diff / (2.0 * gamma)
                    t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                A[:, [i, j]] = np.column_stack([c * ai - s * aj, s * ai + c * aj])
                vi = V[:, i].copy()
                vj = V[:, j].copy()
                V[:, i] = c * vi - s * vj
                V[:, j] = s * vi + c * vj
        if not rotated:
            break
    sigma = np.sqrt(np.einsum("ij,ij->j", A, A))
    order = np.argsort(-sigma, kind="stable")
    return sigma[order], V[:, order]


def singular_values(M):
    return jacobi_svd(M)[0]


def smallest_singular_value(M):
    """sigma_min of a square matrix; 0 signals singularity."""
    A = as_real_matrix(M, square=True)
    return float(jacobi_svd(A)[0][-1])


def batch_smallest_singular_values(stack):
    """sigma_min for a stack of square matrices, shape (..., q, q)."""
    S = np.asarray(stack, dtype=float)
    if S.ndim < 2 or S.shape[-1] != S.shape[-2]:
        raise DimensionError(f"expected a stack of square matrices, got shape {S.shape}")
    return np.linalg.svd(S, compute_uv=False)[..., -1]


def null_vector(M, tol):
    """Unit vector v with ||M v|| <= 10 * tol.

    Raises NoNullVectorError when sigma_min(M) > tol.
    """
    A = as_real_matrix(M, square=True)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    sigma, V = jacobi_svd(A)
    if sigma[-1] > tol:
        raise NoNullVectorError(float(sigma[-1]), tol)
    v = V[:, -1]
    return v / np.linalg.norm(v)


def realify(T):
    """2n x 2n real form of a complex n x n matrix.

    Entry a + ib becomes the block [[a, -b], [b, a]], so that the complex
    vector (x1 + i y1, ...) corresponds to (x1, y1, ...).
    """
    C = as_complex_matrix(T)
    n = C.shape[0]
    a = C.real
    b = C.imag
    R = np.empty((2 * n, 2 * n))
    R[0::2, 0::2] = a
    R[0::2, 1::2] = -b
    R[1::2, 0::2] = b
    R[1::2, 1::2] = a
    return R


def realify_i(T):
    """Real form of i*T."""
    return realify(1j * as_complex_matrix(T))


def complex_to_real_vector(v):
    v = np.asarray(v, dtype=complex)
    out = np.empty(2 * v.size)
    out[0::2] = v.real
    out[1::2] = v.imag
    return out


def real_to_complex_vector(x):
    x = np.asarray(x, dtype=float)
    if x.size % 2:
        raise DimensionError("real vector must have even length")
    return x[0::2] + 1j * x[1::2]
