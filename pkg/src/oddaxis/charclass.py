"""Mod-2 characteristic-class arithmetic over real projective spaces.

Elements of Z2[a]/(a^{n+1}) are stored as Python ints whose bit j is the
coefficient of a^j; multiplication is carryless (shift and xor).  The total
Stiefel-Whitney class of k copies of the canonical line bundle plus l
trivial lines over RP^n is (1 + a)^k in that ring.
"""
import csv
import io
from dataclasses import dataclass

from .errors import DimensionError, ParameterError


@dataclass(frozen=True)
class TruncatedZ2Poly:
    n: int
    bits: int = 1

    def __post_init__(self):
        if self.n < 0:
            raise ParameterError("truncation index must be >= 0")
        if self.bits < 0:
            raise ParameterError("coefficient bits must be a nonnegative int")
        object.__setattr__(self, "bits", self.bits & ((1 << (self.n + 1)) - 1))

    @classmethod
    def from_coeffs(cls, coeffs):
        coeffs = list(coeffs)
        if any(c not in (0, 1) for c in coeffs):
            raise ParameterError("coefficients must be 0 or 1")
        bits = sum(c << j for j, c in enumerate(coeffs))
        return cls(len(coeffs) - 1, bits)

    @classmethod
    def one(cls, n):
        return cls(n, 1)

    @property
    def coeffs(self):
        return [(self.bits >> j) & 1 for j in range(self.n + 1)]

    def is_one(self):
        return self.bits == 1

    def __mul__(self, other):
        return z2_multiply(self, other)

    def __pow__(self, k):
        return z2_power(self, k)

    def __str__(self):
        terms = []
        for j, c in enumerate(self.coeffs):
            if c:
                terms.append("1" if j == 0 else ("a" if j == 1 else f"a^{j}"))
        return " + ".join(terms) if terms else "0"


def _clmul(x, y):
    out = 0
    while y:
        if y & 1:
            out ^= x
        x <<= 1
        y >>= 1
    return out


def z2_multiply(p, q):
    """Product in Z2[a]/(a^{n+1})."""
    if p.n != q.n:
        raise DimensionError(f"truncation mismatch: n={p.n} vs n={q.n}")
    return TruncatedZ2Poly(p.n, _clmul(p.bits, q.bits))


def z2_power(p, k):
    if k < 0:
        raise ParameterError("exponent must be >= 0")
    result = TruncatedZ2Poly.one(p.n)
    base = p
    while k:
        if k & 1:
            result = z2_multiply(result, base)
        base = z2_multiply(base, base)
        k >>= 1
    return result


def total_sw_class(k, l, n):
    """w(k gamma + l epsilon) over RP^n; the trivial summands contribute 1."""
    if k < 0 or l < 0:
        raise ParameterError("k and l must be >= 0")
    if n < 1:
        raise ParameterError("n must be >= 1")
    return z2_power(TruncatedZ2Poly(n, 0b11), k)


def is_sw_trivial(k, n):
    return total_sw_class(k, 0, n).is_one()


def pascal_mod2_rows(kmax):
    """Rows 0..kmax of Pascal's triangle mod 2, built by addition only."""
    rows = [[1]]
    for _ in range(kmax):
        prev = rows[-1]
        rows.append([1] + [(prev[j - 1] + prev[j]) % 2 for j in range(1, len(prev))] + [1])
    return rows


@dataclass(frozen=True)
class RadonHurwitzDecomposition:
    n: int
    b: int
    m: int
    c: int
    d: int

    @property
    def value(self):
        return 2 ** self.c + 8 * self.d


def radon_hurwitz(n):
    """Return (rho(n), decomposition) with n = 2^b (2m+1), b = c + 4d, rho = 2^c + 8d."""
    if not isinstance(n, int) or n < 1:
        raise ParameterError("radon_hurwitz needs an integer n >= 1")
    b = (n & -n).bit_length() - 1
    odd = n >> b
    dec = RadonHurwitzDecomposition(n=n, b=b, m=(odd - 1) // 2, c=b % 4, d=b // 4)
    return dec.value, dec


def sw_table(K, N):
    """table[k-1][n-1] is True when w(k gamma) = 1 over RP^n."""
    if K < 1 or N < 1:
        raise ParameterError("K and N must be >= 1")
    return [[is_sw_trivial(k, n) for n in range(1, N + 1)] for k in range(1, K + 1)]


def sw_table_csv(K, N):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k"] + [f"n={n}" for n in range(1, N + 1)])
    for k, row in enumerate(sw_table(K, N), start=1):
        w.writerow([k] + ["trivial" if t else "obstructed" for t in row])
    return buf.getvalue()
