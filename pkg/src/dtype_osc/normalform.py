"""Reduction of corank-2 polynomial phases to b(x)(x2 - psi(x1))^2 + b0(x1).

All series arithmetic is exact (Fractions).  A univariate truncated series is a list
``s`` with ``s[k]`` the coefficient of x1^k.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import List, Optional, Tuple

import sympy as sp

from .exceptions import InvalidInvariants, NotDType, ReductionFailed
from .newton import max_root_multiplicity, real_root_lines
from .polynomial import PolynomialPhase

Series = List[Fraction]
Matrix = Tuple[Tuple[Fraction, Fraction], Tuple[Fraction, Fraction]]
IDENTITY: Matrix = ((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)))


class Regime(str, enum.Enum):
    LA = "LA"
    EXCEPTIONAL = "EXCEPTIONAL"
    NLA = "NLA"
    D_INF = "D_INF"


@dataclass(frozen=True)
class SeriesCurve:
    coefficients: Tuple[Fraction, ...]  # index = power of x1
    truncation_order: int

    def __post_init__(self):
        if any(c != 0 for c in self.coefficients[:2]):
            raise ValueError("series curve must start at order >= 2")

    @property
    def order(self):
        for k, c in enumerate(self.coefficients):
            if c != 0:
                return k
        return math.inf

    def as_dict(self):
        return {k: c for k, c in enumerate(self.coefficients) if c != 0}


@dataclass(frozen=True)
class NormalFormData:
    m: int | float
    n: int | float
    psi: SeriesCurve
    b0: Tuple[Fraction, ...]
    omega0: Optional[Fraction]
    beta0: Optional[Fraction]
    b1_0: Fraction
    b2_series: Tuple[Fraction, ...]
    linear_change: Matrix
    order: int
    phase: PolynomialPhase  # input after the linear change
    u_coeffs: Tuple[Tuple[Fraction, ...], ...] = field(repr=False, default=())  # A_j(x1)

    def __post_init__(self):
        if self.b1_0 == 0:
            raise InvalidInvariants("b1_0 must be nonzero")
        if self.n != math.inf and (self.beta0 is None or self.beta0 == 0):
            raise InvalidInvariants("beta0 must be nonzero for finite n")
        if self.m != math.inf and (self.omega0 is None or self.omega0 == 0):
            raise InvalidInvariants("omega0 must be nonzero for finite m")

    def reconstruct(self) -> PolynomialPhase:
        """Re-expand sum_j A_j(x1)(x2 - psi)^j, truncated at total order N."""
        N = self.order
        x2 = PolynomialPhase.x2()
        psi = PolynomialPhase({(k, 0): c for k, c in self.psi.as_dict().items()})
        u = x2 - psi
        out = PolynomialPhase()
        upow = PolynomialPhase.const(1)
        for j, A in enumerate(self.u_coeffs):
            if j:
                upow = (upow * u).truncate(N)
            Aj = PolynomialPhase({(k, 0): c for k, c in enumerate(A) if c != 0})
            out = out + (Aj * upow).truncate(N)
        return out.truncate(N)

    @property
    def regime(self) -> Optional[Regime]:
        if self.m == math.inf and self.n == math.inf:
            return None
        return classify_regime(self.m, self.n)


# ---------------------------------------------------------------- series helpers

def _smul(a: Series, b: Series, N: int) -> Series:
    out = [Fraction(0)] * (N + 1)
    for i, x in enumerate(a[: N + 1]):
        if x == 0:
            continue
        for j, y in enumerate(b[: N + 1 - i]):
            if y:
                out[i + j] += x * y
    return out


def _spow_list(a: Series, e: int, N: int) -> List[Series]:
    pows = [[Fraction(1)] + [Fraction(0)] * N]
    for _ in range(e):
        pows.append(_smul(pows[-1], a, N))
    return pows


def _order(s: Series) -> int | float:
    for k, c in enumerate(s):
        if c != 0:
            return k
    return math.inf


# ---------------------------------------------------------------- operations

def corank(poly: PolynomialPhase) -> int:
    H = sp.Matrix([[2 * poly.coeff(2, 0), poly.coeff(1, 1)], [poly.coeff(1, 1), 2 * poly.coeff(0, 2)]])
    H = H.applyfunc(lambda c: sp.Rational(c.numerator, c.denominator))
    return 2 - H.rank()


def _matmul(A: Matrix, B: Matrix) -> Matrix:
    return tuple(
        tuple(sum((A[i][k] * B[k][j] for k in range(2)), Fraction(0)) for j in range(2)) for i in range(2)
    )


def dtype_linear_change(poly: PolynomialPhase) -> Tuple[Matrix, PolynomialPhase]:
    """Rational linear map M (x = M y) sending a simple real root line of the cubic part to {y1 = 0}.

    A shear then removes the y1^2 y2 term, so the new cubic part is c y1 y2^2 + a y1^3.
    """
    if corank(poly) != 2:
        raise NotDType("singularity is not of corank two")
    cubic = poly.homogeneous_part(3)
    if cubic.is_zero():
        raise NotDType("cubic part vanishes")
    if max_root_multiplicity(cubic) >= 3:
        raise NotDType("cubic part is a perfect cube of a linear form")
    best = None
    irrational = False
    for direction, mult in real_root_lines(cubic):
        if mult != 1:
            continue
        if direction == (1, 0):
            M = ((Fraction(0), Fraction(1)), (Fraction(1), Fraction(0)))
            key_angle = None  # quarter turn, largest rotation
        else:
            t = direction[0]
            if not t.is_Rational:
                irrational = True
                continue
            t = Fraction(int(t.p), int(t.q))
            M = ((Fraction(1), t), (Fraction(0), Fraction(1)))
            key_angle = abs(t)
        moved = cubic.linear_substitute(M)
        c = moved.coeff(1, 2)
        if c == 0:
            continue
        # |Q(0,1)| in orthonormal coordinates along the root line: c^2 / |u|^6 with u the direction
        if direction == (1, 0):
            norm2 = Fraction(1)
        else:
            norm2 = 1 + key_angle**2
        score = c * c / norm2**3
        angle_rank = (1, 0) if key_angle is None else (0, key_angle)
        cand = (-score, angle_rank, M)
        if best is None or cand[:2] < best[:2]:
            best = cand
    if best is None:
        if irrational:
            raise ReductionFailed("only irrational simple root lines; exact rational reduction unavailable")
        raise NotDType("no real root line with Q(0,1) != 0")
    M = best[2]
    moved = poly.linear_substitute(M)
    c, b = moved.coeff(1, 2), moved.coeff(2, 1)
    if b != 0:
        S = ((Fraction(1), Fraction(0)), (-b / (2 * c), Fraction(1)))
        M = _matmul(M, S)
        moved = poly.linear_substitute(M)
    return M, moved


def default_order(poly: PolynomialPhase) -> int:
    return 2 * poly.degree_bound + 4


def _poly_columns(poly: PolynomialPhase, N: int):
    """Map j -> series in x1 of the coefficient of x2^j."""
    cols = {}
    for (i, j), c in poly.terms.items():
        if i <= N:
            cols.setdefault(j, [Fraction(0)] * (N + 1))[i] += c
    return cols


def extract_psi(poly: PolynomialPhase, N: Optional[int] = None) -> SeriesCurve:
    """Formal curve x2 = psi(x1) = O(x1^2) with d/dx2 phi(x1, psi) = 0 mod x1^(N+1)."""
    N = default_order(poly) if N is None else N
    pivot = 2 * poly.coeff(1, 2)
    if pivot == 0:
        raise ReductionFailed("coefficient of x1 x2^2 vanishes; order-by-order solve is singular")
    cols = _poly_columns(poly, N)
    dcols = {j - 1: [j * c for c in col] for j, col in cols.items() if j >= 1}
    psi = [Fraction(0)] * (N + 1)
    jmax = max(dcols, default=0)
    for k in range(2, N):
        # residual coefficient of x1^(k+1) with psi known below order k
        pows = _spow_list(psi, jmax, N)
        res = Fraction(0)
        for j, col in dcols.items():
            res += _smul(col, pows[j], N)[k + 1]
        psi[k] = -res / pivot
    pows = _spow_list(psi, jmax, N)
    resid = [Fraction(0)] * (N + 1)
    for j, col in dcols.items():
        resid = [a + b for a, b in zip(resid, _smul(col, pows[j], N))]
    if any(resid):
        raise ReductionFailed("critical curve equation not solved to order N")
    return SeriesCurve(tuple(psi[:N]), N)


def _u_expansion(poly: PolynomialPhase, psi: SeriesCurve, N: int) -> List[Series]:
    """A_l(x1) with phi(x1, u + psi(x1)) = sum_l A_l(x1) u^l, each mod x1^(N+1)."""
    cols = _poly_columns(poly, N)
    p = list(psi.coefficients) + [Fraction(0)] * (N + 1 - len(psi.coefficients))
    jmax = max(cols, default=0)
    pows = _spow_list(p, jmax, N)
    A = [[Fraction(0)] * (N + 1) for _ in range(jmax + 1)]
    for j, col in cols.items():
        for l in range(j + 1):
            term = _smul(col, pows[j - l], N)
            A[l] = [a + comb(j, l) * t for a, t in zip(A[l], term)]
    return A


def extract_b0_b(poly: PolynomialPhase, psi: SeriesCurve, N: Optional[int] = None,
                 linear_change: Matrix = IDENTITY) -> NormalFormData:
    N = psi.truncation_order if N is None else N
    A = _u_expansion(poly, psi, N)
    if len(A) < 3:
        raise NotDType("phase is at most linear in x2")
    if any(A[1]):
        raise ReductionFailed("(phi - b0) is not divisible by (x2 - psi)^2")
    b0 = A[0]
    n = _order(b0)
    if n != math.inf and n <= 2:
        raise NotDType(f"b0 has order {n}")
    b1_0 = A[2][1]
    if A[2][0] != 0 or b1_0 == 0:
        raise NotDType("b(0,0) != 0 or d1 b(0,0) = 0")
    if len(A) > 3 and A[3][0] != 0:
        raise NotDType("d2 b(0,0) != 0")
    m = psi.order
    omega0 = psi.coefficients[m] if m != math.inf else None
    beta0 = b0[n] if n != math.inf else None
    b2 = tuple(a[0] for a in A[4:])
    return NormalFormData(
        m=m, n=n, psi=psi, b0=tuple(b0), omega0=omega0, beta0=beta0, b1_0=b1_0,
        b2_series=b2, linear_change=linear_change, order=N, phase=poly,
        u_coeffs=tuple(tuple(a) for a in A),
    )


def reduce_to_normal_form(poly: PolynomialPhase, N: Optional[int] = None) -> NormalFormData:
    M, moved = dtype_linear_change(poly)
    N = default_order(poly) if N is None else N
    psi = extract_psi(moved, N)
    return extract_b0_b(moved, psi, N, M)


def classify_regime(m, n) -> Regime:
    if m == math.inf and n == math.inf:
        raise InvalidInvariants("m and n cannot both be infinite")
    if n < 3 or m < 2:
        raise InvalidInvariants(f"invalid invariants m={m}, n={n}")
    if n == math.inf:
        return Regime.D_INF
    if m == math.inf or 2 * m + 1 > n:
        return Regime.LA
    if 2 * m + 1 == n:
        return Regime.EXCEPTIONAL
    return Regime.NLA
