"""Exact bivariate polynomials with rational coefficients."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

Monomial = Tuple[int, int]


def as_fraction(v) -> Fraction:
    """Parse ints, Fractions and "p/q" strings exactly. Floats are rejected."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v.strip())
    raise TypeError(f"cannot convert {type(v).__name__} exactly to a rational")


@dataclass(frozen=True)
class PolynomialPhase:
    """Polynomial sum c_ij x1^i x2^j stored as a sparse exact map."""

    terms: Mapping[Monomial, Fraction] = field(default_factory=dict)
    degree_bound: int | None = None

    def __post_init__(self):
        clean: Dict[Monomial, Fraction] = {}
        for (i, j), c in dict(self.terms).items():
            i, j = int(i), int(j)
            if i < 0 or j < 0:
                raise ValueError("negative exponent")
            c = as_fraction(c)
            if c != 0:
                clean[(i, j)] = clean.get((i, j), Fraction(0)) + c
                if clean[(i, j)] == 0:
                    del clean[(i, j)]
        object.__setattr__(self, "terms", dict(sorted(clean.items())))
        deg = max((i + j for i, j in clean), default=0)
        if self.degree_bound is None:
            object.__setattr__(self, "degree_bound", deg)
        elif self.degree_bound < deg:
            raise ValueError("degree_bound below actual degree")

    # construction helpers
    @classmethod
    def from_terms(cls, items: Iterable[Tuple[int, int, object]]) -> "PolynomialPhase":
        acc: Dict[Monomial, Fraction] = {}
        for i, j, c in items:
            acc[(i, j)] = acc.get((i, j), Fraction(0)) + as_fraction(c)
        return cls(acc)

    @classmethod
    def x1(cls) -> "PolynomialPhase":
        return cls({(1, 0): Fraction(1)})

    @classmethod
    def x2(cls) -> "PolynomialPhase":
        return cls({(0, 1): Fraction(1)})

    @classmethod
    def const(cls, c) -> "PolynomialPhase":
        return cls({(0, 0): as_fraction(c)})

    # arithmetic
    def __add__(self, other):
        other = _coerce(other)
        acc = dict(self.terms)
        for k, c in other.terms.items():
            acc[k] = acc.get(k, Fraction(0)) + c
        return PolynomialPhase(acc)

    __radd__ = __add__

    def __neg__(self):
        return PolynomialPhase({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        acc: Dict[Monomial, Fraction] = {}
        for (i, j), c in self.terms.items():
            for (k, l), d in other.terms.items():
                key = (i + k, j + l)
                acc[key] = acc.get(key, Fraction(0)) + c * d
        return PolynomialPhase(acc)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = PolynomialPhase.const(1)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, PolynomialPhase):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    # queries
    @property
    def degree(self) -> int:
        return max((i + j for i, j in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, i: int, j: int) -> Fraction:
        return self.terms.get((i, j), Fraction(0))

    def homogeneous_part(self, k: int) -> "PolynomialPhase":
        return PolynomialPhase({m: c for m, c in self.terms.items() if sum(m) == k})

    def truncate(self, order: int) -> "PolynomialPhase":
        """Drop monomials of total degree above ``order``."""
        return PolynomialPhase({m: c for m, c in self.terms.items() if sum(m) <= order})

    def linear_substitute(self, M) -> "PolynomialPhase":
        """Return phi(M x), i.e. x1 -> M00 y1 + M01 y2, x2 -> M10 y1 + M11 y2."""
        y1, y2 = PolynomialPhase.x1(), PolynomialPhase.x2()
        u = as_fraction(M[0][0]) * y1 + as_fraction(M[0][1]) * y2
        v = as_fraction(M[1][0]) * y1 + as_fraction(M[1][1]) * y2
        return self.compose(u, v)

    def compose(self, u: "PolynomialPhase", v: "PolynomialPhase") -> "PolynomialPhase":
        out = PolynomialPhase()
        upow = [PolynomialPhase.const(1)]
        vpow = [PolynomialPhase.const(1)]
        for (i, j), c in self.terms.items():
            while len(upow) <= i:
                upow.append(upow[-1] * u)
            while len(vpow) <= j:
                vpow.append(vpow[-1] * v)
            out = out + c * upow[i] * vpow[j]
        return out

    def __call__(self, x1, x2):
        return sum(float(c) * x1**i * x2**j for (i, j), c in self.terms.items())

    def to_array(self) -> np.ndarray:
        """Dense float coefficient matrix C[i, j] of x1^i x2^j."""
        d1 = max((i for i, _ in self.terms), default=0)
        d2 = max((j for _, j in self.terms), default=0)
        C = np.zeros((d1 + 1, d2 + 1))
        for (i, j), c in self.terms.items():
            C[i, j] = float(c)
        return C

    def canonical(self) -> str:
        """Sorted, normalized text used for hashing."""
        return ";".join(f"{i},{j},{c.numerator}/{c.denominator}" for (i, j), c in self.terms.items())

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (i, j), c in self.terms.items():
            mono = "*".join(p for p in (f"x1^{i}" if i else "", f"x2^{j}" if j else "") if p)
            parts.append(f"({c})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def _coerce(v) -> PolynomialPhase:
    if isinstance(v, PolynomialPhase):
        return v
    return PolynomialPhase.const(v)


def model_polynomial(n: int, sign: int = 1) -> PolynomialPhase:
    """x1 x2^2 + sign x1^n."""
    return PolynomialPhase({(1, 2): 1, (n, 0): sign})


def normal_form_polynomial(b1, b2, psi: Mapping[int, object], b0: Mapping[int, object]) -> PolynomialPhase:
    """(b1 x1 + b2 x2^2)(x2 - psi(x1))^2 + b0(x1) with psi, b0 given as {power: coeff}."""
    x1, x2 = PolynomialPhase.x1(), PolynomialPhase.x2()
    p = PolynomialPhase({(k, 0): c for k, c in psi.items()})
    b = as_fraction(b1) * x1 + as_fraction(b2) * x2 * x2
    return b * (x2 - p) ** 2 + PolynomialPhase({(k, 0): c for k, c in b0.items()})
