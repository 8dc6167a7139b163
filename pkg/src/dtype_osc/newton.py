"""Exact lattice geometry: Taylor support, Newton polygon, Newton distance, heights."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

import sympy as sp

from .exceptions import EmptySupport, InvalidPhase, ZeroForm
from .polynomial import PolynomialPhase

MAX_DEGREE = 64


@dataclass(frozen=True, order=True)
class LatticePoint:
    t1: int
    t2: int

    def __post_init__(self):
        if self.t1 < 0 or self.t2 < 0 or self.t1 + self.t2 < 1:
            raise ValueError(f"invalid lattice point ({self.t1},{self.t2})")

    def as_tuple(self) -> Tuple[int, int]:
        return (self.t1, self.t2)


@dataclass(frozen=True)
class TaylorSupport:
    points: frozenset
    coefficients: dict

    def __post_init__(self):
        if any(c == 0 for c in self.coefficients.values()):
            raise ValueError("zero coefficient in support")
        if set(self.coefficients) != set(self.points):
            raise ValueError("points and coefficients disagree")

    @classmethod
    def from_points(cls, pts) -> "TaylorSupport":
        lp = frozenset(p if isinstance(p, LatticePoint) else LatticePoint(*p) for p in pts)
        return cls(lp, {p: Fraction(1) for p in lp})

    def polynomial(self) -> PolynomialPhase:
        return PolynomialPhase({p.as_tuple(): c for p, c in self.coefficients.items()})


@dataclass(frozen=True)
class Edge:
    start: LatticePoint
    end: LatticePoint
    weight: Tuple[Fraction, Fraction]  # kappa with kappa . t = 1 on the edge


@dataclass(frozen=True)
class NewtonPolygon:
    vertices: Tuple[LatticePoint, ...]  # decreasing t2
    edges: Tuple[Edge, ...]
    support: TaylorSupport

    def contains(self, t1, t2) -> bool:
        """Membership of a real point in the hull of the union of octants."""
        t1, t2 = Fraction(t1), Fraction(t2)
        first, last = self.vertices[0], self.vertices[-1]
        if t1 < first.t1 or t2 < last.t2:
            return False
        return all(e.weight[0] * t1 + e.weight[1] * t2 >= 1 for e in self.edges)


@dataclass(frozen=True)
class Face:
    """A vertex, a compact edge, or one of the two unbounded rays of the polygon."""

    kind: str  # "vertex" | "edge" | "vertical_ray" | "horizontal_ray"
    points: Tuple[LatticePoint, ...]
    weight: Optional[Tuple[Fraction, Fraction]] = None

    def contains(self, p: LatticePoint) -> bool:
        if self.kind == "vertex":
            return p == self.points[0]
        if self.kind == "edge":
            a, b = self.points
            on_line = self.weight[0] * p.t1 + self.weight[1] * p.t2 == 1
            return on_line and min(a.t1, b.t1) <= p.t1 <= max(a.t1, b.t1)
        v = self.points[0]
        if self.kind == "vertical_ray":
            return p.t1 == v.t1 and p.t2 >= v.t2
        return p.t2 == v.t2 and p.t1 >= v.t1


@dataclass(frozen=True)
class NewtonDistanceResult:
    d: Fraction
    principal_face: Face
    principal_part: PolynomialPhase


@dataclass(frozen=True)
class HeightReport:
    d_given: Fraction
    h: Fraction
    h_lin_paper: Fraction
    adapted_linear: bool


def taylor_support(poly: PolynomialPhase) -> TaylorSupport:
    if poly.is_zero():
        raise InvalidPhase("zero polynomial has no Taylor support")
    for k in ((0, 0), (1, 0), (0, 1)):
        if poly.coeff(*k) != 0:
            raise InvalidPhase(f"phase has a nonzero term x1^{k[0]} x2^{k[1]}; need a critical point at 0")
    if poly.degree > MAX_DEGREE:
        raise InvalidPhase(f"degree {poly.degree} exceeds cap {MAX_DEGREE}")
    pts = {LatticePoint(i, j): c for (i, j), c in poly.terms.items()}
    return TaylorSupport(frozenset(pts), pts)


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _edge_weight(a: LatticePoint, b: LatticePoint) -> Tuple[Fraction, Fraction]:
    det = a.t1 * b.t2 - a.t2 * b.t1
    k1 = Fraction(b.t2 - a.t2, det)
    k2 = Fraction(a.t1 - b.t1, det)
    return (k1, k2)


def newton_polygon(support: TaylorSupport) -> NewtonPolygon:
    if not support.points:
        raise EmptySupport("empty Taylor support")
    pts = sorted({p.as_tuple() for p in support.points})
    tmin = min(p[1] for p in pts)
    end = min(p for p in pts if p[1] == tmin)
    # lower hull by monotone chain, left to right, strict turns only
    hull: List[Tuple[int, int]] = []
    for p in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    # leftmost lowest start is pts[0]; the staircase ends at ``end``
    chain = hull[: hull.index(end) + 1]
    verts = tuple(LatticePoint(*p) for p in chain)
    edges = tuple(Edge(a, b, _edge_weight(a, b)) for a, b in zip(verts, verts[1:]))
    return NewtonPolygon(verts, edges, support)


def newton_distance(polygon: NewtonPolygon) -> NewtonDistanceResult:
    verts = polygon.vertices
    face: Face
    d: Fraction
    for v in verts:
        if v.t1 == v.t2:
            d, face = Fraction(v.t1), Face("vertex", (v,))
            break
    else:
        first, last = verts[0], verts[-1]
        if first.t1 > first.t2:
            d, face = Fraction(first.t1), Face("vertical_ray", (first,))
        elif last.t2 > last.t1:
            d, face = Fraction(last.t2), Face("horizontal_ray", (last,))
        else:
            for e in polygon.edges:
                # the bisectrix crosses this edge when t1 - t2 changes sign along it
                if (e.start.t1 - e.start.t2) < 0 < (e.end.t1 - e.end.t2):
                    d = 1 / (e.weight[0] + e.weight[1])
                    face = Face("edge", (e.start, e.end), e.weight)
                    break
            else:  # pragma: no cover - geometry guarantees a crossing
                raise RuntimeError("bisectrix does not meet the polygon")
    part = PolynomialPhase(
        {p.as_tuple(): c for p, c in polygon.support.coefficients.items() if face.contains(p)}
    )
    return NewtonDistanceResult(d, face, part)


def distance_of(poly: PolynomialPhase) -> Fraction:
    return newton_distance(newton_polygon(taylor_support(poly))).d


def _form_in_t(form: PolynomialPhase) -> Tuple[int, sp.Poly]:
    k = form.degree
    t = sp.Symbol("t")
    # dehomogenize at x2 = 1: g(t) = form(t, 1); roots t give directions (t, 1)
    expr = sum(sp.Rational(c.numerator, c.denominator) * t**i for (i, j), c in form.terms.items())
    return k, sp.Poly(expr, t, domain="QQ")


def _check_form(form: PolynomialPhase) -> int:
    if form.is_zero():
        raise ZeroForm("form is identically zero")
    degs = {i + j for i, j in form.terms}
    if len(degs) != 1:
        raise ValueError("form is not homogeneous")
    k = degs.pop()
    if k < 2:
        raise ValueError("form degree must be at least 2")
    return k


def real_root_lines(form: PolynomialPhase) -> List[Tuple[Tuple[object, int], int]]:
    """Real projective root directions with multiplicity.

    Each entry is ((t, 1), mult) for the line through (t, 1), or ((1, 0), mult) for the
    x1 axis.  t is a sympy number (exact, possibly irrational algebraic).
    """
    k = _check_form(form)
    _, g = _form_in_t(form)
    out = []
    at_inf = k - g.degree()
    if at_inf > 0:
        out.append(((1, 0), at_inf))
    _, factors = g.sqf_list()
    for fac, mult in factors:
        for r in sp.Poly(fac, g.gens[0]).real_roots():
            out.append(((r, 1), mult))
    return out


def max_root_multiplicity(form: PolynomialPhase) -> int:
    lines = real_root_lines(form)
    return max((mult for _, mult in lines), default=0)


def height_report(nf) -> HeightReport:
    """Height bookkeeping for a normal form (see normalform.NormalFormData)."""
    m, n = nf.m, nf.n
    if n == math.inf:
        h = Fraction(2)
        adapted = True
    else:
        h = Fraction(2 * n, n + 1)
        adapted = m == math.inf or 2 * m + 1 >= n
    if not adapted:
        h_lin = Fraction(2 * m + 1, 2 * m)
    else:
        h_lin = h
    d_given = distance_of(nf.phase)
    return HeightReport(d_given, h, h_lin, adapted)
