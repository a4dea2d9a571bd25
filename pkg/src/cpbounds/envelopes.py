"""Concave envelopes of f(x_i, x_j) = (x_j - x_i)^2 over planar polygons.

Because f is convex, its concave envelope over a polygon interpolates the
vertex values: it is the lower surface of the upper convex hull of the lifted
vertices ``(v, f(v))``.  Each hull facet is one affine piece and the envelope
is the minimum over pieces.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import DegenerateDomain, NonPositiveBound
from .exact import LinExpr, VarId

Point2 = tuple[Fraction, Fraction]


def sqdiff(p: Point2) -> Fraction:
    return (p[1] - p[0]) ** 2


@dataclass(frozen=True)
class AffinePiece:
    """a0 + ai * x_i + aj * x_j."""

    a0: Fraction
    ai: Fraction
    aj: Fraction

    def __call__(self, p: Point2) -> Fraction:
        return self.a0 + self.ai * p[0] + self.aj * p[1]

    def expr(self, vi: VarId, vj: VarId) -> LinExpr:
        return LinExpr({vi: self.ai, vj: self.aj}, self.a0)

    def scaled(self, k) -> AffinePiece:
        return AffinePiece(self.a0 * k, self.ai * k, self.aj * k)


def _cross(o: Point2, a: Point2, b: Point2) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@dataclass(frozen=True)
class Polytope2:
    """Convex polygon given by counterclockwise vertices."""

    vertices: tuple[Point2, ...]

    def __post_init__(self):
        verts = tuple((Fraction(a), Fraction(b)) for a, b in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3 or len(set(verts)) != len(verts):
            raise DegenerateDomain("need at least three distinct vertices")
        k = len(verts)
        for t in range(k):
            turn = _cross(verts[t], verts[(t + 1) % k], verts[(t + 2) % k])
            if turn <= 0:
                raise DegenerateDomain("vertices must be strictly convex and counterclockwise")

    @classmethod
    def box(cls, u1, u2) -> Polytope2:
        return cls(((0, 0), (u1, 0), (u1, u2), (0, u2)))

    @classmethod
    def triangle(cls, u) -> Polytope2:
        """0 <= x_i <= x_j <= u."""
        return cls(((0, 0), (u, u), (0, u)))

    @classmethod
    def trapezoid(cls, ui, uj) -> Polytope2:
        """0 <= x_i <= x_j <= uj with x_i <= ui (ui < uj)."""
        return cls(((0, 0), (ui, ui), (ui, uj), (0, uj)))

    def contains(self, p: Point2) -> bool:
        k = len(self.vertices)
        return all(_cross(self.vertices[t], self.vertices[(t + 1) % k], p) >= 0
                   for t in range(k))


@dataclass(frozen=True)
class EnvelopeSet:
    pieces: tuple[AffinePiece, ...]
    domain: Polytope2

    def __call__(self, p: Point2) -> Fraction:
        return min(piece(p) for piece in self.pieces)


def envelope_box(u1, u2) -> EnvelopeSet:
    """Envelope over [0,u1] x [0,u2], in the fixed two-piece order."""
    u1, u2 = Fraction(u1), Fraction(u2)
    if u1 <= 0 or u2 <= 0:
        raise NonPositiveBound("box bounds must be positive")
    pieces = (AffinePiece(Fraction(0), u1, u2),
              AffinePiece(2 * u1 * u2, u1 - 2 * u2, u2 - 2 * u1))
    return EnvelopeSet(pieces, Polytope2.box(u1, u2))


def envelope_triangle(u) -> EnvelopeSet:
    """Envelope over 0 <= x_i <= x_j <= u: the single piece u * (x_j - x_i)."""
    u = Fraction(u)
    if u <= 0:
        raise NonPositiveBound("triangle bound must be positive")
    return EnvelopeSet((AffinePiece(Fraction(0), -u, u),), Polytope2.triangle(u))


def _plane_through(p: Point2, q: Point2, r: Point2) -> AffinePiece | None:
    det = _cross(p, q, r)
    if det == 0:
        return None
    fp, fq, fr = sqdiff(p), sqdiff(q), sqdiff(r)
    # Solve a0 + ai*v0 + aj*v1 = f(v) for the three points by Cramer's rule.
    ai = ((fq - fp) * (r[1] - p[1]) - (fr - fp) * (q[1] - p[1])) / det
    aj = ((fr - fp) * (q[0] - p[0]) - (fq - fp) * (r[0] - p[0])) / det
    a0 = fp - ai * p[0] - aj * p[1]
    return AffinePiece(a0, ai, aj)


def envelope_polytope(domain: Polytope2) -> EnvelopeSet:
    """Upper-hull facets of the lifted vertices, deduplicated and pruned.

    Every vertex triple that is not collinear spans a candidate plane; it is a
    hull facet iff it lies on or above all lifted vertices.  Pieces that are
    nowhere strictly below the rest are dropped.  Output order follows the
    lexicographically first vertex triple that produced each piece.
    """
    verts = domain.vertices
    lifted = [(v, sqdiff(v)) for v in verts]
    pieces: list[AffinePiece] = []
    for tri in combinations(range(len(verts)), 3):
        plane = _plane_through(*(verts[t] for t in tri))
        if plane is None:
            continue
        if all(plane(v) >= fv for v, fv in lifted) and plane not in pieces:
            pieces.append(plane)
    kept = [p for p in pieces if not _dominated(p, pieces, verts)]
    return EnvelopeSet(tuple(kept), domain)


def _dominated(piece: AffinePiece, pieces: list[AffinePiece], verts) -> bool:
    # Affine functions compare on a polygon by comparing at its vertices.
    return any(other != piece and all(other(v) <= piece(v) for v in verts)
               for other in pieces)
