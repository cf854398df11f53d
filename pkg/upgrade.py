"""
Geometry of the metric upgrade.

A projective reconstruction is upgraded by the 4x4 homography

    H = [[h1, h2, h3, 0],
         [0,  h4, h5, 0],
         [0,  0,  h6, 0],
         [h1 - h9, h7, h8, h9]]

whose unknowns are recovered from segments of known length. This module holds
the instance types, the canonical frame fixing, the constraint polynomials fed
to the Groebner solver and the length based error measures.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from math import lcm
from pathlib import Path
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import mpmath
import sympy as sp
from pydantic import ValidationError

from algebra import CONSTANT, Polynomial, PolynomialRing, parse_monomial
from data_model import FORMAT_VERSION, GroundTruthRecord, InstanceFile, Monomial, SegmentRecord
from text_utils import format_decimal, mpf_to_fraction, parse_decimal

logger = logging.getLogger(__name__)

DET_MONOMIAL = parse_monomial("h1*h4*h6*h9*h10")


class SingularParams(ValueError):
    """h1*h4*h6*h9 vanishes, so H is not invertible."""


class DegenerateFrame(ValueError):
    """The designated frame points are collinear, coincident or at infinity."""


class PointAtInfinity(UserWarning):
    """A mapped point has a zero homogeneous coordinate."""


def _exact(x: Any) -> Any:
    return Fraction(x) if isinstance(x, int) else x


def _is_mpf(x: Any) -> bool:
    return hasattr(x, "_mpf_")


@dataclass(frozen=True)
class HomographyParams:
    """h1..h9 plus the auxiliary h10 = 1 / (h1*h4*h6*h9) when known."""
    h: Tuple[Any, ...]
    h10: Any = None

    def __post_init__(self):
        if len(self.h) != 9:
            raise ValueError(f"expected 9 homography parameters, got {len(self.h)}")

    def __getitem__(self, k: int) -> Any:
        """1-based access: params[1] is h1."""
        if k == 10:
            return self.h10
        return self.h[k - 1]

    def determinant(self) -> Any:
        h = self.h
        return h[0] * h[3] * h[5] * h[8]

    def scaled(self, factor: Any) -> "HomographyParams":
        h10 = None if self.h10 is None else self.h10 / factor ** 4
        return HomographyParams(tuple(v * factor for v in self.h), h10)

    def with_h10(self) -> "HomographyParams":
        det = self.determinant()
        if det == 0:
            raise SingularParams("h1*h4*h6*h9 = 0")
        return HomographyParams(self.h, 1 / _exact(det))

    def values(self) -> Tuple[Any, ...]:
        """(h1, ..., h10); h10 is filled in from the determinant if missing."""
        params = self if self.h10 is not None else self.with_h10()
        return tuple(params.h) + (params.h10,)


def homography_matrix(params: HomographyParams) -> Tuple[Tuple[Any, ...], ...]:
    h1, h2, h3, h4, h5, h6, h7, h8, h9 = params.h
    if params.determinant() == 0:
        raise SingularParams("h1*h4*h6*h9 = 0")
    zero = h1 * 0
    return (
        (h1, h2, h3, zero),
        (zero, h4, h5, zero),
        (zero, zero, h6, zero),
        (h1 - h9, h7, h8, h9),
    )


def inverse_homography(params: HomographyParams) -> Tuple[Tuple[Any, ...], ...]:
    """Closed-form inverse; structural zeros stay exact zeros."""
    h1, h2, h3, h4, h5, h6, h7, h8, h9 = (_exact(v) for v in params.h)
    if h1 * h4 * h6 * h9 == 0:
        raise SingularParams("h1*h4*h6*h9 = 0")
    zero = h1 * 0
    # inverse of the upper-triangular block
    a11, a12, a13 = 1 / h1, -h2 / (h1 * h4), (h2 * h5 - h3 * h4) / (h1 * h4 * h6)
    a22, a23 = 1 / h4, -h5 / (h4 * h6)
    a33 = 1 / h6
    r1, r2, r3 = h1 - h9, h7, h8
    v1 = r1 * a11
    v2 = r1 * a12 + r2 * a22
    v3 = r1 * a13 + r2 * a23 + r3 * a33
    return (
        (a11, a12, a13, zero),
        (zero, a22, a23, zero),
        (zero, zero, a33, zero),
        (-v1 / h9, -v2 / h9, -v3 / h9, 1 / h9),
    )


@dataclass(frozen=True)
class HomogeneousPoint:
    coords: Tuple[Any, Any, Any, Any]

    def __post_init__(self):
        if len(self.coords) != 4:
            raise ValueError("homogeneous points have 4 coordinates")
        if all(c == 0 for c in self.coords):
            raise ValueError("(0, 0, 0, 0) is not a projective point")

    @classmethod
    def affine(cls, x: Any, y: Any, z: Any) -> "HomogeneousPoint":
        one = x * 0 + 1 if _is_mpf(x) else Fraction(1)
        return cls((_exact(x), _exact(y), _exact(z), one))

    def __getitem__(self, k: int) -> Any:
        return self.coords[k]

    @property
    def is_finite(self) -> bool:
        return self.coords[3] != 0

    def normalized(self) -> "HomogeneousPoint":
        w = self.coords[3]
        if w == 0:
            raise DegenerateFrame("point at infinity has no affine coordinates")
        w = _exact(w)
        return HomogeneousPoint(tuple(_exact(c) / w for c in self.coords[:3]) + (w / w,))

    def euclidean(self) -> Tuple[Any, Any, Any]:
        return self.normalized().coords[:3]

    def scaled(self, factor: Any) -> "HomogeneousPoint":
        return HomogeneousPoint(tuple(c * factor for c in self.coords))


PointPair = Tuple[HomogeneousPoint, HomogeneousPoint]


@dataclass(frozen=True)
class GroundTruth:
    pairs: Tuple[PointPair, ...]
    params: HomographyParams


@dataclass(frozen=True)
class SegmentInstance:
    """N >= 9 distorted point pairs with the true lengths of their segments.

    `anchor_index` points into the flattened point list (X1, Y1, X2, Y2, ...) and
    selects the point fixed by the scale constraint; the default is Y1.
    """
    pairs: Tuple[PointPair, ...]
    lengths: Tuple[Fraction, ...]
    kind: str = "real"
    anchor_index: int = 1
    ground_truth: Optional[GroundTruth] = None
    seed: Optional[int] = None
    rng: Optional[str] = None
    noise_sigma: float = 0.0

    def __post_init__(self):
        if len(self.pairs) < 9:
            raise ValueError(f"at least 9 segments are needed, got {len(self.pairs)}")
        if len(self.lengths) != len(self.pairs):
            raise ValueError("one length per segment is required")
        if any(d <= 0 for d in self.lengths):
            raise ValueError("segment lengths must be positive")
        if not 0 <= self.anchor_index < 2 * len(self.pairs):
            raise ValueError(f"anchor index {self.anchor_index} out of range")

    @property
    def n_segments(self) -> int:
        return len(self.pairs)

    @property
    def points(self) -> List[HomogeneousPoint]:
        return [p for pair in self.pairs for p in pair]

    @property
    def anchor_point(self) -> HomogeneousPoint:
        return self.points[self.anchor_index]

    def with_points(self, points: Sequence[HomogeneousPoint]) -> "SegmentInstance":
        pairs = tuple((points[2 * k], points[2 * k + 1]) for k in range(len(points) // 2))
        return replace(self, pairs=pairs)


@dataclass(frozen=True)
class SimilarityTransform:
    """x -> R x + t on affine coordinates."""
    rotation: Tuple[Tuple[Any, ...], ...]
    translation: Tuple[Any, ...]
    identity: bool = False

    def apply(self, point: HomogeneousPoint) -> HomogeneousPoint:
        if self.identity:
            return point
        x = point.euclidean()
        mapped = tuple(
            sum((self.rotation[r][c] * x[c] for c in range(3)), self.translation[r]) for r in range(3)
        )
        return HomogeneousPoint(mapped + (Fraction(1),))


IDENTITY_TRANSFORM = SimilarityTransform(
    rotation=((1, 0, 0), (0, 1, 0), (0, 0, 1)), translation=(0, 0, 0), identity=True
)


def _is_canonical(a, b, c) -> bool:
    return (
        all(v == 0 for v in a)
        and b[0] != 0 and b[1] == 0 and b[2] == 0
        and c[1] != 0 and c[2] == 0
    )


def canonical_frame(
    points: Sequence[HomogeneousPoint],
    designated: Tuple[int, int, int] = (0, 1, 2),
    precision_bits: int = 256,
) -> Tuple[SimilarityTransform, List[HomogeneousPoint]]:
    """Move points by a rigid motion so that the designated three become
    (0,0,0), (x,0,0) and (x',y',0).

    Points already in that pattern are returned unchanged with the identity.
    """
    if len(set(designated)) != 3:
        raise DegenerateFrame("designated frame points must be distinct")
    chosen = [points[k] for k in designated]
    if not all(p.is_finite for p in chosen):
        raise DegenerateFrame("a frame point lies at infinity")
    a, b, c = (p.euclidean() for p in chosen)
    if _is_canonical(a, b, c):
        return IDENTITY_TRANSFORM, list(points)

    ctx = mpmath.MPContext()
    ctx.prec = precision_bits

    def to_mpf(v):
        v = Fraction(v) if not _is_mpf(v) else mpf_to_fraction(v)
        return ctx.mpf(v.numerator) / v.denominator

    a, b, c = ([to_mpf(v) for v in p] for p in (a, b, c))
    u = [b[k] - a[k] for k in range(3)]
    w = [c[k] - a[k] for k in range(3)]
    norm_u = ctx.sqrt(ctx.fsum(x * x for x in u))
    norm_w = ctx.sqrt(ctx.fsum(x * x for x in w))
    if not norm_u or not norm_w:
        raise DegenerateFrame("frame points coincide")
    cross = (u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0])
    norm_cross = ctx.sqrt(ctx.fsum(x * x for x in cross))
    if norm_cross <= ctx.ldexp(norm_u * norm_w, -(precision_bits // 4)):
        raise DegenerateFrame("frame points are collinear")
    e1 = [x / norm_u for x in u]
    e3 = [x / norm_cross for x in cross]
    e2 = [e3[1] * e1[2] - e3[2] * e1[1], e3[2] * e1[0] - e3[0] * e1[2], e3[0] * e1[1] - e3[1] * e1[0]]
    rotation = tuple(tuple(mpf_to_fraction(x) for x in row) for row in (e1, e2, e3))
    translation = tuple(-sum((rotation[r][k] * mpf_to_fraction(a[k]) for k in range(3)), Fraction(0)) for r in range(3))
    transform = SimilarityTransform(rotation, translation)

    moved = []
    for k, point in enumerate(points):
        if not point.is_finite:
            raise DegenerateFrame(f"point {k} lies at infinity")
        x, y, z, one = transform.apply(point).coords
        moved.append(HomogeneousPoint(tuple(_round_to(ctx, v) for v in (x, y, z)) + (one,)))
    ia, ib, ic = designated
    moved[ia] = HomogeneousPoint((Fraction(0), Fraction(0), Fraction(0), Fraction(1)))
    moved[ib] = HomogeneousPoint((moved[ib][0], Fraction(0), Fraction(0), Fraction(1)))
    moved[ic] = HomogeneousPoint((moved[ic][0], moved[ic][1], Fraction(0), Fraction(1)))
    if moved[ib][0] == 0 or moved[ic][1] == 0:
        raise DegenerateFrame("frame points are degenerate after the motion")
    return transform, moved


def _round_to(ctx, value: Any) -> Fraction:
    if _is_mpf(value):
        return mpf_to_fraction(ctx.mpf(value))
    value = Fraction(value)
    return mpf_to_fraction(ctx.mpf(value.numerator) / value.denominator)


def canonical_frame_instance(instance: SegmentInstance, precision_bits: int = 256) -> SegmentInstance:
    """The instance with X1, Y1, X2 moved into the canonical frame; lengths and ground truth are kept."""
    transform, moved = canonical_frame(instance.points, (0, 1, 2), precision_bits)
    if transform.identity:
        return instance
    logger.debug("applied a rigid motion to bring the frame points into canonical position")
    return instance.with_points(moved)


@lru_cache(maxsize=1)
def _segment_constraint_expansion() -> Tuple[Tuple[Tuple[int, ...], ...], Callable[..., list]]:
    """Expand the squared-length equation once with symbolic coordinates.

    Returns the monomials in h1..h10 and a function mapping (X1..X4, Y1..Y4, d^2)
    to their coefficients.
    """
    h = sp.symbols("h1:10")
    xs = sp.symbols("x1:5")
    ys = sp.symbols("y1:5")
    dd = sp.Symbol("dd")
    h1, h2, h3, h4, h5, h6, h7, h8, h9 = h
    rows = (
        (h1, h2, h3, 0),
        (0, h4, h5, 0),
        (0, 0, h6, 0),
        (h1 - h9, h7, h8, h9),
    )
    hx = [sum(r * x for r, x in zip(row, xs)) for row in rows]
    hy = [sum(r * y for r, y in zip(row, ys)) for row in rows]
    f = sum((hx[k] * hy[3] - hx[3] * hy[k]) ** 2 for k in range(3)) - (hx[3] * hy[3]) ** 2 * dd
    poly = sp.Poly(f, *h)
    monomials = tuple(tuple(m) + (0,) for m in poly.monoms())
    evaluate = sp.lambdify((*xs, *ys, dd), poly.coeffs(), modules="math")
    return monomials, evaluate


def _integral(point: HomogeneousPoint) -> Tuple[Tuple[int, ...], int]:
    coords = [Fraction(c) for c in point.coords]
    scale = lcm(*(c.denominator for c in coords))
    return tuple(int(c * scale) for c in coords), scale


def _segment_coefficients(x: HomogeneousPoint, y: HomogeneousPoint, d: Any) -> Dict[Monomial, Fraction]:
    monomials, evaluate = _segment_constraint_expansion()
    xs, alpha = _integral(x)
    ys, beta = _integral(y)
    d = Fraction(d)
    raw = evaluate(*xs, *ys, d * d)
    scale = Fraction(1, (alpha * beta) ** 2)
    return {m: Fraction(c) * scale for m, c in zip(monomials, raw) if c != 0}


def segment_constraint(ring: PolynomialRing, x: HomogeneousPoint, y: HomogeneousPoint, d: Any) -> Polynomial:
    """Quartic in h1..h9 vanishing when H maps X and Y to points at distance d.

    Coefficients are evaluated exactly over the rationals and mapped into the
    ring's field once, so exact zeros stay zeros in every field.
    """
    return ring.from_numbers(_segment_coefficients(x, y, d))


def det_constraint(ring: PolynomialRing) -> Polynomial:
    """1 - h1*h4*h6*h9*h10."""
    field = ring.field
    return ring.from_dict({CONSTANT: field.one, DET_MONOMIAL: field.neg(field.one)})


def _scale_coefficients(x: HomogeneousPoint) -> Dict[Monomial, Fraction]:
    x1, x2, x3, x4 = (Fraction(c) for c in x.coords)
    coefficients = {
        CONSTANT: Fraction(1),
        parse_monomial("h1"): -x1,
        parse_monomial("h7"): -x2,
        parse_monomial("h8"): -x3,
        parse_monomial("h9"): x1 - x4,
    }
    return {m: c for m, c in coefficients.items() if c != 0}


def scale_constraint(ring: PolynomialRing, x: HomogeneousPoint) -> Polynomial:
    """1 - ((h1 - h9) X1 + h7 X2 + h8 X3 + h9 X4): fixes the scale of the homogeneous coordinate of X."""
    return ring.from_numbers(_scale_coefficients(x))


def build_system(instance: SegmentInstance, ring: PolynomialRing) -> List[Polynomial]:
    """N segment constraints, then the determinant constraint, then the scale constraint."""
    system = [segment_constraint(ring, x, y, d) for (x, y), d in zip(instance.pairs, instance.lengths)]
    system.append(det_constraint(ring))
    system.append(scale_constraint(ring, instance.anchor_point))
    return system


# X1, Y1, X2, Y2 in the canonical frame, then a pair in general position.
_REFERENCE_POINTS = (
    HomogeneousPoint((0, 0, 0, 1)),
    HomogeneousPoint((101, 0, 0, 1)),
    HomogeneousPoint((103, 107, 0, 1)),
    HomogeneousPoint((109, 113, 127, 1)),
    HomogeneousPoint((131, 137, 139, 1)),
    HomogeneousPoint((149, 151, 157, 1)),
)
_REFERENCE_LENGTH = 163


@lru_cache(maxsize=None)
def generic_segment_support(segment: int) -> FrozenSet[Monomial]:
    """Monomials of the constraint of the given segment for points in general position."""
    k = min(segment, 2)
    return frozenset(_segment_coefficients(_REFERENCE_POINTS[2 * k], _REFERENCE_POINTS[2 * k + 1], _REFERENCE_LENGTH))


def _support(coefficients: Dict[Monomial, Fraction], ring: Optional[PolynomialRing]) -> FrozenSet[Monomial]:
    if ring is None:
        return frozenset(coefficients)
    field = ring.field
    return frozenset(m for m, c in coefficients.items() if not field.is_zero(field.from_number(c)))


def nongeneric_constraints(instance: SegmentInstance, ring: Optional[PolynomialRing] = None) -> List[int]:
    """Positions in `build_system` whose monomial support differs from that of an
    instance in general position with the same canonical frame.

    Exact zeros always count; with a ring, coefficients vanishing in its field count too.
    """
    found = [
        k for k, ((x, y), d) in enumerate(zip(instance.pairs, instance.lengths))
        if _support(_segment_coefficients(x, y, d), ring) != generic_segment_support(k)
    ]
    index = instance.anchor_index
    reference = _REFERENCE_POINTS[index if index < 4 else 4 + index % 2]
    if _support(_scale_coefficients(instance.anchor_point), ring) != frozenset(_scale_coefficients(reference)):
        found.append(instance.n_segments + 1)
    return found


def _converter_for(sample: Any) -> Callable[[Any], Any]:
    if _is_mpf(sample):
        ctx = sample.context

        def convert(v):
            if _is_mpf(v):
                return ctx.mpf(v)
            v = Fraction(v)
            return ctx.mpf(v.numerator) / v.denominator

        return convert
    return lambda v: v if _is_mpf(v) else Fraction(v)


def apply_homography(params: HomographyParams, point: HomogeneousPoint) -> HomogeneousPoint:
    """H X, affinely normalized; warns and returns the raw product when it lies at infinity."""
    matrix = homography_matrix(params)
    convert = _converter_for(params.h[0])
    coords = [convert(c) for c in point.coords]
    mapped = tuple(sum((row[k] * coords[k] for k in range(4)), convert(0)) for row in matrix)
    if mapped[3] == 0:
        warnings.warn("homography maps the point to infinity", PointAtInfinity)
        return HomogeneousPoint(mapped)
    return HomogeneousPoint(tuple(c / mapped[3] for c in mapped[:3]) + (convert(1),))


def anchored_params(params: HomographyParams, instance: SegmentInstance) -> HomographyParams:
    """Rescale params so that H maps the anchor point to homogeneous coordinate 1."""
    h1, h2, h3, h4, h5, h6, h7, h8, h9 = params.h
    convert = _converter_for(h1)
    x1, x2, x3, x4 = (convert(c) for c in instance.anchor_point.coords)
    w = (h1 - h9) * x1 + h7 * x2 + h8 * x3 + h9 * x4
    if w == 0:
        raise SingularParams("the anchor point is mapped to infinity")
    return replace(params, h10=None).scaled(1 / _exact(w)).with_h10()


def _mp_context(params: HomographyParams, precision_bits: int):
    if _is_mpf(params.h[0]):
        return params.h[0].context
    ctx = mpmath.MPContext()
    ctx.prec = precision_bits
    return ctx


def _as_mpf(ctx, v):
    if _is_mpf(v):
        return ctx.mpf(v)
    v = Fraction(v)
    return ctx.mpf(v.numerator) / v.denominator


def upgraded_lengths(instance: SegmentInstance, params: HomographyParams, precision_bits: int = 256) -> List[Any]:
    """Lengths |H X - H Y| of all segments as floats of the params' precision."""
    ctx = _mp_context(params, precision_bits)
    mp_params = HomographyParams(tuple(_as_mpf(ctx, v) for v in params.h))
    lengths = []
    for x, y in instance.pairs:
        px = apply_homography(mp_params, x)
        py = apply_homography(mp_params, y)
        if not (px.is_finite and py.is_finite):
            raise SingularParams("a segment end point is mapped to infinity")
        lengths.append(ctx.sqrt(ctx.fsum((a - b) ** 2 for a, b in zip(px.coords[:3], py.coords[:3]))))
    return lengths


def length_residuals(instance: SegmentInstance, params: HomographyParams, precision_bits: int = 256) -> List[Any]:
    lengths = upgraded_lengths(instance, params, precision_bits)
    ctx = lengths[0].context
    return [abs(_as_mpf(ctx, d) - dp) for d, dp in zip(instance.lengths, lengths)]


def length_error(instance: SegmentInstance, params: HomographyParams, precision_bits: int = 256) -> Any:
    """Population standard deviation of (d - d') divided by the mean true length."""
    lengths = upgraded_lengths(instance, params, precision_bits)
    ctx = lengths[0].context
    true = [_as_mpf(ctx, d) for d in instance.lengths]
    diffs = [d - dp for d, dp in zip(true, lengths)]
    n = len(diffs)
    mean_diff = ctx.fsum(diffs) / n
    sigma = ctx.sqrt(ctx.fsum((e - mean_diff) ** 2 for e in diffs) / n)
    return sigma / (ctx.fsum(true) / n)


def sign_pattern(instance: SegmentInstance, params: HomographyParams, precision_bits: int = 256) -> Tuple[int, int]:
    """Signs (s_y, s_z) such that H X matches the true points after flipping y by s_y and z by s_z."""
    if instance.ground_truth is None:
        raise ValueError("sign pattern needs ground truth points")
    ctx = _mp_context(params, precision_bits)
    mp_params = HomographyParams(tuple(_as_mpf(ctx, v) for v in params.h))
    same = [ctx.zero, ctx.zero]
    flipped = [ctx.zero, ctx.zero]
    true_points = [p for pair in instance.ground_truth.pairs for p in pair]
    for point, truth in zip(instance.points, true_points):
        mapped = apply_homography(mp_params, point).euclidean()
        expected = [_as_mpf(ctx, v) for v in truth.euclidean()]
        for axis in (1, 2):
            same[axis - 1] += abs(mapped[axis] - expected[axis])
            flipped[axis - 1] += abs(mapped[axis] + expected[axis])
    return tuple(1 if s <= f else -1 for s, f in zip(same, flipped))


def _point_record(point: HomogeneousPoint) -> List[str]:
    return [format_decimal(c) for c in point.coords]


def _point_from_record(record: Sequence[str]) -> HomogeneousPoint:
    return HomogeneousPoint(tuple(parse_decimal(c) for c in record))


def instance_to_record(instance: SegmentInstance) -> InstanceFile:
    ground_truth = None
    if instance.ground_truth is not None:
        truth = instance.ground_truth
        ground_truth = GroundTruthRecord(
            segments=[
                SegmentRecord(x=_point_record(x), y=_point_record(y), length=format_decimal(d))
                for (x, y), d in zip(truth.pairs, instance.lengths)
            ],
            params=[format_decimal(v) for v in truth.params.h],
        )
    return InstanceFile(
        format_version=FORMAT_VERSION,
        kind=instance.kind,
        n_segments=instance.n_segments,
        anchor_index=instance.anchor_index,
        rng=instance.rng,
        seed=instance.seed,
        noise_sigma=instance.noise_sigma,
        segments=[
            SegmentRecord(x=_point_record(x), y=_point_record(y), length=format_decimal(d))
            for (x, y), d in zip(instance.pairs, instance.lengths)
        ],
        ground_truth=ground_truth,
    )


def instance_from_record(record: InstanceFile) -> SegmentInstance:
    if record.format_version != FORMAT_VERSION:
        raise ValueError(f"Unsupported instance format version {record.format_version}")
    ground_truth = None
    if record.ground_truth is not None:
        ground_truth = GroundTruth(
            pairs=tuple((_point_from_record(s.x), _point_from_record(s.y)) for s in record.ground_truth.segments),
            params=HomographyParams(tuple(parse_decimal(v) for v in record.ground_truth.params)),
        )
    return SegmentInstance(
        pairs=tuple((_point_from_record(s.x), _point_from_record(s.y)) for s in record.segments),
        lengths=tuple(parse_decimal(s.length) for s in record.segments),
        kind=record.kind,
        anchor_index=record.anchor_index,
        ground_truth=ground_truth,
        seed=record.seed,
        rng=record.rng,
        noise_sigma=record.noise_sigma,
    )


def save_instance(instance: SegmentInstance, path: str) -> Path:
    output = Path(path)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(instance_to_record(instance).model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Saved {instance.kind} instance with {instance.n_segments} segments to {output}")
    return output


def load_instance(path: str) -> SegmentInstance:
    """Load and validate an instance file."""
    instance_file = Path(path)
    if not instance_file.exists():
        raise FileNotFoundError(f"Instance file not found: {path}")
    try:
        data = json.loads(instance_file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValueError(f"Invalid JSON in instance file {path}: {e}") from e
    try:
        record = InstanceFile.model_validate(data)
    except ValidationError as e:
        logger.error(f"Validation error: {e}")
        raise ValueError(f"Instance file {path} does not match the instance format: {e}") from e
    return instance_from_record(record)
