"""
Seeded instance generation.

Template instances use integer points whose segments are primitive Pythagorean
quadruples, so the true lengths are integers and every constraint is exact
over Z_p. Real instances put points on a grid inside a cube and distort them
with a homography derived from randomly perturbed cube vertices.
"""

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from math import gcd, isqrt, lcm
from typing import List, Sequence, Tuple

import mpmath
import numpy as np
from sympy.ntheory.primetest import is_square

from algebra import PolynomialRing, PrimeField
from data_model import GenerationConfig
from text_utils import format_decimal, mpf_to_fraction
from upgrade import (
    GroundTruth,
    HomogeneousPoint,
    HomographyParams,
    SegmentInstance,
    inverse_homography,
    nongeneric_constraints,
)

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.PCG64"

STREAM_TEMPLATE = 0
STREAM_REAL = 1
STREAM_NOISE = 2


class GenerationExhausted(RuntimeError):
    """No valid instance was found within the resampling limit."""


@dataclass(frozen=True, order=True)
class PythagoreanQuadruple:
    """a^2 + b^2 + c^2 = d^2 with a <= b <= c."""
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.a + self.b * self.b + self.c * self.c != self.d * self.d:
            raise ValueError(f"({self.a}, {self.b}, {self.c}, {self.d}) is not a Pythagorean quadruple")


def enumerate_quadruples(bound: int = 50) -> List[PythagoreanQuadruple]:
    """Primitive quadruples with 0 < a <= b <= c and d < bound."""
    if bound < 4:
        raise ValueError(f"bound must be at least 4, got {bound}")
    found = []
    for a in range(1, bound):
        for b in range(a, bound):
            for c in range(b, bound):
                d2 = a * a + b * b + c * c
                if isqrt(d2) >= bound:
                    break
                if is_square(d2) and gcd(a, b, c) == 1:
                    found.append(PythagoreanQuadruple(a, b, c, isqrt(d2)))
    return sorted(found, key=lambda q: (q.d, q.a, q.b, q.c))


def rng_for(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


def _nonzero(rng: np.random.Generator, bound: int) -> int:
    return int(rng.integers(1, bound)) * int(rng.choice((-1, 1)))


def _oriented(rng: np.random.Generator, q: PythagoreanQuadruple) -> Tuple[int, int, int]:
    legs = [q.a, q.b, q.c]
    order = rng.permutation(3)
    return tuple(legs[int(k)] * int(rng.choice((-1, 1))) for k in order)


def _primitive_integer(coords: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    """Scale a homogeneous vector to coprime integers."""
    scale = lcm(*(c.denominator for c in coords))
    ints = [int(c * scale) for c in coords]
    common = gcd(*ints)
    return tuple(Fraction(v // common) for v in ints)


def _transform(matrix, point: HomogeneousPoint) -> Tuple[Fraction, ...]:
    return tuple(sum((row[k] * point.coords[k] for k in range(4)), Fraction(0)) for row in matrix)


def _template_segments(rng: np.random.Generator, config: GenerationConfig, quadruples: List[PythagoreanQuadruple]):
    bound = config.coordinate_bound
    chosen = rng.choice(len(quadruples), size=config.n_segments - 1, replace=False)

    def within(v: int) -> bool:
        return v != 0 and abs(v) < bound

    first_y = _nonzero(rng, bound)
    pairs = [((0, 0, 0), (first_y, 0, 0))]
    lengths = [abs(first_y)]
    for position, index in enumerate(chosen):
        quadruple = quadruples[int(index)]
        for _ in range(config.max_resamples):
            v = _oriented(rng, quadruple)
            if position == 0:
                x = (_nonzero(rng, bound), _nonzero(rng, bound), 0)
            else:
                x = tuple(_nonzero(rng, bound) for _ in range(3))
            y = tuple(xc - vc for xc, vc in zip(x, v))
            checked = y if position else y[:2]
            if all(within(c) for c in checked):
                break
        else:
            raise GenerationExhausted(f"no admissible placement for quadruple {quadruple}")
        pairs.append((x, y))
        lengths.append(quadruple.d)
    return pairs, lengths


def gen_template_instance(config: GenerationConfig) -> SegmentInstance:
    """Integer instance for building a solver template.

    Segment 1 runs from the origin along the x-axis, segment 2 starts in the
    xy-plane, the others are random integer placements of distinct primitive
    quadruples. The distorted points are H^-1 X scaled to coprime integers.
    """
    rng = rng_for(config.seed, STREAM_TEMPLATE)
    quadruples = enumerate_quadruples(config.quadruple_bound)
    if len(quadruples) < config.n_segments - 1:
        raise GenerationExhausted(
            f"only {len(quadruples)} primitive quadruples below {config.quadruple_bound}, need {config.n_segments - 1}"
        )
    for attempt in range(config.max_resamples):
        pairs, lengths = _template_segments(rng, config, quadruples)
        params = HomographyParams(tuple(int(v) for v in rng.integers(1, config.homography_bound, size=9)))
        inverse = inverse_homography(params)
        true_pairs = tuple(
            (HomogeneousPoint.affine(*x), HomogeneousPoint.affine(*y)) for x, y in pairs
        )
        distorted = []
        for point in (p for pair in true_pairs for p in pair):
            coords = _transform(inverse, point)
            if coords[3] == 0:
                logger.warning(f"template point maps to infinity under H^-1, resampling (attempt {attempt + 1})")
                break
            distorted.append(HomogeneousPoint(_primitive_integer(coords)))
        else:
            instance = SegmentInstance(
                pairs=tuple((distorted[2 * k], distorted[2 * k + 1]) for k in range(config.n_segments)),
                lengths=tuple(Fraction(d) for d in lengths),
                kind="integer",
                ground_truth=GroundTruth(true_pairs, params),
                seed=config.seed,
                rng=RNG_ALGORITHM,
            )
            nongeneric = nongeneric_constraints(instance, PolynomialRing(PrimeField()))
            if nongeneric:
                logger.warning(f"template constraints {nongeneric} lose monomials, resampling (attempt {attempt + 1})")
                continue
            logger.debug(f"template instance accepted after {attempt + 1} attempts")
            return instance
    raise GenerationExhausted(f"no template instance after {config.max_resamples} attempts")


def homography_from_vertex_offsets(offsets, cube_side: int = 10, precision_bits: int = 256) -> HomographyParams:
    """Params of the H mapping the perturbed vertices V + T back onto the cube vertices V.

    V are (s,s,s), (s,0,s), (0,s,s) for side s. The proportionality constraints
    form a 9x9 homogeneous linear system; its right singular vector of smallest
    singular value, scaled to h9 = 1, is returned as high precision floats.
    """
    ctx = mpmath.MPContext()
    ctx.prec = precision_bits
    s = cube_side
    vertices = ((s, s, s), (s, 0, s), (0, s, s))
    rows = []
    for vertex, offset in zip(vertices, offsets):
        w1, w2, w3 = (ctx.mpf(v) + ctx.mpf(t) for v, t in zip(vertex, offset))
        first = [w1, w2, w3, 0, 0, 0, 0, 0, 0]
        second = [0, 0, 0, w2, w3, 0, 0, 0, 0]
        third = [0, 0, 0, 0, 0, w3, 0, 0, 0]
        fourth = [w1, 0, 0, 0, 0, 0, w2, w3, 1 - w1]
        for k, row in enumerate((first, second, third)):
            rows.append([ctx.mpf(a) - vertex[k] * ctx.mpf(b) for a, b in zip(row, fourth)])
    _, singular_values, vt = ctx.svd_r(ctx.matrix(rows))
    smallest = min(range(9), key=lambda k: singular_values[k])
    h = [vt[smallest, k] for k in range(9)]
    if not h[8]:
        raise ZeroDivisionError("h9 vanishes for these vertex offsets")
    return HomographyParams(tuple(v / h[8] for v in h))


def _round_fraction(value: Fraction, digits: int) -> Fraction:
    return Fraction(format_decimal(value, digits))


def _grid_point(rng: np.random.Generator, steps: int, grid: Fraction, zero_axes: Sequence[int] = ()) -> Tuple[Fraction, ...]:
    coords = []
    for axis in range(3):
        if axis in zero_axes:
            coords.append(Fraction(0))
        else:
            coords.append(int(rng.integers(0, steps + 1)) * grid)
    return tuple(coords)


def _real_segments(rng: np.random.Generator, config: GenerationConfig):
    grid = Fraction(config.grid)
    steps = int(config.cube_side / grid)
    pairs = []
    first_y = int(rng.integers(1, steps + 1)) * grid
    pairs.append(((Fraction(0),) * 3, (first_y, Fraction(0), Fraction(0))))
    while len(pairs) < config.n_segments:
        if len(pairs) == 1:
            x = _grid_point(rng, steps, grid, zero_axes=(2,))
            if x[0] == 0 or x[1] == 0:
                continue
        else:
            x = _grid_point(rng, steps, grid)
        y = _grid_point(rng, steps, grid)
        if x != y:
            pairs.append((x, y))
    return pairs


def gen_float_instance(config: GenerationConfig) -> SegmentInstance:
    """Real instance: grid points in a cube, distorted by a random homography and rounded."""
    rng = rng_for(config.seed, STREAM_REAL)
    digits = config.decimal_digits
    for attempt in range(config.max_resamples):
        pairs = _real_segments(rng, config)
        offsets = rng.normal(0.0, 1.0, size=(3, 3))
        try:
            params = homography_from_vertex_offsets(offsets.tolist(), config.cube_side)
        except ZeroDivisionError:
            logger.warning(f"vertex offsets give h9 = 0, resampling (attempt {attempt + 1})")
            continue
        h = tuple(_round_fraction(mpf_to_fraction(v), 40) for v in params.h)
        params = HomographyParams(h)
        if abs(params.determinant()) < Fraction(1, 10 ** 6):
            logger.warning(f"nearly singular homography, resampling (attempt {attempt + 1})")
            continue
        inverse = inverse_homography(params)
        true_pairs = tuple((HomogeneousPoint.affine(*x), HomogeneousPoint.affine(*y)) for x, y in pairs)
        distorted = []
        for point in (p for pair in true_pairs for p in pair):
            coords = _transform(inverse, point)
            if coords[3] == 0:
                logger.warning(f"grid point maps to infinity under H^-1, resampling (attempt {attempt + 1})")
                break
            affine = tuple(_round_fraction(c / coords[3], digits) for c in coords[:3])
            distorted.append(HomogeneousPoint(affine + (Fraction(1),)))
        else:
            lengths = []
            for x, y in pairs:
                squared = sum((a - b) ** 2 for a, b in zip(x, y))
                lengths.append(_exact_or_rounded_sqrt(squared, digits))
            instance = SegmentInstance(
                pairs=tuple((distorted[2 * k], distorted[2 * k + 1]) for k in range(config.n_segments)),
                lengths=tuple(lengths),
                kind="real",
                ground_truth=GroundTruth(true_pairs, params),
                seed=config.seed,
                rng=RNG_ALGORITHM,
            )
            nongeneric = nongeneric_constraints(instance)
            if nongeneric:
                logger.warning(f"real constraints {nongeneric} lose monomials, resampling (attempt {attempt + 1})")
                continue
            logger.debug(f"real instance accepted after {attempt + 1} attempts")
            return instance
    raise GenerationExhausted(f"no real instance after {config.max_resamples} attempts")


def _exact_or_rounded_sqrt(value: Fraction, digits: int) -> Fraction:
    num, den = value.numerator, value.denominator
    if is_square(num) and is_square(den):
        return Fraction(isqrt(num), isqrt(den))
    ctx = mpmath.MPContext()
    ctx.dps = digits + 10
    root = ctx.sqrt(ctx.mpf(num) / den)
    return _round_fraction(mpf_to_fraction(root), digits)


def add_noise(instance: SegmentInstance, sigma: float, seed: int) -> SegmentInstance:
    """Copy of the instance with N(0, sigma^2) added to every affine coordinate of every distorted point."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return instance
    rng = rng_for(seed, STREAM_NOISE)
    noisy = []
    for point in instance.points:
        base = point.euclidean()
        shift = rng.normal(0.0, sigma, size=3)
        coords = tuple(Fraction(c) + Fraction(repr(float(e))) for c, e in zip(base, shift))
        noisy.append(HomogeneousPoint(coords + (Fraction(1),)))
    return replace(instance.with_points(noisy), noise_sigma=sigma)
