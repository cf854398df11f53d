"""Tests for template replay and solution extraction."""

import pytest

from algebra import CONSTANT, BigFloatField, DivisionByZeroCoefficient, PolynomialRing, PrimeField
from data_model import GenerationConfig
from datagen import gen_template_instance
from groebner import BasisTrace, buchberger, reduce_basis
from solver import (
    OUTCOME_DEGENERATE,
    OUTCOME_NO_REAL,
    OUTCOME_SHAPE,
    OUTCOME_ZERO_DIVISION,
    SIGN_ORDER,
    DegenerateTemplate,
    NoRealSolution,
    ReplaySession,
    ShapeMismatch,
    SolverTemplate,
    SupportMismatch,
    basis_digest,
    build_template,
    classify_failure,
    default_precision_bits,
    extract_solutions,
    match_shape,
    replay,
)
from upgrade import HomogeneousPoint

SYNTHETIC_BASIS = (
    "h1 - 1",
    "h2 - 1/2",
    "h3 + 1/4",
    "h7 - 1/8",
    "h8 - 4",
    "h9 - 1",
    "h4 - 1/2*h5",
    "h5^2 - 4",
    "h6^2 - 9",
    "h10^2 - 1/9",
    "h5*h6 - 18*h10",
    "h5*h10 - 2/9*h6",
    "h6*h10 - 1/2*h5",
)

TOLERANCE = 1e-30


@pytest.fixture
def float_ring():
    return PolynomialRing(BigFloatField(256))


def _basis(ring, texts=SYNTHETIC_BASIS):
    return [ring.parse(text) for text in texts]


@pytest.mark.parametrize(
    "n_segments, bits",
    [(9, 1088), (10, 512), (11, 512), (12, 448), (14, 448), (15, 384), (19, 384), (20, 192), (24, 192), (25, 256), (40, 256)],
)
def test_default_precision(n_segments, bits):
    assert default_precision_bits(n_segments) == bits


def test_default_precision_needs_nine_segments():
    with pytest.raises(ValueError):
        default_precision_bits(8)


def test_shape_is_matched_by_support(float_ring):
    basis = _basis(float_ring)
    coefficients = match_shape(list(reversed(basis)))
    lead, other = coefficients["g11"]
    assert lead == 1 and other == -18


def test_extracts_the_four_solutions(float_ring):
    solution = extract_solutions(_basis(float_ring))
    assert solution.signs == SIGN_ORDER
    assert solution.precision_bits == 256
    first = solution.params[0]
    expected = {1: 1, 2: 0.5, 3: -0.25, 4: 1, 5: 2, 6: 3, 7: 0.125, 8: 4, 9: 1}
    for k, value in expected.items():
        assert abs(first[k] - value) < TOLERANCE
    assert abs(3 * first[10] - 1) < TOLERANCE
    assert all(d.consistent for d in solution.diagnostics)


def test_sign_variants(float_ring):
    solution = extract_solutions(_basis(float_ring))
    for params, (s5, s6) in zip(solution.params, solution.signs):
        assert abs(params[5] - 2 * s5) < TOLERANCE
        assert abs(params[6] - 3 * s6) < TOLERANCE
        assert abs(params[4] - s5) < TOLERANCE
        assert abs(3 * params[10] - s5 * s6) < TOLERANCE
        assert params[1] == solution.params[0][1]


def test_negative_square_has_no_real_solution(float_ring):
    texts = list(SYNTHETIC_BASIS)
    texts[7] = "h5^2 + 4"
    with pytest.raises(NoRealSolution):
        extract_solutions(_basis(float_ring, texts))


def test_wrong_shape(float_ring):
    with pytest.raises(ShapeMismatch):
        extract_solutions(_basis(float_ring)[:-1])
    texts = list(SYNTHETIC_BASIS)
    texts[0] = "h1 - h2"
    with pytest.raises(ShapeMismatch):
        extract_solutions(_basis(float_ring, texts))


def test_extraction_needs_floats():
    with pytest.raises(TypeError):
        extract_solutions(_basis(PolynomialRing(PrimeField())))


def test_failure_classes():
    assert classify_failure(NoRealSolution("x")) == OUTCOME_NO_REAL
    assert classify_failure(DivisionByZeroCoefficient("x")) == OUTCOME_ZERO_DIVISION
    assert classify_failure(SupportMismatch("x")) == OUTCOME_SHAPE
    assert classify_failure(ShapeMismatch("x")) == OUTCOME_SHAPE
    assert classify_failure(DegenerateTemplate("x")) == OUTCOME_DEGENERATE
    with pytest.raises(RuntimeError):
        classify_failure(RuntimeError("unexpected"))


@pytest.fixture
def toy_template():
    ring = PolynomialRing(PrimeField())
    system = (ring.parse("h1^2 - 1"), ring.parse("h1*h2 - 1"))
    trace = BasisTrace()
    state = buchberger(system, trace=trace)
    reduced = tuple(reduce_basis(state.polys))
    return SolverTemplate(
        ring=ring,
        n_segments=9,
        system=system,
        trace=trace,
        reduced_basis=reduced,
        digest=basis_digest(reduced),
        statistics=state.statistics,
    )


def test_replay_returns_float_basis(toy_template):
    ring = PolynomialRing(BigFloatField(128))
    system = [ring.parse("h1^2 - 1"), ring.parse("h1*h2 - 1")]
    basis = replay(toy_template, system, 128)
    assert basis == [ring.parse("h2^2 - 1"), ring.parse("h1 - h2")]


def test_replay_with_other_coefficients(toy_template):
    ring = PolynomialRing(BigFloatField(128))
    system = [ring.parse("h1^2 - 4"), ring.parse("h1*h2 - 2")]
    basis = replay(toy_template, system, 128)
    assert [p.support for p in basis] == [p.support for p in toy_template.reduced_basis]
    assert basis[0].coefficient(CONSTANT) == -1


def test_replay_rejects_other_support(toy_template):
    ring = PolynomialRing(BigFloatField(128))
    with pytest.raises(SupportMismatch):
        ReplaySession(toy_template, [ring.parse("h1^2 - 1"), ring.parse("h1*h2 + h3 - 1")], 128)
    with pytest.raises(SupportMismatch):
        ReplaySession(toy_template, [ring.parse("h1^2 - 1")], 128)


def test_replay_needs_64_bits(toy_template):
    ring = PolynomialRing(BigFloatField(128))
    with pytest.raises(ValueError):
        ReplaySession(toy_template, [ring.parse("h1^2 - 1"), ring.parse("h1*h2 - 1")], 32)


def test_session_splits_paired_coefficients(toy_template):
    ring = PolynomialRing(BigFloatField(128))
    session = ReplaySession(toy_template, [ring.parse("h1^2 - 1"), ring.parse("h1*h2 - 1")], 128)
    assert session.exact_part(session.system[0]) == toy_template.system[0]
    assert session.float_part(session.system[1]) == ring.parse("h1*h2 - 1")


def test_template_from_instance_off_general_position_is_rejected():
    instance = gen_template_instance(GenerationConfig(n_segments=9, seed=0))
    points = list(instance.points)
    x, y, _, w = points[10].coords
    points[10] = HomogeneousPoint((x, y, 0, w))
    with pytest.raises(DegenerateTemplate, match="general position"):
        build_template(instance.with_points(points))
