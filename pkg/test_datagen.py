"""Tests for quadruple enumeration and seeded instance generation."""

from fractions import Fraction
from math import gcd

import pytest
from pydantic import ValidationError

from algebra import PolynomialRing, PrimeField
from data_model import GenerationConfig
from datagen import (
    RNG_ALGORITHM,
    GenerationExhausted,
    PythagoreanQuadruple,
    add_noise,
    enumerate_quadruples,
    gen_float_instance,
    gen_template_instance,
    homography_from_vertex_offsets,
    rng_for,
)
from text_utils import format_decimal
from upgrade import nongeneric_constraints

IDENTITY = (1, 0, 0, 1, 0, 1, 0, 0, 1)


def _squared_length(pair):
    x, y = (p.euclidean() for p in pair)
    return sum((a - b) ** 2 for a, b in zip(x, y))


def test_smallest_quadruple():
    assert enumerate_quadruples(4) == [PythagoreanQuadruple(1, 2, 2, 3)]


def test_quadruples_are_primitive_and_sorted():
    quadruples = enumerate_quadruples(50)
    assert PythagoreanQuadruple(2, 3, 6, 7) in quadruples
    assert all((q.a, q.b, q.c) != (2, 4, 4) for q in quadruples)
    assert all(gcd(q.a, q.b, q.c) == 1 and q.d < 50 for q in quadruples)
    assert [q.d for q in quadruples] == sorted(q.d for q in quadruples)


def test_invalid_quadruple():
    with pytest.raises(ValueError):
        PythagoreanQuadruple(1, 2, 3, 4)


def test_streams_are_independent_and_reproducible():
    assert list(rng_for(5, 0).integers(0, 1000, size=8)) == list(rng_for(5, 0).integers(0, 1000, size=8))
    assert list(rng_for(5, 0).integers(0, 1000, size=8)) != list(rng_for(5, 1).integers(0, 1000, size=8))


@pytest.fixture(scope="module")
def template_instance():
    return gen_template_instance(GenerationConfig(n_segments=10, seed=3))


def test_template_instance_is_integral(template_instance):
    assert template_instance.kind == "integer"
    assert template_instance.rng == RNG_ALGORITHM
    assert template_instance.n_segments == 10
    for point in template_instance.points:
        assert all(Fraction(c).denominator == 1 for c in point.coords)
        assert gcd(*(int(c) for c in point.coords)) == 1
    assert all(d.denominator == 1 and d > 0 for d in template_instance.lengths)


def test_template_ground_truth_has_the_frame_and_true_lengths(template_instance):
    truth = template_instance.ground_truth
    (x1, y1), (x2, _) = truth.pairs[0], truth.pairs[1]
    assert x1.euclidean() == (0, 0, 0)
    assert y1.euclidean()[1:] == (0, 0)
    assert x2.euclidean()[2] == 0
    for pair, d in zip(truth.pairs, template_instance.lengths):
        assert _squared_length(pair) == d * d


def test_template_generation_is_deterministic(template_instance):
    assert gen_template_instance(GenerationConfig(n_segments=10, seed=3)) == template_instance
    assert gen_template_instance(GenerationConfig(n_segments=10, seed=4)) != template_instance


def test_too_few_quadruples():
    with pytest.raises(GenerationExhausted):
        gen_template_instance(GenerationConfig(n_segments=9, quadruple_bound=4))


def test_zero_offsets_give_the_identity():
    params = homography_from_vertex_offsets([[0, 0, 0]] * 3, cube_side=10)
    for value, expected in zip(params.h, IDENTITY):
        assert abs(value - expected) < 1e-50


@pytest.fixture(scope="module")
def real_instance():
    return gen_float_instance(GenerationConfig(n_segments=9, seed=1))


def test_real_instance_true_points_lie_on_the_grid(real_instance):
    config = GenerationConfig()
    step = Fraction(config.grid)
    for pair in real_instance.ground_truth.pairs:
        for point in pair:
            for c in point.euclidean():
                assert 0 <= c <= config.cube_side
                assert (c / step).denominator == 1


def test_real_instance_keeps_the_frame(real_instance):
    x1, y1, x2 = real_instance.points[:3]
    assert x1.euclidean() == (0, 0, 0)
    assert y1.euclidean()[1:] == (0, 0) and y1.euclidean()[0] != 0
    assert x2.euclidean()[2] == 0 and x2.euclidean()[1] != 0


def test_real_instance_lengths(real_instance):
    for pair, d in zip(real_instance.ground_truth.pairs, real_instance.lengths):
        assert abs(d * d - _squared_length(pair)) < Fraction(1, 10 ** 300)


def test_real_instance_params_are_rounded_to_40_digits(real_instance):
    for value in real_instance.ground_truth.params.h:
        assert Fraction(format_decimal(value, 40)) == value


def test_real_generation_is_deterministic(real_instance):
    assert gen_float_instance(GenerationConfig(n_segments=9, seed=1)) == real_instance


@pytest.mark.parametrize("seed", [0, 3, 12, 21, 43, 49, 50])
def test_template_instances_have_generic_support(seed):
    instance = gen_template_instance(GenerationConfig(n_segments=9, seed=seed))
    assert nongeneric_constraints(instance, PolynomialRing(PrimeField())) == []


@pytest.mark.parametrize("n_segments, seed", [(9, 3), (9, 12), (9, 21), (25, 0), (25, 1), (25, 2)])
def test_real_instances_have_generic_support(n_segments, seed):
    instance = gen_float_instance(GenerationConfig(n_segments=n_segments, seed=seed))
    assert nongeneric_constraints(instance) == []


def test_zero_noise_is_the_identity(real_instance):
    assert add_noise(real_instance, 0.0, seed=9) is real_instance


def test_noise_moves_points_but_not_lengths(real_instance):
    noisy = add_noise(real_instance, 1e-3, seed=9)
    assert noisy.noise_sigma == 1e-3
    assert noisy.lengths == real_instance.lengths
    assert noisy.points != real_instance.points
    assert add_noise(real_instance, 1e-3, seed=9) == noisy
    shifts = [
        abs(a - b)
        for p, q in zip(noisy.points, real_instance.points)
        for a, b in zip(p.euclidean(), q.euclidean())
    ]
    assert max(shifts) < Fraction(1, 50)


def test_negative_noise_is_rejected(real_instance):
    with pytest.raises(ValueError):
        add_noise(real_instance, -1.0, seed=0)


def test_config_validation():
    with pytest.raises(ValidationError):
        GenerationConfig(n_segments=8)
    with pytest.raises(ValidationError):
        GenerationConfig(grid="abc")
    with pytest.raises(ValidationError):
        GenerationConfig(colour="blue")


def test_config_from_file(tmp_path):
    path = tmp_path / "generation.env"
    path.write_text("N_SEGMENTS=12\nSEED=5\nGRID=0.5\n", encoding="utf-8")
    config = GenerationConfig.from_file(str(path))
    assert (config.n_segments, config.seed, config.grid) == (12, 5, "0.5")
    assert GenerationConfig.from_file(str(path), seed=7).seed == 7


def test_missing_config_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        GenerationConfig.from_file(str(tmp_path / "missing.env"))
