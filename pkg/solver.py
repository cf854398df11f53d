"""
Template solver for the metric upgrade.

A solver template is built once from an integer instance: its constraint
system is solved over Z_p and the Groebner computation is recorded as a trace.
Solving a real instance replays that trace on the instance's own system with
Z_p and floating point coefficients carried side by side, so all zero
decisions come from Z_p. The four solutions are read off the reduced basis.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from algebra import (
    BigFloatField,
    DivisionByZeroCoefficient,
    PairedField,
    Polynomial,
    PolynomialRing,
    PrimeField,
    ZeroInverse,
    field_from_spec,
    parse_monomial,
    polynomial_from_record,
)
from data_model import (
    FORMAT_VERSION,
    BasisStatistics,
    MonomialOrder,
    ResourceBudget,
    TemplateFile,
    TracePairRecord,
)
from groebner import BasisTrace, ResourceLimit, TraceMismatch, TracePair, buchberger, reduce_basis, replay_trace
from upgrade import (
    HomographyParams,
    SegmentInstance,
    build_system,
    canonical_frame_instance,
    length_error,
    length_residuals,
    nongeneric_constraints,
)

logger = logging.getLogger(__name__)

PRECISION_TABLE: Dict[int, int] = {9: 1088, 10: 512, 12: 448, 15: 384, 20: 192, 25: 256}
LENGTH_TOLERANCE = 1e-9
MIN_PRECISION_BITS = 64

# name, leading monomial, other monomial
BASIS_SHAPE: Tuple[Tuple[str, str, str], ...] = (
    ("g1", "h1", "1"),
    ("g2", "h2", "1"),
    ("g3", "h3", "1"),
    ("g4", "h7", "1"),
    ("g5", "h8", "1"),
    ("g6", "h9", "1"),
    ("g7", "h4", "h5"),
    ("g8", "h5^2", "1"),
    ("g9", "h6^2", "1"),
    ("g10", "h10^2", "1"),
    ("g11", "h5*h6", "h10"),
    ("g12", "h5*h10", "h6"),
    ("g13", "h6*h10", "h5"),
)

SIGN_ORDER: Tuple[Tuple[int, int], ...] = ((1, 1), (-1, 1), (1, -1), (-1, -1))


class DegenerateTemplate(ValueError):
    """The template instance does not yield the expected reduced basis."""


class SupportMismatch(ValueError):
    """An instance system differs in support from the template system, or the replay diverged."""


class ShapeMismatch(ValueError):
    """A reduced basis does not have the 13-element shape the solutions are read from."""


class NoRealSolution(ArithmeticError):
    """h5^2 or h6^2 would have to be negative."""


OUTCOME_SUCCESS = "success"
OUTCOME_NO_REAL = "no-real-solution"
OUTCOME_ZERO_DIVISION = "zero-division"
OUTCOME_SHAPE = "shape-mismatch"
OUTCOME_INACCURATE = "inaccurate"
OUTCOME_DEGENERATE = "degenerate-template"


def classify_failure(error: Exception) -> str:
    if isinstance(error, NoRealSolution):
        return OUTCOME_NO_REAL
    if isinstance(error, (DivisionByZeroCoefficient, ZeroInverse)):
        return OUTCOME_ZERO_DIVISION
    if isinstance(error, (ShapeMismatch, SupportMismatch)):
        return OUTCOME_SHAPE
    if isinstance(error, DegenerateTemplate):
        return OUTCOME_DEGENERATE
    raise error


def default_precision_bits(n_segments: int) -> int:
    """Mantissa length for N segments: the entry of the largest tabulated N not above n_segments."""
    if n_segments < 9:
        raise ValueError(f"at least 9 segments are needed, got {n_segments}")
    return PRECISION_TABLE[max(n for n in PRECISION_TABLE if n <= n_segments)]


def match_shape(basis: Sequence[Polynomial]) -> Dict[str, Tuple[Any, Any]]:
    """Coefficients (of the first, of the second monomial) for g1..g13, matched by support."""
    if len(basis) != len(BASIS_SHAPE):
        raise ShapeMismatch(f"reduced basis has {len(basis)} elements, expected {len(BASIS_SHAPE)}")
    by_support = {frozenset(p.support): p for p in basis}
    coefficients = {}
    for name, first, second in BASIS_SHAPE:
        m1, m2 = parse_monomial(first), parse_monomial(second)
        poly = by_support.get(frozenset((m1, m2)))
        if poly is None:
            raise ShapeMismatch(f"no basis element with support {{{first}, {second}}} ({name})")
        coefficients[name] = (poly.coefficient(m1), poly.coefficient(m2))
    return coefficients


def basis_digest(polys: Sequence[Polynomial]) -> str:
    payload = json.dumps([p.to_record() for p in polys], separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SolverTemplate:
    ring: PolynomialRing
    n_segments: int
    system: Tuple[Polynomial, ...]
    trace: BasisTrace
    reduced_basis: Tuple[Polynomial, ...]
    digest: str
    statistics: BasisStatistics
    seed: Optional[int] = None

    @property
    def order(self) -> MonomialOrder:
        return self.ring.order

    def to_record(self) -> TemplateFile:
        return TemplateFile(
            format_version=FORMAT_VERSION,
            field=self.ring.field.spec(),
            order=self.ring.order,
            n_segments=self.n_segments,
            seed=self.seed,
            system=[p.to_record() for p in self.system],
            trace=[[TracePairRecord(i=p.i, j=p.j, reductors=list(p.reductors)) for p in step] for step in self.trace.steps],
            reduced_basis=[p.to_record() for p in self.reduced_basis],
            basis_digest=self.digest,
            statistics=self.statistics,
        )

    @classmethod
    def from_record(cls, record: TemplateFile) -> "SolverTemplate":
        if record.format_version != FORMAT_VERSION:
            raise ValueError(f"Unsupported template format version {record.format_version}")
        if record.field.kind != "zp":
            raise ValueError("solver templates are computed over Z_p")
        ring = PolynomialRing(field_from_spec(record.field), record.order)
        reduced = tuple(polynomial_from_record(ring, p) for p in record.reduced_basis)
        if basis_digest(reduced) != record.basis_digest:
            raise ValueError("template reduced basis does not match its digest")
        trace = BasisTrace(tuple(TracePair(p.i, p.j, tuple(p.reductors)) for p in step) for step in record.trace)
        return cls(
            ring=ring,
            n_segments=record.n_segments,
            system=tuple(polynomial_from_record(ring, p) for p in record.system),
            trace=trace,
            reduced_basis=reduced,
            digest=record.basis_digest,
            statistics=record.statistics,
            seed=record.seed,
        )

    def save(self, path: str) -> Path:
        output = Path(path)
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(self.to_record().model_dump_json(), encoding="utf-8")
        logger.info(f"Saved solver template for N={self.n_segments} to {output}")
        return output

    @classmethod
    def from_json(cls, text: str) -> "SolverTemplate":
        try:
            record = TemplateFile.model_validate_json(text)
        except ValidationError as e:
            logger.error(f"Validation error: {e}")
            raise ValueError(f"not a valid solver template: {e}") from e
        return cls.from_record(record)

    @classmethod
    def load(cls, path: str) -> "SolverTemplate":
        template_file = Path(path)
        if not template_file.exists():
            raise FileNotFoundError(f"Template file not found: {path}")
        return cls.from_json(template_file.read_text(encoding="utf-8"))


def build_template(
    instance: SegmentInstance,
    order: Optional[MonomialOrder] = None,
    strategy: str = "normal",
    budget: Optional[ResourceBudget] = None,
) -> SolverTemplate:
    """Solve the instance's system over Z_p, recording the trace."""
    ring = PolynomialRing(PrimeField(), order)
    nongeneric = nongeneric_constraints(instance, ring)
    if nongeneric:
        raise DegenerateTemplate(f"constraints {nongeneric} have fewer monomials than in general position")
    system = build_system(instance, ring)
    if any(p.is_zero for p in system):
        raise DegenerateTemplate("a constraint vanishes identically over Z_p")
    trace = BasisTrace()
    try:
        state = buchberger(system, trace=trace, strategy=strategy, budget=budget)
    except ResourceLimit as e:
        raise DegenerateTemplate(f"Groebner computation exceeded its budget: {e}") from e
    reduced = reduce_basis(state.polys)
    try:
        match_shape(reduced)
    except ShapeMismatch as e:
        raise DegenerateTemplate(f"template basis has the wrong shape: {e}") from e
    logger.info(
        f"Built template for N={instance.n_segments}: basis {len(state)}, "
        f"{state.statistics.multi_reductions} multi-reductions, {state.statistics.elapsed_seconds:.2f}s"
    )
    return SolverTemplate(
        ring=ring,
        n_segments=instance.n_segments,
        system=tuple(system),
        trace=trace,
        reduced_basis=tuple(reduced),
        digest=basis_digest(reduced),
        statistics=state.statistics,
        seed=instance.seed,
    )


class ReplaySession:
    """One lockstep replay of a template on a floating point system."""

    def __init__(self, template: SolverTemplate, float_system: Sequence[Polynomial], precision_bits: int):
        if precision_bits < MIN_PRECISION_BITS:
            raise ValueError(f"precision must be at least {MIN_PRECISION_BITS} bits, got {precision_bits}")
        if len(float_system) != len(template.system):
            raise SupportMismatch(f"system has {len(float_system)} polynomials, template has {len(template.system)}")
        self.template = template
        self.replay_field = BigFloatField(precision_bits)
        self.field = PairedField(template.ring.field, self.replay_field)
        self.ring = PolynomialRing(self.field, template.order)
        self.float_ring = PolynomialRing(self.replay_field, template.order)
        self.system = [self._pair(k, t, f) for k, (t, f) in enumerate(zip(template.system, float_system))]
        self.basis: List[Polynomial] = []

    def _pair(self, index: int, exact: Polynomial, approximate: Polynomial) -> Polynomial:
        if approximate.ring.order != self.template.order:
            approximate = approximate.ring.with_order(self.template.order).convert(approximate)
        if exact.support != approximate.support:
            missing = set(exact.support) - set(approximate.support)
            extra = set(approximate.support) - set(exact.support)
            raise SupportMismatch(
                f"polynomial {index}: {len(missing)} template monomials missing, {len(extra)} unexpected"
            )
        convert = self.replay_field.from_number
        terms = tuple(((tc, convert(fc)), m) for (tc, m), (fc, _) in zip(exact.terms, approximate.terms))
        return Polynomial(self.ring, terms)

    def run(self) -> List[Polynomial]:
        """Replay, reduce and return the floating point reduced basis."""
        logger.info(
            f"Replaying {len(self.template.trace)} steps for N={self.template.n_segments} "
            f"at {self.replay_field.precision_bits} bits"
        )
        try:
            state = replay_trace(self.system, self.template.trace)
        except TraceMismatch as e:
            raise SupportMismatch(str(e)) from e
        paired = reduce_basis(state.polys)
        if basis_digest([self.exact_part(p) for p in paired]) != self.template.digest:
            raise SupportMismatch("replayed Z_p basis differs from the template")
        self.basis = [self.float_part(p) for p in paired]
        logger.info(f"Replay done: basis {len(state)}, reduced {len(self.basis)}, {state.statistics.elapsed_seconds:.2f}s")
        return self.basis

    def exact_part(self, poly: Polynomial) -> Polynomial:
        return Polynomial(self.template.ring, tuple((c[0], m) for c, m in poly.terms))

    def float_part(self, poly: Polynomial) -> Polynomial:
        return Polynomial(self.float_ring, tuple((c[1], m) for c, m in poly.terms))


def replay(template: SolverTemplate, float_system: Sequence[Polynomial], precision_bits: int) -> List[Polynomial]:
    """Floating point reduced basis of float_system, following the template's trace."""
    return ReplaySession(template, float_system, precision_bits).run()


@dataclass(frozen=True)
class SolutionDiagnostics:
    determinant: Any
    consistency_residual: Any
    consistent: bool
    max_length_residual: Any = None
    length_error: Any = None


@dataclass(frozen=True)
class UpgradeSolution:
    """The four homographies in sign order (+,+), (-,+), (+,-), (-,-) of (h5, h6)."""
    params: Tuple[HomographyParams, ...]
    signs: Tuple[Tuple[int, int], ...]
    diagnostics: Tuple[SolutionDiagnostics, ...]
    precision_bits: int
    instance: Optional[SegmentInstance] = None

    @property
    def max_length_residual(self) -> Any:
        residuals = [d.max_length_residual for d in self.diagnostics if d.max_length_residual is not None]
        return max(residuals) if residuals else None

    @property
    def length_error(self) -> Any:
        return self.diagnostics[0].length_error if self.diagnostics else None


def _relative(ctx, lhs, rhs):
    scale = abs(lhs) + abs(rhs)
    return abs(lhs + rhs) / scale if scale else ctx.zero


def extract_solutions(basis: Sequence[Polynomial]) -> UpgradeSolution:
    """Read h1..h10 off a reduced floating point basis of the expected shape."""
    if not basis:
        raise ShapeMismatch("empty basis")
    field = basis[0].ring.field
    if not isinstance(field, BigFloatField):
        raise TypeError("solutions are extracted from a floating point basis")
    ctx = field.context
    c = match_shape(basis)

    def ratio(name: str) -> Any:
        lead, other = c[name]
        return -other * field.inv(lead)

    h1, h2, h3, h7, h8, h9 = (ratio(f"g{k}") for k in range(1, 7))
    k4 = ratio("g7")
    h5_squared = ratio("g8")
    h6_squared = ratio("g9")
    if h5_squared <= 0 or h6_squared <= 0:
        raise NoRealSolution(f"h5^2 = {ctx.nstr(h5_squared, 8)}, h6^2 = {ctx.nstr(h6_squared, 8)}")
    h5_abs = field.sqrt(h5_squared)
    h6_abs = field.sqrt(h6_squared)
    g11_lead, g11_other = c["g11"]
    inv_g11 = field.inv(g11_other)
    tolerance = ctx.ldexp(1, -(field.precision_bits // 4))

    params = []
    diagnostics = []
    for s5, s6 in SIGN_ORDER:
        h5 = h5_abs * s5
        h6 = h6_abs * s6
        h4 = k4 * h5
        h10 = -g11_lead * h5 * h6 * inv_g11
        solution = HomographyParams((h1, h2, h3, h4, h5, h6, h7, h8, h9), h10)
        determinant = solution.determinant()
        if not determinant:
            raise ShapeMismatch("extracted homography is singular")
        residual = max(
            _relative(ctx, c["g10"][0] * h10 * h10, c["g10"][1]),
            _relative(ctx, c["g12"][0] * h5 * h10, c["g12"][1] * h6),
            _relative(ctx, c["g13"][0] * h6 * h10, c["g13"][1] * h5),
        )
        params.append(solution)
        diagnostics.append(SolutionDiagnostics(determinant, residual, residual <= tolerance))
    return UpgradeSolution(tuple(params), SIGN_ORDER, tuple(diagnostics), field.precision_bits)


def solve(template: SolverTemplate, instance: SegmentInstance, precision_bits: Optional[int] = None) -> UpgradeSolution:
    """Four candidate homographies for the instance, with length diagnostics."""
    if instance.n_segments != template.n_segments:
        raise ValueError(f"template is for N={template.n_segments}, instance has N={instance.n_segments}")
    bits = precision_bits if precision_bits is not None else default_precision_bits(instance.n_segments)
    framed = canonical_frame_instance(instance, precision_bits=bits)
    ring = PolynomialRing(BigFloatField(bits), template.order)
    system = build_system(framed, ring)
    basis = replay(template, system, bits)
    solution = extract_solutions(basis)
    diagnostics = []
    for params, diag in zip(solution.params, solution.diagnostics):
        residuals = length_residuals(framed, params, bits)
        diagnostics.append(replace(
            diag,
            max_length_residual=max(residuals),
            length_error=length_error(framed, params, bits),
        ))
        if not diag.consistent:
            logger.warning(f"solution is not consistent with g10/g12/g13 (residual {diag.consistency_residual})")
    return replace(solution, diagnostics=tuple(diagnostics), instance=framed)


def is_accurate(solution: UpgradeSolution, tolerance: float = LENGTH_TOLERANCE) -> bool:
    residual = solution.max_length_residual
    return residual is not None and residual < tolerance


def minimal_precision(
    template: SolverTemplate,
    instance: SegmentInstance,
    lowest: int = MIN_PRECISION_BITS,
    highest: int = 2048,
    step: int = 64,
) -> Optional[int]:
    """Smallest multiple of `step` in [lowest, highest] at which solving succeeds with all length residuals below 1e-9."""

    def succeeds(bits: int) -> bool:
        try:
            return is_accurate(solve(template, instance, bits))
        except (NoRealSolution, DivisionByZeroCoefficient, ZeroInverse, ShapeMismatch, SupportMismatch):
            return False

    candidates = list(range(lowest, highest + 1, step))
    if not candidates or not succeeds(candidates[-1]):
        return None
    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if succeeds(candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return candidates[lo]
