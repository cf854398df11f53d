from functools import lru_cache
from pathlib import Path
from typing import Annotated, Callable, List, Literal, Optional, Tuple

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

FORMAT_VERSION = 1
NVARS = 10

# h1 > h2 > h3 > h7 > h8 > h9 > h4 > h5 > h6 > h10, as 0-based variable indices
DEFAULT_VARIABLE_ORDER: Tuple[int, ...] = (0, 1, 2, 6, 7, 8, 3, 4, 5, 9)

Monomial = Tuple[int, ...]

# (coefficient as decimal string, exponent vector)
TermRecord = Tuple[str, Tuple[int, ...]]
PolynomialRecord = List[TermRecord]

PointRecord = Annotated[List[str], Field(min_length=4, max_length=4)]

Outcome = Literal[
    "success",
    "no-real-solution",
    "zero-division",
    "shape-mismatch",
    "inaccurate",
    "degenerate-template",
]


@lru_cache(maxsize=None)
def _key_function(kind: str, variables: Tuple[int, ...], negate: bool) -> Callable[[Monomial], tuple]:
    cache: dict = {}
    reversed_variables = tuple(reversed(variables))

    def key(m: Monomial) -> tuple:
        k = cache.get(m)
        if k is None:
            if kind == "lex":
                k = tuple(m[v] for v in variables)
            else:
                k = (sum(m),) + tuple(-m[v] for v in reversed_variables)
            if negate:
                k = tuple(-x for x in k)
            cache[m] = k
        return k

    return key


class MonomialOrder(BaseModel):
    """A monomial order on h1..h10.

    `variables` lists the 0-based variable indices from most to least significant.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["lex", "grevlex"] = "grevlex"
    variables: Tuple[int, ...] = DEFAULT_VARIABLE_ORDER

    @field_validator("variables")
    @classmethod
    def _check_permutation(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if sorted(value) != list(range(NVARS)):
            raise ValueError(f"variables must be a permutation of 0..{NVARS - 1}, got {value}")
        return value

    def sort_key(self) -> Callable[[Monomial], tuple]:
        """Key function: larger key means larger monomial."""
        return _key_function(self.kind, self.variables, False)

    def heap_key(self) -> Callable[[Monomial], tuple]:
        """Key function ordering monomials from largest to smallest under heapq."""
        return _key_function(self.kind, self.variables, True)


class FieldSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["zp", "bigfloat"]
    modulus: Optional[int] = None
    precision_bits: Optional[int] = None

    @model_validator(mode="after")
    def _check_parameters(self):
        if self.kind == "zp" and self.modulus is None:
            raise ValueError("zp field requires a modulus")
        if self.kind == "bigfloat" and self.precision_bits is None:
            raise ValueError("bigfloat field requires precision_bits")
        return self


class PolynomialSystemRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format_version: int = FORMAT_VERSION
    field: FieldSpec
    order: MonomialOrder
    polynomials: List[PolynomialRecord]


class BasisStatistics(BaseModel):
    model_config = ConfigDict(extra="forbid")

    multi_reductions: int = 0
    pairs_processed: int = 0
    zero_reductions: int = 0
    basis_size: int = 0
    elapsed_seconds: float = 0.0


class ResourceBudget(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    max_pairs: int = Field(200_000, gt=0)
    max_basis_size: int = Field(20_000, gt=0)


class TracePairRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    i: int
    j: int
    reductors: List[int]


class TemplateFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format_version: int = FORMAT_VERSION
    field: FieldSpec
    order: MonomialOrder
    n_segments: int = Field(ge=9)
    seed: Optional[int] = None
    system: List[PolynomialRecord]
    trace: List[List[TracePairRecord]]
    reduced_basis: List[PolynomialRecord]
    basis_digest: str
    statistics: BasisStatistics

    @model_validator(mode="after")
    def _check_counts(self):
        if len(self.system) != self.n_segments + 2:
            raise ValueError(f"template system has {len(self.system)} polynomials, expected {self.n_segments + 2}")
        return self


class SegmentRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x: PointRecord
    y: PointRecord
    length: str


class GroundTruthRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    segments: List[SegmentRecord]
    params: Annotated[List[str], Field(min_length=9, max_length=9)]


class InstanceFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format_version: int = FORMAT_VERSION
    kind: Literal["integer", "real"]
    n_segments: int = Field(ge=9)
    anchor_index: int = 1
    rng: Optional[str] = None
    seed: Optional[int] = None
    noise_sigma: float = 0.0
    segments: List[SegmentRecord]
    ground_truth: Optional[GroundTruthRecord] = None

    @model_validator(mode="after")
    def _check_counts(self):
        if len(self.segments) != self.n_segments:
            raise ValueError(f"instance lists {len(self.segments)} segments, expected {self.n_segments}")
        if not 0 <= self.anchor_index < 2 * self.n_segments:
            raise ValueError(f"anchor index {self.anchor_index} out of range")
        if self.ground_truth is not None and len(self.ground_truth.segments) != self.n_segments:
            raise ValueError("ground truth segment count differs from the instance")
        return self


class GenerationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_segments: int = Field(9, ge=9)
    seed: int = Field(0, ge=0)
    quadruple_bound: int = Field(50, ge=4)
    coordinate_bound: int = Field(100, gt=1)
    homography_bound: int = Field(20, gt=1)
    cube_side: int = Field(10, gt=0)
    grid: str = "0.1"
    noise_sigma: float = Field(0.0, ge=0.0)
    decimal_digits: int = Field(400, ge=20)
    max_resamples: int = Field(200, gt=0)

    @field_validator("grid")
    @classmethod
    def _check_grid(cls, value: str) -> str:
        from fractions import Fraction

        try:
            step = Fraction(value)
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"grid must be a decimal number, got {value!r}") from e
        if step <= 0:
            raise ValueError("grid must be positive")
        return value

    @classmethod
    def from_file(cls, path: str, **overrides) -> "GenerationConfig":
        """Load a flat KEY=value file; explicit overrides win over file values."""
        config_file = Path(path)
        if not config_file.exists():
            raise FileNotFoundError(f"Config file not found: {path}")
        values = {key.lower(): value for key, value in dotenv_values(config_file).items() if value is not None}
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


class RunRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["construct", "exact", "noise", "precision"]
    n_segments: int
    solver_seed: int
    instance_seed: Optional[int] = None
    outcome: Outcome
    error: Optional[float] = None
    max_residual: Optional[float] = None
    basis_size: Optional[int] = None
    multi_reductions: Optional[int] = None
    precision_bits: Optional[int] = None
    wall_seconds: Optional[float] = None


class AggregateRow(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_segments: int
    runs: int
    successes: int
    success_rate: float
    mean_error: Optional[float] = None
    mean_basis_size: Optional[float] = None
    mean_multi_reductions: Optional[float] = None
    precision_bits: Optional[int] = None
    mean_wall_seconds: Optional[float] = None


class BenchmarkReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["construct", "exact", "noise", "precision"]
    sigma: float = 0.0
    runs: List[RunRecord] = []

    def sorted_runs(self) -> List[RunRecord]:
        return sorted(self.runs, key=lambda r: (r.n_segments, r.solver_seed, -1 if r.instance_seed is None else r.instance_seed))

    def aggregate(self) -> List[AggregateRow]:
        """Per-N rows, recomputed from the run records every time."""
        rows = []
        for n in sorted({r.n_segments for r in self.runs}):
            runs = [r for r in self.runs if r.n_segments == n]
            successes = [r for r in runs if r.outcome == "success"]
            errors = [r.error for r in successes if r.error is not None]
            sizes = [r.basis_size for r in successes if r.basis_size is not None]
            steps = [r.multi_reductions for r in successes if r.multi_reductions is not None]
            bits = [r.precision_bits for r in successes if r.precision_bits is not None]
            times = [r.wall_seconds for r in runs if r.wall_seconds is not None]
            rows.append(AggregateRow(
                n_segments=n,
                runs=len(runs),
                successes=len(successes),
                success_rate=len(successes) / len(runs),
                mean_error=sum(errors) / len(errors) if errors else None,
                mean_basis_size=sum(sizes) / len(sizes) if sizes else None,
                mean_multi_reductions=sum(steps) / len(steps) if steps else None,
                precision_bits=max(bits) if bits else None,
                mean_wall_seconds=sum(times) / len(times) if times else None,
            ))
        return rows

    def success_grid(self, n_segments: int) -> List[Tuple[int, List[bool]]]:
        """Rows (solver seed, success per instance seed) for one N."""
        runs = [r for r in self.sorted_runs() if r.n_segments == n_segments and r.instance_seed is not None]
        grid = {}
        for r in runs:
            grid.setdefault(r.solver_seed, []).append(r.outcome == "success")
        return sorted(grid.items())
