"""
Buchberger's algorithm with multi-reduction steps, plus trace recording and replay.

Critical pairs are pruned with the Gebauer-Moeller criteria. Each multi-reduction
step takes a batch of pairs and reduces their S-polynomials in turn; a nonzero
remainder joins the basis at once, so the later S-polynomials of the same step
are reduced by it as well.
When a BasisTrace is supplied the step records, for each productive pair, which
basis elements were used as reductors and in which order; replay_trace repeats
exactly those operations over another coefficient field.
"""

from __future__ import annotations

import bisect
import heapq
import logging
import time
from collections import deque
from typing import Any, Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from sympy.polys.monomials import monomial_div, monomial_divides, monomial_lcm, monomial_mul

from algebra import Polynomial, PolynomialRing
from data_model import BasisStatistics, Monomial, MonomialOrder, ResourceBudget

logger = logging.getLogger(__name__)

STRATEGIES = ("normal", "first")


class ZeroPolynomial(ValueError):
    """A zero polynomial was passed where a leading term is needed."""


class ResourceLimit(RuntimeError):
    """The basis or the number of processed pairs outgrew the configured budget."""


class TraceMismatch(ValueError):
    """A replayed reduction diverged from the recorded one."""


class TracePair(NamedTuple):
    i: int
    j: int
    reductors: Tuple[int, ...]


TraceStep = Tuple[TracePair, ...]


class BasisTrace:
    """Steps of (pair, reductor sequence) for every pair whose remainder was nonzero."""

    def __init__(self, steps: Iterable[TraceStep] = ()):
        self.steps: List[TraceStep] = [tuple(step) for step in steps]
        self._open: Optional[List[TracePair]] = None

    def begin_step(self) -> None:
        self._open = []

    def record(self, pair: TracePair) -> None:
        self._open.append(pair)

    def end_step(self) -> None:
        if self._open:
            self.steps.append(tuple(self._open))
        self._open = None

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BasisTrace) and other.steps == self.steps


def _variable_mask(m: Monomial) -> int:
    mask = 0
    for k, e in enumerate(m):
        if e:
            mask |= 1 << k
    return mask


class _Reductors:
    """Leading monomials of a growing basis, searched for divisors of a monomial."""

    def __init__(self, ring: PolynomialRing):
        self.ring = ring
        self.polys: List[Polynomial] = []
        self.lms: List[Monomial] = []
        self.masks: List[int] = []
        self._by_size: List[Tuple[int, int]] = []
        self._inverse_lc: Dict[int, Any] = {}

    def add(self, poly: Polynomial) -> int:
        index = len(self.polys)
        self.polys.append(poly)
        lm = poly.leading_monomial
        self.lms.append(lm)
        self.masks.append(_variable_mask(lm))
        bisect.insort(self._by_size, (len(poly), index))
        return index

    def find(self, m: Monomial, limit: int) -> Optional[int]:
        """Fewest-terms element among the first `limit` whose LM divides m; ties go to the lowest index."""
        mask = _variable_mask(m)
        masks, lms = self.masks, self.lms
        for _, index in self._by_size:
            if index < limit and not masks[index] & ~mask and monomial_divides(lms[index], m):
                return index
        return None

    def inverse_lc(self, index: int) -> Any:
        inverse = self._inverse_lc.get(index)
        if inverse is None:
            inverse = self.ring.field.inv(self.polys[index].leading_coefficient)
            self._inverse_lc[index] = inverse
        return inverse


def _s_poly_terms(f: Polynomial, g: Polynomial, inv_f: Any, inv_g: Any) -> Dict[Monomial, Any]:
    """Tail terms of S(f, g); the leading terms cancel by construction and are never formed."""
    field = f.ring.field
    gamma = monomial_lcm(f.leading_monomial, g.leading_monomial)
    qf = monomial_div(gamma, f.leading_monomial)
    qg = monomial_div(gamma, g.leading_monomial)
    terms: Dict[Monomial, Any] = {}
    for c, m in f.terms[1:]:
        terms[monomial_mul(m, qf)] = field.mul(inv_f, c)
    for c, m in g.terms[1:]:
        mm = monomial_mul(m, qg)
        v = field.mul(inv_g, c)
        old = terms.get(mm)
        if old is None:
            terms[mm] = field.neg(v)
        else:
            new = field.sub(old, v)
            if field.is_zero(new):
                del terms[mm]
            else:
                terms[mm] = new
    return terms


def s_polynomial(f: Polynomial, g: Polynomial) -> Polynomial:
    if f.is_zero or g.is_zero:
        raise ZeroPolynomial("S-polynomial of a zero polynomial")
    if f.ring != g.ring:
        raise ValueError("polynomials live in different rings")
    field = f.ring.field
    terms = _s_poly_terms(f, g, field.inv(f.leading_coefficient), field.inv(g.leading_coefficient))
    return f.ring.from_dict({m: c for m, c in terms.items() if not field.is_zero(c)})


def _reduce(
    ring: PolynomialRing,
    terms: Dict[Monomial, Any],
    reductors: _Reductors,
    choose: Callable[[Monomial], Optional[int]],
    record: Optional[List[int]] = None,
) -> Polynomial:
    """Full reduction of `terms` (consumed) using the reductor picked by `choose` at each leading monomial."""
    field = ring.field
    heap_key = ring.heap_key
    heap = [(heap_key(m), m) for m in terms]
    heapq.heapify(heap)
    remainder = []
    while heap:
        _, m = heapq.heappop(heap)
        c = terms.pop(m, None)
        if c is None:
            continue
        index = choose(m)
        if index is None:
            remainder.append((c, m))
            continue
        if record is not None:
            record.append(index)
        g = reductors.polys[index]
        factor = field.mul(c, reductors.inverse_lc(index))
        q = monomial_div(m, g.leading_monomial)
        for gc, gm in g.terms[1:]:
            mm = monomial_mul(gm, q)
            old = terms.get(mm)
            if old is None:
                terms[mm] = field.neg(field.mul(factor, gc))
                heapq.heappush(heap, (heap_key(mm), mm))
            else:
                new = field.submul(old, factor, gc)
                if field.is_zero(new):
                    del terms[mm]
                else:
                    terms[mm] = new
    return Polynomial(ring, tuple(remainder))


def reduce_full(f: Polynomial, basis: Sequence[Polynomial]) -> Polynomial:
    """Remainder of f after full reduction by `basis`; no term of it is divisible by any LM(g)."""
    reductors = _Reductors(f.ring)
    for g in basis:
        if g.is_zero:
            raise ZeroPolynomial("cannot reduce by a zero polynomial")
        if g.ring != f.ring:
            raise ValueError("polynomials live in different rings")
        reductors.add(g)
    limit = len(basis)
    return _reduce(f.ring, f.to_dict(), reductors, lambda m: reductors.find(m, limit))


class PairQueue:
    """Pending critical pairs (i, j), i < j, keyed by the LCM of their leading monomials."""

    def __init__(self, strategy: str = "normal"):
        if strategy not in STRATEGIES:
            raise ValueError(f"Unknown selection strategy {strategy!r}; choose from {STRATEGIES}")
        self.strategy = strategy
        self._lcms: Dict[Tuple[int, int], Monomial] = {}

    def __len__(self) -> int:
        return len(self._lcms)

    def __contains__(self, pair: Tuple[int, int]) -> bool:
        return pair in self._lcms

    def items(self):
        return list(self._lcms.items())

    def add(self, i: int, j: int, lcm: Monomial) -> None:
        self._lcms[(i, j)] = lcm

    def discard(self, pair: Tuple[int, int]) -> None:
        self._lcms.pop(pair, None)

    def select(self) -> List[Tuple[int, int]]:
        """Remove and return the next batch.

        "normal" takes every pair whose LCM has minimal total degree, sorted by (i, j);
        "first" takes the single oldest pair.
        """
        if not self._lcms:
            return []
        if self.strategy == "normal":
            lowest = min(sum(lcm) for lcm in self._lcms.values())
            batch = sorted(pair for pair, lcm in self._lcms.items() if sum(lcm) == lowest)
        else:
            batch = [min(self._lcms, key=lambda pair: (pair[1], pair[0]))]
        for pair in batch:
            del self._lcms[pair]
        return batch


class BasisState:
    """Intermediate basis, pending pairs and statistics of one Buchberger run."""

    def __init__(self, ring: PolynomialRing, strategy: str = "normal", budget: Optional[ResourceBudget] = None, track_pairs: bool = True):
        self.ring = ring
        self.pairs = PairQueue(strategy)
        self.budget = budget if budget is not None else ResourceBudget()
        self.statistics = BasisStatistics()
        self.track_pairs = track_pairs
        self._reductors = _Reductors(ring)

    @property
    def polys(self) -> List[Polynomial]:
        return self._reductors.polys

    def __len__(self) -> int:
        return len(self._reductors.polys)

    def insert(self, poly: Polynomial) -> int:
        """Append poly with its leading coefficient normalized by the field and update the pairs."""
        if poly.is_zero:
            raise ZeroPolynomial("cannot add a zero polynomial to the basis")
        if poly.ring != self.ring:
            raise ValueError("polynomial ring differs from the basis ring")
        field = self.ring.field
        scale = field.monic_scale(poly.leading_coefficient)
        if scale != field.one:
            poly = poly.scale(scale)
        index = self._reductors.add(poly)
        self.statistics.basis_size = len(self)
        if len(self) > self.budget.max_basis_size:
            raise ResourceLimit(f"basis grew beyond {self.budget.max_basis_size} elements")
        if self.track_pairs:
            self._update_pairs(index)
        return index

    def _update_pairs(self, new: int) -> None:
        lms = self._reductors.lms
        lm_new = lms[new]
        # chain criterion on the pairs already queued
        for (i, j), lcm_ij in self.pairs.items():
            if (
                monomial_divides(lm_new, lcm_ij)
                and lcm_ij != monomial_lcm(lms[i], lm_new)
                and lcm_ij != monomial_lcm(lms[j], lm_new)
            ):
                self.pairs.discard((i, j))
        by_lcm: Dict[Monomial, List[int]] = {}
        for i in range(new):
            by_lcm.setdefault(monomial_lcm(lms[i], lm_new), []).append(i)
        kept: List[Monomial] = []
        for lcm in sorted(by_lcm, key=self.ring.key):
            if any(monomial_divides(other, lcm) for other in kept):
                continue
            kept.append(lcm)
        for lcm in kept:
            group = by_lcm[lcm]
            # coprime leading monomials reduce to zero
            if any(lcm == monomial_mul(lms[i], lm_new) for i in group):
                continue
            self.pairs.add(min(group), new, lcm)

    def check_budget(self) -> None:
        if self.statistics.pairs_processed > self.budget.max_pairs:
            raise ResourceLimit(f"processed more than {self.budget.max_pairs} critical pairs")


def multi_reduce(pairs: Sequence[Tuple[int, int]], state: BasisState, trace: Optional[BasisTrace] = None) -> BasisState:
    """One multi-reduction step over a batch of pairs.

    Each nonzero remainder is inserted before the next S-polynomial is reduced,
    so no remainder has a leading monomial divisible by that of an earlier one.
    """
    if not pairs:
        return state
    reductors = state._reductors
    ring = state.ring
    if trace is not None:
        trace.begin_step()
    for i, j in pairs:
        record: Optional[List[int]] = [] if trace is not None else None
        limit = len(state)
        terms = _s_poly_terms(reductors.polys[i], reductors.polys[j], reductors.inverse_lc(i), reductors.inverse_lc(j))
        r = _reduce(ring, terms, reductors, lambda m: reductors.find(m, limit), record)
        state.statistics.pairs_processed += 1
        if r.is_zero:
            state.statistics.zero_reductions += 1
            continue
        if trace is not None:
            trace.record(TracePair(i, j, tuple(record)))
        state.insert(r)
    if trace is not None:
        trace.end_step()
    state.statistics.multi_reductions += 1
    state.check_budget()
    return state


def _prepare(F: Sequence[Polynomial], order: Optional[MonomialOrder]) -> Tuple[PolynomialRing, List[Polynomial]]:
    if not F:
        raise ValueError("empty generator set")
    ring = F[0].ring
    if any(f.ring != ring for f in F):
        raise ValueError("generators live in different rings")
    if order is not None and order != ring.order:
        ring = ring.with_order(order)
        F = [ring.convert(f) for f in F]
    if any(f.is_zero for f in F):
        raise ZeroPolynomial("zero polynomial among the generators")
    return ring, list(F)


def buchberger(
    F: Sequence[Polynomial],
    order: Optional[MonomialOrder] = None,
    trace: Optional[BasisTrace] = None,
    strategy: str = "normal",
    budget: Optional[ResourceBudget] = None,
) -> BasisState:
    """Groebner basis of <F> by multi-reduction steps; the result may contain redundant elements."""
    ring, F = _prepare(F, order)
    state = BasisState(ring, strategy, budget)
    start = time.perf_counter()
    for f in F:
        state.insert(f)
    while state.pairs:
        batch = state.pairs.select()
        multi_reduce(batch, state, trace)
        logger.debug(
            f"step {state.statistics.multi_reductions}: {len(batch)} pairs, "
            f"basis {len(state)}, pending {len(state.pairs)}"
        )
    state.statistics.elapsed_seconds = time.perf_counter() - start
    logger.info(
        f"Groebner basis: {len(state)} elements after {state.statistics.multi_reductions} multi-reductions "
        f"({state.statistics.pairs_processed} pairs, {state.statistics.zero_reductions} to zero)"
    )
    return state


def replay_trace(F: Sequence[Polynomial], trace: BasisTrace, budget: Optional[ResourceBudget] = None) -> BasisState:
    """Repeat a recorded computation on F, using exactly the recorded pairs and reductors.

    Raises TraceMismatch when a reduction cannot follow the recorded sequence or a
    recorded nonzero remainder vanishes.
    """
    ring, F = _prepare(F, None)
    state = BasisState(ring, budget=budget or ResourceBudget(max_pairs=10**9, max_basis_size=10**9), track_pairs=False)
    reductors = state._reductors
    start = time.perf_counter()
    for f in F:
        state.insert(f)
    for step_number, step in enumerate(trace.steps):
        first = len(state)
        for pair in step:
            if not (0 <= pair.i < pair.j < first):
                raise TraceMismatch(f"step {step_number}: pair ({pair.i}, {pair.j}) outside basis of size {first}")
            limit = len(state)
            sequence = pair.reductors
            position = 0

            def choose(m: Monomial) -> Optional[int]:
                nonlocal position
                if position < len(sequence) and monomial_divides(reductors.lms[sequence[position]], m):
                    position += 1
                    return sequence[position - 1]
                return None

            if any(not 0 <= k < limit for k in sequence):
                raise TraceMismatch(f"step {step_number}: reductor index outside basis of size {limit}")
            terms = _s_poly_terms(reductors.polys[pair.i], reductors.polys[pair.j], reductors.inverse_lc(pair.i), reductors.inverse_lc(pair.j))
            r = _reduce(ring, terms, reductors, choose)
            state.statistics.pairs_processed += 1
            if position != len(sequence):
                raise TraceMismatch(
                    f"step {step_number}: pair ({pair.i}, {pair.j}) used {position} of {len(sequence)} recorded reductors"
                )
            if r.is_zero:
                raise TraceMismatch(f"step {step_number}: pair ({pair.i}, {pair.j}) reduced to zero")
            state.insert(r)
        state.statistics.multi_reductions += 1
    state.statistics.elapsed_seconds = time.perf_counter() - start
    return state


def reduce_basis(G: Sequence[Polynomial]) -> List[Polynomial]:
    """Reduced Groebner basis from a Groebner basis: minimal, fully inter-reduced, monic, sorted by LM descending."""
    nonzero = [g for g in G if not g.is_zero]
    if not nonzero:
        return []
    ring = nonzero[0].ring
    minimal = []
    for index, g in enumerate(nonzero):
        lm = g.leading_monomial
        redundant = any(
            monomial_divides(h.leading_monomial, lm) and (h.leading_monomial != lm or other < index)
            for other, h in enumerate(nonzero)
            if other != index
        )
        if not redundant:
            minimal.append(g)
    reduced = []
    for index, g in enumerate(minimal):
        others = minimal[:index] + minimal[index + 1:]
        reduced.append(reduce_full(g, others).monic())
    reduced.sort(key=lambda p: ring.key(p.leading_monomial), reverse=True)
    return reduced


def naive_buchberger(F: Sequence[Polynomial], order: Optional[MonomialOrder] = None) -> List[Polynomial]:
    """Textbook Buchberger without criteria; kept as a reference for cross-checks."""
    ring, F = _prepare(F, order)
    reductors = _Reductors(ring)
    for f in F:
        reductors.add(f.monic())
    G = reductors.polys
    pending = deque((i, j) for j in range(len(G)) for i in range(j))
    while pending:
        i, j = pending.popleft()
        limit = len(G)
        terms = _s_poly_terms(G[i], G[j], reductors.inverse_lc(i), reductors.inverse_lc(j))
        r = _reduce(ring, terms, reductors, lambda m: reductors.find(m, limit))
        if not r.is_zero:
            reductors.add(r.monic())
            pending.extend((k, len(G) - 1) for k in range(len(G) - 1))
    return list(G)


def is_groebner(G: Sequence[Polynomial]) -> bool:
    """Buchberger criterion: every S-polynomial reduces to zero."""
    G = [g for g in G if not g.is_zero]
    for j in range(len(G)):
        for i in range(j):
            if not reduce_full(s_polynomial(G[i], G[j]), G).is_zero:
                return False
    return True
