"""Parity-split 3x+1 dynamics, analyzed exactly.

The transition relation comes in two variants over any ring: "raw" (halve, or
send an odd element to three times it plus one) and "accelerated" (the odd
branch folds in the following halving).  A periodic orbit commits to a parity
vector, one bit per step.  Composing the affine step maps along a vector gives
2^d * x = a * x + c, so the orbit through x0 = c / (2^d - a) is the unique
candidate, an exact rational with odd denominator.  Cycles whose values pick
up a nontrivial denominator exist in the localization at 2 but not in the
integers; bridging pushes them onto the quotients mod 2^N, where they become
honest finite orbits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .formulas import PEFormula, parse_formula
from .rings import (
    LocalRing,
    ModRing,
    Ring,
    RingElement,
    RingError,
    coherent_reduce,
)
from .dynamics import ADS, CycleWitness, DynamicsError, make_ads

RAW = "raw"
ACCELERATED = "accelerated"
VARIANTS = (RAW, ACCELERATED)

_TAU_TEXT = {
    RAW: "(exists y. x = 2*y and x' = y)"
         " or (exists y. x = 2*y + 1 and x' = 3*(2*y + 1) + 1)",
    ACCELERATED: "(exists y. x = 2*y and x' = y)"
                 " or (exists y. x = 2*y + 1 and 2*x' = 3*(2*y + 1) + 1)",
}


def _check_variant(variant: str):
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def collatz_tau(variant: str = RAW) -> PEFormula:
    _check_variant(variant)
    return parse_formula(_TAU_TEXT[variant])


def collatz_system(ring: Ring, variant: str = RAW, sigma=None) -> ADS:
    """The parity-split system over a ring; state variable x, next-state x'."""
    return make_ads(ring, collatz_tau(variant), sigma=sigma, arity=1,
                    state_vars=("x",), next_vars=("x'",))


def cycle_window_sigma(max_halvings: int = 3) -> PEFormula:
    """Domain constraint "x divides 2^max_halvings": keeps elements whose even
    part is bounded, which excludes 0 (and the tail of deep halvings) wherever
    2^max_halvings is a nonzero element.  Restricting a cycle hunt to this
    window removes the fixed point at 0 without leaving the fragment."""
    if max_halvings < 0:
        raise ValueError("max_halvings must be nonnegative")
    return parse_formula(f"exists u. x*u = {2 ** max_halvings}")


# --- parity vectors ----------------------------------------------------------

@dataclass(frozen=True)
class ParityVector:
    """One bit per step of a would-be cycle: 0 halves, 1 takes the odd branch."""

    bits: tuple

    def __post_init__(self):
        if not self.bits:
            raise ValueError("parity vector must be nonempty")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"parity vector bits must be 0 or 1, got {self.bits!r}")

    @property
    def k(self) -> int:
        return len(self.bits)

    def __str__(self):
        return "".join(str(b) for b in self.bits)

    def rotations(self):
        return [ParityVector(self.bits[i:] + self.bits[:i]) for i in range(self.k)]

    def canonical(self) -> "ParityVector":
        return ParityVector(min(r.bits for r in self.rotations()))

    def admissible(self, variant: str = RAW) -> bool:
        """The raw odd branch lands on 3(2y+1)+1, which is even, so a raw
        cycle can never take odd steps back to back (cyclically; a length-1
        vector is its own neighbor).  The accelerated variant has no such
        constraint."""
        _check_variant(variant)
        if variant == ACCELERATED:
            return True
        k = len(self.bits)
        return not any(self.bits[i] and self.bits[(i + 1) % k] for i in range(k))


def parse_parity_vector(text: str) -> ParityVector:
    if not text or any(ch not in "01" for ch in text):
        raise ValueError(f"parity vector must be a nonempty string of 0s and 1s, got {text!r}")
    return ParityVector(tuple(int(ch) for ch in text))


def admissible_parity_vectors(k: int, variant: str = RAW) -> list:
    if k < 1:
        raise ValueError("k must be at least 1")
    out = []
    for bits in itertools.product((0, 1), repeat=k):
        v = ParityVector(bits)
        if v.admissible(variant):
            out.append(v)
    return out


# --- exact cycle analysis ------------------------------------------------------

@dataclass(frozen=True)
class AffineComposite:
    """Composite of the step maps along a vector: 2^d * x_k = a * x_0 + c."""

    a: int
    c: int
    d: int


def affine_composite(vector: ParityVector, variant: str = RAW) -> AffineComposite:
    _check_variant(variant)
    if not vector.admissible(variant):
        raise ValueError(f"inadmissible vector {vector}")
    a, c, d = 1, 0, 0
    for bit in vector.bits:
        if bit == 0:
            d += 1
        else:
            a, c = 3 * a, 3 * c + 2 ** d
            if variant == ACCELERATED:
                d += 1
    return AffineComposite(a, c, d)


def step_exact(x: Fraction, variant: str = RAW) -> Fraction:
    """One exact step; parity of a fraction with odd denominator is the parity
    of its numerator."""
    _check_variant(variant)
    x = Fraction(x)
    if x.denominator % 2 == 0:
        raise ValueError(f"{x} has even denominator; parity is undefined")
    if x.numerator % 2 == 0:
        return x / 2
    if variant == ACCELERATED:
        return (3 * x + 1) / 2
    return 3 * x + 1


@dataclass(frozen=True)
class PeriodicPoint:
    """A parity vector together with its unique exact periodic orbit."""

    vector: ParityVector
    variant: str
    fold: AffineComposite
    value: Fraction  # the orbit start x0
    orbit: tuple     # k Fractions, parity-consistent with the vector
    ghost: bool      # some orbit value has denominator > 1

    @property
    def kind(self) -> str:
        return "ghost" if self.ghost else "integer"


@dataclass(frozen=True)
class Rejection:
    vector: ParityVector
    variant: str
    reason: str


def cycle_from_parity_vector(vector: Union[ParityVector, str, Sequence],
                             variant: str = RAW):
    """Solve for the periodic orbit committed to the vector.

    Returns a PeriodicPoint, or a Rejection naming the obstruction: an
    inadmissible vector, a degenerate linear system, or an orbit whose actual
    parities disagree with the vector (checked element by element)."""
    if isinstance(vector, str):
        vector = parse_parity_vector(vector)
    elif not isinstance(vector, ParityVector):
        vector = ParityVector(tuple(vector))
    _check_variant(variant)

    if not vector.admissible(variant):
        return Rejection(vector, variant, "adjacent odd steps cannot close a cycle")
    fold = affine_composite(vector, variant)
    den = 2 ** fold.d - fold.a
    if den == 0:
        return Rejection(vector, variant, "degenerate: 2^d equals a")
    x0 = Fraction(fold.c, den)
    if x0.denominator % 2 == 0:
        return Rejection(vector, variant, "start value has even denominator")

    orbit = []
    x = x0
    for i, bit in enumerate(vector.bits):
        if x.numerator % 2 != bit:
            return Rejection(vector, variant, f"parity mismatch at step {i}")
        orbit.append(x)
        x = step_exact(x, variant)
    if x != x0:
        return Rejection(vector, variant, "orbit does not close")

    ghost = any(e.denominator > 1 for e in orbit)
    return PeriodicPoint(vector, variant, fold, x0, tuple(orbit), ghost)


# --- the census ------------------------------------------------------------------

@dataclass(frozen=True)
class Census:
    """All length-k periodic orbits, one representative per rotation class."""

    k: int
    variant: str
    admissible_count: int
    points: tuple      # PeriodicPoint per class, canonical vectors in order
    rejections: tuple  # classes that failed the exact solve (normally empty)

    @property
    def integer_points(self) -> tuple:
        return tuple(p for p in self.points if not p.ghost)

    @property
    def ghost_points(self) -> tuple:
        return tuple(p for p in self.points if p.ghost)


def census_row(k: int, variant: str = RAW) -> Census:
    """The length-k row: solve every rotation class of admissible vectors."""
    vectors = admissible_parity_vectors(k, variant)
    classes = sorted({v.canonical().bits for v in vectors})
    points = []
    rejections = []
    for bits in classes:
        result = cycle_from_parity_vector(ParityVector(bits), variant)
        if isinstance(result, PeriodicPoint):
            points.append(result)
        else:
            rejections.append(result)
    return Census(k, variant, len(vectors), tuple(points), tuple(rejections))


def ghost_census(k_max: int, variant: str = RAW) -> tuple:
    """Census rows for every cycle length from 1 through k_max."""
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    return tuple(census_row(k, variant) for k in range(1, k_max + 1))


# --- bridging into quotients -------------------------------------------------------

def bridge_to_quotient(point: PeriodicPoint, precision: int) -> CycleWitness:
    """Push an exact orbit into Z/2^precision along a/b -> a * b^(-1).  Ghost
    or not, the image is a genuine orbit of the same system over the quotient
    (re-verified relationally before returning), and the images at successive
    precisions are coherent under projection."""
    source = LocalRing(2)
    quotient = ModRing(2 ** precision)
    states = tuple((coherent_reduce(source.element(value), precision),)
                   for value in point.orbit)
    witness = CycleWitness(states)
    if not witness.verify(collatz_system(quotient, point.variant)):
        raise DynamicsError(f"internal: bridged orbit {witness.values()!r} "
                            f"failed relational verification over {quotient}")
    return witness


# --- single-vector sentences ----------------------------------------------------------

def vector_cycle_sentence(vector: Union[ParityVector, str],
                          variant: str = RAW) -> PEFormula:
    """Closed sentence: a cycle exists that follows exactly this parity vector.
    One disjunct only: cycle copies x0..x{k-1}, plus a y{i} witnessing oddness
    at each odd step.  Mirrors the transition branch shapes equation for
    equation."""
    if isinstance(vector, str):
        vector = parse_parity_vector(vector)
    _check_variant(variant)
    k = vector.k
    parts = []
    binders = [f"x{i}" for i in range(k)]
    for i, bit in enumerate(vector.bits):
        j = (i + 1) % k
        if bit == 0:
            parts.append(f"x{i} = 2*x{j}")
        elif variant == RAW:
            parts.append(f"x{i} = 2*y{i} + 1 and x{j} = 3*(2*y{i} + 1) + 1")
            binders.append(f"y{i}")
        else:
            parts.append(f"x{i} = 2*y{i} + 1 and 2*x{j} = 3*(2*y{i} + 1) + 1")
            binders.append(f"y{i}")
    text = f"exists {', '.join(binders)}. {' and '.join(parts)}"
    return parse_formula(text)


def vector_cycle_witness(point: PeriodicPoint, ring: Ring) -> dict:
    """Prefix witness for vector_cycle_sentence(point.vector): the orbit values
    plus the oddness witnesses (x-1)/2, coerced into the ring."""
    out = {}
    for i, value in enumerate(point.orbit):
        out[f"x{i}"] = _element_from_fraction(ring, value)
    for i, bit in enumerate(point.vector.bits):
        if bit == 1:
            out[f"y{i}"] = _element_from_fraction(ring, (point.orbit[i] - 1) / 2)
    return out


def _element_from_fraction(ring: Ring, value: Fraction) -> RingElement:
    if isinstance(ring, LocalRing):
        return ring.element(value)
    if value.denominator == 1:
        return ring.element(int(value))
    if isinstance(ring, ModRing):
        try:
            inv = pow(value.denominator, -1, ring.modulus)
        except ValueError:
            raise RingError(f"{value} has no image in {ring}") from None
        return ring.element(value.numerator * inv)
    raise RingError(f"{value} is not an element of {ring}")
