"""Ring backends, elements, and the homomorphisms between them.

Four commutative rings with unity: the integers, integers mod n, the
localization of the integers at a prime p (fractions with denominator coprime
to p, kept in lowest terms via fractions.Fraction), and binary products of
finite rings.  All integer arithmetic is arbitrary precision.

Homomorphisms are first-class values with source and target handles; apply_hom
refuses elements of the wrong ring, and check_hom_laws spot-checks the ring
laws on caller-supplied samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping

from .formulas import Add, Mul, Neg, One, Term, Var, Zero


class RingError(ValueError):
    """Bad ring construction, cross-ring arithmetic, or invalid element."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


# --- ring handles -------------------------------------------------------


class Ring:
    """Shared interface: payload-level arithmetic plus element helpers."""

    __slots__ = ()

    cardinality: int | None = None

    def element(self, value) -> "RingElement":
        return RingElement(self, self.coerce(value))

    def zero(self) -> "RingElement":
        return self.element(0)

    def one(self) -> "RingElement":
        return self.element(1)

    def enumerate_elements(self) -> Iterator["RingElement"]:
        if self.cardinality is None:
            raise RingError("infinite ring")
        for payload in self.enumerate_payloads():
            yield RingElement(self, payload)

    # subclasses: coerce, add, mul, neg, enumerate_payloads, sort_key, format_payload


@dataclass(frozen=True)
class IntegerRing(Ring):
    cardinality = None

    def __str__(self):
        return "Z"

    def coerce(self, value):
        if isinstance(value, bool) or not isinstance(value, int):
            raise RingError(f"not an integer: {value!r}")
        return value

    def add(self, a, b):
        return a + b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def enumerate_payloads(self):
        raise RingError("infinite ring")

    def sort_key(self, a):
        return (abs(a), a)

    def format_payload(self, a) -> str:
        return str(a)


@dataclass(frozen=True)
class ModRing(Ring):
    modulus: int

    def __post_init__(self):
        if not isinstance(self.modulus, int) or self.modulus < 2:
            raise RingError(f"modulus must be an integer >= 2, got {self.modulus!r}")

    @property
    def cardinality(self):
        return self.modulus

    def __str__(self):
        return f"Z/{self.modulus}"

    def coerce(self, value):
        if isinstance(value, bool) or not isinstance(value, int):
            raise RingError(f"not an integer: {value!r}")
        return value % self.modulus

    def add(self, a, b):
        return (a + b) % self.modulus

    def mul(self, a, b):
        return (a * b) % self.modulus

    def neg(self, a):
        return (-a) % self.modulus

    def enumerate_payloads(self):
        return iter(range(self.modulus))

    def sort_key(self, a):
        return a

    def format_payload(self, a) -> str:
        return str(a)


@dataclass(frozen=True)
class LocalRing(Ring):
    """Integers localized at the prime p: fractions a/b in lowest terms, p not
    dividing b.  Closed under +, *, - because denominators of sums and products
    divide the product of the operand denominators."""

    prime: int

    cardinality = None

    def __post_init__(self):
        if not _is_prime(self.prime):
            raise RingError(f"localization needs a prime, got {self.prime!r}")

    def __str__(self):
        return f"Zloc/{self.prime}"

    def coerce(self, value):
        if isinstance(value, bool):
            raise RingError(f"not a rational: {value!r}")
        if isinstance(value, int):
            value = Fraction(value)
        if not isinstance(value, Fraction):
            raise RingError(f"not a rational: {value!r}")
        if value.denominator % self.prime == 0:
            raise RingError(
                f"{value} has denominator divisible by {self.prime}; "
                "not in the localization"
            )
        return value

    def _check(self, a: Fraction) -> Fraction:
        # Fraction keeps lowest terms; the localization condition is the part
        # that needs an explicit guard after arithmetic.
        assert a.denominator % self.prime != 0
        return a

    def add(self, a, b):
        return self._check(a + b)

    def mul(self, a, b):
        return self._check(a * b)

    def neg(self, a):
        return -a

    def enumerate_payloads(self):
        raise RingError("infinite ring")

    def sort_key(self, a: Fraction):
        return (max(abs(a.numerator), a.denominator), a.numerator, a.denominator)

    def format_payload(self, a: Fraction) -> str:
        return str(a)


@dataclass(frozen=True)
class ProductRing(Ring):
    """Binary product of two finite rings, componentwise operations."""

    left: Ring
    right: Ring

    def __post_init__(self):
        if self.left.cardinality is None or self.right.cardinality is None:
            raise RingError("product components must be finite rings")

    @property
    def cardinality(self):
        return self.left.cardinality * self.right.cardinality

    def __str__(self):
        return f"{self.left}x{self.right}"

    def coerce(self, value):
        if isinstance(value, int):
            return (self.left.coerce(value), self.right.coerce(value))
        if isinstance(value, tuple) and len(value) == 2:
            a, b = value
            if isinstance(a, RingElement):
                if a.ring != self.left:
                    raise RingError(f"left component {a!r} not in {self.left}")
                a = a.value
            else:
                a = self.left.coerce(a)
            if isinstance(b, RingElement):
                if b.ring != self.right:
                    raise RingError(f"right component {b!r} not in {self.right}")
                b = b.value
            else:
                b = self.right.coerce(b)
            return (a, b)
        raise RingError(f"not a pair: {value!r}")

    def add(self, a, b):
        return (self.left.add(a[0], b[0]), self.right.add(a[1], b[1]))

    def mul(self, a, b):
        return (self.left.mul(a[0], b[0]), self.right.mul(a[1], b[1]))

    def neg(self, a):
        return (self.left.neg(a[0]), self.right.neg(a[1]))

    def enumerate_payloads(self):
        for a in self.left.enumerate_payloads():
            for b in self.right.enumerate_payloads():
                yield (a, b)

    def sort_key(self, a):
        return (self.left.sort_key(a[0]), self.right.sort_key(a[1]))

    def format_payload(self, a) -> str:
        return f"({self.left.format_payload(a[0])},{self.right.format_payload(a[1])})"


INTEGERS = IntegerRing()


# --- elements ------------------------------------------------------------


@dataclass(frozen=True)
class RingElement:
    ring: Ring
    value: object

    def _binop(self, other, op):
        if not isinstance(other, RingElement):
            return NotImplemented
        if other.ring != self.ring:
            raise RingError(f"mixed-ring arithmetic: {self.ring} vs {other.ring}")
        return RingElement(self.ring, op(self.value, other.value))

    def __add__(self, other):
        return self._binop(other, self.ring.add)

    def __mul__(self, other):
        return self._binop(other, self.ring.mul)

    def __neg__(self):
        return RingElement(self.ring, self.ring.neg(self.value))

    def __sub__(self, other):
        if not isinstance(other, RingElement):
            return NotImplemented
        return self + (-other)

    def __str__(self):
        return self.ring.format_payload(self.value)

    def sort_key(self):
        return self.ring.sort_key(self.value)


def eval_term(ring: Ring, term: Term, env: Mapping[str, RingElement]) -> RingElement:
    """Interpret a term in ring under env; every variable must be assigned."""
    return RingElement(ring, eval_term_payload(ring, term, env))


def eval_term_payload(ring: Ring, term: Term, env: Mapping[str, RingElement]):
    if isinstance(term, Zero):
        return ring.coerce(0)
    if isinstance(term, One):
        return ring.coerce(1)
    if isinstance(term, Var):
        try:
            el = env[term.name]
        except KeyError:
            raise RingError(f"unbound variable {term.name!r}") from None
        if isinstance(el, RingElement):
            if el.ring != ring:
                raise RingError(f"{term.name!r} holds an element of {el.ring}, not {ring}")
            return el.value
        return ring.coerce(el)
    if isinstance(term, Neg):
        return ring.neg(eval_term_payload(ring, term.child, env))
    if isinstance(term, Add):
        return ring.add(eval_term_payload(ring, term.left, env),
                        eval_term_payload(ring, term.right, env))
    if isinstance(term, Mul):
        return ring.mul(eval_term_payload(ring, term.left, env),
                        eval_term_payload(ring, term.right, env))
    raise RingError(f"not a term: {term!r}")


# --- homomorphisms -------------------------------------------------------


class Homomorphism:
    """Base: a unital ring map with explicit source and target handles."""

    __slots__ = ()

    def apply(self, x: RingElement) -> RingElement:
        if not isinstance(x, RingElement) or x.ring != self.source:
            raise RingError(f"{x!r} is not an element of {self.source}")
        return self.target.element(self._map(x.value))


@dataclass(frozen=True)
class IdentityMap(Homomorphism):
    ring: Ring

    @property
    def source(self):
        return self.ring

    @property
    def target(self):
        return self.ring

    def __str__(self):
        return f"id on {self.ring}"

    def _map(self, v):
        return v


@dataclass(frozen=True)
class ModReduction(Homomorphism):
    """Z -> Z/n, the canonical quotient."""

    modulus: int

    def __post_init__(self):
        ModRing(self.modulus)  # validates

    @property
    def source(self):
        return INTEGERS

    @property
    def target(self):
        return ModRing(self.modulus)

    def __str__(self):
        return f"Z -> Z/{self.modulus}"

    def _map(self, v):
        return v % self.modulus


@dataclass(frozen=True)
class LocalInclusion(Homomorphism):
    """Z -> Zloc/p, n maps to n/1."""

    prime: int

    def __post_init__(self):
        LocalRing(self.prime)  # validates

    @property
    def source(self):
        return INTEGERS

    @property
    def target(self):
        return LocalRing(self.prime)

    def __str__(self):
        return f"Z -> Zloc/{self.prime}"

    def _map(self, v):
        return Fraction(v)


@dataclass(frozen=True)
class LocalToModPower(Homomorphism):
    """Zloc/p -> Z/p^N: a/b maps to a * b^(-1) mod p^N.

    Well-defined because b is coprime to p, hence invertible mod p^N."""

    prime: int
    exponent: int

    def __post_init__(self):
        LocalRing(self.prime)
        if not isinstance(self.exponent, int) or self.exponent < 1:
            raise RingError(f"exponent must be a positive integer, got {self.exponent!r}")

    @property
    def source(self):
        return LocalRing(self.prime)

    @property
    def target(self):
        return ModRing(self.prime ** self.exponent)

    def __str__(self):
        return f"Zloc/{self.prime} -> Z/{self.prime ** self.exponent}"

    def _map(self, v: Fraction):
        n = self.prime ** self.exponent
        return v.numerator * pow(v.denominator, -1, n) % n


@dataclass(frozen=True)
class QuotientProjection(Homomorphism):
    """Z/m -> Z/n for n dividing m."""

    source_modulus: int
    target_modulus: int

    def __post_init__(self):
        ModRing(self.source_modulus)
        ModRing(self.target_modulus)
        if self.source_modulus % self.target_modulus != 0:
            raise RingError(
                f"no projection Z/{self.source_modulus} -> Z/{self.target_modulus}: "
                "target modulus must divide source modulus"
            )

    @property
    def source(self):
        return ModRing(self.source_modulus)

    @property
    def target(self):
        return ModRing(self.target_modulus)

    def __str__(self):
        return f"Z/{self.source_modulus} -> Z/{self.target_modulus}"

    def _map(self, v):
        return v % self.target_modulus


@dataclass(frozen=True)
class PairMap(Homomorphism):
    """Pairing <h1, h2>: shared source, target the product of the two targets."""

    first: Homomorphism
    second: Homomorphism

    def __post_init__(self):
        if self.first.source != self.second.source:
            raise RingError("paired maps must share a source ring")

    @property
    def source(self):
        return self.first.source

    @property
    def target(self):
        return ProductRing(self.first.target, self.second.target)

    def __str__(self):
        return f"<{self.first}, {self.second}>"

    def _map(self, v):
        x = RingElement(self.source, v)
        return (self.first.apply(x).value, self.second.apply(x).value)


@dataclass(frozen=True)
class Composition(Homomorphism):
    outer: Homomorphism
    inner: Homomorphism

    def __post_init__(self):
        if self.inner.target != self.outer.source:
            raise RingError(
                f"cannot compose: inner target {self.inner.target} != "
                f"outer source {self.outer.source}"
            )

    @property
    def source(self):
        return self.inner.source

    @property
    def target(self):
        return self.outer.target

    def __str__(self):
        return f"({self.outer}) after ({self.inner})"

    def _map(self, v):
        return self.outer.apply(self.inner.apply(RingElement(self.source, v))).value


def apply_hom(h: Homomorphism, x: RingElement) -> RingElement:
    return h.apply(x)


@dataclass(frozen=True)
class HomCheckResult:
    passed: bool
    failure: str | None = None
    counterexample: tuple | None = None


def check_hom_laws(h, samples) -> HomCheckResult:
    """Check h(0)=0, h(1)=1, and additivity/multiplicativity/negation on the
    sample pairs.  h only needs source, target, and apply (duck-typed so test
    fixtures can supply deliberately broken maps)."""
    src, tgt = h.source, h.target
    if h.apply(src.zero()) != tgt.zero():
        return HomCheckResult(False, "h(0) != 0", (src.zero(),))
    if h.apply(src.one()) != tgt.one():
        return HomCheckResult(False, "h(1) != 1", (src.one(),))
    for a, b in samples:
        if h.apply(a + b) != h.apply(a) + h.apply(b):
            return HomCheckResult(False, "h(a+b) != h(a)+h(b)", (a, b))
        if h.apply(a * b) != h.apply(a) * h.apply(b):
            return HomCheckResult(False, "h(a*b) != h(a)*h(b)", (a, b))
        if h.apply(-a) != -h.apply(a):
            return HomCheckResult(False, "h(-a) != -h(a)", (a, b))
    return HomCheckResult(True)


def coherent_reduce(x: RingElement, exponent: int) -> RingElement:
    """Reduce an element of Zloc/p to Z/p^exponent.

    Coherence: reducing at exponent N then projecting to N-1 equals reducing
    at N-1 directly (the maps commute with the quotient tower)."""
    if not isinstance(x.ring, LocalRing):
        raise RingError(f"coherent_reduce needs a localization element, got {x.ring}")
    return LocalToModPower(x.ring.prime, exponent).apply(x)


# --- parsing of command-line ring / hom names ----------------------------


def ring_from_string(text: str) -> Ring:
    """Ring names: "Z", "Z/12", "Zloc/2", and binary products like "Z/4xZ/9"."""
    text = text.strip()
    if "x" in text:
        left, _, right = text.partition("x")
        return ProductRing(ring_from_string(left), ring_from_string(right))
    if text == "Z":
        return INTEGERS
    if text.startswith("Zloc/"):
        return LocalRing(int(text[len("Zloc/"):]))
    if text.startswith("Z/"):
        return ModRing(int(text[len("Z/"):]))
    raise RingError(f"unknown ring {text!r}")


def hom_from_string(text: str) -> Homomorphism:
    """Hom names: "mod:12", "loc:2", "loc2->mod:64", "proj:12->4", "id"."""
    text = text.strip()
    if text == "id":
        return IdentityMap(INTEGERS)
    if text.startswith("mod:"):
        return ModReduction(int(text[len("mod:"):]))
    if text.startswith("loc") and "->mod:" in text:
        head, _, tail = text.partition("->mod:")
        p = int(head[len("loc"):])
        n = int(tail)
        exponent = 0
        m = n
        while m % p == 0 and m > 1:
            m //= p
            exponent += 1
        if m != 1 or exponent < 1:
            raise RingError(f"{n} is not a positive power of {p}")
        return LocalToModPower(p, exponent)
    if text.startswith("loc:"):
        return LocalInclusion(int(text[len("loc:"):]))
    if text.startswith("proj:") and "->" in text:
        body = text[len("proj:"):]
        m, _, n = body.partition("->")
        return QuotientProjection(int(m), int(n))
    raise RingError(f"unknown homomorphism {text!r}")
