"""Positive existential formulas over commutative rings with unity.

Terms are built from 0, 1, variables, negation, sums, and products; formulas
from polynomial equations, finite conjunction and disjunction, and existential
quantification.  There is no negation connective and no universal quantifier,
and none can be constructed: the fragment restriction is structural, so every
formula in this module transports along ring homomorphisms.

The module provides a concrete syntax (recursive-descent parser and a printer
that round-trips), plus a prefix disjunctive normal form used by the search
code: all binders pulled to a single renamed-apart prefix, matrix distributed
into a list of disjuncts, each a list of equations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*'*\Z")

DEFAULT_MAX_MATRIX_EQUATIONS = 10_000


class FormulaError(ValueError):
    """Violation of a structural invariant (bad name, shadowed binder, size)."""


class ParseError(FormulaError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


# --- terms -------------------------------------------------------------

class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Zero(Term):
    def __repr__(self):
        return "Zero()"


@dataclass(frozen=True)
class One(Term):
    def __repr__(self):
        return "One()"


@dataclass(frozen=True)
class Var(Term):
    name: str

    def __post_init__(self):
        if not IDENT_RE.match(self.name):
            raise FormulaError(f"invalid variable name {self.name!r}")


@dataclass(frozen=True)
class Neg(Term):
    child: Term


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mul(Term):
    left: Term
    right: Term


ZERO = Zero()
ONE = One()


def int_term(n: int) -> Term:
    """Elaborate an integer literal into the core signature: +/-(1+1+...+1)."""
    if n == 0:
        return ZERO
    if n < 0:
        return Neg(int_term(-n))
    t: Term = ONE
    for _ in range(n - 1):
        t = Add(t, ONE)
    return t


def sub_term(a: Term, b: Term) -> Term:
    """Elaborate binary subtraction: a - b is sugar for a + (-b)."""
    return Add(a, Neg(b))


def term_vars(t: Term) -> Iterator[str]:
    """Variable names in t, in occurrence order, with repeats."""
    if isinstance(t, Var):
        yield t.name
    elif isinstance(t, Neg):
        yield from term_vars(t.child)
    elif isinstance(t, (Add, Mul)):
        yield from term_vars(t.left)
        yield from term_vars(t.right)


def rename_term(t: Term, mapping: Mapping[str, str]) -> Term:
    if isinstance(t, Var):
        new = mapping.get(t.name)
        return Var(new) if new is not None else t
    if isinstance(t, Neg):
        return Neg(rename_term(t.child, mapping))
    if isinstance(t, Add):
        return Add(rename_term(t.left, mapping), rename_term(t.right, mapping))
    if isinstance(t, Mul):
        return Mul(rename_term(t.left, mapping), rename_term(t.right, mapping))
    return t


# --- formulas ----------------------------------------------------------

class PEFormula:
    __slots__ = ()


@dataclass(frozen=True)
class Eq(PEFormula):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class And(PEFormula):
    children: tuple

    def __post_init__(self):
        _check_children(self.children, "And")


@dataclass(frozen=True)
class Or(PEFormula):
    children: tuple

    def __post_init__(self):
        _check_children(self.children, "Or")


@dataclass(frozen=True)
class Exists(PEFormula):
    bound: tuple
    body: PEFormula

    def __post_init__(self):
        if not self.bound:
            raise FormulaError("Exists needs at least one bound variable")
        seen = set()
        for name in self.bound:
            if not isinstance(name, str) or not IDENT_RE.match(name):
                raise FormulaError(f"invalid bound variable name {name!r}")
            if name in seen:
                raise FormulaError(f"duplicate bound variable {name!r}")
            seen.add(name)
        if not isinstance(self.body, PEFormula):
            raise FormulaError("Exists body must be a formula")
        inner = bound_names(self.body)
        clash = seen & inner
        if clash:
            raise FormulaError(
                f"binder {sorted(clash)[0]!r} would shadow a binder in its scope"
            )


def _check_children(children, tag):
    if not isinstance(children, tuple) or len(children) < 1:
        raise FormulaError(f"{tag} needs a nonempty tuple of children")
    for ch in children:
        if not isinstance(ch, PEFormula):
            raise FormulaError(f"{tag} child {ch!r} is not a formula")


Formula = Union[Eq, And, Or, Exists]


def bound_names(f: PEFormula) -> frozenset:
    """Every name bound by some Exists anywhere inside f."""
    if isinstance(f, Eq):
        return frozenset()
    if isinstance(f, (And, Or)):
        out = frozenset()
        for ch in f.children:
            out |= bound_names(ch)
        return out
    if isinstance(f, Exists):
        return frozenset(f.bound) | bound_names(f.body)
    raise FormulaError(f"not a formula: {f!r}")


def free_vars(f: PEFormula) -> tuple:
    """Free variable names in first-occurrence order."""
    out: list = []
    seen: set = set()

    def walk(g: PEFormula, scope: frozenset):
        if isinstance(g, Eq):
            for name in term_vars(g.lhs):
                if name not in scope and name not in seen:
                    seen.add(name)
                    out.append(name)
            for name in term_vars(g.rhs):
                if name not in scope and name not in seen:
                    seen.add(name)
                    out.append(name)
        elif isinstance(g, (And, Or)):
            for ch in g.children:
                walk(ch, scope)
        elif isinstance(g, Exists):
            walk(g.body, scope | frozenset(g.bound))
        else:
            raise FormulaError(f"not a formula: {g!r}")

    walk(f, frozenset())
    return tuple(out)


def all_names(f: PEFormula) -> set:
    """Every variable name occurring in f, free or bound."""
    names: set = set()

    def walk(g: PEFormula):
        if isinstance(g, Eq):
            names.update(term_vars(g.lhs))
            names.update(term_vars(g.rhs))
        elif isinstance(g, (And, Or)):
            for ch in g.children:
                walk(ch)
        else:
            names.update(g.bound)
            walk(g.body)

    walk(f)
    return names


def substitute_free(f: PEFormula, mapping: Mapping[str, str]) -> PEFormula:
    """Rename free variables of f.  Target names must not be bound anywhere in f
    (callers substitute fresh names), which rules out capture by construction."""
    binders = bound_names(f)
    for target in mapping.values():
        if target in binders:
            raise FormulaError(f"substitution target {target!r} is bound in the formula")

    def walk(g: PEFormula, shadowed: frozenset) -> PEFormula:
        if isinstance(g, Eq):
            live = {k: v for k, v in mapping.items() if k not in shadowed}
            return Eq(rename_term(g.lhs, live), rename_term(g.rhs, live))
        if isinstance(g, And):
            return And(tuple(walk(ch, shadowed) for ch in g.children))
        if isinstance(g, Or):
            return Or(tuple(walk(ch, shadowed) for ch in g.children))
        return Exists(g.bound, walk(g.body, shadowed | frozenset(g.bound)))

    return walk(f, frozenset())


# --- parser ------------------------------------------------------------

_KEYWORDS = {"exists", "and", "or", "not", "forall"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*'*)
  | (?P<sym>[()=+\-*,.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "int" | "ident" | "kw" | "sym" | "eof"
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list:
    tokens = []
    line, linestart = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - linestart + 1)
        kind = m.lastgroup
        value = m.group()
        col = pos - linestart + 1
        if kind == "nl":
            line += 1
            linestart = m.end()
        elif kind == "int":
            tokens.append(_Token("int", value, line, col))
        elif kind == "ident":
            if value in _KEYWORDS:
                tokens.append(_Token("kw", value, line, col))
            else:
                tokens.append(_Token("ident", value, line, col))
        elif kind == "sym":
            tokens.append(_Token("sym", value, line, col))
        pos = m.end()
    tokens.append(_Token("eof", "", line, len(text) - linestart + 1))
    return tokens


class _Parser:
    """Recursive descent over the concrete grammar.

    formula := "exists" ident ("," ident)* "." formula | disj
    disj    := conj ("or" conj)*
    conj    := atom ("and" atom)*
    atom    := term "=" term | "(" formula ")"
    term    := term "+" factor | term "-" factor | factor
    factor  := factor "*" unary | unary
    unary   := "-" unary | primary
    primary := int | ident | "(" term ")"
    """

    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, text: str = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.column)
        return self.next()

    def at_sym(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "sym" and tok.text == text

    def at_kw(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "kw" and tok.text == text

    # formulas

    def formula(self) -> PEFormula:
        tok = self.peek()
        if tok.kind == "kw" and tok.text == "forall":
            raise ParseError("universal quantification not allowed in this fragment",
                             tok.line, tok.column)
        if self.at_kw("exists"):
            self.next()
            names = [self.expect("ident").text]
            while self.at_sym(","):
                self.next()
                names.append(self.expect("ident").text)
            self.expect("sym", ".")
            body = self.formula()
            try:
                return Exists(tuple(names), body)
            except FormulaError as exc:
                raise ParseError(str(exc), tok.line, tok.column) from exc
        return self.disj()

    def disj(self) -> PEFormula:
        parts = [self.conj()]
        while self.at_kw("or"):
            self.next()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conj(self) -> PEFormula:
        parts = [self.atom()]
        while self.at_kw("and"):
            self.next()
            parts.append(self.atom())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def atom(self) -> PEFormula:
        tok = self.peek()
        if tok.kind == "kw" and tok.text == "not":
            raise ParseError("negation not allowed in this fragment", tok.line, tok.column)
        if tok.kind == "kw" and tok.text == "forall":
            raise ParseError("universal quantification not allowed in this fragment",
                             tok.line, tok.column)
        # "(" may open either a parenthesized subformula or a parenthesized
        # term; try the equation reading first and backtrack.
        if self.at_sym("("):
            mark = self.pos
            try:
                lhs = self.term()
                self.expect("sym", "=")
                rhs = self.term()
                return Eq(lhs, rhs)
            except ParseError:
                self.pos = mark
            self.expect("sym", "(")
            inner = self.formula()
            self.expect("sym", ")")
            return inner
        lhs = self.term()
        self.expect("sym", "=")
        rhs = self.term()
        return Eq(lhs, rhs)

    # terms

    def term(self) -> Term:
        t = self.factor()
        while self.at_sym("+") or self.at_sym("-"):
            op = self.next().text
            rhs = self.factor()
            t = Add(t, rhs) if op == "+" else Add(t, Neg(rhs))
        return t

    def factor(self) -> Term:
        t = self.unary()
        while self.at_sym("*"):
            self.next()
            t = Mul(t, self.unary())
        return t

    def unary(self) -> Term:
        if self.at_sym("-"):
            self.next()
            return Neg(self.unary())
        return self.primary()

    def primary(self) -> Term:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return int_term(int(tok.text))
        if tok.kind == "ident":
            self.next()
            return Var(tok.text)
        if self.at_sym("("):
            self.next()
            t = self.term()
            self.expect("sym", ")")
            return t
        raise ParseError(f"expected a term, found {tok.text or 'end of input'!r}",
                         tok.line, tok.column)


def parse_formula(text: str) -> PEFormula:
    parser = _Parser(text)
    f = parser.formula()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.column)
    return f


def parse_term(text: str) -> Term:
    parser = _Parser(text)
    t = parser.term()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.column)
    return t


# --- printer -----------------------------------------------------------

def print_term(t: Term, level: str = "term") -> str:
    # levels, loosest to tightest: term > factor > unary > primary
    if isinstance(t, Zero):
        return "0"
    if isinstance(t, One):
        return "1"
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Neg):
        s = "-" + print_term(t.child, "unary")
        return s if level in ("term", "factor", "unary") else "(" + s + ")"
    if isinstance(t, Add):
        s = print_term(t.left, "term") + " + " + print_term(t.right, "factor")
        return s if level == "term" else "(" + s + ")"
    if isinstance(t, Mul):
        s = print_term(t.left, "factor") + "*" + print_term(t.right, "unary")
        return s if level in ("term", "factor") else "(" + s + ")"
    raise FormulaError(f"not a term: {t!r}")


def print_formula(f: PEFormula, level: str = "formula") -> str:
    """Deterministic concrete syntax; parse(print(f)) is structurally equal to f.

    n-ary And/Or children of the same connective are parenthesized so arity
    survives the round trip.
    """
    if isinstance(f, Eq):
        return print_term(f.lhs) + " = " + print_term(f.rhs)
    if isinstance(f, Exists):
        s = "exists " + ", ".join(f.bound) + ". " + print_formula(f.body, "formula")
        return s if level == "formula" else "(" + s + ")"
    if isinstance(f, Or):
        s = " or ".join(print_formula(ch, "conj") for ch in f.children)
        return s if level in ("formula", "disj") else "(" + s + ")"
    if isinstance(f, And):
        s = " and ".join(print_formula(ch, "atom") for ch in f.children)
        return s if level in ("formula", "disj", "conj") else "(" + s + ")"
    raise FormulaError(f"not a formula: {f!r}")


# --- prefix disjunctive normal form -------------------------------------

@dataclass(frozen=True)
class NormalForm:
    """Prefix-pulled DNF: exists bound_vars . OR over matrix rows of AND of equations.

    matrix is a tuple of disjuncts; each disjunct is a tuple of (lhs, rhs) term
    pairs.  bound_vars are pairwise distinct and disjoint from free_vars; a
    binder keeps its source name unless a collision forces a {base}_{i} rename.
    """

    bound_vars: tuple
    free_vars: tuple
    matrix: tuple


def normalize(f: PEFormula, max_equations: int = DEFAULT_MAX_MATRIX_EQUATIONS) -> NormalForm:
    """Pull binders to a renamed-apart prefix and distribute to DNF.

    Raises FormulaError if the distributed matrix exceeds max_equations
    equations in total (And-over-Or distribution is exponential).
    """
    used = all_names(f)
    frees = free_vars(f)
    taken = set(frees)

    def fresh(base: str) -> str:
        # keep the source name when nothing else claims it (shadowing is
        # rejected at construction, so a unique binder name is capture-safe)
        if base not in taken:
            taken.add(base)
            return base
        i = 1
        while f"{base}_{i}" in used or f"{base}_{i}" in taken:
            i += 1
        name = f"{base}_{i}"
        used.add(name)
        taken.add(name)
        return name

    def count(matrix) -> int:
        return sum(len(d) for d in matrix)

    def go(g: PEFormula, renaming: Mapping[str, str]):
        if isinstance(g, Eq):
            return [], [[(rename_term(g.lhs, renaming), rename_term(g.rhs, renaming))]]
        if isinstance(g, Or):
            prefix: list = []
            matrix: list = []
            for ch in g.children:
                p, m = go(ch, renaming)
                prefix.extend(p)
                matrix.extend(m)
            return prefix, matrix
        if isinstance(g, And):
            prefix = []
            matrix = [[]]
            for ch in g.children:
                p, m = go(ch, renaming)
                prefix.extend(p)
                matrix = [row + extra for row in matrix for extra in m]
                if count(matrix) > max_equations:
                    raise FormulaError(
                        f"normal form exceeds {max_equations} equations; "
                        "raise max_equations to proceed"
                    )
            return prefix, matrix
        if isinstance(g, Exists):
            renamed = {name: fresh(name) for name in g.bound}
            p, m = go(g.body, {**renaming, **renamed})
            return [renamed[name] for name in g.bound] + p, m
        raise FormulaError(f"not a formula: {g!r}")

    prefix, matrix = go(f, {})
    return NormalForm(
        bound_vars=tuple(prefix),
        free_vars=frees,
        matrix=tuple(tuple(row) for row in matrix),
    )


def disjunct_vars(disjunct) -> tuple:
    """Variables of one normal-form disjunct, in first-occurrence order."""
    out: list = []
    seen: set = set()
    for lhs, rhs in disjunct:
        for t in (lhs, rhs):
            for name in term_vars(t):
                if name not in seen:
                    seen.add(name)
                    out.append(name)
    return tuple(out)
