"""Witness search for positive existential formulas over ring backends.

Semantics of the four outcomes:

  Holds(witness)          a checked satisfying assignment for the prefix
  Fails()                 exhaustive refutation; only finite rings can produce it
  RefutedAtPrecision(N)   localization refuted by an exhaustive probe mod p^N
  UnknownUpTo(budget)     search space exhausted or work cap hit, no verdict

The search is per-disjunct backtracking over the prefix DNF.  Candidates come
in shells: over the integers, shell m holds the values of absolute value at
most m and a completed assignment must realize max |v| = m, so witnesses are
found in order of that size metric and the first hit is minimal.  Over a
localization the metric is height, max(|numerator|, denominator).  A finite
ring is a single shell.  Within a disjunct, variables are ordered greedily
(always next: the variable that leaves some equation with no other unassigned
variable) and every equation is checked as soon as its variables are placed.

Every candidate placement costs one node against budget.max_nodes; the cap
makes large bounds safe to request and is reported back inside UnknownUpTo.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Optional

from .formulas import (
    Add,
    And,
    Eq,
    Exists,
    FormulaError,
    Mul,
    Neg,
    NormalForm,
    One,
    Or,
    PEFormula,
    Term,
    Var,
    Zero,
    disjunct_vars,
    free_vars,
    int_term,
    normalize,
)
from .rings import (
    INTEGERS,
    IntegerRing,
    LocalRing,
    ModRing,
    ProductRing,
    Ring,
    RingElement,
    RingError,
    coherent_reduce,
    eval_term_payload,
)


@dataclass(frozen=True)
class SearchBudget:
    """Search limits.  int_bound caps the integer shell, height_bound the
    localization shell, precision_limit the modular probe tower, and max_nodes
    the total number of candidate placements across the whole call."""

    int_bound: int = 10_000
    height_bound: int = 1_000
    precision_limit: int = 12
    max_nodes: int = 2_000_000

    def __post_init__(self):
        for field in ("int_bound", "height_bound", "precision_limit", "max_nodes"):
            if getattr(self, field) < 1:
                raise ValueError(f"budget {field} must be positive")


DEFAULT_BUDGET = SearchBudget()


class BudgetExceeded(RuntimeError):
    """Internal signal: the node cap was hit mid-search."""


class WitnessError(ValueError):
    """A witness failed re-verification on either side of a transport."""


@dataclass(frozen=True)
class ProbeRecord:
    """One level of the modular probe tower over a localization."""

    precision: int
    modulus: int
    status: str  # "holds" | "skipped"
    witness: Optional[dict] = None


@dataclass(frozen=True)
class Holds:
    witness: dict  # prefix variable -> RingElement; absent-disjunct vars are 0
    disjunct: int
    shell: Optional[int]
    nodes: int


@dataclass(frozen=True)
class Fails:
    nodes: int


@dataclass(frozen=True)
class RefutedAtPrecision:
    precision: int
    modulus: int
    probes: tuple = ()
    nodes: int = 0


@dataclass(frozen=True)
class UnknownUpTo:
    budget: SearchBudget
    probes: tuple = ()
    nodes: int = 0
    completed_shell: Optional[int] = None


EvalResult = object  # Holds | Fails | RefutedAtPrecision | UnknownUpTo


class _Counter:
    __slots__ = ("used", "cap")

    def __init__(self, cap: int):
        self.used = 0
        self.cap = cap

    def spend(self):
        self.used += 1
        if self.used > self.cap:
            raise BudgetExceeded

    def remaining(self) -> int:
        return self.cap - self.used


# --- candidate pools -----------------------------------------------------

_INT_POOL: list = [0]


def _int_candidates(bound: int):
    """Integers ordered by (|v|, v); the first 2m+1 entries are shell m."""
    while (len(_INT_POOL) - 1) // 2 < bound:
        m = (len(_INT_POOL) - 1) // 2 + 1
        _INT_POOL.append(-m)
        _INT_POOL.append(m)
    return _INT_POOL, 2 * bound + 1


_LOCAL_POOLS: dict = {}


def _local_candidates(prime: int, height: int):
    """Localization elements ordered by (height, numerator, denominator); the
    pool prefix of recorded length is exactly the set of height <= h."""
    pool, prefix_lens = _LOCAL_POOLS.setdefault(prime, ([], []))
    while len(prefix_lens) < height:
        h = len(prefix_lens) + 1
        if h == 1:
            block = [Fraction(-1), Fraction(0), Fraction(1)]
        else:
            block = []
            for num in range(-h, h + 1):
                if abs(num) == h:
                    dens = [d for d in range(1, h + 1) if d % prime != 0]
                else:
                    dens = [h] if h % prime != 0 else []
                for den in dens:
                    frac = Fraction(num, den)
                    if frac.numerator == num and frac.denominator == den:
                        block.append(frac)
        pool.extend(block)
        prefix_lens.append(len(pool))
    return pool, prefix_lens[height - 1]


_FINITE_POOLS: dict = {}


def _finite_candidates(ring: Ring):
    if ring not in _FINITE_POOLS:
        payloads = sorted(ring.enumerate_payloads(), key=ring.sort_key)
        _FINITE_POOLS[ring] = payloads
    pool = _FINITE_POOLS[ring]
    return pool, len(pool)


def _height(v: Fraction) -> int:
    return max(abs(v.numerator), v.denominator)


# --- compiled disjunct plans ---------------------------------------------

def _compile_term(ring: Ring, t: Term):
    """Close a term over the ring ops; the result maps a payload env to a payload."""
    if isinstance(t, Zero):
        c = ring.coerce(0)
        return lambda env: c
    if isinstance(t, One):
        c = ring.coerce(1)
        return lambda env: c
    if isinstance(t, Var):
        name = t.name
        return lambda env: env[name]
    if isinstance(t, Neg):
        f = _compile_term(ring, t.child)
        neg = ring.neg
        return lambda env: neg(f(env))
    if isinstance(t, Add):
        fl, fr = _compile_term(ring, t.left), _compile_term(ring, t.right)
        add = ring.add
        return lambda env: add(fl(env), fr(env))
    if isinstance(t, Mul):
        fl, fr = _compile_term(ring, t.left), _compile_term(ring, t.right)
        mul = ring.mul
        return lambda env: mul(fl(env), fr(env))
    raise FormulaError(f"not a term: {t!r}")


@dataclass
class _Plan:
    order: list  # unassigned variables, greedy placement order
    checks: list  # checks[0]: ground eqs; checks[i+1]: eqs closed by order[i]


def _plan_disjunct(ring: Ring, disjunct, preassigned: set) -> _Plan:
    eqs = []
    for lhs, rhs in disjunct:
        names = frozenset(n for t in (lhs, rhs) for n in _term_names(t)) - preassigned
        eqs.append((_compile_term(ring, lhs), _compile_term(ring, rhs), names))

    dvars = [v for v in disjunct_vars(disjunct) if v not in preassigned]
    order: list = []
    placed: set = set()
    while len(order) < len(dvars):
        nxt = None
        for fl, fr, names in eqs:
            open_vars = [n for n in names if n not in placed]
            if len(open_vars) == 1:
                nxt = open_vars[0]
                break
        if nxt is None:
            nxt = next(v for v in dvars if v not in placed)
        order.append(nxt)
        placed.add(nxt)

    position = {v: i for i, v in enumerate(order)}
    checks: list = [[] for _ in range(len(order) + 1)]
    for fl, fr, names in eqs:
        when = max((position[n] + 1 for n in names), default=0)
        checks[when].append((fl, fr))
    return _Plan(order, checks)


def _term_names(t: Term):
    if isinstance(t, Var):
        yield t.name
    elif isinstance(t, Neg):
        yield from _term_names(t.child)
    elif isinstance(t, (Add, Mul)):
        yield from _term_names(t.left)
        yield from _term_names(t.right)


def _dfs(plan: _Plan, baseenv: dict, pool, pool_len: int, metric, shell,
         counter: _Counter) -> Iterator[dict]:
    """All completions of the plan within the shell, as {var: payload} dicts.
    metric=None means the single-shell (finite ring) case."""
    for fl, fr in plan.checks[0]:
        if fl(baseenv) != fr(baseenv):
            return
    order = plan.order
    if not order:
        yield {}
        return
    env = dict(baseenv)
    last = len(order) - 1
    checks = plan.checks

    def rec(i: int) -> Iterator[dict]:
        name = order[i]
        level_checks = checks[i + 1]
        for k in range(pool_len):
            counter.spend()
            env[name] = pool[k]
            ok = True
            for fl, fr in level_checks:
                if fl(env) != fr(env):
                    ok = False
                    break
            if not ok:
                continue
            if i == last:
                if metric is None or max(metric(env[v]) for v in order) == shell:
                    yield {v: env[v] for v in order}
            else:
                yield from rec(i + 1)

    yield from rec(0)


# --- the searches ---------------------------------------------------------

def _payload_env(ring: Ring, names, env) -> dict:
    env = env or {}
    missing = [n for n in names if n not in env]
    if missing:
        raise FormulaError(f"unassigned free variables: {', '.join(missing)}")
    out = {}
    for n in names:
        v = env[n]
        if isinstance(v, RingElement):
            if v.ring != ring:
                raise RingError(f"{n!r} holds an element of {v.ring}, not {ring}")
            out[n] = v.value
        else:
            out[n] = ring.coerce(v)
    return out


def _shell_plan(ring: Ring, budget: SearchBudget):
    """(shells, pool_for_shell, metric) for the ring kind."""
    if ring.cardinality is not None:
        return [None], lambda shell: _finite_candidates(ring), None
    if isinstance(ring, IntegerRing):
        return (range(0, budget.int_bound + 1),
                lambda shell: _int_candidates(shell),
                abs)
    if isinstance(ring, LocalRing):
        return (range(1, budget.height_bound + 1),
                lambda shell: _local_candidates(ring.prime, shell),
                _height)
    raise RingError(f"no search strategy for {ring}")


def _search(ring: Ring, nf: NormalForm, baseenv: dict, budget: SearchBudget,
            counter: _Counter, progress: dict) -> Iterator[tuple]:
    """Yield (payload_witness, disjunct_index, shell) over all disjuncts,
    shell-major so smaller witnesses come first."""
    shells, pool_at, metric = _shell_plan(ring, budget)
    preassigned = set(baseenv)
    plans = [_plan_disjunct(ring, d, preassigned) for d in nf.matrix]
    first = True
    for shell in shells:
        pool, pool_len = pool_at(shell)
        for d_i, plan in enumerate(plans):
            if not plan.order and not first:
                continue  # ground disjunct: checked once, on the first shell
            for witness in _dfs(plan, baseenv, pool, pool_len, metric, shell, counter):
                yield witness, d_i, shell
        progress["completed_shell"] = shell
        first = False


def _fill_witness(ring: Ring, nf: NormalForm, payload_witness: dict,
                  baseenv: dict) -> dict:
    """Assemble the full Holds witness: free variables from the environment,
    prefix variables from the search (zero-filled when the satisfied disjunct
    never mentions them)."""
    zero = ring.zero()
    out = {}
    for name in nf.free_vars:
        out[name] = RingElement(ring, baseenv[name])
    for name in nf.bound_vars:
        if name in payload_witness:
            out[name] = RingElement(ring, payload_witness[name])
        else:
            out[name] = zero
    return out


def _box_size(nf: NormalForm, cardinality: int, preassigned: set) -> int:
    total = 0
    for d in nf.matrix:
        k = len([v for v in disjunct_vars(d) if v not in preassigned])
        total += cardinality ** k
    return total


def _probe_env(baseenv: dict, ring: LocalRing, exponent: int) -> dict:
    out = {}
    for name, v in baseenv.items():
        out[name] = coherent_reduce(RingElement(ring, v), exponent).value
    return out


def satisfies(ring: Ring, formula: PEFormula, env=None,
              budget: SearchBudget = None) -> EvalResult:
    """Decide, within budget, whether the ring satisfies the formula under env.

    env assigns the free variables (RingElement or raw payload).  Over a
    localization the modular probe tower runs first: an exhaustive failure mod
    p^N is already a refutation, because any solution would reduce to one."""
    if budget is None:
        budget = DEFAULT_BUDGET
    nf = normalize(formula)
    baseenv = _payload_env(ring, nf.free_vars, env)
    counter = _Counter(budget.max_nodes)

    if isinstance(ring, LocalRing):
        return _satisfies_local(ring, nf, baseenv, budget, counter)

    progress: dict = {}
    try:
        for witness, d_i, shell in _search(ring, nf, baseenv, budget, counter, progress):
            return Holds(_fill_witness(ring, nf, witness, baseenv),
                         d_i, shell, counter.used)
    except BudgetExceeded:
        return UnknownUpTo(budget=budget, nodes=counter.used,
                           completed_shell=progress.get("completed_shell"))
    if ring.cardinality is not None:
        return Fails(counter.used)
    return UnknownUpTo(budget=budget, nodes=counter.used,
                       completed_shell=progress.get("completed_shell"))


def _satisfies_local(ring: LocalRing, nf: NormalForm, baseenv: dict,
                     budget: SearchBudget, counter: _Counter) -> EvalResult:
    p = ring.prime
    probes: list = []
    for n_exp in range(1, budget.precision_limit + 1):
        modulus = p ** n_exp
        quotient = ModRing(modulus)
        if _box_size(nf, modulus, set(baseenv)) > counter.remaining():
            probes.append(ProbeRecord(n_exp, modulus, "skipped"))
            break
        qenv = _probe_env(baseenv, ring, n_exp)
        progress: dict = {}
        found = None
        try:
            for witness, d_i, shell in _search(quotient, nf, qenv, budget,
                                               counter, progress):
                found = witness
                break
        except BudgetExceeded:
            probes.append(ProbeRecord(n_exp, modulus, "skipped"))
            break
        if found is None:
            # exhaustive: no solution mod p^N, hence none in the localization
            return RefutedAtPrecision(n_exp, modulus, tuple(probes), counter.used)
        probes.append(ProbeRecord(n_exp, modulus, "holds",
                                  _fill_witness(quotient, nf, found, qenv)))

    progress = {}
    try:
        for witness, d_i, shell in _search(ring, nf, baseenv, budget, counter, progress):
            return Holds(_fill_witness(ring, nf, witness, baseenv),
                         d_i, shell, counter.used)
    except BudgetExceeded:
        pass
    return UnknownUpTo(budget=budget, probes=tuple(probes), nodes=counter.used,
                       completed_shell=progress.get("completed_shell"))


def solutions(ring: Ring, formula: PEFormula, env=None,
              budget: SearchBudget = None) -> Iterator[dict]:
    """All witnesses within budget, smallest shell first, duplicates removed.
    Raises BudgetExceeded if the node cap interrupts the enumeration."""
    if budget is None:
        budget = DEFAULT_BUDGET
    nf = normalize(formula)
    baseenv = _payload_env(ring, nf.free_vars, env)
    counter = _Counter(budget.max_nodes)
    seen = set()
    for witness, d_i, shell in _search(ring, nf, baseenv, budget, counter, {}):
        key = tuple(sorted(witness.items()))
        if key in seen:
            continue
        seen.add(key)
        yield _fill_witness(ring, nf, witness, baseenv)


def _witness_payload(ring: Ring, name: str, value) -> object:
    if isinstance(value, RingElement):
        if value.ring != ring:
            raise RingError(f"{name!r} holds an element of {value.ring}, not {ring}")
        return value.value
    return ring.coerce(value)


def check_witness(ring: Ring, formula: PEFormula, witness: Mapping, env=None) -> bool:
    """True iff some disjunct of the normal form holds with its prefix read
    from witness (zero-filled entries included).  Free variables come from
    env when given, falling back to entries in the witness itself."""
    nf = normalize(formula)
    full = {}
    for name in nf.free_vars:
        if env is not None and name in env:
            full[name] = _witness_payload(ring, name, env[name])
        elif name in witness:
            full[name] = _witness_payload(ring, name, witness[name])
        else:
            raise FormulaError(f"unassigned free variables: {name}")
    for name in nf.bound_vars:
        if name not in witness:
            return False
        full[name] = _witness_payload(ring, name, witness[name])
    for disjunct in nf.matrix:
        if all(eval_term_payload(ring, lhs, full) == eval_term_payload(ring, rhs, full)
               for lhs, rhs in disjunct):
            return True
    return False


def transport_witness(hom, formula: PEFormula, witness: Mapping) -> dict:
    """Push a verified witness through a homomorphism, variable by variable.

    The source assignment is re-checked first, then the image assignment is
    confirmed by direct equation evaluation in the target.  Equations are
    preserved by ring maps, so the second check can only fail if the map
    breaks a homomorphism law; that is reported rather than swallowed."""
    source, target = hom.source, hom.target
    staged = {name: RingElement(source, _witness_payload(source, name, value))
              for name, value in witness.items()}
    if not check_witness(source, formula, staged):
        raise WitnessError("source witness invalid: the assignment does not "
                           "satisfy the formula where it came from")
    moved = {name: hom.apply(el) for name, el in staged.items()}
    if not check_witness(target, formula, moved):
        raise WitnessError("transported witness failed verification in the "
                           "target ring; the map does not preserve equations")
    return moved


# --- structural evaluation (finite rings) ---------------------------------

def eval_formula(ring: Ring, formula: PEFormula, env=None) -> bool:
    """Direct recursive truth evaluation; Exists enumerates the whole ring, so
    this needs a finite ring but is search-free: an independent second route."""
    start = _payload_env(ring, free_vars(formula), env)

    def walk(f: PEFormula, scope: dict) -> bool:
        if isinstance(f, Eq):
            return (eval_term_payload(ring, f.lhs, scope)
                    == eval_term_payload(ring, f.rhs, scope))
        if isinstance(f, And):
            return all(walk(ch, scope) for ch in f.children)
        if isinstance(f, Or):
            return any(walk(ch, scope) for ch in f.children)
        if isinstance(f, Exists):
            pool = list(ring.enumerate_payloads())
            names = f.bound
            for combo in itertools.product(pool, repeat=len(names)):
                inner = dict(scope)
                inner.update(zip(names, combo))
                if walk(f.body, inner):
                    return True
            return False
        raise FormulaError(f"not a formula: {f!r}")

    return walk(formula, start)


# --- random closed formulas ------------------------------------------------

def random_formula(seed: int, size_limit: int = 4) -> PEFormula:
    """A random closed formula in the fragment, deterministic in the seed:
    an And/Or shape over up to size_limit polynomial equations, existentially
    closed (sometimes in two nested groups).  Term depth tops out at 4, with
    the mass on shallow terms so that witness search stays cheap.  Fuel for
    the preservation and round-trip property suites."""
    if size_limit < 1:
        raise ValueError("size_limit must be at least 1")
    rng = random.Random(seed)
    names = [f"v{i}" for i in range(1, rng.randint(1, min(3, size_limit)) + 1)]

    def term(depth: int) -> Term:
        if depth == 0:
            kind = rng.randrange(4)
            if kind == 0:
                return Var(rng.choice(names))
            if kind == 1:
                return int_term(rng.randint(0, 3))
            if kind == 2:
                return int_term(-rng.randint(1, 2))
            return Var(rng.choice(names))
        op = rng.randrange(3)
        if op == 0:
            return Add(term(depth - 1), term(depth - 1))
        if op == 1:
            return Mul(term(depth - 1), term(depth - 1))
        return Neg(term(depth - 1))

    def atom() -> PEFormula:
        return Eq(term(rng.choice((1, 1, 1, 2, 2, 3, 4))),
                  term(rng.choice((0, 0, 1, 1, 2, 3))))

    atoms = [atom() for _ in range(rng.randint(1, size_limit))]
    while len(atoms) > 1:
        take = atoms[:2]
        atoms = atoms[2:]
        joined = And(tuple(take)) if rng.random() < 0.5 else Or(tuple(take))
        atoms.append(joined)
    body = atoms[0]

    frees = free_vars(body)
    if not frees:
        return body
    if len(frees) > 1 and rng.random() < 0.4:
        cut = rng.randint(1, len(frees) - 1)
        return Exists(frees[:cut], Exists(frees[cut:], body))
    return Exists(frees, body)
