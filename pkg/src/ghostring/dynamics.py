"""Algebraic dynamical systems: relations in the fragment, run over a ring.

A system is a ring, an arity, a domain constraint sigma over the state
variables, and a transition relation tau over state and next-state variables.
Everything downstream is formula manipulation: successor sets are the
projections of tau's solution set, periodic orbits are witnesses of a closed
sentence built from k renamed copies of sigma and tau, and quotient models are
found by evaluating the same sentence over candidate finite rings.

Ghost reports compare a sentence's status over a base ring and over an
extension along a fixed homomorphism; a witness living outside the image of
the map is the interesting case.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .formulas import (
    And,
    Eq,
    Exists,
    PEFormula,
    ZERO,
    all_names,
    bound_names,
    free_vars,
    normalize,
    parse_formula,
    substitute_free,
)
from .rings import (
    INTEGERS,
    Homomorphism,
    IdentityMap,
    LocalInclusion,
    LocalToModPower,
    ModReduction,
    PairMap,
    QuotientProjection,
    Ring,
    RingElement,
    RingError,
    eval_term_payload,
)
from .evaluate import (
    BudgetExceeded,
    EvalResult,
    Fails,
    Holds,
    RefutedAtPrecision,
    SearchBudget,
    UnknownUpTo,
    WitnessError,
    check_witness,
    eval_formula,
    satisfies,
    solutions,
    transport_witness,
)

TRUE_FORMULA = Eq(ZERO, ZERO)


class DynamicsError(ValueError):
    """Bad system construction or an unusable query."""


# --- systems ---------------------------------------------------------------

@dataclass(frozen=True)
class ADS:
    """Algebraic dynamical system: states are arity-tuples of ring elements,
    sigma constrains states, tau relates a state to a possible next state."""

    ring: Ring
    sigma: PEFormula
    tau: PEFormula
    arity: int
    state_vars: tuple
    next_vars: tuple

    def __post_init__(self):
        if self.arity < 1:
            raise DynamicsError("arity must be at least 1")
        if len(self.state_vars) != self.arity or len(self.next_vars) != self.arity:
            raise DynamicsError("state_vars and next_vars must each have arity entries")
        names = list(self.state_vars) + list(self.next_vars)
        if len(set(names)) != len(names):
            raise DynamicsError("state_vars and next_vars must be pairwise distinct")
        allowed_sigma = set(self.state_vars)
        extra = [v for v in free_vars(self.sigma) if v not in allowed_sigma]
        if extra:
            raise DynamicsError(f"sigma mentions non-state variables: {', '.join(extra)}")
        allowed_tau = set(names)
        extra = [v for v in free_vars(self.tau) if v not in allowed_tau]
        if extra:
            raise DynamicsError(f"tau mentions undeclared variables: {', '.join(extra)}")


def default_state_vars(arity: int) -> tuple:
    return tuple(f"x{i}" for i in range(1, arity + 1))


def default_next_vars(arity: int) -> tuple:
    return tuple(f"x{i}'" for i in range(1, arity + 1))


def make_ads(ring: Ring, tau, sigma=None, arity: int = 1,
             state_vars=None, next_vars=None) -> ADS:
    """Build a system; tau and sigma may be formula objects or concrete syntax."""
    if isinstance(tau, str):
        tau = parse_formula(tau)
    if sigma is None:
        sigma = TRUE_FORMULA
    elif isinstance(sigma, str):
        sigma = parse_formula(sigma)
    if state_vars is None:
        state_vars = default_state_vars(arity)
    if next_vars is None:
        next_vars = default_next_vars(arity)
    return ADS(ring, sigma, tau, arity, tuple(state_vars), tuple(next_vars))


def parse_ads(text: str):
    """Parse the one-directive-per-line system format.

    Directives: "arity: <n>" (required), "tau: <formula>" (required),
    "sigma: <formula>" (optional, defaults to 0 = 0).  Blank lines and
    "#" comments are skipped.  State variables are x1..xk and x1'..xk'.
    """
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep or key not in ("arity", "sigma", "tau"):
            raise DynamicsError(f"line {lineno}: expected 'arity:', 'sigma:' or 'tau:'")
        if key in fields:
            raise DynamicsError(f"line {lineno}: duplicate {key!r} directive")
        fields[key] = value.strip()
    for required in ("arity", "tau"):
        if required not in fields:
            raise DynamicsError(f"missing {required!r} directive")
    try:
        arity = int(fields["arity"])
    except ValueError:
        raise DynamicsError(f"arity must be an integer, got {fields['arity']!r}") from None
    sigma = parse_formula(fields["sigma"]) if "sigma" in fields else TRUE_FORMULA
    tau = parse_formula(fields["tau"])
    return arity, sigma, tau


def load_ads(path, ring: Ring) -> ADS:
    with open(path, "r", encoding="utf-8") as fh:
        arity, sigma, tau = parse_ads(fh.read())
    return make_ads(ring, tau, sigma, arity)


def as_state(ads: ADS, value) -> tuple:
    """Coerce scalars, payload tuples, or element tuples to a state tuple."""
    if isinstance(value, RingElement):
        value = (value,)
    elif not isinstance(value, (tuple, list)):
        value = (value,)
    if len(value) != ads.arity:
        raise DynamicsError(f"state needs {ads.arity} components, got {len(value)}")
    out = []
    for v in value:
        if isinstance(v, RingElement):
            if v.ring != ads.ring:
                raise RingError(f"state component {v} lives in {v.ring}, not {ads.ring}")
            out.append(v)
        else:
            out.append(ads.ring.element(v))
    return tuple(out)


def state_key(state: tuple):
    return tuple(el.sort_key() for el in state)


# --- stepping ---------------------------------------------------------------

class SuccessorSet(tuple):
    """Successor states in element order.  complete is True only when the set
    is provably exact: a finite ring enumerated without hitting the node cap.
    Over an infinite ring the answer is only as complete as the budget."""

    complete: bool

    def __new__(cls, items, complete: bool):
        self = tuple.__new__(cls, items)
        self.complete = complete
        return self


class Trajectory(list):
    """Visited states in order.  halt_reason is None when every requested step
    ran, otherwise why the iteration stopped short."""

    halt_reason: Optional[str]

    def __init__(self, states, halt_reason: Optional[str] = None):
        super().__init__(states)
        self.halt_reason = halt_reason


def successors(ads: ADS, state, budget: SearchBudget = None) -> SuccessorSet:
    """All tau-successors of the state, sorted by element order.  The relation
    may be multivalued.  The state must satisfy sigma: a provable violation is
    an error, while a budget-limited inconclusive check passes through."""
    state = as_state(ads, state)
    env = dict(zip(ads.state_vars, state))
    guard = satisfies(ads.ring, ads.sigma, env=env, budget=budget)
    if isinstance(guard, (Fails, RefutedAtPrecision)):
        values = tuple(el.value for el in state)
        raise DynamicsError(f"state {values!r} violates sigma")
    query = Exists(ads.next_vars, ads.tau)
    found = {}
    complete = ads.ring.cardinality is not None
    try:
        for witness in solutions(ads.ring, query, env=env, budget=budget):
            nxt = tuple(witness[v] for v in ads.next_vars)
            found.setdefault(tuple(el.value for el in nxt), nxt)
    except BudgetExceeded:
        complete = False  # report what was established; absence was not proven
    return SuccessorSet(sorted(found.values(), key=state_key), complete)


def trajectory(ads: ADS, start, steps: int, budget: SearchBudget = None,
               chooser: Callable = None) -> Trajectory:
    """Iterate the relation, resolving multivalued steps with chooser (default:
    least successor in element order).  Stops early, recording the reason, when
    a state has no successor -- provably or within budget."""
    state = as_state(ads, start)
    path = [state]
    for _ in range(steps):
        succ = successors(ads, state, budget=budget)
        if not succ:
            reason = ("no successor" if succ.complete
                      else "no successor found within budget")
            return Trajectory(path, reason)
        state = chooser(succ) if chooser is not None else succ[0]
        path.append(state)
    return Trajectory(path)


# --- periodic orbits ---------------------------------------------------------

def _copy_names(ads: ADS, k: int) -> list:
    used = all_names(ads.sigma) | all_names(ads.tau)
    used.update(ads.state_vars)
    used.update(ads.next_vars)
    base = "x"
    while True:
        names = [
            [f"{base}{i}" if ads.arity == 1 else f"{base}{i}_{j + 1}"
             for j in range(ads.arity)]
            for i in range(k)
        ]
        if not any(n in used for row in names for n in row):
            return names
        base += "x"


def period_sentence(ads: ADS, k: int) -> PEFormula:
    """Closed sentence: some orbit x0 -> x1 -> ... -> x{k-1} -> x0 exists with
    every state in the sigma domain.  Satisfying witnesses assign the copies,
    so a Holds result decodes directly to the orbit."""
    if k < 1:
        raise DynamicsError("period must be at least 1")
    copies = _copy_names(ads, k)
    parts = []
    for i in range(k):
        mapping = dict(zip(ads.state_vars, copies[i]))
        parts.append(substitute_free(ads.sigma, mapping))
    for i in range(k):
        mapping = dict(zip(ads.state_vars, copies[i]))
        mapping.update(zip(ads.next_vars, copies[(i + 1) % k]))
        parts.append(substitute_free(ads.tau, mapping))
    body = And(tuple(parts)) if len(parts) > 1 else parts[0]
    binders = tuple(n for row in copies for n in row)
    return Exists(binders, body)


@dataclass(frozen=True)
class CycleWitness:
    """A k-periodic orbit given explicitly as its k states."""

    states: tuple

    @property
    def k(self) -> int:
        return len(self.states)

    def canonical(self) -> "CycleWitness":
        """Rotate so the least state (element order) comes first."""
        rotations = [self.states[i:] + self.states[:i] for i in range(len(self.states))]
        return CycleWitness(min(rotations, key=lambda states: [state_key(s) for s in states]))

    def values(self):
        """Payloads, arity-1 convenience: the bare orbit."""
        if self.states and len(self.states[0]) == 1:
            return tuple(s[0].value for s in self.states)
        return tuple(tuple(el.value for el in s) for s in self.states)

    def verify(self, ads: ADS, budget: SearchBudget = None) -> bool:
        for state in self.states:
            env = dict(zip(ads.state_vars, state))
            if not isinstance(satisfies(ads.ring, ads.sigma, env=env, budget=budget), Holds):
                return False
        for i, state in enumerate(self.states):
            env = dict(zip(ads.state_vars, state))
            env.update(zip(ads.next_vars, self.states[(i + 1) % len(self.states)]))
            if not isinstance(satisfies(ads.ring, ads.tau, env=env, budget=budget), Holds):
                return False
        return True


def decode_cycle_witness(ads: ADS, k: int, witness: dict) -> CycleWitness:
    """Read the orbit back out of a Holds witness for period_sentence(ads, k)."""
    copies = _copy_names(ads, k)
    states = []
    for row in copies:
        try:
            states.append(tuple(witness[name] for name in row))
        except KeyError as exc:
            raise DynamicsError(f"witness is missing {exc.args[0]!r}") from None
    return CycleWitness(tuple(states))


def find_cycles(ads: ADS, max_len: int) -> list:
    """All elementary cycles of length <= max_len in the successor graph over
    the sigma domain.  Needs a finite ring (except the vacuous max_len=0).
    Each cycle appears once, rotated to start at its least state, and is
    re-verified relationally before being returned."""
    if max_len == 0:
        return []
    if max_len < 0:
        raise DynamicsError("max_len must be nonnegative")
    if ads.ring.cardinality is None:
        raise RingError("infinite ring")
    elements = list(ads.ring.enumerate_elements())
    nodes = []
    for combo in itertools.product(elements, repeat=ads.arity):
        env = dict(zip(ads.state_vars, combo))
        if eval_formula(ads.ring, ads.sigma, env):
            nodes.append(combo)
    nodes.sort(key=state_key)
    pos = {n: i for i, n in enumerate(nodes)}
    succ = {}
    for n in nodes:
        succ[n] = [s for s in successors(ads, n) if s in pos]

    cycles = []
    for anchor in nodes:
        a = pos[anchor]
        path = [anchor]
        on_path = {anchor}

        def walk(u):
            for v in succ[u]:
                if v == anchor:
                    cycles.append(CycleWitness(tuple(path)))
                elif pos[v] > a and v not in on_path and len(path) < max_len:
                    path.append(v)
                    on_path.add(v)
                    walk(v)
                    path.pop()
                    on_path.remove(v)

        walk(anchor)
    cycles.sort(key=lambda c: (c.k, [state_key(s) for s in c.states]))
    for cycle in cycles:
        if not cycle.verify(ads):
            raise DynamicsError(f"internal: cycle {cycle.values()!r} failed "
                                "relational re-verification")
    return cycles


# --- ghost reports -----------------------------------------------------------

def _element_in_image(hom: Homomorphism, el: RingElement) -> Optional[bool]:
    """Definite membership of el in hom's image where that is decidable."""
    if isinstance(hom, (IdentityMap, ModReduction, QuotientProjection, LocalToModPower)):
        return True  # surjective
    if isinstance(hom, LocalInclusion):
        return el.value.denominator == 1
    return None


def _matching_disjunct(ring: Ring, formula: PEFormula, witness: dict) -> Optional[int]:
    nf = normalize(formula)
    full = {}
    for name in nf.bound_vars:
        if name not in witness:
            raise DynamicsError(f"witness is missing {name!r}")
        v = witness[name]
        full[name] = v.value if isinstance(v, RingElement) else ring.coerce(v)
    for i, disjunct in enumerate(nf.matrix):
        if all(eval_term_payload(ring, lhs, full) == eval_term_payload(ring, rhs, full)
               for lhs, rhs in disjunct):
            return i
    return None


@dataclass(frozen=True)
class GhostReport:
    hom: Homomorphism
    base: EvalResult
    extension: EvalResult
    witness_outside_image: Optional[bool]
    justification: str  # the checked ground for witness_outside_image
    classification: str


def ghost_report(formula: PEFormula, hom: Homomorphism,
                 budget: SearchBudget = None,
                 extension_hint: dict = None) -> GhostReport:
    """Status of a closed sentence over hom's source versus its target.

    extension_hint, when given, is a claimed prefix witness over the target;
    it is checked directly against the equations instead of searched for.
    The interesting verdict is a target witness that provably uses elements
    outside hom's image while the source search comes back empty-handed."""
    if free_vars(formula):
        raise DynamicsError("ghost reports need a closed sentence")
    base = satisfies(hom.source, formula, budget=budget)

    if extension_hint is not None:
        hint = {name: el if isinstance(el, RingElement) else hom.target.element(el)
                for name, el in extension_hint.items()}
        matched = _matching_disjunct(hom.target, formula, hint)
        if matched is None:
            raise DynamicsError("extension_hint does not satisfy the sentence")
        extension: EvalResult = Holds(hint, matched, None, 0)
    else:
        extension = satisfies(hom.target, formula, budget=budget)
        if isinstance(extension, Holds) and not check_witness(
                hom.target, formula, extension.witness):
            raise DynamicsError("internal: extension witness failed "
                                "re-verification")
    if isinstance(base, Holds) and not check_witness(
            hom.source, formula, base.witness):
        raise DynamicsError("internal: base witness failed re-verification")

    outside: Optional[bool] = None
    justification = "no extension witness to test"
    if isinstance(extension, Holds):
        culprit = None
        undecided = None
        for name, el in extension.witness.items():
            member = _element_in_image(hom, el)
            if member is False:
                culprit = (name, el)
                break
            if member is None and undecided is None:
                undecided = name
        if culprit is not None:
            name, el = culprit
            outside = True
            justification = (f"witness value {name} = {el} has denominator "
                             f"{el.value.denominator} in lowest terms, so no "
                             "element of the base ring maps to it")
        elif undecided is not None:
            outside = None
            justification = (f"image membership of witness value {undecided!r} "
                             "is not decidable for this kind of map")
        elif isinstance(hom, LocalInclusion):
            outside = False
            justification = ("every witness value is an integer, hence already "
                             "in the image")
        else:
            outside = False
            justification = "the map is onto, so every witness value is an image"

    if isinstance(base, Holds):
        classification = "realized_in_base"
    elif isinstance(extension, Holds) and outside is True:
        classification = "ghost_witness"
    elif isinstance(extension, Holds):
        classification = "extension_witness"
    elif isinstance(extension, (Fails, RefutedAtPrecision)):
        classification = "refuted_in_extension"
    else:
        classification = "unresolved"

    return GhostReport(hom=hom, base=base, extension=extension,
                       witness_outside_image=outside, justification=justification,
                       classification=classification)


# --- countermodel search -------------------------------------------------------

class CountermodelError(ValueError):
    """An axiom could not be verified over the source ring."""


@dataclass(frozen=True)
class CountermodelLimits:
    moduli: tuple = ()           # explicit quotient moduli to try, in order
    max_modulus: int = 64        # ascending scan bound when moduli is empty
    include_products: bool = True
    budget: SearchBudget = SearchBudget(int_bound=128)


@dataclass(frozen=True)
class Countermodel:
    ring: Ring
    hom: Homomorphism
    witnesses: dict       # query label -> prefix witness over the found ring
    base_witnesses: dict  # axiom label -> prefix witness over the integers
    transported: dict     # axiom label -> that witness pushed through hom
    transported_ok: bool  # every transported witness re-verified in the ring
    candidates_tried: int


@dataclass(frozen=True)
class CountermodelScan:
    """Full outcome of a candidate sweep: the find, if any, plus the rings
    where a budget-capped query left the verdict open."""

    found: Optional[Countermodel]
    candidates_tried: int
    inconclusive: tuple  # ring names where some query came back unknown


def _existential_closure(f: PEFormula) -> PEFormula:
    frees = free_vars(f)
    if not frees:
        return f
    binders = bound_names(f)
    clash = [v for v in frees if v in binders]
    if clash:
        used = all_names(f)
        mapping = {}
        for v in clash:
            i = 1
            while f"{v}_{i}" in used:
                i += 1
            mapping[v] = f"{v}_{i}"
            used.add(mapping[v])
        f = substitute_free(f, mapping)
        frees = tuple(mapping.get(v, v) for v in frees)
    return Exists(frees, f)


def _grouped_queries(phi: PEFormula, axioms: Sequence) -> list:
    """Label the target and axioms, then merge the ones that share free
    variables into joint queries: closed components have independent truth,
    components with shared frees must be solved together."""
    items = [("target", phi)] + [(f"axiom {i + 1}", ax) for i, ax in enumerate(axioms)]
    frees = [set(free_vars(f)) for _, f in items]
    group_of = list(range(len(items)))

    def find(i):
        while group_of[i] != i:
            group_of[i] = group_of[group_of[i]]
            i = group_of[i]
        return i

    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if frees[i] & frees[j]:
                group_of[find(j)] = find(i)

    grouped: dict = {}
    for i, (label, f) in enumerate(items):
        grouped.setdefault(find(i), []).append((label, f))
    queries = []
    for members in grouped.values():
        labels = tuple(label for label, _ in members)
        if len(members) == 1:
            query = _existential_closure(members[0][1])
        else:
            query = _existential_closure(And(tuple(f for _, f in members)))
        queries.append((labels, query))
    return queries


def _candidate_homs(limits: CountermodelLimits):
    if limits.moduli:
        for m in limits.moduli:
            yield ModReduction(m)
        return
    for n in range(2, limits.max_modulus + 1):
        yield ModReduction(n)
    if limits.include_products:
        pairs = [(a, b) for a in range(2, limits.max_modulus + 1)
                 for b in range(a, limits.max_modulus + 1)
                 if a * b <= limits.max_modulus]
        pairs.sort(key=lambda ab: (ab[0] * ab[1], ab[0]))
        for a, b in pairs:
            yield PairMap(ModReduction(a), ModReduction(b))


def countermodel_scan(phi: PEFormula, axioms: Sequence,
                      limits: CountermodelLimits = None) -> CountermodelScan:
    """Find a quotient of the integers satisfying phi together with axioms
    already established over the integers.

    Every axiom (existentially closed) must come back Holds over the integers,
    else CountermodelError names it.  Candidates are quotients (and, by
    default, products of quotients); the first ring where every query holds is
    returned, with the axioms' integer witnesses transported through the
    quotient map and re-verified as a second route."""
    if limits is None:
        limits = CountermodelLimits()

    base_witnesses = {}
    for i, ax in enumerate(axioms):
        label = f"axiom {i + 1}"
        closed = _existential_closure(ax)
        result = satisfies(INTEGERS, closed, budget=limits.budget)
        if not isinstance(result, Holds):
            raise CountermodelError(
                f"{label} unverified over the integers: {type(result).__name__}")
        base_witnesses[label] = result.witness

    queries = _grouped_queries(phi, axioms)
    tried = 0
    inconclusive = []
    for hom in _candidate_homs(limits):
        tried += 1
        ring = hom.target
        witnesses = {}
        good = True
        for labels, query in queries:
            result = satisfies(ring, query, budget=limits.budget)
            if not isinstance(result, Holds):
                if isinstance(result, UnknownUpTo):
                    inconclusive.append(str(ring))
                good = False
                break
            for label in labels:
                witnesses[label] = result.witness
        if not good:
            continue
        transported = {}
        transported_ok = True
        for i, ax in enumerate(axioms):
            label = f"axiom {i + 1}"
            try:
                # transport_witness re-verifies on both ends itself
                transported[label] = transport_witness(
                    hom, _existential_closure(ax), base_witnesses[label])
            except WitnessError:
                transported_ok = False
        found = Countermodel(ring=ring, hom=hom, witnesses=witnesses,
                             base_witnesses=base_witnesses,
                             transported=transported,
                             transported_ok=transported_ok,
                             candidates_tried=tried)
        return CountermodelScan(found, tried, tuple(inconclusive))
    return CountermodelScan(None, tried, tuple(inconclusive))


def countermodel_search(phi: PEFormula, axioms: Sequence,
                        limits: CountermodelLimits = None) -> Optional[Countermodel]:
    """countermodel_scan, reduced to the find itself."""
    return countermodel_scan(phi, axioms, limits).found
