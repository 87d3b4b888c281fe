"""Positive existential formulas over commutative rings.

Tools for a small fragment of ring languages closed under existential
quantification, disjunction, and conjunction of equations.  Satisfiability
of these sentences transports along any ring homomorphism, which makes
them a useful probe: a witness found in a quotient or a localization says
something definite about every ring downstream of it.

The package bundles a formula language with parser and printer, a handful
of concrete rings and maps between them, a budgeted witness search,
algebraic dynamical systems given by formulas, and an exact analysis of
3x+1 cycles through parity vectors.
"""

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
    ONE,
    ParseError,
    PEFormula,
    Term,
    Var,
    ZERO,
    Zero,
    free_vars,
    int_term,
    normalize,
    parse_formula,
    parse_term,
    print_formula,
    print_term,
    sub_term,
    substitute_free,
)
from .rings import (
    INTEGERS,
    Composition,
    HomCheckResult,
    Homomorphism,
    IdentityMap,
    IntegerRing,
    LocalInclusion,
    LocalRing,
    LocalToModPower,
    ModReduction,
    ModRing,
    PairMap,
    ProductRing,
    QuotientProjection,
    Ring,
    RingElement,
    RingError,
    apply_hom,
    check_hom_laws,
    coherent_reduce,
    eval_term,
    hom_from_string,
    ring_from_string,
)
from .evaluate import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    Fails,
    Holds,
    ProbeRecord,
    RefutedAtPrecision,
    SearchBudget,
    UnknownUpTo,
    WitnessError,
    check_witness,
    eval_formula,
    random_formula,
    satisfies,
    solutions,
    transport_witness,
)
from .dynamics import (
    ADS,
    Countermodel,
    CountermodelError,
    CountermodelLimits,
    CountermodelScan,
    CycleWitness,
    DynamicsError,
    GhostReport,
    SuccessorSet,
    Trajectory,
    countermodel_scan,
    countermodel_search,
    decode_cycle_witness,
    find_cycles,
    ghost_report,
    load_ads,
    make_ads,
    parse_ads,
    period_sentence,
    successors,
    trajectory,
)
from .collatz import (
    ACCELERATED,
    RAW,
    AffineComposite,
    Census,
    ParityVector,
    PeriodicPoint,
    Rejection,
    admissible_parity_vectors,
    affine_composite,
    bridge_to_quotient,
    collatz_system,
    collatz_tau,
    census_row,
    cycle_from_parity_vector,
    cycle_window_sigma,
    ghost_census,
    parse_parity_vector,
    step_exact,
    vector_cycle_sentence,
    vector_cycle_witness,
)

__version__ = "0.1.0"

__all__ = [
    # formulas
    "Add", "And", "Eq", "Exists", "FormulaError", "Mul", "Neg", "NormalForm",
    "ONE", "One", "Or", "ParseError", "PEFormula", "Term", "Var", "ZERO",
    "Zero", "free_vars", "int_term", "normalize", "parse_formula",
    "parse_term", "print_formula", "print_term", "sub_term", "substitute_free",
    # rings
    "INTEGERS", "Composition", "HomCheckResult", "Homomorphism", "IdentityMap",
    "IntegerRing", "LocalInclusion", "LocalRing", "LocalToModPower",
    "ModReduction", "ModRing", "PairMap", "ProductRing", "QuotientProjection",
    "Ring", "RingElement", "RingError", "apply_hom", "check_hom_laws",
    "coherent_reduce", "eval_term", "hom_from_string", "ring_from_string",
    # evaluate
    "DEFAULT_BUDGET", "BudgetExceeded", "Fails", "Holds", "ProbeRecord",
    "RefutedAtPrecision", "SearchBudget", "UnknownUpTo", "WitnessError",
    "check_witness", "eval_formula", "random_formula", "satisfies",
    "solutions", "transport_witness",
    # dynamics
    "ADS", "Countermodel", "CountermodelError", "CountermodelLimits",
    "CountermodelScan", "CycleWitness", "DynamicsError", "GhostReport",
    "SuccessorSet", "Trajectory", "countermodel_scan", "countermodel_search",
    "decode_cycle_witness", "find_cycles", "ghost_report", "load_ads",
    "make_ads", "parse_ads", "period_sentence", "successors", "trajectory",
    # collatz
    "ACCELERATED", "RAW", "AffineComposite", "Census", "ParityVector",
    "PeriodicPoint", "Rejection", "admissible_parity_vectors",
    "affine_composite", "bridge_to_quotient", "census_row", "collatz_system",
    "collatz_tau", "cycle_from_parity_vector", "cycle_window_sigma", "ghost_census",
    "parse_parity_vector", "step_exact", "vector_cycle_sentence",
    "vector_cycle_witness",
]
