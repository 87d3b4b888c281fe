"""Command-line front end.  Every subcommand prints one JSON report to stdout
and reserves stderr for diagnostics.

Exit codes: 0 for a definite answer, 2 when any embedded search verdict is
UnknownUpTo, 1 for usage problems and errors.  All ring values are rendered
as decimal strings ("-3", "5/7", "(1,2)") so reports survive arbitrary
precision, and field order is fixed so identical runs are byte-identical.

Reports embed enough context to be re-checked later: any object carrying
ring/formula/witness, or ring/sigma/tau/states, is a self-contained claim
that `verify` re-evaluates from scratch.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from .evaluate import (
    Fails,
    Holds,
    RefutedAtPrecision,
    SearchBudget,
    UnknownUpTo,
    check_witness,
    satisfies,
    transport_witness,
)
from .dynamics import (
    ADS,
    CountermodelLimits,
    CycleWitness,
    countermodel_scan,
    decode_cycle_witness,
    find_cycles,
    ghost_report,
    load_ads,
    make_ads,
    period_sentence,
)
from .collatz import (
    RAW,
    VARIANTS,
    PeriodicPoint,
    bridge_to_quotient,
    collatz_tau,
    cycle_from_parity_vector,
    ghost_census,
    vector_cycle_sentence,
    vector_cycle_witness,
)
from .formulas import normalize, parse_formula, print_formula
from .rings import hom_from_string, ring_from_string

TRUE_TEXT = "0 = 0"


# --- rendering ---------------------------------------------------------------

def _render_witness(witness: dict) -> dict:
    return {name: str(el) for name, el in witness.items()}


def _render_budget(budget: SearchBudget):
    if budget is None:
        return None
    return {
        "int_bound": str(budget.int_bound),
        "height_bound": str(budget.height_bound),
        "precision_limit": str(budget.precision_limit),
        "max_nodes": str(budget.max_nodes),
    }


def _render_probes(probes, formula_text: str) -> list:
    out = []
    for probe in probes:
        row = {"precision": str(probe.precision), "modulus": str(probe.modulus),
               "status": probe.status}
        if probe.witness is not None:
            row["ring"] = f"Z/{probe.modulus}"
            row["formula"] = formula_text
            row["witness"] = _render_witness(probe.witness)
        out.append(row)
    return out


def _render_result(result, ring_text: str, formula_text: str) -> dict:
    """EvalResult to JSON; a Holds payload doubles as a verify unit."""
    if isinstance(result, Holds):
        return {
            "status": "holds",
            "ring": ring_text,
            "formula": formula_text,
            "witness": _render_witness(result.witness),
            "disjunct": str(result.disjunct),
            "shell": None if result.shell is None else str(result.shell),
            "nodes": str(result.nodes),
        }
    if isinstance(result, Fails):
        return {"status": "fails", "nodes": str(result.nodes)}
    if isinstance(result, RefutedAtPrecision):
        return {
            "status": "refuted_at_precision",
            "precision": str(result.precision),
            "modulus": str(result.modulus),
            "probes": _render_probes(result.probes, formula_text),
            "nodes": str(result.nodes),
        }
    if isinstance(result, UnknownUpTo):
        return {
            "status": "unknown_up_to",
            "budget": _render_budget(result.budget),
            "probes": _render_probes(result.probes, formula_text),
            "nodes": str(result.nodes),
            "completed_shell": (None if result.completed_shell is None
                                else str(result.completed_shell)),
        }
    raise ValueError(f"unrenderable result {result!r}")


def _result_exit(*results) -> int:
    return 2 if any(isinstance(r, UnknownUpTo) for r in results) else 0


def _render_states(states) -> list:
    return [[str(el) for el in state] for state in states]


def _render_cycle_unit(ads: ADS, states) -> dict:
    """A relational cycle as a self-contained claim verify can re-check."""
    return {
        "ring": str(ads.ring),
        "sigma": print_formula(ads.sigma),
        "tau": print_formula(ads.tau),
        "state_vars": list(ads.state_vars),
        "next_vars": list(ads.next_vars),
        "states": _render_states(states),
    }


def _ads_inputs(ads: ADS) -> dict:
    return {
        "arity": str(ads.arity),
        "sigma": print_formula(ads.sigma),
        "tau": print_formula(ads.tau),
        "state_vars": list(ads.state_vars),
        "next_vars": list(ads.next_vars),
    }


# --- input parsing -------------------------------------------------------------

def _parse_payload(text):
    """Element syntax: integers ("-3"), fractions ("5/7"), pairs ("(1,2)")."""
    if isinstance(text, int):
        return text
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        depth = 0
        for i, ch in enumerate(text):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 1:
                return (_parse_payload(text[1:i]), _parse_payload(text[i + 1:-1]))
        raise ValueError(f"malformed pair {text!r}")
    if "/" in text:
        num, _, den = text.partition("/")
        return Fraction(int(num), int(den))
    return int(text)


def _parse_assignments(pairs) -> dict:
    env = {}
    for pair in pairs or ():
        name, sep, value = pair.partition("=")
        if not sep or not name:
            raise ValueError(f"--assign wants name=value, got {pair!r}")
        env[name.strip()] = _parse_payload(value)
    return env


def _parse_witness_json(text: str) -> dict:
    data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError("witness JSON must be an object of name -> value")
    return {name: _parse_payload(value) for name, value in data.items()}


def _read_formula(path: str):
    text = Path(path).read_text(encoding="utf-8")
    formula = parse_formula(text)
    return formula, print_formula(formula)


def _budget_from(args) -> SearchBudget:
    return SearchBudget(int_bound=args.int_bound, height_bound=args.height,
                        precision_limit=args.precision, max_nodes=args.max_nodes)


def _add_budget_flags(sp):
    sp.add_argument("--int-bound", type=int, default=10_000, metavar="B",
                    help="integer witness box bound (default 10000)")
    sp.add_argument("--height", type=int, default=1_000, metavar="H",
                    help="localization height bound (default 1000)")
    sp.add_argument("--precision", type=int, default=12, metavar="N",
                    help="modular probe tower limit (default 12)")
    sp.add_argument("--max-nodes", type=int, default=2_000_000, metavar="M",
                    help="total candidate placements cap (default 2000000)")


# --- report assembly -------------------------------------------------------------

def _emit(args, command: str, inputs: dict, result, budget, started: float) -> None:
    report = {
        "schema_version": "1",
        "command": command,
        "inputs": inputs,
        "result": result,
        "budget": _render_budget(budget),
    }
    if args.timing:
        report["timing_ms"] = int((time.monotonic() - started) * 1000)
    sys.stdout.write(json.dumps(report, indent=2) + "\n")


# --- subcommands ---------------------------------------------------------------

def _cmd_parse(args, started: float) -> int:
    text = Path(args.file).read_text(encoding="utf-8")
    formula = parse_formula(text)
    nf = normalize(formula)
    inputs = {"file": args.file}
    result = {
        "formula": print_formula(formula),
        "free_vars": list(nf.free_vars),
        "normal_form": {
            "bound_vars": list(nf.bound_vars),
            "disjuncts": str(len(nf.matrix)),
            "equations": str(sum(len(d) for d in nf.matrix)),
        },
    }
    _emit(args, "parse", inputs, result, None, started)
    return 0


def _cmd_eval(args, started: float) -> int:
    ring = ring_from_string(args.ring)
    formula, formula_text = _read_formula(args.formula)
    env = _parse_assignments(args.assign)
    budget = _budget_from(args)
    result = satisfies(ring, formula, env=env or None, budget=budget)
    inputs = {
        "ring": args.ring,
        "formula": formula_text,
        "assign": {name: str(value) for name, value in env.items()},
    }
    _emit(args, "eval", inputs, _render_result(result, args.ring, formula_text),
          budget, started)
    return _result_exit(result)


def _cmd_transport(args, started: float) -> int:
    hom = hom_from_string(args.hom)
    formula, formula_text = _read_formula(args.formula)
    witness = _parse_witness_json(args.witness)
    moved = transport_witness(hom, formula, witness)
    inputs = {
        "hom": args.hom,
        "formula": formula_text,
        "witness": {name: str(value) for name, value in witness.items()},
    }
    result = {
        "moved": {
            "ring": str(hom.target),
            "formula": formula_text,
            "witness": _render_witness(moved),
        },
        "verified": True,
    }
    _emit(args, "transport", inputs, result, None, started)
    return 0


def _cmd_cycles(args, started: float) -> int:
    ring = ring_from_string(args.ring)
    ads = load_ads(args.ads, ring)
    cycles = find_cycles(ads, args.kmax)
    inputs = {"ads": _ads_inputs(ads), "ring": args.ring, "kmax": str(args.kmax)}
    result = {
        "count": str(len(cycles)),
        "cycles": [dict(_render_cycle_unit(ads, c.states), k=str(c.k))
                   for c in cycles],
    }
    _emit(args, "cycles", inputs, result, None, started)
    return 0


def _cmd_period(args, started: float) -> int:
    ring = ring_from_string(args.ring)
    ads = load_ads(args.ads, ring)
    sentence = period_sentence(ads, args.k)
    sentence_text = print_formula(sentence)
    budget = _budget_from(args)
    result = satisfies(ring, sentence, budget=budget)
    inputs = {"ads": _ads_inputs(ads), "ring": args.ring, "k": str(args.k)}
    payload = {"sentence": sentence_text,
               "result": _render_result(result, args.ring, sentence_text)}
    if isinstance(result, Holds):
        orbit = decode_cycle_witness(ads, args.k, result.witness)
        payload["orbit"] = _render_cycle_unit(ads, orbit.states)
        payload["canonical_orbit"] = _render_states(orbit.canonical().states)
    _emit(args, "period", inputs, payload, budget, started)
    return _result_exit(result)


def _cmd_ghost(args, started: float) -> int:
    hom = hom_from_string(args.hom)
    budget = _budget_from(args)
    hint = None
    if args.vector is not None:
        point = cycle_from_parity_vector(args.vector, args.variant)
        if not isinstance(point, PeriodicPoint):
            raise ValueError(f"vector {args.vector} has no exact cycle: {point.reason}")
        sentence = vector_cycle_sentence(args.vector, args.variant)
        if not args.no_hint:
            hint = vector_cycle_witness(point, hom.target)
        inputs = {"vector": args.vector, "variant": args.variant, "hom": args.hom,
                  "hint": None if hint is None else _render_witness(hint)}
    else:
        ads = load_ads(args.ads, hom.source)
        sentence = period_sentence(ads, args.k)
        inputs = {"ads": _ads_inputs(ads), "k": str(args.k), "hom": args.hom,
                  "hint": None}
    sentence_text = print_formula(sentence)
    report = ghost_report(sentence, hom, budget=budget, extension_hint=hint)
    result = {
        "sentence": sentence_text,
        "classification": report.classification,
        "witness_outside_image": report.witness_outside_image,
        "justification": report.justification,
        "base": _render_result(report.base, str(hom.source), sentence_text),
        "extension": _render_result(report.extension, str(hom.target), sentence_text),
    }
    _emit(args, "ghost", inputs, result, budget, started)
    return _result_exit(report.base, report.extension)


def _cmd_countermodel(args, started: float) -> int:
    formula, formula_text = _read_formula(args.formula)
    axiom_files = sorted(Path(args.axioms).glob("*.pef")) if args.axioms else []
    axioms = []
    axiom_texts = {}
    for i, path in enumerate(axiom_files):
        ax = parse_formula(path.read_text(encoding="utf-8"))
        axioms.append(ax)
        axiom_texts[f"axiom {i + 1}"] = print_formula(ax)
    budget = _budget_from(args)
    moduli = tuple(int(m) for m in args.moduli.split(",")) if args.moduli else ()
    limits = CountermodelLimits(moduli=moduli, max_modulus=args.max_n,
                                include_products=not args.no_products,
                                budget=budget)
    scan = countermodel_scan(formula, axioms, limits)
    inputs = {
        "formula": formula_text,
        "axioms": axiom_texts,
        "axiom_files": [p.name for p in axiom_files],
        "max_n": str(args.max_n),
        "moduli": [str(m) for m in moduli],
    }
    if scan.found is None:
        result = {
            "found": None,
            "candidates_tried": str(scan.candidates_tried),
            "inconclusive": list(scan.inconclusive),
        }
        _emit(args, "countermodel", inputs, result, budget, started)
        return 2 if scan.inconclusive else 0

    cm = scan.found
    from .dynamics import _existential_closure, _grouped_queries  # shared shape

    queries = []
    for labels, query in _grouped_queries(formula, axioms):
        queries.append({
            "labels": list(labels),
            "ring": str(cm.ring),
            "formula": print_formula(query),
            "witness": _render_witness(cm.witnesses[labels[0]]),
        })
    transported = {}
    for i in range(len(axioms)):
        label = f"axiom {i + 1}"
        if label in cm.transported:
            transported[label] = {
                "ring": str(cm.ring),
                "formula": print_formula(_existential_closure(axioms[i])),
                "witness": _render_witness(cm.transported[label]),
            }
    result = {
        "found": {
            "ring": str(cm.ring),
            "candidates_tried": str(cm.candidates_tried),
            "queries": queries,
            "base_witnesses": {label: _render_witness(w)
                               for label, w in cm.base_witnesses.items()},
            "transported": transported,
            "transported_ok": cm.transported_ok,
        },
        "candidates_tried": str(scan.candidates_tried),
        "inconclusive": list(scan.inconclusive),
    }
    _emit(args, "countermodel", inputs, result, budget, started)
    return 0


def _census_class(point: PeriodicPoint) -> dict:
    tau_text = print_formula(collatz_tau(point.variant))
    return {
        "vector": str(point.vector),
        "kind": point.kind,
        "value": str(point.value),
        "cycle": {
            "ring": "Zloc/2",
            "sigma": TRUE_TEXT,
            "tau": tau_text,
            "state_vars": ["x"],
            "next_vars": ["x'"],
            "states": [[str(value)] for value in point.orbit],
        },
    }


def _cmd_census(args, started: float) -> int:
    rows = ghost_census(args.kmax, args.variant)
    inputs = {"kmax": str(args.kmax), "variant": args.variant}
    rendered = []
    for row in rows:
        rendered.append({
            "k": str(row.k),
            "admissible": str(row.admissible_count),
            "classes": [_census_class(p) for p in row.points],
            "integer": str(len(row.integer_points)),
            "ghost": str(len(row.ghost_points)),
            "rejections": [{"vector": str(r.vector), "reason": r.reason}
                           for r in row.rejections],
        })
    result = {
        "rows": rendered,
        "totals": {
            "integer": str(sum(len(r.integer_points) for r in rows)),
            "ghost": str(sum(len(r.ghost_points) for r in rows)),
        },
    }
    if args.table:
        _print_census_table(rows)
        return 0
    _emit(args, "collatz census", inputs, result, None, started)
    return 0


def _print_census_table(rows) -> None:
    header = (f"{'k':>3} {'admissible':>11} {'classes':>8} "
              f"{'integer':>8} {'ghost':>6}  ghost points")
    lines = [header, "-" * len(header)]
    for row in rows:
        ghosts = ", ".join(f"{p.value} [{p.vector}]" for p in row.ghost_points)
        lines.append(f"{row.k:>3} {row.admissible_count:>11} {len(row.points):>8} "
                     f"{len(row.integer_points):>8} {len(row.ghost_points):>6}  {ghosts}")
    sys.stdout.write("\n".join(lines) + "\n")


def _cmd_bridge(args, started: float) -> int:
    point = cycle_from_parity_vector(args.vector, args.variant)
    if not isinstance(point, PeriodicPoint):
        raise ValueError(f"vector {args.vector} has no exact cycle: {point.reason}")
    witness = bridge_to_quotient(point, args.target_precision)
    modulus = 2 ** args.target_precision
    quotient_ads = make_ads(ring_from_string(f"Z/{modulus}"),
                            collatz_tau(args.variant), arity=1,
                            state_vars=("x",), next_vars=("x'",))
    inputs = {"vector": args.vector, "variant": args.variant,
              "precision": str(args.target_precision)}
    result = {
        "value": str(point.value),
        "orbit": [str(v) for v in point.orbit],
        "ghost": point.ghost,
        "modulus": str(modulus),
        "reduced": dict(_render_cycle_unit(quotient_ads, witness.states),
                        verified=True),
    }
    _emit(args, "collatz bridge", inputs, result, None, started)
    return 0


# --- verify: re-check everything a report claims --------------------------------

def _iter_units(node, path: str):
    if isinstance(node, dict):
        keys = set(node)
        if {"ring", "formula", "witness"} <= keys:
            yield path, "formula", node
        elif {"ring", "sigma", "tau", "states", "state_vars", "next_vars"} <= keys:
            yield path, "cycle", node
        else:
            for key, child in node.items():
                yield from _iter_units(child, f"{path}.{key}" if path else key)
    elif isinstance(node, list):
        for i, child in enumerate(node):
            yield from _iter_units(child, f"{path}[{i}]")


def _check_formula_unit(unit: dict) -> bool:
    ring = ring_from_string(unit["ring"])
    formula = parse_formula(unit["formula"])
    witness = {name: _parse_payload(value)
               for name, value in unit["witness"].items()}
    return check_witness(ring, formula, witness)


def _check_cycle_unit(unit: dict) -> bool:
    ring = ring_from_string(unit["ring"])
    ads = make_ads(ring, unit["tau"], sigma=unit["sigma"],
                   arity=len(unit["state_vars"]),
                   state_vars=tuple(unit["state_vars"]),
                   next_vars=tuple(unit["next_vars"]))
    states = tuple(
        tuple(ring.element(_parse_payload(value)) for value in state)
        for state in unit["states"])
    return CycleWitness(states).verify(ads)


def _cmd_verify(args, started: float) -> int:
    report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    units = []
    ok = True
    for path, kind, unit in _iter_units(report, ""):
        passed = (_check_formula_unit(unit) if kind == "formula"
                  else _check_cycle_unit(unit))
        units.append({"path": path, "kind": kind, "ok": passed})
        ok = ok and passed

    replayed = None
    if report.get("command") == "transport":
        inputs = report["inputs"]
        moved = transport_witness(hom_from_string(inputs["hom"]),
                                  parse_formula(inputs["formula"]),
                                  {k: _parse_payload(v)
                                   for k, v in inputs["witness"].items()})
        replayed = ({name: str(el) for name, el in moved.items()}
                    == report["result"]["moved"]["witness"])
        ok = ok and replayed

    result = {
        "report": args.report,
        "command": report.get("command"),
        "checked": str(len(units)),
        "units": units,
        "verified": ok,
    }
    if replayed is not None:
        result["transport_replayed"] = replayed
    _emit(args, "verify", {"report": args.report}, result, None, started)
    return 0 if ok else 1


# --- argument plumbing -----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the report contract reserves 2 for
    UnknownUpTo, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ghostring",
                     description="positive existential sentences over rings: "
                                 "search, transport, dynamics, 3x+1 census")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(target, name, func, **kwargs):
        sp = target.add_parser(name, **kwargs)
        sp.set_defaults(func=func)
        sp.add_argument("--timing", action="store_true",
                        help="include timing_ms in the report")
        return sp

    sp = add(sub, "parse", _cmd_parse, help="check, normalize, and echo a .pef file")
    sp.add_argument("file", help=".pef formula file")

    sp = add(sub, "eval", _cmd_eval, help="decide a formula over a ring")
    sp.add_argument("--ring", required=True,
                    help='ring name, e.g. "Z", "Z/8", "Zloc/2"')
    sp.add_argument("--formula", required=True, help=".pef formula file")
    sp.add_argument("--assign", action="append", metavar="NAME=VALUE",
                    help="free variable assignment (repeatable)")
    _add_budget_flags(sp)

    sp = add(sub, "transport", _cmd_transport,
             help="push a verified witness through a homomorphism")
    sp.add_argument("--hom", required=True,
                    help='map name, e.g. "mod:4", "loc2->mod:64"')
    sp.add_argument("--formula", required=True, help=".pef formula file")
    sp.add_argument("--witness", required=True,
                    help='JSON object, e.g. \'{"x": "6", "y": "3"}\'')

    sp = add(sub, "cycles", _cmd_cycles,
             help="all relational cycles over a finite ring")
    sp.add_argument("--ads", required=True, help=".ads system file")
    sp.add_argument("--ring", required=True)
    sp.add_argument("--kmax", required=True, type=int, help="maximum cycle length")

    sp = add(sub, "period", _cmd_period, help="existence of a period-k orbit")
    sp.add_argument("--ads", required=True, help=".ads system file")
    sp.add_argument("--ring", required=True)
    sp.add_argument("--k", required=True, type=int, help="period length")
    _add_budget_flags(sp)

    sp = add(sub, "ghost", _cmd_ghost,
             help="compare a cycle sentence across a base ring and an extension")
    sp.add_argument("--hom", required=True,
                    help="map from the base ring into the extension")
    sp.add_argument("--ads", help=".ads system file (period route)")
    sp.add_argument("--k", type=int, help="period length (period route)")
    sp.add_argument("--vector", help='parity vector route, e.g. "101000"')
    sp.add_argument("--variant", choices=VARIANTS, default=RAW)
    sp.add_argument("--no-hint", action="store_true",
                    help="search the extension instead of checking the exact orbit")
    _add_budget_flags(sp)

    sp = add(sub, "countermodel", _cmd_countermodel,
             help="search finite quotients for a ring satisfying target and axioms")
    sp.add_argument("--formula", required=True, help=".pef target sentence")
    sp.add_argument("--axioms", help="directory of .pef axiom files (sorted by name)")
    sp.add_argument("--max-n", type=int, default=64, metavar="N",
                    help="largest quotient modulus to scan (default 64)")
    sp.add_argument("--moduli", metavar="LIST",
                    help='explicit comma-separated moduli, e.g. "64" (skips the scan)')
    sp.add_argument("--no-products", action="store_true",
                    help="do not try binary products of quotients")
    _add_budget_flags(sp)

    collatz = sub.add_parser("collatz", help="3x+1 cycle analysis")
    csub = collatz.add_subparsers(dest="collatz_command", required=True,
                                  parser_class=_Parser)

    sp = add(csub, "census", _cmd_census,
             help="solve every admissible parity vector up to a length")
    sp.add_argument("--kmax", required=True, type=int)
    sp.add_argument("--variant", choices=VARIANTS, default=RAW)
    sp.add_argument("--table", action="store_true",
                    help="print an aligned text table instead of JSON")

    sp = add(csub, "bridge", _cmd_bridge,
             help="reduce an exact cycle into Z/2^N and re-verify it there")
    sp.add_argument("--vector", required=True, help='parity vector, e.g. "101000"')
    sp.add_argument("--precision", dest="target_precision", required=True,
                    type=int, metavar="N", help="target power of 2")
    sp.add_argument("--variant", choices=VARIANTS, default=RAW)

    sp = add(sub, "verify", _cmd_verify,
             help="re-check every witness a report embeds")
    sp.add_argument("--report", required=True, help="JSON report file")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "ghost":
        vector_route = args.vector is not None
        period_route = args.ads is not None or args.k is not None
        if vector_route == period_route:
            parser.error("ghost needs either --vector or both --ads and --k")
        if period_route and (args.ads is None or args.k is None):
            parser.error("the period route needs both --ads and --k")
    started = time.monotonic()
    try:
        return args.func(args, started)
    except (ValueError, OSError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
