"""Command-line workbench.

Subcommands tie theories, terms, proof scripts, and models together:

    gvlam check THEORY TERM [--context CTX] [--emit-derivation]
    gvlam prove THEORY PROOF
    gvlam bound THEORY TERM_A TERM_B [--context CTX] [--normalize-first]
    gvlam model {eval,distance,verify-axioms,verify-laws,prob-sweep,
                 gaussian-grid} ...
    gvlam oracle {perms,tv,shuffles,nonexpansive} ...

Exit codes: 0 success, 1 type error, 2 proof error, 3 synthesis failure,
4 model violation, 64 usage, 65 parse or I/O error.  All reports iterate in
sorted order so output is byte-identical across runs.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from fractions import Fraction

from . import __version__
from . import syntax as S
from .metmodel import (ModelError, check_axiom, check_comonad_laws,
                       ExplicitSpace, interp, model_distance, timed_model,
                       timed_space)
from .oracles import (brute_interleavings, brute_tv, enumerate_nonexpansive,
                      perm_group)
from .parser import (ParseError, parse_context, parse_term, print_context,
                     print_term, print_type)
from .probmodel import (ProbError, diaconis_sweep, gaussian_phi,
                        gaussian_tv_numeric, no_replace_sampler,
                        replace_sampler, tv_distance)
from .proofscript import ScriptError, load_proof, parse_proof
from .quantale import (INF, QuantaleError, SymbolicBound, num_cmp,
                       value_repr)
from .rewrite import MatchError
from .syntax import SyntaxError_
from .theory import TheoryError, load_theory
from .typecheck import TypeError_, derivation_sexpr, infer
from .vequation import ProofError, SynthesisFailure, synthesize, validate

EXIT_OK = 0
EXIT_TYPE = 1
EXIT_PROOF = 2
EXIT_SYNTH = 3
EXIT_MODEL = 4
EXIT_USAGE = 64
EXIT_IO = 65


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


# ---------------------------------------------------------------------------
# Input helpers

def _read_text_arg(arg: str) -> str:
    """Treat the argument as a file when one exists, else as literal text."""
    if os.path.isfile(arg):
        with open(arg, encoding="utf-8") as fh:
            return fh.read().strip()
    return arg


def _term_arg(arg: str) -> S.Term:
    return parse_term(_read_text_arg(arg))


def _context_arg(arg) -> S.Context:
    return parse_context(arg) if arg else ()


_MODEL_RE = re.compile(r"^timed(?:\((\d+)\))?$")


def _build_model(theory, spec: str):
    m = _MODEL_RE.match(spec.strip())
    if not m:
        raise TheoryError(f"unknown model {spec!r}; expected timed(N)")
    n_max = int(m.group(1)) if m.group(1) else 32
    return timed_model(theory.signature, n_max)


def _parse_grades(spec: str):
    spec = spec.strip()
    m = re.match(r"^(\d+)\.\.(\d+)$", spec)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        return list(range(lo, hi + 1))
    return sorted({int(p) for p in spec.split(",") if p.strip()})


def _law_spaces(max_size: int):
    """A deterministic family of small metric spaces, one per size."""
    spaces = []
    if max_size >= 1:
        spaces.append(ExplicitSpace((0,), {}, name="pt"))
    if max_size >= 2:
        spaces.append(ExplicitSpace(
            (0, 1), {(0, 1): Fraction(3, 2), (1, 0): Fraction(3, 2)},
            name="pair"))
    if max_size >= 3:
        d = {(0, 1): Fraction(1), (1, 0): Fraction(1),
             (1, 2): Fraction(2), (2, 1): Fraction(2),
             (0, 2): Fraction(3), (2, 0): Fraction(3)}
        spaces.append(ExplicitSpace((0, 1, 2), d, name="path3"))
    if max_size >= 4:
        spaces.append(timed_space(3))
    return spaces


# ---------------------------------------------------------------------------
# Commands

def cmd_check(args) -> int:
    theory = load_theory(args.theory)
    ctx = _context_arg(args.context)
    term = _term_arg(args.term)
    d = infer(theory.signature, ctx, term, theory.semiring)
    print(print_type(d.conclusion.type))
    if args.emit_derivation:
        print(derivation_sexpr(d))
    return EXIT_OK


def cmd_prove(args) -> int:
    theory = load_theory(args.theory)
    proof = load_proof(args.proof)
    eq = validate(theory, proof)
    d = infer(theory.signature, eq.context, eq.lhs, theory.semiring)
    print(f"{eq} : {print_type(d.conclusion.type)}")
    print(f"bound: {value_repr(eq.bound)}")
    if isinstance(eq.bound, SymbolicBound):
        lo, hi = eq.bound.enclosure()
        print(f"enclosure: [{lo}, {hi}]")
    return EXIT_OK


def cmd_bound(args) -> int:
    theory = load_theory(args.theory)
    ctx = _context_arg(args.context)
    a, b = _term_arg(args.term_a), _term_arg(args.term_b)
    try:
        eq, _proof = synthesize(theory, ctx, a, b,
                                normalize_first=args.normalize_first)
    except SynthesisFailure:
        print("FAIL")
        return EXIT_SYNTH
    print(value_repr(eq.bound))
    return EXIT_OK


def cmd_model_eval(args) -> int:
    theory = load_theory(args.theory)
    model = _build_model(theory, args.model)
    ctx = _context_arg(args.context)
    term = _term_arg(args.term)
    d = infer(theory.signature, ctx, term, theory.semiring)
    mm = interp(model, d)
    for pt in mm.dom.points:
        print(f"{pt!r} |-> {mm(pt)!r}")
    return EXIT_OK


def cmd_model_distance(args) -> int:
    theory = load_theory(args.theory)
    model = _build_model(theory, args.model)
    ctx = _context_arg(args.context)
    a, b = _term_arg(args.term_a), _term_arg(args.term_b)
    print(value_repr(model_distance(model, theory.signature, ctx, a, b)))
    return EXIT_OK


def _axiom_param_grid(name, family, max_index):
    if name in ("wait", "wait_sum"):
        return [{"n": i, "m": j}
                for i in range(max_index + 1) for j in range(max_index + 1)]
    params = getattr(family, "params", ())
    if not params:
        return [{}]
    return None  # schematic family with no default grid


def cmd_model_verify_axioms(args) -> int:
    theory = load_theory(args.theory)
    model = _build_model(theory, args.model)
    failures = 0
    for name in sorted(theory.axioms):
        family = theory.axioms[name]
        grid = _axiom_param_grid(name, family, args.max)
        if grid is None:
            print(f"skip {name} (schematic family without a default grid)")
            continue
        for params in grid:
            label = ",".join(f"{k}={v}" for k, v in sorted(params.items()))
            try:
                inst = family.instantiate(theory, dict(params))
                ok = check_axiom(model, theory.signature, inst.context,
                                 inst.lhs, inst.rhs, inst.bound)
            except (ProofError, ModelError) as exc:
                print(f"skip {name}[{label}] ({exc})")
                continue
            status = "ok" if ok else "FAIL"
            print(f"{status:4s} {name}[{label}]")
            if not ok:
                failures += 1
    print(f"failures: {failures}")
    return EXIT_MODEL if failures else EXIT_OK


def cmd_model_verify_laws(args) -> int:
    grades = _parse_grades(args.grades)
    spaces = _law_spaces(args.max_space)
    report = check_comonad_laws(grades, spaces)
    if args.verbose:
        print(report.summary())
    else:
        for name, ok, detail in report.failures:
            print(f"FAIL {name}" + (f" ({detail})" if detail else ""))
        for note in report.notes:
            print(f"note {note}")
    print(f"checks: {len(report.checks)}  failures: {len(report.failures)}")
    return EXIT_MODEL if report.failures else EXIT_OK


def cmd_model_prob_sweep(args) -> int:
    rows = diaconis_sweep(args.max)
    bad = 0
    if args.format == "csv":
        print("k,m,n,tv,bound,ok")
        for k, m, n, tv, bound, ok in rows:
            print(f"{k},{m},{n},{tv},{bound},{str(ok).lower()}")
            bad += not ok
    else:
        for k, m, n, tv, bound, ok in rows:
            status = "ok" if ok else "FAIL"
            print(f"{status:4s} k={k} m={m} n={n} tv={tv} bound={bound}")
            bad += not ok
    return EXIT_MODEL if bad else EXIT_OK


def _grid_values():
    mus = [Fraction(-1), Fraction(0), Fraction(1)]
    sigmas = [Fraction(1, 2), Fraction(1), Fraction(2)]
    for mu1 in mus:
        for s1 in sigmas:
            for mu2 in mus:
                for s2 in sigmas:
                    yield mu1, s1, mu2, s2


def cmd_model_gaussian_grid(args) -> int:
    bad = 0
    print("mu1,sigma1,mu2,sigma2,tv,phi_lo,phi_hi,ok")
    for mu1, s1, mu2, s2 in _grid_values():
        phi = gaussian_phi(1, mu1, s1, mu2, s2)
        if isinstance(phi, SymbolicBound):
            lo, hi = phi.enclosure()
        else:
            lo = hi = phi
        tv = gaussian_tv_numeric(mu1, s1, mu2, s2)
        ok = tv <= float(hi) + 1e-6
        print(f"{mu1},{s1},{mu2},{s2},{tv:.9f},{float(lo):.12f},"
              f"{float(hi):.12f},{str(ok).lower()}")
        bad += not ok
    return EXIT_MODEL if bad else EXIT_OK


def cmd_oracle_perms(args) -> int:
    for p in perm_group(args.n):
        print(" ".join(map(str, p)))
    return EXIT_OK


def cmd_oracle_tv(args) -> int:
    p = replace_sampler(args.k, args.m, args.n)
    q = no_replace_sampler(args.k, args.m, args.n)
    primary = tv_distance(p, q)
    reference = brute_tv(p, q)
    print(f"primary:   {primary}")
    print(f"reference: {reference}")
    if primary != reference:
        print("MISMATCH")
        return EXIT_MODEL
    return EXIT_OK


def cmd_oracle_shuffles(args) -> int:
    parts = [parse_context(p) for p in args.parts]
    primary = S.enumerate_shuffles(parts)
    reference = brute_interleavings(parts)
    print(f"primary:   {len(primary)}")
    print(f"reference: {len(reference)}")
    if sorted(map(repr, primary)) != sorted(map(repr, reference)):
        print("MISMATCH")
        return EXIT_MODEL
    for shuffle in primary:
        print(print_context(shuffle))
    return EXIT_OK


def cmd_oracle_nonexpansive(args) -> int:
    from .metmodel import enumerate_tables
    x, y = timed_space(args.dom), timed_space(args.cod)
    primary = list(enumerate_tables(x, y))
    reference = enumerate_nonexpansive(x, y)
    print(f"primary:   {len(primary)}")
    print(f"reference: {len(reference)}")
    if sorted(primary) != sorted(reference):
        print("MISMATCH")
        return EXIT_MODEL
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing

def build_parser() -> _Parser:
    top = _Parser(prog="gvlam", description=__doc__)
    top.add_argument("--version", action="version", version=__version__)
    subs = top.add_subparsers(dest="command", required=True)

    p = subs.add_parser("check", help="typecheck a term against a theory")
    p.add_argument("theory")
    p.add_argument("term", help="term file or literal term text")
    p.add_argument("--context", default="")
    p.add_argument("--emit-derivation", action="store_true")
    p.set_defaults(fn=cmd_check)

    p = subs.add_parser("prove", help="validate a proof script")
    p.add_argument("theory")
    p.add_argument("proof")
    p.set_defaults(fn=cmd_prove)

    p = subs.add_parser("bound", help="synthesize a bound between two terms")
    p.add_argument("theory")
    p.add_argument("term_a")
    p.add_argument("term_b")
    p.add_argument("--context", default="")
    p.add_argument("--normalize-first", action="store_true")
    p.set_defaults(fn=cmd_bound)

    model = subs.add_parser("model", help="model evaluation and audits")
    msubs = model.add_subparsers(dest="model_command", required=True)

    p = msubs.add_parser("eval")
    p.add_argument("theory")
    p.add_argument("term")
    p.add_argument("--context", default="")
    p.add_argument("--model", default="timed(32)")
    p.set_defaults(fn=cmd_model_eval)

    p = msubs.add_parser("distance")
    p.add_argument("theory")
    p.add_argument("term_a")
    p.add_argument("term_b")
    p.add_argument("--context", default="")
    p.add_argument("--model", default="timed(32)")
    p.set_defaults(fn=cmd_model_distance)

    p = msubs.add_parser("verify-axioms")
    p.add_argument("theory")
    p.add_argument("--model", default="timed(32)")
    p.add_argument("--max", type=int, default=10,
                   help="largest schematic index to instantiate")
    p.set_defaults(fn=cmd_model_verify_axioms)

    p = msubs.add_parser("verify-laws")
    p.add_argument("--grades", default="0..4")
    p.add_argument("--max-space", type=int, default=4)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_model_verify_laws)

    p = msubs.add_parser("prob-sweep")
    p.add_argument("--max", type=int, default=8)
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.set_defaults(fn=cmd_model_prob_sweep)

    p = msubs.add_parser("gaussian-grid")
    p.set_defaults(fn=cmd_model_gaussian_grid)

    oracle = subs.add_parser("oracle", help="brute-force reference audits")
    osubs = oracle.add_subparsers(dest="oracle_command", required=True)

    p = osubs.add_parser("perms")
    p.add_argument("n", type=int)
    p.set_defaults(fn=cmd_oracle_perms)

    p = osubs.add_parser("tv")
    p.add_argument("k", type=int)
    p.add_argument("m", type=int)
    p.add_argument("n", type=int)
    p.set_defaults(fn=cmd_oracle_tv)

    p = osubs.add_parser("shuffles")
    p.add_argument("parts", nargs="+",
                   help="contexts like 'x : X, y : X' to interleave")
    p.set_defaults(fn=cmd_oracle_shuffles)

    p = osubs.add_parser("nonexpansive")
    p.add_argument("dom", type=int, help="largest point of the domain line")
    p.add_argument("cod", type=int, help="largest point of the codomain line")
    p.set_defaults(fn=cmd_oracle_nonexpansive)

    return top


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args)
    except _UsageError as exc:
        print(f"gvlam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ScriptError, TheoryError, SyntaxError_,
            OSError) as exc:
        print(f"gvlam: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TypeError_ as exc:
        print(f"gvlam: type error: {exc}", file=sys.stderr)
        return EXIT_TYPE
    except (ProofError, MatchError, QuantaleError) as exc:
        print(f"gvlam: proof error: {exc}", file=sys.stderr)
        return EXIT_PROOF
    except SynthesisFailure as exc:
        print(f"gvlam: synthesis failure: {exc}", file=sys.stderr)
        return EXIT_SYNTH
    except (ModelError, ProbError) as exc:
        print(f"gvlam: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
