"""Typechecking: reconstruct the unique derivation of a judgement.

The context of a judgement must mention exactly the free variables of the
term, each used exactly once; grades account for non-linear use through the
modality.  At every term constructor the context is partitioned by
free-variable ownership of the subterms, which makes the premise contexts
order-preserving subsequences of the conclusion context and therefore a
valid shuffle by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import syntax as S
from .parser import print_term, print_type, print_context
from .quantale import Semiring, NatSemiring, grade_repr


class TypeError_(ValueError):
    def __init__(self, message, path=()):
        self.path = tuple(path)
        if self.path:
            message = f"at {'/'.join(self.path)}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Judgement:
    context: S.Context
    term: S.Term
    type: S.TypeExpr

    def __str__(self):
        ctx = print_context(self.context)
        return f"{ctx} |- {print_term(self.term)} : {print_type(self.type)}"


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: Judgement
    premises: tuple
    splits: tuple  # premise contexts, as subsequences of the conclusion ctx

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)


RULES = ("ax", "hp", "I_i", "I_e", "tensor_i", "tensor_e",
         "lolli_i", "lolli_e", "bang_i", "bang_e", "bang_0", "bang_sum")


def _split_context(ctx: S.Context, owners, path):
    """Partition ctx into subsequences by free-variable ownership.

    owners is a list of variable-name sets, one per premise.  Every context
    variable must belong to exactly one owner.
    """
    parts = [[] for _ in owners]
    for entry in ctx:
        name = entry[0]
        hits = [i for i, fv in enumerate(owners) if name in fv]
        if not hits:
            raise TypeError_(f"variable {name} unused by the term", path)
        if len(hits) > 1:
            raise TypeError_(f"variable {name} used by several subterms",
                             path)
        parts[hits[0]].append(entry)
    return [tuple(p) for p in parts]


def _rename_binders(binders, body, taken):
    """Give fresh names to binders clashing with names in `taken`."""
    new = []
    for b in binders:
        if b in taken:
            nb = S.fresh_name(b, taken | set(new) | S.all_names(body))
            body = S.substitute(body, S.Var(nb), b)
            new.append(nb)
        else:
            new.append(b)
    return tuple(new), body


def infer(sig: S.Signature, ctx: S.Context, term: S.Term,
          semiring: Semiring = NatSemiring()) -> Derivation:
    ctx = S.check_context(ctx)
    counts = S.free_var_counts(term)
    for name, n in counts.items():
        if n > 1:
            raise TypeError_(f"variable {name} used twice")
    extra = [x for x, _ in ctx if x not in counts]
    missing = [x for x in counts if x not in dict(ctx)]
    if missing:
        raise TypeError_(f"unbound variable {missing[0]}")
    if extra:
        raise TypeError_(f"variable {extra[0]} unused by the term")
    return _infer(sig, semiring, ctx, term, ())


def check(sig: S.Signature, ctx: S.Context, term: S.Term, ty: S.TypeExpr,
          semiring: Semiring = NatSemiring()) -> Derivation:
    d = infer(sig, ctx, term, semiring)
    if d.conclusion.type != ty:
        raise TypeError_(
            f"type mismatch: inferred {print_type(d.conclusion.type)}, "
            f"expected {print_type(ty)}")
    return d


def _infer(sig, semiring, ctx, term, path) -> Derivation:
    ctx_names = set(S.ctx_names(ctx))

    def sub(premise_ctx, t, step):
        return _infer(sig, semiring, premise_ctx, t, path + (step,))

    def conclude(rule, ty, premises, splits):
        return Derivation(rule, Judgement(ctx, term, ty),
                          tuple(premises), tuple(splits))

    match term:
        case S.Var(name):
            if len(ctx) != 1 or ctx[0][0] != name:
                raise TypeError_(f"unbound variable {name}", path)
            return conclude("hp", ctx[0][1], (), ())

        case S.Star():
            if ctx:
                raise TypeError_(
                    f"variable {ctx[0][0]} unused by the term", path)
            return conclude("I_i", S.UnitType(), (), ())

        case S.OpApp(op, args):
            sort = sig.lookup(op)
            if sort is None:
                raise TypeError_(f"unknown operation symbol {op}", path)
            arg_types, result = sort
            if len(args) != len(arg_types):
                raise TypeError_(
                    f"operation {op} expects {len(arg_types)} arguments, "
                    f"got {len(args)}", path)
            parts = _split_context(ctx, [S.free_vars(a) for a in args], path)
            premises = []
            for i, (part, a, want) in enumerate(zip(parts, args, arg_types)):
                d = sub(part, a, f"{op}#{i}")
                if d.conclusion.type != want:
                    raise TypeError_(
                        f"argument {i} of {op} has type "
                        f"{print_type(d.conclusion.type)}, expected "
                        f"{print_type(want)}", path)
                premises.append(d)
            return conclude("ax", result, premises, parts)

        case S.UnitLet(value, body):
            gv, gb = _split_context(
                ctx, [S.free_vars(value), S.free_vars(body)], path)
            dv = sub(gv, value, "let-unit-value")
            if dv.conclusion.type != S.UnitType():
                raise TypeError_(
                    "let unit scrutinee must have the unit type", path)
            db = sub(gb, body, "let-unit-body")
            return conclude("I_e", db.conclusion.type, (dv, db), (gv, gb))

        case S.TensorPair(left, right):
            gl, gr = _split_context(
                ctx, [S.free_vars(left), S.free_vars(right)], path)
            dl = sub(gl, left, "pair-left")
            dr_ = sub(gr, right, "pair-right")
            ty = S.TensorType(dl.conclusion.type, dr_.conclusion.type)
            return conclude("tensor_i", ty, (dl, dr_), (gl, gr))

        case S.TensorLet(value, x, y, body):
            (x, y), body = _rename_binders((x, y), body, ctx_names)
            gv, gb = _split_context(
                ctx, [S.free_vars(value), S.free_vars(body) - {x, y}], path)
            dv = sub(gv, value, "let-tensor-value")
            match dv.conclusion.type:
                case S.TensorType(a, b):
                    db = sub(gb + ((x, a), (y, b)), body, "let-tensor-body")
                    return conclude("tensor_e", db.conclusion.type,
                                    (dv, db), (gv, gb))
                case other:
                    raise TypeError_(
                        f"let-tensor scrutinee has non-tensor type "
                        f"{print_type(other)}", path)

        case S.Lambda(x, ty, body):
            (x,), body = _rename_binders((x,), body, ctx_names)
            db = sub(ctx + ((x, ty),), body, "fn-body")
            return conclude("lolli_i", S.LolliType(ty, db.conclusion.type),
                            (db,), (ctx,))

        case S.App(fn, arg):
            gf, ga = _split_context(
                ctx, [S.free_vars(fn), S.free_vars(arg)], path)
            df = sub(gf, fn, "app-fn")
            match df.conclusion.type:
                case S.LolliType(a, b):
                    da = sub(ga, arg, "app-arg")
                    if da.conclusion.type != a:
                        raise TypeError_(
                            f"function expects {print_type(a)}, argument "
                            f"has type {print_type(da.conclusion.type)}",
                            path)
                    return conclude("lolli_e", b, (df, da), (gf, ga))
                case other:
                    raise TypeError_(
                        f"applied term has non-function type "
                        f"{print_type(other)}", path)

        case S.Promote(r, grades, args, binders, body):
            binders, body = _rename_binders(binders, body, ctx_names)
            parts = _split_context(ctx, [S.free_vars(a) for a in args], path)
            premises = []
            body_ctx = []
            for i, (part, a, s) in enumerate(zip(parts, args, grades)):
                d = sub(part, a, f"promote-arg#{i}")
                match d.conclusion.type:
                    case S.BangType(g, inner) if g == semiring.mul(r, s):
                        body_ctx.append((binders[i], S.BangType(s, inner)))
                        premises.append(d)
                    case other:
                        want = grade_repr(semiring.mul(r, s))
                        raise TypeError_(
                            f"promotion argument {i} has type "
                            f"{print_type(other)}, expected modality of "
                            f"grade {want}", path)
            db = sub(tuple(body_ctx), body, "promote-body")
            premises.append(db)
            return conclude("bang_i", S.BangType(r, db.conclusion.type),
                            premises, parts)

        case S.Derelict(value):
            dv = sub(ctx, value, "derelict")
            match dv.conclusion.type:
                case S.BangType(g, inner) if g == semiring.one:
                    return conclude("bang_e", inner, (dv,), (ctx,))
                case other:
                    raise TypeError_(
                        f"dereliction requires modality grade "
                        f"{grade_repr(semiring.one)}, got "
                        f"{print_type(other)}", path)

        case S.Discard(value, body):
            gv, gb = _split_context(
                ctx, [S.free_vars(value), S.free_vars(body)], path)
            dv = sub(gv, value, "discard-value")
            match dv.conclusion.type:
                case S.BangType(g, _) if g == semiring.zero:
                    db = sub(gb, body, "discard-body")
                    return conclude("bang_0", db.conclusion.type,
                                    (dv, db), (gv, gb))
                case other:
                    raise TypeError_(
                        f"discard requires modality grade "
                        f"{grade_repr(semiring.zero)}, got "
                        f"{print_type(other)}", path)

        case S.Copy(n, m, value, x, y, body):
            (x, y), body = _rename_binders((x, y), body, ctx_names)
            gv, gb = _split_context(
                ctx, [S.free_vars(value), S.free_vars(body) - {x, y}], path)
            dv = sub(gv, value, "copy-value")
            match dv.conclusion.type:
                case S.BangType(g, inner) if g == semiring.add(n, m):
                    body_ctx = gb + ((x, S.BangType(n, inner)),
                                     (y, S.BangType(m, inner)))
                    db = sub(body_ctx, body, "copy-body")
                    return conclude("bang_sum", db.conclusion.type,
                                    (dv, db), (gv, gb))
                case other:
                    want = grade_repr(semiring.add(n, m))
                    raise TypeError_(
                        f"copy scrutinee must have modality grade {want}, "
                        f"got {print_type(other)}", path)

    raise TypeError_(f"unknown term node {term!r}", path)


def exchange(sig: S.Signature, d: Derivation, i: int,
             semiring: Semiring = NatSemiring()) -> Derivation:
    ctx = d.conclusion.context
    if not (0 <= i < len(ctx) - 1):
        raise TypeError_(f"exchange position {i} out of range")
    swapped = ctx[:i] + (ctx[i + 1], ctx[i]) + ctx[i + 2:]
    out = infer(sig, swapped, d.conclusion.term, semiring)
    if out.conclusion.type != d.conclusion.type:
        raise TypeError_("exchange changed the synthesized type")
    return out


def subst_derivation(sig: S.Signature, d: Derivation, e: Derivation,
                     semiring: Semiring = NatSemiring()) -> Derivation:
    """Substitute e's term for the last context variable of d."""
    ctx = d.conclusion.context
    if not ctx:
        raise TypeError_("no context variable to substitute for")
    x, x_ty = ctx[-1]
    if x_ty != e.conclusion.type:
        raise TypeError_(
            f"substituting a term of type {print_type(e.conclusion.type)} "
            f"for a variable of type {print_type(x_ty)}")
    # Rename the substituend's context variables away from d's.
    e_ctx, e_term = e.conclusion.context, e.conclusion.term
    taken = set(S.ctx_names(ctx)) | S.all_names(d.conclusion.term)
    renamed = []
    for name, ty in e_ctx:
        if name in taken:
            fresh = S.fresh_name(name, taken | S.all_names(e_term))
            e_term = S.substitute(e_term, S.Var(fresh), name)
            name = fresh
        taken.add(name)
        renamed.append((name, ty))
    new_ctx = ctx[:-1] + tuple(renamed)
    new_term = S.substitute(d.conclusion.term, e_term, x)
    out = infer(sig, new_ctx, new_term, semiring)
    if out.conclusion.type != d.conclusion.type:
        raise TypeError_("substitution changed the synthesized type")
    return out


def derivation_sexpr(d: Derivation) -> str:
    """Render a derivation as an S-expression tree."""
    inner = " ".join(derivation_sexpr(p) for p in d.premises)
    head = f'({d.rule} "{d.conclusion}"'
    return f"{head} {inner})" if inner else f"{head})"
