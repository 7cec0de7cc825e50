"""Checked equational rewriting.

Every row of the equational schema is exposed as a bidirectional,
position-addressed rewrite on derivations.  Rows whose statement involves a
substitution image (eta rows and commuting conversions) cannot be matched
first-order; for those the caller supplies the context term and the hole
variable in the step's bindings, and the engine verifies the decomposition
by an alpha-equality check before rewriting.

A small oriented subset (the beta and unit-like rows) drives the
normalizer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from . import syntax as S
from .parser import print_term
from .quantale import Semiring, NatSemiring
from .typecheck import Derivation, infer


class MatchError(ValueError):
    pass


class EngineError(RuntimeError):
    """A rewrite produced an ill-typed term; signals an internal bug."""


class SchemaId(enum.Enum):
    # monoidal structure
    TENSOR_BETA = "tensor-beta"
    TENSOR_ETA = "tensor-eta"
    UNIT_BETA = "unit-beta"
    UNIT_ETA = "unit-eta"
    # closed structure
    LOLLI_BETA = "lolli-beta"
    LOLLI_ETA = "lolli-eta"
    # symmetric comonadic structure
    BANG_BETA = "bang-beta"
    BANG_ETA = "bang-eta"
    PROMOTE_ASSOC = "promote-assoc"
    PROMOTE_SYMM = "promote-symm"
    # commutative comonoid structure
    COPY_UNIT_LEFT = "copy-unit-left"
    COPY_UNIT_RIGHT = "copy-unit-right"
    COPY_ASSOC = "copy-assoc"
    COPY_COMM = "copy-comm"
    # interaction between comonoid and comonad
    DISCARD_PROMOTE = "discard-promote"
    PROMOTE_DISCARD = "promote-discard"
    COPY_PROMOTE = "copy-promote"
    PROMOTE_COPY = "promote-copy"
    # commuting conversions
    CC_UNIT = "cc-unit"
    CC_TENSOR = "cc-tensor"
    CC_DISCARD = "cc-discard"
    CC_COPY = "cc-copy"


GROUPS = {
    "monoidal": (SchemaId.TENSOR_BETA, SchemaId.TENSOR_ETA,
                 SchemaId.UNIT_BETA, SchemaId.UNIT_ETA),
    "closed": (SchemaId.LOLLI_BETA, SchemaId.LOLLI_ETA),
    "comonadic": (SchemaId.BANG_BETA, SchemaId.BANG_ETA,
                  SchemaId.PROMOTE_ASSOC, SchemaId.PROMOTE_SYMM),
    "comonoid": (SchemaId.COPY_UNIT_LEFT, SchemaId.COPY_UNIT_RIGHT,
                 SchemaId.COPY_ASSOC, SchemaId.COPY_COMM),
    "interaction": (SchemaId.DISCARD_PROMOTE, SchemaId.PROMOTE_DISCARD,
                    SchemaId.COPY_PROMOTE, SchemaId.PROMOTE_COPY),
    "commuting": (SchemaId.CC_UNIT, SchemaId.CC_TENSOR,
                  SchemaId.CC_DISCARD, SchemaId.CC_COPY),
}


@dataclass(frozen=True)
class RewriteStep:
    schema: SchemaId
    position: tuple = ()
    direction: str = "L2R"  # or "R2L"
    bindings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.direction not in ("L2R", "R2L"):
            raise MatchError(f"unknown direction {self.direction!r}")


# ---------------------------------------------------------------------------
# Positions

def get_subterm(t: S.Term, path):
    for i in path:
        t = _children(t)[i]
    return t


def replace_subterm(t: S.Term, path, new: S.Term) -> S.Term:
    if not path:
        return new
    i, rest = path[0], path[1:]
    kids = list(_children(t))
    kids[i] = replace_subterm(kids[i], rest, new)
    return _rebuild(t, kids)


def _children(t: S.Term):
    match t:
        case S.Var() | S.Star():
            return ()
        case S.OpApp(_, args):
            return args
        case S.UnitLet(v, b) | S.TensorPair(v, b) | S.App(v, b) \
                | S.Discard(v, b):
            return (v, b)
        case S.TensorLet(v, _, _, b) | S.Copy(_, _, v, _, _, b):
            return (v, b)
        case S.Lambda(_, _, b):
            return (b,)
        case S.Promote(_, _, args, _, b):
            return args + (b,)
        case S.Derelict(v):
            return (v,)
    raise MatchError(f"unknown term node {t!r}")


def _rebuild(t: S.Term, kids):
    match t:
        case S.OpApp(op, _):
            return S.OpApp(op, tuple(kids))
        case S.UnitLet():
            return S.UnitLet(*kids)
        case S.TensorPair():
            return S.TensorPair(*kids)
        case S.App():
            return S.App(*kids)
        case S.Discard():
            return S.Discard(*kids)
        case S.TensorLet(_, x, y, _):
            return S.TensorLet(kids[0], x, y, kids[1])
        case S.Copy(n, m, _, x, y, _):
            return S.Copy(n, m, kids[0], x, y, kids[1])
        case S.Lambda(x, ty, _):
            return S.Lambda(x, ty, kids[0])
        case S.Promote(r, ss, _, xs, _):
            return S.Promote(r, ss, tuple(kids[:-1]), xs, kids[-1])
        case S.Derelict():
            return S.Derelict(kids[0])
    raise MatchError(f"cannot rebuild {t!r}")


def all_positions(t: S.Term):
    """Pre-order enumeration of positions (outermost first)."""
    yield ()
    for i, kid in enumerate(_children(t)):
        for rest in all_positions(kid):
            yield (i,) + rest


# ---------------------------------------------------------------------------
# Substitution helpers

def subst_parallel(u: S.Term, mapping: dict) -> S.Term:
    """Simultaneous substitution; plugged terms are never re-scanned."""
    taken = S.all_names(u)
    for v in mapping.values():
        taken |= S.all_names(v)
    temps = {}
    out = u
    for x in mapping:
        tmp = S.fresh_name(f"_{x}", taken)
        taken.add(tmp)
        temps[x] = tmp
        out = S.substitute(out, S.Var(tmp), x)
    for x, w in mapping.items():
        out = S.substitute(out, w, temps[x])
    return out


def extract_plugs(u: S.Term, holes, t: S.Term) -> dict:
    """Recover the subterms plugged into u at the hole variables.

    u with each hole variable replaced by its recovered plug must be
    alpha-equal to t; verified by the caller through subst_parallel.
    """
    holes = tuple(holes)
    found = {}

    def go(a, b, ren):
        match a:
            case S.Var(x) if x in holes and x not in ren:
                if x in found and not S.alpha_eq(found[x], b):
                    raise MatchError(f"hole {x} matched two different terms")
                found[x] = b
                return
        if type(a) is not type(b):
            raise MatchError(
                f"shape mismatch: {print_term(a)} vs {print_term(b)}")
        match a, b:
            case (S.Var(x), S.Var(y)):
                if ren.get(x, x) != y:
                    raise MatchError(f"variable mismatch {x} vs {y}")
            case (S.Star(), S.Star()):
                pass
            case (S.OpApp(f, xs), S.OpApp(g, ys)):
                if f != g or len(xs) != len(ys):
                    raise MatchError(f"operation mismatch {f} vs {g}")
                for p, q in zip(xs, ys):
                    go(p, q, ren)
            case (S.UnitLet(v1, b1), S.UnitLet(v2, b2)) \
                    | (S.TensorPair(v1, b1), S.TensorPair(v2, b2)) \
                    | (S.App(v1, b1), S.App(v2, b2)) \
                    | (S.Discard(v1, b1), S.Discard(v2, b2)):
                go(v1, v2, ren)
                go(b1, b2, ren)
            case (S.TensorLet(v1, x1, y1, b1), S.TensorLet(v2, x2, y2, b2)):
                go(v1, v2, ren)
                go(b1, b2, {**ren, x1: x2, y1: y2})
            case (S.Lambda(x1, ty1, b1), S.Lambda(x2, ty2, b2)):
                if ty1 != ty2:
                    raise MatchError("lambda annotation mismatch")
                go(b1, b2, {**ren, x1: x2})
            case (S.Promote(r1, s1, vs1, xs1, b1),
                  S.Promote(r2, s2, vs2, xs2, b2)):
                if r1 != r2 or s1 != s2 or len(vs1) != len(vs2):
                    raise MatchError("promotion annotation mismatch")
                for p, q in zip(vs1, vs2):
                    go(p, q, ren)
                go(b1, b2, {**ren, **dict(zip(xs1, xs2))})
            case (S.Derelict(v1), S.Derelict(v2)):
                go(v1, v2, ren)
            case (S.Copy(n1, m1, v1, x1, y1, b1),
                  S.Copy(n2, m2, v2, x2, y2, b2)):
                if n1 != n2 or m1 != m2:
                    raise MatchError("copy annotation mismatch")
                go(v1, v2, ren)
                go(b1, b2, {**ren, x1: x2, y1: y2})
            case _:
                raise MatchError(f"cannot match {a!r}")

    go(u, t, {})
    for h in holes:
        if h not in found:
            raise MatchError(f"hole {h} does not occur in the context term")
    return found


def _decompose(u: S.Term, z: str, t: S.Term) -> S.Term:
    """Find w with t alpha-equal to u[w/z], verifying the decomposition."""
    plug = extract_plugs(u, (z,), t)[z]
    if not S.alpha_eq(subst_parallel(u, {z: plug}), t):
        raise MatchError("context term does not reassemble the matched term")
    return plug


def _need(b: dict, key: str):
    if key not in b:
        raise MatchError(f"this schema row needs the {key!r} binding")
    return b[key]


def _fresh_factory(*terms):
    taken = set()
    for t in terms:
        if t is not None:
            taken |= S.all_names(t)

    def fresh(base):
        name = S.fresh_name(base, taken)
        taken.add(name)
        return name

    return fresh


def _as_var_name(t, what):
    match t:
        case S.Var(x):
            return x
    raise MatchError(f"{what} must be a variable, found {print_term(t)}")


# ---------------------------------------------------------------------------
# Row implementations.  Each takes (term, bindings, semiring) and returns
# the rewritten term or raises MatchError.

def _tensor_beta_l(t, b, sr):
    match t:
        case S.TensorLet(S.TensorPair(v, w), x, y, u):
            return subst_parallel(u, {x: v, y: w})
    raise MatchError("expected let x (*) y = v (*) w in u")


def _tensor_beta_r(t, b, sr):
    u = _need(b, "u")
    x, y = _need(b, "x"), _need(b, "y")
    plugs = extract_plugs(u, (x, y), t)
    if not S.alpha_eq(subst_parallel(u, plugs), t):
        raise MatchError("context term does not reassemble the matched term")
    return S.TensorLet(S.TensorPair(plugs[x], plugs[y]), x, y, u)


def _tensor_eta_l(t, b, sr):
    u, z = _need(b, "u"), _need(b, "z")
    match t:
        case S.TensorLet(v, x, y, body):
            expected = subst_parallel(u, {z: S.TensorPair(S.Var(x), S.Var(y))})
            if not S.alpha_eq(expected, body):
                raise MatchError("body is not u with x (*) y plugged for z")
            return subst_parallel(u, {z: v})
    raise MatchError("expected a let-tensor expression")


def _tensor_eta_r(t, b, sr):
    u, z = _need(b, "u"), _need(b, "z")
    v = _decompose(u, z, t)
    fresh = _fresh_factory(t, u)
    x, y = b.get("x") or fresh("x"), b.get("y") or fresh("y")
    body = subst_parallel(u, {z: S.TensorPair(S.Var(x), S.Var(y))})
    return S.TensorLet(v, x, y, body)


def _unit_beta_l(t, b, sr):
    match t:
        case S.UnitLet(S.Star(), v):
            return v
    raise MatchError("expected let unit = unit in v")


def _unit_beta_r(t, b, sr):
    return S.UnitLet(S.Star(), t)


def _unit_eta_l(t, b, sr):
    w, z = _need(b, "w"), _need(b, "z")
    match t:
        case S.UnitLet(v, body):
            if not S.alpha_eq(subst_parallel(w, {z: S.Star()}), body):
                raise MatchError("body is not w with unit plugged for z")
            return subst_parallel(w, {z: v})
    raise MatchError("expected a let-unit expression")


def _unit_eta_r(t, b, sr):
    w, z = _need(b, "w"), _need(b, "z")
    v = _decompose(w, z, t)
    return S.UnitLet(v, subst_parallel(w, {z: S.Star()}))


def _lolli_beta_l(t, b, sr):
    match t:
        case S.App(S.Lambda(x, _, v), w):
            return subst_parallel(v, {x: w})
    raise MatchError("expected a beta redex (fn x : A => v) w")


def _lolli_beta_r(t, b, sr):
    v, x, ty = _need(b, "v"), _need(b, "x"), _need(b, "ty")
    w = _decompose(v, x, t)
    return S.App(S.Lambda(x, ty, v), w)


def _lolli_eta_l(t, b, sr):
    match t:
        case S.Lambda(x, _, S.App(v, S.Var(y))) if x == y \
                and x not in S.free_vars(v):
            return v
    raise MatchError("expected fn x : A => v x with x not free in v")


def _lolli_eta_r(t, b, sr):
    ty = _need(b, "ty")
    x = b.get("x") or _fresh_factory(t)("x")
    if x in S.free_vars(t):
        raise MatchError(f"binder {x} already free in the term")
    return S.Lambda(x, ty, S.App(t, S.Var(x)))


def _bang_beta_l(t, b, sr):
    match t:
        case S.Derelict(S.Promote(r, _, args, binders, u)) if r == sr.one:
            return subst_parallel(u, dict(zip(binders, args)))
    raise MatchError("expected derelict of a grade-1 promotion")


def _bang_beta_r(t, b, sr):
    u = _need(b, "u")
    xs = tuple(_need(b, "xs"))
    ss = tuple(_need(b, "ss"))
    if len(xs) != len(ss):
        raise MatchError("xs and ss bindings must have equal length")
    plugs = extract_plugs(u, xs, t)
    if not S.alpha_eq(subst_parallel(u, plugs), t):
        raise MatchError("context term does not reassemble the matched term")
    args = tuple(plugs[x] for x in xs)
    return S.Derelict(S.Promote(sr.one, ss, args, xs, u))


def _bang_eta_l(t, b, sr):
    match t:
        case S.Promote(_, (s,), (z,), (x,), S.Derelict(S.Var(y))) \
                if s == sr.one and x == y:
            return z
    raise MatchError("expected promote[r; 1](z; x => derelict x)")


def _bang_eta_r(t, b, sr):
    r = _need(b, "r")
    x = b.get("x") or _fresh_factory(t)("x")
    return S.Promote(r, (sr.one,), (t,), (x,), S.Derelict(S.Var(x)))


def _promote_assoc_l(t, b, sr):
    match t:
        case S.Promote(r1, grades, args, binders, w) if args and grades:
            match args[0]:
                case S.Promote(r12, ss, xs_args, ys, v) \
                        if r12 == sr.mul(r1, grades[0]):
                    r2 = grades[0]
                    a = binders[0]
                    fresh = _fresh_factory(t)
                    cs = tuple(fresh("c") for _ in ss)
                    inner = S.Promote(r2, ss,
                                      tuple(S.Var(c) for c in cs), ys, v)
                    new_body = subst_parallel(w, {a: inner})
                    new_grades = tuple(sr.mul(r2, s) for s in ss) + grades[1:]
                    return S.Promote(r1, new_grades, xs_args + args[1:],
                                     cs + binders[1:], new_body)
    raise MatchError("expected a promotion whose first argument is a "
                     "promotion of the product grade")


def _promote_assoc_r(t, b, sr):
    w, a = _need(b, "w"), _need(b, "a")
    match t:
        case S.Promote(r1, grades, args, binders, body):
            plug = _decompose(w, a, body)
            match plug:
                case S.Promote(r2, ss, c_vars, ys, v):
                    k = len(ss)
                    cs = tuple(_as_var_name(c, "inner promotion argument")
                               for c in c_vars)
                    if cs != binders[:k]:
                        raise MatchError("inner promotion must consume the "
                                         "leading binders in order")
                    if grades[:k] != tuple(sr.mul(r2, s) for s in ss):
                        raise MatchError("leading grades are not r2 * s_i")
                    inner = S.Promote(sr.mul(r1, r2), ss, args[:k], ys, v)
                    return S.Promote(r1, (r2,) + grades[k:],
                                     (inner,) + args[k:],
                                     (a,) + binders[k:], w)
            raise MatchError("the plug for the hole is not a promotion")
    raise MatchError("expected a promotion")


def _promote_symm(t, b, sr):
    i = _need(b, "i")
    match t:
        case S.Promote(r, grades, args, binders, u) if 0 <= i < len(args) - 1:
            swap = lambda xs: xs[:i] + (xs[i + 1], xs[i]) + xs[i + 2:]
            return S.Promote(r, swap(grades), swap(args), swap(binders), u)
    raise MatchError("swap index out of range for this promotion")


def _copy_unit_left_l(t, b, sr):
    match t:
        case S.Copy(n, _, v, x, y, S.Discard(S.Var(dx), u)) \
                if n == sr.zero and dx == x:
            return subst_parallel(u, {y: v})
    raise MatchError("expected copy[0,n] v as x,y in discard x in u")


def _copy_unit_left_r(t, b, sr):
    u, z = _need(b, "u"), _need(b, "z")
    n = _need(b, "n")
    v = _decompose(u, z, t)
    fresh = _fresh_factory(t, u)
    x = b.get("x") or fresh("x")
    return S.Copy(sr.zero, n, v, x, z, S.Discard(S.Var(x), u))


def _copy_unit_right_l(t, b, sr):
    match t:
        case S.Copy(_, m, v, x, y, S.Discard(S.Var(dy), u)) \
                if m == sr.zero and dy == y:
            return subst_parallel(u, {x: v})
    raise MatchError("expected copy[n,0] v as x,y in discard y in u")


def _copy_unit_right_r(t, b, sr):
    u, z = _need(b, "u"), _need(b, "z")
    n = _need(b, "n")
    v = _decompose(u, z, t)
    fresh = _fresh_factory(t, u)
    y = b.get("y") or fresh("y")
    return S.Copy(n, sr.zero, v, z, y, S.Discard(S.Var(y), u))


def _copy_assoc_l(t, b, sr):
    match t:
        case S.Copy(p, o, v, x, y, S.Copy(n, m, S.Var(sx), a, bb, u)) \
                if sx == x and p == sr.add(n, m):
            c = b.get("c") or _fresh_factory(t)("c")
            inner = S.Copy(m, o, S.Var(c), bb, y, u)
            return S.Copy(n, sr.add(m, o), v, a, c, inner)
    raise MatchError("expected copy[n+m,o] v as x,y in copy[n,m] x as a,b")


def _copy_assoc_r(t, b, sr):
    match t:
        case S.Copy(n, q, v, a, c, S.Copy(m, o, S.Var(sc), bb, y, u)) \
                if sc == c and q == sr.add(m, o):
            x = b.get("x") or _fresh_factory(t)("x")
            inner = S.Copy(n, m, S.Var(x), a, bb, u)
            return S.Copy(sr.add(n, m), o, v, x, y, inner)
    raise MatchError("expected copy[n,m+o] v as a,c in copy[m,o] c as b,y")


def _copy_comm(t, b, sr):
    match t:
        case S.Copy(n, m, v, x, y, u):
            return S.Copy(m, n, v, y, x, u)
    raise MatchError("expected a copy expression")


def _discard_promote_l(t, b, sr):
    match t:
        case S.Discard(S.Promote(r, _, args, _, _), u) if r == sr.zero:
            out = u
            for v in reversed(args):
                out = S.Discard(v, out)
            return out
    raise MatchError("expected discard of a grade-0 promotion")


def _discard_promote_r(t, b, sr):
    w = _need(b, "w")
    ss = tuple(_need(b, "ss"))
    xs = tuple(_need(b, "xs"))
    if len(ss) != len(xs):
        raise MatchError("ss and xs bindings must have equal length")
    args, rest = [], t
    for _ in ss:
        match rest:
            case S.Discard(v, u):
                args.append(v)
                rest = u
            case _:
                raise MatchError("not enough nested discards")
    return S.Discard(S.Promote(sr.zero, ss, tuple(args), xs, w), rest)


def _promote_discard_l(t, b, sr):
    match t:
        case S.Promote(r, grades, args, binders, S.Discard(S.Var(dx), u)) \
                if grades and grades[0] == sr.zero and dx == binders[0]:
            return S.Discard(args[0],
                             S.Promote(r, grades[1:], args[1:],
                                       binders[1:], u))
    raise MatchError("expected a promotion discarding its first binder")


def _promote_discard_r(t, b, sr):
    match t:
        case S.Discard(v, S.Promote(r, grades, args, binders, u)):
            x = b.get("x") or _fresh_factory(t)("x")
            return S.Promote(r, (sr.zero,) + grades, (v,) + args,
                             (x,) + binders, S.Discard(S.Var(x), u))
    raise MatchError("expected discard of a value before a promotion")


def _copy_promote_l(t, b, sr):
    match t:
        case S.Copy(n, m, S.Promote(p, ss, args, xs, w), y, z, u) \
                if p == sr.add(n, m):
            fresh = _fresh_factory(t)
            avs = tuple(fresh("a") for _ in args)
            bvs = tuple(fresh("b") for _ in args)
            left = S.Promote(n, ss, tuple(S.Var(a) for a in avs), xs, w)
            right = S.Promote(m, ss, tuple(S.Var(c) for c in bvs), xs, w)
            out = subst_parallel(u, {y: left, z: right})
            for v, a, c, s in reversed(list(zip(args, avs, bvs, ss))):
                out = S.Copy(sr.mul(n, s), sr.mul(m, s), v, a, c, out)
            return out
    raise MatchError("expected copy of a promotion of grade n+m")


def _copy_promote_r(t, b, sr):
    u = _need(b, "u")
    y, z = _need(b, "y"), _need(b, "z")
    n, m = _need(b, "n"), _need(b, "m")
    o = _need(b, "o")
    copies, rest = [], t
    for _ in range(o):
        match rest:
            case S.Copy(ni, mi, v, a, c, body):
                copies.append((ni, mi, v, a, c))
                rest = body
            case _:
                raise MatchError("not enough nested copies")
    plugs = extract_plugs(u, (y, z), rest)
    if not S.alpha_eq(subst_parallel(u, plugs), rest):
        raise MatchError("context term does not reassemble the inner body")
    match plugs[y], plugs[z]:
        case (S.Promote(pn, ss, a_vars, xs, w),
              S.Promote(pm_, ss2, b_vars, xs2, w2)) \
                if pn == n and pm_ == m and ss == ss2:
            a_names = tuple(_as_var_name(v, "left plug argument")
                            for v in a_vars)
            b_names = tuple(_as_var_name(v, "right plug argument")
                            for v in b_vars)
            if a_names != tuple(c[3] for c in copies) \
                    or b_names != tuple(c[4] for c in copies):
                raise MatchError("copy binders do not feed the two "
                                 "promotions in order")
            if not S.alpha_eq(S.Promote(pn, ss, a_vars, xs, w),
                              S.Promote(pn, ss, a_vars, xs2, w2)):
                raise MatchError("the two promotion bodies differ")
            for (ni, mi, _, _, _), s in zip(copies, ss):
                if ni != sr.mul(n, s) or mi != sr.mul(m, s):
                    raise MatchError("copy grades are not (n*s_i, m*s_i)")
            args = tuple(c[2] for c in copies)
            scrut = S.Promote(sr.add(n, m), ss, args, xs, w)
            return S.Copy(n, m, scrut, y, z, u)
    raise MatchError("the plugs are not matching promotions")


def _promote_copy_l(t, b, sr):
    match t:
        case S.Promote(r, grades, args, binders,
                       S.Copy(n, m, S.Var(sz), x, y, u)) \
                if grades and sz == binders[0] \
                and grades[0] == sr.add(n, m):
            fresh = _fresh_factory(t)
            a, c = fresh("a"), fresh("b")
            inner = S.Promote(r, (n, m) + grades[1:],
                              (S.Var(a), S.Var(c)) + args[1:],
                              (x, y) + binders[1:], u)
            return S.Copy(sr.mul(r, n), sr.mul(r, m), args[0], a, c, inner)
    raise MatchError("expected a promotion copying its first binder")


def _promote_copy_r(t, b, sr):
    match t:
        case S.Copy(rn, rm, v, a, c,
                    S.Promote(r, grades, args, binders, u)) \
                if len(grades) >= 2 and rn == sr.mul(r, grades[0]) \
                and rm == sr.mul(r, grades[1]):
            match args[0], args[1]:
                case (S.Var(va), S.Var(vb)) if va == a and vb == c:
                    z = b.get("z") or _fresh_factory(t)("z")
                    n, m = grades[0], grades[1]
                    body = S.Copy(n, m, S.Var(z), binders[0], binders[1], u)
                    return S.Promote(r, (sr.add(n, m),) + grades[2:],
                                     (v,) + args[2:],
                                     (z,) + binders[2:], body)
    raise MatchError("expected copy feeding the two leading promotion "
                     "arguments")


def _make_cc(name, pattern_check):
    """Commuting conversion rows: u[K/z] = K-with-body u[w/z]."""

    def l2r(t, b, sr):
        u, z = _need(b, "u"), _need(b, "z")
        plug = _decompose(u, z, t)
        kids = pattern_check(plug)
        if kids is None:
            raise MatchError(f"the plug for {name} has the wrong head")
        w = kids[-1]
        new_body = subst_parallel(u, {z: w})
        return _cc_rewrap(plug, new_body)

    def r2l(t, b, sr):
        u, z = _need(b, "u"), _need(b, "z")
        kids = pattern_check(t)
        if kids is None:
            raise MatchError(f"expected a {name} expression at the position")
        w = _decompose(u, z, kids[-1])
        return subst_parallel(u, {z: _cc_rewrap(t, w)})

    return l2r, r2l


def _cc_rewrap(shape: S.Term, new_body: S.Term) -> S.Term:
    match shape:
        case S.UnitLet(v, _):
            return S.UnitLet(v, new_body)
        case S.TensorLet(v, x, y, _):
            return S.TensorLet(v, x, y, new_body)
        case S.Discard(v, _):
            return S.Discard(v, new_body)
        case S.Copy(n, m, v, x, y, _):
            return S.Copy(n, m, v, x, y, new_body)
    raise MatchError("unsupported commuting-conversion head")


def _cc_unit_shape(t):
    match t:
        case S.UnitLet(v, w):
            return (v, w)
    return None


def _cc_tensor_shape(t):
    match t:
        case S.TensorLet(v, x, y, w):
            return (v, x, y, w)
    return None


def _cc_discard_shape(t):
    match t:
        case S.Discard(v, w):
            return (v, w)
    return None


def _cc_copy_shape(t):
    match t:
        case S.Copy(n, m, v, x, y, w):
            return (n, m, v, x, y, w)
    return None


_cc_unit_l, _cc_unit_r = _make_cc("let-unit", _cc_unit_shape)
_cc_tensor_l, _cc_tensor_r = _make_cc("let-tensor", _cc_tensor_shape)
_cc_discard_l, _cc_discard_r = _make_cc("discard", _cc_discard_shape)
_cc_copy_l, _cc_copy_r = _make_cc("copy", _cc_copy_shape)


_ROWS = {
    SchemaId.TENSOR_BETA: (_tensor_beta_l, _tensor_beta_r),
    SchemaId.TENSOR_ETA: (_tensor_eta_l, _tensor_eta_r),
    SchemaId.UNIT_BETA: (_unit_beta_l, _unit_beta_r),
    SchemaId.UNIT_ETA: (_unit_eta_l, _unit_eta_r),
    SchemaId.LOLLI_BETA: (_lolli_beta_l, _lolli_beta_r),
    SchemaId.LOLLI_ETA: (_lolli_eta_l, _lolli_eta_r),
    SchemaId.BANG_BETA: (_bang_beta_l, _bang_beta_r),
    SchemaId.BANG_ETA: (_bang_eta_l, _bang_eta_r),
    SchemaId.PROMOTE_ASSOC: (_promote_assoc_l, _promote_assoc_r),
    SchemaId.PROMOTE_SYMM: (_promote_symm, _promote_symm),
    SchemaId.COPY_UNIT_LEFT: (_copy_unit_left_l, _copy_unit_left_r),
    SchemaId.COPY_UNIT_RIGHT: (_copy_unit_right_l, _copy_unit_right_r),
    SchemaId.COPY_ASSOC: (_copy_assoc_l, _copy_assoc_r),
    SchemaId.COPY_COMM: (_copy_comm, _copy_comm),
    SchemaId.DISCARD_PROMOTE: (_discard_promote_l, _discard_promote_r),
    SchemaId.PROMOTE_DISCARD: (_promote_discard_l, _promote_discard_r),
    SchemaId.COPY_PROMOTE: (_copy_promote_l, _copy_promote_r),
    SchemaId.PROMOTE_COPY: (_promote_copy_l, _promote_copy_r),
    SchemaId.CC_UNIT: (_cc_unit_l, _cc_unit_r),
    SchemaId.CC_TENSOR: (_cc_tensor_l, _cc_tensor_r),
    SchemaId.CC_DISCARD: (_cc_discard_l, _cc_discard_r),
    SchemaId.CC_COPY: (_cc_copy_l, _cc_copy_r),
}


def rewrite_term(term: S.Term, step: RewriteStep,
                 semiring: Semiring = NatSemiring()) -> S.Term:
    sub = get_subterm(term, step.position)
    l2r, r2l = _ROWS[step.schema]
    fn = l2r if step.direction == "L2R" else r2l
    return replace_subterm(term, step.position, fn(sub, step.bindings,
                                                   semiring))


def apply_step(sig: S.Signature, d: Derivation, step: RewriteStep,
               semiring: Semiring = NatSemiring()) -> Derivation:
    new_term = rewrite_term(d.conclusion.term, step, semiring)
    out = infer(sig, d.conclusion.context, new_term, semiring)
    if out.conclusion.type != d.conclusion.type:
        raise EngineError(
            f"rewrite by {step.schema.value} changed the type of the "
            f"judgement")
    return out


# ---------------------------------------------------------------------------
# Normalization

ORIENTED = (
    SchemaId.LOLLI_BETA, SchemaId.LOLLI_ETA,
    SchemaId.TENSOR_BETA, SchemaId.UNIT_BETA,
    SchemaId.BANG_BETA, SchemaId.BANG_ETA,
    SchemaId.COPY_UNIT_LEFT, SchemaId.COPY_UNIT_RIGHT,
)


def term_size(t: S.Term) -> int:
    return 1 + sum(term_size(k) for k in _children(t))


def _find_redex(term: S.Term, semiring):
    for pos in all_positions(term):
        sub = get_subterm(term, pos)
        for schema in ORIENTED:
            try:
                _ROWS[schema][0](sub, {}, semiring)
            except MatchError:
                continue
            return RewriteStep(schema, pos, "L2R")
    return None


def beta_normalize(sig: S.Signature, d: Derivation, fuel: int = None,
                   semiring: Semiring = NatSemiring()):
    """Reduce to a fixpoint of the oriented rows.

    Returns (derivation, steps, exhausted).
    """
    if fuel is None:
        fuel = 10 * term_size(d.conclusion.term)
    steps = []
    current = d
    for _ in range(fuel):
        step = _find_redex(current.conclusion.term, semiring)
        if step is None:
            return current, steps, False
        current = apply_step(sig, current, step, semiring)
        steps.append(step)
    if _find_redex(current.conclusion.term, semiring) is None:
        return current, steps, False
    return current, steps, True


def eq_script_check(sig: S.Signature, lhs: Derivation, rhs: Derivation,
                    steps, semiring: Semiring = NatSemiring()) -> bool:
    """Apply side-tagged steps and test the two sides for alpha-equality.

    Each element of steps is a (side, RewriteStep) pair, side in {L, R}.
    """
    for side, step in steps:
        if side == "L":
            lhs = apply_step(sig, lhs, step, semiring)
        elif side == "R":
            rhs = apply_step(sig, rhs, step, semiring)
        else:
            raise MatchError(f"unknown rewrite side {side!r}")
    return S.alpha_eq(lhs.conclusion.term, rhs.conclusion.term)
