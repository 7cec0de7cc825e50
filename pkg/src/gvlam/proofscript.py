"""S-expression proof scripts.

One node kind per head symbol; keyword arguments use :key value pairs;
embedded terms, types, and contexts are double-quoted strings in the
concrete syntax.  Documented with examples in docs/proofs.md.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .parser import parse_context, parse_term, parse_type
from .quantale import INF
from .rewrite import RewriteStep, SchemaId
from .vequation import ALL_KINDS, ProofError, VProof


class ScriptError(ValueError):
    pass


_TOKEN_RE = re.compile(r'''\s+|(?P<lp>\()|(?P<rp>\))
                           |(?P<str>"(?:[^"\\]|\\.)*")
                           |(?P<atom>[^\s()"]+)''', re.VERBOSE)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ScriptError(f"bad character {text[pos]!r} at offset {pos}")
        if m.lastgroup == "lp":
            out.append("(")
        elif m.lastgroup == "rp":
            out.append(")")
        elif m.lastgroup == "str":
            raw = m.group()[1:-1]
            out.append(("str", raw.replace('\\"', '"').replace("\\\\", "\\")))
        elif m.lastgroup == "atom":
            out.append(("atom", m.group()))
        pos = m.end()
    return out


def _parse_sexpr(tokens, i=0):
    if i >= len(tokens):
        raise ScriptError("unexpected end of script")
    tok = tokens[i]
    if tok == "(":
        items = []
        i += 1
        while i < len(tokens) and tokens[i] != ")":
            item, i = _parse_sexpr(tokens, i)
            items.append(item)
        if i >= len(tokens):
            raise ScriptError("missing closing parenthesis")
        return items, i + 1
    if tok == ")":
        raise ScriptError("unexpected closing parenthesis")
    return tok, i + 1


def parse_bound_literal(text: str):
    text = text.strip()
    if text == "inf":
        return INF
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ScriptError(f"bad bound literal {text!r}") from exc


_TERM_KEYS = {"u", "w", "v", "term"}
_NAME_KEYS = {"z", "x", "y", "a", "c", "name"}
_INT_KEYS = {"i", "n", "m", "o", "r", "k", "q_int"}
_SCHEMA_INT_KEYS = {"i", "n", "m", "o", "r"}


def _atom_value(atom):
    kind, text = atom
    if kind == "str":
        return text
    return text


def _split_args(items):
    """Separate keyword arguments from positional children."""
    kwargs = {}
    children = []
    i = 0
    while i < len(items):
        item = items[i]
        if isinstance(item, tuple) and item[0] == "atom" \
                and item[1].startswith(":"):
            key = item[1][1:]
            if i + 1 >= len(items):
                raise ScriptError(f"keyword :{key} needs a value")
            kwargs[key] = items[i + 1]
            i += 2
        else:
            children.append(item)
            i += 1
    return kwargs, children


def _as_text(value, what):
    if isinstance(value, tuple):
        return value[1]
    raise ScriptError(f"{what} must be an atom or string")


def _as_int(value, what):
    text = _as_text(value, what)
    if text == "inf":
        return INF
    if not re.fullmatch(r"-?[0-9]+", text):
        raise ScriptError(f"{what} must be an integer, got {text!r}")
    return int(text)


def build_proof(sexpr) -> VProof:
    if not isinstance(sexpr, list) or not sexpr:
        raise ScriptError("a proof node must be a parenthesized list")
    head = _as_text(sexpr[0], "node head")
    kwargs, children = _split_args(sexpr[1:])

    def premises():
        return tuple(build_proof(c) for c in children)

    if head == "refl":
        if len(children) != 1:
            raise ScriptError("refl takes exactly one term")
        ctx = parse_context(_as_text(kwargs.get("ctx", ("str", "")), "ctx"))
        term = parse_term(_as_text(children[0], "refl term"))
        return VProof("refl", (), {"ctx": ctx, "term": term})

    if head == "trans":
        prems = premises()
        if len(prems) < 2:
            raise ScriptError("trans needs at least two premises")
        node = prems[0]
        for p in prems[1:]:
            node = VProof("trans", (node, p))
        return node

    if head == "weak":
        if "q" not in kwargs:
            raise ScriptError("weak needs a :q bound")
        return VProof("weak", premises(),
                      {"q": parse_bound_literal(_as_text(kwargs["q"], "q"))})

    if head == "join":
        return VProof("join", premises())

    if head == "sym":
        return VProof("sym", premises())

    if head == "perm":
        ctx = parse_context(_as_text(kwargs["ctx"], "ctx"))
        return VProof("perm", premises(), {"ctx": ctx})

    if head == "axiom":
        if len(children) != 1:
            raise ScriptError("axiom takes the axiom name")
        name = _as_text(children[0], "axiom name")
        rename = {}
        if "rename" in kwargs:
            for piece in _as_text(kwargs["rename"], "rename").split(","):
                old, _, new = piece.partition("=")
                rename[old.strip()] = new.strip()
        params = {k: _as_int(vv, k) for k, vv in kwargs.items()
                  if k != "rename"}
        return VProof("axiom", (),
                      {"name": name, "params": params, "rename": rename})

    if head == "schema":
        if len(children) != 1:
            raise ScriptError("schema takes the row name")
        row_name = _as_text(children[0], "schema row")
        try:
            schema = SchemaId(row_name)
        except ValueError:
            raise ScriptError(f"unknown schema row {row_name!r}") from None
        ctx = parse_context(_as_text(kwargs.get("ctx", ("str", "")), "ctx"))
        term = parse_term(_as_text(kwargs["term"], "term"))
        pos = ()
        if "pos" in kwargs:
            text = _as_text(kwargs["pos"], "pos")
            pos = tuple(int(p) for p in text.split(".") if p != "")
        direction = _as_text(kwargs.get("dir", ("atom", "L2R")), "dir")
        flip = "flip" in kwargs and _as_text(kwargs["flip"], "flip") != "no"
        bindings = {}
        for key, value in kwargs.items():
            if key in ("ctx", "term", "pos", "dir", "flip"):
                continue
            if key in ("u", "w", "v"):
                bindings[key] = parse_term(_as_text(value, key))
            elif key == "ty":
                bindings[key] = parse_type(_as_text(value, key))
            elif key in ("ss",):
                bindings[key] = tuple(
                    int(s) for s in _as_text(value, key).split(",") if s)
            elif key in ("xs",):
                bindings[key] = tuple(
                    s.strip() for s in _as_text(value, key).split(",") if s)
            elif key in _SCHEMA_INT_KEYS:
                bindings[key] = _as_int(value, key)
            else:
                bindings[key] = _as_text(value, key)
        step = RewriteStep(schema, pos, direction, bindings)
        return VProof("schema", (),
                      {"ctx": ctx, "term": term, "step": step, "flip": flip})

    if head == "cong-op":
        if not children:
            raise ScriptError("cong-op needs the operation name")
        op = _as_text(children[0], "operation name")
        prems = tuple(build_proof(c) for c in children[1:])
        return VProof("cong-op", prems, {"op": op})

    if head == "cong-promote":
        r = _as_int(kwargs["r"], "r")
        return VProof("cong-promote", premises(), {"r": r})

    if head == "cong-subst":
        x = _as_text(kwargs["x"], "x")
        return VProof("cong-subst", premises(), {"x": x})

    if head in ("cong-unit-let", "cong-pair", "cong-tensor-let",
                "cong-lambda", "cong-app", "cong-derelict", "cong-discard",
                "cong-copy"):
        return VProof(head, premises())

    raise ScriptError(f"unknown proof node head {head!r}")


def parse_proof(text: str) -> VProof:
    tokens = _tokenize(text)
    sexpr, i = _parse_sexpr(tokens, 0)
    if i != len(tokens):
        raise ScriptError("trailing input after the proof")
    return build_proof(sexpr)


def load_proof(path: str) -> VProof:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    # Allow ; line comments.
    text = "\n".join(line.split(";", 1)[0] for line in text.splitlines())
    return parse_proof(text)


def proof_sexpr(p: VProof) -> str:
    """Render a proof tree back to a script (diagnostic use)."""
    from .parser import print_context, print_term

    parts = [p.kind]
    info = p.info
    if p.kind == "refl":
        parts.append(f':ctx "{print_context(info["ctx"])}"')
        parts.append(f'"{print_term(info["term"])}"')
    elif p.kind == "axiom":
        parts.append(info["name"])
        for k, v in sorted(info.get("params", {}).items()):
            parts.append(f":{k} {v}")
    elif p.kind == "weak":
        parts.append(f':q {info["q"]}')
    elif p.kind == "perm":
        parts.append(f':ctx "{print_context(info["ctx"])}"')
    elif p.kind == "schema":
        step = info["step"]
        parts.append(step.schema.value)
        parts.append(f':ctx "{print_context(info["ctx"])}"')
        parts.append(f':term "{print_term(info["term"])}"')
        if step.position:
            parts.append(f':pos {".".join(map(str, step.position))}')
        parts.append(f":dir {step.direction}")
        if info.get("flip"):
            parts.append(":flip yes")
    elif p.kind == "cong-op":
        parts.append(info["op"])
    elif p.kind == "cong-promote":
        parts.append(f':r {info["r"]}')
    elif p.kind == "cong-subst":
        parts.append(f':x {info["x"]}')
    for prem in p.premises:
        parts.append(proof_sexpr(prem))
    return "(" + " ".join(parts) + ")"
