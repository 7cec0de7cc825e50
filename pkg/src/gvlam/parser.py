"""Concrete syntax: tokenizer, parser, and printer.

Grammar summary (full EBNF in docs/grammar.ebnf):

    type   := tensor_ty ("-o" type)?            -o right-associative
    tensor := bang_ty ("*" bang_ty)*             * left-associative
    bang   := "!" grade bang | atom_ty
    atom   := "I" | IDENT | "(" type ")"

    term   := "fn" x ":" type "=>" term
            | "let" "unit" "=" term "in" term
            | "let" x "(*)" y "=" term "in" term
            | "discard" term "in" term
            | "copy" "[" grade "," grade "]" term "as" x "," y "in" term
            | tensor
    tensor := appterm ("(*)" appterm)*           (*) left-associative
    app    := prefix prefix*                     juxtaposition, left-assoc
    prefix := "derelict" prefix | atom
    atom   := "unit" | "(" term ")"
            | "!" grade "(" term ")"             sugar for promote[g;](; => t)
            | "promote" "[" grade ";" grades "]"
                        "(" terms ";" idents "=>" term ")"
            | IDENT ("(" term,... ")")?          call iff "(" touches the name
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .quantale import parse_grade, grade_repr
from . import syntax as S


class ParseError(ValueError):
    def __init__(self, message, line=None, col=None):
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<tpair>\(\*\))
  | (?P<arrow>=>|-o|->)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<num>[0-9]+)
  | (?P<punct>[()\[\];:,=*!.])
    """,
    re.VERBOSE,
)

KEYWORDS = {
    "fn", "let", "in", "unit", "promote", "derelict", "discard",
    "copy", "as", "I", "inf",
}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int
    glued: bool  # True when no whitespace separates it from the previous token


def tokenize(text: str):
    tokens = []
    pos, line, col = 0, 1, 1
    glued = True
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "ws":
            glued = False
        else:
            tokens.append(Token(kind, chunk, line, col, glued))
            glued = True
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(Token("eof", "", line, col, False))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    # -- token plumbing

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.text == text and tok.kind != "eof"

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            shown = tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {shown!r}",
                             tok.line, tok.col)
        return tok

    def ident(self) -> str:
        tok = self.next()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            shown = tok.text or "end of input"
            raise ParseError(f"expected an identifier, found {shown!r}",
                             tok.line, tok.col)
        return tok.text

    def grade(self):
        tok = self.next()
        if tok.kind == "num" or tok.text == "inf":
            return parse_grade(tok.text)
        raise ParseError(f"unknown grade literal {tok.text!r}",
                         tok.line, tok.col)

    def done(self):
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"trailing input starting at {tok.text!r}",
                             tok.line, tok.col)

    # -- types

    def type_(self) -> S.TypeExpr:
        left = self.type_tensor()
        if self.at("-o"):
            self.next()
            return S.LolliType(left, self.type_())
        return left

    def type_tensor(self) -> S.TypeExpr:
        out = self.type_bang()
        while self.at("*"):
            self.next()
            out = S.TensorType(out, self.type_bang())
        return out

    def type_bang(self) -> S.TypeExpr:
        if self.at("!"):
            self.next()
            g = self.grade()
            return S.BangType(g, self.type_bang())
        return self.type_atom()

    def type_atom(self) -> S.TypeExpr:
        tok = self.peek()
        if tok.text == "I":
            self.next()
            return S.UnitType()
        if tok.text == "(":
            self.next()
            out = self.type_()
            self.expect(")")
            return out
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.next()
            return S.Ground(tok.text)
        shown = tok.text or "end of input"
        raise ParseError(f"expected a type, found {shown!r}", tok.line, tok.col)

    # -- terms

    def term(self) -> S.Term:
        tok = self.peek()
        if tok.text == "fn":
            self.next()
            x = self.ident()
            self.expect(":")
            ty = self.type_()
            self.expect("=>")
            return S.Lambda(x, ty, self.term())
        if tok.text == "let":
            self.next()
            if self.at("unit"):
                self.next()
                self.expect("=")
                value = self.term_tensor()
                self.expect("in")
                return S.UnitLet(value, self.term())
            x = self.ident()
            self.expect("(*)")
            y = self.ident()
            self.expect("=")
            value = self.term_tensor()
            self.expect("in")
            return S.TensorLet(value, x, y, self.term())
        if tok.text == "discard":
            self.next()
            value = self.term_tensor()
            self.expect("in")
            return S.Discard(value, self.term())
        if tok.text == "copy":
            self.next()
            self.expect("[")
            n = self.grade()
            self.expect(",")
            m = self.grade()
            self.expect("]")
            value = self.term_tensor()
            self.expect("as")
            x = self.ident()
            self.expect(",")
            y = self.ident()
            self.expect("in")
            return S.Copy(n, m, value, x, y, self.term())
        return self.term_tensor()

    def term_tensor(self) -> S.Term:
        out = self.term_app()
        while self.at("(*)"):
            self.next()
            out = S.TensorPair(out, self.term_app())
        return out

    def term_app(self) -> S.Term:
        out = self.term_prefix()
        while self._starts_atom():
            out = S.App(out, self.term_prefix())
        return out

    def _starts_atom(self) -> bool:
        tok = self.peek()
        if tok.kind == "eof":
            return False
        if tok.text in ("(", "unit", "promote", "derelict", "!"):
            return True
        return tok.kind == "ident" and tok.text not in KEYWORDS

    def term_prefix(self) -> S.Term:
        if self.at("derelict"):
            self.next()
            return S.Derelict(self.term_prefix())
        return self.term_atom()

    def term_atom(self) -> S.Term:
        tok = self.peek()
        if tok.text == "unit":
            self.next()
            return S.Star()
        if tok.text == "(":
            self.next()
            out = self.term()
            self.expect(")")
            return out
        if tok.text == "!":
            self.next()
            g = self.grade()
            self.expect("(")
            body = self.term()
            self.expect(")")
            return S.Promote(g, (), (), (), body)
        if tok.text == "promote":
            return self.term_promote()
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.next()
            nxt = self.peek()
            if nxt.text == "(" and nxt.glued:
                self.next()
                args = [self.term()]
                while self.at(","):
                    self.next()
                    args.append(self.term())
                self.expect(")")
                return S.OpApp(tok.text, tuple(args))
            return S.Var(tok.text)
        shown = tok.text or "end of input"
        raise ParseError(f"expected a term, found {shown!r}", tok.line, tok.col)

    def term_promote(self) -> S.Term:
        self.expect("promote")
        self.expect("[")
        r = self.grade()
        self.expect(";")
        grades = []
        if not self.at("]"):
            grades.append(self.grade())
            while self.at(","):
                self.next()
                grades.append(self.grade())
        self.expect("]")
        self.expect("(")
        args = []
        if not self.at(";"):
            args.append(self.term())
            while self.at(","):
                self.next()
                args.append(self.term())
        self.expect(";")
        binders = []
        if not self.at("=>"):
            binders.append(self.ident())
            while self.at(","):
                self.next()
                binders.append(self.ident())
        self.expect("=>")
        body = self.term()
        self.expect(")")
        if not (len(grades) == len(args) == len(binders)):
            raise ParseError("promote vectors must have equal length")
        return S.Promote(r, tuple(grades), tuple(args), tuple(binders), body)

    # -- contexts

    def context(self) -> S.Context:
        entries = []
        if self.peek().kind != "eof":
            entries.append(self.context_entry())
            while self.at(","):
                self.next()
                entries.append(self.context_entry())
        return S.check_context(tuple(entries))

    def context_entry(self):
        x = self.ident()
        self.expect(":")
        return (x, self.type_())


def parse_term(text: str) -> S.Term:
    p = _Parser(text)
    out = p.term()
    p.done()
    return out


def parse_type(text: str) -> S.TypeExpr:
    p = _Parser(text)
    out = p.type_()
    p.done()
    return out


def parse_context(text: str) -> S.Context:
    p = _Parser(text)
    out = p.context()
    p.done()
    return out


# ---------------------------------------------------------------------------
# Printer

def print_type(ty: S.TypeExpr, prec: int = 0) -> str:
    # prec: 0 = lolli position, 1 = tensor, 2 = atom/bang
    match ty:
        case S.Ground(name):
            return name
        case S.UnitType():
            return "I"
        case S.TensorType(a, b):
            out = f"{print_type(a, 2)} * {print_type(b, 2)}"
            return f"({out})" if prec >= 2 else out
        case S.LolliType(a, b):
            out = f"{print_type(a, 1)} -o {print_type(b, 0)}"
            return f"({out})" if prec >= 1 else out
        case S.BangType(g, a):
            return f"!{grade_repr(g)} {print_type(a, 2)}"
    raise ValueError(f"unknown type node {ty!r}")


def print_term(t: S.Term, prec: int = 0) -> str:
    # prec levels: 0 = statement, 1 = tensor operand, 2 = application
    # operand, 3 = atom.
    match t:
        case S.Var(name):
            return name
        case S.Star():
            return "unit"
        case S.OpApp(op, args):
            inner = ", ".join(print_term(a, 0) for a in args)
            return f"{op}({inner})"
        case S.UnitLet(v, b):
            out = f"let unit = {print_term(v, 1)} in {print_term(b, 0)}"
            return f"({out})" if prec > 0 else out
        case S.TensorPair(l, r):
            out = f"{print_term(l, 2)} (*) {print_term(r, 2)}"
            return f"({out})" if prec > 1 else out
        case S.TensorLet(v, x, y, b):
            out = (f"let {x} (*) {y} = {print_term(v, 1)} in "
                   f"{print_term(b, 0)}")
            return f"({out})" if prec > 0 else out
        case S.Lambda(x, ty, b):
            out = f"fn {x} : {print_type(ty)} => {print_term(b, 0)}"
            return f"({out})" if prec > 0 else out
        case S.App(f, a):
            out = f"{print_term(f, 2)} {print_term(a, 3)}"
            return f"({out})" if prec > 2 else out
        case S.Promote(r, grades, args, binders, b) if not grades:
            return f"!{grade_repr(r)} ({print_term(b, 0)})"
        case S.Promote(r, grades, args, binders, b):
            gs = ",".join(grade_repr(g) for g in grades)
            vs = ", ".join(print_term(a, 0) for a in args)
            xs = ", ".join(binders)
            return f"promote[{grade_repr(r)}; {gs}]({vs}; {xs} => {print_term(b, 0)})"
        case S.Derelict(v):
            out = f"derelict {print_term(v, 3)}"
            return f"({out})" if prec > 2 else out
        case S.Discard(v, b):
            out = f"discard {print_term(v, 1)} in {print_term(b, 0)}"
            return f"({out})" if prec > 0 else out
        case S.Copy(n, m, v, x, y, b):
            out = (f"copy[{grade_repr(n)},{grade_repr(m)}] {print_term(v, 1)} "
                   f"as {x},{y} in {print_term(b, 0)}")
            return f"({out})" if prec > 0 else out
    raise ValueError(f"unknown term node {t!r}")


def print_context(ctx: S.Context) -> str:
    return ", ".join(f"{x} : {print_type(ty)}" for x, ty in ctx)
