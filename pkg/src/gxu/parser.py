"""Parser for the textual specification format.

Layout (UTF-8, `#` starts a line comment):

    inputs:  a c
    outputs: b
    assume:
      G(a -> X !a)
    guarantee:
      G(a -> X b)
      G(b -> X !b)

One formula per line.  Operators: ! & | -> <-> X U G F, with `true` and
`false` constants.  Each line must classify into one of the rule
patterns; anything else (nested until, deep triggers) is rejected with a
PatternError naming the violated restriction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from . import formulas as fm
from .errors import PatternError, SpecSyntaxError
from .formulas import (
    GlobalInv,
    Invariance,
    Literal,
    Liveness,
    Reaction1a,
    Reaction1b,
    Spec,
)

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<arrow2><->)|(?P<arrow>->)|(?P<op>[!&|()])"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_.']*)|(?P<bad>\S))"
)

_KEYWORDS = {"G", "F", "X", "U", "true", "false"}


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(line: str, lineno: int):
    toks = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if not m or m.end() == pos:
            break
        pos = m.end()
        if m.lastgroup == "bad":
            raise SpecSyntaxError(f"unexpected character {m.group()!r}", lineno, m.start("bad") + 1)
        text = m.group(m.lastgroup)
        if m.lastgroup == "name" and text in _KEYWORDS:
            toks.append(_Tok(text, text, m.start() + 1))
        else:
            toks.append(_Tok(m.lastgroup, text, m.start() + 1))
    toks.append(_Tok("eof", "", len(line) + 1))
    return toks


# Raw temporal trees before classification:
#   ("var", name) ("const", b) ("not", t) ("and", l, r) ("or", l, r)
#   ("imp", l, r) ("iff", l, r) ("X", t) ("G", t) ("F", t) ("U", l, r)


class _P:
    def __init__(self, toks, lineno):
        self.toks = toks
        self.i = 0
        self.lineno = lineno

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None):
        t = self.toks[self.i]
        if kind and t.kind != kind:
            raise SpecSyntaxError(f"expected {kind!r}, found {t.text or 'end of line'!r}", self.lineno, t.col)
        self.i += 1
        return t

    def parse(self):
        t = self.iff()
        if self.peek().kind != "eof":
            bad = self.peek()
            raise SpecSyntaxError(f"trailing input {bad.text!r}", self.lineno, bad.col)
        return t

    def iff(self):
        left = self.imp()
        while self.peek().kind == "arrow2":
            self.take()
            left = ("iff", left, self.imp())
        return left

    def imp(self):
        left = self.until()
        if self.peek().kind == "arrow":
            self.take()
            return ("imp", left, self.imp())
        return left

    def until(self):
        left = self.disj()
        if self.peek().kind == "U":
            self.take()
            return ("U", left, self.disj())
        return left

    def disj(self):
        left = self.conj()
        while self.peek().text == "|":
            self.take()
            left = ("or", left, self.conj())
        return left

    def conj(self):
        left = self.unary()
        while self.peek().text == "&":
            self.take()
            left = ("and", left, self.unary())
        return left

    def unary(self):
        t = self.peek()
        if t.text == "!":
            self.take()
            return ("not", self.unary())
        if t.kind in ("X", "G", "F"):
            self.take()
            return (t.kind, self.unary())
        return self.atom()

    def atom(self):
        t = self.peek()
        if t.text == "(":
            self.take()
            inner = self.iff()
            closing = self.peek()
            if closing.text != ")":
                raise SpecSyntaxError(
                    f"expected ')', found {closing.text or 'end of line'!r}", self.lineno, closing.col
                )
            self.take()
            return inner
        if t.kind in ("true", "false"):
            self.take()
            return ("const", t.kind == "true")
        if t.kind == "name":
            self.take()
            return ("var", t.text)
        raise SpecSyntaxError(f"expected a formula, found {t.text or 'end of line'!r}", self.lineno, t.col)


def parse_formula_line(line: str, lineno: int = 1):
    return _P(_tokenize(line, lineno), lineno).parse()


# ---------------------------------------------------------------------------
# Classification into the rule patterns


def _is_temporal_free(t) -> bool:
    tag = t[0]
    if tag in ("X", "G", "F", "U"):
        return False
    if tag in ("var", "const"):
        return True
    return all(_is_temporal_free(s) for s in t[1:])


def _to_basic(t, what: str):
    """Raw tree -> basic formula; only !, &, |, -> over X^j literals."""
    tag = t[0]
    if tag == "const":
        return fm.B_TRUE if t[1] else fm.B_FALSE
    if tag == "var":
        return fm.bl(t[1])
    if tag == "not":
        return fm.bnot(_to_basic(t[1], what))
    if tag == "and":
        return fm.band([_to_basic(t[1], what), _to_basic(t[2], what)])
    if tag == "or":
        return fm.bor([_to_basic(t[1], what), _to_basic(t[2], what)])
    if tag == "imp":
        return fm.bor([fm.bnot(_to_basic(t[1], what)), _to_basic(t[2], what)])
    if tag == "X":
        return fm.bshift(_to_basic(t[1], what), 1)
    if tag == "U":
        raise PatternError(f"{what} is not basic: nested until")
    if tag == "iff":
        raise PatternError(f"{what} may not contain '<->'")
    raise PatternError(f"{what} may not contain the temporal operator {tag}")


def _strip_x(t):
    i = 0
    while t[0] == "X":
        i += 1
        t = t[1]
    return i, t


def _to_literal(t) -> Optional[Literal]:
    if t[0] == "var":
        return Literal(t[1])
    if t[0] == "not" and t[1][0] == "var":
        return Literal(t[1][1], True)
    return None


def classify(ast) -> fm.GxuFormula:
    """Map a raw temporal tree onto exactly one rule pattern."""
    if ast[0] == "F":
        body = ast[1]
        if not _is_temporal_free(body):
            raise PatternError("liveness body must be temporal-free")
        phi = Liveness(_to_basic(body, "liveness body"))
        fm.validate_formula(phi)
        return phi
    if ast[0] != "G":
        raise PatternError("top-level formula must start with G or F")
    sub = ast[1]
    if _is_temporal_free(sub):
        phi = GlobalInv(_to_basic(sub, "invariant body"))
        fm.validate_formula(phi)
        return phi
    if sub[0] == "iff":
        trig_t, rhs = sub[1], sub[2]
        i, inner = _strip_x(rhs)
        target = _to_literal(inner)
        if target is None:
            raise PatternError("the right side of '<->' must be X^i applied to a literal")
        trigger = _to_basic(trig_t, "trigger")
        phi = Invariance(trigger, i, target)
        fm.validate_formula(phi)
        return phi
    if sub[0] == "imp":
        trig_t, rhs = sub[1], sub[2]
        i, inner = _strip_x(rhs)
        trigger = _to_basic(trig_t, "trigger")
        lit = _to_literal(inner)
        if lit is not None:
            if i == 0:
                raise PatternError(
                    "temporal-free implication inside G classifies as a global invariant"
                )
            phi = Reaction1a(trigger, i, lit)
            fm.validate_formula(phi)
            return phi
        if inner[0] == "U":
            hold_t, rel_t = inner[1], inner[2]
            if hold_t == ("const", True):
                hold = None
            else:
                hold = _to_literal(hold_t)
                if hold is None:
                    raise PatternError("the left side of 'U' must be a literal (or true)")
            release = _to_basic(rel_t, "release")
            phi = Reaction1b(trigger, i, hold, release)
            fm.validate_formula(phi)
            return phi
        raise PatternError("right side of '->' must be X^i applied to a literal or (lit U basic)")
    raise PatternError("G body must be an implication, a biconditional, or temporal-free")


def classify_line(line: str, lineno: int = 1) -> fm.GxuFormula:
    return classify(parse_formula_line(line, lineno))


# ---------------------------------------------------------------------------
# Spec files


def parse_spec(text: str) -> Spec:
    inputs, outputs = None, None
    assumptions, guarantees = [], []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if low.startswith("inputs:"):
            inputs = line.split(":", 1)[1].split()
            continue
        if low.startswith("outputs:"):
            outputs = line.split(":", 1)[1].split()
            continue
        if low.startswith("assume:"):
            section = assumptions
            line = line.split(":", 1)[1].strip()
            if not line:
                continue
        elif low.startswith("guarantee:"):
            section = guarantees
            line = line.split(":", 1)[1].strip()
            if not line:
                continue
        if section is None:
            raise SpecSyntaxError("formula outside of assume:/guarantee: sections", lineno)
        try:
            section.append(classify_line(line, lineno))
        except PatternError as e:
            raise PatternError(f"line {lineno}: {e}") from e
    if inputs is None or outputs is None:
        raise SpecSyntaxError("both 'inputs:' and 'outputs:' headers are required")
    if not guarantees and section is not guarantees:
        raise SpecSyntaxError("missing 'guarantee:' section")
    return Spec(tuple(inputs), tuple(outputs), assumptions, guarantees)


def parse_spec_file(path) -> Spec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_spec(fh.read())
