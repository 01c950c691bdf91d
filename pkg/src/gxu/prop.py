"""Pointwise propositional formulas over indexed variables x[j].

Formulas are immutable tagged tuples; the constructors fold constants,
flatten nested connectives, drop duplicates and detect complementary
subformulas, so most intermediate garbage never materializes.

Variables carry a kind: "in" (environment), "out" (system) or "ph"
(placeholder, the don't-care slots of candidate output definitions).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import SizeBlowup


class PV(NamedTuple):
    """A pointwise variable: base name, step index, and kind."""

    base: str
    step: int
    kind: str  # "in" | "out" | "ph"

    def __str__(self):
        return f"{self.base}[{self.step}]"


TRUE = ("k", True)
FALSE = ("k", False)

# Literal used in CNF clauses: (variable, polarity). Positive polarity is True.
Lit = tuple


def var(pv: PV):
    return ("v", pv)


def lit(pv: PV, positive: bool = True):
    return ("v", pv) if positive else ("n", ("v", pv))


def lnot(f):
    tag = f[0]
    if tag == "k":
        return FALSE if f[1] else TRUE
    if tag == "n":
        return f[1]
    return ("n", f)


def _flatten(tag, fs):
    out = []
    for f in fs:
        if f[0] == tag:
            out.extend(f[1])
        else:
            out.append(f)
    return out


def land(fs) -> tuple:
    parts = []
    seen = set()
    for f in _flatten("a", fs):
        if f == TRUE:
            continue
        if f == FALSE:
            return FALSE
        if f not in seen:
            seen.add(f)
            parts.append(f)
    for f in parts:
        if lnot(f) in seen:
            return FALSE
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return ("a", tuple(parts))


def lor(fs) -> tuple:
    parts = []
    seen = set()
    for f in _flatten("o", fs):
        if f == FALSE:
            continue
        if f == TRUE:
            return TRUE
        if f not in seen:
            seen.add(f)
            parts.append(f)
    for f in parts:
        if lnot(f) in seen:
            return TRUE
    if not parts:
        return FALSE
    if len(parts) == 1:
        return parts[0]
    return ("o", tuple(parts))


def implies(a, b):
    return lor([lnot(a), b])


def iff(a, b):
    return land([implies(a, b), implies(b, a)])


def vars_of(f) -> set:
    out = set()
    stack = [f]
    while stack:
        g = stack.pop()
        tag = g[0]
        if tag == "v":
            out.add(g[1])
        elif tag == "n":
            stack.append(g[1])
        elif tag in ("a", "o"):
            stack.extend(g[1])
    return out


def subst(f, mapping: dict):
    """Replace variables by formulas. Rebuilds through the constructors."""
    memo = {}

    def go(g):
        r = memo.get(g)
        if r is not None:
            return r
        tag = g[0]
        if tag == "k":
            r = g
        elif tag == "v":
            r = mapping.get(g[1], g)
        elif tag == "n":
            r = lnot(go(g[1]))
        elif tag == "a":
            r = land([go(x) for x in g[1]])
        else:
            r = lor([go(x) for x in g[1]])
        memo[g] = r
        return r

    return go(f)


def assign(f, values: dict):
    """Partially evaluate under a {PV: bool} assignment."""
    return subst(f, {pv: (TRUE if b else FALSE) for pv, b in values.items()})


def evaluate(f, values: dict) -> bool:
    tag = f[0]
    if tag == "k":
        return f[1]
    if tag == "v":
        return values[f[1]]
    if tag == "n":
        return not evaluate(f[1], values)
    if tag == "a":
        return all(evaluate(g, values) for g in f[1])
    return any(evaluate(g, values) for g in f[1])


def polarities(f) -> dict:
    """Map every variable to the set of polarities it occurs with."""
    out: dict = {}
    stack = [(f, True)]
    while stack:
        g, pos = stack.pop()
        tag = g[0]
        if tag == "v":
            out.setdefault(g[1], set()).add(pos)
        elif tag == "n":
            stack.append((g[1], not pos))
        elif tag in ("a", "o"):
            stack.extend((x, pos) for x in g[1])
    return out


def exists(f, pv: PV):
    """Shannon expansion: drop pv existentially."""
    return lor([assign(f, {pv: True}), assign(f, {pv: False})])


def nnf(f, positive=True):
    tag = f[0]
    if tag == "k":
        return f if positive else lnot(f)
    if tag == "v":
        return f if positive else ("n", f)
    if tag == "n":
        return nnf(f[1], not positive)
    sub = [nnf(g, positive) for g in f[1]]
    if (tag == "a") == positive:
        return land(sub)
    return lor(sub)


# ---------------------------------------------------------------------------
# CNF


Clause = frozenset  # of (PV, bool)


@dataclass
class TautologyResult:
    valid: bool
    failing: list

    def __bool__(self):
        return self.valid


def _clause_taut(c: Clause) -> bool:
    # Linear scan against a polarity table: O(|c|).
    table = {}
    for pv, pos in c:
        prev = table.get(pv)
        if prev is not None and prev != pos:
            return True
        table[pv] = pos
    return False


def to_cnf(f, max_clauses: int = 200_000) -> list:
    """Distributive CNF, logically equivalent to f (no fresh variables).

    Raises SizeBlowup when the clause count would exceed max_clauses;
    inputs that stay inside the rule-shaped fragment never get there.
    """
    g = nnf(f)
    memo = {}

    def go(h) -> list:
        r = memo.get(h)
        if r is not None:
            return r
        tag = h[0]
        if tag == "k":
            r = [] if h[1] else [frozenset()]
        elif tag == "v":
            r = [frozenset([(h[1], True)])]
        elif tag == "n":
            r = [frozenset([(h[1][1], False)])]
        elif tag == "a":
            r = []
            seen = set()
            for x in h[1]:
                for c in go(x):
                    if c not in seen:
                        seen.add(c)
                        r.append(c)
            if len(r) > max_clauses:
                raise SizeBlowup(f"{len(r)} clauses")
        else:  # or: cross product, smallest factors first
            parts = sorted((go(x) for x in h[1]), key=len)
            acc = [frozenset()]
            for p in parts:
                nxt = []
                seen = set()
                for c2 in p:
                    neg2 = frozenset((pv, not pos) for pv, pos in c2)
                    for c1 in acc:
                        if c1 & neg2:
                            continue  # complementary pair: tautology
                        c = c1 | c2
                        if c in seen:
                            continue
                        seen.add(c)
                        nxt.append(c)
                if len(nxt) > max_clauses:
                    raise SizeBlowup(f"{len(nxt)} clauses")
                acc = nxt
            r = acc
        memo[h] = r
        return r

    clauses = go(g)
    # Light subsumption: drop clauses that are supersets of another.
    clauses.sort(key=len)
    kept = []
    for c in clauses:
        if any(k <= c for k in kept):
            continue
        kept.append(c)
    return kept


def is_tautology(cnf: Iterable[Clause]) -> TautologyResult:
    """Valid iff every clause contains complementary literals."""
    failing = [c for c in cnf if not _clause_taut(c)]
    return TautologyResult(not failing, failing)


def cnf_to_formula(cnf) -> tuple:
    return land([lor([lit(pv, pos) for pv, pos in c]) for c in cnf])


def clause_formula(c: Clause) -> tuple:
    return lor([lit(pv, pos) for pv, pos in c])


# ---------------------------------------------------------------------------
# Rendering


def fmt(f) -> str:
    tag = f[0]
    if tag == "k":
        return "true" if f[1] else "false"
    if tag == "v":
        return str(f[1])
    if tag == "n":
        inner = fmt(f[1])
        if f[1][0] in ("a", "o"):
            return f"!({inner})"
        return f"!{inner}"
    sep = " & " if tag == "a" else " | "
    parts = []
    for g in f[1]:
        s = fmt(g)
        if g[0] in ("a", "o") and g[0] != tag:
            s = f"({s})"
        parts.append(s)
    return sep.join(parts)


def fmt_clause(c: Clause) -> str:
    if not c:
        return "false"
    items = sorted(c, key=lambda l: (l[0].step, l[0].base, not l[1]))
    return " | ".join(("" if pos else "!") + str(pv) for pv, pos in items)


def dimacs(cnf, header="") -> str:
    """DIMACS-like dump with a variable map in comments."""
    ids = {}
    for c in cnf:
        for pv, _ in sorted(c, key=lambda l: (l[0].step, l[0].base)):
            if pv not in ids:
                ids[pv] = len(ids) + 1
    lines = []
    if header:
        lines.append(f"c {header}")
    for pv, i in ids.items():
        lines.append(f"c var {i} = {pv} ({pv.kind})")
    lines.append(f"p cnf {len(ids)} {len(list(cnf))}")
    for c in cnf:
        lits = sorted((ids[pv] if pos else -ids[pv]) for pv, pos in c)
        lines.append(" ".join(str(x) for x in lits) + " 0")
    return "\n".join(lines) + "\n"
