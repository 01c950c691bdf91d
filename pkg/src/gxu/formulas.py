"""Rule-pattern temporal formulas and assume-guarantee specifications.

The supported shapes mirror the four rule patterns of the input
language: reactions with a literal or an until on the right-hand side,
invariances, global invariants and liveness conditions.  Triggers and
release conditions are "basic" formulas: boolean combinations of
literals under bounded next-step offsets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

from .errors import PartitionError, PatternError


class Literal(NamedTuple):
    var: str
    neg: bool = False

    def negate(self) -> "Literal":
        return Literal(self.var, not self.neg)

    def __str__(self):
        return ("!" if self.neg else "") + self.var


# ---------------------------------------------------------------------------
# Basic formulas: boolean combinations of X^j literals.
#
# Nodes are tagged tuples, as in prop:
#   ("k", bool) | ("l", var, neg, depth) | ("n", f) | ("a", fs) | ("o", fs)

B_TRUE = ("k", True)
B_FALSE = ("k", False)


def bl(name: str, neg: bool = False, depth: int = 0):
    return ("l", name, neg, depth)


def bnot(f):
    if f[0] == "k":
        return B_FALSE if f[1] else B_TRUE
    if f[0] == "n":
        return f[1]
    if f[0] == "l":
        return ("l", f[1], not f[2], f[3])
    return ("n", f)


def _bflat(tag, fs):
    out = []
    for f in fs:
        if f[0] == tag:
            out.extend(f[1])
        else:
            out.append(f)
    return out


def band(fs):
    parts, seen = [], set()
    for f in _bflat("a", fs):
        if f == B_TRUE:
            continue
        if f == B_FALSE:
            return B_FALSE
        if f not in seen:
            seen.add(f)
            parts.append(f)
    for f in parts:
        if bnot(f) in seen:
            return B_FALSE
    if not parts:
        return B_TRUE
    return parts[0] if len(parts) == 1 else ("a", tuple(parts))


def bor(fs):
    parts, seen = [], set()
    for f in _bflat("o", fs):
        if f == B_FALSE:
            continue
        if f == B_TRUE:
            return B_TRUE
        if f not in seen:
            seen.add(f)
            parts.append(f)
    for f in parts:
        if bnot(f) in seen:
            return B_TRUE
    if not parts:
        return B_FALSE
    return parts[0] if len(parts) == 1 else ("o", tuple(parts))


def bdepth(f) -> int:
    tag = f[0]
    if tag == "k":
        return 0
    if tag == "l":
        return f[3]
    if tag == "n":
        return bdepth(f[1])
    return max(bdepth(g) for g in f[1])


def bvars(f) -> set:
    tag = f[0]
    if tag == "k":
        return set()
    if tag == "l":
        return {f[1]}
    if tag == "n":
        return bvars(f[1])
    return set().union(*(bvars(g) for g in f[1]))


def beval(f, window) -> bool:
    """Pointwise truth on a window of {var: bool} letters; leaf X^j p reads window[j]."""
    tag = f[0]
    if tag == "k":
        return f[1]
    if tag == "l":
        v = bool(window[f[3]][f[1]])
        return (not v) if f[2] else v
    if tag == "n":
        return not beval(f[1], window)
    if tag == "a":
        return all(beval(g, window) for g in f[1])
    return any(beval(g, window) for g in f[1])


def beval3(f, window):
    """Kleene evaluation on a window whose letters may be partial.

    A letter is a {var: bool} dict; missing vars (or a None letter, for
    positions past the end of a word) evaluate to unknown (None).
    """
    tag = f[0]
    if tag == "k":
        return f[1]
    if tag == "l":
        if f[3] >= len(window) or window[f[3]] is None:
            return None
        v = window[f[3]].get(f[1])
        if v is None:
            return None
        return (not v) if f[2] else bool(v)
    if tag == "n":
        v = beval3(f[1], window)
        return None if v is None else not v
    if tag == "a":
        vals = [beval3(g, window) for g in f[1]]
        if any(v is False for v in vals):
            return False
        return None if any(v is None for v in vals) else True
    vals = [beval3(g, window) for g in f[1]]
    if any(v is True for v in vals):
        return True
    return None if any(v is None for v in vals) else False


def bshift(f, delta: int):
    tag = f[0]
    if tag == "k":
        return f
    if tag == "l":
        return ("l", f[1], f[2], f[3] + delta)
    if tag == "n":
        return ("n", bshift(f[1], delta))
    fs = tuple(bshift(g, delta) for g in f[1])
    return band(fs) if tag == "a" else bor(fs)


def bassign_step(f, step: int, letter: dict):
    """Substitute truth values for all depth-`step` literals."""
    tag = f[0]
    if tag == "k":
        return f
    if tag == "l":
        if f[3] != step:
            return f
        v = bool(letter[f[1]])
        v = (not v) if f[2] else v
        return B_TRUE if v else B_FALSE
    if tag == "n":
        return bnot(bassign_step(f[1], step, letter))
    fs = [bassign_step(g, step, letter) for g in f[1]]
    return band(fs) if tag == "a" else bor(fs)


def bfmt(f) -> str:
    tag = f[0]
    if tag == "k":
        return "true" if f[1] else "false"
    if tag == "l":
        return "X " * f[3] + ("!" if f[2] else "") + f[1]
    if tag == "n":
        inner = bfmt(f[1])
        return f"!({inner})" if f[1][0] in ("a", "o") else f"!{inner}"
    sep = " & " if tag == "a" else " | "
    parts = []
    for g in f[1]:
        s = bfmt(g)
        if g[0] in ("a", "o") and g[0] != tag:
            s = f"({s})"
        parts.append(s)
    return sep.join(parts)


# ---------------------------------------------------------------------------
# Rule patterns


@dataclass(frozen=True)
class Reaction1a:
    trigger: tuple
    i: int
    action: Literal

    def __str__(self):
        return f"G({bfmt(self.trigger)} -> {'X ' * self.i}{self.action})"


@dataclass(frozen=True)
class Reaction1b:
    trigger: tuple
    i: int
    hold: Optional[Literal]  # None encodes the constant true hold
    release: tuple

    def __str__(self):
        hold = "true" if self.hold is None else str(self.hold)
        return f"G({bfmt(self.trigger)} -> {'X ' * self.i}({hold} U {bfmt(self.release)}))"


@dataclass(frozen=True)
class Invariance:
    trigger: tuple
    i: int
    target: Literal

    def __str__(self):
        return f"G({bfmt(self.trigger)} <-> {'X ' * self.i}{self.target})"


@dataclass(frozen=True)
class GlobalInv:
    body: tuple  # depth-0 basic formula

    def __str__(self):
        return f"G({bfmt(self.body)})"


@dataclass(frozen=True)
class Liveness:
    body: tuple

    def __str__(self):
        return f"F({bfmt(self.body)})"


GxuFormula = Union[Reaction1a, Reaction1b, Invariance, GlobalInv, Liveness]


def formula_vars(phi: GxuFormula) -> set:
    if isinstance(phi, Reaction1a):
        return bvars(phi.trigger) | {phi.action.var}
    if isinstance(phi, Reaction1b):
        vs = bvars(phi.trigger) | bvars(phi.release)
        if phi.hold is not None:
            vs.add(phi.hold.var)
        return vs
    if isinstance(phi, Invariance):
        return bvars(phi.trigger) | {phi.target.var}
    return bvars(phi.body)


def formula_depth(phi: GxuFormula) -> int:
    """Largest next-step offset the formula can reference (its i, or 0)."""
    if isinstance(phi, (Reaction1a, Reaction1b, Invariance)):
        return phi.i
    return 0


def validate_formula(phi: GxuFormula):
    """Check the basic-up-to-i bounds; raises PatternError on violation."""
    if isinstance(phi, (Reaction1a, Reaction1b, Invariance)):
        if bdepth(phi.trigger) > phi.i:
            raise PatternError(
                f"trigger of {phi} uses next-step depth {bdepth(phi.trigger)} > {phi.i}"
            )
    if isinstance(phi, Reaction1b) and bdepth(phi.release) > phi.i:
        raise PatternError(
            f"release of {phi} uses next-step depth {bdepth(phi.release)} > {phi.i}"
        )
    if isinstance(phi, (GlobalInv, Liveness)) and bdepth(phi.body) > 0:
        raise PatternError(f"body of {phi} must be temporal-free")


@dataclass
class Spec:
    inputs: tuple
    outputs: tuple
    assumptions: list = field(default_factory=list)
    guarantees: list = field(default_factory=list)

    def __post_init__(self):
        self.inputs = tuple(self.inputs)
        self.outputs = tuple(self.outputs)
        overlap = set(self.inputs) & set(self.outputs)
        if overlap:
            raise PartitionError(f"inputs and outputs overlap: {sorted(overlap)}")
        declared = set(self.inputs) | set(self.outputs)
        for phi in self.assumptions:
            bad = formula_vars(phi) - set(self.inputs)
            if bad & set(self.outputs):
                raise PartitionError(
                    f"assumption {phi} mentions output variables {sorted(bad & set(self.outputs))}"
                )
            if bad - set(self.outputs):
                raise PartitionError(f"assumption {phi} uses undeclared {sorted(bad)}")
        for phi in self.guarantees:
            bad = formula_vars(phi) - declared
            if bad:
                raise PartitionError(f"guarantee {phi} uses undeclared {sorted(bad)}")
        for phi in self.assumptions + self.guarantees:
            validate_formula(phi)

    def kind_of(self, name: str) -> str:
        return "in" if name in self.inputs else "out"

    def all_formulas(self):
        return list(self.assumptions) + list(self.guarantees)

    def pretty(self) -> str:
        lines = [
            "inputs: " + " ".join(self.inputs),
            "outputs: " + " ".join(self.outputs),
        ]
        if self.assumptions:
            lines.append("assume:")
            lines.extend(f"  {phi}" for phi in self.assumptions)
        lines.append("guarantee:")
        lines.extend(f"  {phi}" for phi in self.guarantees)
        return "\n".join(lines) + "\n"
