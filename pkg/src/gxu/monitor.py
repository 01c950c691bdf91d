"""Window acceptors for trigger and release conditions.

An l-length monitor reads a window of l letters (total assignments to
the watched variables) and accepts exactly the windows on which the
watched formula holds pointwise, leaf X^j p reading position j.  The
automaton is built directly from the formula tree: a state is the pair
(position, residual formula), where the residual is what remains to be
checked after absorbing the letters read so far.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import formulas as fm
from .errors import LengthError


def letters_over(names) -> list:
    """All total assignments over a variable tuple, as dicts."""
    names = tuple(names)
    out = []
    for bits in itertools.product((False, True), repeat=len(names)):
        out.append(dict(zip(names, bits)))
    return out


@dataclass
class Monitor:
    formula: tuple  # basic formula being watched
    length: int
    vars: tuple
    states: list = field(default_factory=list)  # residual-formula labels
    initial: int = 0
    finals: frozenset = frozenset()
    transitions: dict = field(default_factory=dict)  # (state, letter key) -> state

    def letter_key(self, letter: dict):
        return tuple(bool(letter[v]) for v in self.vars)

    def run(self, window) -> int:
        if len(window) != self.length:
            raise LengthError(f"window of length {len(window)}, monitor length {self.length}")
        q = self.initial
        for letter in window:
            q = self.transitions[(q, self.letter_key(letter))]
        return q

    def valuation(self, window) -> bool:
        """The word valuation: true iff the run ends in a final state."""
        return self.run(window) in self.finals

    def to_dot(self, name="monitor") -> str:
        lines = [f'digraph "{name}" {{', "  rankdir=LR;"]
        for i, label in enumerate(self.states):
            shape = "doublecircle" if i in self.finals else "circle"
            lines.append(f'  q{i} [shape={shape} label="q{i}\\n{_short(label)}"];')
        grouped = {}
        for (q, key), q2 in self.transitions.items():
            text = ",".join(v if b else "!" + v for v, b in zip(self.vars, key)) or "*"
            grouped.setdefault((q, q2), []).append(text)
        for (q, q2), labels in sorted(grouped.items()):
            lines.append(f'  q{q} -> q{q2} [label="{" / ".join(labels)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _short(label) -> str:
    if isinstance(label, tuple):
        return fm.bfmt(label).replace('"', "'")
    return str(label)


def build_monitor(phi: tuple, length: int | None = None) -> Monitor:
    """Deterministic window acceptor for a basic formula.

    The window length defaults to depth+1; reactions pass their declared
    i+1 so that triggers shallower than i still align with the action
    position.
    """
    depth = fm.bdepth(phi)
    if length is None:
        length = depth + 1
    if length < depth + 1:
        raise LengthError(f"length {length} cannot cover depth {depth}")
    names = tuple(sorted(fm.bvars(phi)))
    letters = letters_over(names)

    m = Monitor(formula=phi, length=length, vars=names)
    # State = residual formula after k letters, with depths shifted to 0.
    index = {}

    def state_of(residual) -> int:
        if residual not in index:
            index[residual] = len(m.states)
            m.states.append(residual)
        return index[residual]

    m.initial = state_of(phi)
    frontier = [(phi, 0)]
    seen = {(phi, 0)}
    finals = set()
    while frontier:
        residual, k = frontier.pop()
        q = state_of(residual)
        if k == length:
            if residual == fm.B_TRUE:
                finals.add(q)
            continue
        for letter in letters:
            nxt = fm.bshift(fm.bassign_step(residual, 0, letter), -1)
            q2 = state_of(nxt)
            m.transitions[(q, m.letter_key(letter))] = q2
            if (nxt, k + 1) not in seen:
                seen.add((nxt, k + 1))
                frontier.append((nxt, k + 1))
    m.finals = frozenset(finals)
    return m


def evaluate(m: Monitor, window) -> bool:
    """theta(w): the monitor's verdict on a full-length window."""
    return m.valuation(window)
