"""Controller automata guarded by window monitors.

One template per rule pattern.  Transitions are guarded by conjunctions
of monitor valuations at step offsets; each enabled transition emits a
partial output letter (pinned variables), everything unpinned is the
placeholder.  A run over a finite input word produces one output letter
per position; machines for several rules are joined pointwise, with the
placeholder as the neutral element of the join.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from . import formulas as fm
from . import monitor as mon
from .errors import GuardConflict, OutputConflict
from .formulas import (
    GlobalInv,
    Invariance,
    Literal,
    Liveness,
    Reaction1a,
    Reaction1b,
    Spec,
)

BETA = "beta"  # placeholder marker used in rendered traces


@dataclass(frozen=True)
class GuardAtom:
    monitor: str
    offset: int
    positive: bool


@dataclass
class Transition:
    src: str
    guard: tuple  # of GuardAtom, conjunctive
    dst: str
    output: dict  # var -> bool; unpinned vars mean placeholder


@dataclass
class Configuration:
    state: str
    w1: list = field(default_factory=list)
    w2: list = field(default_factory=list)


@dataclass
class MealyMachine:
    name: str
    states: list
    accepting: frozenset
    initial: str
    monitors: dict  # name -> Monitor
    transitions: list
    emit_offset: int  # output lands at stage + emit_offset
    safe: int | None = None  # transition index taken when a guard is unknown

    # -- guard evaluation ------------------------------------------------

    def _atom_value(self, atom: GuardAtom, stage: int, joint):
        m = self.monitors[atom.monitor]
        start = stage + atom.offset
        window = []
        for k in range(m.length):
            p = start + k
            window.append(joint[p] if 0 <= p < len(joint) else None)
        v = fm.beval3(m.formula, window)
        if v is None and any(w is None and start + k >= len(joint) for k, w in enumerate(window)):
            v = False  # incomplete window: not yet accepting
        if v is None:
            return None
        return v if atom.positive else (not v)

    def enabled(self, state: str, stage: int, joint):
        """Indices of enabled transitions; None when some guard is unknown."""
        out = []
        unknown = False
        for idx, t in enumerate(self.transitions):
            if t.src != state:
                continue
            vals = [self._atom_value(a, stage, joint) for a in t.guard]
            if any(v is False for v in vals):
                continue
            if any(v is None for v in vals):
                unknown = True
                continue
            out.append(idx)
        if unknown and not out:
            return None
        return out

    def step_at(self, state: str, stage: int, joint):
        """Pick the unique enabled transition for this stage."""
        en = self.enabled(state, stage, joint)
        if en is None:
            if self.safe is not None:
                return self.transitions[self.safe]
            raise GuardConflict(f"{self.name}: guard undetermined at stage {stage}")
        if len(en) != 1:
            raise GuardConflict(
                f"{self.name}: {len(en)} transitions enabled at stage {stage} in state {state}"
            )
        return self.transitions[en[0]]

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "states": list(self.states),
            "accepting": sorted(self.accepting),
            "initial": self.initial,
            "emitOffset": self.emit_offset,
            "safe": self.safe,
            "monitors": [
                {"name": n, "formula": fm.bfmt(m.formula), "length": m.length}
                for n, m in sorted(self.monitors.items())
            ],
            "transitions": [
                {
                    "from": t.src,
                    "guard": [a.monitor for a in t.guard],
                    "guardOffset": [a.offset for a in t.guard],
                    "guardPolarity": [a.positive for a in t.guard],
                    "output": {v: bool(b) for v, b in sorted(t.output.items())},
                    "to": t.dst,
                }
                for t in self.transitions
            ],
        }

    def to_dot(self) -> str:
        lines = [f'digraph "{self.name}" {{', "  rankdir=LR;", '  label="%s";' % self.name]
        for s in self.states:
            shape = "doublecircle" if s in self.accepting else "circle"
            lines.append(f'  "{s}" [shape={shape}];')
        for t in self.transitions:
            guard = " & ".join(
                ("" if a.positive else "!") + f"{a.monitor}@{a.offset}" for a in t.guard
            ) or "true"
            out = ", ".join(f"{v}={'1' if b else '0'}" for v, b in sorted(t.output.items())) or BETA
            lines.append(f'  "{t.src}" -> "{t.dst}" [label="{guard} / {out}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def machine_from_json(doc: dict, parse_basic) -> MealyMachine:
    monitors = {}
    for m in doc["monitors"]:
        monitors[m["name"]] = mon.build_monitor(parse_basic(m["formula"]), m["length"])
    transitions = [
        Transition(
            t["from"],
            tuple(
                GuardAtom(n, o, p)
                for n, o, p in zip(t["guard"], t["guardOffset"], t["guardPolarity"])
            ),
            t["to"],
            {v: bool(b) for v, b in t["output"].items()},
        )
        for t in doc["transitions"]
    ]
    return MealyMachine(
        name=doc["name"],
        states=list(doc["states"]),
        accepting=frozenset(doc["accepting"]),
        initial=doc["initial"],
        monitors=monitors,
        transitions=transitions,
        emit_offset=doc["emitOffset"],
        safe=doc.get("safe"),
    )


# ---------------------------------------------------------------------------
# Templates


def _lit_out(lit: Literal | None) -> dict:
    if lit is None:
        return {}
    return {lit.var: not lit.neg}


def _letter_formula(letter: dict):
    return fm.band([fm.bl(v, not b) for v, b in sorted(letter.items())])


def _implicant(body, sigma: dict, out_vars) -> dict | None:
    """A partial output assignment whose every completion satisfies body|sigma."""
    fixed = body
    for v, b in sigma.items():
        fixed = _subst_var(fixed, v, b)
    full = None
    for bits in itertools.product((False, True), repeat=len(out_vars)):
        cand = dict(zip(out_vars, bits))
        g = fixed
        for v, b in cand.items():
            g = _subst_var(g, v, b)
        if g == fm.B_TRUE:
            full = cand
            break
    if full is None:
        return None
    # Greedy widening: unpin variables whose both values stay satisfying.
    pinned = dict(full)
    for v in list(out_vars):
        trial = {k: b for k, b in pinned.items() if k != v}
        ok = True
        for bits in itertools.product((False, True), repeat=len(out_vars) - len(trial)):
            free = [u for u in out_vars if u not in trial]
            g = fixed
            for u, b in {**trial, **dict(zip(free, bits))}.items():
                g = _subst_var(g, u, b)
            if g != fm.B_TRUE:
                ok = False
                break
        if ok:
            pinned = trial
    return pinned


def _subst_var(f, name: str, value: bool):
    tag = f[0]
    if tag == "k":
        return f
    if tag == "l":
        if f[1] != name:
            return f
        v = (not value) if f[2] else value
        return fm.B_TRUE if v else fm.B_FALSE
    if tag == "n":
        return fm.bnot(_subst_var(f[1], name, value))
    fs = [_subst_var(g, name, value) for g in f[1]]
    return fm.band(fs) if tag == "a" else fm.bor(fs)


def _reaction1a_machine(phi: Reaction1a, name: str) -> MealyMachine:
    l = phi.i + 1
    m1 = mon.build_monitor(phi.trigger, l)
    yes = (GuardAtom("m1", 0, True),)
    no = (GuardAtom("m1", 0, False),)
    out = _lit_out(phi.action)
    transitions = [
        Transition("q0", yes, "q1", dict(out)),
        Transition("q0", no, "q0", {}),
        Transition("q1", yes, "q1", dict(out)),
        Transition("q1", no, "q0", {}),
    ]
    return MealyMachine(name, ["q0", "q1"], frozenset(["q0", "q1"]), "q0",
                        {"m1": m1}, transitions, emit_offset=phi.i, safe=0)


def _invariance_machine(phi: Invariance, name: str) -> MealyMachine:
    l = phi.i + 1
    m1 = mon.build_monitor(phi.trigger, l)
    yes = (GuardAtom("m1", 0, True),)
    no = (GuardAtom("m1", 0, False),)
    out_t = _lit_out(phi.target)
    out_f = _lit_out(phi.target.negate())
    transitions = [
        Transition("q0", yes, "q1", dict(out_t)),
        Transition("q0", no, "q0", dict(out_f)),
        Transition("q1", yes, "q1", dict(out_t)),
        Transition("q1", no, "q0", dict(out_f)),
    ]
    return MealyMachine(name, ["q0", "q1"], frozenset(["q0", "q1"]), "q0",
                        {"m1": m1}, transitions, emit_offset=phi.i, safe=None)


def _hold_machine(phi: Reaction1b, name: str) -> MealyMachine:
    l = phi.i + 1
    m1 = mon.build_monitor(phi.trigger, l)
    m2 = mon.build_monitor(phi.release, l)
    t1p = GuardAtom("m1", 0, True)
    t1n = GuardAtom("m1", 0, False)
    t2p = GuardAtom("m2", phi.i, True)
    t2n = GuardAtom("m2", phi.i, False)
    out = _lit_out(phi.hold)
    transitions = [
        Transition("q0", (t1p, t2n), "q1", dict(out)),
        Transition("q0", (t1p, t2p), "q0", {}),
        Transition("q0", (t1n,), "q0", {}),
        Transition("q1", (t2n,), "q1", dict(out)),
        Transition("q1", (t2p,), "q0", {}),
    ]
    return MealyMachine(name, ["q0", "q1"], frozenset(["q0", "q1"]), "q0",
                        {"m1": m1, "m2": m2}, transitions, emit_offset=phi.i, safe=0)


def _release_machine(phi: Reaction1b, name: str) -> MealyMachine:
    """Template with one non-accepting state, tracking the pending release."""
    l = phi.i + 1
    m1 = mon.build_monitor(phi.trigger, l)
    m2 = mon.build_monitor(phi.release, l)
    t1p = GuardAtom("m1", 0, True)
    t1n = GuardAtom("m1", 0, False)
    t2p = GuardAtom("m2", phi.i, True)
    t2n = GuardAtom("m2", phi.i, False)
    transitions = [
        Transition("q0", (t1p, t2n), "q1", {}),
        Transition("q0", (t1p, t2p), "q2", {}),
        Transition("q0", (t1n,), "q0", {}),
        Transition("q1", (t2p,), "q2", {}),
        Transition("q1", (t2n, t1p), "q1", {}),
        Transition("q1", (t2n, t1n), "q0", {}),
        Transition("q2", (t1p, t2n), "q1", {}),
        Transition("q2", (t1p, t2p), "q2", {}),
        Transition("q2", (t1n,), "q0", {}),
    ]
    return MealyMachine(name, ["q0", "q1", "q2"], frozenset(["q0", "q2"]), "q0",
                        {"m1": m1, "m2": m2}, transitions, emit_offset=phi.i, safe=2)


def _table_machine(phi: GlobalInv, spec: Spec, name: str) -> MealyMachine:
    """Single-state machine asserting a temporal-free body pointwise."""
    body = phi.body
    ins = tuple(sorted(fm.bvars(body) & set(spec.inputs)))
    outs = tuple(sorted(fm.bvars(body) & set(spec.outputs)))
    monitors = {}
    transitions = []
    states = ["q0"]
    accepting = {"q0"}
    need_sink = False
    for letter in mon.letters_over(ins):
        g = _letter_formula(letter)
        mname = "g" + str(len(monitors))
        monitors[mname] = mon.build_monitor(g if ins else fm.B_TRUE, 1)
        atom = (GuardAtom(mname, 0, True),)
        pins = _implicant(body, letter, outs)
        if pins is None:
            need_sink = True
            transitions.append(Transition("q0", atom, "qf", {}))
        else:
            transitions.append(Transition("q0", atom, "q0", pins))
    if need_sink:
        states.append("qf")
        transitions.append(Transition("qf", (), "qf", {}))
    return MealyMachine(name, states, frozenset(accepting), "q0",
                        monitors, transitions, emit_offset=0, safe=None)


def _liveness_machine(phi: Liveness, spec: Spec, name: str) -> MealyMachine:
    body = phi.body
    ins = tuple(sorted(fm.bvars(body) & set(spec.inputs)))
    outs = tuple(sorted(fm.bvars(body) & set(spec.outputs)))
    monitors = {}
    transitions = []

    def discharge_cases(src):
        """Per input letter: either we can make the body hold now, or wait."""
        for letter in mon.letters_over(ins):
            g = _letter_formula(letter)
            mname = f"g{len(monitors)}"
            monitors[mname] = mon.build_monitor(g if ins else fm.B_TRUE, 1)
            atom = (GuardAtom(mname, 0, True),)
            pins = _implicant(body, letter, outs)
            if pins is None:
                transitions.append(Transition(src, atom, "q1", {}))
            else:
                transitions.append(Transition(src, atom, "q2", pins))

    discharge_cases("q0")
    discharge_cases("q1")
    transitions.append(Transition("q2", (), "q2", {}))
    # Structural back edges keep the graph cliquey; their guards never fire.
    never = GuardAtom("never", 0, True)
    monitors["never"] = mon.build_monitor(fm.B_FALSE, 1)
    for src in ("q0", "q1", "q2"):
        for dst in ("q0", "q1", "q2"):
            transitions.append(Transition(src, (never,), dst, {}))
    return MealyMachine(name, ["q0", "q1", "q2"], frozenset(["q0", "q2"]), "q0",
                        monitors, transitions, emit_offset=0, safe=None)


def instantiate(phi, spec: Spec, tag: str = "phi") -> list:
    """Machines realizing one rule formula (two for the until pattern)."""
    if isinstance(phi, Reaction1a):
        return [_reaction1a_machine(phi, tag)]
    if isinstance(phi, Invariance):
        return [_invariance_machine(phi, tag)]
    if isinstance(phi, Reaction1b):
        return [_hold_machine(phi, tag + ".hold"), _release_machine(phi, tag + ".rel")]
    if isinstance(phi, GlobalInv):
        return [_table_machine(phi, spec, tag)]
    if isinstance(phi, Liveness):
        return [_liveness_machine(phi, spec, tag)]
    raise TypeError(f"not a rule formula: {phi!r}")


# ---------------------------------------------------------------------------
# Operational semantics


def step(machine: MealyMachine, config: Configuration, window) -> Configuration:
    """One transition on an explicit window (the offline, single-machine form).

    The first step consumes the whole window and pads all but the last
    output position with the placeholder; later steps shift by one.
    """
    l = machine.emit_offset + 1
    t = machine.step_at(config.state, 0, list(window))
    new_w1 = list(config.w1)
    new_w2 = list(config.w2)
    if not new_w1:
        new_w1.extend(window[:l])
        new_w2.extend([{}] * (l - 1))
        new_w2.append(dict(t.output))
    else:
        new_w1.append(window[l - 1])
        new_w2.append(dict(t.output))
    return Configuration(t.dst, new_w1, new_w2)


def run(machines, word, outputs=(), record_states=False):
    """Joint run of several machines on a finite input word.

    Returns the list of output letters; each letter maps pinned output
    variables to booleans, unpinned variables stand for the placeholder.
    Monitors may watch outputs; they read the joint trace built so far.
    """
    n = len(word)
    out_letters = [dict() for _ in range(n)]
    state = {id(m): m.initial for m in machines}
    states_log = []
    for p in range(n):
        joint = [dict(word[k], **{v: b for v, b in out_letters[k].items()}) for k in range(n)]
        for m in machines:
            stage = p - m.emit_offset
            if stage < 0:
                continue
            t = m.step_at(state[id(m)], stage, joint)
            state[id(m)] = t.dst
            for v, b in t.output.items():
                prev = out_letters[p].get(v)
                if prev is not None and prev != b:
                    raise OutputConflict(p, v)
                out_letters[p][v] = b
        if record_states:
            states_log.append(dict((m.name, state[id(m)]) for m in machines))
    if record_states:
        return out_letters, states_log
    return out_letters


def render_trace(word, out_letters, outputs) -> str:
    rows = []
    for p, (inp, out) in enumerate(zip(word, out_letters)):
        ins = " ".join(f"{v}={'1' if inp[v] else '0'}" for v in sorted(inp))
        outs = " ".join(
            f"{v}={'1' if out[v] else '0'}" if v in out else f"{v}={BETA}" for v in outputs
        )
        rows.append(f"  {p:3d}  {ins:<30s} | {outs}")
    return "\n".join(rows)


def export(machines, parse_basic=None) -> tuple:
    """DOT and JSON documents for a machine set (lossless JSON round trip)."""
    doc = {"schema": 1, "machines": [m.to_json() for m in machines]}
    dot = ["digraph machines {", "  compound=true;"]
    for i, m in enumerate(machines):
        body = m.to_dot().splitlines()[1:-1]
        dot.append(f"  subgraph cluster_{i} {{")
        dot.extend("  " + line.replace('"q', f'"{i}_q') for line in body)
        dot.append("  }")
    dot.append("}")
    return "\n".join(dot) + "\n", json.dumps(doc, indent=2, sort_keys=True)
