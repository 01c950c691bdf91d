"""Assumption mining for unrealizable specifications.

Failed consistency checks leave behind non-tautological clauses.  Per
clause, a variable that Padoa's check proves definable from the others
gets an explicit definition through interpolation; otherwise the clause
is split into an earliest-step input part and a remainder, equated as a
biconditional.  Failing until-guarantees additionally yield structured
refinements: release-at-once, blocked-until-release, and
trigger-eventually-drops candidates, taken from the conflicting rules'
triggers.  Refinements decode back into rule formulas and pass a
vacuity filter before they are offered as new environment assumptions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import encoder, prop, sat, skolem, threshold
from . import formulas as fm
from .errors import NotUnsat
from .formulas import (
    GlobalInv,
    Invariance,
    Literal,
    Liveness,
    Reaction1a,
    Reaction1b,
    Spec,
)


@dataclass
class UnrealizableCore:
    j: int
    clauses: list  # non-tautological clauses of the Skolemized check

    def pretty(self) -> str:
        return " & ".join(f"({prop.fmt_clause(c)})" for c in self.clauses)


@dataclass
class Refinement:
    lhs: tuple  # conjunction of literals at one step
    rhs: tuple
    pointwise: tuple  # lhs <-> rhs
    origin: str
    decoded: object = None  # rule formula, when a decoding rule matched
    vacuous: bool | None = None
    reason: str = ""

    def pretty(self) -> str:
        return f"{prop.fmt(self.lhs)} <-> {prop.fmt(self.rhs)}"


def extract_core(failing, j: int) -> UnrealizableCore:
    if not failing:
        raise ValueError("no failing clauses: nothing to extract")
    return UnrealizableCore(j=j, clauses=list(failing))


# ---------------------------------------------------------------------------
# Definability and interpolation


def _prime(pv: prop.PV) -> prop.PV:
    return prop.PV(pv.base + "'", pv.step, pv.kind)


def padoa_definable(phi, x: prop.PV, xs) -> bool:
    """True iff x is functionally determined by xs in every model of phi."""
    keep = set(xs)
    renaming = {pv: prop.var(_prime(pv)) for pv in prop.vars_of(phi) if pv not in keep}
    phi_p = prop.subst(phi, renaming)
    query = prop.land([phi, prop.var(x), phi_p, prop.lnot(prop.var(_prime(x)))])
    res = sat.solve(prop.to_cnf(query))
    return isinstance(res, sat.UnsatResult)


def interpolant(a_cnf, b_cnf):
    """Craig interpolant of an unsatisfiable clause-list pair."""
    return sat.interpolant(a_cnf, b_cnf)


def definition_of(phi, x: prop.PV, xs):
    """Explicit definition of x over xs, via interpolation on the Padoa pair."""
    keep = set(xs)
    renaming = {pv: prop.var(_prime(pv)) for pv in prop.vars_of(phi) if pv not in keep}
    phi_p = prop.subst(phi, renaming)
    a = prop.to_cnf(prop.land([phi, prop.var(x)]))
    b = prop.to_cnf(prop.land([phi_p, prop.lnot(prop.var(_prime(x)))]))
    return interpolant(a, b)


# ---------------------------------------------------------------------------
# Decoding pointwise biconditionals into rule formulas


def _flat_literals(f):
    """(var, positive, step) triples when f is a conj/disj of literals; None otherwise."""
    items = []

    def go(g):
        tag = g[0]
        if tag == "v":
            items.append((g[1].base, True, g[1].step))
            return True
        if tag == "n" and g[1][0] == "v":
            items.append((g[1][1].base, False, g[1][1].step))
            return True
        return False

    if go(f):
        return f[0], items
    if f[0] in ("a", "o"):
        for g in f[1]:
            if not go(g):
                return None
        return f[0], items
    return None


def _basic_of(items, base: int):
    return fm.band([fm.bl(v, not pos, step - base) for v, pos, step in items])


def decode(lhs, rhs):
    """Decoding rules: offsets, until shapes, global and eventual patterns."""
    left = _flat_literals(lhs)
    if left is None or left[0] == "o":
        return None
    lsteps = {s for _, _, s in left[1]}
    if len(lsteps) != 1:
        return None
    j0 = lsteps.pop()
    trigger = _basic_of(left[1], j0)

    flat = _flat_literals(rhs)
    if flat is not None:
        shape, items = flat
        steps = sorted({s for _, _, s in items})
        if len(steps) == 1:
            # Rule 1: a one-step right side becomes a next-step implication.
            delta = steps[0] - j0
            if delta < 0:
                return None
            if shape != "o" and len(items) == 1:
                v, pos, _ = items[0]
                if delta == 0:
                    return GlobalInv(fm.bor([fm.bnot(trigger), fm.bl(v, not pos)]))
                return Reaction1a(trigger, delta, Literal(v, not pos))
            return None
        names = {(v, pos) for v, pos, _ in items}
        if len(names) == 1:
            (v, pos), = names
            delta = max(steps[0] - j0, 0)
            if shape == "o":
                # Rule 4, trigger-relativized: eventually the literal holds.
                return Reaction1b(trigger, delta, None, fm.bl(v, not pos))
            # Rule 3: the literal holds from here on.
            return GlobalInv(fm.bl(v, not pos))

    # Rule 2: interior (not-release and blocker) conjuncts plus a final release.
    if rhs[0] != "a":
        return None
    flat = _flat_literals(rhs)
    if flat is None:
        return None
    _, items = flat
    steps = sorted({s for _, _, s in items})
    final_step = steps[-1]
    final = [(v, pos) for v, pos, s in items if s == final_step]
    if len(final) != 1:
        return None
    rvar, rpos = final[0]
    interior = [(v, pos, s) for v, pos, s in items if s != final_step]
    release_neg = [(v, pos, s) for v, pos, s in interior if v == rvar and pos != rpos]
    blockers = {(v, pos) for v, pos, s in interior if v != rvar}
    if len(blockers) > 1:
        return None
    hold = None
    if blockers:
        (bv, bpos), = blockers
        hold = Literal(bv, not bpos)
    first = min(s for _, _, s in interior) if interior else final_step
    i = max(first - j0, 0)
    release = fm.bl(rvar, not rpos)
    return Reaction1b(trigger, i, hold, release)


# ---------------------------------------------------------------------------
# Algorithm: per-clause mining


def _split_clause(clause):
    """phi' = the input literals at the earliest step; phi'' = the rest."""
    steps = sorted({pv.step for pv, _ in clause})
    first = steps[0]
    phi1 = [(pv, pos) for pv, pos in clause if pv.step == first]
    phi2 = [(pv, pos) for pv, pos in clause if pv.step != first]
    if not phi2:
        # Single-step clause: peel one literal off instead.
        ordered = sorted(clause, key=lambda l: (l[0].base, not l[1]))
        phi1, phi2 = [ordered[0]], ordered[1:]
    if not phi2:
        return None
    lhs = prop.land([prop.lit(pv, not pos) for pv, pos in phi1])  # negation of phi'
    rhs = prop.lor([prop.lit(pv, pos) for pv, pos in phi2])
    return lhs, rhs


def mine_core(core: UnrealizableCore, context=None) -> list:
    """Per-clause refinements: Padoa definitions first, then the split rule."""
    if context is None:
        context = prop.land([prop.clause_formula(c) for c in core.clauses])
    out = []
    for clause in core.clauses:
        pvs = sorted({pv for pv, _ in clause})
        refined = False
        for x in pvs:
            rest = [pv for pv in pvs if pv != x]
            if not rest:
                continue
            if padoa_definable(context, x, rest):
                definition = definition_of(context, x, rest)
                lhs = prop.var(x)
                r = Refinement(
                    lhs=lhs,
                    rhs=definition,
                    pointwise=prop.iff(lhs, definition),
                    origin=f"padoa:{x}",
                )
                r.decoded = decode(lhs, definition)
                out.append(r)
                refined = True
                break
        if refined:
            continue
        split = _split_clause(clause)
        if split is None:
            continue
        lhs, rhs = split
        r = Refinement(
            lhs=lhs,
            rhs=rhs,
            pointwise=prop.iff(lhs, rhs),
            origin=f"split:{prop.fmt_clause(clause)}",
        )
        r.decoded = decode(lhs, rhs)
        out.append(r)
    return out


# ---------------------------------------------------------------------------
# Structured refinements for failing until-guarantees


def _trigger_literals(bexpr):
    """Literal conjunction view of a trigger; None for non-conjunctive shapes."""
    flat = fm.band([bexpr])
    items = []

    def go(g):
        tag = g[0]
        if tag == "l":
            items.append((g[1], not g[2], g[3]))
            return True
        if tag == "a":
            return all(go(x) for x in g[1])
        if tag == "k" and g[1]:
            return True
        return False

    if not go(flat):
        return None
    return items


def _until_refinements(eta: Reaction1b, j: int, spec: Spec, K: int) -> list:
    """Release-at-once, blocked-until-release and trigger-drop candidates."""
    out = []
    enc = lambda b, at: encoder.encode_at(b, at, spec)
    lhs = enc(eta.trigger, j)
    limit = K + max((fm.formula_depth(f) for f in spec.all_formulas()), default=0)

    # Release immediately when triggered.
    rhs_now = enc(eta.release, j + eta.i)
    out.append(
        Refinement(
            lhs=lhs,
            rhs=rhs_now,
            pointwise=prop.iff(lhs, rhs_now),
            origin=f"until:{eta}:immediate",
            decoded=decode(lhs, rhs_now),
        )
    )

    if eta.hold is None:
        blockers = []
        co_releases = []
        drops = []
    else:
        hold = eta.hold
        rvars = fm.bvars(eta.release)
        tvars = fm.bvars(eta.trigger)
        tlits = _trigger_literals(eta.trigger) or []
        blockers = []
        co_releases = []
        drops = []
        for other in spec.guarantees:
            if other is eta:
                continue
            action = None
            if isinstance(other, Reaction1a):
                action = other.action
            elif isinstance(other, Reaction1b) and other.hold is not None:
                action = other.hold
            if action is None or action.var != hold.var:
                continue
            if action.neg != hold.neg:
                # Opposite forcer: its trigger literals (outside the
                # release and trigger vocabulary) must stay away.
                lits = _trigger_literals(other.trigger) or []
                for v, pos, d in lits:
                    if v in rvars or v in tvars:
                        continue
                    blockers.append(Literal(v, not pos))
            else:
                if isinstance(other, Reaction1b):
                    co_releases.append(other.release)
                lits = _trigger_literals(other.trigger) or []
                for v, pos, d in lits:
                    for tv, tpos, _ in tlits:
                        if v == tv and pos != tpos:
                            drops.append(Literal(v, not pos))

    # Blocked-until-release: one refinement per blocking literal, or a
    # bare release demand when no conflicting trigger contributes one.
    hold_side = sorted(set(blockers), key=str) or [None]
    co = sorted({fm.bfmt(r): r for r in co_releases}.items())
    for blocker in hold_side:
        pieces = []
        for jp in range(j, K - eta.i):
            at = jp + eta.i
            if at > limit:
                break
            pieces.append(prop.lnot(enc(eta.release, at)))
            if blocker is not None:
                pieces.append(
                    prop.lit(prop.PV(blocker.var, jp, spec.kind_of(blocker.var)), not blocker.neg)
                )
            for _, rel3 in co:
                pieces.append(prop.lnot(enc(rel3, at)))
        pieces.append(enc(eta.release, K))
        rhs = prop.land(pieces)
        r = Refinement(
            lhs=lhs,
            rhs=rhs,
            pointwise=prop.iff(lhs, rhs),
            origin=f"until:{eta}:blocked",
        )
        r.decoded = decode(lhs, rhs)
        out.append(r)

    # Trigger contradiction with a co-forcer: that literal eventually holds.
    for lit in sorted(set(drops), key=str):
        parts = [
            prop.lit(prop.PV(lit.var, jp, spec.kind_of(lit.var)), not lit.neg)
            for jp in range(j, K + 1)
        ]
        rhs = prop.lor(parts)
        r = Refinement(
            lhs=lhs,
            rhs=rhs,
            pointwise=prop.iff(lhs, rhs),
            origin=f"until:{eta}:drop",
        )
        r.decoded = decode(lhs, rhs)
        out.append(r)
    return out


# ---------------------------------------------------------------------------
# Vacuity filtering and the top-level pipeline


def _shift(f, delta: int, limit: int):
    """Shift every step by delta; None when a step leaves [0, limit]."""
    ok = True

    def move(pv):
        nonlocal ok
        s = pv.step + delta
        if s < 0 or s > limit:
            ok = False
            return prop.TRUE
        return prop.var(prop.PV(pv.base, s, pv.kind))

    shifted = prop.subst(f, {pv: move(pv) for pv in prop.vars_of(f)})
    return shifted if ok else None


def vacuity_filter(r: Refinement, spec: Spec, K: int | None = None) -> bool:
    """True to keep, False to discard.

    A refinement is vacuous when, taken as a universal constraint, it
    leaves some guarantee's firing condition unsatisfiable at every
    step, or when it constrains nothing at all.
    """
    if K is None:
        K = threshold.spec_threshold(spec)
    if r.pointwise == prop.TRUE:
        r.vacuous = True
        r.reason = "constrains nothing"
        return False
    limit = K + max((fm.formula_depth(f) for f in spec.all_formulas()), default=0)
    base = min((pv.step for pv in prop.vars_of(r.pointwise)), default=0)
    shifts = []
    for delta in range(-base, limit + 1):
        g = _shift(r.pointwise, delta, limit)
        if g is None:
            break
        shifts.append(g)
    universal = prop.land(shifts) if shifts else r.pointwise
    e_side = encoder.assumption_side(spec, K)
    cands = skolem.Candidates(spec, K)
    for eta in spec.guarantees:
        hits = []
        for j in range(K + 1):
            A, _ = encoder.ag_pair(eta, j, K, spec)
            A = prop.subst(A, cands.mapping(prop.vars_of(A)))
            A = skolem.eliminate_placeholders(A)
            hits.append(A)
        query = prop.land([e_side, universal, prop.lor(hits)])
        try:
            cnf = prop.to_cnf(query, 40_000)
        except Exception:
            cnf = skolem._tseitin(query)
        res = sat.solve(cnf)
        if isinstance(res, sat.UnsatResult):
            r.vacuous = True
            r.reason = f"trigger of {eta} becomes unsatisfiable"
            return False
    r.vacuous = False
    return True


@dataclass
class MiningResult:
    cores: list  # UnrealizableCore
    refinements: list  # all generated refinements
    kept: list  # decoded, non-vacuous assumptions (rule formulas)

    def assumptions(self) -> list:
        return [r.decoded for r in self.kept]


def mine(verdict, spec: Spec) -> MiningResult:
    """Run the mining pipeline on an unrealizability verdict."""
    K = verdict.K
    cores = [extract_core(cs, j) for j, cs in sorted(verdict.cores.items()) if cs]
    refinements = []
    seen = set()

    def add(rs):
        for r in rs:
            key = r.pointwise
            if key in seen:
                continue
            seen.add(key)
            refinements.append(r)

    done_formulas = set()
    for fg in sorted(verdict.failures, key=lambda f: f.j):
        if isinstance(fg.formula, Reaction1b):
            if id(fg.formula) in done_formulas:
                continue
            done_formulas.add(id(fg.formula))
            add(_until_refinements(fg.formula, fg.j, spec, K))
        elif fg.clauses:
            core = extract_core(fg.clauses, fg.j)
            add(mine_core(core))

    kept = []
    kept_keys = set()
    for r in refinements:
        if r.decoded is None:
            r.vacuous = True
            r.reason = "no decoding rule matched"
            continue
        if not vacuity_filter(r, spec, K):
            continue
        key = str(r.decoded)
        if key in kept_keys:
            continue
        kept_keys.add(key)
        kept.append(r)
    return MiningResult(cores=cores, refinements=refinements, kept=kept)


def repaired_spec(spec: Spec, assumptions) -> Spec:
    return Spec(
        spec.inputs,
        spec.outputs,
        list(spec.assumptions) + list(assumptions),
        list(spec.guarantees),
    )
