"""Candidate output definitions, Skolemization, and the realizability decision.

Every output variable at every step gets a canonical definition over
input variables: the disjunction of the conditions under which some
guarantee forces it true (invariance targets are defined exactly by
their trigger).  Outputs whose value genuinely stays free, because they
occur in invariant or liveness bodies, in release conditions, or
negated inside triggers, keep a placeholder disjunct; placeholders are
existentially eliminated after substitution.

Substituting the definitions into a consistency check turns it into a
universally quantified formula; the specification is realizable exactly
when all of them are valid.  Validity is checked per guarantee group,
clause by clause where the distributive normal form stays small, and by
refutation through the proof-logging engine otherwise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import encoder, prop, sat, threshold
from . import formulas as fm
from . import mealy
from .errors import MissingDefinition, SizeBlowup
from .formulas import (
    GlobalInv,
    Invariance,
    Liveness,
    Reaction1a,
    Reaction1b,
    Spec,
)


def placeholder(name: str, step: int) -> prop.PV:
    return prop.PV(name, step, "ph")


@dataclass
class CandidateSkolem:
    target: prop.PV
    definition: tuple

    def pretty(self) -> str:
        return f"{self.target} <-> {prop.fmt(self.definition)}"


# ---------------------------------------------------------------------------
# Canonical candidate construction


def _needs_freedom(v: str, spec: Spec) -> bool:
    """True when forcing-conditions alone cannot pin v's strategy.

    Occurrences as a reaction action or hold literal, or as a positive
    trigger literal, never benefit from spontaneously raising v; any
    other occurrence (invariant or liveness bodies, release conditions,
    negated trigger literals) keeps a placeholder disjunct.
    """

    def literal_polarities(bexpr, positive=True):
        tag = bexpr[0]
        if tag == "k":
            return
        if tag == "l":
            yield bexpr[1], positive != bexpr[2]
            return
        if tag == "n":
            yield from literal_polarities(bexpr[1], not positive)
            return
        for g in bexpr[1]:
            yield from literal_polarities(g, positive)

    for eta in spec.guarantees:
        if isinstance(eta, (GlobalInv, Liveness)):
            if v in fm.bvars(eta.body):
                return True
            continue
        if isinstance(eta, Reaction1b) and v in fm.bvars(eta.release):
            return True
        trigger = eta.trigger
        for name, pos in literal_polarities(trigger):
            if name == v and not pos:
                return True
    return False


class Candidates:
    """Closed candidate definitions for every output pointwise variable."""

    def __init__(self, spec: Spec, K: int):
        self.spec = spec
        self.K = K
        self.max_i = max((fm.formula_depth(f) for f in spec.all_formulas()), default=0)
        self.limit = K + self.max_i
        self._memo: dict = {}
        self._stack: set = set()
        self._freedom = {v: _needs_freedom(v, spec) for v in spec.outputs}
        self._rows: dict = {v: {"inv": [], "pos": [], "neg": []} for v in spec.outputs}
        for eta in spec.guarantees:
            if isinstance(eta, Reaction1a):
                key = "pos" if not eta.action.neg else "neg"
                self._rows[eta.action.var][key].append(("1a", eta))
            elif isinstance(eta, Reaction1b) and eta.hold is not None:
                key = "pos" if not eta.hold.neg else "neg"
                self._rows[eta.hold.var][key].append(("1b", eta))
            elif isinstance(eta, Invariance):
                self._rows[eta.target.var]["inv"].append(eta)

    # -- encoding with outputs substituted recursively

    def _enc(self, bexpr, base: int):
        f = encoder.encode_at(bexpr, base, self.spec, self.limit)
        outs = [pv for pv in prop.vars_of(f) if pv.kind == "out"]
        if not outs:
            return f
        return prop.subst(f, {pv: self.define(pv.base, pv.step) for pv in outs})

    def _until_condition(self, eta: Reaction1b, m: int):
        """Some earlier trigger is still awaiting its release at step m."""
        disjuncts = []
        for t in range(0, m - eta.i + 1):
            parts = [self._enc(eta.trigger, t)]
            for s in range(t + eta.i, m + 1):
                parts.append(prop.lnot(self._enc(eta.release, s)))
            disjuncts.append(prop.land(parts))
        return prop.lor(disjuncts)

    def define(self, v: str, m: int):
        key = (v, m)
        if key in self._memo:
            return self._memo[key]
        if key in self._stack:
            # Same-step definitional cycle: cut with the placeholder.
            return prop.var(placeholder(v, m))
        self._stack.add(key)
        try:
            rows = self._rows[v]
            inv_defs = []
            for eta in rows["inv"]:
                if m >= eta.i:
                    d = self._enc(eta.trigger, m - eta.i)
                    inv_defs.append(d if not eta.target.neg else prop.lnot(d))
            if inv_defs:
                result = prop.land(inv_defs)
            else:
                conds = []
                for kind, eta in rows["pos"]:
                    if m < eta.i:
                        continue
                    if kind == "1a":
                        conds.append(self._enc(eta.trigger, m - eta.i))
                    else:
                        conds.append(self._until_condition(eta, m))
                if self._freedom.get(v, True):
                    conds.append(prop.var(placeholder(v, m)))
                result = prop.lor(conds) if conds else prop.FALSE
        finally:
            self._stack.discard(key)
        self._memo[key] = result
        return result

    def mapping(self, pvs) -> dict:
        out = {}
        for pv in pvs:
            if pv.kind == "out":
                out[pv] = self.define(pv.base, pv.step)
        return out

    def all_for(self, v: str) -> list:
        return [
            CandidateSkolem(prop.PV(v, m, "out"), self.define(v, m))
            for m in range(self.limit + 1)
        ]


def candidate_skolem(v: str, j: int, s: Spec, K: int) -> CandidateSkolem:
    """The canonical definition of v[j] in terms of inputs and placeholders."""
    cands = Candidates(s, K)
    return CandidateSkolem(prop.PV(v, j, "out"), cands.define(v, j))


def skolemize(check: encoder.ConsistencyCheck, csf) -> tuple:
    """Substitute candidate definitions for every output variable of the body."""
    if isinstance(csf, Candidates):
        mapping = csf.mapping(prop.vars_of(check.body))
    else:
        mapping = {c.target: c.definition for c in csf}
    out = {}
    for pv in prop.vars_of(check.body):
        if pv.kind != "out":
            continue
        if pv not in mapping:
            raise MissingDefinition(str(pv))
        out[pv] = mapping[pv]
    result = prop.subst(check.body, out)
    leftover = [pv for pv in prop.vars_of(result) if pv.kind == "out"]
    if leftover:
        raise MissingDefinition(f"unresolved outputs {sorted(map(str, leftover))}")
    return result


def eliminate_placeholders(f) -> tuple:
    """Existentially drop every placeholder variable.

    Single-polarity placeholders take their preferred constant; the rest
    go through Shannon expansion, innermost (highest step) first.
    """
    while True:
        pols = prop.polarities(f)
        phs = {pv: ps for pv, ps in pols.items() if pv.kind == "ph"}
        if not phs:
            return f
        pure = {pv: (True in ps) for pv, ps in phs.items() if len(ps) == 1}
        if pure:
            f = prop.assign(f, pure)
            continue
        pv = max(phs, key=lambda p: (p.step, p.base))
        f = prop.exists(f, pv)


# ---------------------------------------------------------------------------
# The decision procedure


@dataclass
class FailingGroup:
    j: int
    formula: object  # the guarantee that failed
    assumption_enc: tuple  # A_j, outputs substituted
    guarantee_enc: tuple  # G_j, outputs substituted
    clauses: list = field(default_factory=list)  # non-tautological clauses, if clausal


@dataclass
class RealizabilityVerdict:
    realizable: bool
    K: int
    per_j: dict  # j -> bool
    candidates: "Candidates"
    failures: list = field(default_factory=list)  # FailingGroup
    cores: dict = field(default_factory=dict)  # j -> list of clauses
    machines: list = field(default_factory=list)


def _tseitin(f) -> list:
    """Equisatisfiable clauses for f, with fresh definitional variables."""
    clauses = []
    fresh = itertools.count()
    cache = {}

    def lit_of(g):
        tag = g[0]
        if tag == "k":
            aux = prop.PV("_const", next(fresh), "aux")
            clauses.append(frozenset([(aux, g[1])]))
            return (aux, True)
        if tag == "v":
            return (g[1], True)
        if tag == "n":
            pv, pos = lit_of(g[1])
            return (pv, not pos)
        if g in cache:
            return cache[g]
        aux = prop.PV("_def", next(fresh), "aux")
        subs = [lit_of(x) for x in g[1]]
        if tag == "a":
            for pv, pos in subs:
                clauses.append(frozenset([(aux, False), (pv, pos)]))
            clauses.append(frozenset([(aux, True)] + [(pv, not pos) for pv, pos in subs]))
        else:
            clauses.append(frozenset([(aux, False)] + subs))
            for pv, pos in subs:
                clauses.append(frozenset([(aux, True), (pv, not pos)]))
        cache[g] = (aux, True)
        return (aux, True)

    root = lit_of(f)
    clauses.append(frozenset([root]))
    return clauses


def _valid(f, want_clauses: bool, cnf_guard: int = 60_000):
    """(is_valid, failing_clauses_or_None). Falls back to refutation."""
    if f == prop.TRUE:
        return True, []
    if f == prop.FALSE:
        return False, [frozenset()]
    try:
        cnf = prop.to_cnf(f, cnf_guard)
    except SizeBlowup:
        res = sat.solve(_tseitin(prop.lnot(f)))
        return isinstance(res, sat.UnsatResult), None
    taut = prop.is_tautology(cnf)
    return taut.valid, taut.failing


def _pieces(G):
    """Top-level conjuncts of a guarantee encoding."""
    return list(G[1]) if G[0] == "a" else [G]


def decide(spec: Spec, K: int | None = None) -> RealizabilityVerdict:
    """Realizability of an assume-guarantee specification.

    Substitutes the candidate definitions into every per-step check,
    eliminates placeholders, and checks validity piece by piece (one per
    top-level conjunct of a guarantee encoding).  Pieces that fail on
    their own are retried underneath the assumption side by refutation;
    all pieces valid means realizable.
    """
    if K is None:
        K = threshold.spec_threshold(spec)
    cands = Candidates(spec, K)
    e_side = encoder.assumption_side(spec, K)
    has_e = e_side != prop.TRUE
    e_cnf = None

    # Per (j, guarantee) encodings with outputs substituted; identical
    # shifted copies collapse onto the smallest step.
    work = []
    seen = set()
    for j in range(K + 1):
        for eta in spec.guarantees:
            A, G = encoder.ag_pair(eta, j, K, spec)
            subs = cands.mapping(prop.vars_of(A) | prop.vars_of(G))
            A_sub = prop.subst(A, subs)
            G_sub = prop.subst(G, subs)
            key = (str(eta), A_sub, G_sub)
            if key in seen:
                continue
            seen.add(key)
            work.append((j, eta, A_sub, G_sub))

    # Global placeholder polarity; single-polarity slots take a constant.
    polarity: dict = {}
    for _, _, A_sub, G_sub in work:
        for pv, ps in prop.polarities(prop.implies(A_sub, G_sub)).items():
            if pv.kind == "ph":
                polarity.setdefault(pv, set()).update(ps)
    pure = {pv: (True in ps) for pv, ps in polarity.items() if len(ps) == 1}
    mixed = {pv for pv, ps in polarity.items() if len(ps) == 2}

    items = []  # (work_idx, piece_formula)
    for idx, (j, eta, A_sub, G_sub) in enumerate(work):
        if pure:
            A_sub = prop.assign(A_sub, pure)
            G_sub = prop.assign(G_sub, pure)
            work[idx] = (j, eta, A_sub, G_sub)
        for piece in _pieces(G_sub):
            items.append((idx, prop.implies(A_sub, piece)))

    # Mixed placeholders entangle pieces; eliminate them jointly on the
    # conjunction of each entangled unit.
    if mixed:
        parent = list(range(len(items)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        holder: dict = {}
        for n, (_, piece) in enumerate(items):
            for pv in prop.vars_of(piece):
                if pv.kind != "ph":
                    continue
                r = find(n)
                if pv in holder:
                    parent[r] = find(holder[pv])
                else:
                    holder[pv] = r
        buckets: dict = {}
        for n in range(len(items)):
            buckets.setdefault(find(n), []).append(n)
        units = list(buckets.values())
    else:
        units = [[n] for n in range(len(items))]

    failing_items = set()
    item_clauses: dict = {}
    for unit in units:
        conj = eliminate_placeholders(prop.land([items[n][1] for n in unit]))
        ok, failing = _valid(conj, want_clauses=True)
        if ok:
            continue
        if has_e:
            # Retry underneath the assumption side: E /\ not(piece) unsat.
            if e_cnf is None:
                try:
                    e_cnf = prop.to_cnf(e_side)
                except SizeBlowup:
                    e_cnf = _tseitin(e_side)
            neg = prop.lnot(conj)
            try:
                neg_cnf = prop.to_cnf(neg)
            except SizeBlowup:
                neg_cnf = _tseitin(neg)
            res = sat.solve(list(e_cnf) + list(neg_cnf))
            if isinstance(res, sat.UnsatResult):
                continue
        if len(unit) == 1:
            failing_items.add(unit[0])
            item_clauses[unit[0]] = failing or []
            continue
        for n in unit:
            f_n = eliminate_placeholders(items[n][1])
            ok_n, failing_n = _valid(f_n, want_clauses=True)
            if ok_n:
                continue
            failing_items.add(n)
            item_clauses[n] = failing_n or []
        if not any(n in failing_items for n in unit):
            # Entanglement-only failure: attribute to the whole unit.
            for n in unit:
                failing_items.add(n)
                item_clauses[n] = failing or []

    per_j = {j: True for j in range(K + 1)}
    failures = []
    cores: dict = {}
    failed_work = {}
    for n in sorted(failing_items):
        idx, _ = items[n]
        failed_work.setdefault(idx, []).extend(item_clauses.get(n, []))
    for idx, clauses in failed_work.items():
        j, eta, A_sub, G_sub = work[idx]
        per_j[j] = False
        dedup = []
        cseen = set()
        for c in clauses:
            if c not in cseen:
                cseen.add(c)
                dedup.append(c)
        failures.append(
            FailingGroup(
                j=j,
                formula=eta,
                assumption_enc=eliminate_placeholders(A_sub),
                guarantee_enc=eliminate_placeholders(G_sub),
                clauses=dedup,
            )
        )
        if dedup:
            cores.setdefault(j, []).extend(dedup)

    realizable = not failures
    machines = []
    if realizable:
        for idx, eta in enumerate(spec.guarantees, start=1):
            machines.extend(mealy.instantiate(eta, spec, f"g{idx}"))
    return RealizabilityVerdict(
        realizable=realizable,
        K=K,
        per_j=per_j,
        candidates=cands,
        failures=failures,
        cores=cores,
        machines=machines,
    )


def dump_skolem(spec: Spec, K: int | None = None) -> str:
    if K is None:
        K = threshold.spec_threshold(spec)
    cands = Candidates(spec, K)
    lines = []
    for v in spec.outputs:
        for c in cands.all_for(v):
            lines.append(c.pretty())
    return "\n".join(lines) + "\n"
