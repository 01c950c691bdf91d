"""Pointwise assumption/guarantee encodings and per-step consistency checks.

Every rule formula gets, for each step j within the bound K, an
assumption formula A_j (when the rule fires) and a guarantee formula
G_j (what must then hold), both over pointwise variables.  A
consistency check at step j demands that the conjoined assumption-side
implications entail the guarantee-side ones, inputs universally and
outputs existentially quantified.

The until guarantee is encoded as a bounded disjunction over the
release time r: release at r within [j+i, K], hold until then.  The
assumption side of a specification is instantiated at every step of the
bound, not just at j, so that runs the environment has already
forfeited cannot witness a failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import formulas as fm
from . import prop
from .errors import IndexOverflow
from .formulas import (
    GlobalInv,
    Invariance,
    Liveness,
    Reaction1a,
    Reaction1b,
    Spec,
)


def encode_at(phi: tuple, j: int, spec: Spec, limit: int | None = None):
    """Basic formula -> pointwise formula; leaf X^i v becomes v[j+i]."""
    tag = phi[0]
    if tag == "k":
        return prop.TRUE if phi[1] else prop.FALSE
    if tag == "l":
        step = j + phi[3]
        if limit is not None and step > limit:
            raise IndexOverflow(f"step {step} exceeds bound {limit}")
        pv = prop.PV(phi[1], step, spec.kind_of(phi[1]))
        return prop.lit(pv, not phi[2])
    if tag == "n":
        return prop.lnot(encode_at(phi[1], j, spec, limit))
    parts = [encode_at(g, j, spec, limit) for g in phi[1]]
    return prop.land(parts) if tag == "a" else prop.lor(parts)


def _lit_at(l: fm.Literal | None, step: int, spec: Spec, limit=None):
    if l is None:
        return prop.TRUE
    if limit is not None and step > limit:
        raise IndexOverflow(f"step {step} exceeds bound {limit}")
    return prop.lit(prop.PV(l.var, step, spec.kind_of(l.var)), not l.neg)


def until_guarantee(phi: Reaction1b, j: int, K: int, spec: Spec, limit=None):
    """Release fires at some r in [j+i, K]; the hold literal covers [j+i, r-1].

    Stated stepwise: at every position before the bound, either the
    release has already fired or the hold literal is up, and the release
    occurs somewhere within the bound.  This is the conjunctive
    equivalent of the case split over the first release time.
    """
    parts = []
    for m in range(j + phi.i, K):
        released = [encode_at(phi.release, s, spec, limit) for s in range(j + phi.i, m + 1)]
        parts.append(prop.lor(released + [_lit_at(phi.hold, m, spec, limit)]))
    parts.append(
        prop.lor([encode_at(phi.release, r, spec, limit) for r in range(j + phi.i, K + 1)])
    )
    return prop.land(parts)


def ag_pair(phi, j: int, K: int, spec: Spec) -> tuple:
    """(A_j, G_j) for one rule formula at step j."""
    limit = K + max((fm.formula_depth(f) for f in spec.all_formulas()), default=0)
    if isinstance(phi, Reaction1a):
        A = encode_at(phi.trigger, j, spec, limit)
        G = _lit_at(phi.action, j + phi.i, spec, limit)
        return A, G
    if isinstance(phi, Reaction1b):
        A = prop.land(
            [
                encode_at(phi.trigger, j, spec, limit),
                prop.lnot(encode_at(phi.release, j + phi.i, spec, limit)),
            ]
        )
        G = until_guarantee(phi, j, K, spec, limit)
        return A, G
    if isinstance(phi, Invariance):
        trig = encode_at(phi.trigger, j, spec, limit)
        p = _lit_at(phi.target, j + phi.i, spec, limit)
        # A follows the one-sided published form; G carries the converse
        # so that A -> G states the full biconditional.
        return prop.lor([trig, p]), prop.land([p, trig])
    if isinstance(phi, GlobalInv):
        G = prop.land([encode_at(phi.body, n, spec, limit) for n in range(K + 1)])
        return prop.TRUE, G
    if isinstance(phi, Liveness):
        G = prop.lor([encode_at(phi.body, n, spec, limit) for n in range(K + 1)])
        return prop.TRUE, G
    raise TypeError(f"not a rule formula: {phi!r}")


@dataclass
class ConsistencyCheck:
    j: int
    K: int
    universals: list  # input pointwise variables of the body
    existentials: list  # output (and placeholder) pointwise variables
    body: tuple  # (/\ assumptions) -> (/\ guarantees), pointwise
    assumption_part: tuple = prop.TRUE  # conjoined A->G over E, all steps
    guarantee_parts: list = field(default_factory=list)  # [(phi, A_j, G_j)]

    def pretty(self) -> str:
        u = ", ".join(str(v) for v in self.universals)
        e = ", ".join(str(v) for v in self.existentials)
        return f"forall {u} . exists {e} .\n  {prop.fmt(self.body)}"


def assumption_side(spec: Spec, K: int):
    """Conjoined A->G for every assumption at every step of the bound."""
    parts = []
    for rho in spec.assumptions:
        for j2 in range(K + 1):
            A, G = ag_pair(rho, j2, K, spec)
            parts.append(prop.implies(A, G))
    return prop.land(parts)


def consistency_check(spec: Spec, j: int, K: int) -> ConsistencyCheck:
    if not (0 <= j <= K):
        raise IndexOverflow(f"check step {j} outside [0, {K}]")
    e_part = assumption_side(spec, K)
    g_parts = []
    s_conj = []
    for eta in spec.guarantees:
        A, G = ag_pair(eta, j, K, spec)
        g_parts.append((eta, A, G))
        s_conj.append(prop.implies(A, G))
    body = prop.implies(e_part, prop.land(s_conj))
    pvs = sorted(prop.vars_of(body))
    universals = [pv for pv in pvs if pv.kind == "in"]
    existentials = [pv for pv in pvs if pv.kind != "in"]
    return ConsistencyCheck(
        j=j,
        K=K,
        universals=universals,
        existentials=existentials,
        body=body,
        assumption_part=e_part,
        guarantee_parts=g_parts,
    )


def dump_2qbf(spec: Spec, K: int) -> str:
    out = []
    for j in range(K + 1):
        chk = consistency_check(spec, j, K)
        out.append(f"# j = {j}")
        out.append(chk.pretty())
    return "\n".join(out) + "\n"
