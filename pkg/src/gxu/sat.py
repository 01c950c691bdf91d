"""Small DPLL satisfiability engine with resolution proof logging.

The instances solved here are the Padoa definability checks and the
interpolation queries of assumption mining; they stay small, so the
engine favors a verifiable proof trail over raw speed: unit propagation
with antecedent tracking, chronological backtracking, and on conflicts a
resolution derivation over the decision literals.  Unsat results carry a
checkable resolution DAG ending in the empty clause.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import prop
from .errors import MalformedProof, NotUnsat


@dataclass
class ProofNode:
    clause: frozenset  # of (PV, bool)
    pivot: object = None  # PV for resolvents, None for leaves
    parents: Optional[tuple] = None  # (id_with_positive_pivot, id_with_negative_pivot)
    tag: Optional[str] = None  # "A" | "B" for tagged leaves


@dataclass
class ResolutionProof:
    nodes: list
    root: int  # index of the empty clause

    def leaves_used(self) -> set:
        seen = set()
        stack = [self.root]
        while stack:
            i = stack.pop()
            if i in seen:
                continue
            seen.add(i)
            node = self.nodes[i]
            if node.parents:
                stack.extend(node.parents)
        return {i for i in seen if self.nodes[i].parents is None}


@dataclass
class SatResult:
    assignment: dict  # PV -> bool


@dataclass
class UnsatResult:
    proof: ResolutionProof


def _resolve(c1: frozenset, c2: frozenset, pivot) -> frozenset:
    return (c1 - {(pivot, True)}) | (c2 - {(pivot, False)})


class _Engine:
    def __init__(self, clauses, tags=None):
        self.nodes = []
        self.clause_ids = []
        for idx, c in enumerate(clauses):
            tag = tags[idx] if tags else None
            self.nodes.append(ProofNode(frozenset(c), tag=tag))
            self.clause_ids.append(idx)
        self.assign = {}  # PV -> bool
        self.reason = {}  # PV -> clause id (None for decisions)
        self.trail = []
        self.vars = sorted({pv for c in clauses for pv, _ in c})

    # -- proof bookkeeping

    def _mk_resolvent(self, i1, i2, pivot) -> int:
        c = _resolve(self.nodes[i1].clause, self.nodes[i2].clause, pivot)
        self.nodes.append(ProofNode(c, pivot=pivot, parents=(i1, i2)))
        return len(self.nodes) - 1

    # -- propagation

    def _clause_state(self, cid):
        """Returns ('sat', None), ('unit', lit), ('conflict', None) or ('open', None)."""
        unassigned = None
        n_open = 0
        for pv, pos in self.nodes[cid].clause:
            v = self.assign.get(pv)
            if v is None:
                unassigned = (pv, pos)
                n_open += 1
                if n_open > 1:
                    return ("open", None)
            elif v == pos:
                return ("sat", None)
        if n_open == 1:
            return ("unit", unassigned)
        return ("conflict", None)

    def _set(self, pv, value, reason):
        self.assign[pv] = value
        self.reason[pv] = reason
        self.trail.append(pv)

    def _undo_to(self, mark):
        while len(self.trail) > mark:
            pv = self.trail.pop()
            del self.assign[pv]
            del self.reason[pv]

    def _analyze(self, conflict_id) -> int:
        """Resolve propagated literals out of the conflict clause.

        Returns the id of a clause falsified by decisions alone.
        """
        cid = conflict_id
        for pv in reversed(self.trail):
            if self.reason[pv] is None:
                continue
            clause = self.nodes[cid].clause
            needed = (pv, not self.assign[pv])
            if needed not in clause:
                continue
            ante = self.reason[pv]
            if self.assign[pv]:
                cid = self._mk_resolvent(ante, cid, pv)
            else:
                cid = self._mk_resolvent(cid, ante, pv)
        return cid

    def _propagate(self):
        """Unit propagation to fixpoint. Returns a decision-level conflict id or None."""
        changed = True
        while changed:
            changed = False
            for cid in self.clause_ids:
                state, payload = self._clause_state(cid)
                if state == "conflict":
                    return self._analyze(cid)
                if state == "unit":
                    pv, pos = payload
                    self._set(pv, pos, cid)
                    changed = True
        return None

    # -- search

    def solve(self):
        res = self._search()
        if res is True:
            model = dict(self.assign)
            for pv in self.vars:
                model.setdefault(pv, False)
            return SatResult(model)
        cid = res
        if self.nodes[cid].clause:
            raise MalformedProof("derived clause at root is not empty")
        return UnsatResult(ResolutionProof(self.nodes, cid))

    def _search(self):
        conflict = self._propagate()
        if conflict is not None:
            return conflict
        pv = next((v for v in self.vars if v not in self.assign), None)
        if pv is None:
            return True
        mark = len(self.trail)
        branch_ids = {}
        for value in (True, False):
            self._set(pv, value, None)
            res = self._search()
            self._undo_to(mark)
            if res is True:
                return True
            clause = self.nodes[res].clause
            if (pv, not value) not in clause:
                # The conflict does not depend on this decision: backjump.
                return res
            branch_ids[value] = res
        return self._mk_resolvent(branch_ids[False], branch_ids[True], pv)


def solve(cnf, tags=None):
    """Decide satisfiability of a clause list.

    Returns SatResult with a total assignment, or UnsatResult carrying a
    resolution proof whose leaves are input clauses (optionally tagged).
    """
    cnf = [frozenset(c) for c in cnf]
    for i, c in enumerate(cnf):
        if prop._clause_taut(c):
            # Tautological inputs never participate in a refutation; keep
            # them out so proofs stay clean.
            cnf[i] = None
    kept, kept_tags = [], []
    for i, c in enumerate(cnf):
        if c is None:
            continue
        kept.append(c)
        kept_tags.append(tags[i] if tags else None)
    if any(len(c) == 0 for c in kept):
        idx = next(i for i, c in enumerate(kept) if len(c) == 0)
        nodes = [ProofNode(c, tag=t) for c, t in zip(kept, kept_tags)]
        return UnsatResult(ResolutionProof(nodes, idx))
    return _Engine(kept, kept_tags).solve()


def check_proof(proof: ResolutionProof) -> bool:
    """Independent pass over the DAG: every resolvent must be correct."""
    for node in proof.nodes:
        if node.parents is None:
            continue
        i1, i2 = node.parents
        c1 = proof.nodes[i1].clause
        c2 = proof.nodes[i2].clause
        if (node.pivot, True) not in c1 or (node.pivot, False) not in c2:
            raise MalformedProof(f"pivot {node.pivot} missing from parents")
        if _resolve(c1, c2, node.pivot) != node.clause:
            raise MalformedProof("incorrect resolvent")
    if proof.nodes[proof.root].clause:
        raise MalformedProof("root clause is not empty")
    return True


def interpolant_from_proof(proof: ResolutionProof):
    """McMillan-style interpolant for an (A, B)-tagged refutation.

    A-leaf: disjunction of the clause's literals over shared variables;
    B-leaf: true; resolvent labels join with "or" on A-local pivots and
    with "and" otherwise.
    """
    a_vars, b_vars = set(), set()
    for i in proof.leaves_used():
        node = proof.nodes[i]
        if node.tag == "A":
            a_vars |= {pv for pv, _ in node.clause}
        elif node.tag == "B":
            b_vars |= {pv for pv, _ in node.clause}
        else:
            raise MalformedProof("untagged leaf in interpolation proof")
    shared = a_vars & b_vars

    labels = {}

    def label(i):
        if i in labels:
            return labels[i]
        node = proof.nodes[i]
        if node.parents is None:
            if node.tag == "A":
                r = prop.lor([prop.lit(pv, pos) for pv, pos in node.clause if pv in shared])
            else:
                r = prop.TRUE
        else:
            l1 = label(node.parents[0])
            l2 = label(node.parents[1])
            if node.pivot in b_vars:
                r = prop.land([l1, l2])
            else:
                r = prop.lor([l1, l2])
        labels[i] = r
        return r

    # Iterative top-down marking to avoid deep recursion on long chains.
    order = []
    seen = set()
    stack = [proof.root]
    while stack:
        i = stack.pop()
        if i in seen:
            continue
        node = proof.nodes[i]
        if node.parents and not all(p in seen for p in node.parents):
            stack.append(i)
            stack.extend(p for p in node.parents if p not in seen)
            continue
        seen.add(i)
        order.append(i)
    for i in order:
        label(i)
    return labels[proof.root]


def interpolant(a_cnf, b_cnf):
    """Craig interpolant for an unsatisfiable pair of clause lists."""
    clauses = [frozenset(c) for c in a_cnf] + [frozenset(c) for c in b_cnf]
    tags = ["A"] * len(list(a_cnf)) + ["B"] * len(list(b_cnf))
    res = solve(clauses, tags)
    if isinstance(res, SatResult):
        raise NotUnsat("A and B are jointly satisfiable")
    check_proof(res.proof)
    return interpolant_from_proof(res.proof)
