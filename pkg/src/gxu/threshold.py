"""Linear completeness thresholds from clique costs.

The machine graphs produced by the templates decompose into maximal
strongly connected components that are bidirectional cliques (every
node has a self-loop).  Each clique on a path from the initial clique
to a final one contributes its traversal cost from the cost table; the
machine threshold is the maximum path sum, and a formula's threshold is
the monitor length times its worst machine threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import mealy
from .errors import NotCliquey
from .formulas import Spec


@dataclass
class CliqueInfo:
    states: frozenset
    vacuous: bool
    n_accepting: int
    diameter: int
    rdiameter: int

    def cost(self) -> int:
        return self.diameter if self.vacuous else self.rdiameter + 1

    def cost_final(self) -> int:
        # A fully accepting clique finishes for free once entered: the
        # plain traversal cost applies.  Otherwise the accepting states
        # must be revisited, giving the (n+1)-fold bound from the table.
        if self.n_accepting == len(self.states):
            return self.cost()
        base = self.diameter if self.vacuous else self.rdiameter + 1
        return (self.n_accepting + 1) * base


def _graph(machine: mealy.MealyMachine) -> dict:
    g = {s: set() for s in machine.states}
    for t in machine.transitions:
        g[t.src].add(t.dst)
    return g


def _sccs(g: dict) -> list:
    # Tarjan, iterative.
    index, low, on = {}, {}, set()
    stack, order, out = [], [], []
    counter = [0]

    def strongconnect(v0):
        work = [(v0, iter(sorted(g[v0])))]
        index[v0] = low[v0] = counter[0]
        counter[0] += 1
        order.append(v0)
        on.add(v0)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    order.append(w)
                    on.add(w)
                    work.append((w, iter(sorted(g[w]))))
                    advanced = True
                    break
                if w in on:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = order.pop()
                    on.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                out.append(frozenset(comp))

    for v in sorted(g):
        if v not in index:
            strongconnect(v)
    return out


def clique_cost(machine: mealy.MealyMachine) -> int:
    """Machine completeness threshold via the per-clique cost table."""
    g = _graph(machine)
    comps = _sccs(g)
    infos = {}
    for comp in comps:
        for u in comp:
            for v in comp:
                if v not in g[u]:
                    raise NotCliquey(
                        f"{machine.name}: component {sorted(comp)} misses edge {u}->{v}"
                    )
        # Bidirectional clique with self-loops: diameter is 1 (0 for a
        # singleton), the longest simple path visits every state.
        d = 0 if len(comp) == 1 else 1
        infos[comp] = CliqueInfo(
            states=comp,
            vacuous=True,
            n_accepting=len(comp & machine.accepting),
            diameter=d,
            rdiameter=len(comp) - 1,
        )

    comp_of = {s: c for c in comps for s in c}
    dag = {c: set() for c in comps}
    for t in machine.transitions:
        c1, c2 = comp_of[t.src], comp_of[t.dst]
        if c1 != c2:
            dag[c1].add(c2)

    best = {}

    def max_path(c) -> int:
        """Max cost of a path from c to a final clique, counting c itself."""
        if c in best:
            return best[c]
        here_final = infos[c].n_accepting > 0
        candidates = []
        if here_final:
            candidates.append(infos[c].cost_final())
        for c2 in dag[c]:
            tail = max_path(c2)
            if tail >= 0:
                candidates.append(infos[c].cost() + tail)
        best[c] = max(candidates) if candidates else -1
        return best[c]

    start = comp_of[machine.initial]
    result = max_path(start)
    if result < 0:
        raise NotCliquey(f"{machine.name}: no accepting clique reachable")
    return result


def monitor_length(phi) -> int:
    from .formulas import GlobalInv, Invariance, Liveness, Reaction1a, Reaction1b

    if isinstance(phi, (Reaction1a, Reaction1b, Invariance)):
        return phi.i + 1
    return 1


def formula_threshold(phi, spec: Spec) -> int:
    """Monitor length times the worst machine threshold of the formula."""
    machines = mealy.instantiate(phi, spec)
    return monitor_length(phi) * max(clique_cost(m) for m in machines)


def spec_threshold(s: Spec) -> int:
    """The bound K: maximum per-formula threshold over assumptions and guarantees."""
    values = [formula_threshold(phi, s) for phi in s.all_formulas()]
    return max(values) if values else 0


def explain(s: Spec) -> str:
    lines = ["per-formula completeness thresholds:"]
    for phi in s.all_formulas():
        machines = mealy.instantiate(phi, s)
        costs = ", ".join(f"{m.name}={clique_cost(m)}" for m in machines)
        lines.append(
            f"  {phi}  monitor_length={monitor_length(phi)}  machine costs: {costs}"
            f"  k={formula_threshold(phi, s)}"
        )
    lines.append(f"spec threshold K = {spec_threshold(s)}")
    return "\n".join(lines)
