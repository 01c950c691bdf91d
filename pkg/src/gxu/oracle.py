"""Ground-truth brute-force oracles.

bounded_holds evaluates a rule formula on a finite interaction under
strong finite-trace semantics: an until needs its release inside the
trace, liveness needs an occurrence, and the global patterns are
checked at every position where the referenced window fits.

brute_realizable evaluates the consistency checks of a small
specification exhaustively: universal assignments to all input slots
are enumerated, and a single existential output assignment must satisfy
the bodies of all checks at once.  Truth vectors over the universal
assignments are packed into big integers so each output choice costs
one bitwise sweep.
"""

from __future__ import annotations

from . import encoder, prop, threshold
from . import formulas as fm
from .errors import TooLarge, TraceTooShort
from .formulas import (
    GlobalInv,
    Invariance,
    Liveness,
    Reaction1a,
    Reaction1b,
    Spec,
)


def _window_fits(phi, pos: int, n: int) -> bool:
    return pos + fm.formula_depth(phi) <= n - 1


def bounded_holds(phi, trace, min_len: int | None = None) -> bool:
    """Strong finite-trace satisfaction. trace: list of {var: bool} letters."""
    n = len(trace)
    need = fm.formula_depth(phi) + 1
    if min_len is not None:
        need = max(need, min_len)
    if n < need:
        raise TraceTooShort(f"trace of length {n}, need at least {need}")

    def basic(b, pos):
        return fm.beval(b, trace[pos:])

    if isinstance(phi, GlobalInv):
        return all(basic(phi.body, t) for t in range(n))
    if isinstance(phi, Liveness):
        return any(basic(phi.body, t) for t in range(n))
    if isinstance(phi, Reaction1a):
        for t in range(n):
            if not _window_fits(phi, t, n):
                break
            if basic(phi.trigger, t):
                v = trace[t + phi.i][phi.action.var]
                if bool(v) == phi.action.neg:
                    return False
        return True
    if isinstance(phi, Invariance):
        for t in range(n):
            if not _window_fits(phi, t, n):
                break
            v = bool(trace[t + phi.i][phi.target.var]) != phi.target.neg
            if basic(phi.trigger, t) != v:
                return False
        return True
    if isinstance(phi, Reaction1b):
        for t in range(n):
            if not _window_fits(phi, t, n):
                break
            if not basic(phi.trigger, t):
                continue
            # Find a release position; the hold literal covers the gap.
            ok = False
            for r in range(t + phi.i, n):
                if not _window_fits(phi, r, n):
                    break
                if basic(phi.release, r):
                    ok = True
                    break
                if phi.hold is not None:
                    v = bool(trace[r][phi.hold.var]) != phi.hold.neg
                    if not v:
                        return False
            if not ok:
                return False
        return True
    raise TypeError(f"not a rule formula: {phi!r}")


def spec_bounded_holds(spec: Spec, trace) -> bool:
    """E -> S under bounded semantics."""
    if all(bounded_holds(rho, trace) for rho in spec.assumptions):
        return all(bounded_holds(eta, trace) for eta in spec.guarantees)
    return True


# ---------------------------------------------------------------------------
# Exhaustive consistency evaluation


def brute_realizable(s: Spec, K: int | None = None) -> bool:
    """Exhaustive verdict on the conjoined consistency checks.

    Enumerates universal input assignments (as packed truth vectors);
    a single output assignment must satisfy every check's body at once,
    searched by Shannon expansion over the output slots.  Restricted to
    the desk-scale regime of at most two inputs, two outputs and K <= 3.
    """
    if len(s.inputs) > 2 or len(s.outputs) > 2:
        raise TooLarge("more than 2 inputs or outputs")
    if K is None:
        K = threshold.spec_threshold(s)
    if K > 3:
        raise TooLarge(f"K = {K} > 3")
    bodies = [encoder.consistency_check(s, j, K).body for j in range(K + 1)]
    whole = prop.land(bodies)
    in_vars = sorted(pv for pv in prop.vars_of(whole) if pv.kind == "in")
    n_in = len(in_vars)
    if n_in > 22:
        raise TooLarge(f"{n_in} universal variables")
    full = (1 << (1 << n_in)) - 1

    masks = {}
    for i, pv in enumerate(in_vars):
        block = (1 << (1 << i)) - 1
        pattern = 0
        for start in range(1 << i, 1 << n_in, 1 << (i + 1)):
            pattern |= block << start
        masks[pv] = pattern

    ground_memo = {}

    def ground(g):
        """Truth vector of an output-free formula over all input assignments."""
        if g in ground_memo:
            return ground_memo[g]
        tag = g[0]
        if tag == "k":
            r = full if g[1] else 0
        elif tag == "v":
            r = masks[g[1]]
        elif tag == "n":
            r = full & ~ground(g[1])
        elif tag == "a":
            r = full
            for x in g[1]:
                r &= ground(x)
                if not r:
                    break
        else:
            r = 0
            for x in g[1]:
                r |= ground(x)
                if r == full:
                    break
        ground_memo[g] = r
        return r

    project_memo = {}

    def project(g):
        """Vector of inputs for which some output completion satisfies g."""
        if g in project_memo:
            return project_memo[g]
        out = next((pv for pv in prop.vars_of(g) if pv.kind == "out"), None)
        if out is None:
            r = ground(g)
        else:
            r = project(prop.assign(g, {out: True}))
            if r != full:
                r = r | project(prop.assign(g, {out: False}))
        project_memo[g] = r
        return r

    return project(whole) == full
