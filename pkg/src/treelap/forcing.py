"""A finite model of the forcing order over a builder chain.

Conditions assign, to a finite set u of labels, vector prefixes eta and
meeting-node tables g, h pulled back from a chain brick along a witness:
an embedding of the labels' bookkeeping data into the chain's system plus
a stage index.  The label set stands in for the uncountable index set of
the real construction; its per-subset rank data comes from an explicit
oracle system, which supplies every finite fragment the order ever
consumes.

Density moves realise "label alpha joins u" (plant a fresh copy of the
current brick data, demand style (iv)) and "depth exceeds n" (move the
witness to a deeper stage).  The compatibility move glues two aligned
conditions over their kernel (demand style (iii)) and returns a common
upper bound; alignment is checked, never assumed, and a failed check is
reported as not-aligned rather than as a compatibility verdict.

``extract_assignment`` is the finite shadow of the generic object: union
prefixes along a condition chain, verified to satisfy the meeting
identity eta_a + eta_b = g_i(a,b) + g_i(b,a) at every level and to give
every pair at least 2*iota meeting branches at final depth.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .builder import ChainState, Condition, copy_move, double_move
from .gf2 import Gf2Vec
from .ordinals import ZERO, Ordinal
from .overlap import check_membership
from .treesys import branch_set, overlap_count
from .yzr import YzrSystem, is_quasi_embedding, restrict_system


class ForcingError(ValueError):
    pass


class ForcingCondition:
    """(u, n, eta, h, g) with a recorded witness (phi, stage)."""

    def __init__(
        self,
        u: Sequence[int],
        n: int,
        eta: Mapping[int, Gf2Vec],
        h: Mapping[Tuple[int, int, int], int],
        g: Mapping[Tuple[int, int, int], Gf2Vec],
        phi: Mapping[int, int],
        stage: int,
    ):
        self.u = tuple(sorted(set(u)))
        self.n = n
        self.eta = dict(eta)
        self.h = dict(h)
        self.g = dict(g)
        self.phi = dict(phi)
        self.stage = stage
        if len(self.u) < 3:
            raise ForcingError("|u| must be at least 3")

    def pairs(self):
        for a in self.u:
            for b in self.u:
                if a != b:
                    yield (a, b)

    def __repr__(self) -> str:
        return f"ForcingCondition(u={list(self.u)}, n={self.n}, stage={self.stage})"


def make_condition(
    n: int,
    phi: Mapping[int, int],
    stage: int,
    state: ChainState,
    oracle: YzrSystem,
) -> ForcingCondition:
    """The unique pullback condition p(n, phi, stage).

    phi must embed the oracle data of its domain into the chain's system,
    land inside the stage's index set, and cut out a member of the
    stage's structure family at depth n.
    """
    u = tuple(sorted(phi))
    if len(u) < 3:
        raise ForcingError("|u| must be at least 3")
    cond = state.conditions[stage]
    image = [phi[a] for a in u]
    if sorted(image) != image or len(set(image)) != len(image):
        raise ForcingError("witness map must be an increasing injection")
    if not set(image) <= set(cond.w):
        raise ForcingError("witness image escapes the stage's index set")
    if not 0 < n <= cond.n:
        raise ForcingError(f"depth {n} out of range for stage {stage}")
    if not is_quasi_embedding(phi, restrict_system(oracle, u), state.chain):
        raise ForcingError("witness map does not embed the oracle data")
    m = cond.brick().structure_at(n, image, widths=cond.ts)
    if m is None or not check_membership(m, cond.ts).ok:
        raise ForcingError("witness structure is not in the stage's family")
    eta = {a: cond.eta[phi[a]].prefix(n) for a in u}
    h = {}
    g = {}
    for a, b in itertools.permutations(u, 2):
        for i in range(cond.iota):
            h[(a, b, i)] = cond.h[(phi[a], phi[b], i)]
            g[(a, b, i)] = cond.g[(phi[a], phi[b], i)].prefix(n)
    return ForcingCondition(u, n, eta, h, g, phi, stage)


def leq(p: ForcingCondition, q: ForcingCondition) -> bool:
    """q is stronger: more labels, deeper prefixes, restricted tables."""
    if not set(p.u) <= set(q.u) or p.n > q.n:
        return False
    for a in p.u:
        if not p.eta[a].is_prefix_of(q.eta[a]):
            return False
    iota = max(k[2] for k in p.h) + 1
    for a, b in p.pairs():
        for i in range(iota):
            if q.h[(a, b, i)] != p.h[(a, b, i)]:
                return False
            if not p.g[(a, b, i)].is_prefix_of(q.g[(a, b, i)]):
                return False
    return True


def extend_chain(state: ChainState) -> Condition:
    """Append one default copy move; the standard way to deepen the chain."""
    p = state.last
    w = list(p.w[:3])
    q, _ = copy_move(p, w, {a: a for a in w}, w, state.chain)
    state.conditions.append(q)
    state.moves.append({"kind": "copy", "w": w, "reason": "forcing depth"})
    return q


def density_add_point(
    p: ForcingCondition,
    alpha: int,
    state: ChainState,
    oracle: YzrSystem,
) -> ForcingCondition:
    """A stronger condition whose label set contains alpha (demand (iv))."""
    if alpha in p.u:
        return p
    if not oracle.covers([alpha]):
        raise ForcingError(f"label {alpha} is outside the oracle domain")
    v_star = tuple(sorted(p.u + (alpha,)))
    psi = state.chain.embed(
        restrict_system(oracle, v_star), floor=max(state.last.w) + 1
    )
    psi_map = dict(zip(v_star, psi.range_points))
    w = sorted(p.phi[a] for a in p.u)
    pi0 = {p.phi[a]: psi_map[a] for a in p.u}
    q_cond, placement = copy_move(
        state.last, w, pi0, sorted(psi.range_points), state.chain
    )
    state.conditions.append(q_cond)
    state.moves.append({"kind": "copy", "w": w, "reason": f"add label {alpha}"})
    stage = len(state.conditions) - 1
    place = placement.as_dict()
    new_phi = {a: place[psi_map[a]] for a in v_star}
    out = make_condition(q_cond.n, new_phi, stage, state, oracle)
    if not leq(p, out):
        raise ForcingError("density move failed to strengthen the condition")
    return out


def density_grow_depth(
    p: ForcingCondition,
    n: int,
    state: ChainState,
    oracle: YzrSystem,
) -> ForcingCondition:
    """A stronger condition with depth beyond n, from a deeper stage.

    Raises when the chain has no stage of depth beyond n: the caller must
    extend the chain first (``extend_chain``).
    """
    if p.n > n:
        return p
    for stage in range(p.stage, len(state.conditions)):
        cond = state.conditions[stage]
        if cond.n > n:
            out = make_condition(cond.n, p.phi, stage, state, oracle)
            if not leq(p, out):
                raise ForcingError("depth move failed to strengthen the condition")
            return out
    raise ForcingError("chain too short: no stage deep enough")


@dataclass
class CompatibilityResult:
    condition: Optional[ForcingCondition]
    reason: str = ""

    def __bool__(self) -> bool:
        return self.condition is not None


def _aligned(
    p: ForcingCondition, q: ForcingCondition, oracle: YzrSystem
) -> Optional[str]:
    """The twin-alignment conditions; returns a failure reason or None."""
    if len(p.u) != len(q.u) or p.n != q.n:
        return "sizes or depths differ"
    pi = dict(zip(sorted(p.u), sorted(q.u)))
    kernel = set(p.u) & set(q.u)
    for a in kernel:
        if pi[a] != a:
            return "kernel is not order-aligned"
    for size in range(1, len(p.u) + 1):
        for v in itertools.combinations(sorted(p.u), size):
            img = frozenset(pi[a] for a in v)
            v = frozenset(v)
            if oracle.r(img) != oracle.r(v) or oracle.k(img) != oracle.k(v):
                return f"rank data differs at {sorted(v)}"
            if oracle.r(v) > ZERO and oracle.j(img) != oracle.j(v):
                return f"labels differ at {sorted(v)} (positive rank)"
    for a in p.u:
        if p.eta[a] != q.eta[pi[a]]:
            return f"eta differs at {a}"
    for a, b in p.pairs():
        iota = max(k[2] for k in p.h) + 1
        for i in range(iota):
            if p.h[(a, b, i)] != q.h[(pi[a], pi[b], i)]:
                return f"h differs at ({a},{b})"
            if p.g[(a, b, i)] != q.g[(pi[a], pi[b], i)]:
                return f"g differs at ({a},{b})"
    if sorted(p.phi.values()) != sorted(q.phi.values()) or p.stage != q.stage:
        return "witnesses differ"
    for a in kernel:
        if p.phi[a] != q.phi[a]:
            return "witnesses differ on the kernel"
    # slot-avoidance data for the glue move
    for delta in set(p.u) - kernel:
        for size in range(1, len(kernel) + 1):
            for v in itertools.combinations(sorted(kernel), size):
                vd = frozenset(v) | {delta}
                if oracle.r(vd) == ZERO and oracle.k(vd) == sum(
                    1 for x in v if x < delta
                ):
                    return f"slot-avoidance fails at v={list(v)}, delta={delta}"
    return None


def common_upper_bound(
    p: ForcingCondition,
    q: ForcingCondition,
    state: ChainState,
    oracle: YzrSystem,
) -> CompatibilityResult:
    """Glue two aligned conditions over their kernel (demand (iii))."""
    reason = _aligned(p, q, oracle)
    if reason is not None:
        return CompatibilityResult(None, f"not aligned: {reason}")
    v_star = tuple(sorted(set(p.u) | set(q.u)))
    psi = state.chain.embed(
        restrict_system(oracle, v_star), floor=max(state.last.w) + 1
    )
    psi_map = dict(zip(v_star, psi.range_points))
    w = sorted(p.phi.values())
    kernel = set(p.u) & set(q.u)
    pi0 = {p.phi[a]: psi_map[a] for a in p.u}
    pi1 = {q.phi[b]: psi_map[b] for b in q.u}
    u_param = sorted(p.phi[a] for a in kernel)
    q_cond, placement = double_move(state.last, u_param, w, pi0, pi1, state.chain)
    state.conditions.append(q_cond)
    state.moves.append({"kind": "double", "reason": "compatibility glue"})
    stage = len(state.conditions) - 1
    place = placement.as_dict()
    new_phi = {a: place[psi_map[a]] for a in v_star}
    out = make_condition(q_cond.n, new_phi, stage, state, oracle)
    if not leq(p, out) or not leq(q, out):
        raise ForcingError("glue move failed to bound both conditions")
    return CompatibilityResult(out)


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------


@dataclass
class ExtractionReport:
    ok: bool
    eta: Dict[int, Gf2Vec] = field(default_factory=dict)
    g: Dict[Tuple[int, int, int], Gf2Vec] = field(default_factory=dict)
    h: Dict[Tuple[int, int, int], int] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)
    overlap_counts: Dict[Tuple[int, int], int] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def extract_assignment(
    conditions: Sequence[ForcingCondition],
    labels: Sequence[int],
    state: ChainState,
    iota: int,
) -> ExtractionReport:
    """Union prefixes along a chain of conditions, fully verified.

    Checks: the conditions are linearly ordered, every requested label
    enters, prefixes cohere, the meeting identity holds at every level,
    the meeting nodes sit on their trees, the final vectors are pairwise
    distinct, and every pair meets in at least 2*iota branches at final
    depth.
    """
    failures: List[str] = []
    for i in range(len(conditions) - 1):
        if not leq(conditions[i], conditions[i + 1]):
            failures.append(f"conditions {i} and {i+1} are not ordered")
    last = conditions[-1]
    for a in labels:
        if a not in last.u:
            failures.append(f"label {a} never enters the condition chain")
    if failures:
        return ExtractionReport(False, failures=failures)

    labels = sorted(labels)
    eta = {a: last.eta[a] for a in labels}
    g = {}
    h = {}
    for a, b in itertools.permutations(labels, 2):
        for i in range(iota):
            g[(a, b, i)] = last.g[(a, b, i)]
            h[(a, b, i)] = last.h[(a, b, i)]

    # prefix coherence along the chain
    for cond in conditions:
        for a in labels:
            if a in cond.u and not cond.eta[a].is_prefix_of(eta[a]):
                failures.append(f"eta[{a}] does not extend stage data")

    # pairwise distinct at final depth
    if len({v.bits for v in eta.values()}) != len(labels):
        failures.append("final eta vectors are not pairwise distinct")

    # the meeting identity at every level, checked as vectors
    for a, b in itertools.combinations(labels, 2):
        for i in range(iota):
            if eta[a] + eta[b] != g[(a, b, i)] + g[(b, a, i)]:
                failures.append(f"meeting identity fails at ({a},{b},{i})")

    # meeting nodes sit on their trees
    cond = state.conditions[last.stage]
    for (a, b, i), node in g.items():
        tree = cond.ts.trees[h[(a, b, i)]]
        if not tree.contains(node):
            failures.append(f"meeting node of ({a},{b},{i}) is not on its tree")

    # 2*iota meeting branches per pair at final depth
    bset = branch_set(cond.ts.truncate(last.n)) if last.n < cond.n else branch_set(cond.ts)
    counts = {}
    for a, b in itertools.combinations(labels, 2):
        counts[(a, b)] = overlap_count(bset, eta[a] + eta[b])
        if counts[(a, b)] < 2 * iota:
            failures.append(f"pair ({a},{b}) meets in only {counts[(a,b)]} branches")

    return ExtractionReport(not failures, eta, g, h, failures, counts)


# ---------------------------------------------------------------------------
# demo driver
# ---------------------------------------------------------------------------


@dataclass
class ForcingDemo:
    state: ChainState
    oracle: YzrSystem
    conditions: List[ForcingCondition]
    report: ExtractionReport


def run_demo(
    points: int,
    stages: int,
    epsilon: Ordinal,
    iota: int = 2,
) -> ForcingDemo:
    """The end-to-end pipeline on ``points`` labels over ``stages`` moves.

    The oracle gives singletons rank epsilon (with a shared level label)
    and larger sets rank 0; the chain's first block carries the same data,
    so the identity witnesses the root condition.  Labels beyond the first
    three enter by density moves, then the depth is pushed up one chain
    stage per remaining move.
    """
    from .builder import run_builder
    from .yzr import CuteChain, two_tier_system

    if points < 3:
        raise ForcingError("need at least 3 labels")
    oracle = two_tier_system(range(points), epsilon)
    chain = CuteChain(epsilon)
    chain.embed(oracle, floor=0)
    state = run_builder(chain, iota, 0)

    phi0 = {a: a for a in range(3)}
    p = make_condition(state.conditions[0].n, phi0, 0, state, oracle)
    conds = [p]
    for alpha in range(3, points):
        p = density_add_point(p, alpha, state, oracle)
        conds.append(p)
    while len(conds) < stages + 1:
        extend_chain(state)
        p = density_grow_depth(p, p.n, state, oracle)
        conds.append(p)
    report = extract_assignment(conds, list(range(points)), state, iota)
    return ForcingDemo(state, oracle, conds, report)
