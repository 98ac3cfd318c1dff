"""The construction poset: conditions, amalgamation moves, and rank bounds.

A condition bundles a brick with a usable tree system and the independent
vector list eta^rho: every meeting node factors as g_i(a,b) = eta_a +
rho_{i,a,b}, the tree fronts are exactly the meeting nodes split by their
h-indices, and the whole vector list is linearly independent.  The order
keeps earlier trees as truncations and extends the brick.

The amalgamation move glues two quasi-embedded copies of a sub-brick over
a kernel: fresh points get one new 1-bit each (positions handed out by
order-preserving injections), copied pairs pull their data back along the
embeddings, and genuinely new pairs get fresh trees of full width.  The
grow / copy / double moves are the three ways the chain consumes it, and
``run_builder`` interleaves them under a bookkeeping schedule.

``classify_pairs`` and ``relocate`` implement the two finitary lemmas the
rank analysis needs: repetition-free equal-sum tuples of front nodes come
from a single pair's meeting data, and any wide-enough structure in the
bounded family is a translate of a member of the condition's own family.
``rank_bounds`` reports the rank sandwich for a labelled structure and
replays one constructive successor step as an executable witness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .bricks import Brick, BrickProbe, BrickReport, brick_extends, check_brick
from .gf2 import Gf2Vec, LemmaViolationError, PreconditionError, is_independent, translation_witness
from .ordinals import ONE, ZERO, Ordinal, decrement_once, omega_times, omega_times_succ
from .overlap import (
    OverlapStructure,
    check_membership,
    essentially_same,
    extends,
    in_bounded_universe,
)
from .treesys import FiniteTree, TreeSystem, is_usable
from .yzr import CuteChain, QuasiEmbedding, YzrSystem, check_axioms, is_quasi_embedding, restrict_system


class BuilderError(ValueError):
    pass


RhoKey = Tuple[int, int, int]  # (i, a, b) with a < b


class Condition:
    """One element of the construction poset."""

    def __init__(
        self,
        w: Iterable[int],
        n: int,
        ts: TreeSystem,
        eta: Mapping[int, Gf2Vec],
        h: Mapping[Tuple[int, int, int], int],
        g: Mapping[Tuple[int, int, int], Gf2Vec],
        rho: Mapping[RhoKey, Gf2Vec],
        iota: int,
    ):
        self.w = tuple(sorted(set(w)))
        self.n = n
        self.ts = ts
        self.iota = iota
        self.eta = dict(eta)
        self.h = dict(h)
        self.g = dict(g)
        self.rho = dict(rho)
        if ts.n != n:
            raise BuilderError("tree system depth must equal n")

    @property
    def tree_count(self) -> int:
        return self.ts.count

    def brick(self) -> Brick:
        return Brick(self.w, self.n, self.eta, self.h, self.g, self.iota)

    def rho_at(self, i: int, a: int, b: int) -> Gf2Vec:
        return self.rho[(i, min(a, b), max(a, b))]

    def vector_list(self) -> List[Gf2Vec]:
        """eta followed by rho, in the canonicalorder."""
        out = [self.eta[a] for a in self.w]
        for i in range(self.iota):
            for a, b in itertools.combinations(self.w, 2):
                out.append(self.rho[(i, a, b)])
        return out

    def __repr__(self) -> str:
        return (
            f"Condition(w={list(self.w)}, n={self.n}, M={self.tree_count}, "
            f"iota={self.iota})"
        )


@dataclass
class ConditionReport:
    ok: bool
    failures: List[Tuple[str, str]] = field(default_factory=list)
    brick_report: Optional[BrickReport] = None

    def __bool__(self) -> bool:
        return self.ok


def check_condition(
    p: Condition, system, probe: Optional[BrickProbe] = None
) -> ConditionReport:
    """Verify the seven condition clauses; the brick clause delegates."""
    failures: List[Tuple[str, str]] = []
    if len(p.w) < 3 or p.n <= 0 or p.tree_count <= 0:
        failures.append(("(x)1", "sizes out of range"))
        return ConditionReport(False, failures)

    if is_usable(p.ts, p.iota) is None:
        failures.append(("(x)2", "tree system is not usable"))

    for m in range(p.tree_count):
        if not 0 < p.ts.width(m) <= p.n:
            failures.append(("(x)3", f"width of tree {m} out of range"))

    for a, b in itertools.combinations(p.w, 2):
        for i in range(p.iota):
            r = p.rho[(i, a, b)]
            if p.g[(a, b, i)] != p.eta[a] + r or p.g[(b, a, i)] != p.eta[b] + r:
                failures.append(("(x)5", f"g != eta + rho at ({a},{b},{i})"))

    if not is_independent(p.vector_list(), p.n):
        failures.append(("(x)6", "eta^rho is linearly dependent"))

    g_by_tree: Dict[int, set] = {m: set() for m in range(p.tree_count)}
    for (a, b, i), node in p.g.items():
        g_by_tree.setdefault(p.h[(a, b, i)], set()).add(node.bits)
    for m in range(p.tree_count):
        front = {v.bits for v in p.ts.trees[m].front}
        if front != g_by_tree.get(m, set()):
            failures.append(("(x)7", f"front of tree {m} is not its g-value set"))
    if not p.ts.fronts_pairwise_disjoint():
        failures.append(("(x)7", "tree fronts are not pairwise disjoint"))

    brick_report = None
    if not failures:
        brick_report = check_brick(p.brick(), system, p.ts, probe=probe)
        if not brick_report.ok:
            for clause, detail in brick_report.failures:
                failures.append(("(x)4", f"brick clause {clause}: {detail}"))
    return ConditionReport(not failures, failures, brick_report)


def cond_leq(p: Condition, q: Condition) -> bool:
    """p precedes q: trees truncate, widths persist, brick extends."""
    if p.n > q.n or p.tree_count > q.tree_count:
        return False
    for m in range(p.tree_count):
        if p.ts.width(m) != q.ts.width(m):
            return False
        if p.ts.trees[m].front != q.ts.trees[m].level(p.n):
            return False
    return brick_extends(q.brick(), p.brick())


def seed_condition(iota: int, system) -> Condition:
    """The minimal condition: w = {0,1,2}, all vectors standard basis.

    n = 3 + 3*iota (three etas plus 3*iota rhos), M = 3*iota trees whose
    two-node fronts carry the meeting nodes of one (pair, index) each.
    Usability is witnessed by the etas themselves: each pair (a, b)
    contributes the 2*iota meeting branches eta_a + g_i(a,b), eta_a +
    g_i(b,a).
    """
    if iota < 2:
        raise BuilderError("iota must be at least 2")
    if not system.covers([0, 1, 2]):
        raise BuilderError("bookkeeping system must cover {0,1,2}")
    w = (0, 1, 2)
    n = 3 + 3 * iota
    pairs = [(0, 1), (0, 2), (1, 2)]
    eta = {a: Gf2Vec.basis(a, n) for a in w}
    rho: Dict[RhoKey, Gf2Vec] = {}
    h: Dict[Tuple[int, int, int], int] = {}
    g: Dict[Tuple[int, int, int], Gf2Vec] = {}
    for pr, (a, b) in enumerate(pairs):
        for i in range(iota):
            tree_index = pr * iota + i
            rho[(i, a, b)] = Gf2Vec.basis(3 + pr * iota + i, n)
            h[(a, b, i)] = tree_index
            h[(b, a, i)] = tree_index
            g[(a, b, i)] = eta[a] + rho[(i, a, b)]
            g[(b, a, i)] = eta[b] + rho[(i, a, b)]
    trees = []
    widths = []
    for m in range(3 * iota):
        front = {node for (key, node) in g.items() if h[key] == m}
        trees.append(FiniteTree.from_front(n, front))
        widths.append(n)
    ts = TreeSystem(n, tuple(trees), tuple(widths))
    return Condition(w, n, ts, eta, h, g, rho, iota)


# ---------------------------------------------------------------------------
# the amalgamation move
# ---------------------------------------------------------------------------


def _validate_embedding_pair(
    p: Condition,
    u: Sequence[int],
    w: Sequence[int],
    w_star: Sequence[int],
    pi0: Mapping[int, int],
    pi1: Mapping[int, int],
    system,
) -> None:
    u_set, w_set = set(u), set(w)
    if not u_set <= w_set or not w_set <= set(p.w):
        raise BuilderError("need u within w within the condition's index set")
    if len(w_set) < 3:
        raise BuilderError("|w| must be at least 3")
    if set(w_star) & set(p.w):
        raise BuilderError("fresh points must avoid the condition's index set")
    for pi in (pi0, pi1):
        if set(pi) != w_set or not set(pi.values()) <= set(w_star):
            raise BuilderError("embeddings must map w into the fresh set")
        if not is_quasi_embedding(pi, restrict_system(system, w_set), system):
            raise BuilderError("embedding does not preserve the bookkeeping data")
    for a in u_set:
        if pi0[a] != pi1[a]:
            raise BuilderError("embeddings must agree on the kernel")
    off0 = {pi0[a] for a in w_set - u_set}
    off1 = {pi1[a] for a in w_set - u_set}
    if off0 & off1:
        raise BuilderError("embeddings must be disjoint off the kernel")
    # slot-avoidance hypothesis: no rank-0 set v+{d} may sit at its slot count
    for d in w_set - u_set:
        for size in range(0, len(u_set) + 1):
            for v in itertools.combinations(sorted(u_set), size):
                vd = frozenset(v) | {d}
                if system.r(vd) == ZERO and system.k(vd) == sum(1 for x in v if x < d):
                    raise BuilderError(
                        f"slot-avoidance hypothesis fails at v={sorted(v)}, d={d}"
                    )


def amalgamate(
    p: Condition,
    u: Sequence[int],
    w: Sequence[int],
    w_star: Sequence[int],
    pi0: Mapping[int, int],
    pi1: Mapping[int, int],
    system,
) -> Condition:
    """Glue two embedded copies of p's data on w over the kernel u.

    The layout is fixed: N = |w^p|+|w*| fresh eta-bits at [n, n+N), then
    iota*N^2 fresh rho-bits, with order-preserving position assignment;
    new cross pairs get the fresh trees [M, M+K*).  Output index set is
    w^p union w*.
    """
    _validate_embedding_pair(p, u, w, w_star, pi0, pi1, system)
    iota = p.iota
    w_new = tuple(sorted(set(p.w) | set(w_star)))
    big_n = len(p.w) + len(w_star)
    big_k = big_n * big_n
    n_new = p.n + big_n + iota * big_k

    pi0_img = {pi0[a]: a for a in pi0}
    pi1_img = {pi1[a]: a for a in pi1}
    copy0 = set(pi0_img)
    copy1 = set(pi1_img)

    # ordered pairs needing fresh trees
    old_pairs = {(a, b) for a in p.w for b in p.w if a != b}
    copied_pairs = {
        (a, b) for a in copy0 for b in copy0 if a != b
    } | {(a, b) for a in copy1 for b in copy1 if a != b}
    cross = sorted(
        (a, b)
        for a in w_new
        for b in w_new
        if a != b and (a, b) not in old_pairs and (a, b) not in copied_pairs
    )
    k_star = len(cross)
    m_new = p.tree_count + k_star

    psi0 = {a: p.n + idx for idx, a in enumerate(w_new)}
    psi1_domain = [
        (i, a, b)
        for i in range(iota)
        for a in w_new
        for b in w_new
        if a != b and a < b
    ]
    psi1 = {key: p.n + big_n + idx for idx, key in enumerate(sorted(psi1_domain))}
    phi_tree = {pair: p.tree_count + idx for idx, pair in enumerate(cross)}

    def lift(vec: Gf2Vec, one_bit: int) -> Gf2Vec:
        return vec.pad(n_new).set_bit(one_bit)

    eta: Dict[int, Gf2Vec] = {}
    for a in w_new:
        if a in p.w:
            eta[a] = lift(p.eta[a], psi0[a])
        elif a in copy0:
            eta[a] = lift(p.eta[pi0_img[a]], psi0[a])
        elif a in copy1:
            eta[a] = lift(p.eta[pi1_img[a]], psi0[a])
        else:
            eta[a] = Gf2Vec.zero(n_new).set_bit(psi0[a])

    h: Dict[Tuple[int, int, int], int] = {}
    for a, b in itertools.permutations(w_new, 2):
        for i in range(iota):
            if (a, b) in old_pairs:
                h[(a, b, i)] = p.h[(a, b, i)]
            elif a in copy0 and b in copy0:
                h[(a, b, i)] = p.h[(pi0_img[a], pi0_img[b], i)]
            elif a in copy1 and b in copy1:
                h[(a, b, i)] = p.h[(pi1_img[a], pi1_img[b], i)]
            else:
                h[(a, b, i)] = phi_tree[(a, b)]

    rho: Dict[RhoKey, Gf2Vec] = {}
    for a, b in itertools.combinations(w_new, 2):
        for i in range(iota):
            bit = psi1[(i, a, b)]
            if (a, b) in old_pairs:
                rho[(i, a, b)] = lift(p.rho[(i, a, b)], bit)
            elif a in copy0 and b in copy0:
                c, d = pi0_img[a], pi0_img[b]
                rho[(i, a, b)] = lift(p.rho[(i, min(c, d), max(c, d))], bit)
            elif a in copy1 and b in copy1:
                c, d = pi1_img[a], pi1_img[b]
                rho[(i, a, b)] = lift(p.rho[(i, min(c, d), max(c, d))], bit)
            else:
                rho[(i, a, b)] = Gf2Vec.zero(n_new).set_bit(bit)

    g: Dict[Tuple[int, int, int], Gf2Vec] = {}
    for a, b in itertools.combinations(w_new, 2):
        for i in range(iota):
            g[(a, b, i)] = eta[a] + rho[(i, a, b)]
            g[(b, a, i)] = eta[b] + rho[(i, a, b)]

    fronts: Dict[int, set] = {m: set() for m in range(m_new)}
    for key, node in g.items():
        fronts[h[key]].add(node)
    trees = tuple(FiniteTree.from_front(n_new, fronts[m]) for m in range(m_new))
    widths = tuple(
        p.ts.width(m) if m < p.tree_count else n_new for m in range(m_new)
    )
    ts = TreeSystem(n_new, trees, widths)
    return Condition(w_new, n_new, ts, eta, h, g, rho, iota)


# ---------------------------------------------------------------------------
# the three chain moves
# ---------------------------------------------------------------------------


def _pad_chain_to(chain: CuteChain, point: int) -> None:
    from .yzr import flat_system

    while chain.size <= point:
        width = point - chain.size + 1
        chain.embed(flat_system(range(width), chain.epsilon), floor=0)


def grow(p: Condition, k: int, chain: CuteChain) -> Tuple[Condition, Optional[QuasiEmbedding]]:
    """Extend p so that k joins the index set with n and M above k."""
    if k in p.w and p.n > k and p.tree_count > k:
        return p, None
    _pad_chain_to(chain, k)
    floor = max(p.w) + 1
    phi = chain.embed(restrict_system(chain, p.w), floor=floor)
    extra = [k] if k not in p.w else []
    w_star = sorted(set(phi.range_points) | set(extra))
    pi = phi.as_dict()
    # new cross pairs include both orders of w^p x w*, so this floor on the
    # new tree count is conservative
    while p.tree_count + 2 * len(p.w) * len(w_star) <= k:
        pad = chain.embed(restrict_system(chain, p.w[:1]), floor=max(w_star) + 1)
        w_star = sorted(set(w_star) | set(pad.range_points))
    q = amalgamate(p, p.w, p.w, w_star, pi, pi, chain)
    if k not in q.w or q.n <= k or q.tree_count <= k:
        raise BuilderError("grow move failed to reach its targets")
    return q, phi


def copy_move(
    p: Condition,
    w: Sequence[int],
    pi0: Mapping[int, int],
    w_plus: Sequence[int],
    chain: CuteChain,
) -> Tuple[Condition, QuasiEmbedding]:
    """Plant a fresh copy of p's data on w; returns (q, the placement map)."""
    w = sorted(set(w))
    w_plus = sorted(set(w_plus))
    if not set(pi0.values()) <= set(w_plus):
        raise BuilderError("pi0 must map into the carrier set")
    if not is_quasi_embedding(pi0, restrict_system(chain, w), chain):
        raise BuilderError("pi0 is not a quasi-embedding")
    floor = max(max(p.w), max(w_plus)) + 1
    pi = chain.embed(restrict_system(chain, w_plus), floor=floor)
    pi_map = dict(zip(w_plus, pi.range_points))
    composed = {a: pi_map[pi0[a]] for a in w}
    q = amalgamate(p, w, w, sorted(pi.range_points), composed, composed, chain)
    return q, QuasiEmbedding.of(pi_map)


def double_move(
    p: Condition,
    u: Sequence[int],
    w: Sequence[int],
    pi0: Mapping[int, int],
    pi1: Mapping[int, int],
    chain: CuteChain,
) -> Tuple[Condition, QuasiEmbedding]:
    """Glue two copies of p's data on w over the kernel u."""
    targets = sorted(set(pi0.values()) | set(pi1.values()))
    floor = max(max(p.w), max(targets)) + 1
    pi = chain.embed(restrict_system(chain, targets), floor=floor)
    pi_map = dict(zip(targets, pi.range_points))
    comp0 = {a: pi_map[pi0[a]] for a in pi0}
    comp1 = {a: pi_map[pi1[a]] for a in pi1}
    q = amalgamate(p, u, w, sorted(pi.range_points), comp0, comp1, chain)
    return q, QuasiEmbedding.of(pi_map)


# ---------------------------------------------------------------------------
# the classification and relocation lemmas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairClassification:
    kind: str  # "A" (pairwise aligned) or "B" (four-set equality)
    a: int
    b: int


def classify_pairs(
    p: Condition, tuples: Sequence[Tuple[Gf2Vec, Gf2Vec]]
) -> PairClassification:
    """Locate the unique pair whose meeting data carries the given tuples.

    Input: iota pairs (nu0_i, nu1_i) of front nodes, no repetitions, all
    with the same sum.  For iota >= 3 the unordered pairs coincide with
    one pair's meeting pairs; for iota = 2 the four values coincide as a
    set.  A failed post-check raises: it would refute the classification
    lemma on a valid condition.
    """
    if len(tuples) != p.iota:
        raise PreconditionError(["tuple count must equal iota"])
    values = [v for pair in tuples for v in pair]
    if len({v.bits for v in values}) != 2 * p.iota:
        raise PreconditionError(["repetition in the tuples"])
    sums = {(x + y).bits for x, y in tuples}
    if len(sums) != 1:
        raise PreconditionError(["tuple sums differ"])
    front_index: Dict[int, Tuple[int, int, int]] = {}
    for (a, b, i), node in p.g.items():
        front_index[node.bits] = (a, b, i)
    for v in values:
        if v.bits not in front_index:
            raise PreconditionError([f"value {v} is not a front node"])

    first = front_index[values[0].bits]
    a, b = min(first[0], first[1]), max(first[0], first[1])
    expected_pairs = {
        frozenset((p.g[(a, b, i)].bits, p.g[(b, a, i)].bits)) for i in range(p.iota)
    }
    got_pairs = {frozenset((x.bits, y.bits)) for x, y in tuples}
    if p.iota >= 3:
        if got_pairs != expected_pairs:
            raise LemmaViolationError(
                f"classification failed: tuples do not align with pair ({a},{b})"
            )
        return PairClassification("A", a, b)
    expected_set = {v for pair in expected_pairs for v in pair}
    got_set = {v.bits for v in values}
    if got_set != expected_set:
        raise LemmaViolationError(
            f"classification failed: values do not match pair ({a},{b})"
        )
    return PairClassification("B", a, b)


def relocate(
    p: Condition, m: OverlapStructure
) -> Tuple[Gf2Vec, OverlapStructure, Tuple[int, ...]]:
    """Find rho and a member of p's family essentially equal to m + rho.

    Preconditions: m lives in the bounded family of p's trees, |u| >= 5,
    and every involved width is at most m's level.  The search follows the
    constructive route: extend m to full depth via its clause-(f) witness,
    translate onto the eta-family by the unique-translation lemma, read
    off the matched index set, and truncate back.
    """
    failed = []
    if not in_bounded_universe(m, p.ts):
        failed.append("bounded universe")
    if len(m.u) < 5:
        failed.append("|u|>=5")
    if not failed:
        for eta, nu in m.pairs():
            for i in range(m.iota):
                if p.ts.width(m.h(eta, nu, i)) > m.level:
                    failed.append("widths<=level")
                    break
    if failed:
        raise PreconditionError(sorted(set(failed)))
    res = check_membership(m, p.ts)
    if not res.ok:
        raise PreconditionError([f"membership ({res.clause})"])

    f_map, g_map = res.witness_f, res.witness_g
    full_u = {eta: f_map[eta] for eta in m.u}
    h_full = {}
    g_full = {}
    for eta, nu in m.pairs():
        for i in range(m.iota):
            h_full[(full_u[eta], full_u[nu], i)] = m.h(eta, nu, i)
            g_full[(full_u[eta], full_u[nu], i)] = g_map[(eta, nu, i)]
    m_full = OverlapStructure(p.n, m.iota, full_u.values(), h_full, g_full)

    eta_family = [p.eta[a] for a in p.w]
    x = translation_witness(list(m_full.u), eta_family, p.n)
    if x is None:
        raise LemmaViolationError(
            "relocation failed: translated set does not sum into the eta family"
        )
    eta_lookup = {p.eta[a].bits: a for a in p.w}
    w1 = tuple(sorted(eta_lookup[(v + x).bits] for v in m_full.u))

    n_full = p.brick().structure_at(p.n, w1, widths=p.ts)
    if n_full is None or not essentially_same(m_full.translate(x), n_full):
        raise LemmaViolationError("relocation failed: full-depth match is not essential")

    rho = x.prefix(m.level)
    n_trunc = p.brick().structure_at(m.level, w1, widths=p.ts)
    if n_trunc is None or not essentially_same(m.translate(rho), n_trunc):
        raise LemmaViolationError("relocation failed: truncated match is not essential")
    return rho, n_trunc, w1


# ---------------------------------------------------------------------------
# chains
# ---------------------------------------------------------------------------


@dataclass
class ChainState:
    chain: CuteChain
    iota: int
    conditions: List[Condition]
    moves: List[Dict] = field(default_factory=list)

    @property
    def last(self) -> Condition:
        return self.conditions[-1]

    def fork(self) -> "ChainState":
        import copy as _copy

        clone = CuteChain(self.chain.epsilon)
        clone.blocks = list(self.chain.blocks)
        clone._max_j = self.chain._max_j
        return ChainState(clone, self.iota, list(self.conditions), list(self.moves))


def default_schedule(stages: int, grow_bound: int = 5) -> List[Tuple]:
    """Round-robin demands: the grows first, then copy/double alternating."""
    out: List[Tuple] = []
    for k in range(grow_bound):
        out.append(("grow", k))
    kinds = itertools.cycle([("copy",), ("double",)])
    while len(out) < stages:
        out.append(next(kinds))
    return out[:stages]


def _default_copy_args(p: Condition) -> Tuple[List[int], Dict[int, int], List[int]]:
    w = list(p.w[:3])
    return w, {a: a for a in w}, w


def _default_double_args(
    p: Condition, chain: CuteChain
) -> Optional[Tuple[List[int], List[int], Dict[int, int], Dict[int, int]]]:
    """A kernel inside the first block plus one point from a later block.

    Mixed sets then carry rank 0 and slot 0 on both sides, so the twin
    embedding (identity on the kernel, fresh copy of the odd point) is a
    quasi-embedding and the slot-avoidance hypothesis holds.
    """
    first_end = chain.blocks[0].end
    kernel = [a for a in p.w if a < first_end][:2]
    outside = [a for a in p.w if a >= first_end]
    if len(kernel) < 2 or not outside:
        return None
    d = outside[0]
    w = sorted(kernel + [d])
    pi0 = {a: a for a in w}
    phi = chain.embed(restrict_system(chain, [d]), floor=max(p.w) + 1)
    d_new = phi.range_points[0]
    pi1 = {a: a for a in kernel}
    pi1[d] = d_new
    return kernel, w, pi0, pi1


def run_builder(
    chain: CuteChain,
    iota: int,
    stages: int,
    schedule: Optional[Sequence[Tuple]] = None,
) -> ChainState:
    """Execute a bookkept chain of moves from the seed condition.

    The schedule is a list of demands ('grow', k) / ('copy',) / ('double',)
    or fully explicit ('copy', w, pi0, w_plus) / ('double', u, w, pi0, pi1)
    entries.  A double demand with no cross-block points available falls
    back to a copy (and records that in the move log).
    """
    if schedule is None:
        schedule = default_schedule(stages)
    if len(schedule) < stages:
        raise BuilderError("schedule shorter than the requested stage count")
    if chain.size < 3:
        _pad_chain_to(chain, 2)
    state = ChainState(chain, iota, [seed_condition(iota, chain)])
    for step in range(stages):
        demand = schedule[step]
        p = state.last
        kind = demand[0]
        if kind == "grow":
            q, phi = grow(p, demand[1], chain)
            state.moves.append(
                {"kind": "grow", "k": demand[1], "real": phi is not None}
            )
        elif kind == "copy":
            if len(demand) == 1:
                w, pi0, w_plus = _default_copy_args(p)
            else:
                _, w, pi0, w_plus = demand
            q, placement = copy_move(p, w, pi0, w_plus, chain)
            state.moves.append({"kind": "copy", "w": list(w)})
        elif kind == "double":
            if len(demand) == 1:
                args = _default_double_args(p, chain)
                if args is None:
                    w, pi0, w_plus = _default_copy_args(p)
                    q, placement = copy_move(p, w, pi0, w_plus, chain)
                    state.moves.append({"kind": "double", "fallback": "copy"})
                    state.conditions.append(q)
                    continue
                u, w, pi0, pi1 = args
            else:
                _, u, w, pi0, pi1 = demand
            q, placement = double_move(p, u, w, pi0, pi1, chain)
            state.moves.append({"kind": "double", "u": list(u), "w": list(w)})
        else:
            raise BuilderError(f"unknown demand {demand!r}")
        state.conditions.append(q)
    return state


@dataclass
class ChainAudit:
    ok: bool
    failures: List[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def audit_chain(
    state: ChainState,
    coverage_bound: int = 0,
    probe: Optional[BrickProbe] = None,
    check_conditions: bool = True,
) -> ChainAudit:
    """Order, validity, usability and coverage audit of a finished chain."""
    failures: List[str] = []
    conds = state.conditions
    for i in range(len(conds) - 1):
        if not cond_leq(conds[i], conds[i + 1]):
            failures.append(f"stage {i} does not precede stage {i+1}")
    for i, p in enumerate(conds):
        if is_usable(p.ts, p.iota) is None:
            failures.append(f"stage {i}: tree system not usable")
        if check_conditions:
            rep = check_condition(p, state.chain, probe=probe)
            if not rep.ok:
                failures.append(f"stage {i}: {rep.failures[:3]}")
    for k in range(coverage_bound):
        if not any(
            k in p.w and p.n > k and p.tree_count > k for p in conds
        ):
            failures.append(f"coverage demand fails at k={k}")
    return ChainAudit(not failures, failures)


# ---------------------------------------------------------------------------
# rank bounds
# ---------------------------------------------------------------------------


@dataclass
class RankBoundsReport:
    stage: int
    lower: Ordinal
    upper: Ordinal
    witness_ok: Optional[bool] = None
    witness_stage: Optional[int] = None
    split_count: Optional[int] = None


def theorem_bounds(epsilon: Ordinal) -> Tuple[Ordinal, Ordinal]:
    """The global sandwich: epsilon <= rank <= w*(epsilon+2)+2."""
    upper = omega_times(epsilon + Ordinal.from_int(2)) + Ordinal.from_int(2)
    return epsilon, upper


def rank_bounds(
    state: ChainState,
    level0: int,
    w0: Sequence[int],
    unfold: bool = True,
) -> RankBoundsReport:
    """Rank sandwich for the labelled structure, plus one unfolding step.

    lower = r(w0), upper = w*(r(w0)+1).  When r(w0) >= 1 and ``unfold`` is
    set, the successor step is replayed constructively: the auxiliary
    system with the doubled slot point is built, embedded, and glued in by
    a double move; the resulting deeper structure must extend the original
    and split the slot point's prefix.
    """
    w0 = tuple(sorted(set(w0)))
    if len(w0) < 3:
        raise BuilderError("w0 must have at least 3 points")
    stage = None
    n0 = None
    for idx, p in enumerate(state.conditions):
        cand = p.brick().structure_at(level0, w0, widths=p.ts)
        if cand is not None and check_membership(cand, p.ts).ok:
            stage = idx
            n0 = cand
            break
    if stage is None:
        raise BuilderError("structure is not in any stage's family")

    chain = state.chain
    lower = chain.r(w0)
    upper = omega_times_succ(lower)
    report = RankBoundsReport(stage, lower, upper)
    if lower < ONE or not unfold:
        return report

    # --- one constructive successor step ---
    scratch = state.fork()
    p_last = scratch.last
    a = sorted(w0)[chain.k(w0)]
    slot = sorted(w0).index(a)
    alpha = decrement_once(lower)
    aux = _successor_system(scratch.chain, w0, slot, alpha)
    if not check_axioms(aux).ok:
        raise LemmaViolationError("auxiliary system fails the axioms")
    phi = scratch.chain.embed(aux, floor=max(w0) + 1)
    phi_map = phi.as_dict()
    big_l = len(w0) + 1
    targets0 = [x for x in range(big_l) if x != slot + 1]
    targets1 = [x for x in range(big_l) if x != slot]
    pi0 = {c: phi_map[t] for c, t in zip(sorted(w0), targets0)}
    pi1 = {c: phi_map[t] for c, t in zip(sorted(w0), targets1)}
    q, placement = double_move(
        p_last, [c for c in w0 if c != a], list(w0), pi0, pi1, scratch.chain
    )
    scratch.conditions.append(q)
    image = sorted(placement.as_dict()[phi_map[t]] for t in range(big_l))
    n1 = q.brick().structure_at(q.n, image, widths=q.ts)
    witness_ok = n1 is not None and extends(n1, n0)
    # the split point: eta_a truncated to the base level
    nu = next(v for v in n0.u if v == p_last.eta[a].prefix(level0))
    split = sum(1 for v in n1.u if nu.is_proper_prefix_of(v)) if n1 else 0
    report.witness_ok = bool(witness_ok and split >= 2)
    report.witness_stage = len(scratch.conditions) - 1
    report.split_count = split
    return report


def _successor_system(
    chain: CuteChain, w0: Tuple[int, ...], slot: int, alpha: Ordinal
) -> YzrSystem:
    """The auxiliary system with the slot point doubled.

    Domain [0, |w0|+1); sets avoiding position slot (or slot+1) copy the
    data of w0 along the increasing bijections; sets containing both carry
    rank alpha, a fresh label and the slot count below the doubled point.
    """
    big_l = len(w0) + 1
    sorted_w0 = sorted(w0)
    targets0 = [x for x in range(big_l) if x != slot + 1]
    targets1 = [x for x in range(big_l) if x != slot]
    inv0 = {t: c for c, t in zip(sorted_w0, targets0)}
    inv1 = {t: c for c, t in zip(sorted_w0, targets1)}
    fresh_j = (
        max(
            chain.j(frozenset(v))
            for size in range(1, len(w0) + 1)
            for v in itertools.combinations(sorted_w0, size)
        )
        + 1
    )
    r: Dict[frozenset, Ordinal] = {}
    j: Dict[frozenset, int] = {}
    k: Dict[frozenset, int] = {}
    for size in range(1, big_l + 1):
        for combo in itertools.combinations(range(big_l), size):
            v = frozenset(combo)
            if slot not in v:
                pre = frozenset(inv1[t] for t in v)
                r[v], j[v], k[v] = chain.r(pre), chain.j(pre), chain.k(pre)
            elif slot + 1 not in v:
                pre = frozenset(inv0[t] for t in v)
                r[v], j[v], k[v] = chain.r(pre), chain.j(pre), chain.k(pre)
            else:
                r[v] = alpha
                j[v] = fresh_j
                k[v] = sum(1 for t in v if t < slot)
    return YzrSystem(range(big_l), r, j, k, chain.epsilon)
