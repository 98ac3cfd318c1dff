"""Independent brute-force oracles the tests check the library against.

Everything here recomputes results along a different route than the
library: exhaustive subset enumeration instead of elimination, literal
set intersections instead of counting tricks, joint assignment search
instead of potential propagation, bottom-up fixpoints instead of
memoized recursion, and full quantifier sweeps instead of candidate
scans.  Slow on purpose; only run at small parameters.
"""

from __future__ import annotations

import itertools
from typing import Dict, List, Optional, Sequence, Tuple

from treelap.gf2 import Gf2Vec
from treelap.ordinals import Ordinal
from treelap.overlap import OverlapStructure, check_membership, essentially_extends, essentially_same, extends
from treelap.treesys import BranchSet, TreeSystem
from treelap.yzr import is_quasi_embedding, restrict_system


def subset_xor_independent(vectors: Sequence[Gf2Vec]) -> bool:
    """No nonempty subfamily XORs to zero, by enumerating all subsets."""
    vecs = list(vectors)
    for size in range(1, len(vecs) + 1):
        for combo in itertools.combinations(vecs, size):
            acc = 0
            for v in combo:
                acc ^= v.bits
            if acc == 0:
                return False
    return True


def cnf_multiply(a: Ordinal, b: Ordinal) -> Ordinal:
    """Ordinal product a*b in CNF, by left-distributing over b's terms.

    a*(w^e*c + rest) = (a*w^e)*c + a*rest, where for e >= 1 only a's
    leading exponent survives: a*w^e = w^(e_a + e); and a*c for finite c
    multiplies the leading coefficient only.
    """
    if a.is_zero or b.is_zero:
        return Ordinal()
    out = Ordinal()
    lead_e, lead_c = a.terms[0]
    for e, c in b.terms:
        if e > 0:
            out = out + Ordinal(((lead_e + e, c),))
        else:
            # a * c = w^lead_e * (lead_c * c) + (a's tail, once)
            term = [(lead_e, lead_c * c)]
            term += [t for t in a.terms[1:]]
            out = out + Ordinal(tuple(term))
    return out


def overlap_intersection(b: BranchSet, rho0: Gf2Vec, rho1: Gf2Vec) -> set:
    """(rho0+B) cap (rho1+B) computed literally as sets of vectors."""
    left = {(rho0 + v).bits for v in b.vectors}
    right = {(rho1 + v).bits for v in b.vectors}
    return left & right


def translation_witnesses_exhaustive(
    a_set: Sequence[Gf2Vec], b_set: Sequence[Gf2Vec], length: int
) -> List[Gf2Vec]:
    """Every x in 2^length with A+x a subset of B, by full enumeration."""
    b_bits = {v.bits for v in b_set}
    out = []
    for x in range(1 << length):
        if all((v.bits ^ x) in b_bits for v in a_set):
            out.append(Gf2Vec(length, x))
    return out


def clause_f_joint_search(m: OverlapStructure, ts: TreeSystem) -> bool:
    """Clause (f) by jointly enumerating all (F, G) assignments."""
    n_work = max(ts.n, m.level)

    def continuations(prefix: Gf2Vec) -> List[Gf2Vec]:
        gap = n_work - prefix.length
        return [
            Gf2Vec(n_work, prefix.bits | (tail << prefix.length))
            for tail in range(1 << gap)
        ]

    def branch_choices(tree_index: int, prefix: Gf2Vec) -> List[Gf2Vec]:
        if tree_index >= ts.count:
            return continuations(prefix)
        return [
            f.pad(n_work)
            for f in ts.trees[tree_index].front
            if prefix.is_prefix_of(f.pad(n_work))
        ]

    u = list(m.u)
    pair_slots = [
        (eta, nu, i)
        for idx, eta in enumerate(u)
        for nu in u[idx + 1 :]
        for i in range(m.iota)
    ]

    f_options = [continuations(eta) for eta in u]
    for f_choice in itertools.product(*f_options):
        f_map = dict(zip(u, f_choice))
        ok = True
        for eta, nu, i in pair_slots:
            target = f_map[eta] + f_map[nu]
            fwd = branch_choices(m.h(eta, nu, i), m.g(eta, nu, i))
            rev_bits = {v.bits for v in branch_choices(m.h(nu, eta, i), m.g(nu, eta, i))}
            if not any(x.bits ^ target.bits in rev_bits for x in fwd):
                ok = False
                break
        if ok:
            return True
    return False


def ndrk_fixpoint(universe: List[OverlapStructure], top_level: int) -> Dict:
    """Bottom-up rank fixpoint over an explicitly enumerated universe.

    Returns a list of ranks parallel to the universe list.  Iterates the
    successor clause until the surviving set empties (levels strictly
    increase below the top, so it must).  Candidate extensions are looked
    up through a prefix-set index -- pure indexing, the extension and
    split conditions are still verified literally on every candidate.
    """
    by_base: Dict[Tuple[int, frozenset], List[int]] = {}
    for idx, n in enumerate(universe):
        for lvl in range(1, n.level):
            key = (lvl, frozenset(v.prefix(lvl).bits for v in n.u))
            by_base.setdefault(key, []).append(idx)

    ranks = [0] * len(universe)
    current = list(range(len(universe)))
    alpha = 0
    while current:
        alpha += 1
        prev_ids = frozenset(current)
        survivors = []
        for i in current:
            m = universe[i]
            key = (m.level, frozenset(v.bits for v in m.u))
            candidates = by_base.get(key, ())
            good = True
            for nu in m.u:
                found = False
                for j in candidates:
                    if j not in prev_ids:
                        continue
                    n = universe[j]
                    if sum(1 for v in n.u if nu.is_proper_prefix_of(v)) < 2:
                        continue
                    if extends(n, m):
                        found = True
                        break
                if not found:
                    good = False
                    break
            if good:
                survivors.append(i)
                ranks[i] = alpha
        if len(survivors) == len(current):
            raise AssertionError("rank fixpoint failed to shrink")
        current = survivors
    return ranks


def brute_b6_violations(brick, system, ts: TreeSystem) -> List[str]:
    """Full (+)6 sweep: all labels, all same-level pairs, all rho."""
    from treelap.bricks import materialize_M

    out = []
    labelled = materialize_M(brick, ts)
    by_level: Dict[int, List] = {}
    for level, w_star, m in labelled:
        by_level.setdefault(level, []).append((w_star, m))
    for level, entries in sorted(by_level.items()):
        for (w0, m0) in entries:
            for (w1, m1) in entries:
                for rho_bits in range(1 << level):
                    rho = Gf2Vec(level, rho_bits)
                    if not essentially_same(m0, m1.translate(rho)):
                        continue
                    order_iso = dict(zip(sorted(w0), sorted(w1)))
                    aligned = all(
                        brick.eta[a].prefix(level) + rho
                        == brick.eta[order_iso[a]].prefix(level)
                        for a in w0
                    )
                    qe = is_quasi_embedding(
                        order_iso, restrict_system(system, w0), system
                    )
                    if not (aligned and qe):
                        out.append(
                            f"level {level}: {list(w0)} ~ {list(w1)} + {rho}"
                        )
    return out


def brute_b7_violations(brick, system, ts: TreeSystem) -> List[str]:
    """Full (+)7 sweep over all essential-extension pairs in the family."""
    from treelap.bricks import materialize_M
    from treelap.ordinals import ZERO

    out = []
    labelled = materialize_M(brick, ts)
    for level0, w0, m0 in labelled:
        if system.r(w0) != ZERO:
            continue
        slot_point = sorted(w0)[system.k(w0)]
        prefix = brick.eta[slot_point].prefix(level0)
        for level1, w1, m1 in labelled:
            if level1 < level0:
                continue
            if not essentially_extends(m1, m0):
                continue
            count = sum(
                1 for v in m1.u if prefix.is_prefix_of(v)
            )
            if count != 1:
                out.append(
                    f"level {level0}: base {list(w0)} splits into {list(w1)}"
                )
    return out


def naive_splitting_rank(model, w):
    """Direct, unmemoized recursion for the finite splitting rank."""
    from treelap.yzr import _applicable, _substitutions

    w = frozenset(w)
    apps = _applicable(model, w)
    if not apps:
        return "inf"
    for lab, slot in apps:
        if len(_substitutions(model, w, lab, slot)) < model.threshold:
            return -1
    worst = None
    for lab, slot in apps:
        best = -1
        for alpha in _substitutions(model, w, lab, slot):
            if alpha in w:
                continue
            sub = naive_splitting_rank(model, w | {alpha})
            if sub == "inf":
                best = "inf"
                break
            if best != "inf":
                best = max(best, sub)
        if worst is None:
            worst = best
        elif best != "inf" and (worst == "inf" or best < worst):
            worst = best
    if worst is None or worst == -1:
        return 0
    if worst == "inf":
        return "inf"
    return worst + 1
