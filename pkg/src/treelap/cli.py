"""Command-line entry point.

Subcommands mirror the library layers: ``yzr`` for bookkeeping systems,
``build`` for construction chains, ``rank`` for the three rank
computations, ``force`` for the forcing-model demos, ``bstar`` for the
pairing-square demo, and ``check`` for validating stored artifacts.

Generative commands require --seed and are byte-deterministic: the same
configuration writes identical artifacts.  Check commands are pure
functions of their input files.  Exit status: 0 clean, 1 a check or an
identity the library is entitled to rely on failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

from . import bstar as bstar_mod
from . import builder as bd
from . import forcing as fc
from . import serialize as io
from .bricks import BrickProbe, check_brick
from .gf2 import Gf2Error
from .ordinals import Ordinal, parse as parse_ordinal, render
from .overlap import check_membership, in_bounded_universe, ndrk
from .treesys import branch_set, is_usable, overlap_count
from .yzr import (
    CuteChain,
    YzrError,
    check_axioms,
    finite_splitting_rank,
    is_quasi_embedding,
)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("TREELAP_WORKERS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items: List):
    """Deterministic map, optionally over a worker pool."""
    n = _workers()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    import multiprocessing

    with multiprocessing.Pool(n) as pool:
        return pool.map(fn, items)


def _read(path: str) -> dict:
    return io.loads(Path(path).read_text())


def _write(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(io.dumps(doc))


def _epsilon(text: str) -> Ordinal:
    return parse_ordinal(text)


# --- yzr ---


def cmd_yzr_check(args) -> int:
    system = io.system_from_doc(_read(args.file))
    report = check_axioms(system)
    if report.ok:
        print(f"ok: system on {len(system.points)} points passes (*)1-(*)5")
        return 0
    print(f"FAIL {report.clause}: {report.detail}")
    return 1


def cmd_yzr_embed(args) -> int:
    system = io.system_from_doc(_read(args.system))
    chain = CuteChain(system.epsilon)
    phi = chain.embed(system, floor=args.target)
    ok = is_quasi_embedding(phi, system, chain)
    window = sorted(set(phi.range_points) | set(range(min(3, chain.size))))
    axioms = check_axioms(chain, points=window)
    print(f"embedded above {args.target}: image {list(phi.range_points)}")
    print(f"quasi-embedding verified: {ok}; window axioms: {axioms.ok}")
    if args.out:
        doc = {
            "schema": io.SCHEMA_VERSION,
            "kind": "embedding",
            "target": args.target,
            "mapping": [[a, b] for a, b in phi.mapping],
        }
        _write(Path(args.out), doc)
    return 0 if ok and axioms.ok else 1


# --- build ---


def cmd_build_run(args) -> int:
    epsilon = _epsilon(args.epsilon)
    chain = CuteChain(epsilon)
    from .yzr import flat_system

    chain.embed(flat_system(range(3), epsilon), floor=0)
    schedule = None
    if args.schedule:
        sched_doc = _read(args.schedule)
        schedule = [tuple(step) for step in sched_doc["steps"]]
    state = bd.run_builder(chain, args.iota, args.stages, schedule)
    out = Path(args.out)
    _write(out / "chain.json", io.chain_to_doc(state))
    last = state.last
    print(
        f"built {args.stages} stages: |w|={len(last.w)} n={last.n} "
        f"M={last.tree_count} (seed {args.seed})"
    )
    return 0


def cmd_build_audit(args) -> int:
    state = io.chain_from_doc(_read(args.file))
    probe = None
    if args.probe_cap:
        probe = BrickProbe.bounded(args.probe_cap)
    audit = bd.audit_chain(state, coverage_bound=args.coverage, probe=probe)
    for i, p in enumerate(state.conditions):
        print(f"stage {i}: |w|={len(p.w)} n={p.n} M={p.tree_count}")
    if audit.ok:
        print(f"ok: chain of {len(state.conditions)} conditions passes the audit")
        return 0
    for f in audit.failures:
        print(f"FAIL {f}")
    return 1


def cmd_build_export_trees(args) -> int:
    state = io.chain_from_doc(_read(args.file))
    last = state.last
    depth = args.depth if args.depth else last.n
    if depth > last.n:
        print(f"depth {depth} exceeds the chain depth {last.n}", file=sys.stderr)
        return 2
    ts = last.ts.truncate(depth)
    _write(Path(args.out), io.tree_system_to_doc(ts))
    print(f"exported {ts.count} trees at depth {depth}")
    return 0


# --- rank ---


def cmd_rank_ndrk(args) -> int:
    m = io.structure_from_doc(_read(args.structure))
    ts = io.tree_system_from_doc(_read(args.trees))
    if not in_bounded_universe(m, ts):
        print("structure is outside the bounded universe", file=sys.stderr)
        return 2
    res = check_membership(m, ts)
    if not res.ok:
        print(f"FAIL membership clause ({res.clause}): {res.detail}")
        return 1
    out = ndrk(m, ts, cap_u=args.cap_u)
    marker = " (|u| cap was binding)" if out.cap_limited else ""
    print(
        f"ndrk = {out.value}{marker} -- a certified lower bound for the rank "
        f"over the unbounded family"
    )
    return 0


def cmd_rank_bounds(args) -> int:
    state = io.chain_from_doc(_read(args.file))
    w0 = [int(x) for x in args.points.split(",")]
    report = bd.rank_bounds(state, args.level, w0, unfold=not args.no_unfold)
    print(
        f"stage {report.stage}: {render(report.lower)} <= rank <= "
        f"{render(report.upper)}"
    )
    lo, up = bd.theorem_bounds(state.chain.epsilon)
    print(f"global: {render(lo)} <= rank of the tree sequence <= {render(up)}")
    if report.witness_ok is not None:
        print(
            f"successor-step witness: stage {report.witness_stage}, "
            f"split {report.split_count}, verified {report.witness_ok}"
        )
        if not report.witness_ok:
            return 1
    return 0


def cmd_rank_splitting(args) -> int:
    model = io.model_from_doc(_read(args.model))
    w = [int(x) for x in args.set.split(",")]
    value = finite_splitting_rank(model, w)
    print(f"splitting rank of {sorted(w)} = {value} (threshold {model.threshold})")
    return 0


# --- force ---


def cmd_force_demo(args) -> int:
    epsilon = _epsilon(args.epsilon)
    demo = fc.run_demo(args.points, args.stages, epsilon, args.iota)
    report = demo.report
    out = Path(args.out) if args.out else None
    if out:
        doc = {
            "schema": io.SCHEMA_VERSION,
            "kind": "forcing-extract",
            "eta": {str(a): v.to_string() for a, v in sorted(report.eta.items())},
            "g": [
                [a, b, i, v.to_string()]
                for (a, b, i), v in sorted(report.g.items())
            ],
            "h": [[a, b, i, m] for (a, b, i), m in sorted(report.h.items())],
            "overlaps": [
                [a, b, c] for (a, b), c in sorted(report.overlap_counts.items())
            ],
            "ok": report.ok,
        }
        _write(out / "extract.json", doc)
    print(f"labels: {args.points}, stages: {args.stages}, seed {args.seed}")
    for a in sorted(report.eta):
        print(f"eta[{a}] = {report.eta[a].to_string()[:48]}... ({report.eta[a].length} bits)")
    for (a, b), c in sorted(report.overlap_counts.items()):
        print(f"pair ({a},{b}): {c} meeting branches at final depth")
    if report.ok:
        print("all meeting identities verified")
        return 0
    for f in report.failures:
        print(f"FAIL {f}")
    return 1


def cmd_force_density(args) -> int:
    epsilon = _epsilon(args.epsilon)
    from .builder import run_builder
    from .yzr import two_tier_system

    oracle = two_tier_system(range(args.points), epsilon)
    chain = CuteChain(epsilon)
    chain.embed(oracle, floor=0)
    state = run_builder(chain, args.iota, 0)
    p = fc.make_condition(
        state.conditions[0].n, {a: a for a in range(3)}, 0, state, oracle
    )
    ok = True
    for alpha in range(3, args.points):
        q = fc.density_add_point(p, alpha, state, oracle)
        step_ok = fc.leq(p, q) and alpha in q.u
        print(f"add label {alpha}: |u|={len(q.u)} n={q.n} verified={step_ok}")
        ok = ok and step_ok
        p = q
    fc.extend_chain(state)
    q = fc.density_grow_depth(p, p.n, state, oracle)
    step_ok = fc.leq(p, q) and q.n > p.n
    print(f"grow depth past {p.n}: n={q.n} verified={step_ok}")
    return 0 if ok and step_ok else 1


def cmd_force_amalgamate(args) -> int:
    epsilon = _epsilon(args.epsilon)
    from .builder import run_builder
    from .yzr import two_tier_system

    points = max(args.points, 5)
    oracle = two_tier_system(range(points), epsilon)
    chain = CuteChain(epsilon)
    chain.embed(oracle, floor=0)
    state = run_builder(chain, args.iota, 0)
    p0 = fc.make_condition(
        state.conditions[0].n, {a: a for a in range(3)}, 0, state, oracle
    )
    p_xi = fc.density_add_point(p0, 3, state, oracle)
    phi_sigma = {
        0: p_xi.phi[0],
        1: p_xi.phi[1],
        2: p_xi.phi[2],
        4: p_xi.phi[3],
    }
    p_sigma = fc.make_condition(p_xi.n, phi_sigma, p_xi.stage, state, oracle)
    res = fc.common_upper_bound(p_xi, p_sigma, state, oracle)
    if res:
        both = fc.leq(p_xi, res.condition) and fc.leq(p_sigma, res.condition)
        print(f"twins over kernel {sorted(set(p_xi.u) & set(p_sigma.u))} glued: "
              f"|u|={len(res.condition.u)} n={res.condition.n} bounds-both={both}")
        return 0 if both else 1
    print(f"FAIL {res.reason}")
    return 1


# --- bstar ---


def cmd_bstar_demo(args) -> int:
    depth = args.depth or max(bstar_mod.required_depth(args.count), 24)
    fam = bstar_mod.build_family(args.count, depth, args.seed)
    print(f"family of {args.count} prefixes at depth {depth} (seed {args.seed})")
    for i, member in enumerate(fam.members):
        print(f"x[{i}] = {''.join(str(b) for b in member)}")
    ok = True
    for a in range(args.count):
        for b in range(args.count):
            if a == b:
                continue
            idx = bstar_mod.family_relation_index(fam, a, b)
            v = bstar_mod.bstar_relation(
                fam.members[a], fam.members[b], depth, certified_index=idx
            )
            good = v.kind == "related" and v.certified
            ok = ok and good
            print(f"pair ({a},{b}): relation index {idx} verified={good}")
    return 0 if ok else 1


# --- check ---


def cmd_check_brick(args) -> int:
    brick = io.brick_from_doc(_read(args.file))
    ts = io.tree_system_from_doc(_read(args.trees))
    system = io.system_from_doc(_read(args.system))
    report = check_brick(brick, system, ts)
    if report.ok:
        print(f"ok: brick on {len(brick.w)} points at depth {brick.n}")
        return 0
    for clause, detail in report.failures:
        print(f"FAIL {clause}: {detail}")
    return 1


def cmd_check_condition(args) -> int:
    cond = io.condition_from_doc(_read(args.file))
    system = io.system_from_doc(_read(args.system))
    report = bd.check_condition(cond, system)
    if report.ok:
        print(f"ok: condition |w|={len(cond.w)} n={cond.n} M={cond.tree_count}")
        return 0
    for clause, detail in report.failures:
        print(f"FAIL {clause}: {detail}")
    return 1


def cmd_check_structure(args) -> int:
    m = io.structure_from_doc(_read(args.file))
    ts = io.tree_system_from_doc(_read(args.trees))
    res = check_membership(m, ts)
    if res.ok:
        print(f"ok: structure at level {m.level} with |u|={len(m.u)}")
        return 0
    print(f"FAIL clause ({res.clause}): {res.detail}")
    return 1


# --- wiring ---


def _add_seed(sp) -> None:
    sp.add_argument("--seed", type=int, required=True, help="run seed (mandatory)")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="treelap", description=__doc__)
    sub = top.add_subparsers(dest="group", required=True)

    yzr = sub.add_parser("yzr", help="bookkeeping systems").add_subparsers(
        dest="cmd", required=True
    )
    p = yzr.add_parser("check")
    p.add_argument("file")
    p.set_defaults(fn=cmd_yzr_check)
    p = yzr.add_parser("embed")
    p.add_argument("--system", required=True)
    p.add_argument("--target", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_yzr_embed)

    build = sub.add_parser("build", help="construction chains").add_subparsers(
        dest="cmd", required=True
    )
    p = build.add_parser("run")
    p.add_argument("--stages", type=int, required=True)
    p.add_argument("--iota", type=int, default=2)
    p.add_argument("--epsilon", default="w*2")
    p.add_argument("--schedule")
    p.add_argument("--out", required=True)
    _add_seed(p)
    p.set_defaults(fn=cmd_build_run)
    p = build.add_parser("audit")
    p.add_argument("file")
    p.add_argument("--coverage", type=int, default=5)
    p.add_argument("--probe-cap", type=int, default=0)
    p.set_defaults(fn=cmd_build_audit)
    p = build.add_parser("export-trees")
    p.add_argument("file")
    p.add_argument("--depth", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_build_export_trees)

    rank = sub.add_parser("rank", help="rank computations").add_subparsers(
        dest="cmd", required=True
    )
    p = rank.add_parser("ndrk")
    p.add_argument("--structure", required=True)
    p.add_argument("--trees", required=True)
    p.add_argument("--cap-u", type=int, default=4)
    p.set_defaults(fn=cmd_rank_ndrk)
    p = rank.add_parser("bounds")
    p.add_argument("file")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--no-unfold", action="store_true")
    p.set_defaults(fn=cmd_rank_bounds)
    p = rank.add_parser("splitting")
    p.add_argument("--model", required=True)
    p.add_argument("--set", required=True)
    p.set_defaults(fn=cmd_rank_splitting)

    force = sub.add_parser("force", help="the forcing model").add_subparsers(
        dest="cmd", required=True
    )
    p = force.add_parser("demo")
    p.add_argument("--points", type=int, default=3)
    p.add_argument("--stages", type=int, default=6)
    p.add_argument("--iota", type=int, default=2)
    p.add_argument("--epsilon", default="w*2")
    p.add_argument("--out")
    _add_seed(p)
    p.set_defaults(fn=cmd_force_demo)
    p = force.add_parser("density")
    p.add_argument("--points", type=int, default=5)
    p.add_argument("--iota", type=int, default=2)
    p.add_argument("--epsilon", default="w*2")
    _add_seed(p)
    p.set_defaults(fn=cmd_force_density)
    p = force.add_parser("amalgamate")
    p.add_argument("--points", type=int, default=5)
    p.add_argument("--iota", type=int, default=2)
    p.add_argument("--epsilon", default="w*2")
    _add_seed(p)
    p.set_defaults(fn=cmd_force_amalgamate)

    bstar = sub.add_parser("bstar", help="the pairing square").add_subparsers(
        dest="cmd", required=True
    )
    p = bstar.add_parser("demo")
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--depth", type=int, default=0)
    _add_seed(p)
    p.set_defaults(fn=cmd_bstar_demo)

    check = sub.add_parser("check", help="validate stored artifacts").add_subparsers(
        dest="cmd", required=True
    )
    p = check.add_parser("brick")
    p.add_argument("file")
    p.add_argument("--trees", required=True)
    p.add_argument("--system", required=True)
    p.set_defaults(fn=cmd_check_brick)
    p = check.add_parser("condition")
    p.add_argument("file")
    p.add_argument("--system", required=True)
    p.set_defaults(fn=cmd_check_condition)
    p = check.add_parser("structure")
    p.add_argument("file")
    p.add_argument("--trees", required=True)
    p.set_defaults(fn=cmd_check_structure)

    return top


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (io.SerializeError, FileNotFoundError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 2
    except (Gf2Error, YzrError, bd.BuilderError, fc.ForcingError, bstar_mod.BstarError) as e:
        print(f"check failed: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
