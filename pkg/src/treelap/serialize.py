"""JSON codecs for every object the tools exchange.

One document per object, line-oriented friendly, with a schema version
field.  Vectors render as 0/1 strings (coordinate 0 first), ordinals in
the w^e*c text form, subsets as comma-joined sorted point lists.  All
dictionaries serialise through sorted key lists so identical objects
produce identical bytes.
"""

from __future__ import annotations

import json
from typing import Dict, Iterable, List, Mapping, Tuple

from .bricks import Brick
from .builder import ChainState, Condition
from .gf2 import Gf2Vec
from .ordinals import Ordinal, parse, render
from .overlap import OverlapStructure
from .treesys import FiniteTree, TreeSystem
from .yzr import FiniteModel, YzrSystem

SCHEMA_VERSION = 1


class SerializeError(ValueError):
    pass


def _head(kind: str) -> Dict:
    return {"schema": SCHEMA_VERSION, "kind": kind}


def _expect(doc: Mapping, kind: str) -> None:
    if doc.get("schema") != SCHEMA_VERSION:
        raise SerializeError(f"unsupported schema {doc.get('schema')!r}")
    if doc.get("kind") != kind:
        raise SerializeError(f"expected a {kind} document, got {doc.get('kind')!r}")


def _subset_key(v: Iterable[int]) -> str:
    return ",".join(str(x) for x in sorted(v))


def _parse_subset(key: str) -> frozenset:
    return frozenset(int(x) for x in key.split(","))


# --- vectors and trees ---


def vec_to_str(v: Gf2Vec) -> str:
    return v.to_string()


def tree_to_doc(t: FiniteTree) -> Dict:
    doc = _head("tree")
    doc["depth"] = t.depth
    doc["front"] = sorted(v.to_string() for v in t.front)
    return doc


def tree_from_doc(doc: Mapping) -> FiniteTree:
    _expect(doc, "tree")
    return FiniteTree.from_front(
        doc["depth"], [Gf2Vec.from_string(s) for s in doc["front"]]
    )


def tree_system_to_doc(ts: TreeSystem) -> Dict:
    doc = _head("tree-system")
    doc["M"] = ts.count
    doc["n"] = ts.n
    doc["d"] = list(ts.widths)
    doc["trees"] = [sorted(v.to_string() for v in t.front) for t in ts.trees]
    return doc


def tree_system_from_doc(doc: Mapping) -> TreeSystem:
    _expect(doc, "tree-system")
    trees = tuple(
        FiniteTree.from_front(doc["n"], [Gf2Vec.from_string(s) for s in front])
        for front in doc["trees"]
    )
    return TreeSystem(doc["n"], trees, tuple(doc["d"]))


# --- overlap structures ---


def structure_to_doc(m: OverlapStructure) -> Dict:
    doc = _head("structure")
    doc["level"] = m.level
    doc["iota"] = m.iota
    doc["u"] = [v.to_string() for v in m.u]
    doc["h"] = [
        [eta.to_string(), nu.to_string(), i, m.h(eta, nu, i)]
        for eta, nu in m.pairs()
        for i in range(m.iota)
    ]
    doc["g"] = [
        [eta.to_string(), nu.to_string(), i, m.g(eta, nu, i).to_string()]
        for eta, nu in m.pairs()
        for i in range(m.iota)
    ]
    return doc


def structure_from_doc(doc: Mapping) -> OverlapStructure:
    _expect(doc, "structure")
    u = [Gf2Vec.from_string(s) for s in doc["u"]]
    h = {
        (Gf2Vec.from_string(e), Gf2Vec.from_string(n), i): m_idx
        for e, n, i, m_idx in doc["h"]
    }
    g = {
        (Gf2Vec.from_string(e), Gf2Vec.from_string(n), i): Gf2Vec.from_string(val)
        for e, n, i, val in doc["g"]
    }
    return OverlapStructure(doc["level"], doc["iota"], u, h, g)


# --- bookkeeping systems and models ---


def system_to_doc(s: YzrSystem) -> Dict:
    doc = _head("yzr-system")
    doc["points"] = list(s.points)
    doc["epsilon"] = render(s.epsilon)
    subsets = sorted(s._r, key=lambda v: (len(v), sorted(v)))
    doc["r"] = {_subset_key(v): render(s._r[v]) for v in subsets}
    doc["j"] = {_subset_key(v): s._j[v] for v in subsets}
    doc["k"] = {_subset_key(v): s._k[v] for v in subsets}
    return doc


def system_from_doc(doc: Mapping) -> YzrSystem:
    _expect(doc, "yzr-system")
    r = {_parse_subset(k): parse(v) for k, v in doc["r"].items()}
    j = {_parse_subset(k): v for k, v in doc["j"].items()}
    k = {_parse_subset(key): v for key, v in doc["k"].items()}
    return YzrSystem(doc["points"], r, j, k, parse(doc["epsilon"]))


def model_to_doc(model: FiniteModel) -> Dict:
    doc = _head("finite-model")
    doc["universe"] = model.universe
    doc["threshold"] = model.threshold
    doc["increasing_only"] = model.increasing_only
    doc["relations"] = [
        {
            "arity": arity,
            "label": label,
            "tuples": sorted(list(t) for t in tuples),
        }
        for (arity, label), tuples in sorted(model.relations.items())
    ]
    return doc


def model_from_doc(doc: Mapping) -> FiniteModel:
    _expect(doc, "finite-model")
    rels = {
        (entry["arity"], entry["label"]): frozenset(
            tuple(t) for t in entry["tuples"]
        )
        for entry in doc["relations"]
    }
    return FiniteModel(
        doc["universe"], rels, doc["threshold"], doc["increasing_only"]
    )


# --- bricks and conditions ---


def _tables_to_doc(
    w: Tuple[int, ...], iota: int, h: Mapping, g: Mapping
) -> Tuple[List, List]:
    h_doc = []
    g_doc = []
    for a in w:
        for b in w:
            if a == b:
                continue
            for i in range(iota):
                h_doc.append([a, b, i, h[(a, b, i)]])
                g_doc.append([a, b, i, g[(a, b, i)].to_string()])
    return h_doc, g_doc


def brick_to_doc(b: Brick) -> Dict:
    doc = _head("brick")
    doc["w"] = list(b.w)
    doc["n"] = b.n
    doc["iota"] = b.iota
    doc["eta"] = {str(a): b.eta[a].to_string() for a in b.w}
    doc["h"], doc["g"] = _tables_to_doc(b.w, b.iota, b.h, b.g)
    return doc


def brick_from_doc(doc: Mapping) -> Brick:
    _expect(doc, "brick")
    eta = {int(a): Gf2Vec.from_string(s) for a, s in doc["eta"].items()}
    h = {(a, b, i): m for a, b, i, m in doc["h"]}
    g = {(a, b, i): Gf2Vec.from_string(s) for a, b, i, s in doc["g"]}
    return Brick(doc["w"], doc["n"], eta, h, g, doc["iota"])


def condition_to_doc(p: Condition) -> Dict:
    doc = _head("condition")
    doc["w"] = list(p.w)
    doc["n"] = p.n
    doc["iota"] = p.iota
    doc["eta"] = {str(a): p.eta[a].to_string() for a in p.w}
    doc["h"], doc["g"] = _tables_to_doc(p.w, p.iota, p.h, p.g)
    doc["rho"] = [
        [i, a, b, p.rho[(i, a, b)].to_string()]
        for (i, a, b) in sorted(p.rho)
    ]
    doc["trees"] = tree_system_to_doc(p.ts)
    return doc


def condition_from_doc(doc: Mapping) -> Condition:
    _expect(doc, "condition")
    ts = tree_system_from_doc(doc["trees"])
    eta = {int(a): Gf2Vec.from_string(s) for a, s in doc["eta"].items()}
    h = {(a, b, i): m for a, b, i, m in doc["h"]}
    g = {(a, b, i): Gf2Vec.from_string(s) for a, b, i, s in doc["g"]}
    rho = {(i, a, b): Gf2Vec.from_string(s) for i, a, b, s in doc["rho"]}
    return Condition(doc["w"], doc["n"], ts, eta, h, g, rho, doc["iota"])


def chain_to_doc(state: ChainState) -> Dict:
    doc = _head("chain")
    doc["iota"] = state.iota
    doc["epsilon"] = render(state.chain.epsilon)
    doc["moves"] = state.moves
    doc["conditions"] = [condition_to_doc(p) for p in state.conditions]
    doc["blocks"] = [
        {
            "start": blk.start,
            "end": blk.end,
            "j0": blk.j0,
            "system": system_to_doc(blk.system),
        }
        for blk in state.chain.blocks
    ]
    return doc


def chain_from_doc(doc: Mapping) -> ChainState:
    _expect(doc, "chain")
    from .yzr import CuteChain, _Block

    chain = CuteChain(parse(doc["epsilon"]))
    max_j = -1
    for blk in doc["blocks"]:
        system = system_from_doc(blk["system"])
        chain.blocks.append(_Block(blk["start"], blk["end"], system, blk["j0"]))
        width = blk["end"] - blk["start"]
        crossing = ((1 << blk["start"]) - 1) * ((1 << width) - 1)
        block_max = max(system._j.values(), default=-1)
        max_j = max(max_j, block_max, blk["j0"] + crossing - 1 if crossing else -1)
    chain._max_j = max_j
    conditions = [condition_from_doc(d) for d in doc["conditions"]]
    return ChainState(chain, doc["iota"], conditions, list(doc["moves"]))


def dumps(doc: Mapping) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def loads(text: str) -> Dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SerializeError(f"bad document at position {e.pos}: {e.msg}") from e
