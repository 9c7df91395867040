"""Compositional pattern producing networks: the compact, evolvable genotype.

A CPPN is a small DAG of mixed activation functions that maps connection
endpoint coordinates (x1, y1, x2, y2, bias) to a single weight.  Values are
immutable; mutation returns a new genome and consumes an explicit numpy
Generator so callers own stream partitioning.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .ann import SchemaError, _expect_keys, _expect_list, _expect_num, _expect_str

FUNCTIONS = ("linear", "sigmoid_steep", "sine", "gaussian", "abs", "square", "inv_exp")

NODE_TAGS = ("io", "geometry", "sharpness_target", "orbit_sum", "evolved")
CONN_TAGS = ("geometry", "sharpness", "orbit_link", "orbit_weight", "evolved")

INPUT_IDS = ("in0", "in1", "in2", "in3", "in4")  # x1, y1, x2, y2, bias
OUTPUT_ID = "out0"

CPPN_SCHEMA = "cppn/1"

# Net inputs are clamped here before the node function is applied, so very long
# mutation chains cannot push sine/exp into overflow.  Compiled genotypes stay
# far below the cap (detector net input is at most s * 16, around 1.6e5).
Z_CAP = 1.0e6


class CppnError(ValueError):
    pass


class CppnCycleError(CppnError):
    def __init__(self, cycle_ids):
        self.cycle_ids = tuple(sorted(cycle_ids))
        super().__init__(f"cycle through nodes {list(self.cycle_ids)}")


def apply_function(name: str, z: float) -> float:
    if z > Z_CAP:
        z = Z_CAP
    elif z < -Z_CAP:
        z = -Z_CAP
    if name == "linear":
        return z
    if name == "sigmoid_steep":
        if z <= -150.0:
            return 0.0
        return 1.0 / (1.0 + math.exp(-4.9 * z))
    if name == "sine":
        return math.sin(z)
    if name == "gaussian":
        return math.exp(-(z * z))
    if name == "abs":
        return abs(z)
    if name == "square":
        return z * z
    if name == "inv_exp":
        return math.exp(-max(z, 0.0))
    raise CppnError(f"unknown function {name!r}")


@dataclass(frozen=True)
class CppnNode:
    id: str
    function: str
    tag: str


@dataclass(frozen=True)
class CppnConnection:
    src: str
    dst: str
    weight: float
    tag: str

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class Cppn:
    """Genotype value. Nodes sorted by id, connections by (src, dst)."""

    nodes: tuple[CppnNode, ...]
    connections: tuple[CppnConnection, ...]
    _node_map: Mapping[str, CppnNode] = field(
        init=False, repr=False, compare=False, hash=False, default=None
    )

    def __post_init__(self):
        nodes = tuple(sorted(self.nodes, key=lambda n: n.id))
        conns = tuple(sorted(self.connections, key=lambda c: (c.src, c.dst)))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "connections", conns)
        object.__setattr__(self, "_node_map", {n.id: n for n in nodes})

    def node(self, node_id: str) -> CppnNode:
        return self._node_map[node_id]

    def has_node(self, node_id: str) -> bool:
        return node_id in self._node_map


def validate_cppn(cppn: Cppn) -> list[str]:
    problems: list[str] = []
    ids = [n.id for n in cppn.nodes]
    if len(ids) != len(set(ids)):
        problems.append("duplicate node ids")
    for n in cppn.nodes:
        if n.function not in FUNCTIONS:
            problems.append(f"node {n.id}: unknown function {n.function!r}")
        if n.tag not in NODE_TAGS:
            problems.append(f"node {n.id}: unknown tag {n.tag!r}")
    for iid in INPUT_IDS:
        if not cppn.has_node(iid):
            problems.append(f"missing input node {iid}")
        elif cppn.node(iid).tag != "io":
            problems.append(f"input node {iid} must have tag io")
    if not cppn.has_node(OUTPUT_ID):
        problems.append(f"missing output node {OUTPUT_ID}")
    else:
        out = cppn.node(OUTPUT_ID)
        if out.tag != "io":
            problems.append("output node must have tag io")
        if out.function != "linear":
            problems.append("output node function must be linear")

    keys = set()
    node_ids = set(ids)
    for c in cppn.connections:
        if c.key in keys:
            problems.append(f"duplicate connection {c.src}->{c.dst}")
        keys.add(c.key)
        if c.src not in node_ids or c.dst not in node_ids:
            problems.append(f"connection {c.src}->{c.dst}: unknown endpoint")
        if c.dst in INPUT_IDS:
            problems.append(f"connection into input node {c.dst}")
        if c.tag not in CONN_TAGS:
            problems.append(f"connection {c.src}->{c.dst}: unknown tag {c.tag!r}")
        if not math.isfinite(c.weight):
            problems.append(f"connection {c.src}->{c.dst}: non-finite weight")
    try:
        topological_order(cppn)
    except CppnCycleError as e:
        problems.append(str(e))
    return problems


def require_valid_cppn(cppn: Cppn) -> None:
    problems = validate_cppn(cppn)
    if problems:
        raise CppnError("; ".join(problems))


def topological_order(cppn: Cppn) -> list[str]:
    """Node ids with every src before its dst; ties broken by id (stable)."""
    import heapq

    indeg = {n.id: 0 for n in cppn.nodes}
    outgoing: dict[str, list[str]] = {n.id: [] for n in cppn.nodes}
    for c in cppn.connections:
        if c.src in indeg and c.dst in indeg:
            indeg[c.dst] += 1
            outgoing[c.src].append(c.dst)
    ready = [nid for nid, d in sorted(indeg.items()) if d == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        nid = heapq.heappop(ready)
        order.append(nid)
        for dst in outgoing[nid]:
            indeg[dst] -= 1
            if indeg[dst] == 0:
                heapq.heappush(ready, dst)
    if len(order) != len(indeg):
        # strip nodes with no outgoing edges inside the remainder, repeatedly;
        # whatever survives lies on a cycle
        remainder = {nid for nid in indeg if nid not in set(order)}
        changed = True
        while changed:
            changed = False
            for nid in sorted(remainder):
                if not any(dst in remainder for dst in outgoing[nid]):
                    remainder.discard(nid)
                    changed = True
        raise CppnCycleError(remainder)
    return order


def query(cppn: Cppn, coords: Sequence[float]) -> float:
    """Evaluate the genotype at one coordinate tuple (x1, y1, x2, y2).

    Bias input is fixed to 1.  Incoming contributions are summed in (src id)
    order, making the result bit-stable for equal arguments.
    """
    if len(coords) != 4:
        raise CppnError(f"expected 4 coordinates, got {len(coords)}")
    require_valid_cppn(cppn)
    order = topological_order(cppn)
    incoming: dict[str, list[CppnConnection]] = {}
    for c in cppn.connections:  # stored order is (src, dst): src-sorted per dst
        incoming.setdefault(c.dst, []).append(c)
    values: dict[str, float] = {}
    inputs = dict(zip(INPUT_IDS, (*map(float, coords), 1.0)))
    for nid in order:
        if nid in inputs:
            values[nid] = inputs[nid]
            continue
        z = 0.0
        for c in incoming.get(nid, []):
            z += c.weight * values[c.src]
        values[nid] = apply_function(cppn.node(nid).function, z)
    return values[OUTPUT_ID]


@dataclass(frozen=True)
class MutationConfig:
    p_perturb_genome: float = 0.8
    p_perturb_each: float = 0.1
    sigma_evolved: float = 0.2
    sigma_geometry: float = 0.02
    mutate_sharpness: bool = False
    p_add_connection: float = 0.15
    p_add_node: float = 0.05
    p_change_activation: float = 0.05


def fresh_cppn_node_id(existing, prefix: str = "m") -> str:
    taken = set(existing)
    k = 1
    while f"{prefix}{k}" in taken:
        k += 1
    return f"{prefix}{k}"


def mutate(cppn: Cppn, rng: np.random.Generator, config: MutationConfig) -> Cppn:
    """One mutation pass over the genome; returns a new Cppn.

    Draw protocol (fixed, so a seed fully determines the outcome): one gate
    draw per operator in the order perturb / add_connection / add_node /
    change_activation; inside a gated operator, draws happen in canonical
    element order.  Degenerate situations (no legal pair, no connections, no
    evolved node) consume the gate draw and change nothing.
    """
    nodes = list(cppn.nodes)
    conns = list(cppn.connections)

    if rng.random() < config.p_perturb_genome:
        for i, c in enumerate(conns):
            if c.tag in ("evolved", "orbit_weight"):
                sigma = config.sigma_evolved
            elif c.tag == "geometry":
                sigma = config.sigma_geometry
            else:
                # sharpness is frozen unless explicitly enabled; orbit_link is
                # structural (weight 1) and has no sigma assigned at all
                if c.tag != "sharpness" or not config.mutate_sharpness:
                    continue
                sigma = None
            if rng.random() < config.p_perturb_each:
                g = rng.standard_normal()
                if sigma is None:
                    # sharpness values are large and must stay positive, so
                    # noise is applied multiplicatively
                    w = c.weight * math.exp(config.sigma_geometry * g)
                else:
                    w = c.weight + sigma * g
                conns[i] = replace(c, weight=w)

    if rng.random() < config.p_add_connection:
        pair = _pick_free_pair(nodes, conns, rng)
        if pair is not None:
            w = float(rng.standard_normal())
            conns.append(CppnConnection(pair[0], pair[1], w, "evolved"))

    if rng.random() < config.p_add_node:
        if conns:
            idx = int(rng.integers(len(conns)))
            func = FUNCTIONS[int(rng.integers(len(FUNCTIONS)))]
            old = conns.pop(idx)
            nid = fresh_cppn_node_id(n.id for n in nodes)
            nodes.append(CppnNode(nid, func, "evolved"))
            conns.append(CppnConnection(old.src, nid, 1.0, "evolved"))
            conns.append(CppnConnection(nid, old.dst, old.weight, "evolved"))

    if rng.random() < config.p_change_activation:
        evolved = sorted(n.id for n in nodes if n.tag == "evolved")
        if evolved:
            nid = evolved[int(rng.integers(len(evolved)))]
            func = FUNCTIONS[int(rng.integers(len(FUNCTIONS)))]
            nodes = [
                replace(n, function=func) if n.id == nid else n for n in nodes
            ]

    return Cppn(tuple(nodes), tuple(conns))


_PAIR_ATTEMPTS = 20


def _pick_free_pair(nodes, conns, rng) -> tuple[str, str] | None:
    """Random ordered pair that keeps the graph a simple DAG.

    Rejection sampling with a bounded attempt budget: enumerating every legal
    pair is quadratic in nodes and this sits inside long mutation chains.
    """
    ids = sorted(n.id for n in nodes)
    existing = {(c.src, c.dst) for c in conns}
    outgoing: dict[str, list[str]] = {n.id: [] for n in nodes}
    for c in conns:
        outgoing[c.src].append(c.dst)
    for _ in range(_PAIR_ATTEMPTS):
        src = ids[int(rng.integers(len(ids)))]
        dst = ids[int(rng.integers(len(ids)))]
        if src == dst or dst in INPUT_IDS or (src, dst) in existing:
            continue
        if _has_path(outgoing, dst, src):  # would close a cycle
            continue
        return (src, dst)
    return None


def _has_path(outgoing: dict[str, list[str]], start: str, target: str) -> bool:
    stack = [start]
    seen = {start}
    while stack:
        nid = stack.pop()
        if nid == target:
            return True
        for dst in outgoing[nid]:
            if dst not in seen:
                seen.add(dst)
                stack.append(dst)
    return False


# --- serialization -------------------------------------------------------


def cppn_to_data(cppn: Cppn) -> dict:
    return {
        "schema": CPPN_SCHEMA,
        "nodes": [
            {"id": n.id, "function": n.function, "tag": n.tag} for n in cppn.nodes
        ],
        "connections": [
            {"src": c.src, "dst": c.dst, "weight": c.weight, "tag": c.tag}
            for c in cppn.connections
        ],
    }


def cppn_from_data(data: dict) -> Cppn:
    _expect_keys(data, {"schema", "nodes", "connections"})
    if data["schema"] != CPPN_SCHEMA:
        raise SchemaError(f"expected schema {CPPN_SCHEMA!r}, got {data.get('schema')!r}")
    nodes = []
    for nd in _expect_list(data, "nodes"):
        _expect_keys(nd, {"id", "function", "tag"})
        nodes.append(
            CppnNode(_expect_str(nd, "id"), _expect_str(nd, "function"),
                     _expect_str(nd, "tag"))
        )
    conns = []
    for cd in _expect_list(data, "connections"):
        _expect_keys(cd, {"src", "dst", "weight", "tag"})
        conns.append(
            CppnConnection(_expect_str(cd, "src"), _expect_str(cd, "dst"),
                           _expect_num(cd, "weight"), _expect_str(cd, "tag"))
        )
    cppn = Cppn(tuple(nodes), tuple(conns))
    problems = validate_cppn(cppn)
    if problems:
        raise SchemaError("invalid genotype: " + "; ".join(problems))
    return cppn


def cppn_to_json(cppn: Cppn) -> str:
    return json.dumps(cppn_to_data(cppn), indent=2, sort_keys=True)


def cppn_from_json(text: str) -> Cppn:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not JSON: {e}") from e
    if not isinstance(data, dict):
        raise SchemaError("top level must be an object")
    return cppn_from_data(data)


def empty_cppn() -> Cppn:
    """Inputs and output only, no connections: queries return 0 everywhere."""
    nodes = tuple(CppnNode(i, "linear", "io") for i in INPUT_IDS) + (
        CppnNode(OUTPUT_ID, "linear", "io"),
    )
    return Cppn(nodes, ())
