"""Turn hand-built, regularity-annotated networks into evolvable genotypes.

The construction is a sum of detector bumps.  Every expanded connection gets
four square nodes measuring (coord_j - t_j)^2 and one inv_exp detector whose
output is e^(-s * d^2(query, t)): exactly 1 at the connection's own coordinate
tuple and essentially 0 at every other queryable tuple.  Connections related
by an annotation share one orbit: their detectors feed a common linear sum
node carrying a single mutable weight, so a regularity is one genotype
parameter, not several coincidentally equal ones.

Sharpness is chosen so total off-target response stays below EPS_CROSSTALK at
any queryable tuple, which makes "no spurious connections" arithmetic, not
luck.  The budget is far below the 0.01 expression threshold because shared
orbit weights must also stay argument-exact (perturbing an orbit weight by d
moves every member by d to within d*(orbit-1)*EPS_CROSSTALK/(W_MAX*N_c), and
that must hold to 1e-6 even for two-member orbits in tiny networks).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from .ann import (
    DELTA_MIN,
    WEIGHT_MAX,
    WEIGHT_MIN,
    AddConnection,
    AddNeuron,
    Connection,
    EditError,
    MoveNeuron,
    NetworkEdit,
    NetworkPhenotype,
    Neuron,
    RemoveConnection,
    RemoveNeuron,
    SchemaError,
    SetWeight,
    _expect_keys,
    _expect_list,
    _expect_num,
    _expect_str,
    fresh_neuron_id,
    network_from_data,
    network_to_data,
    require_valid,
)
from .cppn import Cppn, CppnConnection, CppnNode, INPUT_IDS, OUTPUT_ID
from .decode import Substrate, queryable_pairs, substrate_from_phenotype

EPS_CROSSTALK = 1.0e-8
ANET_SCHEMA = "anet/1"
REPORT_SCHEMA = "cppnrpt/1"


class AnnotationError(ValueError):
    pass


class CompileError(ValueError):
    pass


class StaleReportError(ValueError):
    """The report does not describe the genotype it was passed with."""


@dataclass(frozen=True)
class MirrorX:
    members: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "members", _canonical_members(self.members))


@dataclass(frozen=True)
class Repeat:
    members: tuple[tuple[str, str], ...]
    dx: float
    dy: float
    count: int

    def __post_init__(self):
        object.__setattr__(self, "members", _canonical_members(self.members))


Annotation = Union[MirrorX, Repeat]


def _canonical_members(members) -> tuple[tuple[str, str], ...]:
    return tuple(sorted((str(s), str(d)) for s, d in members))


@dataclass(frozen=True)
class AnnotatedNetwork:
    phenotype: NetworkPhenotype
    annotations: tuple[Annotation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "annotations", tuple(self.annotations))


@dataclass(frozen=True)
class Orbit:
    id: str
    keys: tuple[tuple[str, str], ...]
    tuples: tuple[tuple[float, float, float, float], ...]
    weight: float


@dataclass(frozen=True)
class MemberEntry:
    src: str
    dst: str
    coords: tuple[float, float, float, float]
    detector: str
    geometry: tuple[str, str, str, str]

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class OrbitEntry:
    id: str
    sum_node: str
    weight: float
    members: tuple[MemberEntry, ...]


@dataclass(frozen=True)
class CompilationReport:
    sharpness: float
    delta2_min: float
    eps_crosstalk: float
    w_max: float
    substrate: Substrate
    orbits: tuple[OrbitEntry, ...]
    next_conn_index: int
    next_orbit_index: int
    warnings: tuple[str, ...] = ()


def validate_annotated(annotated: AnnotatedNetwork) -> list[str]:
    problems = list(_validate_phenotype_quiet(annotated.phenotype))
    net = annotated.phenotype
    seen: set[tuple[str, str]] = set()
    for i, ann in enumerate(annotated.annotations):
        label = f"annotation {i}"
        if not ann.members:
            problems.append(f"{label}: no members")
        for key in ann.members:
            if not net.has_connection(*key):
                problems.append(f"{label}: member {key[0]}->{key[1]} does not exist")
            if key in seen:
                problems.append(
                    f"{label}: member {key[0]}->{key[1]} already claimed by another annotation"
                )
            seen.add(key)
        if isinstance(ann, MirrorX):
            for key in ann.members:
                if not net.has_connection(*key):
                    continue
                a = net.neuron(key[0])
                b = net.neuron(key[1])
                if a.x == 0.0 and b.x == 0.0:
                    problems.append(
                        f"{label}: member {key[0]}->{key[1]} lies entirely on the "
                        "mirror plane; its orbit would be degenerate"
                    )
        elif isinstance(ann, Repeat):
            if ann.count < 2:
                problems.append(f"{label}: repeat count must be >= 2")
            if ann.dx == 0.0 and ann.dy == 0.0:
                problems.append(f"{label}: repeat offset must be nonzero")
        else:
            problems.append(f"{label}: unknown annotation kind {type(ann).__name__}")
    return problems


def _validate_phenotype_quiet(net: NetworkPhenotype) -> list[str]:
    from .ann import validate

    return validate(net)


def require_valid_annotated(annotated: AnnotatedNetwork) -> None:
    problems = validate_annotated(annotated)
    if problems:
        raise AnnotationError("; ".join(problems))


def _norm(v: float) -> float:
    # keep coordinates free of negative zero so serialized forms stay canonical
    return 0.0 if v == 0.0 else v


def expand_annotations(
    annotated: AnnotatedNetwork,
) -> tuple[NetworkPhenotype, list[Orbit]]:
    """Materialize every annotation and assign each connection to one orbit.

    Mirrored/translated neurons are matched by exact position; a hit with the
    same role is reused, a hit with a different role is an error.  Creating a
    connection that already exists overwrites its weight with the member's
    (the annotation asserts they are equal).  Exact duplicate orbits collapse
    to one; partially overlapping orbits are an error because they would have
    to share weight across distinct annotations.
    """
    require_valid_annotated(annotated)
    net = annotated.phenotype

    neurons: dict[str, Neuron] = {n.id: n for n in net.neurons}
    by_pos: dict[tuple[float, float], str] = {
        (n.x, n.y): n.id for n in net.neurons
    }
    weights: dict[tuple[str, str], float] = {c.key: c.weight for c in net.connections}
    input_order = list(net.input_order)
    output_order = list(net.output_order)

    def ensure_neuron(x: float, y: float, role: str, origin: str) -> str:
        x, y = _norm(x), _norm(y)
        hit = by_pos.get((x, y))
        if hit is not None:
            if neurons[hit].role != role:
                raise AnnotationError(
                    f"{origin}: position ({x}, {y}) is taken by neuron {hit} "
                    f"of role {neurons[hit].role!r}, expected {role!r}"
                )
            return hit
        if not (-1.0 <= x <= 1.0 and -1.0 <= y <= 1.0):
            raise AnnotationError(f"{origin}: position ({x}, {y}) leaves the design plane")
        for n in neurons.values():
            if math.hypot(n.x - x, n.y - y) < DELTA_MIN:
                raise AnnotationError(
                    f"{origin}: position ({x}, {y}) falls within {DELTA_MIN} "
                    f"of unrelated neuron {n.id}"
                )
        nid = _fresh_expansion_id(neurons)
        neurons[nid] = Neuron(nid, role, x, y)
        by_pos[(x, y)] = nid
        if role == "input":
            input_order.append(nid)
        elif role == "output":
            output_order.append(nid)
        return nid

    def ensure_connection(src: str, dst: str, weight: float) -> None:
        weights[(src, dst)] = weight

    raw_orbits: list[tuple[tuple[tuple[str, str], ...], str]] = []

    for i, ann in enumerate(annotated.annotations):
        label = f"annotation {i}"
        for key in ann.members:
            chain: list[tuple[str, str]] = [key]
            if isinstance(ann, MirrorX):
                src, dst = key
                a, b = neurons[src], neurons[dst]
                ms = ensure_neuron(-a.x, a.y, a.role, label)
                md = ensure_neuron(-b.x, b.y, b.role, label)
                ensure_connection(ms, md, weights[key])
                chain.append((ms, md))
            else:
                src, dst = key
                a, b = neurons[src], neurons[dst]
                for k in range(1, ann.count):
                    ks = ensure_neuron(a.x + k * ann.dx, a.y + k * ann.dy, a.role, label)
                    kd = ensure_neuron(b.x + k * ann.dx, b.y + k * ann.dy, b.role, label)
                    ensure_connection(ks, kd, weights[key])
                    chain.append((ks, kd))
            raw_orbits.append((tuple(chain), label))

    # dedupe identical orbits, reject partial overlap
    orbit_keys: list[tuple[tuple[str, str], ...]] = []
    seen_sets: list[frozenset] = []
    claimed: dict[tuple[str, str], int] = {}
    for chain, label in raw_orbits:
        cs = frozenset(chain)
        if cs in seen_sets:
            continue
        for key in chain:
            if key in claimed:
                raise AnnotationError(
                    f"{label}: expansion of {key[0]}->{key[1]} overlaps a different "
                    "orbit; regularities may not partially share connections"
                )
        for key in chain:
            claimed[key] = len(orbit_keys)
        seen_sets.append(cs)
        orbit_keys.append(chain)

    for key in sorted(weights):
        if key not in claimed:
            claimed[key] = len(orbit_keys)
            orbit_keys.append((key,))

    expanded = NetworkPhenotype(
        tuple(neurons.values()),
        tuple(Connection(s, d, w) for (s, d), w in sorted(weights.items())),
        tuple(input_order),
        tuple(output_order),
    )
    require_valid(expanded)

    def coords_of(key: tuple[str, str]) -> tuple[float, float, float, float]:
        a, b = neurons[key[0]], neurons[key[1]]
        return (a.x, a.y, b.x, b.y)

    orbits = [
        Orbit(
            id=f"orb{i}",
            keys=chain,
            tuples=tuple(coords_of(k) for k in chain),
            weight=weights[chain[0]],
        )
        for i, chain in enumerate(orbit_keys)
    ]
    return expanded, orbits


def _fresh_expansion_id(neurons: dict) -> str:
    k = 1
    while f"e{k}" in neurons:
        k += 1
    return f"e{k}"


def required_sharpness(n_conns: int, delta2_min: float,
                       w_max: float = WEIGHT_MAX, eps: float = EPS_CROSSTALK) -> float:
    return math.log(w_max * max(n_conns, 1) / eps) / delta2_min


def min_tuple_separation(substrate: Substrate) -> float:
    """Minimum squared 4-space distance over all distinct queryable tuples.

    This is the radius the detector bumps must not reach across.  Neuron
    separation >= DELTA_MIN guarantees a floor of DELTA_MIN^2, which also
    serves as the fallback when fewer than two tuples exist.
    """
    pairs = queryable_pairs(substrate)
    if len(pairs) < 2:
        return DELTA_MIN * DELTA_MIN
    by_id = {n.id: n for n in substrate.neurons}
    coords = np.empty((len(pairs), 4), dtype=np.float64)
    for i, (src, dst) in enumerate(pairs):
        a, b = by_id[src], by_id[dst]
        coords[i] = (a.x, a.y, b.x, b.y)
    best = math.inf
    for i in range(len(pairs) - 1):
        diff = coords[i + 1 :] - coords[i]
        d2 = float(np.min(np.einsum("ij,ij->i", diff, diff)))
        if d2 < best:
            best = d2
    if best <= 0.0:
        raise CompileError("duplicate queryable tuples in the substrate")
    return best


def compile_network(annotated: AnnotatedNetwork) -> tuple[Cppn, CompilationReport]:
    """Compile an annotated phenotype into a genotype that decodes back to it."""
    expanded, orbits = expand_annotations(annotated)
    substrate = substrate_from_phenotype(expanded)
    warnings: list[str] = []

    delta2 = min_tuple_separation(substrate)
    n_conns = len(expanded.connections)
    if n_conns == 0:
        warnings.append("empty connection set: compiled genotype is constant zero")
    sharpness = required_sharpness(n_conns, delta2)

    nodes: list[CppnNode] = [CppnNode(i, "linear", "io") for i in INPUT_IDS]
    nodes.append(CppnNode(OUTPUT_ID, "linear", "io"))
    conns: list[CppnConnection] = []
    entries: list[OrbitEntry] = []

    conn_index = 0
    for orbit_index, orbit in enumerate(orbits):
        sum_id = f"s{orbit_index}"
        nodes.append(CppnNode(sum_id, "linear", "orbit_sum"))
        members: list[MemberEntry] = []
        for key, coords in zip(orbit.keys, orbit.tuples):
            geometry, detector = _build_detector(
                nodes, conns, conn_index, coords, sharpness
            )
            conns.append(CppnConnection(detector, sum_id, 1.0, "orbit_link"))
            members.append(
                MemberEntry(key[0], key[1], coords, detector, geometry)
            )
            conn_index += 1
        conns.append(CppnConnection(sum_id, OUTPUT_ID, orbit.weight, "orbit_weight"))
        entries.append(OrbitEntry(orbit.id, sum_id, orbit.weight, tuple(members)))

    report = CompilationReport(
        sharpness=sharpness,
        delta2_min=delta2,
        eps_crosstalk=EPS_CROSSTALK,
        w_max=WEIGHT_MAX,
        substrate=substrate,
        orbits=tuple(entries),
        next_conn_index=conn_index,
        next_orbit_index=len(orbits),
        warnings=tuple(warnings),
    )
    return Cppn(tuple(nodes), tuple(conns)), report


def _build_detector(nodes, conns, conn_index, coords, sharpness):
    """Append one detector assembly; returns (geometry ids, detector id)."""
    geometry = tuple(f"g{conn_index}_{j}" for j in range(4))
    detector = f"d{conn_index}"
    for j in range(4):
        nodes.append(CppnNode(geometry[j], "square", "geometry"))
        conns.append(CppnConnection(INPUT_IDS[j], geometry[j], 1.0, "geometry"))
        conns.append(
            CppnConnection(INPUT_IDS[4], geometry[j], _norm(-coords[j]), "geometry")
        )
    nodes.append(CppnNode(detector, "inv_exp", "sharpness_target"))
    for j in range(4):
        conns.append(CppnConnection(geometry[j], detector, sharpness, "sharpness"))
    return geometry, detector


# --- edit surgery ---------------------------------------------------------


def verify_report(cppn: Cppn, report: CompilationReport) -> None:
    """Raise StaleReportError unless the report exactly describes the genotype."""
    _check_report(cppn, report)


def _check_report(cppn: Cppn, report: CompilationReport) -> None:
    """Verify the report describes exactly this genotype, else StaleReportError."""
    expect_nodes: dict[str, tuple[str, str]] = {}
    for iid in INPUT_IDS:
        expect_nodes[iid] = ("linear", "io")
    expect_nodes[OUTPUT_ID] = ("linear", "io")
    expect_conns: dict[tuple[str, str], tuple[float, str]] = {}
    sub_ids = {n.id for n in report.substrate.neurons}
    by_id = {n.id: n for n in report.substrate.neurons}
    for entry in report.orbits:
        expect_nodes[entry.sum_node] = ("linear", "orbit_sum")
        expect_conns[(entry.sum_node, OUTPUT_ID)] = (entry.weight, "orbit_weight")
        for m in entry.members:
            if m.src not in sub_ids or m.dst not in sub_ids:
                raise StaleReportError(
                    f"orbit member {m.src}->{m.dst} references a neuron "
                    "missing from the substrate"
                )
            a, b = by_id[m.src], by_id[m.dst]
            if (a.x, a.y, b.x, b.y) != m.coords:
                raise StaleReportError(
                    f"orbit member {m.src}->{m.dst} coordinates disagree "
                    "with the substrate"
                )
            expect_nodes[m.detector] = ("inv_exp", "sharpness_target")
            expect_conns[(m.detector, entry.sum_node)] = (1.0, "orbit_link")
            for j in range(4):
                g = m.geometry[j]
                expect_nodes[g] = ("square", "geometry")
                expect_conns[(INPUT_IDS[j], g)] = (1.0, "geometry")
                expect_conns[(INPUT_IDS[4], g)] = (_norm(-m.coords[j]), "geometry")
                expect_conns[(g, m.detector)] = (report.sharpness, "sharpness")

    actual_nodes = {n.id: (n.function, n.tag) for n in cppn.nodes}
    if actual_nodes != expect_nodes:
        raise StaleReportError("genotype node set disagrees with the report")
    actual_conns = {c.key: (c.weight, c.tag) for c in cppn.connections}
    if actual_conns != expect_conns:
        raise StaleReportError("genotype connection set disagrees with the report")


class _Surgery:
    """Mutable working state for one recompile_edit call."""

    def __init__(self, cppn: Cppn, report: CompilationReport):
        self.nodes = {n.id: n for n in cppn.nodes}
        self.conns = {c.key: c for c in cppn.connections}
        self.neurons = {n.id: n for n in report.substrate.neurons}
        self.input_order = list(report.substrate.input_order)
        self.output_order = list(report.substrate.output_order)
        self.entries = [e for e in report.orbits]
        self.sharpness = report.sharpness
        self.delta2 = report.delta2_min
        self.eps = report.eps_crosstalk
        self.w_max = report.w_max
        self.next_conn = report.next_conn_index
        self.next_orbit = report.next_orbit_index
        self.warnings = report.warnings

    # -- helpers

    def substrate(self) -> Substrate:
        return Substrate(
            tuple(self.neurons.values()),
            tuple(self.input_order),
            tuple(self.output_order),
        )

    def member_count(self) -> int:
        return sum(len(e.members) for e in self.entries)

    def find_member(self, key):
        for ei, entry in enumerate(self.entries):
            for mi, m in enumerate(entry.members):
                if m.key == key:
                    return ei, mi
        return None

    def add_assembly(self, coords, weight, key) -> None:
        geometry = tuple(f"g{self.next_conn}_{j}" for j in range(4))
        detector = f"d{self.next_conn}"
        sum_id = f"s{self.next_orbit}"
        for nid in (*geometry, detector, sum_id):
            if nid in self.nodes:
                raise StaleReportError(f"fresh node id {nid} already in use")
        for j in range(4):
            self.nodes[geometry[j]] = CppnNode(geometry[j], "square", "geometry")
            self.conns[(INPUT_IDS[j], geometry[j])] = CppnConnection(
                INPUT_IDS[j], geometry[j], 1.0, "geometry"
            )
            self.conns[(INPUT_IDS[4], geometry[j])] = CppnConnection(
                INPUT_IDS[4], geometry[j], _norm(-coords[j]), "geometry"
            )
        self.nodes[detector] = CppnNode(detector, "inv_exp", "sharpness_target")
        for j in range(4):
            self.conns[(geometry[j], detector)] = CppnConnection(
                geometry[j], detector, self.sharpness, "sharpness"
            )
        self.nodes[sum_id] = CppnNode(sum_id, "linear", "orbit_sum")
        self.conns[(detector, sum_id)] = CppnConnection(
            detector, sum_id, 1.0, "orbit_link"
        )
        self.conns[(sum_id, OUTPUT_ID)] = CppnConnection(
            sum_id, OUTPUT_ID, weight, "orbit_weight"
        )
        member = MemberEntry(key[0], key[1], coords, detector, geometry)
        self.entries.append(
            OrbitEntry(f"orb{self.next_orbit}", sum_id, weight, (member,))
        )
        self.next_conn += 1
        self.next_orbit += 1

    def remove_member(self, ei: int, mi: int) -> None:
        entry = self.entries[ei]
        m = entry.members[mi]
        for j in range(4):
            g = m.geometry[j]
            del self.conns[(INPUT_IDS[j], g)]
            del self.conns[(INPUT_IDS[4], g)]
            del self.conns[(g, m.detector)]
            del self.nodes[g]
        del self.conns[(m.detector, entry.sum_node)]
        del self.nodes[m.detector]
        members = entry.members[:mi] + entry.members[mi + 1 :]
        if members:
            self.entries[ei] = replace(entry, members=members)
        else:
            del self.conns[(entry.sum_node, OUTPUT_ID)]
            del self.nodes[entry.sum_node]
            del self.entries[ei]

    def rewrite_sharpness(self, new_s: float) -> None:
        for entry in self.entries:
            for m in entry.members:
                for g in m.geometry:
                    self.conns[(g, m.detector)] = CppnConnection(
                        g, m.detector, new_s, "sharpness"
                    )
        self.sharpness = new_s

    def refresh_separation(self) -> None:
        """Recompute the tuple separation; raise sharpness if it shrank."""
        d2 = min_tuple_separation(self.substrate())
        self.delta2 = d2
        s_req = required_sharpness(self.member_count(), d2, self.w_max, self.eps)
        if s_req > self.sharpness:
            self.rewrite_sharpness(s_req)

    def check_position(self, x: float, y: float, ignore: str | None) -> None:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise EditError("position must be finite")
        if not (-1.0 <= x <= 1.0 and -1.0 <= y <= 1.0):
            raise EditError(f"position ({x}, {y}) outside the design plane")
        for n in self.neurons.values():
            if n.id == ignore:
                continue
            if math.hypot(n.x - x, n.y - y) < DELTA_MIN:
                raise EditError(f"position ({x}, {y}) is within {DELTA_MIN} of {n.id}")

    def finish(self) -> tuple[Cppn, CompilationReport]:
        cppn = Cppn(tuple(self.nodes.values()), tuple(self.conns.values()))
        report = CompilationReport(
            sharpness=self.sharpness,
            delta2_min=self.delta2,
            eps_crosstalk=self.eps,
            w_max=self.w_max,
            substrate=self.substrate(),
            orbits=tuple(self.entries),
            next_conn_index=self.next_conn,
            next_orbit_index=self.next_orbit,
            warnings=self.warnings,
        )
        return cppn, report


def recompile_edit(
    cppn: Cppn, report: CompilationReport, edit: NetworkEdit
) -> tuple[Cppn, CompilationReport]:
    """Apply one phenotype edit directly to the genotype.

    The result decodes to exactly what apply_edit would produce on the decoded
    phenotype.  Deterministic surgery; inputs are never modified.
    """
    _check_report(cppn, report)
    s = _Surgery(cppn, report)

    if isinstance(edit, AddConnection):
        for end in (edit.src, edit.dst):
            if end not in s.neurons:
                raise EditError(f"unknown neuron {end!r}")
        if s.neurons[edit.dst].role in ("input", "bias"):
            raise EditError(
                f"cannot connect into {edit.dst} "
                f"(role {s.neurons[edit.dst].role!r})"
            )
        if s.find_member((edit.src, edit.dst)) is not None:
            raise EditError(f"connection {edit.src}->{edit.dst} already exists")
        _check_band(edit.weight)
        a, b = s.neurons[edit.src], s.neurons[edit.dst]
        s.add_assembly((a.x, a.y, b.x, b.y), edit.weight, (edit.src, edit.dst))
    elif isinstance(edit, RemoveConnection):
        hit = s.find_member((edit.src, edit.dst))
        if hit is None:
            raise EditError(f"no connection {edit.src}->{edit.dst}")
        s.remove_member(*hit)
    elif isinstance(edit, SetWeight):
        hit = s.find_member((edit.src, edit.dst))
        if hit is None:
            raise EditError(f"no connection {edit.src}->{edit.dst}")
        _check_band(edit.weight)
        ei, mi = hit
        entry = s.entries[ei]
        if len(entry.members) == 1:
            s.conns[(entry.sum_node, OUTPUT_ID)] = CppnConnection(
                entry.sum_node, OUTPUT_ID, edit.weight, "orbit_weight"
            )
            s.entries[ei] = replace(entry, weight=edit.weight)
        else:
            # user explicitly broke the regularity: split into a fresh orbit
            m = entry.members[mi]
            del s.conns[(m.detector, entry.sum_node)]
            s.entries[ei] = replace(
                entry, members=entry.members[:mi] + entry.members[mi + 1 :]
            )
            sum_id = f"s{s.next_orbit}"
            if sum_id in s.nodes:
                raise StaleReportError(f"fresh node id {sum_id} already in use")
            s.nodes[sum_id] = CppnNode(sum_id, "linear", "orbit_sum")
            s.conns[(m.detector, sum_id)] = CppnConnection(
                m.detector, sum_id, 1.0, "orbit_link"
            )
            s.conns[(sum_id, OUTPUT_ID)] = CppnConnection(
                sum_id, OUTPUT_ID, edit.weight, "orbit_weight"
            )
            s.entries.append(
                OrbitEntry(f"orb{s.next_orbit}", sum_id, edit.weight, (m,))
            )
            s.next_orbit += 1
    elif isinstance(edit, MoveNeuron):
        if edit.neuron_id not in s.neurons:
            raise EditError(f"unknown neuron {edit.neuron_id!r}")
        s.check_position(edit.x, edit.y, ignore=edit.neuron_id)
        old = s.neurons[edit.neuron_id]
        s.neurons[edit.neuron_id] = Neuron(old.id, old.role, edit.x, edit.y)
        for ei, entry in enumerate(s.entries):
            members = list(entry.members)
            entry_touched = False
            for mi, m in enumerate(members):
                coords = list(m.coords)
                touched = False
                if m.src == edit.neuron_id:
                    coords[0], coords[1] = edit.x, edit.y
                    _set_bias(s, m.geometry[0], -edit.x)
                    _set_bias(s, m.geometry[1], -edit.y)
                    touched = True
                if m.dst == edit.neuron_id:
                    coords[2], coords[3] = edit.x, edit.y
                    _set_bias(s, m.geometry[2], -edit.x)
                    _set_bias(s, m.geometry[3], -edit.y)
                    touched = True
                if touched:
                    members[mi] = replace(m, coords=tuple(coords))
                    entry_touched = True
            if entry_touched:
                s.entries[ei] = replace(entry, members=tuple(members))
        s.refresh_separation()
    elif isinstance(edit, AddNeuron):
        if edit.role not in ("input", "bias", "hidden", "output"):
            raise EditError(f"unknown role {edit.role!r}")
        if edit.role == "bias" and any(
            n.role == "bias" for n in s.neurons.values()
        ):
            raise EditError("network already has a bias neuron")
        s.check_position(edit.x, edit.y, ignore=None)
        nid = fresh_neuron_id(s.neurons)
        s.neurons[nid] = Neuron(nid, edit.role, edit.x, edit.y)
        if edit.role == "input":
            s.input_order.append(nid)
        elif edit.role == "output":
            s.output_order.append(nid)
        # a new neuron adds queryable tuples: the detectors must not be wide
        # enough to reach them, so sharpness may have to rise
        s.refresh_separation()
    elif isinstance(edit, RemoveNeuron):
        if edit.neuron_id not in s.neurons:
            raise EditError(f"unknown neuron {edit.neuron_id!r}")
        if s.neurons[edit.neuron_id].role != "hidden":
            raise EditError(
                f"neuron {edit.neuron_id} has role "
                f"{s.neurons[edit.neuron_id].role!r}; only hidden neurons can be removed"
            )
        doomed = []
        for ei, entry in enumerate(s.entries):
            for mi, m in enumerate(entry.members):
                if edit.neuron_id in (m.src, m.dst):
                    doomed.append((ei, mi))
        for ei, mi in sorted(doomed, reverse=True):
            s.remove_member(ei, mi)
        del s.neurons[edit.neuron_id]
        s.delta2 = min_tuple_separation(s.substrate())
    else:
        raise EditError(f"unknown edit {edit!r}")

    return s.finish()


def _set_bias(s: _Surgery, geometry_id: str, weight: float) -> None:
    s.conns[(INPUT_IDS[4], geometry_id)] = CppnConnection(
        INPUT_IDS[4], geometry_id, _norm(weight), "geometry"
    )


def _check_band(w: float) -> None:
    if not math.isfinite(w) or not (WEIGHT_MIN <= abs(w) <= WEIGHT_MAX):
        raise EditError(
            f"|weight| must lie in [{WEIGHT_MIN}, {WEIGHT_MAX}], got {w}"
        )


# --- serialization -------------------------------------------------------


def annotation_to_data(ann: Annotation) -> dict:
    members = [[s, d] for s, d in ann.members]
    if isinstance(ann, MirrorX):
        return {"kind": "mirror_x", "params": {}, "members": members}
    if isinstance(ann, Repeat):
        return {
            "kind": "repeat",
            "params": {"dx": ann.dx, "dy": ann.dy, "count": ann.count},
            "members": members,
        }
    raise ValueError(f"unknown annotation {ann!r}")


def annotation_from_data(data: dict) -> Annotation:
    _expect_keys(data, {"kind", "params", "members"})
    kind = data["kind"]
    params = data["params"]
    if not isinstance(params, dict):
        raise SchemaError("params must be an object")
    members = []
    for pair in _expect_list(data, "members"):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(p, str) for p in pair)
        ):
            raise SchemaError("members must be [src, dst] string pairs")
        members.append((pair[0], pair[1]))
    if kind == "mirror_x":
        if params:
            raise SchemaError("mirror_x takes no params")
        return MirrorX(tuple(members))
    if kind == "repeat":
        _expect_keys(params, {"dx", "dy", "count"})
        count = params["count"]
        if isinstance(count, bool) or not isinstance(count, int):
            raise SchemaError("count must be an integer")
        return Repeat(
            tuple(members),
            _expect_num(params, "dx"),
            _expect_num(params, "dy"),
            count,
        )
    raise SchemaError(f"unknown annotation kind {kind!r}")


def anet_to_data(annotated: AnnotatedNetwork) -> dict:
    data = network_to_data(annotated.phenotype)
    data["schema"] = ANET_SCHEMA
    data["annotations"] = [annotation_to_data(a) for a in annotated.annotations]
    return data


def anet_from_data(data: dict) -> AnnotatedNetwork:
    _expect_keys(
        data,
        {"schema", "neurons", "connections", "input_order", "output_order", "annotations"},
    )
    if data["schema"] != ANET_SCHEMA:
        raise SchemaError(f"expected schema {ANET_SCHEMA!r}, got {data.get('schema')!r}")
    net_data = {k: v for k, v in data.items() if k != "annotations"}
    net_data["schema"] = "net/1"
    phenotype = network_from_data(net_data)
    annotations = tuple(
        annotation_from_data(a) for a in _expect_list(data, "annotations")
    )
    annotated = AnnotatedNetwork(phenotype, annotations)
    problems = validate_annotated(annotated)
    if problems:
        raise SchemaError("invalid annotated network: " + "; ".join(problems))
    return annotated


def anet_to_json(annotated: AnnotatedNetwork) -> str:
    return json.dumps(anet_to_data(annotated), indent=2, sort_keys=True)


def anet_from_json(text: str) -> AnnotatedNetwork:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not JSON: {e}") from e
    if not isinstance(data, dict):
        raise SchemaError("top level must be an object")
    return anet_from_data(data)


def report_to_data(report: CompilationReport) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "sharpness": report.sharpness,
        "delta2_min": report.delta2_min,
        "eps_crosstalk": report.eps_crosstalk,
        "w_max": report.w_max,
        "substrate": {
            "neurons": [
                {"id": n.id, "role": n.role, "x": n.x, "y": n.y}
                for n in report.substrate.neurons
            ],
            "input_order": list(report.substrate.input_order),
            "output_order": list(report.substrate.output_order),
        },
        "orbits": [
            {
                "id": e.id,
                "sum_node": e.sum_node,
                "weight": e.weight,
                "members": [
                    {
                        "src": m.src,
                        "dst": m.dst,
                        "coords": list(m.coords),
                        "detector": m.detector,
                        "geometry": list(m.geometry),
                    }
                    for m in e.members
                ],
            }
            for e in report.orbits
        ],
        "next_conn_index": report.next_conn_index,
        "next_orbit_index": report.next_orbit_index,
        "warnings": list(report.warnings),
    }


def report_from_data(data: dict) -> CompilationReport:
    _expect_keys(
        data,
        {
            "schema",
            "sharpness",
            "delta2_min",
            "eps_crosstalk",
            "w_max",
            "substrate",
            "orbits",
            "next_conn_index",
            "next_orbit_index",
            "warnings",
        },
    )
    if data["schema"] != REPORT_SCHEMA:
        raise SchemaError(
            f"expected schema {REPORT_SCHEMA!r}, got {data.get('schema')!r}"
        )
    sub = data["substrate"]
    _expect_keys(sub, {"neurons", "input_order", "output_order"})
    neurons = []
    for nd in _expect_list(sub, "neurons"):
        _expect_keys(nd, {"id", "role", "x", "y"})
        neurons.append(
            Neuron(
                _expect_str(nd, "id"),
                _expect_str(nd, "role"),
                _expect_num(nd, "x"),
                _expect_num(nd, "y"),
            )
        )
    substrate = Substrate(
        tuple(neurons),
        tuple(str(x) for x in _expect_list(sub, "input_order")),
        tuple(str(x) for x in _expect_list(sub, "output_order")),
    )
    entries = []
    for ed in _expect_list(data, "orbits"):
        _expect_keys(ed, {"id", "sum_node", "weight", "members"})
        members = []
        for md in _expect_list(ed, "members"):
            _expect_keys(md, {"src", "dst", "coords", "detector", "geometry"})
            coords = md["coords"]
            geometry = md["geometry"]
            if not (isinstance(coords, list) and len(coords) == 4):
                raise SchemaError("member coords must have 4 entries")
            if not (isinstance(geometry, list) and len(geometry) == 4):
                raise SchemaError("member geometry must list 4 node ids")
            members.append(
                MemberEntry(
                    _expect_str(md, "src"),
                    _expect_str(md, "dst"),
                    tuple(float(c) for c in coords),
                    _expect_str(md, "detector"),
                    tuple(str(g) for g in geometry),
                )
            )
        entries.append(
            OrbitEntry(
                _expect_str(ed, "id"),
                _expect_str(ed, "sum_node"),
                _expect_num(ed, "weight"),
                tuple(members),
            )
        )
    warnings = data["warnings"]
    if not isinstance(warnings, list):
        raise SchemaError("warnings must be a list")
    nci = data["next_conn_index"]
    noi = data["next_orbit_index"]
    for v in (nci, noi):
        if isinstance(v, bool) or not isinstance(v, int):
            raise SchemaError("orbit/connection counters must be integers")
    return CompilationReport(
        sharpness=_expect_num(data, "sharpness"),
        delta2_min=_expect_num(data, "delta2_min"),
        eps_crosstalk=_expect_num(data, "eps_crosstalk"),
        w_max=_expect_num(data, "w_max"),
        substrate=substrate,
        orbits=tuple(entries),
        next_conn_index=nci,
        next_orbit_index=noi,
        warnings=tuple(str(w) for w in warnings),
    )


def report_to_json(report: CompilationReport) -> str:
    return json.dumps(report_to_data(report), indent=2, sort_keys=True)


def report_from_json(text: str) -> CompilationReport:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not JSON: {e}") from e
    if not isinstance(data, dict):
        raise SchemaError("top level must be an object")
    return report_from_data(data)


def roundtrip_errors(
    annotated: AnnotatedNetwork, cppn: Cppn, tolerance: float = 1.0e-3
) -> list[str]:
    """Compare decode(cppn) against the expanded phenotype; [] when they agree.

    Checks the connection key sets both ways (missing / spurious) and the
    per-weight error against `tolerance`.
    """
    from .decode import decode

    expanded, _ = expand_annotations(annotated)
    decoded = decode(cppn, substrate_from_phenotype(expanded))
    want = {c.key: c.weight for c in expanded.connections}
    got = {c.key: c.weight for c in decoded.connections}
    problems = []
    for key in sorted(set(want) - set(got)):
        problems.append(f"missing connection {key[0]}->{key[1]}")
    for key in sorted(set(got) - set(want)):
        problems.append(f"spurious connection {key[0]}->{key[1]}")
    for key in sorted(set(want) & set(got)):
        err = abs(want[key] - got[key])
        if err > tolerance:
            problems.append(
                f"connection {key[0]}->{key[1]} weight off by {err:.2e}"
            )
    return problems
