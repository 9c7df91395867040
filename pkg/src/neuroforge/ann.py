"""Editable, simulatable neural networks embedded in the unit design plane.

Every neuron carries an (x, y) position in [-1, 1]^2 because connection
geometry is what the genotype encoding keys on.  Phenotypes are immutable
values: edits return a new network and never touch the input.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

DELTA_MIN = 0.05   # minimum Euclidean separation between any two neurons
WEIGHT_MAX = 3.0   # weight magnitude cap
WEIGHT_MIN = 0.05  # smallest expressible non-zero weight magnitude

ROLES = ("input", "bias", "hidden", "output")

NET_SCHEMA = "net/1"

_ID_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class InvalidNetworkError(ValueError):
    """Raised when an operation requires a valid network and got an invalid one."""


class EditError(ValueError):
    """Raised by apply_edit when the edit cannot be applied."""


class SchemaError(ValueError):
    """Raised when serialized data does not conform to its schema."""


@dataclass(frozen=True)
class Neuron:
    id: str
    role: str
    x: float
    y: float

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Connection:
    src: str
    dst: str
    weight: float

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class NetworkPhenotype:
    """A spatially embedded network plus the i/o ordering used at runtime.

    Neurons are stored sorted by id and connections by (src, dst); the
    constructor normalizes whatever order the caller supplies so equal
    networks compare equal.
    """

    neurons: tuple[Neuron, ...]
    connections: tuple[Connection, ...]
    input_order: tuple[str, ...]
    output_order: tuple[str, ...]
    _by_id: Mapping[str, Neuron] = field(
        init=False, repr=False, compare=False, hash=False, default=None
    )
    _by_key: Mapping[tuple[str, str], Connection] = field(
        init=False, repr=False, compare=False, hash=False, default=None
    )

    def __post_init__(self):
        neurons = tuple(sorted(self.neurons, key=lambda n: n.id))
        conns = tuple(sorted(self.connections, key=lambda c: (c.src, c.dst)))
        object.__setattr__(self, "neurons", neurons)
        object.__setattr__(self, "connections", conns)
        object.__setattr__(self, "input_order", tuple(self.input_order))
        object.__setattr__(self, "output_order", tuple(self.output_order))
        object.__setattr__(self, "_by_id", {n.id: n for n in neurons})
        object.__setattr__(self, "_by_key", {c.key: c for c in conns})

    def neuron(self, neuron_id: str) -> Neuron:
        return self._by_id[neuron_id]

    def has_neuron(self, neuron_id: str) -> bool:
        return neuron_id in self._by_id

    def connection(self, src: str, dst: str) -> Connection:
        return self._by_key[(src, dst)]

    def has_connection(self, src: str, dst: str) -> bool:
        return (src, dst) in self._by_key

    def neurons_of_role(self, role: str) -> tuple[Neuron, ...]:
        return tuple(n for n in self.neurons if n.role == role)


# --- edits ---------------------------------------------------------------


@dataclass(frozen=True)
class AddNeuron:
    role: str
    x: float
    y: float


@dataclass(frozen=True)
class RemoveNeuron:
    neuron_id: str


@dataclass(frozen=True)
class MoveNeuron:
    neuron_id: str
    x: float
    y: float


@dataclass(frozen=True)
class AddConnection:
    src: str
    dst: str
    weight: float


@dataclass(frozen=True)
class RemoveConnection:
    src: str
    dst: str


@dataclass(frozen=True)
class SetWeight:
    src: str
    dst: str
    weight: float


NetworkEdit = Union[
    AddNeuron, RemoveNeuron, MoveNeuron, AddConnection, RemoveConnection, SetWeight
]

_EDIT_KINDS = {
    "add_neuron": AddNeuron,
    "remove_neuron": RemoveNeuron,
    "move_neuron": MoveNeuron,
    "add_connection": AddConnection,
    "remove_connection": RemoveConnection,
    "set_weight": SetWeight,
}


def fresh_neuron_id(existing: Iterable[str]) -> str:
    """Smallest n{k} not already taken; shared by every code path that mints ids."""
    taken = set(existing)
    k = 1
    while f"n{k}" in taken:
        k += 1
    return f"n{k}"


def validate(net: NetworkPhenotype) -> list[str]:
    """Return a list of human-readable problems; empty means the network is valid."""
    problems: list[str] = []
    seen_ids: set[str] = set()
    for n in net.neurons:
        if not _ID_RE.match(n.id):
            problems.append(f"neuron id {n.id!r} is not an identifier")
        if n.id in seen_ids:
            problems.append(f"duplicate neuron id {n.id!r}")
        seen_ids.add(n.id)
        if n.role not in ROLES:
            problems.append(f"neuron {n.id}: unknown role {n.role!r}")
        if not (math.isfinite(n.x) and math.isfinite(n.y)):
            problems.append(f"neuron {n.id}: non-finite position")
        elif not (-1.0 <= n.x <= 1.0 and -1.0 <= n.y <= 1.0):
            problems.append(f"neuron {n.id}: position ({n.x}, {n.y}) outside the design plane")

    for i, a in enumerate(net.neurons):
        for b in net.neurons[i + 1 :]:
            d = math.hypot(a.x - b.x, a.y - b.y)
            if d < DELTA_MIN:
                problems.append(
                    f"neurons {a.id} and {b.id} are {d:.4f} apart (minimum {DELTA_MIN})"
                )

    bias = [n for n in net.neurons if n.role == "bias"]
    if len(bias) > 1:
        problems.append(f"{len(bias)} bias neurons; at most one allowed")

    seen_keys: set[tuple[str, str]] = set()
    for c in net.connections:
        if c.key in seen_keys:
            problems.append(f"duplicate connection {c.src}->{c.dst}")
        seen_keys.add(c.key)
        for end in (c.src, c.dst):
            if end not in net._by_id:
                problems.append(f"connection {c.src}->{c.dst}: unknown neuron {end!r}")
        if c.dst in net._by_id and net.neuron(c.dst).role in ("input", "bias"):
            problems.append(
                f"connection {c.src}->{c.dst}: destination role "
                f"{net.neuron(c.dst).role!r} cannot receive connections"
            )
        if not math.isfinite(c.weight):
            problems.append(f"connection {c.src}->{c.dst}: non-finite weight")
        elif not (WEIGHT_MIN <= abs(c.weight) <= WEIGHT_MAX):
            problems.append(
                f"connection {c.src}->{c.dst}: |weight| {abs(c.weight):.4f} outside "
                f"[{WEIGHT_MIN}, {WEIGHT_MAX}]"
            )

    inputs = {n.id for n in net.neurons if n.role == "input"}
    outputs = {n.id for n in net.neurons if n.role == "output"}
    if set(net.input_order) != inputs or len(net.input_order) != len(inputs):
        problems.append("input_order does not list every input neuron exactly once")
    if set(net.output_order) != outputs or len(net.output_order) != len(outputs):
        problems.append("output_order does not list every output neuron exactly once")
    return problems


def require_valid(net: NetworkPhenotype) -> None:
    problems = validate(net)
    if problems:
        raise InvalidNetworkError("; ".join(problems))


def activate(
    net: NetworkPhenotype, inputs: Sequence[float], steps: int = 1
) -> list[float]:
    """Run `steps` synchronous updates from zero activations; return outputs.

    Inputs and the bias are clamped sources.  Hidden and output neurons all
    update simultaneously from the previous step's activations, through tanh.
    Recurrent connections (including self-loops) are permitted and simply read
    the previous step's value.
    """
    require_valid(net)
    if len(inputs) != len(net.input_order):
        raise ValueError(
            f"expected {len(net.input_order)} inputs, got {len(inputs)}"
        )
    if steps < 1:
        raise ValueError("steps must be >= 1")

    order, index = _runtime_order(net)
    acts = [0.0] * len(order)
    for i, nid in enumerate(net.input_order):
        acts[index[nid]] = float(inputs[i])
    for n in net.neurons:
        if n.role == "bias":
            acts[index[n.id]] = 1.0

    # contributions accumulate in (dst index, src index) order; the compiled
    # episode loop uses the same order, keeping both paths bit-identical
    incoming: dict[int, list[tuple[int, float]]] = {}
    for dst_i, src_i, w in sorted(
        (index[c.dst], index[c.src], c.weight) for c in net.connections
    ):
        incoming.setdefault(dst_i, []).append((src_i, w))

    update = [
        index[n.id] for n in net.neurons if n.role in ("hidden", "output")
    ]
    update.sort()
    for _ in range(steps):
        new = list(acts)
        for j in update:
            z = 0.0
            for src_i, w in incoming.get(j, []):
                z += w * acts[src_i]
            new[j] = math.tanh(z)
        acts = new
    return [acts[index[nid]] for nid in net.output_order]


def _runtime_order(net: NetworkPhenotype) -> tuple[list[str], dict[str, int]]:
    """Canonical runtime indexing: inputs (in order), bias, hidden, outputs (in order)."""
    order = list(net.input_order)
    order += [n.id for n in net.neurons if n.role == "bias"]
    order += [n.id for n in net.neurons if n.role == "hidden"]
    order += list(net.output_order)
    return order, {nid: i for i, nid in enumerate(order)}


def apply_edit(net: NetworkPhenotype, edit: NetworkEdit) -> NetworkPhenotype:
    """Apply one edit, returning a new network; raises EditError on any violation."""
    if isinstance(edit, AddNeuron):
        if edit.role not in ROLES:
            raise EditError(f"unknown role {edit.role!r}")
        if edit.role == "bias" and any(n.role == "bias" for n in net.neurons):
            raise EditError("network already has a bias neuron")
        _check_position(net, edit.x, edit.y, ignore=None)
        nid = fresh_neuron_id(n.id for n in net.neurons)
        neurons = net.neurons + (Neuron(nid, edit.role, edit.x, edit.y),)
        input_order = net.input_order + ((nid,) if edit.role == "input" else ())
        output_order = net.output_order + ((nid,) if edit.role == "output" else ())
        out = NetworkPhenotype(neurons, net.connections, input_order, output_order)
    elif isinstance(edit, RemoveNeuron):
        if not net.has_neuron(edit.neuron_id):
            raise EditError(f"unknown neuron {edit.neuron_id!r}")
        if net.neuron(edit.neuron_id).role != "hidden":
            raise EditError(
                f"neuron {edit.neuron_id} has role "
                f"{net.neuron(edit.neuron_id).role!r}; only hidden neurons can be removed"
            )
        neurons = tuple(n for n in net.neurons if n.id != edit.neuron_id)
        conns = tuple(
            c for c in net.connections if edit.neuron_id not in (c.src, c.dst)
        )
        out = NetworkPhenotype(neurons, conns, net.input_order, net.output_order)
    elif isinstance(edit, MoveNeuron):
        if not net.has_neuron(edit.neuron_id):
            raise EditError(f"unknown neuron {edit.neuron_id!r}")
        _check_position(net, edit.x, edit.y, ignore=edit.neuron_id)
        old = net.neuron(edit.neuron_id)
        neurons = tuple(
            Neuron(n.id, n.role, edit.x, edit.y) if n.id == old.id else n
            for n in net.neurons
        )
        out = NetworkPhenotype(neurons, net.connections, net.input_order, net.output_order)
    elif isinstance(edit, AddConnection):
        for end in (edit.src, edit.dst):
            if not net.has_neuron(end):
                raise EditError(f"unknown neuron {end!r}")
        if net.has_connection(edit.src, edit.dst):
            raise EditError(f"connection {edit.src}->{edit.dst} already exists")
        if net.neuron(edit.dst).role in ("input", "bias"):
            raise EditError(
                f"cannot connect into {edit.dst} (role {net.neuron(edit.dst).role!r})"
            )
        _check_weight(edit.weight)
        conns = net.connections + (Connection(edit.src, edit.dst, edit.weight),)
        out = NetworkPhenotype(net.neurons, conns, net.input_order, net.output_order)
    elif isinstance(edit, RemoveConnection):
        if not net.has_connection(edit.src, edit.dst):
            raise EditError(f"no connection {edit.src}->{edit.dst}")
        conns = tuple(c for c in net.connections if c.key != (edit.src, edit.dst))
        out = NetworkPhenotype(net.neurons, conns, net.input_order, net.output_order)
    elif isinstance(edit, SetWeight):
        if not net.has_connection(edit.src, edit.dst):
            raise EditError(f"no connection {edit.src}->{edit.dst}")
        _check_weight(edit.weight)
        conns = tuple(
            Connection(c.src, c.dst, edit.weight) if c.key == (edit.src, edit.dst) else c
            for c in net.connections
        )
        out = NetworkPhenotype(net.neurons, conns, net.input_order, net.output_order)
    else:
        raise EditError(f"unknown edit {edit!r}")

    problems = validate(out)
    if problems:
        raise EditError("edit produced an invalid network: " + "; ".join(problems))
    return out


def _check_position(net: NetworkPhenotype, x: float, y: float, ignore: str | None) -> None:
    if not (math.isfinite(x) and math.isfinite(y)):
        raise EditError("position must be finite")
    if not (-1.0 <= x <= 1.0 and -1.0 <= y <= 1.0):
        raise EditError(f"position ({x}, {y}) outside the design plane")
    for n in net.neurons:
        if n.id == ignore:
            continue
        if math.hypot(n.x - x, n.y - y) < DELTA_MIN:
            raise EditError(
                f"position ({x}, {y}) is within {DELTA_MIN} of neuron {n.id}"
            )


def _check_weight(w: float) -> None:
    if not math.isfinite(w) or not (WEIGHT_MIN <= abs(w) <= WEIGHT_MAX):
        raise EditError(f"|weight| must lie in [{WEIGHT_MIN}, {WEIGHT_MAX}], got {w}")


# --- serialization -------------------------------------------------------


def edit_to_data(edit: NetworkEdit) -> dict:
    if isinstance(edit, AddNeuron):
        return {"kind": "add_neuron", "role": edit.role, "x": edit.x, "y": edit.y}
    if isinstance(edit, RemoveNeuron):
        return {"kind": "remove_neuron", "neuron_id": edit.neuron_id}
    if isinstance(edit, MoveNeuron):
        return {"kind": "move_neuron", "neuron_id": edit.neuron_id,
                "x": edit.x, "y": edit.y}
    if isinstance(edit, AddConnection):
        return {"kind": "add_connection", "src": edit.src, "dst": edit.dst,
                "weight": edit.weight}
    if isinstance(edit, RemoveConnection):
        return {"kind": "remove_connection", "src": edit.src, "dst": edit.dst}
    if isinstance(edit, SetWeight):
        return {"kind": "set_weight", "src": edit.src, "dst": edit.dst,
                "weight": edit.weight}
    raise ValueError(f"unknown edit {edit!r}")


def edit_from_data(data: dict) -> NetworkEdit:
    if not isinstance(data, dict) or "kind" not in data:
        raise SchemaError("edit must be an object with a 'kind' field")
    kind = data["kind"]
    if kind == "add_neuron":
        _expect_keys(data, {"kind", "role", "x", "y"})
        return AddNeuron(_expect_str(data, "role"),
                         _expect_num(data, "x"), _expect_num(data, "y"))
    if kind == "remove_neuron":
        _expect_keys(data, {"kind", "neuron_id"})
        return RemoveNeuron(_expect_str(data, "neuron_id"))
    if kind == "move_neuron":
        _expect_keys(data, {"kind", "neuron_id", "x", "y"})
        return MoveNeuron(_expect_str(data, "neuron_id"),
                          _expect_num(data, "x"), _expect_num(data, "y"))
    if kind == "add_connection":
        _expect_keys(data, {"kind", "src", "dst", "weight"})
        return AddConnection(_expect_str(data, "src"), _expect_str(data, "dst"),
                             _expect_num(data, "weight"))
    if kind == "remove_connection":
        _expect_keys(data, {"kind", "src", "dst"})
        return RemoveConnection(_expect_str(data, "src"), _expect_str(data, "dst"))
    if kind == "set_weight":
        _expect_keys(data, {"kind", "src", "dst", "weight"})
        return SetWeight(_expect_str(data, "src"), _expect_str(data, "dst"),
                         _expect_num(data, "weight"))
    raise SchemaError(f"unknown edit kind {kind!r}")


def network_to_data(net: NetworkPhenotype) -> dict:
    return {
        "schema": NET_SCHEMA,
        "neurons": [
            {"id": n.id, "role": n.role, "x": n.x, "y": n.y} for n in net.neurons
        ],
        "connections": [
            {"src": c.src, "dst": c.dst, "weight": c.weight} for c in net.connections
        ],
        "input_order": list(net.input_order),
        "output_order": list(net.output_order),
    }


def network_from_data(data: dict) -> NetworkPhenotype:
    _expect_keys(data, {"schema", "neurons", "connections", "input_order", "output_order"})
    if data["schema"] != NET_SCHEMA:
        raise SchemaError(f"expected schema {NET_SCHEMA!r}, got {data.get('schema')!r}")
    neurons = []
    for nd in _expect_list(data, "neurons"):
        _expect_keys(nd, {"id", "role", "x", "y"})
        neurons.append(
            Neuron(_expect_str(nd, "id"), _expect_str(nd, "role"),
                   _expect_num(nd, "x"), _expect_num(nd, "y"))
        )
    conns = []
    for cd in _expect_list(data, "connections"):
        _expect_keys(cd, {"src", "dst", "weight"})
        conns.append(
            Connection(_expect_str(cd, "src"), _expect_str(cd, "dst"),
                       _expect_num(cd, "weight"))
        )
    net = NetworkPhenotype(
        tuple(neurons),
        tuple(conns),
        tuple(_expect_str_list(data, "input_order")),
        tuple(_expect_str_list(data, "output_order")),
    )
    problems = validate(net)
    if problems:
        raise SchemaError("invalid network: " + "; ".join(problems))
    return net


def network_to_json(net: NetworkPhenotype) -> str:
    return json.dumps(network_to_data(net), indent=2, sort_keys=True)


def network_from_json(text: str) -> NetworkPhenotype:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not JSON: {e}") from e
    if not isinstance(data, dict):
        raise SchemaError("top level must be an object")
    return network_from_data(data)


# strict little helpers shared by the other schema parsers


def _expect_keys(d, allowed: set[str]) -> None:
    if not isinstance(d, dict):
        raise SchemaError(f"expected object, got {type(d).__name__}")
    unknown = set(d) - allowed
    if unknown:
        raise SchemaError(f"unknown fields {sorted(unknown)}")
    missing = allowed - set(d)
    if missing:
        raise SchemaError(f"missing fields {sorted(missing)}")


def _expect_list(d: dict, key: str) -> list:
    v = d[key]
    if not isinstance(v, list):
        raise SchemaError(f"{key} must be a list")
    return v


def _expect_str(d: dict, key: str) -> str:
    v = d[key]
    if not isinstance(v, str):
        raise SchemaError(f"{key} must be a string")
    return v


def _expect_num(d: dict, key: str) -> float:
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{key} must be a number")
    return float(v)


def _expect_str_list(d: dict, key: str) -> list[str]:
    v = _expect_list(d, key)
    for item in v:
        if not isinstance(item, str):
            raise SchemaError(f"{key} must contain only strings")
    return v
