"""Shared fixtures and randomized generators for the test suite.

Networks come from a jittered grid so every pair of neurons clears the
minimum-separation rule by construction.  Annotation candidates are filtered
through expansion (a generator may retry), so tests downstream always start
from a valid annotated network.
"""

import math

import pytest
from hypothesis import settings

from neuroforge.ann import (
    AddConnection,
    AddNeuron,
    Connection,
    MoveNeuron,
    Neuron,
    NetworkPhenotype,
    RemoveConnection,
    RemoveNeuron,
    SetWeight,
)
from neuroforge.compiler import AnnotatedNetwork, MirrorX, Repeat, expand_annotations
from neuroforge.maze import builtin_mazes
from neuroforge.seeds import seed_brain

settings.register_profile("suite", deadline=None, max_examples=30)
settings.load_profile("suite")

GRID = [round(-0.9 + 0.2 * i, 1) for i in range(10)]


def _jitter(rng, g):
    return g + rng.uniform(-0.05, 0.05)


def random_phenotype(rng, max_hidden=8, max_connections=40):
    """Valid phenotype on a jittered grid: separation >= 0.1 > delta_min."""
    n_in = int(rng.integers(1, 5))
    n_out = int(rng.integers(1, 4))
    n_hidden = int(rng.integers(0, max_hidden + 1))
    slots = [(gx, gy) for gx in GRID for gy in GRID]
    idx = rng.choice(len(slots), size=n_in + n_out + n_hidden + 1, replace=False)
    picked = [slots[i] for i in idx]
    neurons = []
    names = (
        [f"in{i}" for i in range(n_in)]
        + ["bias"]
        + [f"h{i}" for i in range(n_hidden)]
        + [f"out{i}" for i in range(n_out)]
    )
    roles = ["input"] * n_in + ["bias"] + ["hidden"] * n_hidden + ["output"] * n_out
    for name, role, (gx, gy) in zip(names, roles, picked):
        neurons.append(Neuron(name, role, _jitter(rng, gx), _jitter(rng, gy)))
    dests = [n.id for n in neurons if n.role in ("hidden", "output")]
    sources = [n.id for n in neurons]
    conns = {}
    n_conns = int(rng.integers(1, max_connections + 1))
    for _ in range(n_conns):
        src = sources[int(rng.integers(0, len(sources)))]
        dst = dests[int(rng.integers(0, len(dests)))]
        if (src, dst) in conns:
            continue
        conns[(src, dst)] = random_weight(rng)
    connections = tuple(Connection(s, d, w) for (s, d), w in conns.items())
    return NetworkPhenotype(
        tuple(neurons),
        connections,
        tuple(f"in{i}" for i in range(n_in)),
        tuple(f"out{i}" for i in range(n_out)),
    )


def random_weight(rng):
    mag = float(rng.uniform(0.05, 3.0))
    return mag if rng.random() < 0.5 else -mag


def random_annotated(rng, require_orbit=False, max_tries=40):
    """Annotated network that expands cleanly.

    With require_orbit, the result is guaranteed to carry at least one
    multi-member annotation (mirror or repeat).
    """
    for _ in range(max_tries):
        net = random_phenotype(rng)
        annotations = []
        if net.connections and (require_orbit or rng.random() < 0.7):
            annotations = _try_annotations(rng, net)
        if require_orbit and not annotations:
            continue
        anet = AnnotatedNetwork(net, tuple(annotations))
        try:
            expand_annotations(anet)
        except ValueError:
            continue
        return anet
    raise AssertionError("generator failed to produce a valid annotated network")


def _try_annotations(rng, net):
    picks = []
    conns = list(net.connections)
    rng.shuffle(conns)
    for conn in conns[:3]:
        if rng.random() < 0.5:
            cand = MirrorX(((conn.src, conn.dst),))
        else:
            ox, oy = [(0.0, 0.2), (0.0, -0.2), (0.2, 0.0), (-0.2, 0.0)][
                int(rng.integers(0, 4))
            ]
            cand = Repeat(((conn.src, conn.dst),), ox, oy, int(rng.integers(2, 4)))
        trial = AnnotatedNetwork(net, tuple(picks) + (cand,))
        try:
            expand_annotations(trial)
        except ValueError:
            continue
        picks.append(cand)
    return picks


def free_position(rng, net, tries=60):
    taken = [(n.x, n.y) for n in net.neurons]
    for _ in range(tries):
        x = _jitter(rng, GRID[int(rng.integers(0, len(GRID)))])
        y = _jitter(rng, GRID[int(rng.integers(0, len(GRID)))])
        if all(math.dist((x, y), t) >= 0.06 for t in taken):
            return (x, y)
    return None


def random_edit(rng, net):
    """A single edit valid against `net`, or None when nothing applies."""
    kinds = ["add_neuron", "move_neuron", "add_connection"]
    if net.connections:
        kinds += ["set_weight", "remove_connection"]
    hidden = [n for n in net.neurons if n.role == "hidden"]
    if hidden:
        kinds.append("remove_neuron")
    kind = kinds[int(rng.integers(0, len(kinds)))]

    if kind == "add_neuron":
        pos = free_position(rng, net)
        return AddNeuron("hidden", *pos) if pos else None
    if kind == "move_neuron":
        pos = free_position(rng, net)
        if pos is None:
            return None
        target = net.neurons[int(rng.integers(0, len(net.neurons)))]
        return MoveNeuron(target.id, *pos)
    if kind == "add_connection":
        dests = [n.id for n in net.neurons if n.role in ("hidden", "output")]
        sources = [n.id for n in net.neurons]
        existing = {c.key for c in net.connections}
        for _ in range(30):
            src = sources[int(rng.integers(0, len(sources)))]
            dst = dests[int(rng.integers(0, len(dests)))]
            if (src, dst) not in existing:
                return AddConnection(src, dst, random_weight(rng))
        return None
    conn = net.connections[int(rng.integers(0, len(net.connections)))]
    if kind == "set_weight":
        return SetWeight(conn.src, conn.dst, random_weight(rng))
    if kind == "remove_connection":
        return RemoveConnection(conn.src, conn.dst)
    target = hidden[int(rng.integers(0, len(hidden)))]
    return RemoveNeuron(target.id)


@pytest.fixture(scope="session")
def mazes():
    return builtin_mazes()


@pytest.fixture()
def seed_anet():
    return seed_brain()
