"""Independent reference computations the test suite checks the package against.

Everything in this module is computed from scratch with the standard library:
no imports from the package under test, no numpy.  Where a function mirrors a
documented numeric contract (the genotype interpreter), it is written from the
serialized data format alone so an implementation bug cannot leak into its own
oracle.
"""

import math

TANH_ONE = math.tanh(1.0)


def two_step_recurrence(w_in=1.0, w_self=0.5, x=1.0):
    """Hand recurrence for a single output with a self-loop, two steps."""
    a1 = math.tanh(w_in * x)
    return math.tanh(w_in * x + w_self * a1)


GAUSSIAN_AT_ONE = math.exp(-1.0)

# --- genotype interpreter ------------------------------------------------
# Interprets the cppn/1 wire format directly.  Function table and the +-1e6
# pre-activation clamp follow the serialization contract documented on the
# format itself.

_Z_CAP = 1.0e6


def _fn(name, z):
    if z > _Z_CAP:
        z = _Z_CAP
    elif z < -_Z_CAP:
        z = -_Z_CAP
    if name == "linear":
        return z
    if name == "sigmoid_steep":
        return 0.0 if z <= -150.0 else 1.0 / (1.0 + math.exp(-4.9 * z))
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
    raise ValueError(name)


def eval_cppn_data(data, coords):
    """Evaluate a cppn/1 dict at (x1, y1, x2, y2) with an independent topo sort.

    Incoming contributions are summed in the serialized connection order,
    matching the documented bit-stability contract.
    """
    nodes = {n["id"]: n for n in data["nodes"]}
    incoming = {}
    indeg = {nid: 0 for nid in nodes}
    outgoing = {nid: [] for nid in nodes}
    for c in data["connections"]:
        incoming.setdefault(c["dst"], []).append(c)
        indeg[c["dst"]] += 1
        outgoing[c["src"]].append(c["dst"])
    ready = sorted(nid for nid, d in indeg.items() if d == 0)
    order = []
    while ready:
        nid = ready.pop(0)
        order.append(nid)
        changed = False
        for dst in outgoing[nid]:
            indeg[dst] -= 1
            if indeg[dst] == 0:
                ready.append(dst)
                changed = True
        if changed:
            ready.sort()
    if len(order) != len(nodes):
        raise ValueError("cycle")
    values = {}
    inputs = dict(zip(("in0", "in1", "in2", "in3"), map(float, coords)))
    inputs["in4"] = 1.0
    for nid in order:
        if nid in inputs:
            values[nid] = inputs[nid]
            continue
        z = 0.0
        for c in incoming.get(nid, ()):
            z += c["weight"] * values[c["src"]]
        values[nid] = _fn(nodes[nid]["function"], z)
    return values["out0"]


def naive_decode(cppn_data, neurons, eps_expr=0.01, w_cap=3.0, w_floor=0.05):
    """Reference substrate decode: {(src, dst): weight} over ordered pairs.

    `neurons` is a list of (id, role, x, y).  Pair enumeration follows the
    documented order: sources in id order x destinations in id order,
    self-pairs included.
    """
    ordered = sorted(neurons, key=lambda n: n[0])
    sources = [n for n in ordered if n[1] in ("input", "bias", "hidden", "output")]
    dests = [n for n in ordered if n[1] in ("hidden", "output")]
    out = {}
    for a in sources:
        for b in dests:
            w = eval_cppn_data(cppn_data, (a[2], a[3], b[2], b[3]))
            if abs(w) < eps_expr:
                continue
            w = max(-w_cap, min(w_cap, w))
            if abs(w) < w_floor:
                w = w_floor if w > 0.0 else -w_floor
            out[(a[0], b[0])] = w
    return out


# --- geometry -------------------------------------------------------------

def point_segment_distance(px, py, ax, ay, bx, by):
    vx, vy = bx - ax, by - ay
    wx, wy = px - ax, py - ay
    vv = vx * vx + vy * vy
    if vv == 0.0:
        return math.sqrt(wx * wx + wy * wy)
    t = (wx * vx + wy * vy) / vv
    t = max(0.0, min(1.0, t))
    dx, dy = px - (ax + t * vx), py - (ay + t * vy)
    return math.sqrt(dx * dx + dy * dy)


def translate_points(points, offset, count):
    """All translated copies (including the original) a Repeat produces."""
    ox, oy = offset
    return [
        [(x + i * ox, y + i * oy) for (x, y) in points] for i in range(count)
    ]


# --- simulation arithmetic -------------------------------------------------

def straight_steps_to_goal(start_x, goal_x, goal_r, v=0.5, dt=0.1):
    """Steps a full-speed straight-east robot needs to first touch the goal."""
    x = start_x
    steps = 0
    while abs(goal_x - x) > goal_r:
        x += v * dt
        steps += 1
        if steps > 10000:
            raise RuntimeError("never reaches goal")
    return steps


def fitness_goal(max_steps, steps_used):
    return 1.0 + (max_steps - steps_used) / max_steps


def fitness_fail(d_final, d_start):
    return max(0.0, 1.0 - d_final / d_start)


# --- novelty arithmetic -----------------------------------------------------

def novelty_score(point, others, k):
    """Mean distance to the k nearest of `others` (self already excluded)."""
    if not others:
        return 0.0
    ds = sorted(math.dist(point, q) for q in others)
    k = min(k, len(ds))
    return sum(ds[:k]) / k


def archive_admits(archive_points, candidate, threshold):
    """Nearest-neighbor admission rule; empty archive admits everything."""
    if not archive_points:
        return True
    return min(math.dist(candidate, p) for p in archive_points) > threshold


# --- ordering oracles --------------------------------------------------------

def leaderboard_order(rows):
    """rows: (brain_id, author, best_fitness, created_at) -> ordered ids."""
    return [
        r[0]
        for r in sorted(rows, key=lambda r: (-r[2], r[3], r[0]))
    ]


def grid_coverage(points, n=10):
    cells = set()
    for x, y in points:
        cells.add((min(n - 1, max(0, int(x * n))), min(n - 1, max(0, int(y * n)))))
    return len(cells)
