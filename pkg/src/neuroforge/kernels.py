"""Compiled inner loops shared by the simulator and the decoder.

Everything here is written so that plain-Python execution (each function's
``py_func``) computes bit-identical results to the compiled version: scalar
``math`` calls only, fixed iteration order, no fused or vectorized arithmetic.
``math.hypot`` is deliberately avoided (CPython implements it with extra
precision that libm does not match); distances use sqrt(dx*dx + dy*dy).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .cppn import FUNCTIONS, INPUT_IDS, OUTPUT_ID, Z_CAP, topological_order

INF = math.inf


@njit(cache=True)
def wrap_angle(theta):
    """Wrap to [-pi, pi)."""
    two_pi = 2.0 * math.pi
    # float % follows Python semantics in both interpreters; the guards cover
    # the rounding edge where a tiny negative operand lands exactly on 2*pi
    w = (theta + math.pi) % two_pi
    if w < 0.0:
        w += two_pi
    if w >= two_pi:
        w -= two_pi
    return w - math.pi


@njit(cache=True)
def ray_segment(px, py, dx, dy, ax, ay, bx, by):
    """Distance along ray (p, d) to segment a-b, or inf.  d must be a unit vector."""
    ex = bx - ax
    ey = by - ay
    denom = dx * ey - dy * ex
    if denom == 0.0:
        return INF
    t = ((ax - px) * ey - (ay - py) * ex) / denom
    s = ((ax - px) * dy - (ay - py) * dx) / denom
    if t >= 0.0 and 0.0 <= s <= 1.0:
        return t
    return INF


@njit(cache=True)
def first_contact(px, py, ux, uy, travel, ax, ay, bx, by, radius):
    """Allowed travel before a disc of `radius` moving along (u) hits segment a-b.

    Returns a value in [0, travel].  If the disc already touches the segment,
    motion toward it is fully blocked and motion away is fully allowed (the
    distance to a segment is convex along a line, so an initially non-
    decreasing distance never dips below its starting value).
    """
    ex = bx - ax
    ey = by - ay
    ee = ex * ex + ey * ey

    # closest point q on the segment to the current position
    if ee > 0.0:
        s = ((px - ax) * ex + (py - ay) * ey) / ee
        if s < 0.0:
            s = 0.0
        elif s > 1.0:
            s = 1.0
    else:
        s = 0.0
    qx = ax + s * ex
    qy = ay + s * ey
    dpx = px - qx
    dpy = py - qy
    d2 = dpx * dpx + dpy * dpy
    if d2 <= radius * radius:
        if ux * dpx + uy * dpy < 0.0:
            return 0.0
        return travel

    best = travel

    # crossing the offset band of the segment's line
    if ee > 0.0:
        inv_len = 1.0 / math.sqrt(ee)
        nx = -ey * inv_len
        ny = ex * inv_len
        sd = (px - ax) * nx + (py - ay) * ny
        un = ux * nx + uy * ny
        t = INF
        if sd >= radius and un < 0.0:
            t = (sd - radius) / (-un)
        elif sd <= -radius and un > 0.0:
            t = (-radius - sd) / un
        if t <= best:
            hx = px + t * ux
            hy = py + t * uy
            proj = ((hx - ax) * ex + (hy - ay) * ey) / ee
            if 0.0 <= proj <= 1.0:
                best = t

    # endpoint circles, stable quadratic form t = C / (B + sqrt(B^2 - C))
    for k in range(2):
        if k == 0:
            cx = ax
            cy = ay
        else:
            cx = bx
            cy = by
        wx = cx - px
        wy = cy - py
        b = wx * ux + wy * uy
        c = wx * wx + wy * wy - radius * radius
        if c > 0.0 and b > 0.0:
            disc = b * b - c
            if disc >= 0.0:
                t = c / (b + math.sqrt(disc))
                if t < best:
                    best = t
    if best < 0.0:
        best = 0.0
    return best


@njit(cache=True)
def wall_distance(px, py, ax, ay, bx, by):
    ex = bx - ax
    ey = by - ay
    ee = ex * ex + ey * ey
    if ee > 0.0:
        s = ((px - ax) * ex + (py - ay) * ey) / ee
        if s < 0.0:
            s = 0.0
        elif s > 1.0:
            s = 1.0
    else:
        s = 0.0
    qx = ax + s * ex
    qy = ay + s * ey
    dx = px - qx
    dy = py - qy
    return math.sqrt(dx * dx + dy * dy)


@njit(cache=True)
def sense_into(out, walls, x, y, theta, gx, gy, rf_angles, rf_range):
    """Fill a 9-slot buffer: 5 normalized rangefinders, then the 4-quadrant radar."""
    n_walls = walls.shape[0]
    for i in range(rf_angles.shape[0]):
        ang = theta + rf_angles[i]
        dx = math.cos(ang)
        dy = math.sin(ang)
        nearest = rf_range
        for w in range(n_walls):
            t = ray_segment(x, y, dx, dy, walls[w, 0], walls[w, 1], walls[w, 2], walls[w, 3])
            if t < nearest:
                nearest = t
        out[i] = nearest / rf_range

    rel = wrap_angle(math.atan2(gy - y, gx - x) - theta)
    q = math.pi / 4.0
    out[5] = 0.0
    out[6] = 0.0
    out[7] = 0.0
    out[8] = 0.0
    if -q < rel <= q:
        out[5] = 1.0  # front
    elif q < rel <= 3.0 * q:
        out[6] = 1.0  # left
    elif -3.0 * q < rel <= -q:
        out[8] = 1.0  # right
    else:
        out[7] = 1.0  # back


@njit(cache=True)
def net_update(acts, zbuf, conn_src, conn_dst, conn_w, update_idx):
    """One synchronous update: hidden/output neurons read last step's values."""
    for j in range(update_idx.shape[0]):
        zbuf[update_idx[j]] = 0.0
    for k in range(conn_src.shape[0]):
        zbuf[conn_dst[k]] += conn_w[k] * acts[conn_src[k]]
    for j in range(update_idx.shape[0]):
        acts[update_idx[j]] = math.tanh(zbuf[update_idx[j]])


@njit(cache=True)
def collide_travel(px, py, ux, uy, travel, walls, radius):
    best = travel
    for w in range(walls.shape[0]):
        t = first_contact(
            px, py, ux, uy, best, walls[w, 0], walls[w, 1], walls[w, 2], walls[w, 3], radius
        )
        if t < best:
            best = t
    return best


@njit(cache=True)
def run_episode(
    n_neurons,
    conn_src,
    conn_dst,
    conn_w,
    update_idx,
    input_idx,
    bias_idx,
    turn_idx,
    speed_idx,
    walls,
    sx,
    sy,
    stheta,
    gx,
    gy,
    gr,
    dt,
    max_steps,
    v_max,
    omega_max,
    rf_angles,
    rf_range,
    radius,
):
    """Full closed-loop episode.  Returns (trajectory, steps_used, goal_reached).

    Activations persist across steps.  Termination on reaching the goal only
    counts when it happens strictly before the step budget runs out, which is
    what makes fitness > 1 equivalent to goal_reached.
    """
    acts = np.zeros(n_neurons, dtype=np.float64)
    zbuf = np.zeros(n_neurons, dtype=np.float64)
    sensors = np.zeros(9, dtype=np.float64)
    traj = np.zeros((max_steps, 3), dtype=np.float64)

    x = sx
    y = sy
    theta = stheta
    steps = 0
    goal = False
    for step_i in range(max_steps):
        sense_into(sensors, walls, x, y, theta, gx, gy, rf_angles, rf_range)
        for i in range(9):
            acts[input_idx[i]] = sensors[i]
        if bias_idx >= 0:
            acts[bias_idx] = 1.0
        net_update(acts, zbuf, conn_src, conn_dst, conn_w, update_idx)
        turn = acts[turn_idx]
        speed_raw = acts[speed_idx]

        theta = wrap_angle(theta + turn * omega_max * dt)
        v = v_max * (speed_raw + 1.0) / 2.0
        travel = v * dt
        ux = math.cos(theta)
        uy = math.sin(theta)
        t_star = collide_travel(x, y, ux, uy, travel, walls, radius)
        x = x + t_star * ux
        y = y + t_star * uy

        traj[step_i, 0] = x
        traj[step_i, 1] = y
        traj[step_i, 2] = theta
        steps = step_i + 1

        ddx = x - gx
        ddy = y - gy
        if math.sqrt(ddx * ddx + ddy * ddy) <= gr and steps < max_steps:
            goal = True
            break
    return traj, steps, goal


@njit(cache=True)
def query_batch(is_input, func_codes, in_ptr, in_src, in_w, input_pos, out_pos, coords):
    """Evaluate a packed genotype at many coordinate tuples.

    Mirrors the scalar query exactly: topological node order, incoming sums in
    src-id order (baked into the packing), net input clamped to +-Z_CAP.
    """
    m = coords.shape[0]
    n = func_codes.shape[0]
    out = np.zeros(m, dtype=np.float64)
    vals = np.zeros(n, dtype=np.float64)
    for b in range(m):
        for j in range(4):
            vals[input_pos[j]] = coords[b, j]
        vals[input_pos[4]] = 1.0
        for i in range(n):
            if is_input[i]:
                continue
            z = 0.0
            for k in range(in_ptr[i], in_ptr[i + 1]):
                z += in_w[k] * vals[in_src[k]]
            if z > Z_CAP:
                z = Z_CAP
            elif z < -Z_CAP:
                z = -Z_CAP
            code = func_codes[i]
            if code == 0:
                v = z
            elif code == 1:
                if z <= -150.0:
                    v = 0.0
                else:
                    v = 1.0 / (1.0 + math.exp(-4.9 * z))
            elif code == 2:
                v = math.sin(z)
            elif code == 3:
                v = math.exp(-(z * z))
            elif code == 4:
                v = abs(z)
            elif code == 5:
                v = z * z
            else:
                v = math.exp(-max(z, 0.0))
            vals[i] = v
        out[b] = vals[out_pos]
    return out


# --- packing adapters (plain Python) --------------------------------------


def pack_cppn(cppn):
    """Array form of a valid genotype for query_batch."""
    order = topological_order(cppn)
    pos = {nid: i for i, nid in enumerate(order)}
    n = len(order)
    is_input = np.zeros(n, dtype=np.bool_)
    func_codes = np.zeros(n, dtype=np.int64)
    for nid in order:
        node = cppn.node(nid)
        func_codes[pos[nid]] = FUNCTIONS.index(node.function)
    for iid in INPUT_IDS:
        is_input[pos[iid]] = True

    incoming = {i: [] for i in range(n)}
    # stored connection order is (src, dst): per destination this yields
    # src-id order, the same order the scalar query sums in
    for c in cppn.connections:
        incoming[pos[c.dst]].append((pos[c.src], c.weight))
    in_ptr = np.zeros(n + 1, dtype=np.int64)
    srcs = []
    ws = []
    for i in range(n):
        for s, w in incoming[i]:
            srcs.append(s)
            ws.append(w)
        in_ptr[i + 1] = len(srcs)
    in_src = np.asarray(srcs, dtype=np.int64) if srcs else np.zeros(0, dtype=np.int64)
    in_w = np.asarray(ws, dtype=np.float64) if ws else np.zeros(0, dtype=np.float64)
    input_pos = np.asarray([pos[iid] for iid in INPUT_IDS], dtype=np.int64)
    return is_input, func_codes, in_ptr, in_src, in_w, input_pos, pos[OUTPUT_ID]


def pack_phenotype(net):
    """Array form of a valid phenotype for net_update / run_episode.

    Neuron order: inputs (input_order), bias, hidden (by id), outputs
    (output_order).  Connections sorted by (dst index, src index), the
    canonical accumulation order.
    """
    order = list(net.input_order)
    order += [n.id for n in net.neurons if n.role == "bias"]
    order += [n.id for n in net.neurons if n.role == "hidden"]
    order += list(net.output_order)
    index = {nid: i for i, nid in enumerate(order)}

    triples = sorted(
        (index[c.dst], index[c.src], c.weight) for c in net.connections
    )
    conn_dst = np.asarray([t[0] for t in triples], dtype=np.int64)
    conn_src = np.asarray([t[1] for t in triples], dtype=np.int64)
    conn_w = np.asarray([t[2] for t in triples], dtype=np.float64)
    if len(triples) == 0:
        conn_dst = np.zeros(0, dtype=np.int64)
        conn_src = np.zeros(0, dtype=np.int64)
        conn_w = np.zeros(0, dtype=np.float64)

    update_idx = np.asarray(
        sorted(
            index[n.id] for n in net.neurons if n.role in ("hidden", "output")
        ),
        dtype=np.int64,
    )
    bias_ids = [n.id for n in net.neurons if n.role == "bias"]
    bias_idx = index[bias_ids[0]] if bias_ids else -1
    input_idx = np.asarray([index[nid] for nid in net.input_order], dtype=np.int64)
    output_idx = np.asarray([index[nid] for nid in net.output_order], dtype=np.int64)
    return {
        "n_neurons": len(order),
        "order": order,
        "index": index,
        "conn_src": conn_src,
        "conn_dst": conn_dst,
        "conn_w": conn_w,
        "update_idx": update_idx,
        "input_idx": input_idx,
        "output_idx": output_idx,
        "bias_idx": bias_idx,
    }
