"""Compiled kernels for network stepping, geometry, and whole trial legs.

Everything operates on flat numpy arrays so a complete trial runs without
re-entering the interpreter.  The public modules wrap these with friendlier
types; scalar device/neuron rules live here once and are shared by both the
single-step API and the batched trial kernels.

Trial randomness (start poses, sensor noise) uses numba's np.random state,
seeded per trial via :func:`seed_trial_rng` for reproducibility.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# synapse kind codes
UNIPOLAR = 0
BIPOLAR = 1
CONSTANT = 2

# action codes
FORWARD = 0
LEFT = 1
RIGHT = 2

# coincidence outcome codes
COINC_NONE = 0
COINC_PRE_RECENT = 1   # presynaptic LS higher: pre fired more recently
COINC_POST_RECENT = 2  # postsynaptic LS higher: pre fired first
COINC_SIMULTANEOUS = 3

N_INPUTS = 6
N_OUTPUTS = 2


@njit(cache=True)
def seed_trial_rng(seed):
    np.random.seed(seed)


@njit(cache=True, inline="always")
def neuron_update(m, drive, a, b, c, m_theta):
    """Leaky integrate-and-fire update; returns (new potential, fired)."""
    m_tmp = m + (drive + a - b * m)
    if m_tmp > m_theta:
        return c, True
    return m_tmp, False


@njit(cache=True, inline="always")
def coincidence_code(ls_pre, ls_post, theta_ls):
    if ls_pre + ls_post <= theta_ls:
        return COINC_NONE
    if ls_pre > ls_post:
        return COINC_PRE_RECENT
    if ls_post > ls_pre:
        return COINC_POST_RECENT
    return COINC_SIMULTANEOUS


@njit(cache=True, inline="always")
def unipolar_step(w, s_c, lrs, code, s_n, w_lrs, w_hrs):
    """Bistable counter automaton; returns (w, s_c, lrs, flipped)."""
    if code != COINC_NONE:
        s_c += 1
        if s_c >= s_n:
            lrs = not lrs
            w = w_lrs if lrs else w_hrs
            return w, 0, lrs, True
    elif s_c > 0:
        s_c -= 1
    return w, s_c, lrs, False


@njit(cache=True, inline="always")
def bipolar_step(w, code, delta_w, w_min, w_max):
    """Incremental weight change; potentiates when the post side fired last."""
    if code == COINC_POST_RECENT:
        nw = w + delta_w
        if nw > w_max:
            nw = w_max
    elif code == COINC_PRE_RECENT:
        nw = w - delta_w
        if nw < w_min:
            nw = w_min
    else:
        return w, False
    return nw, nw != w


@njit(cache=True)
def step_network(m, sign, ls, syn_pre, syn_post, syn_delay, syn_w, syn_sc,
                 syn_lrs, syn_switches, acc, t, inputs, kind,
                 a, b, c, m_theta, theta_ls, s_n, delta_w, w_lrs, w_hrs,
                 w_min, w_max, spiked, outcomes):
    """Advance the network one processing step in place; returns t + 1.

    Order within the step: decay last-spike counters, deliver in-flight
    spikes, integrate-and-fire every neuron, enqueue outgoing spikes along
    enabled synapses, then apply per-synapse plasticity using the fresh
    counters.
    """
    n = m.shape[0]
    n_syn = syn_pre.shape[0]
    depth = acc.shape[0]
    for i in range(n):
        if ls[i] > 0:
            ls[i] -= 1
    slot = t % depth
    for i in range(n):
        if i < N_INPUTS:
            drive = inputs[i]
        else:
            drive = acc[slot, i]
        acc[slot, i] = 0.0
        m_new, fired = neuron_update(m[i], drive, a, b, c, m_theta)
        m[i] = m_new
        spiked[i] = fired
        if fired:
            ls[i] = 3
    for s in range(n_syn):
        p = syn_pre[s]
        if spiked[p]:
            acc[(t + syn_delay[s]) % depth, syn_post[s]] += syn_w[s] * sign[p]
    for s in range(n_syn):
        code = coincidence_code(ls[syn_pre[s]], ls[syn_post[s]], theta_ls)
        outcomes[s] = code
        if kind == UNIPOLAR:
            w2, sc2, lrs2, flipped = unipolar_step(
                syn_w[s], syn_sc[s], syn_lrs[s], code, s_n, w_lrs, w_hrs)
            syn_w[s] = w2
            syn_sc[s] = sc2
            syn_lrs[s] = lrs2
            if flipped:
                syn_switches[s] += 1
        elif kind == BIPOLAR:
            w2, changed = bipolar_step(syn_w[s], code, delta_w, w_min, w_max)
            syn_w[s] = w2
            if changed:
                syn_switches[s] += 1
    return t + 1


@njit(cache=True)
def snn_act(m, sign, ls, syn_pre, syn_post, syn_delay, syn_w, syn_sc,
            syn_lrs, syn_switches, acc, t, inputs, kind,
            a, b, c, m_theta, theta_ls, s_n, delta_w, w_lrs, w_hrs,
            w_min, w_max, processing_steps, spiked, outcomes):
    """Run one robot step's worth of processing steps with held inputs.

    Returns (new t, action code) from the output spike counts.
    """
    n = m.shape[0]
    count_a = 0
    count_b = 0
    for _ in range(processing_steps):
        t = step_network(m, sign, ls, syn_pre, syn_post, syn_delay, syn_w,
                         syn_sc, syn_lrs, syn_switches, acc, t, inputs, kind,
                         a, b, c, m_theta, theta_ls, s_n, delta_w,
                         w_lrs, w_hrs, w_min, w_max, spiked, outcomes)
        if spiked[n - 2]:
            count_a += 1
        if spiked[n - 1]:
            count_b += 1
    need = processing_steps // 2 + 1
    high_a = count_a >= need
    high_b = count_b >= need
    if high_a and not high_b:
        return t, LEFT
    if high_b and not high_a:
        return t, RIGHT
    return t, FORWARD


# ---------------------------------------------------------------------------
# geometry


@njit(cache=True, inline="always")
def ray_segment_distance(ox, oy, dx, dy, ax, ay, bx, by):
    """Distance along the ray (o, d) to segment AB, or inf when missed."""
    ex = bx - ax
    ey = by - ay
    denom = dx * ey - dy * ex
    if abs(denom) < 1e-15:
        return np.inf
    wx = ax - ox
    wy = ay - oy
    tt = (wx * ey - wy * ex) / denom
    uu = (wx * dy - wy * dx) / denom
    if tt >= 0.0 and 0.0 <= uu <= 1.0:
        return tt
    return np.inf


@njit(cache=True)
def raycast_all(segments, ox, oy, dx, dy):
    best = np.inf
    for k in range(segments.shape[0]):
        d = ray_segment_distance(ox, oy, dx, dy,
                                 segments[k, 0], segments[k, 1],
                                 segments[k, 2], segments[k, 3])
        if d < best:
            best = d
    return best


@njit(cache=True)
def sight_blocked(segments, ox, oy, tx, ty):
    """True when any segment crosses the open interval between two points."""
    dx = tx - ox
    dy = ty - oy
    for k in range(segments.shape[0]):
        ax = segments[k, 0]
        ay = segments[k, 1]
        ex = segments[k, 2] - ax
        ey = segments[k, 3] - ay
        denom = dx * ey - dy * ex
        if abs(denom) < 1e-15:
            continue
        wx = ax - ox
        wy = ay - oy
        tt = (wx * ey - wy * ex) / denom
        uu = (wx * dy - wy * dx) / denom
        if 1e-9 < tt < 1.0 - 1e-9 and 0.0 <= uu <= 1.0:
            return True
    return False


@njit(cache=True, inline="always")
def closest_point_on_segment(px, py, ax, ay, bx, by):
    ex = bx - ax
    ey = by - ay
    len2 = ex * ex + ey * ey
    if len2 <= 0.0:
        return ax, ay
    u = ((px - ax) * ex + (py - ay) * ey) / len2
    if u < 0.0:
        u = 0.0
    elif u > 1.0:
        u = 1.0
    return ax + u * ex, ay + u * ey


@njit(cache=True)
def penetration_depth(segments, px, py, radius):
    """radius minus the closest segment distance (> 0 means overlap)."""
    best2 = np.inf
    for k in range(segments.shape[0]):
        cx, cy = closest_point_on_segment(px, py, segments[k, 0],
                                          segments[k, 1], segments[k, 2],
                                          segments[k, 3])
        d2 = (px - cx) ** 2 + (py - cy) ** 2
        if d2 < best2:
            best2 = d2
    return radius - np.sqrt(best2)


@njit(cache=True)
def resolve_position(segments, old_x, old_y, new_x, new_y, radius):
    """Slide-or-stop collision resolution for the disc body.

    Pushes the proposed centre out of any overlapping segment along the
    contact normal (which slides oblique motion along the wall); reverts to
    the old position when the overlap cannot be resolved.
    """
    px = new_x
    py = new_y
    for _ in range(8):
        worst2 = np.inf
        qx = 0.0
        qy = 0.0
        for k in range(segments.shape[0]):
            cx, cy = closest_point_on_segment(px, py, segments[k, 0],
                                              segments[k, 1], segments[k, 2],
                                              segments[k, 3])
            d2 = (px - cx) ** 2 + (py - cy) ** 2
            if d2 < worst2:
                worst2 = d2
                qx = cx
                qy = cy
        if worst2 >= (radius - 1e-12) ** 2:
            return px, py
        d = np.sqrt(worst2)
        if d < 1e-12:
            # centre sits on the wall; back straight out toward where we came from
            bx = old_x - px
            by = old_y - py
            norm = np.sqrt(bx * bx + by * by)
            if norm < 1e-12:
                return old_x, old_y
            px = qx + bx / norm * radius
            py = qy + by / norm * radius
        else:
            px = qx + (px - qx) / d * radius
            py = qy + (py - qy) / d * radius
    return old_x, old_y


@njit(cache=True, inline="always")
def wrap_angle(h):
    while h > np.pi:
        h -= 2.0 * np.pi
    while h <= -np.pi:
        h += 2.0 * np.pi
    return h


@njit(cache=True)
def move_pose(segments, x, y, h, action, v_full, axle, radius):
    """Differential-drive step: translate along heading, then rotate."""
    if action == LEFT:
        dl = 0.5 * v_full
        dr = v_full
    elif action == RIGHT:
        dl = v_full
        dr = 0.5 * v_full
    else:
        dl = v_full
        dr = v_full
    d = 0.5 * (dl + dr)
    nx = x + d * np.cos(h)
    ny = y + d * np.sin(h)
    nx, ny = resolve_position(segments, x, y, nx, ny, radius)
    nh = wrap_angle(h + (dr - dl) / axle)
    return nx, ny, nh


@njit(cache=True)
def front_contact(segments, x, y, h, radius):
    """True when the body touches anything within 90 degrees of heading."""
    tol2 = (radius + 1e-6) ** 2
    for k in range(segments.shape[0]):
        cx, cy = closest_point_on_segment(x, y, segments[k, 0],
                                          segments[k, 1], segments[k, 2],
                                          segments[k, 3])
        d2 = (x - cx) ** 2 + (y - cy) ** 2
        if d2 <= tol2:
            ang = wrap_angle(np.arctan2(cy - y, cx - x) - h)
            if abs(ang) < 0.5 * np.pi - 1e-9:
                return True
    return False


@njit(cache=True)
def reverse_pose(segments, x, y, h, radius, reverse_dist, v_full):
    """Back the robot up along its heading, stopping at any obstruction."""
    bx = -np.cos(h)
    by = -np.sin(h)
    remaining = reverse_dist
    while remaining > 1e-12:
        s = v_full if remaining > v_full else remaining
        nx = x + bx * s
        ny = y + by * s
        if penetration_depth(segments, nx, ny, radius) > 1e-9:
            nx, ny = resolve_position(segments, x, y, nx, ny, radius)
            return nx, ny
        x = nx
        y = ny
        remaining -= s
    return x, y


# ---------------------------------------------------------------------------
# sensing


@njit(cache=True)
def sense_raw(segments, bulb_x, bulb_y, x, y, h, radius, ir_range,
              light_half, out6):
    """Noiseless readings: 3 light then 3 IR for mounts at +45, -45, 180 deg."""
    for i in range(3):
        if i == 0:
            beta = 0.25 * np.pi
        elif i == 1:
            beta = -0.25 * np.pi
        else:
            beta = np.pi
        ang = h + beta
        dx = np.cos(ang)
        dy = np.sin(ang)
        sx = x + radius * dx
        sy = y + radius * dy

        light = 0.0
        bvx = bulb_x - sx
        bvy = bulb_y - sy
        dist_b = np.sqrt(bvx * bvx + bvy * bvy)
        if dist_b > 1e-12 and not sight_blocked(segments, sx, sy, bulb_x, bulb_y):
            cos_a = (dx * bvx + dy * bvy) / dist_b
            if cos_a > 0.0:
                fall = 1.0 / (1.0 + (dist_b / light_half) ** 2)
                if fall > 1.0:
                    fall = 1.0
                light = cos_a * fall
        out6[i] = light

        hit = raycast_all(segments, sx, sy, dx, dy)
        ir = 1.0 - hit / ir_range
        if ir < 0.0:
            ir = 0.0
        elif ir > 1.0:
            ir = 1.0
        out6[3 + i] = ir


@njit(cache=True)
def sense_noisy(segments, bulb_x, bulb_y, x, y, h, radius, ir_range,
                light_half, light_noise, ir_noise, out6):
    """Readings with multiplicative uniform noise, clamped to [0, 1].

    Noise draw order is fixed: light 0..2 then IR 0..2.
    """
    sense_raw(segments, bulb_x, bulb_y, x, y, h, radius, ir_range,
              light_half, out6)
    for i in range(3):
        v = out6[i] * (1.0 + np.random.uniform(-light_noise, light_noise))
        out6[i] = min(1.0, max(0.0, v))
    for i in range(3, 6):
        v = out6[i] * (1.0 + np.random.uniform(-ir_noise, ir_noise))
        out6[i] = min(1.0, max(0.0, v))


@njit(cache=True)
def sample_start_pose(xlo, xhi, ylo, yhi, summax):
    """Uniform rejection sample from the start box under x + y < summax."""
    for _ in range(100000):
        x = np.random.uniform(xlo, xhi)
        y = np.random.uniform(ylo, yhi)
        if x + y < summax:
            return x, y
    return xlo, ylo


@njit(cache=True, inline="always")
def in_zone(zkind, z0, z1, z2, z3, x, y):
    # zkind 0: half-plane x + y > z0; zkind 1: rectangle [z0,z1]x[z2,z3]
    if zkind == 0:
        return x + y > z0
    return z0 <= x <= z1 and z2 <= y <= z3


# ---------------------------------------------------------------------------
# trial leg


@njit(cache=True)
def run_leg(m, sign, ls, syn_pre, syn_post, syn_delay, syn_w, syn_sc,
            syn_lrs, syn_switches, acc, t_start, kind,
            a, b, c, m_theta, theta_ls, s_n, delta_w, w_lrs, w_hrs,
            w_min, w_max, processing_steps,
            segments, bulb_x, bulb_y,
            start_xlo, start_xhi, start_ylo, start_yhi, start_summax,
            zone_kind, z0, z1, z2, z3,
            v_full, radius, axle, ir_range, light_half, light_noise, ir_noise,
            bump_reverse, bump_penalty, step_budget,
            fitness_mode, goal_sum, fitness_floor,
            trace_on, trace_x, trace_y, trace_h, trace_act, trace_f,
            trace_w, trace_sw):
    """Drive the network from a fresh start pose until the target zone,
    the step budget, or a budget overflow from bump penalties.

    Network arrays are mutated in place and persist across legs.  Returns
    (reached, st, best_f, t, x, y, h, n_trace_rows).
    """
    n = m.shape[0]
    n_syn = syn_pre.shape[0]
    spiked = np.zeros(n, dtype=np.bool_)
    outcomes = np.zeros(n_syn, dtype=np.int64)
    inputs = np.zeros(6, dtype=np.float64)

    x, y = sample_start_pose(start_xlo, start_xhi, start_ylo, start_yhi,
                             start_summax)
    h = 0.5 * np.pi  # facing north
    t = t_start
    st = 0
    best_f = -np.inf
    reached = False
    rows = 0

    while st < step_budget:
        sense_noisy(segments, bulb_x, bulb_y, x, y, h, radius, ir_range,
                    light_half, light_noise, ir_noise, inputs)
        t, action = snn_act(m, sign, ls, syn_pre, syn_post, syn_delay, syn_w,
                            syn_sc, syn_lrs, syn_switches, acc, t, inputs,
                            kind, a, b, c, m_theta, theta_ls, s_n, delta_w,
                            w_lrs, w_hrs, w_min, w_max, processing_steps,
                            spiked, outcomes)
        x, y, h = move_pose(segments, x, y, h, action, v_full, axle, radius)
        st += 1
        if front_contact(segments, x, y, h, radius):
            x, y = reverse_pose(segments, x, y, h, radius, bump_reverse,
                                v_full)
            st += bump_penalty
        overflowed = st > step_budget
        if overflowed:
            st = step_budget
        if fitness_mode == 1:
            denom = goal_sum - (x + y)
            if denom < fitness_floor:
                denom = fitness_floor
            f = 1000.0 / denom - st
            if f > best_f:
                best_f = f
        else:
            f = float(st)
        if trace_on:
            trace_x[rows] = x
            trace_y[rows] = y
            trace_h[rows] = h
            trace_act[rows] = action
            trace_f[rows] = f
            wsum = 0.0
            switches = 0
            for s2 in range(n_syn):
                wsum += syn_w[s2]
                switches += syn_switches[s2]
            trace_w[rows] = wsum / n_syn if n_syn > 0 else 0.0
            trace_sw[rows] = switches
            rows += 1
        if not overflowed and in_zone(zone_kind, z0, z1, z2, z3, x, y):
            reached = True
            break
        if st >= step_budget:
            break
    return reached, st, best_f, t, x, y, h, rows
