"""Compiled inner loops for the walk simulator.

Every kernel consumes a caller-supplied block of uniforms in ``[0, 1)``, one
per step, so the random stream stays under the control of a
``numpy.random.Generator`` and results do not depend on how the stream is
cut into blocks.
"""
import numpy as np
from numba import njit

# step modes
ALL = 0
BLUE = 1
FLIP = 2

# policy kinds
SIMPLE = 0
OBLIVIOUS = 1
FLIPWALK = 2
SMOOTH = 3
CONGESTION = 4

# layout of the int64 state vector shared with walks.py
S_V = 0
S_T = 1
S_RED = 2
S_RB = 3
S_UNVISITED = 4
S_BLUE_FOREVER = 5
S_CKPT = 6
S_USED = 7
STATE_SIZE = 8

# advance() exit codes
BLOCK_DONE = 0
COVERED = 1
CAPPED = 2
ENTERED_BLUE = 3
STOPPED = 4


@njit(cache=True, nogil=True)
def pick_slot(u, mode, r, b, rho_r, rho_b):
    """Edge slot at the current vertex selected by uniform ``u``.

    Slots ``0..r-1`` are red, ``r..r+b-1`` blue.
    """
    d = r + b
    if mode == ALL:
        k = int(u * d)
        if k >= d:
            k = d - 1
    elif mode == BLUE:
        k = r + int(u * b)
        if k >= d:
            k = d - 1
    else:
        red_mass = r * rho_r
        if u < red_mass:
            k = int(u / rho_r)
            if k >= r:
                k = r - 1
        else:
            k = r + int((u - red_mass) / rho_b)
            if k >= d:
                k = d - 1
    return k


@njit(cache=True, nogil=True)
def advance(
    nbr, r, b, kind, budget, rho_r, rho_b, phase_len, rb_cap, peak, offpeak,
    uniforms, state, visited, step_cap, stop_unvisited, checkpoints, ckpt_out,
    path, path_color,
):
    v = state[S_V]
    t = state[S_T]
    red = state[S_RED]
    rb = state[S_RB]
    unvisited = state[S_UNVISITED]
    blue_forever = state[S_BLUE_FOREVER]
    ci = state[S_CKPT]
    n_ck = checkpoints.shape[0]
    n_path = path.shape[0]
    period = peak + offpeak
    status = BLOCK_DONE
    i = 0
    nu = uniforms.shape[0]
    while i < nu:
        if t >= step_cap:
            status = CAPPED
            break
        if kind == SIMPLE:
            mode = ALL
        elif kind == FLIPWALK:
            mode = FLIP
        elif blue_forever:
            mode = BLUE
        elif kind == OBLIVIOUS:
            mode = ALL
        elif kind == SMOOTH:
            mode = ALL if (t // phase_len) % 2 == 0 else BLUE
        else:
            mode = BLUE if t % period < peak else ALL
        k = pick_slot(uniforms[i], mode, r, b, rho_r, rho_b)
        i += 1
        w = nbr[v, k]
        if k < r:
            red += 1
        if kind == SMOOTH and mode == ALL:
            rb += 1
        if t < n_path:
            path[t] = w
            path_color[t] = 0 if k < r else 1
        t += 1
        v = w
        if visited[w] == 0:
            visited[w] = 1
            unvisited -= 1
        while ci < n_ck and checkpoints[ci] <= t:
            ckpt_out[ci] = unvisited
            ci += 1
        if unvisited == stop_unvisited:
            status = COVERED if unvisited == 0 else STOPPED
            break
        if not blue_forever:
            if kind == OBLIVIOUS and red >= budget:
                blue_forever = 1
                status = ENTERED_BLUE
                break
            if kind == SMOOTH and (red >= budget or rb >= rb_cap):
                blue_forever = 1
                status = ENTERED_BLUE
                break
    state[S_V] = v
    state[S_T] = t
    state[S_RED] = red
    state[S_RB] = rb
    state[S_UNVISITED] = unvisited
    state[S_BLUE_FOREVER] = blue_forever
    state[S_CKPT] = ci
    state[S_USED] = i
    return status


@njit(cache=True, nogil=True)
def count_returns(nbr, r, b, mode, rho_r, rho_b, v, uniforms):
    """Visits to ``v`` at times ``0..T`` for walks started at ``v``; one row of ``uniforms`` per walk."""
    trials, horizon = uniforms.shape
    out = np.empty(trials, dtype=np.int64)
    for j in range(trials):
        x = v
        c = 1
        for s in range(horizon):
            x = nbr[x, pick_slot(uniforms[j, s], mode, r, b, rho_r, rho_b)]
            if x == v:
                c += 1
        out[j] = c
    return out


@njit(cache=True, nogil=True)
def first_visit_from(nbr, r, b, mode, rho_r, rho_b, start, target, t0, uniforms):
    """First time ``t >= t0`` the walk from ``start`` is at ``target``; -1 if not within the block."""
    x = start
    if t0 == 0 and x == target:
        return 0
    for s in range(uniforms.shape[0]):
        x = nbr[x, pick_slot(uniforms[s], mode, r, b, rho_r, rho_b)]
        if x == target and s + 1 >= t0:
            return s + 1
    return -1
