"""Cellular-automaton burn loop.

Two implementations with identical arithmetic: scalar loops compiled by
numba, and a vectorised numpy version. ``burn`` is whichever one
``rosfit._accel.USE_NUMBA`` selects. Both return bit-identical grids.

Inputs (all precomputed by :mod:`rosfit.simulator`):

fuel_idx      (m, n) int64, index into the rate table, -1 for non-fuel
axis_rates    (R, F, 8) float64, m/min along each axis per weather record/fuel
step_record   (nsteps,) int64, weather record in effect during each step
axis_dist     (8,) float64, center-to-center distance per axis
report_steps  (T,) int64, ascending step counts at which to snapshot

A snapshot at step count ``s`` is the state at time ``s * dt``, after any
ignition scheduled for that instant.
"""
import numpy as np

from rosfit._accel import USE_NUMBA, njit

AVAILABLE = 0
BURNING = 1
BURNED = 2
NONFUEL = 3

# E, NE, N, NW, W, SW, S, SE; row index grows southward.
AXIS_DROW = np.array([0, -1, -1, -1, 0, 1, 1, 1], dtype=np.int64)
AXIS_DCOL = np.array([1, 1, 0, -1, -1, -1, 0, 1], dtype=np.int64)
AXIS_BEARING = np.arange(8) * 45.0


@njit
def _burn_numba(fuel_idx, axis_rates, step_record, axis_dist, dt,
                ign_row, ign_col, ign_step, report_steps):
    m, n = fuel_idx.shape
    nsteps = step_record.shape[0]
    n_reports = report_steps.shape[0]
    out = np.zeros((n_reports, m, n), dtype=np.uint8)

    state = np.empty((m, n), dtype=np.int8)
    for i in range(m):
        for j in range(n):
            state[i, j] = NONFUEL if fuel_idx[i, j] < 0 else AVAILABLE
    progress = np.zeros((m, n, 8), dtype=np.float64)
    resolved = np.zeros((m, n, 8), dtype=np.bool_)
    ignite = np.zeros((m, n), dtype=np.bool_)
    act_r = np.empty(m * n, dtype=np.int64)
    act_c = np.empty(m * n, dtype=np.int64)
    n_act = 0
    new_r = np.empty(m * n, dtype=np.int64)
    new_c = np.empty(m * n, dtype=np.int64)
    drow = AXIS_DROW
    dcol = AXIS_DCOL

    rep = 0
    for s in range(nsteps + 1):
        if s == ign_step and state[ign_row, ign_col] == AVAILABLE:
            state[ign_row, ign_col] = BURNING
            act_r[n_act] = ign_row
            act_c[n_act] = ign_col
            n_act += 1
        while rep < n_reports and report_steps[rep] == s:
            for i in range(m):
                for j in range(n):
                    if state[i, j] == BURNING or state[i, j] == BURNED:
                        out[rep, i, j] = 1
            rep += 1
        if s == nsteps or rep == n_reports:
            break
        if n_act == 0:
            continue

        rates = axis_rates[step_record[s]]
        n_new = 0
        for a in range(n_act):
            i = act_r[a]
            j = act_c[a]
            f = fuel_idx[i, j]
            done = True
            for k in range(8):
                if resolved[i, j, k]:
                    continue
                ni = i + drow[k]
                nj = j + dcol[k]
                if ni < 0 or ni >= m or nj < 0 or nj >= n or state[ni, nj] != AVAILABLE:
                    resolved[i, j, k] = True
                    continue
                progress[i, j, k] += rates[f, k] * dt
                if progress[i, j, k] >= axis_dist[k]:
                    progress[i, j, k] = axis_dist[k]
                    resolved[i, j, k] = True
                    if not ignite[ni, nj]:
                        ignite[ni, nj] = True
                        new_r[n_new] = ni
                        new_c[n_new] = nj
                        n_new += 1
                else:
                    done = False
            if done:
                state[i, j] = BURNED

        keep = 0
        for a in range(n_act):
            i = act_r[a]
            j = act_c[a]
            if state[i, j] == BURNING:
                act_r[keep] = i
                act_c[keep] = j
                keep += 1
        n_act = keep
        for a in range(n_new):
            i = new_r[a]
            j = new_c[a]
            ignite[i, j] = False
            state[i, j] = BURNING
            act_r[n_act] = i
            act_c[n_act] = j
            n_act += 1
    return out


def _burn_numpy(fuel_idx, axis_rates, step_record, axis_dist, dt,
                ign_row, ign_col, ign_step, report_steps):
    m, n = fuel_idx.shape
    nsteps = step_record.shape[0]
    n_reports = report_steps.shape[0]
    out = np.zeros((n_reports, m, n), dtype=np.uint8)

    state = np.where(fuel_idx < 0, NONFUEL, AVAILABLE).astype(np.int8)
    progress = np.zeros((m, n, 8), dtype=np.float64)
    resolved = np.zeros((m, n, 8), dtype=bool)
    # Pad by one cell so neighbour lookups never leave the array; the rim is
    # non-fuel and therefore resolves any axis pointing at it.
    padded = np.full((m + 2, n + 2), NONFUEL, dtype=np.int8)

    rep = 0
    for s in range(nsteps + 1):
        if s == ign_step and state[ign_row, ign_col] == AVAILABLE:
            state[ign_row, ign_col] = BURNING
        while rep < n_reports and report_steps[rep] == s:
            out[rep] = (state == BURNING) | (state == BURNED)
            rep += 1
        if s == nsteps or rep == n_reports:
            break
        bi, bj = np.nonzero(state == BURNING)
        if bi.size == 0:
            continue

        padded[1:-1, 1:-1] = state
        rates = axis_rates[step_record[s]][fuel_idx[bi, bj]]
        ignite = np.zeros((m, n), dtype=bool)
        for k in range(8):
            ni = bi + AXIS_DROW[k]
            nj = bj + AXIS_DCOL[k]
            open_ = ~resolved[bi, bj, k]
            avail = padded[ni + 1, nj + 1] == AVAILABLE
            resolved[bi[open_ & ~avail], bj[open_ & ~avail], k] = True
            go = open_ & avail
            gi, gj = bi[go], bj[go]
            p = progress[gi, gj, k] + rates[go, k] * dt
            hit = p >= axis_dist[k]
            p[hit] = axis_dist[k]
            progress[gi, gj, k] = p
            resolved[gi[hit], gj[hit], k] = True
            ignite[ni[go][hit], nj[go][hit]] = True
        done = resolved[bi, bj].all(axis=1)
        state[bi[done], bj[done]] = BURNED
        state[ignite] = BURNING
    return out


burn = _burn_numba if USE_NUMBA else _burn_numpy
