"""Grid A* kernel with integer edge costs, compiled with numba.

Edge costs are scaled integers: 1000 per axis step, 1415 per face diagonal,
1733 per corner diagonal (each the ceiling of sqrt(k)*1000). Integer
arithmetic makes the optimal cost independent of expansion order, so the
result can be compared for exact equality against a reference Dijkstra.
The heuristic floor(1000 * euclidean) is admissible for these costs; nodes
are re-opened when a cheaper path appears, so optimality does not rely on
heuristic consistency.

Diagonal moves are rejected when any cell the straight center-to-center line
can brush is blocked (no corner cutting): every step of a returned path can
be followed by a straight line through free space.
"""

from __future__ import annotations

import numpy as np
from numba import njit

AXIS_COST = 1000
FACE_COST = 1415   # ceil(sqrt(2) * 1000)
CORNER_COST = 1733  # ceil(sqrt(3) * 1000)


@njit(cache=True)
def _heap_push(keys, vals, n, key, val):
    keys[n] = key
    vals[n] = val
    i = n
    while i > 0:
        parent = (i - 1) // 2
        if keys[parent] > keys[i]:
            keys[parent], keys[i] = keys[i], keys[parent]
            vals[parent], vals[i] = vals[i], vals[parent]
            i = parent
        else:
            break
    return n + 1


@njit(cache=True)
def _heap_pop(keys, vals, n):
    key = keys[0]
    val = vals[0]
    n -= 1
    keys[0] = keys[n]
    vals[0] = vals[n]
    i = 0
    while True:
        l = 2 * i + 1
        r = l + 1
        small = i
        if l < n and keys[l] < keys[small]:
            small = l
        if r < n and keys[r] < keys[small]:
            small = r
        if small == i:
            break
        keys[small], keys[i] = keys[i], keys[small]
        vals[small], vals[i] = vals[i], vals[small]
        i = small
    return key, val, n


@njit(cache=True)
def astar_grid(trav, nx, ny, nz, start, goal):
    """A* from start to goal flat index over traversable cells.

    Returns (cost, parents). cost = -1 when unreachable. parents[i] is the
    predecessor flat index on the optimal path (-1 where unset).
    """
    n_cells = nx * ny * nz
    g = np.full(n_cells, np.int64(2**62), dtype=np.int64)
    parents = np.full(n_cells, -1, dtype=np.int64)

    gx = goal // (ny * nz)
    gy = (goal // nz) % ny
    gz = goal % nz

    cap = 1 << 14
    keys = np.empty(cap, dtype=np.int64)
    vals = np.empty(cap, dtype=np.int64)
    heap_n = 0

    sx = start // (ny * nz)
    sy = (start // nz) % ny
    sz = start % nz
    d0 = np.sqrt(
        float((sx - gx) ** 2 + (sy - gy) ** 2 + (sz - gz) ** 2)
    )
    g[start] = 0
    heap_n = _heap_push(keys, vals, heap_n, np.int64(d0 * 1000.0), start)

    while heap_n > 0:
        fkey, idx, heap_n = _heap_pop(keys, vals, heap_n)
        cx = idx // (ny * nz)
        cy = (idx // nz) % ny
        cz = idx % nz
        hx = np.int64(
            np.floor(
                np.sqrt(float((cx - gx) ** 2 + (cy - gy) ** 2 + (cz - gz) ** 2)) * 1000.0
            )
        )
        if fkey - hx > g[idx]:
            continue  # stale heap entry
        if idx == goal:
            return g[goal], parents
        for di in range(-1, 2):
            ni = cx + di
            if ni < 0 or ni >= nx:
                continue
            for dj in range(-1, 2):
                nj = cy + dj
                if nj < 0 or nj >= ny:
                    continue
                for dk in range(-1, 2):
                    if di == 0 and dj == 0 and dk == 0:
                        continue
                    nk = cz + dk
                    if nk < 0 or nk >= nz:
                        continue
                    nidx = ni * ny * nz + nj * nz + nk
                    if trav[nidx] == 0:
                        continue
                    # diagonal moves must not cut corners: every cell the
                    # straight center-to-center line can brush must be free
                    if di != 0 and dj != 0:
                        if (
                            trav[ni * ny * nz + cy * nz + cz] == 0
                            or trav[cx * ny * nz + nj * nz + cz] == 0
                        ):
                            continue
                    if di != 0 and dk != 0:
                        if (
                            trav[ni * ny * nz + cy * nz + cz] == 0
                            or trav[cx * ny * nz + cy * nz + nk] == 0
                        ):
                            continue
                    if dj != 0 and dk != 0:
                        if (
                            trav[cx * ny * nz + nj * nz + cz] == 0
                            or trav[cx * ny * nz + cy * nz + nk] == 0
                        ):
                            continue
                    if di != 0 and dj != 0 and dk != 0:
                        if (
                            trav[ni * ny * nz + nj * nz + cz] == 0
                            or trav[ni * ny * nz + cy * nz + nk] == 0
                            or trav[cx * ny * nz + nj * nz + nk] == 0
                        ):
                            continue
                    axes = abs(di) + abs(dj) + abs(dk)
                    if axes == 1:
                        step = AXIS_COST
                    elif axes == 2:
                        step = FACE_COST
                    else:
                        step = CORNER_COST
                    ng = g[idx] + step
                    if ng < g[nidx]:
                        g[nidx] = ng
                        parents[nidx] = idx
                        h = np.int64(
                            np.floor(
                                np.sqrt(
                                    float(
                                        (ni - gx) ** 2 + (nj - gy) ** 2 + (nk - gz) ** 2
                                    )
                                )
                                * 1000.0
                            )
                        )
                        if heap_n >= len(keys):
                            new_keys = np.empty(len(keys) * 2, dtype=np.int64)
                            new_vals = np.empty(len(vals) * 2, dtype=np.int64)
                            new_keys[: len(keys)] = keys
                            new_vals[: len(vals)] = vals
                            keys = new_keys
                            vals = new_vals
                        heap_n = _heap_push(keys, vals, heap_n, ng + h, nidx)
    return np.int64(-1), parents
