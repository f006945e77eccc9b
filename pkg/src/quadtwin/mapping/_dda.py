"""Voxel traversal kernel (Amanatides-Woo DDA), compiled with numba.

Segments are given in grid units (position / voxel_size relative to the grid
origin). Every cell the segment passes through is emitted, including the
first and last, after the segment is clipped to the grid box.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def traverse_segments(g0s, g1s, drop_end, nx, ny, nz, out_flat):
    """Emit flat voxel indices (x*ny*nz + y*nz + z) for every cell touched by
    each segment. Returns the number of entries written to out_flat.

    Rays with drop_end set have the cell containing the segment end removed
    (the endpoint voxel belongs to the hit update, not the free-space carve),
    unless the segment was clipped by the grid box or left it early.
    """
    pos = 0
    for r in range(g0s.shape[0]):
        ax, ay, az = g0s[r, 0], g0s[r, 1], g0s[r, 2]
        dx = g1s[r, 0] - ax
        dy = g1s[r, 1] - ay
        dz = g1s[r, 2] - az

        # clip the parameter interval [0, 1] against the grid box
        t0 = 0.0
        t1 = 1.0
        ok = True
        for axis in range(3):
            if axis == 0:
                a, d, n = ax, dx, nx
            elif axis == 1:
                a, d, n = ay, dy, ny
            else:
                a, d, n = az, dz, nz
            if d != 0.0:
                ta = (0.0 - a) / d
                tb = (float(n) - a) / d
                lo = min(ta, tb)
                hi = max(ta, tb)
                if lo > t0:
                    t0 = lo
                if hi < t1:
                    t1 = hi
            elif a < 0.0 or a > float(n):
                ok = False
        if not ok or t0 > t1:
            continue

        sx = ax + dx * t0
        sy = ay + dy * t0
        sz = az + dz * t0
        cx = int(np.floor(sx))
        cy = int(np.floor(sy))
        cz = int(np.floor(sz))
        # a start exactly on the far face floors to n; pull it back in
        cx = min(max(cx, 0), nx - 1)
        cy = min(max(cy, 0), ny - 1)
        cz = min(max(cz, 0), nz - 1)

        stepx = 1 if dx > 0.0 else (-1 if dx < 0.0 else 0)
        stepy = 1 if dy > 0.0 else (-1 if dy < 0.0 else 0)
        stepz = 1 if dz > 0.0 else (-1 if dz < 0.0 else 0)

        big = 1e30
        tdx = abs(1.0 / dx) if dx != 0.0 else big
        tdy = abs(1.0 / dy) if dy != 0.0 else big
        tdz = abs(1.0 / dz) if dz != 0.0 else big

        if stepx > 0:
            tmx = (cx + 1.0 - ax) / dx
        elif stepx < 0:
            tmx = (cx - ax) / dx
        else:
            tmx = big
        if stepy > 0:
            tmy = (cy + 1.0 - ay) / dy
        elif stepy < 0:
            tmy = (cy - ay) / dy
        else:
            tmy = big
        if stepz > 0:
            tmz = (cz + 1.0 - az) / dz
        elif stepz < 0:
            tmz = (cz - az) / dz
        else:
            tmz = big

        ray_start = pos
        exited = False
        out_flat[pos] = cx * ny * nz + cy * nz + cz
        pos += 1
        while True:
            if tmx <= tmy and tmx <= tmz:
                if tmx >= t1:
                    break
                cx += stepx
                if cx < 0 or cx >= nx:
                    exited = True
                    break
                tmx += tdx
            elif tmy <= tmz:
                if tmy >= t1:
                    break
                cy += stepy
                if cy < 0 or cy >= ny:
                    exited = True
                    break
                tmy += tdy
            else:
                if tmz >= t1:
                    break
                cz += stepz
                if cz < 0 or cz >= nz:
                    exited = True
                    break
                tmz += tdz
            out_flat[pos] = cx * ny * nz + cy * nz + cz
            pos += 1
        if drop_end[r] and not exited and t1 == 1.0 and pos > ray_start:
            pos -= 1
    return pos
