"""Log-odds occupancy voxel grid with incremental frontier tracking.

Within one scan commit, hit/miss contributions per voxel are counted first
and applied as a single clamped addition, so the result cannot depend on ray
order. Classification uses hysteresis: a voxel becomes occupied at or above
the upper threshold and free at or below the lower one; while its log-odds
sits between the thresholds it keeps whatever definite class it last had.
A voxel that has been observed therefore never returns to unknown, which
keeps the unknown volume fraction non-increasing over a run.

The frontier set (free voxels with at least one unknown 6-neighbor) is
maintained incrementally: only voxels whose class changed, and their
6-neighbors, are re-evaluated after each commit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import SE3
from ..sim.sensors import LidarScan
from ..sim.world import WorldModel
from ._dda import traverse_segments

CLASS_UNKNOWN = 0
CLASS_FREE = 1
CLASS_OCCUPIED = 2

_SURFACE_PUSH_M = 1e-6  # nudge hit points just inside the surface voxel


def _logit(p: float) -> float:
    return float(np.log(p / (1.0 - p)))


@dataclass
class MapParams:
    voxel_size: float = 0.15
    p_hit: float = 0.7
    p_miss: float = 0.4
    clamp: float = 4.0
    p_occupied: float = 0.65
    p_free: float = 0.35
    frontier_min_cluster: int = 5

    @property
    def l_hit(self) -> float:
        return _logit(self.p_hit)

    @property
    def l_miss(self) -> float:
        return _logit(self.p_miss)

    @property
    def l_occupied(self) -> float:
        return _logit(self.p_occupied)

    @property
    def l_free(self) -> float:
        return _logit(self.p_free)


class OccupancyGrid:
    def __init__(
        self,
        origin: np.ndarray,
        dims: np.ndarray,
        params: MapParams | None = None,
        bounds_lo: np.ndarray | None = None,
        bounds_hi: np.ndarray | None = None,
    ):
        self.origin = np.asarray(origin, dtype=float)
        self.dims = np.asarray(dims, dtype=int)
        self.params = params or MapParams()
        self.logodds = np.zeros(tuple(self.dims), dtype=np.float32)
        self.classes = np.full(tuple(self.dims), CLASS_UNKNOWN, dtype=np.uint8)
        self.frontier_mask = np.zeros(tuple(self.dims), dtype=bool)
        # surface statistics: sum and count of hit points per voxel, so the
        # estimator can anchor planes on observed surfaces, not voxel centers;
        # view_sum tracks the mean direction hits were observed from, so a
        # match can be rejected when a scan sees the anchor from behind
        self.hit_sum = np.zeros((int(np.prod(self.dims)), 3), dtype=np.float64)
        self.hit_count = np.zeros(int(np.prod(self.dims)), dtype=np.int64)
        self.view_sum = np.zeros((int(np.prod(self.dims)), 3), dtype=np.float64)
        self.bounds_lo = None if bounds_lo is None else np.asarray(bounds_lo, float)
        self.bounds_hi = None if bounds_hi is None else np.asarray(bounds_hi, float)
        self._seg_buf = np.empty(0, dtype=np.int64)

    # ------------------------------------------------------------------
    @classmethod
    def for_world(
        cls, world: WorldModel, params: MapParams | None = None, pad_voxels: int = 1
    ) -> "OccupancyGrid":
        """Grid on the same lattice as the world's ground-truth evaluation grid."""
        params = params or MapParams()
        origin, dims, _ = world.ground_truth_grid(params.voxel_size, pad_voxels)
        return cls(origin, dims, params, world.bounds.lo, world.bounds.hi)

    # ------------------------------------------------------------------
    def world_to_index(self, pts: np.ndarray) -> np.ndarray:
        return np.floor((np.atleast_2d(pts) - self.origin) / self.params.voxel_size).astype(
            np.int64
        )

    def index_to_center(self, idx: np.ndarray) -> np.ndarray:
        return self.origin + (np.atleast_2d(idx) + 0.5) * self.params.voxel_size

    def in_grid(self, idx: np.ndarray) -> np.ndarray:
        idx = np.atleast_2d(idx)
        return np.all(idx >= 0, axis=1) & np.all(idx < self.dims, axis=1)

    @property
    def in_bounds_mask(self) -> np.ndarray:
        """Voxels whose centers lie inside the world bounds (coverage window)."""
        if self.bounds_lo is None:
            return np.ones(tuple(self.dims), dtype=bool)
        idx = np.indices(tuple(self.dims)).reshape(3, -1).T
        centers = self.index_to_center(idx)
        ok = np.all(centers >= self.bounds_lo, axis=1) & np.all(
            centers <= self.bounds_hi, axis=1
        )
        return ok.reshape(tuple(self.dims))

    # ------------------------------------------------------------------
    def insert_scan(self, pose: SE3, scan: LidarScan) -> np.ndarray:
        """Commit one scan. Returns (n, 4) int32 deltas: i, j, k, new class."""
        if not (np.all(np.isfinite(pose.trans)) and np.all(np.isfinite(pose.rot))):
            raise ValueError("non-finite sensor pose")
        p = self.params
        vox = p.voxel_size
        origin_g = (pose.trans - self.origin) / vox

        pts_world = pose.apply(scan.points)
        dirs_world = scan.directions @ pose.rot.T
        valid = scan.valid

        # hit rays are traversed to the (pushed) hit point and the endpoint
        # voxel dropped from the carve; max-range rays carve their full length
        ends = np.where(
            valid[:, None],
            pts_world + _SURFACE_PUSH_M * dirs_world,
            pose.trans + dirs_world * np.maximum(scan.ranges, 0.0)[:, None],
        )
        g0 = np.broadcast_to(origin_g, ends.shape).astype(np.float64, copy=True)
        g1 = ((ends - self.origin) / vox).astype(np.float64)

        nx, ny, nz = (int(d) for d in self.dims)
        cap = len(ends) * (nx + ny + nz + 3)
        if len(self._seg_buf) < cap:
            self._seg_buf = np.empty(cap, dtype=np.int64)
        n_miss = traverse_segments(
            g0, g1, np.ascontiguousarray(valid), nx, ny, nz, self._seg_buf
        )
        miss_flat = self._seg_buf[:n_miss]

        hit_pts = pts_world[valid] + _SURFACE_PUSH_M * dirs_world[valid]
        hit_idx = self.world_to_index(hit_pts)
        ok = self.in_grid(hit_idx)  # returns outside the grid are clipped away
        hit_idx = hit_idx[ok]
        hit_flat = hit_idx[:, 0] * (ny * nz) + hit_idx[:, 1] * nz + hit_idx[:, 2]

        # accumulate surface points in canonical order so float summation
        # stays byte-identical under ray permutation
        surf = pts_world[valid][ok]
        order = np.lexsort((surf[:, 2], surf[:, 1], surf[:, 0], hit_flat))
        np.add.at(self.hit_sum, hit_flat[order], surf[order])
        np.add.at(self.hit_count, hit_flat, 1)
        toward_sensor = -dirs_world[valid][ok]
        np.add.at(self.view_sum, hit_flat[order], toward_sensor[order])

        # count hits and misses per voxel, then apply one clamped addition per
        # voxel: the commit is exactly ray-order independent
        touched = np.unique(np.concatenate([miss_flat, hit_flat]))
        if len(touched) == 0:
            return np.empty((0, 4), dtype=np.int32)
        miss_counts = np.bincount(miss_flat, minlength=0)
        hit_counts = np.bincount(hit_flat, minlength=0)
        mc = np.zeros(len(touched), dtype=np.int64)
        hc = np.zeros(len(touched), dtype=np.int64)
        in_m = touched < len(miss_counts)
        mc[in_m] = miss_counts[touched[in_m]]
        in_h = touched < len(hit_counts)
        hc[in_h] = hit_counts[touched[in_h]]
        delta = hc * p.l_hit + mc * p.l_miss

        flat_lo = self.logodds.reshape(-1)
        old = flat_lo[touched].astype(np.float64)
        new = np.clip(old + delta, -p.clamp, p.clamp)
        flat_lo[touched] = new.astype(np.float32)

        flat_cls = self.classes.reshape(-1)
        old_cls = flat_cls[touched].copy()
        new_cls = old_cls.copy()
        new_cls[new >= p.l_occupied] = CLASS_OCCUPIED
        new_cls[new <= p.l_free] = CLASS_FREE
        changed = touched[new_cls != old_cls]
        flat_cls[changed] = new_cls[new_cls != old_cls]

        self._refresh_frontier(changed)

        ii = changed // (ny * nz)
        jj = (changed // nz) % ny
        kk = changed % nz
        out = np.empty((len(changed), 4), dtype=np.int32)
        out[:, 0] = ii
        out[:, 1] = jj
        out[:, 2] = kk
        out[:, 3] = flat_cls[changed]
        return out

    # ------------------------------------------------------------------
    def _refresh_frontier(self, changed_flat: np.ndarray) -> None:
        if len(changed_flat) == 0:
            return
        ny, nz = int(self.dims[1]), int(self.dims[2])
        nynz = ny * nz
        cand = [changed_flat]
        ii = changed_flat // nynz
        jj = (changed_flat // nz) % ny
        kk = changed_flat % nz
        for di, dj, dk in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            ni, nj, nk = ii + di, jj + dj, kk + dk
            ok = (
                (ni >= 0)
                & (ni < self.dims[0])
                & (nj >= 0)
                & (nj < ny)
                & (nk >= 0)
                & (nk < nz)
            )
            cand.append(ni[ok] * nynz + nj[ok] * nz + nk[ok])
        cand_flat = np.unique(np.concatenate(cand))
        ci = cand_flat // nynz
        cj = (cand_flat // nz) % ny
        ck = cand_flat % nz
        self.frontier_mask.reshape(-1)[cand_flat] = self._frontier_predicate(ci, cj, ck)

    def _frontier_predicate(self, ii, jj, kk) -> np.ndarray:
        """Free voxel with >=1 unknown 6-neighbor. Out-of-grid is not unknown."""
        cls = self.classes
        out = cls[ii, jj, kk] == CLASS_FREE
        any_unknown = np.zeros(len(ii), dtype=bool)
        for di, dj, dk in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            ni, nj, nk = ii + di, jj + dj, kk + dk
            ok = (
                (ni >= 0)
                & (ni < self.dims[0])
                & (nj >= 0)
                & (nj < self.dims[1])
                & (nk >= 0)
                & (nk < self.dims[2])
            )
            u = np.zeros(len(ii), dtype=bool)
            u[ok] = cls[ni[ok], nj[ok], nk[ok]] == CLASS_UNKNOWN
            any_unknown |= u
        return out & any_unknown

    def frontier_indices(self) -> np.ndarray:
        """(n, 3) frontier voxel indices in deterministic lexicographic order."""
        return np.argwhere(self.frontier_mask)

    # ------------------------------------------------------------------
    def occupied_centers(self) -> np.ndarray:
        idx = np.argwhere(self.classes == CLASS_OCCUPIED)
        return self.index_to_center(idx) if len(idx) else np.empty((0, 3))

    def surface_anchors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Occupied voxel indices, observed surface points, and view directions.

        The anchor is the mean of the hit points recorded in the voxel,
        falling back to the voxel center where no hits were recorded (a
        grid populated from ground truth rather than scans). The view
        direction is the normalized mean of the toward-sensor ray
        directions, zero where unseen or where opposing views cancel.
        """
        idx = np.argwhere(self.classes == CLASS_OCCUPIED)
        if len(idx) == 0:
            return idx, np.empty((0, 3)), np.empty((0, 3))
        nz = int(self.dims[2])
        nynz = int(self.dims[1]) * nz
        flat = idx[:, 0] * nynz + idx[:, 1] * nz + idx[:, 2]
        counts = self.hit_count[flat]
        anchors = self.index_to_center(idx)
        seen = counts > 0
        anchors[seen] = self.hit_sum[flat[seen]] / counts[seen, None]
        views = np.zeros_like(anchors)
        vsum = self.view_sum[flat]
        norms = np.linalg.norm(vsum, axis=1)
        strong = norms > 1e-9
        views[strong] = vsum[strong] / norms[strong, None]
        return idx, anchors, views

    def snapshot(self) -> "OccupancyGrid":
        """Consistent committed copy for concurrent readers."""
        g = OccupancyGrid(
            self.origin, self.dims, self.params, self.bounds_lo, self.bounds_hi
        )
        g.logodds = self.logodds.copy()
        g.classes = self.classes.copy()
        g.frontier_mask = self.frontier_mask.copy()
        g.hit_sum = self.hit_sum.copy()
        g.hit_count = self.hit_count.copy()
        g.view_sum = self.view_sum.copy()
        return g
