"""Scan-to-map registration: point-to-plane Gauss-Newton on SE(3).

The map side is a surface model extracted from the occupancy grid: every
occupied voxel carries a local plane, anchored at the mean of the surface
points observed in that voxel and oriented by the smallest principal
direction of the occupied voxel centers in its neighborhood. Scan points
associate with the nearest plane; the pose increment that minimizes the
point-to-plane error is solved iteratively, parametrized as a world-frame
rotation about the sensor position plus a world-frame translation.

Directions the scene does not constrain (a single wall, a bare corridor)
show up as near-zero Hessian eigenvalues; the solver zeroes the increment
along them and reports the axes so the filter can refuse to tighten its
covariance there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from ..geometry import SE3, so3_exp, so3_log
from ..mapping import CLASS_OCCUPIED
from .ekf import EstimatorConfig


@dataclass
class SurfaceModel:
    """Per-occupied-voxel local planes plus a lookup tree over anchors.

    Where the grid recorded which side a surface was observed from, the
    normal is oriented toward the observer and flagged; registration then
    rejects correspondences that look at an oriented plane from behind,
    which is what scan points on the unmapped far side of a wall do.
    """

    anchors: np.ndarray   # (n, 3) plane points, world
    normals: np.ndarray   # (n, 3) unit normals, world
    tree: cKDTree
    oriented: np.ndarray | None = None   # (n,) bool, False = side unknown

    @classmethod
    def from_grid(cls, grid, cfg: EstimatorConfig | None = None) -> "SurfaceModel":
        cfg = cfg or EstimatorConfig()
        idx, anchors, views = grid.surface_anchors()
        if len(idx) == 0:
            empty = np.empty((0, 3))
            return cls(empty, empty.copy(), cKDTree(np.zeros((1, 3))))

        occ = (grid.classes == CLASS_OCCUPIED).astype(np.float64)
        r = int(np.ceil(cfg.plane_neighbor_radius_vox))
        kernel = np.ones((2 * r + 1,) * 3)

        # neighborhood first and second moments of occupied voxel centers,
        # in index coordinates (isotropic scaling leaves eigenvectors alone)
        coords = [np.arange(n, dtype=np.float64) for n in grid.dims]
        ii, jj, kk = np.meshgrid(*coords, indexing="ij")
        axes = (ii, jj, kk)
        count = ndimage.correlate(occ, kernel, mode="constant")
        first = [ndimage.correlate(occ * a, kernel, mode="constant") for a in axes]
        second = {}
        for a in range(3):
            for b in range(a, 3):
                second[(a, b)] = ndimage.correlate(
                    occ * axes[a] * axes[b], kernel, mode="constant"
                )

        sel = tuple(idx.T)
        n_nb = count[sel]
        valid = n_nb >= cfg.min_plane_neighbors
        mean = np.stack([f[sel] for f in first], axis=1) / np.maximum(n_nb, 1.0)[:, None]
        cov = np.empty((len(idx), 3, 3))
        for a in range(3):
            for b in range(a, 3):
                c = second[(a, b)][sel] / np.maximum(n_nb, 1.0) - mean[:, a] * mean[:, b]
                cov[:, a, b] = c
                cov[:, b, a] = c
        # guard rank-deficient neighborhoods before eigh
        cov[~valid] = np.eye(3)
        _, vecs = np.linalg.eigh(cov)
        normals = vecs[:, :, 0]  # smallest principal direction

        anchors = anchors[valid]
        normals = normals[valid]
        views = views[valid]

        # orient each normal toward its observers; voxels seen from both
        # sides (view sum cancels) or at near-tangent mean view keep an
        # unoriented plane that matches from either side
        agree = np.einsum("ij,ij->i", normals, views)
        normals = np.where(agree[:, None] < 0.0, -normals, normals)
        oriented = np.abs(agree) > 0.1

        tree = cKDTree(anchors) if len(anchors) else cKDTree(np.zeros((1, 3)))
        return cls(anchors, normals, tree, oriented)

    def __len__(self) -> int:
        return len(self.anchors)

    def transformed(self, g: SE3) -> "SurfaceModel":
        """The same surfaces rigidly re-expressed in another frame."""
        anchors = g.apply(self.anchors)
        normals = self.normals @ g.rot.T
        return SurfaceModel(
            anchors,
            normals,
            cKDTree(anchors) if len(anchors) else self.tree,
            None if self.oriented is None else self.oriented.copy(),
        )


@dataclass
class RegistrationResult:
    correction: SE3                 # corrected = correction o predicted
    translation: np.ndarray         # how far the correction moves the sensor
    rotation_world: np.ndarray      # rotation vector about the sensor position
    matched_point_count: int
    mean_residual_m: float
    converged: bool
    iterations: int
    match_fraction: float = 1.0     # matched / valid scan points
    degenerate_axes: list[np.ndarray] = field(default_factory=list)
    hessian_eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(6))


def _not_converged(iterations: int, matches: int, fraction: float, residual: float) -> RegistrationResult:
    return RegistrationResult(
        correction=SE3(),
        translation=np.zeros(3),
        rotation_world=np.zeros(3),
        matched_point_count=matches,
        match_fraction=fraction,
        mean_residual_m=residual,
        converged=False,
        iterations=iterations,
    )


def register_scan(
    scan, predicted_pose: SE3, surface: SurfaceModel, cfg: EstimatorConfig | None = None
) -> RegistrationResult:
    cfg = cfg or EstimatorConfig()
    pts = scan.points[scan.valid]
    if len(pts) == 0 or len(surface) == 0:
        return _not_converged(0, 0, 0.0, np.inf)

    pivot = predicted_pose.trans.copy()
    pose = SE3(predicted_pose.rot.copy(), predicted_pose.trans.copy())

    mean_res = np.inf
    matches = 0
    fraction = 0.0
    degenerate: list[np.ndarray] = []
    eigvals = np.zeros(6)
    iterations = 0

    for iterations in range(1, cfg.max_iterations + 1):
        pw = pose.apply(pts)
        dist, nearest = surface.tree.query(pw, distance_upper_bound=cfg.max_match_dist_m)
        got = dist < cfg.max_match_dist_m
        if surface.oriented is not None:
            # drop pairs that view an oriented plane from its far side
            safe = np.where(got, nearest, 0)
            v = pose.trans - pw
            v /= np.maximum(np.linalg.norm(v, axis=1), 1e-12)[:, None]
            facing = np.einsum("ij,ij->i", surface.normals[safe], v) > cfg.min_view_cos
            got &= facing | ~surface.oriented[safe]
        matches = int(np.count_nonzero(got))
        fraction = matches / len(pts)
        if matches < cfg.min_matches:
            return _not_converged(iterations, matches, fraction, np.inf)

        p = pw[got]
        n = surface.normals[nearest[got]]
        a = surface.anchors[nearest[got]]
        r = np.einsum("ij,ij->i", n, p - a)

        # Huber influence: beyond the scale, weight falls off as scale/|r|.
        # The scale rides the residual median, so a large consistent offset
        # (median-sized residuals) keeps full-step recovery, while a minority
        # of through-surface pairs against a settled majority is suppressed.
        ar = np.abs(r)
        scale = max(cfg.huber_scale_floor_m, cfg.huber_scale_factor * float(np.median(ar)))
        w = np.minimum(1.0, scale / np.maximum(ar, 1e-12))

        new_res = float(np.sum(w * ar) / np.sum(w))
        if abs(mean_res - new_res) < cfg.residual_tol_m:
            mean_res = new_res
            break
        mean_res = new_res

        jac = np.hstack([n, np.cross(p - pivot, n)])
        jw = jac * w[:, None]
        hess = jw.T @ jac
        rhs = -jw.T @ r
        eigvals, vecs = np.linalg.eigh(hess)
        keep = eigvals > cfg.degeneracy_ratio * eigvals[-1]
        degenerate = [vecs[:, i].copy() for i in range(6) if not keep[i]]
        coeff = np.where(keep, (vecs.T @ rhs) / np.where(keep, eigvals, 1.0), 0.0)
        delta = vecs @ coeff

        rot_inc = so3_exp(delta[3:6])
        inc = SE3(rot_inc, pivot - rot_inc @ pivot + delta[0:3])
        pose = inc.compose(pose)

    correction = pose.compose(predicted_pose.inverse())
    moved_pivot = correction.rot @ pivot + correction.trans
    converged = mean_res <= cfg.converged_residual_m
    return RegistrationResult(
        correction=correction,
        translation=moved_pivot - pivot,
        rotation_world=so3_log(correction.rot),
        matched_point_count=matches,
        match_fraction=fraction,
        mean_residual_m=mean_res,
        converged=converged,
        iterations=iterations,
        degenerate_axes=degenerate,
        hessian_eigenvalues=eigvals,
    )
