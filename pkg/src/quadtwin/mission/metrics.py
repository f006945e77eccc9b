"""Mission metrics: tracking error, map agreement, config fingerprints."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ..mapping import CLASS_OCCUPIED, CLASS_UNKNOWN


def ate_rmse(
    flown_stamps: np.ndarray,
    flown_positions: np.ndarray,
    ref_stamps: np.ndarray,
    ref_positions: np.ndarray,
    min_overlap_s: float = 1.0,
) -> float:
    """RMS Euclidean position error of a flight against its reference.

    The reference is resampled to the flown stamps by per-axis linear
    interpolation over the overlapping time window. No spatial alignment
    is applied: this measures tracking, so a constant offset stays a
    constant error.
    """
    flown_stamps = np.asarray(flown_stamps, dtype=float)
    ref_stamps = np.asarray(ref_stamps, dtype=float)
    flown_positions = np.asarray(flown_positions, dtype=float)
    ref_positions = np.asarray(ref_positions, dtype=float)
    if flown_stamps.size == 0 or ref_stamps.size == 0:
        raise ValueError("both series must be nonempty")
    lo = max(flown_stamps[0], ref_stamps[0])
    hi = min(flown_stamps[-1], ref_stamps[-1])
    if hi - lo < min_overlap_s:
        raise ValueError(f"series overlap {hi - lo:.3f} s is shorter than {min_overlap_s} s")
    sel = (flown_stamps >= lo) & (flown_stamps <= hi)
    t = flown_stamps[sel]
    resampled = np.stack(
        [np.interp(t, ref_stamps, ref_positions[:, ax]) for ax in range(3)], axis=1
    )
    err = flown_positions[sel] - resampled
    return float(np.sqrt(np.mean(np.sum(err * err, axis=1))))


def iou_classes(classes: np.ndarray, truth_occupied: np.ndarray) -> tuple[float, int]:
    """Occupied-set IoU over the explored region, on raw class arrays.

    Mirrors the live map metric so numbers recomputed from a logged map
    stream are comparable: explored = classified voxels; both occupied
    sets are restricted to them; an empty union scores 1.0.
    """
    if classes.shape != truth_occupied.shape:
        raise ValueError(f"shape mismatch {classes.shape} vs {truth_occupied.shape}")
    explored = classes != CLASS_UNKNOWN
    occ = (classes == CLASS_OCCUPIED) & explored
    tru = truth_occupied & explored
    union = int(np.count_nonzero(occ | tru))
    if union == 0:
        return 1.0, int(np.count_nonzero(explored))
    inter = int(np.count_nonzero(occ & tru))
    return inter / union, int(np.count_nonzero(explored))


def config_fingerprint(params: dict) -> str:
    """sha256 over the canonical JSON of every effective parameter."""
    canon = json.dumps(params, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass
class MetricsReport:
    scenario_name: str
    mission: str
    seed: int
    complete: bool
    end_reason: str
    duration_s: float
    config_fingerprint: str
    ate_rmse_m: float | None = None
    tracking_error_max_m: float | None = None
    iou: float | None = None
    explored_voxels: int | None = None
    final_coverage: dict | None = None
    coverage_series: list = field(default_factory=list)      # [t, free, occ, unknown]
    tracking_error_series: list = field(default_factory=list)  # [t, ex, ey, ez, norm]
    events: list = field(default_factory=list)               # {"t", "kind", ...}
    wall: dict = field(default_factory=dict)                 # non-deterministic metadata

    def to_dict(self) -> dict:
        return {
            "scenario_name": self.scenario_name,
            "mission": self.mission,
            "seed": self.seed,
            "complete": self.complete,
            "end_reason": self.end_reason,
            "duration_s": self.duration_s,
            "config_fingerprint": self.config_fingerprint,
            "ate_rmse_m": self.ate_rmse_m,
            "tracking_error_max_m": self.tracking_error_max_m,
            "iou": self.iou,
            "explored_voxels": self.explored_voxels,
            "final_coverage": self.final_coverage,
            "coverage_series": self.coverage_series,
            "tracking_error_series": self.tracking_error_series,
            "events": self.events,
            "wall": self.wall,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def deterministic_json(self) -> str:
        """Serialization with wall-clock metadata stripped, for comparing
        runs: equal seeds must produce byte-identical output."""
        doc = self.to_dict()
        doc.pop("wall")
        return json.dumps(doc, sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricsReport":
        return cls(**doc)
