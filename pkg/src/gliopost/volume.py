"""Geometry-aware 3D grid types and NIfTI file I/O.

Conventions used throughout the package:

* arrays are indexed ``data[i, j, k]`` for voxel (x, y, z);
* scan order is x fastest (the on-disk NIfTI layout), which fixes the
  numbering of connected components and makes texture offsets
  deterministic;
* label grids carry values in {0..4}: 0 background, 1 NETC, 2 SNFH,
  3 ET, 4 RC;
* all physical quantities are in millimetres.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .nifti import NiftiError, Orientation, RawNifti, read_nifti, write_nifti

MAX_LABEL = 4
TUMOR_LABELS = (1, 2, 3, 4)

#: canonical sequence keys, mirroring the corpus file suffixes
#: (t1n = precontrast T1, t1c = contrast-enhanced T1, t2w = T2, t2f = FLAIR)
SEQUENCES = ("t1n", "t1c", "t2w", "t2f")


@dataclass(frozen=True)
class Spacing:
    """Voxel edge lengths in millimetres."""

    dx: float
    dy: float
    dz: float

    def __post_init__(self):
        for name, v in (("dx", self.dx), ("dy", self.dy), ("dz", self.dz)):
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"spacing {name} must be positive and finite, got {v}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)

    @property
    def voxel_volume(self) -> float:
        return self.dx * self.dy * self.dz


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ScalarVolume:
    """3D floating-point intensity grid (one per MRI sequence)."""

    data: np.ndarray  # float32, shape (nx, ny, nz)
    spacing: Spacing
    orientation: Orientation = field(default_factory=Orientation)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 3:
            raise ValueError(f"scalar volume must be 3D, got shape {data.shape}")
        if not np.isfinite(data).all():
            raise ValueError("scalar volume contains non-finite voxels")
        object.__setattr__(self, "data", _freeze(data))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True)
class LabelMap:
    """3D integer label grid; every voxel in {0..4}."""

    data: np.ndarray  # uint8, shape (nx, ny, nz)
    spacing: Spacing
    orientation: Orientation = field(default_factory=Orientation)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise ValueError(f"label map must be 3D, got shape {data.shape}")
        if data.dtype != np.uint8:
            as_int = np.rint(data)
            if not np.array_equal(as_int, data):
                raise ValueError("label map contains non-integral values")
            data = as_int
        if data.size and (data.min() < 0 or data.max() > MAX_LABEL):
            raise ValueError(
                f"label value out of range: found {int(data.min())}..{int(data.max())},"
                f" expected 0..{MAX_LABEL}"
            )
        object.__setattr__(self, "data", _freeze(data.astype(np.uint8)))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def label_mask(self, label: int) -> np.ndarray:
        return self.data == label

    def with_data(self, data: np.ndarray) -> "LabelMap":
        """Same geometry, new voxel values."""
        return LabelMap(data=data, spacing=self.spacing, orientation=self.orientation)


@dataclass
class CaseBundle:
    """One case: sequences, predicted mask, and optionally the ground truth."""

    case_id: str
    prediction: LabelMap
    sequences: dict[str, ScalarVolume] = field(default_factory=dict)
    ground_truth: LabelMap | None = None

    def __post_init__(self):
        grids = [("prediction", self.prediction)]
        grids += [(f"sequence {k}", v) for k, v in self.sequences.items()]
        if self.ground_truth is not None:
            grids.append(("ground_truth", self.ground_truth))
        dims = grids[0][1].dims
        spacing = grids[0][1].spacing
        for name, g in grids[1:]:
            if g.dims != dims:
                raise ValueError(f"{self.case_id}: {name} dims {g.dims} != {dims}")
            if g.spacing != spacing:
                raise ValueError(f"{self.case_id}: {name} spacing mismatch")

    @property
    def spacing(self) -> Spacing:
        return self.prediction.spacing


def load_nifti(path: str | Path, kind: str) -> ScalarVolume | LabelMap:
    """Load a NIfTI-1 file as a scalar volume (``kind='scalar'``) or a
    label map (``kind='label'``).

    Label loads round intensities to the nearest integer and reject
    values that are non-integral (beyond 1e-3) or outside {0..4}.
    """
    if kind not in ("label", "scalar"):
        raise ValueError(f"kind must be 'label' or 'scalar', got {kind!r}")
    raw = read_nifti(path)
    spacing = Spacing(*raw.spacing)
    data = np.asarray(raw.data)
    if kind == "scalar":
        if not np.isfinite(data).all():
            raise NiftiError(f"{path}: non-finite voxel in scalar volume")
        return ScalarVolume(data=data.astype(np.float32), spacing=spacing,
                            orientation=raw.orientation)
    values = data.astype(np.float64)
    if not np.isfinite(values).all():
        raise NiftiError(f"{path}: non-finite voxel in label volume")
    rounded = np.rint(values)
    if np.abs(values - rounded).max(initial=0.0) > 1e-3:
        raise NiftiError(f"{path}: label volume has non-integral voxel values")
    if values.size and (rounded.min() < 0 or rounded.max() > MAX_LABEL):
        raise NiftiError(
            f"{path}: label value out of range 0..{MAX_LABEL}"
            f" (found {rounded.min():g}..{rounded.max():g})"
        )
    return LabelMap(data=rounded.astype(np.uint8), spacing=spacing,
                    orientation=raw.orientation)


def save_nifti(volume: ScalarVolume | LabelMap, path: str | Path) -> None:
    """Write a volume so that load_nifti reads back identical data,
    dims, and spacing.  Labels are stored as 8-bit unsigned, scalars as
    32-bit float."""
    if isinstance(volume, LabelMap):
        data = volume.data  # already uint8
    else:
        data = volume.data.astype(np.float32)
    raw = RawNifti(data=data, spacing=volume.spacing.as_tuple(),
                   orientation=volume.orientation)
    write_nifti(raw, path)


# ---------------------------------------------------------------------------
# corpus layout: <case_id>-<seq>.nii.gz for sequences, <case_id>-seg.nii.gz
# for masks; predictions live in their own directory under the same naming
# ---------------------------------------------------------------------------

def seg_filename(case_id: str) -> str:
    return f"{case_id}-seg.nii.gz"


def seq_filename(case_id: str, seq: str) -> str:
    return f"{case_id}-{seq}.nii.gz"


def discover_case_ids(mask_dir: str | Path) -> list[str]:
    """Case ids found via ``*-seg.nii.gz`` files, sorted."""
    mask_dir = Path(mask_dir)
    if not mask_dir.is_dir():
        raise FileNotFoundError(f"mask directory not found: {mask_dir}")
    ids = [p.name[: -len("-seg.nii.gz")] for p in mask_dir.glob("*-seg.nii.gz")]
    return sorted(ids)


def load_case_bundle(
    case_id: str,
    pred_dir: str | Path,
    images_dir: str | Path | None = None,
    sequences: tuple[str, ...] = SEQUENCES,
    gt_dir: str | Path | None = None,
) -> CaseBundle:
    """Assemble a CaseBundle from the standard corpus layout.

    ``pred_dir`` holds the predicted masks, ``images_dir`` the
    sequences, ``gt_dir`` (optional) the ground-truth masks.  Missing
    files raise FileNotFoundError naming the case.
    """
    pred_path = Path(pred_dir) / seg_filename(case_id)
    if not pred_path.exists():
        raise FileNotFoundError(f"case {case_id}: missing prediction {pred_path}")
    prediction = load_nifti(pred_path, kind="label")

    seqs: dict[str, ScalarVolume] = {}
    if images_dir is not None:
        images_dir = Path(images_dir)
        for seq in sequences:
            p = images_dir / seq_filename(case_id, seq)
            if not p.exists():
                raise FileNotFoundError(f"case {case_id}: missing sequence file {p}")
            seqs[seq] = load_nifti(p, kind="scalar")

    gt = None
    if gt_dir is not None:
        p = Path(gt_dir) / seg_filename(case_id)
        if not p.exists():
            raise FileNotFoundError(f"case {case_id}: missing ground truth {p}")
        gt = load_nifti(p, kind="label")

    return CaseBundle(case_id=case_id, prediction=prediction,
                      sequences=seqs, ground_truth=gt)
