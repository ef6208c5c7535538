"""Case-level feature extraction: 14 shape + 4 x 93 intensity/texture.

The feature name order is a stable contract: shape features first, then
per sequence (in configured order) the first-order, GLCM, GLRLM, GLSZM,
GLDM and NGTDM families.  Identifiers are ``shape/<name>`` and
``<seq>/<family>/<name>``.  Cases whose predicted whole-tumor mask has
fewer than two voxels produce the all-zero sentinel vector and are
flagged degenerate.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..metrics import WT, region_mask
from ..volume import SEQUENCES, CaseBundle
from .firstorder import DEFAULT_BIN_WIDTH, FIRSTORDER_FEATURE_NAMES, firstorder_features
from .shape import SHAPE_FEATURE_NAMES, shape_features
from .texture import (
    DEFAULT_BIN_COUNT,
    GLCM_FEATURE_NAMES,
    GLDM_FEATURE_NAMES,
    GLRLM_FEATURE_NAMES,
    GLSZM_FEATURE_NAMES,
    NGTDM_FEATURE_NAMES,
    glcm_features,
    gldm_features,
    glrlm_features,
    glszm_features,
    ngtdm_features,
)

SEQUENCE_FAMILY_NAMES = (
    ("firstorder", FIRSTORDER_FEATURE_NAMES),
    ("glcm", GLCM_FEATURE_NAMES),
    ("glrlm", GLRLM_FEATURE_NAMES),
    ("glszm", GLSZM_FEATURE_NAMES),
    ("gldm", GLDM_FEATURE_NAMES),
    ("ngtdm", NGTDM_FEATURE_NAMES),
)

FEATURES_PER_SEQUENCE = sum(len(names) for _, names in SEQUENCE_FAMILY_NAMES)
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class ExtractionSettings:
    """Knobs that change feature values; recorded in the manifest."""

    bin_width: float = DEFAULT_BIN_WIDTH
    bin_count: int = DEFAULT_BIN_COUNT
    sequences: tuple[str, ...] = SEQUENCES

    def to_dict(self) -> dict:
        return {
            "bin_width": self.bin_width,
            "bin_count": self.bin_count,
            "sequences": list(self.sequences),
        }

    @staticmethod
    def from_dict(d: dict) -> "ExtractionSettings":
        return ExtractionSettings(
            bin_width=float(d["bin_width"]),
            bin_count=int(d["bin_count"]),
            sequences=tuple(d["sequences"]),
        )


def feature_names(settings: ExtractionSettings = ExtractionSettings()) -> tuple[str, ...]:
    """The full ordered identifier list (386 names for 4 sequences)."""
    names = [f"shape/{n}" for n in SHAPE_FEATURE_NAMES]
    for seq in settings.sequences:
        for family, fam_names in SEQUENCE_FAMILY_NAMES:
            names.extend(f"{seq}/{family}/{n}" for n in fam_names)
    return tuple(names)


@dataclass
class FeatureVector:
    """One case's feature values in manifest order."""

    case_id: str
    names: tuple[str, ...]
    values: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.names),):
            raise ValueError(
                f"{self.case_id}: {self.values.shape[0]} values for"
                f" {len(self.names)} names"
            )
        if not np.all(np.isfinite(self.values)):
            bad = [self.names[i] for i in np.nonzero(~np.isfinite(self.values))[0]]
            raise ValueError(f"{self.case_id}: non-finite features {bad[:5]}")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))


@dataclass
class FeatureMatrix:
    """Stacked feature vectors with a shared name order."""

    names: tuple[str, ...]
    case_ids: list[str] = field(default_factory=list)
    values: np.ndarray | None = None
    degenerate: list[bool] = field(default_factory=list)

    @staticmethod
    def from_vectors(vectors: list[FeatureVector]) -> "FeatureMatrix":
        if not vectors:
            raise ValueError("no feature vectors")
        names = vectors[0].names
        for v in vectors[1:]:
            if v.names != names:
                raise ValueError(f"{v.case_id}: feature name order differs")
        return FeatureMatrix(
            names=names,
            case_ids=[v.case_id for v in vectors],
            values=np.vstack([v.values for v in vectors]),
            degenerate=[v.degenerate for v in vectors],
        )

    def row(self, case_id: str) -> FeatureVector:
        i = self.case_ids.index(case_id)
        return FeatureVector(
            case_id=case_id,
            names=self.names,
            values=self.values[i],
            degenerate=self.degenerate[i],
        )


def _masked_sequence_features(
    intensities: np.ndarray,
    mask: np.ndarray,
    settings: ExtractionSettings,
    voxel_volume: float,
) -> list[float]:
    values: list[float] = []
    fo = firstorder_features(intensities, mask, settings.bin_width, voxel_volume)
    values.extend(fo[n] for n in FIRSTORDER_FEATURE_NAMES)
    fam_values = (
        (glcm_features(intensities, mask, settings.bin_count), GLCM_FEATURE_NAMES),
        (glrlm_features(intensities, mask, settings.bin_count), GLRLM_FEATURE_NAMES),
        (glszm_features(intensities, mask, settings.bin_count), GLSZM_FEATURE_NAMES),
        (gldm_features(intensities, mask, settings.bin_count), GLDM_FEATURE_NAMES),
        (ngtdm_features(intensities, mask, settings.bin_count), NGTDM_FEATURE_NAMES),
    )
    for feats, names in fam_values:
        values.extend(feats[n] for n in names)
    return values


def extract_case_features(
    case: CaseBundle,
    settings: ExtractionSettings = ExtractionSettings(),
) -> FeatureVector:
    """Shape features of the predicted whole-tumor mask plus intensity
    and texture features of every sequence restricted to that mask."""
    names = feature_names(settings)
    expected = len(SHAPE_FEATURE_NAMES) + len(settings.sequences) * FEATURES_PER_SEQUENCE
    assert len(names) == expected

    missing = [s for s in settings.sequences if s not in case.sequences]
    if missing:
        raise ValueError(f"{case.case_id}: missing sequences {missing}")

    wt = region_mask(case.prediction, WT)
    if int(wt.sum()) < 2:
        return FeatureVector(
            case_id=case.case_id,
            names=names,
            values=np.zeros(len(names)),
            degenerate=True,
        )

    values: list[float] = []
    shape = shape_features(wt, case.prediction.spacing)
    values.extend(shape[n] for n in SHAPE_FEATURE_NAMES)
    voxel_volume = case.prediction.spacing.voxel_volume
    for seq in settings.sequences:
        values.extend(
            _masked_sequence_features(
                case.sequences[seq].data, wt, settings, voxel_volume
            )
        )
    return FeatureVector(case_id=case.case_id, names=names, values=np.array(values))


# ---------------------------------------------------------------------------
# persistence: feature CSV and extraction manifest
# ---------------------------------------------------------------------------

def write_feature_csv(path: str | Path, matrix: FeatureMatrix) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_id"] + list(matrix.names))
        for i, case_id in enumerate(matrix.case_ids):
            writer.writerow([case_id] + [repr(v) for v in matrix.values[i].tolist()])


def read_feature_csv(path: str | Path) -> FeatureMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "case_id":
            raise ValueError(f"{path}: not a feature CSV")
        names = tuple(header[1:])
        case_ids = []
        rows = []
        for rec in reader:
            case_ids.append(rec[0])
            rows.append([float(v) for v in rec[1:]])
    values = np.array(rows, dtype=np.float64).reshape(len(case_ids), len(names))
    degenerate = [bool(np.all(r == 0.0)) for r in values]
    return FeatureMatrix(
        names=names, case_ids=case_ids, values=values, degenerate=degenerate
    )


def write_manifest(path: str | Path, settings: ExtractionSettings) -> None:
    doc = {
        "version": MANIFEST_VERSION,
        "feature_names": list(feature_names(settings)),
        "settings": settings.to_dict(),
        "connectivity": 26,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path: str | Path) -> tuple[tuple[str, ...], ExtractionSettings]:
    with open(path) as fh:
        doc = json.load(fh)
    settings = ExtractionSettings.from_dict(doc["settings"])
    names = tuple(doc["feature_names"])
    if names != feature_names(settings):
        raise ValueError(f"{path}: manifest names do not match settings")
    return names, settings
