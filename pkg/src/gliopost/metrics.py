"""Region construction and lesion-wise Dice / NSD.

Lesion-wise convention: ground-truth components whose dilations overlap
are merged into one lesion; every prediction component is assigned to
the lesion whose dilated mask it overlaps (largest overlap wins, lowest
lesion id on ties) or counted as a false positive.  Per-lesion scores
are averaged over ground-truth lesions plus false-positive components,
with false positives scoring 0.  A region empty in both masks scores 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .morphology import (
    ComponentLabeling,
    boundary_voxels,
    connected_components,
    dilate,
    euclidean_distance_transform,
)
from .volume import LabelMap, Spacing

DEFAULT_DILATION_ITERS = 3
DEFAULT_CONNECTIVITY = 26
DEFAULT_TOLERANCES_MM = (0.5, 1.0)


@dataclass(frozen=True)
class RegionSpec:
    """A named tumor region as a set of raw labels."""

    name: str
    labels: frozenset[int]


ET = RegionSpec("ET", frozenset({3}))
NETC = RegionSpec("NETC", frozenset({1}))
SNFH = RegionSpec("SNFH", frozenset({2}))
RC = RegionSpec("RC", frozenset({4}))
TC = RegionSpec("TC", frozenset({1, 3}))
WT = RegionSpec("WT", frozenset({1, 2, 3}))

REGIONS_BY_NAME = {r.name: r for r in (ET, NETC, SNFH, RC, TC, WT)}

#: region sets per task; the resection cavity only exists post-treatment
REGIONS_PRE_TREATMENT = (ET, TC, WT, NETC, SNFH)
REGIONS_POST_TREATMENT = (ET, TC, WT, NETC, SNFH, RC)


def region_mask(seg: LabelMap | np.ndarray, region: RegionSpec) -> np.ndarray:
    """Boolean mask of voxels whose label belongs to the region."""
    data = seg.data if isinstance(seg, LabelMap) else np.asarray(seg)
    mask = np.zeros(data.shape, dtype=bool)
    for label in region.labels:
        mask |= data == label
    return mask


@dataclass
class LesionRecord:
    """One merged ground-truth lesion and its matched prediction parts."""

    lesion_id: int
    gt_components: tuple[int, ...]
    pred_components: tuple[int, ...]
    dice: float
    nsd: dict[float, float] = field(default_factory=dict)


@dataclass
class LesionMatchResult:
    """Matched lesions, false-positive components, and the grids needed
    to score them."""

    spacing: Spacing
    gt_cc: ComponentLabeling
    pred_cc: ComponentLabeling
    lesions: list[LesionRecord]
    fp_components: tuple[int, ...]

    @property
    def counts(self) -> tuple[int, int]:
        return (len(self.lesions), len(self.fp_components))

    def gt_lesion_mask(self, lesion: LesionRecord) -> np.ndarray:
        return np.isin(self.gt_cc.labels, lesion.gt_components)

    def pred_lesion_mask(self, lesion: LesionRecord) -> np.ndarray:
        if not lesion.pred_components:
            return np.zeros(self.pred_cc.labels.shape, dtype=bool)
        return np.isin(self.pred_cc.labels, lesion.pred_components)


def _bbox_slices(masks: list[np.ndarray], pad: int, shape: tuple[int, ...]):
    """Joint bounding box of the given masks, padded, clipped to the grid."""
    lo = np.array(shape)
    hi = np.zeros(len(shape), dtype=int)
    any_fg = False
    for m in masks:
        if not m.any():
            continue
        any_fg = True
        idx = np.nonzero(m)
        for a in range(len(shape)):
            lo[a] = min(lo[a], idx[a].min())
            hi[a] = max(hi[a], idx[a].max())
    if not any_fg:
        return None
    return tuple(
        slice(max(int(l) - pad, 0), min(int(h) + pad + 1, n))
        for l, h, n in zip(lo, hi, shape)
    )


def _surface_counts(
    surf_a: np.ndarray,
    surf_b: np.ndarray,
    spacing: Spacing,
    tolerances: tuple[float, ...],
) -> dict[float, float]:
    """Per tolerance: (|a within tol of b| + |b within tol of a|) / (|a| + |b|)."""
    n_a = int(surf_a.sum())
    n_b = int(surf_b.sum())
    if n_a == 0 and n_b == 0:
        return {t: 1.0 for t in tolerances}
    if n_a == 0 or n_b == 0:
        return {t: 0.0 for t in tolerances}
    box = _bbox_slices([surf_a, surf_b], pad=1, shape=surf_a.shape)
    a = surf_a[box]
    b = surf_b[box]
    d_to_b = euclidean_distance_transform(b, spacing)
    d_to_a = euclidean_distance_transform(a, spacing)
    out = {}
    for tol in tolerances:
        hits = int((d_to_b[a] <= tol).sum()) + int((d_to_a[b] <= tol).sum())
        out[tol] = hits / (n_a + n_b)
    return out


def _dice(a: np.ndarray, b: np.ndarray) -> float:
    na = int(a.sum())
    nb = int(b.sum())
    if na == 0 and nb == 0:
        return 1.0
    inter = int((a & b).sum())
    return 2.0 * inter / (na + nb)


class RegionScorer:
    """Lesion-wise scoring of candidate predictions against one fixed
    ground-truth region mask.

    The ground-truth side (components, lesion merge, dilated lesion map,
    per-lesion surfaces and their distance fields) is computed once, so
    scoring many candidate predictions against the same ground truth is
    cheap.  ``match_lesions`` and ``evaluate_case`` are thin wrappers.
    """

    def __init__(
        self,
        gt_mask: np.ndarray,
        spacing: Spacing,
        dilation_iters: int = DEFAULT_DILATION_ITERS,
        connectivity: int = DEFAULT_CONNECTIVITY,
    ):
        self.spacing = spacing
        self.dilation_iters = dilation_iters
        self.connectivity = connectivity
        self.gt_mask = np.asarray(gt_mask, dtype=bool)
        self.gt_cc = connected_components(self.gt_mask, connectivity)

        # merge gt components whose dilations overlap (transitively)
        comp_dilated: dict[int, np.ndarray] = {}
        for c in range(1, self.gt_cc.count + 1):
            comp_dilated[c] = dilate(self.gt_cc.labels == c, dilation_iters, connectivity)
        parent = list(range(self.gt_cc.count + 1))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        comps = sorted(comp_dilated)
        for i, a in enumerate(comps):
            for b in comps[i + 1 :]:
                if find(a) != find(b) and (comp_dilated[a] & comp_dilated[b]).any():
                    parent[find(b)] = find(a)

        groups: dict[int, list[int]] = {}
        for c in comps:
            groups.setdefault(find(c), []).append(c)
        # lesion ids numbered by smallest member component id
        ordered = sorted(groups.values(), key=min)

        self.lesion_members: list[tuple[int, ...]] = [tuple(g) for g in ordered]
        # distinct lesions have disjoint dilated masks by construction
        self.lesion_map = np.zeros(self.gt_mask.shape, dtype=np.int32)
        for lid, members in enumerate(self.lesion_members, start=1):
            for c in members:
                self.lesion_map[comp_dilated[c]] = lid

        self._gt_lesion_masks = [
            np.isin(self.gt_cc.labels, members) for members in self.lesion_members
        ]
        self._gt_surfaces = [boundary_voxels(m) for m in self._gt_lesion_masks]

    @property
    def n_lesions(self) -> int:
        return len(self.lesion_members)

    def match(self, pred_mask: np.ndarray, tolerances: tuple[float, ...] = ()) -> LesionMatchResult:
        """Assign prediction components to lesions and score them."""
        pred_mask = np.asarray(pred_mask, dtype=bool)
        pred_cc = connected_components(pred_mask, self.connectivity)

        assigned: dict[int, list[int]] = {lid: [] for lid in range(1, self.n_lesions + 1)}
        fps: list[int] = []
        for p in range(1, pred_cc.count + 1):
            overlaps = np.bincount(
                self.lesion_map[pred_cc.labels == p], minlength=self.n_lesions + 1
            )
            overlaps[0] = 0
            if overlaps.sum() == 0:
                fps.append(p)
            else:
                assigned[int(np.argmax(overlaps))].append(p)

        lesions = []
        for lid in range(1, self.n_lesions + 1):
            gt_m = self._gt_lesion_masks[lid - 1]
            preds = tuple(assigned[lid])
            if preds:
                pred_m = np.isin(pred_cc.labels, preds)
                dice = _dice(gt_m, pred_m)
                nsd = self._lesion_nsd(lid, pred_m, tolerances)
            else:
                dice = 0.0
                nsd = {t: 0.0 for t in tolerances}
            lesions.append(
                LesionRecord(
                    lesion_id=lid,
                    gt_components=self.lesion_members[lid - 1],
                    pred_components=preds,
                    dice=dice,
                    nsd=nsd,
                )
            )
        return LesionMatchResult(
            spacing=self.spacing,
            gt_cc=self.gt_cc,
            pred_cc=pred_cc,
            lesions=lesions,
            fp_components=tuple(fps),
        )

    def _lesion_nsd(
        self, lid: int, pred_mask: np.ndarray, tolerances: tuple[float, ...]
    ) -> dict[float, float]:
        if not tolerances:
            return {}
        pred_surf = boundary_voxels(pred_mask)
        return _surface_counts(pred_surf, self._gt_surfaces[lid - 1],
                               self.spacing, tuple(tolerances))

    def score(
        self, pred_mask: np.ndarray, tolerances: tuple[float, ...] = DEFAULT_TOLERANCES_MM
    ) -> dict[str, float]:
        """Lesion-wise Dice plus NSD at each tolerance, as a flat dict."""
        match = self.match(pred_mask, tolerances)
        out = {"LW_Dice": lesionwise_dice(match)}
        for tol in tolerances:
            out[f"LW_NSD@{tol:g}"] = lesionwise_nsd(match, tol)
        return out


def match_lesions(
    gt_mask: np.ndarray,
    pred_mask: np.ndarray,
    spacing: Spacing,
    dilation_iters: int = DEFAULT_DILATION_ITERS,
    connectivity: int = DEFAULT_CONNECTIVITY,
    tolerances: tuple[float, ...] = DEFAULT_TOLERANCES_MM,
) -> LesionMatchResult:
    """Match prediction components to dilation-merged ground-truth lesions."""
    scorer = RegionScorer(gt_mask, spacing, dilation_iters, connectivity)
    return scorer.match(np.asarray(pred_mask, dtype=bool), tolerances)


def _aggregate(per_lesion: list[float], n_fp: int, n_lesions: int) -> float:
    if n_lesions == 0 and n_fp == 0:
        return 1.0
    total = sum(per_lesion)  # false positives contribute 0
    return total / (n_lesions + n_fp)


def lesionwise_dice(match: LesionMatchResult) -> float:
    """Mean per-lesion Dice over gt lesions plus false positives."""
    return _aggregate([l.dice for l in match.lesions],
                      len(match.fp_components), len(match.lesions))


def lesionwise_nsd(match: LesionMatchResult, tolerance: float) -> float:
    """Mean per-lesion surface agreement at the given tolerance (mm)."""
    if tolerance <= 0:
        raise ValueError(f"tolerance must be > 0, got {tolerance}")
    values = []
    for lesion in match.lesions:
        if tolerance not in lesion.nsd:
            raise KeyError(
                f"NSD at {tolerance} mm was not computed for this match"
                f" (available: {sorted(lesion.nsd)})"
            )
        values.append(lesion.nsd[tolerance])
    return _aggregate(values, len(match.fp_components), len(match.lesions))


@dataclass
class CaseMetrics:
    """Per-region lesion-wise scores for one case.

    ``values`` maps column names (``LW_Dice_<region>``,
    ``LW_NSD@<tol>_<region>``) to scores in [0, 1].
    """

    case_id: str
    values: dict[str, float]

    @staticmethod
    def columns(regions, tolerances) -> list[str]:
        cols = []
        for r in regions:
            name = r.name if isinstance(r, RegionSpec) else r
            cols.append(f"LW_Dice_{name}")
            cols.extend(f"LW_NSD@{t:g}_{name}" for t in tolerances)
        return cols


def evaluate_case(
    pred: LabelMap,
    gt: LabelMap,
    regions: tuple[RegionSpec, ...] = REGIONS_PRE_TREATMENT,
    tolerances: tuple[float, ...] = DEFAULT_TOLERANCES_MM,
    dilation_iters: int = DEFAULT_DILATION_ITERS,
    connectivity: int = DEFAULT_CONNECTIVITY,
    case_id: str = "",
) -> CaseMetrics:
    """Lesion-wise Dice and NSD for every region of one case."""
    if pred.dims != gt.dims:
        raise ValueError(f"grid mismatch: pred {pred.dims} vs gt {gt.dims}")
    values: dict[str, float] = {}
    for region in regions:
        scorer = RegionScorer(region_mask(gt, region), gt.spacing,
                              dilation_iters, connectivity)
        scores = scorer.score(region_mask(pred, region), tuple(tolerances))
        for key, v in scores.items():
            values[f"{key}_{region.name}"] = v
    return CaseMetrics(case_id=case_id, values=values)


# ---------------------------------------------------------------------------
# CSV schema: one row per case, `case_id` plus one column per region metric
# ---------------------------------------------------------------------------

def write_metrics_csv(path: str | Path, rows: list[CaseMetrics]) -> None:
    if not rows:
        raise ValueError("no metrics rows to write")
    columns = list(rows[0].values.keys())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_id"] + columns)
        for row in rows:
            if list(row.values.keys()) != columns:
                raise ValueError(f"case {row.case_id}: inconsistent metric columns")
            writer.writerow([row.case_id] + [repr(row.values[c]) for c in columns])


def read_metrics_csv(path: str | Path) -> list[CaseMetrics]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "case_id":
            raise ValueError(f"{path}: not a metrics CSV (missing case_id column)")
        columns = header[1:]
        rows = []
        for rec in reader:
            values = {c: float(v) for c, v in zip(columns, rec[1:])}
            rows.append(CaseMetrics(case_id=rec[0], values=values))
    return rows
