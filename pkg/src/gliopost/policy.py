"""Adaptive post-processing policies: fitting, application, persistence.

A policy bundles the feature manifest, the clustering model, per-cluster
minimum component sizes per label, and per-cluster ratio-triggered
relabel rules.  Both stages are fitted by grid search, scoring candidate
outputs with the rank-based objective so that the selected policy never
ranks worse than leaving predictions untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import (
    ClusterModel,
    PcaModel,
    StandardizationStats,
    assign_cluster,
    fit_kmeans,
    fit_pca,
    fit_standardizer,
)
from .metrics import (
    DEFAULT_CONNECTIVITY,
    DEFAULT_DILATION_ITERS,
    DEFAULT_TOLERANCES_MM,
    REGIONS_BY_NAME,
    REGIONS_POST_TREATMENT,
    REGIONS_PRE_TREATMENT,
    WT,
    CaseMetrics,
    RegionScorer,
    RegionSpec,
    region_mask,
)
from .morphology import connected_components, remove_small_components
from .radiomics import (
    ExtractionSettings,
    FeatureMatrix,
    extract_case_features,
    feature_names,
)
from .ranking import rank_candidates
from .volume import MAX_LABEL, TUMOR_LABELS, CaseBundle, LabelMap

POLICY_VERSION = "1"
DEFAULT_PCC_GRID = (0, 10, 20, 50, 75, 100, 150, 200, 300, 500, 750, 1000)
DEFAULT_CUTOFF_GRID = tuple(i * 0.005 for i in range(51))
DEFAULT_TOP_CONFUSIONS = 2
WT_LABELS = tuple(sorted(WT.labels))


@dataclass(frozen=True)
class RankObjective:
    """Metric configuration for the rank-based fitting objective."""

    regions: tuple[RegionSpec, ...] = REGIONS_PRE_TREATMENT
    tolerances: tuple[float, ...] = DEFAULT_TOLERANCES_MM
    dilation_iters: int = DEFAULT_DILATION_ITERS
    connectivity: int = DEFAULT_CONNECTIVITY

    def to_dict(self) -> dict:
        return {
            "regions": [r.name for r in self.regions],
            "tolerances": list(self.tolerances),
            "dilation_iters": self.dilation_iters,
            "connectivity": self.connectivity,
        }

    @staticmethod
    def from_dict(d: dict) -> "RankObjective":
        return RankObjective(
            regions=tuple(REGIONS_BY_NAME[n] for n in d["regions"]),
            tolerances=tuple(float(t) for t in d["tolerances"]),
            dilation_iters=int(d["dilation_iters"]),
            connectivity=int(d["connectivity"]),
        )

    @staticmethod
    def for_task(task: str) -> "RankObjective":
        if task == "gli-post":
            return RankObjective(regions=REGIONS_POST_TREATMENT)
        return RankObjective(regions=REGIONS_PRE_TREATMENT)


@dataclass(frozen=True)
class RelabelRule:
    """Convert all src voxels to dst when volume(src)/volume(WT) is
    below the cutoff, per cluster."""

    cluster: int
    src: int
    dst: int
    cutoff: float

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("relabel rule with src == dst")
        if not (1 <= self.src <= MAX_LABEL and 1 <= self.dst <= MAX_LABEL):
            raise ValueError(f"labels out of range: {self.src} -> {self.dst}")
        if not 0.0 <= self.cutoff <= 1.0:
            raise ValueError(f"cutoff outside [0, 1]: {self.cutoff}")

    def to_dict(self) -> dict:
        return {
            "cluster": self.cluster,
            "src": self.src,
            "dst": self.dst,
            "cutoff": self.cutoff,
        }

    @staticmethod
    def from_dict(d: dict) -> "RelabelRule":
        return RelabelRule(
            cluster=int(d["cluster"]),
            src=int(d["src"]),
            dst=int(d["dst"]),
            cutoff=float(d["cutoff"]),
        )


@dataclass
class FitCase:
    """One training case after clustering: prediction, truth, cluster."""

    case_id: str
    pred: LabelMap
    gt: LabelMap
    cluster: int


@dataclass
class FitReport:
    """Diagnostics from a fitting run, kept for human-readable reports."""

    case_ids: list[str]
    assignments: list[int]
    confusion: np.ndarray
    candidates: list[tuple[int, int]]


@dataclass
class PostProcessPolicy:
    """Everything needed to post-process a new case deterministically."""

    task: str
    settings: ExtractionSettings
    standardizer: StandardizationStats
    pca: PcaModel
    kmeans: ClusterModel
    thresholds: dict[int, dict[int, int]]
    rules: list[RelabelRule]
    objective: RankObjective
    version: str = POLICY_VERSION

    def __post_init__(self):
        for cluster in range(self.kmeans.k):
            if cluster not in self.thresholds:
                raise ValueError(f"thresholds missing cluster {cluster}")
            for label in TUMOR_LABELS:
                if label not in self.thresholds[cluster]:
                    raise ValueError(
                        f"thresholds missing label {label} in cluster {cluster}"
                    )


# ---------------------------------------------------------------------------
# confusion matrix
# ---------------------------------------------------------------------------

def confusion_matrix(pairs) -> np.ndarray:
    """5x5 voxel counts; entry (g, p) counts GT label g predicted as p."""
    n = MAX_LABEL + 1
    counts = np.zeros(n * n, dtype=np.int64)
    for pred, gt in pairs:
        pred_data = pred.data if isinstance(pred, LabelMap) else np.asarray(pred)
        gt_data = gt.data if isinstance(gt, LabelMap) else np.asarray(gt)
        if pred_data.shape != gt_data.shape:
            raise ValueError(
                f"grid mismatch: {pred_data.shape} vs {gt_data.shape}"
            )
        flat = gt_data.astype(np.int64).ravel() * n + pred_data.astype(np.int64).ravel()
        counts += np.bincount(flat, minlength=n * n)
    return counts.reshape(n, n)


def top_confusions(cm: np.ndarray, n: int = DEFAULT_TOP_CONFUSIONS) -> list[tuple[int, int]]:
    """The n largest off-diagonal confusions among tumor labels, as
    (src=predicted, dst=true) candidate relabelings.

    Equal counts are ordered by (true label, predicted label); zero
    entries never qualify.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cm = np.asarray(cm)
    entries = []
    for g in TUMOR_LABELS:
        for p in TUMOR_LABELS:
            if g != p and cm[g, p] > 0:
                entries.append((-int(cm[g, p]), g, p))
    entries.sort()
    return [(p, g) for _, g, p in entries[:n]]


def write_confusion_csv(path: str | Path, cm: np.ndarray) -> None:
    cm = np.asarray(cm)
    with open(path, "w", newline="") as fh:
        fh.write("gt\\pred," + ",".join(str(p) for p in range(cm.shape[1])) + "\n")
        for g in range(cm.shape[0]):
            fh.write(str(g) + "," + ",".join(str(int(v)) for v in cm[g]) + "\n")


# ---------------------------------------------------------------------------
# grid-search fitting
# ---------------------------------------------------------------------------

class _ScorerCache:
    """Ground-truth side of the lesion matching, cached per case/region."""

    def __init__(self, objective: RankObjective):
        self.objective = objective
        self._scorers: dict[tuple[str, str], RegionScorer] = {}

    def score(self, case: FitCase, region: RegionSpec, pred_data: np.ndarray) -> dict[str, float]:
        key = (case.case_id, region.name)
        scorer = self._scorers.get(key)
        if scorer is None:
            scorer = RegionScorer(
                region_mask(case.gt, region),
                case.gt.spacing,
                self.objective.dilation_iters,
                self.objective.connectivity,
            )
            self._scorers[key] = scorer
        raw = scorer.score(region_mask(pred_data, region), self.objective.tolerances)
        return {f"{k}_{region.name}": v for k, v in raw.items()}


def _group_by_cluster(cases: list[FitCase], n_clusters: int) -> dict[int, list[FitCase]]:
    groups: dict[int, list[FitCase]] = {c: [] for c in range(n_clusters)}
    for case in cases:
        if case.cluster not in groups:
            raise ValueError(f"{case.case_id}: cluster {case.cluster} out of range")
        groups[case.cluster].append(case)
    for cluster, members in groups.items():
        if not members:
            raise ValueError(f"cluster {cluster} has no training cases")
    return groups


def _rank_select(per_candidate: dict, grid, key_of) -> object:
    """Pick the grid value whose candidate has the lowest mean rank,
    breaking ties toward the smaller (less destructive) value."""
    result = rank_candidates(per_candidate)
    return min(grid, key=lambda v: (result.scores[key_of(v)], v))


def fit_component_thresholds(
    cases: list[FitCase],
    n_clusters: int,
    grid: tuple[int, ...] = DEFAULT_PCC_GRID,
    objective: RankObjective = RankObjective(),
) -> dict[int, dict[int, int]]:
    """Per cluster and per label, the component size threshold whose
    candidate predictions achieve the best mean rank.

    Candidates are evaluated only on regions containing the label under
    search; the other regions are identical across candidates and would
    contribute equal ranks to every candidate.
    """
    grid = tuple(sorted({int(t) for t in grid}))
    if not grid or grid[0] != 0:
        raise ValueError("threshold grid must contain 0")
    groups = _group_by_cluster(cases, n_clusters)
    cache = _ScorerCache(objective)
    thresholds: dict[int, dict[int, int]] = {}

    for cluster in range(n_clusters):
        members = groups[cluster]
        thresholds[cluster] = {}
        for label in TUMOR_LABELS:
            affected = [r for r in objective.regions if label in r.labels]
            if len(grid) == 1 or not affected:
                thresholds[cluster][label] = grid[0]
                continue

            rows_by_threshold: dict[int, list[CaseMetrics]] = {t: [] for t in grid}
            for case in members:
                mask = case.pred.label_mask(label)
                cc = connected_components(mask, objective.connectivity)
                sig_by_t = {
                    t: frozenset(i for i, s in cc.sizes.items() if s >= t)
                    for t in grid
                }
                metrics_by_sig: dict[frozenset, dict[str, float]] = {}
                for sig in set(sig_by_t.values()):
                    if len(sig) == cc.count:
                        pred_data = case.pred.data
                    else:
                        pred_data = case.pred.data.copy()
                        dropped = mask & ~np.isin(cc.labels, list(sig))
                        pred_data[dropped] = 0
                    values: dict[str, float] = {}
                    for region in affected:
                        values.update(cache.score(case, region, pred_data))
                    metrics_by_sig[sig] = values
                for t in grid:
                    rows_by_threshold[t].append(
                        CaseMetrics(case.case_id, metrics_by_sig[sig_by_t[t]])
                    )

            per_candidate = {f"pcc={t}": rows_by_threshold[t] for t in grid}
            best = _rank_select(per_candidate, grid, lambda t: f"pcc={t}")
            thresholds[cluster][label] = int(best)
    return thresholds


def fit_relabel_rules(
    cases: list[FitCase],
    n_clusters: int,
    candidates: list[tuple[int, int]],
    cutoff_grid: tuple[float, ...] = DEFAULT_CUTOFF_GRID,
    objective: RankObjective = RankObjective(),
) -> list[RelabelRule]:
    """Per cluster and candidate (src, dst) pair, the ratio cutoff whose
    candidate predictions achieve the best mean rank; rules are emitted
    only when the winning cutoff actually fires (> 0).

    Each pair is searched independently on the given predictions, which
    are expected to be the component-filtered ones.
    """
    cutoffs = tuple(sorted({float(c) for c in cutoff_grid}))
    if not cutoffs or cutoffs[0] != 0.0:
        raise ValueError("cutoff grid must contain 0")
    groups = _group_by_cluster(cases, n_clusters)
    cache = _ScorerCache(objective)
    rules: list[RelabelRule] = []

    for cluster in range(n_clusters):
        members = groups[cluster]
        for src, dst in candidates:
            if src == dst:
                raise ValueError(f"candidate pair with src == dst: {src}")
            if len(cutoffs) == 1:
                continue
            affected = [
                r
                for r in objective.regions
                if src in r.labels or dst in r.labels
            ]
            if not affected:
                continue

            rows_by_cutoff: dict[float, list[CaseMetrics]] = {c: [] for c in cutoffs}
            for case in members:
                seg = case.pred.data
                wt_vol = int(np.isin(seg, WT_LABELS).sum())
                src_vol = int((seg == src).sum())
                ratio = src_vol / wt_vol if wt_vol > 0 else None

                base: dict[str, float] = {}
                for region in affected:
                    base.update(cache.score(case, region, seg))
                fired = base
                if ratio is not None and src_vol > 0:
                    changed = seg.copy()
                    changed[changed == src] = dst
                    fired = {}
                    for region in affected:
                        fired.update(cache.score(case, region, changed))

                for c in cutoffs:
                    hits = ratio is not None and ratio < c
                    rows_by_cutoff[c].append(
                        CaseMetrics(case.case_id, fired if hits else base)
                    )

            per_candidate = {f"cutoff={c!r}": rows_by_cutoff[c] for c in cutoffs}
            best = _rank_select(per_candidate, cutoffs, lambda c: f"cutoff={c!r}")
            if best > 0:
                rules.append(
                    RelabelRule(cluster=cluster, src=src, dst=dst, cutoff=float(best))
                )
    return rules


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------

def apply_component_thresholds(
    seg: np.ndarray,
    thresholds: dict[int, int],
    connectivity: int = DEFAULT_CONNECTIVITY,
) -> np.ndarray:
    """Remove, per label, components smaller than the label's threshold.

    Removed voxels become background.  Never adds voxels.
    """
    out = seg.copy()
    for label in sorted(thresholds):
        min_size = thresholds[label]
        if min_size <= 0:
            continue
        mask = out == label
        if not mask.any():
            continue
        kept = remove_small_components(mask, min_size, connectivity)
        out[mask & ~kept] = 0
    return out


def apply_relabel_rules(seg: np.ndarray, rules: list[RelabelRule]) -> np.ndarray:
    """Apply ratio-triggered relabelings in order; each rule sees the
    mask as modified by the previous ones.

    Rules staying inside the whole-tumor label set must leave the WT
    mask voxel-identical; that invariant is asserted here.
    """
    out = seg.copy()
    wt_set = set(WT_LABELS)
    for rule in rules:
        wt_vol = int(np.isin(out, WT_LABELS).sum())
        if wt_vol == 0:
            continue
        src_vol = int((out == rule.src).sum())
        if src_vol / wt_vol >= rule.cutoff:
            continue
        inside_wt = {rule.src, rule.dst} <= wt_set
        wt_before = np.isin(out, WT_LABELS) if inside_wt else None
        out[out == rule.src] = rule.dst
        if inside_wt:
            assert np.array_equal(wt_before, np.isin(out, WT_LABELS))
    return out


def apply_policy(policy: PostProcessPolicy, case: CaseBundle) -> LabelMap:
    """Cluster the case by its features, then run both stages of the
    cluster's post-processing."""
    features = extract_case_features(case, policy.settings)
    cluster = assign_cluster(
        policy.standardizer, policy.pca, policy.kmeans, features.values
    )
    seg = apply_component_thresholds(
        case.prediction.data,
        policy.thresholds[cluster],
        policy.objective.connectivity,
    )
    seg = apply_relabel_rules(seg, [r for r in policy.rules if r.cluster == cluster])
    return case.prediction.with_data(seg)


# ---------------------------------------------------------------------------
# end-to-end fitting
# ---------------------------------------------------------------------------

def fit_policy(
    cases: list[CaseBundle],
    task: str = "gli-pre",
    settings: ExtractionSettings = ExtractionSettings(),
    k_range: tuple[int, ...] = None,
    restarts: int = 10,
    seed: int = 0,
    pcc_grid: tuple[int, ...] = DEFAULT_PCC_GRID,
    cutoff_grid: tuple[float, ...] = DEFAULT_CUTOFF_GRID,
    n_confusions: int = DEFAULT_TOP_CONFUSIONS,
    feature_matrix: FeatureMatrix | None = None,
) -> PostProcessPolicy:
    """Fit the complete policy on training cases that carry ground truth.

    See fit_policy_report for the stages; this variant drops the report.
    """
    policy, _ = fit_policy_report(
        cases,
        task=task,
        settings=settings,
        k_range=k_range,
        restarts=restarts,
        seed=seed,
        pcc_grid=pcc_grid,
        cutoff_grid=cutoff_grid,
        n_confusions=n_confusions,
        feature_matrix=feature_matrix,
    )
    return policy


def fit_policy_report(
    cases: list[CaseBundle],
    task: str = "gli-pre",
    settings: ExtractionSettings = ExtractionSettings(),
    k_range: tuple[int, ...] = None,
    restarts: int = 10,
    seed: int = 0,
    pcc_grid: tuple[int, ...] = DEFAULT_PCC_GRID,
    cutoff_grid: tuple[float, ...] = DEFAULT_CUTOFF_GRID,
    n_confusions: int = DEFAULT_TOP_CONFUSIONS,
    feature_matrix: FeatureMatrix | None = None,
) -> tuple[PostProcessPolicy, FitReport]:
    """Fit the complete policy on training cases that carry ground truth.

    Stages: feature extraction, standardize + PCA + k-means, per-cluster
    component thresholds, confusion-guided relabel rules on the
    component-filtered predictions.  ``feature_matrix`` may supply
    precomputed features (rows matched to cases by case id).
    """
    if len(cases) < 3:
        raise ValueError("policy fitting needs at least 3 cases")
    for case in cases:
        if case.ground_truth is None:
            raise ValueError(f"{case.case_id}: fitting requires ground truth")

    if feature_matrix is None:
        vectors = [extract_case_features(c, settings) for c in cases]
        feature_matrix = FeatureMatrix.from_vectors(vectors)
    else:
        missing = [c.case_id for c in cases if c.case_id not in feature_matrix.case_ids]
        if missing:
            raise ValueError(f"feature matrix missing cases {missing[:5]}")
        feature_matrix = FeatureMatrix.from_vectors(
            [feature_matrix.row(c.case_id) for c in cases]
        )
    if feature_matrix.names != feature_names(settings):
        raise ValueError("feature matrix does not match extraction settings")

    stats = fit_standardizer(feature_matrix.values)
    pca = fit_pca(stats.transform(feature_matrix.values))
    points = pca.project(stats.transform(feature_matrix.values))

    if k_range is None:
        k_range = tuple(k for k in range(2, 11) if k < len(cases))
    kmeans, assignments = fit_kmeans(
        points, k_range=k_range, restarts=restarts, seed=seed
    )

    objective = RankObjective.for_task(task)
    fit_cases = [
        FitCase(
            case_id=case.case_id,
            pred=case.prediction,
            gt=case.ground_truth,
            cluster=int(assignments[i]),
        )
        for i, case in enumerate(cases)
    ]

    thresholds = fit_component_thresholds(
        fit_cases, kmeans.k, pcc_grid, objective
    )

    filtered = [
        FitCase(
            case_id=fc.case_id,
            pred=fc.pred.with_data(
                apply_component_thresholds(
                    fc.pred.data, thresholds[fc.cluster], objective.connectivity
                )
            ),
            gt=fc.gt,
            cluster=fc.cluster,
        )
        for fc in fit_cases
    ]
    cm = confusion_matrix((fc.pred, fc.gt) for fc in filtered)
    candidates = top_confusions(cm, n_confusions)
    rules = fit_relabel_rules(
        filtered, kmeans.k, candidates, cutoff_grid, objective
    )

    policy = PostProcessPolicy(
        task=task,
        settings=settings,
        standardizer=stats,
        pca=pca,
        kmeans=kmeans,
        thresholds=thresholds,
        rules=rules,
        objective=objective,
    )
    report = FitReport(
        case_ids=[c.case_id for c in cases],
        assignments=[int(a) for a in assignments],
        confusion=cm,
        candidates=candidates,
    )
    return policy, report


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _policy_document(policy: PostProcessPolicy) -> dict:
    return {
        "version": policy.version,
        "task": policy.task,
        "feature_manifest": {
            "feature_names": list(feature_names(policy.settings)),
            "settings": policy.settings.to_dict(),
        },
        "standardizer": policy.standardizer.to_dict(),
        "pca": policy.pca.to_dict(),
        "kmeans": policy.kmeans.to_dict(),
        "pcc_thresholds": {
            str(cluster): {str(label): int(t) for label, t in labels.items()}
            for cluster, labels in policy.thresholds.items()
        },
        "relabel_rules": [r.to_dict() for r in policy.rules],
        "metric_config": policy.objective.to_dict(),
    }


def save_policy(policy: PostProcessPolicy, path: str | Path) -> None:
    doc = _policy_document(policy)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_policy(path: str | Path) -> PostProcessPolicy:
    with open(path) as fh:
        doc = json.load(fh)
    version = doc.get("version")
    if version != POLICY_VERSION:
        raise ValueError(f"{path}: unsupported policy version {version!r}")
    settings = ExtractionSettings.from_dict(doc["feature_manifest"]["settings"])
    stored_names = tuple(doc["feature_manifest"]["feature_names"])
    if stored_names != feature_names(settings):
        raise ValueError(f"{path}: feature manifest inconsistent with settings")
    policy = PostProcessPolicy(
        task=doc["task"],
        settings=settings,
        standardizer=StandardizationStats.from_dict(doc["standardizer"]),
        pca=PcaModel.from_dict(doc["pca"]),
        kmeans=ClusterModel.from_dict(doc["kmeans"]),
        thresholds={
            int(cluster): {int(label): int(t) for label, t in labels.items()}
            for cluster, labels in doc["pcc_thresholds"].items()
        },
        rules=[RelabelRule.from_dict(r) for r in doc["relabel_rules"]],
        objective=RankObjective.from_dict(doc["metric_config"]),
        version=version,
    )
    return policy
