"""Lesion-wise Dice and surface agreement, checked against hand-built
cases and the pairwise brute-force oracle."""

import numpy as np
import pytest

from gliopost.metrics import (
    DEFAULT_TOLERANCES_MM,
    ET,
    NETC,
    RC,
    REGIONS_POST_TREATMENT,
    REGIONS_PRE_TREATMENT,
    SNFH,
    TC,
    WT,
    CaseMetrics,
    RegionScorer,
    evaluate_case,
    lesionwise_dice,
    lesionwise_nsd,
    match_lesions,
    read_metrics_csv,
    region_mask,
    write_metrics_csv,
)
from gliopost.volume import LabelMap, Spacing

from oracles import brute_lesionwise, random_blob_mask

SP = Spacing(1.0, 1.0, 1.0)


def _labels(shape):
    return np.zeros(shape, dtype=np.uint8)


# -- regions -----------------------------------------------------------------

def test_region_definitions():
    assert ET.labels == {3}
    assert NETC.labels == {1}
    assert SNFH.labels == {2}
    assert RC.labels == {4}
    assert TC.labels == {1, 3}
    assert WT.labels == {1, 2, 3}
    assert REGIONS_PRE_TREATMENT == (ET, TC, WT, NETC, SNFH)
    assert REGIONS_POST_TREATMENT == (ET, TC, WT, NETC, SNFH, RC)


def test_region_mask_counts():
    seg = _labels((4, 4, 4))
    seg[0, 0, 0] = 1
    seg[1, 0, 0] = 2
    seg[2, 0, 0] = 3
    seg[3, 0, 0] = 4
    lm = LabelMap(data=seg, spacing=SP)
    assert int(region_mask(lm, ET).sum()) == 1
    assert int(region_mask(lm, TC).sum()) == 2
    assert int(region_mask(lm, WT).sum()) == 3
    assert int(region_mask(lm, RC).sum()) == 1
    assert not region_mask(lm, WT)[3, 0, 0]  # resection cavity stays out of WT
    assert not region_mask(LabelMap(data=_labels((2, 2, 2)), spacing=SP), WT).any()


# -- matching ----------------------------------------------------------------

def test_match_both_empty():
    empty = np.zeros((4, 4, 4), dtype=bool)
    match = match_lesions(empty, empty, SP)
    assert match.counts == (0, 0)
    assert lesionwise_dice(match) == 1.0
    assert lesionwise_nsd(match_lesions(empty, empty, SP, tolerances=(1.0,)), 1.0) == 1.0


def test_match_identical_blob():
    mask = np.zeros((8, 8, 8), dtype=bool)
    mask[2:5, 2:5, 2:5] = True
    match = match_lesions(mask, mask, SP, tolerances=(0.5, 1.0))
    assert match.counts == (1, 0)
    assert lesionwise_dice(match) == 1.0
    assert lesionwise_nsd(match, 0.5) == 1.0
    assert lesionwise_nsd(match, 1.0) == 1.0


def test_false_positive_halves_perfect_score():
    gt = np.zeros((20, 8, 8), dtype=bool)
    gt[1:4, 1:4, 1:4] = True
    pred = gt.copy()
    pred[15:17, 5:7, 5:7] = True  # island far beyond the dilation reach
    match = match_lesions(gt, pred, SP, tolerances=(1.0,))
    assert match.counts == (1, 1)
    assert lesionwise_dice(match) == pytest.approx(0.5)
    assert lesionwise_nsd(match, 1.0) == pytest.approx(0.5)


def test_empty_prediction_scores_zero():
    gt = np.zeros((6, 6, 6), dtype=bool)
    gt[1:4, 1:4, 1:4] = True
    match = match_lesions(gt, np.zeros_like(gt), SP, tolerances=(1.0,))
    assert match.counts == (1, 0)
    assert lesionwise_dice(match) == 0.0
    assert lesionwise_nsd(match, 1.0) == 0.0


def test_lesion_merge_boundary():
    # two single-voxel gt components; 3-iteration dilations reach 3 voxels,
    # so their footprints overlap at gap 6 and separate at gap 7
    near = np.zeros((12, 3, 3), dtype=bool)
    near[0, 1, 1] = True
    near[6, 1, 1] = True
    assert match_lesions(near, near, SP).counts == (1, 0)

    far = np.zeros((12, 3, 3), dtype=bool)
    far[0, 1, 1] = True
    far[7, 1, 1] = True
    assert match_lesions(far, far, SP).counts == (2, 0)


def test_equal_overlap_assigns_lowest_lesion_id():
    gt = np.zeros((16, 3, 3), dtype=bool)
    gt[0, 1, 1] = True
    gt[10, 1, 1] = True  # two separate lesions (dilations span x 0..3 and 7..13)
    pred = np.zeros_like(gt)
    pred[2:9, 1, 1] = True  # overlaps lesion 1 on x in {2,3}, lesion 2 on {7,8}
    match = match_lesions(gt, pred, SP)
    assert match.counts == (2, 0)
    assert match.lesions[0].pred_components != ()
    assert match.lesions[1].pred_components == ()


def test_shifted_cube_nsd_tolerances():
    gt = np.zeros((9, 8, 8), dtype=bool)
    gt[2:5, 2:5, 2:5] = True
    pred = np.zeros_like(gt)
    pred[3:6, 2:5, 2:5] = True  # one-voxel shift along x
    match = match_lesions(gt, pred, SP, tolerances=(0.5, 1.0))
    assert lesionwise_dice(match) == pytest.approx(2 * 18 / 54)
    assert lesionwise_nsd(match, 1.0) == pytest.approx(1.0)

    got_half = lesionwise_nsd(match, 0.5)
    _, brute = brute_lesionwise(gt, pred, (1, 1, 1), (0.5, 1.0))
    assert got_half == pytest.approx(brute[0.5], abs=1e-12)
    assert got_half < 1.0


def test_nsd_monotone_in_tolerance():
    rng = np.random.default_rng(5)
    for _ in range(4):
        gt = random_blob_mask(rng, (10, 10, 10), density=0.25)
        pred = random_blob_mask(rng, (10, 10, 10), density=0.25)
        match = match_lesions(gt, pred, SP, tolerances=(0.5, 1.0, 2.0))
        vals = [lesionwise_nsd(match, t) for t in (0.5, 1.0, 2.0)]
        assert vals[0] <= vals[1] + 1e-12 <= vals[2] + 2e-12


def test_adding_false_positive_never_helps():
    rng = np.random.default_rng(9)
    gt = np.zeros((24, 10, 10), dtype=bool)
    gt[2:6, 2:6, 2:6] = True
    pred = np.zeros_like(gt)
    pred[2:6, 2:6, 3:7] = True
    base = match_lesions(gt, pred, SP, tolerances=(1.0,))
    noisy_pred = pred.copy()
    noisy_pred[20:22, 7:9, 7:9] = True
    noisy = match_lesions(gt, noisy_pred, SP, tolerances=(1.0,))
    assert lesionwise_dice(noisy) < lesionwise_dice(base)
    assert lesionwise_nsd(noisy, 1.0) < lesionwise_nsd(base, 1.0)


def test_single_lesion_dice_equals_classical():
    rng = np.random.default_rng(11)
    for _ in range(5):
        gt = np.zeros((10, 10, 10), dtype=bool)
        gt[2:7, 2:7, 2:7] = rng.random((5, 5, 5)) > 0.25
        pred = np.zeros_like(gt)
        pred[2:7, 2:7, 2:7] = rng.random((5, 5, 5)) > 0.25
        # keep each side a single component (or empty) for the comparison
        gt[4, 4, 4] = True
        gt[2:7, 4, 4] = True
        gt[4, 2:7, 4] = True
        pred[4, 4, 4] = True
        pred[2:7, 4, 4] = True
        pred[4, 4, 2:7] = True
        match = match_lesions(gt, pred, SP)
        classical = 2 * int((gt & pred).sum()) / (int(gt.sum()) + int(pred.sum()))
        assert lesionwise_dice(match) == pytest.approx(classical, abs=1e-12)


@pytest.mark.parametrize("spacing", [(1.0, 1.0, 1.0), (1.0, 1.25, 2.5)])
def test_lesionwise_matches_brute_force(spacing):
    rng = np.random.default_rng(202)
    tolerances = (0.5, 1.0)
    for trial in range(10):
        shape = tuple(rng.integers(6, 15, size=3))
        gt = random_blob_mask(rng, shape, density=float(rng.uniform(0.08, 0.3)))
        if trial % 3 == 0:
            pred = gt ^ (rng.random(shape) > 0.9)
        else:
            pred = random_blob_mask(rng, shape, density=float(rng.uniform(0.08, 0.3)))
        match = match_lesions(gt, pred, Spacing(*spacing), tolerances=tolerances)
        dice = lesionwise_dice(match)
        ref_dice, ref_nsd = brute_lesionwise(gt, pred, spacing, tolerances)
        assert dice == pytest.approx(ref_dice, abs=1e-9)
        for tol in tolerances:
            assert lesionwise_nsd(match, tol) == pytest.approx(ref_nsd[tol], abs=1e-9)


def test_nsd_validation():
    empty = np.zeros((3, 3, 3), dtype=bool)
    match = match_lesions(empty, empty, SP, tolerances=(1.0,))
    with pytest.raises(ValueError):
        lesionwise_nsd(match, 0.0)
    mask = empty.copy()
    mask[1, 1, 1] = True
    match = match_lesions(mask, mask, SP, tolerances=(1.0,))
    with pytest.raises(KeyError):
        lesionwise_nsd(match, 2.0)


def test_region_scorer_reuse_matches_fresh_match():
    rng = np.random.default_rng(15)
    gt = random_blob_mask(rng, (12, 12, 12), density=0.2)
    scorer = RegionScorer(gt, SP)
    for _ in range(3):
        pred = random_blob_mask(rng, (12, 12, 12), density=0.2)
        via_scorer = scorer.score(pred, (0.5, 1.0))
        fresh = match_lesions(gt, pred, SP, tolerances=(0.5, 1.0))
        assert via_scorer["LW_Dice"] == lesionwise_dice(fresh)
        assert via_scorer["LW_NSD@0.5"] == lesionwise_nsd(fresh, 0.5)
        assert via_scorer["LW_NSD@1"] == lesionwise_nsd(fresh, 1.0)


# -- per-case evaluation ------------------------------------------------------

def _case(seg):
    return LabelMap(data=seg, spacing=SP)


def test_evaluate_case_perfect_prediction():
    seg = _labels((10, 10, 10))
    seg[2:5, 2:5, 2:5] = 3
    seg[5:7, 2:5, 2:5] = 1
    seg[2:7, 5:8, 2:5] = 2
    cm = evaluate_case(_case(seg), _case(seg), case_id="p")
    assert set(cm.values) == set(
        CaseMetrics.columns(REGIONS_PRE_TREATMENT, DEFAULT_TOLERANCES_MM)
    )
    assert all(v == 1.0 for v in cm.values.values())


def test_evaluate_case_relabel_moves_score_between_regions():
    gt = _labels((8, 8, 8))
    gt[2:5, 2:5, 2:5] = 3
    pred = _labels((8, 8, 8))
    pred[2:5, 2:5, 2:5] = 1  # same voxels called NETC instead of ET
    cm = evaluate_case(_case(pred), _case(gt))
    assert cm.values["LW_Dice_ET"] == 0.0
    assert cm.values["LW_Dice_NETC"] == 0.0  # pure false positive there
    assert cm.values["LW_Dice_TC"] == 1.0
    assert cm.values["LW_Dice_WT"] == 1.0
    assert cm.values["LW_NSD@1_WT"] == 1.0
    assert cm.values["LW_Dice_SNFH"] == 1.0  # empty in both


def test_evaluate_case_empty_prediction():
    gt = _labels((8, 8, 8))
    gt[2:5, 2:5, 2:5] = 3
    pred = _labels((8, 8, 8))
    cm = evaluate_case(_case(pred), _case(gt))
    assert cm.values["LW_Dice_ET"] == 0.0
    assert cm.values["LW_Dice_WT"] == 0.0
    assert cm.values["LW_Dice_SNFH"] == 1.0


def test_evaluate_case_grid_mismatch():
    with pytest.raises(ValueError):
        evaluate_case(_case(_labels((4, 4, 4))), _case(_labels((5, 4, 4))))


def test_metrics_csv_round_trip(tmp_path):
    rng = np.random.default_rng(19)
    cols = CaseMetrics.columns(REGIONS_PRE_TREATMENT, DEFAULT_TOLERANCES_MM)
    rows = [
        CaseMetrics(case_id=f"case-{i}", values={c: float(rng.random()) for c in cols})
        for i in range(4)
    ]
    path = tmp_path / "metrics.csv"
    write_metrics_csv(path, rows)
    back = read_metrics_csv(path)
    assert [r.case_id for r in back] == [r.case_id for r in rows]
    for a, b in zip(back, rows):
        assert a.values == b.values  # repr round trip is exact

    with pytest.raises(ValueError):
        write_metrics_csv(tmp_path / "empty.csv", [])


def test_metrics_columns_layout():
    cols = CaseMetrics.columns((ET, WT), (0.5, 1.0))
    assert cols == [
        "LW_Dice_ET",
        "LW_NSD@0.5_ET",
        "LW_NSD@1_ET",
        "LW_Dice_WT",
        "LW_NSD@0.5_WT",
        "LW_NSD@1_WT",
    ]
