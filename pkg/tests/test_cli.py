"""End-to-end command-line behavior, exit codes, reproducibility."""

import json
import logging
from pathlib import Path

import numpy as np
import pytest

from gliopost.cli import main
from gliopost.metrics import evaluate_case, read_metrics_csv
from gliopost.radiomics import read_feature_csv
from gliopost.volume import load_nifti

RECIPE = {
    "seed": 33,
    "dims": [24, 24, 24],
    "lesion_count": [1, 1],
    "lesion_radius": [5.0, 6.5],
    "shells": [
        {"label": 3, "outer": [0.45, 0.6]},
        {"label": 2, "outer": [1.0, 1.0]},
    ],
    "islands": [{"label": 3, "count": [1, 2], "size": [3, 8]}],
    "island_margin": 5,
}


def _write_recipe(directory: Path, **overrides) -> Path:
    doc = dict(RECIPE, **overrides)
    path = directory / "recipe.json"
    path.write_text(json.dumps(doc))
    return path


def _tree_bytes(root: Path, skip=("run-config.json",)) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name not in skip
    }


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    recipe = _write_recipe(root)
    out = root / "train"
    assert main(["synth", "--config", str(recipe), "--out", str(out),
                 "--cases", "6"]) == 0
    return out


@pytest.fixture(scope="module")
def pipeline(corpus, tmp_path_factory):
    """Run extract / fit / apply / evaluate / rank once for reuse."""
    work = tmp_path_factory.mktemp("pipeline")
    preds = str(corpus / "preds")
    images = str(corpus / "images")
    gt = str(corpus / "gt")

    features = work / "features"
    assert main(["extract-features", "--preds", preds, "--images", images,
                 "--out", str(features)]) == 0

    fit = work / "fit"
    assert main(["fit-policy", "--preds", preds, "--images", images,
                 "--gt", gt, "--out", str(fit),
                 "--k-range", "2", "--restarts", "3", "--seed", "5"]) == 0

    applied = work / "applied"
    assert main(["apply", "--policy", str(fit / "policy.json"),
                 "--preds", preds, "--images", images,
                 "--out", str(applied)]) == 0

    raw_metrics = work / "metrics-raw"
    assert main(["evaluate", "--preds", preds, "--gt", gt,
                 "--out", str(raw_metrics)]) == 0
    post_metrics = work / "metrics-post"
    assert main(["evaluate", "--preds", str(applied), "--gt", gt,
                 "--out", str(post_metrics)]) == 0

    return {
        "work": work,
        "corpus": corpus,
        "features": features,
        "fit": fit,
        "applied": applied,
        "raw_metrics": raw_metrics,
        "post_metrics": post_metrics,
    }


# -- argument and config handling ------------------------------------------------

def test_no_command_is_a_usage_error():
    assert main([]) == 2


def test_help_exits_cleanly(capsys):
    assert main(["synth", "--help"]) == 0
    assert "corpus" in capsys.readouterr().out


def test_missing_required_option(tmp_path):
    assert main(["synth", "--cases", "2"]) == 2
    assert main(["extract-features", "--preds", str(tmp_path)]) == 2
    assert main(["rank", "--out", str(tmp_path)]) == 2


def test_rejected_flag_values(tmp_path):
    out = str(tmp_path / "c")
    assert main(["synth", "--out", out, "--cases", "two"]) == 2
    assert main(["evaluate", "--preds", out, "--gt", out, "--out", out,
                 "--task", "nonsense"]) == 2


def test_config_file_errors(tmp_path):
    out = str(tmp_path / "c")
    bogus = tmp_path / "bogus.json"
    bogus.write_text(json.dumps({"not_an_option": 1}))
    assert main(["synth", "--config", str(bogus), "--out", out,
                 "--cases", "1"]) == 2

    broken = tmp_path / "broken.json"
    broken.write_text("{nope")
    assert main(["synth", "--config", str(broken), "--out", out,
                 "--cases", "1"]) == 2

    listy = tmp_path / "list.json"
    listy.write_text("[1, 2]")
    assert main(["synth", "--config", str(listy), "--out", out,
                 "--cases", "1"]) == 2

    assert main(["synth", "--config", str(tmp_path / "absent.json"),
                 "--out", out, "--cases", "1"]) == 2


def test_flags_override_config_file(tmp_path):
    recipe = _write_recipe(tmp_path, seed=5)
    out = tmp_path / "c"
    assert main(["synth", "--config", str(recipe), "--out", str(out),
                 "--cases", "0", "--seed", "7"]) == 0
    echoed = json.loads((out / "run-config.json").read_text())
    assert echoed["command"] == "synth"
    assert echoed["config"]["seed"] == 7  # flag beats config file
    assert echoed["config"]["islands"] == RECIPE["islands"]  # config beats default
    assert echoed["config"]["cases"] == 0
    assert "threads" not in echoed["config"]


# -- synth ------------------------------------------------------------------------

def test_synth_writes_corpus_layout(corpus):
    for sub in ("images", "preds", "gt"):
        assert (corpus / sub).is_dir()
    inventory = json.loads((corpus / "inventory.json").read_text())
    assert sorted(inventory["cases"]) == [f"case-{i:04d}" for i in range(6)]
    for cid in inventory["cases"]:
        assert (corpus / "preds" / f"{cid}-seg.nii.gz").exists()
        assert (corpus / "gt" / f"{cid}-seg.nii.gz").exists()
        for seq in ("t1c", "t1n", "t2f", "t2w"):
            assert (corpus / "images" / f"{cid}-{seq}.nii.gz").exists()
    assert "run-config.json" in {p.name for p in corpus.iterdir()}


def test_synth_zero_cases_warns_but_succeeds(tmp_path, caplog):
    out = tmp_path / "empty"
    with caplog.at_level(logging.WARNING):
        assert main(["synth", "--out", str(out), "--cases", "0"]) == 0
    assert any("no cases" in r.message for r in caplog.records)
    inventory = json.loads((out / "inventory.json").read_text())
    assert inventory["cases"] == {}


def test_synth_negative_cases_is_invalid(tmp_path):
    assert main(["synth", "--out", str(tmp_path / "c"), "--cases", "-1"]) == 4


def test_synth_reruns_are_byte_identical(tmp_path):
    recipe = _write_recipe(tmp_path)
    runs = {}
    for name, threads in (("a", "1"), ("b", "1"), ("c", "3")):
        out = tmp_path / name
        assert main(["synth", "--config", str(recipe), "--out", str(out),
                     "--cases", "3", "--threads", threads]) == 0
        runs[name] = _tree_bytes(out)
    assert runs["a"] == runs["b"]
    assert runs["a"] == runs["c"]


# -- extract-features ----------------------------------------------------------------

def test_extract_features_table(pipeline):
    features = pipeline["features"]
    matrix = read_feature_csv(features / "features.csv")
    assert len(matrix.case_ids) == 6
    assert len(matrix.names) == 386
    header = (features / "features.csv").read_text().splitlines()[0]
    assert header.split(",")[0] == "case_id"
    assert len(header.split(",")) == 387
    manifest = json.loads((features / "feature-manifest.json").read_text())
    assert len(manifest["feature_names"]) == 386


def test_extract_features_threads_do_not_change_output(pipeline, tmp_path):
    corpus = pipeline["corpus"]
    out = tmp_path / "threaded"
    assert main(["extract-features", "--preds", str(corpus / "preds"),
                 "--images", str(corpus / "images"), "--out", str(out),
                 "--threads", "3"]) == 0
    assert (out / "features.csv").read_bytes() == \
        (pipeline["features"] / "features.csv").read_bytes()


def test_extract_features_io_errors(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    out = str(tmp_path / "out")
    missing = str(tmp_path / "missing")
    assert main(["extract-features", "--preds", missing,
                 "--images", str(empty), "--out", out]) == 3
    assert main(["extract-features", "--preds", str(empty),
                 "--images", str(empty), "--out", out]) == 4


def test_extract_features_names_missing_sequence(tmp_path, caplog):
    recipe = _write_recipe(tmp_path)
    corpus = tmp_path / "one"
    assert main(["synth", "--config", str(recipe), "--out", str(corpus),
                 "--cases", "1"]) == 0
    (corpus / "images" / "case-0000-t2w.nii.gz").unlink()
    with caplog.at_level(logging.ERROR):
        rc = main(["extract-features", "--preds", str(corpus / "preds"),
                   "--images", str(corpus / "images"),
                   "--out", str(tmp_path / "out")])
    assert rc == 3
    assert any("t2w" in r.message and "case-0000" in r.message
               for r in caplog.records)


# -- fit-policy ------------------------------------------------------------------------

def test_fit_policy_outputs(pipeline):
    fit = pipeline["fit"]
    assert (fit / "policy.json").exists()
    assert (fit / "confusion.csv").exists()
    report = (fit / "fit-report.txt").read_text()
    assert "clusters: 2" in report
    assert "component-size thresholds" in report
    policy = json.loads((fit / "policy.json").read_text())
    assert policy["version"] == "1"
    assert policy["kmeans"]["k"] == 2
    # stray blobs run 3..8 voxels while true shells are far larger, so
    # every cluster should settle on the first grid value above 8
    for cluster in ("0", "1"):
        assert policy["pcc_thresholds"][cluster]["3"] == 10


def test_fit_policy_accepts_precomputed_features(pipeline, tmp_path):
    corpus = pipeline["corpus"]
    out = tmp_path / "fit2"
    assert main(["fit-policy", "--preds", str(corpus / "preds"),
                 "--images", str(corpus / "images"),
                 "--gt", str(corpus / "gt"), "--out", str(out),
                 "--k-range", "2", "--restarts", "3", "--seed", "5",
                 "--features", str(pipeline["features"] / "features.csv")]) == 0
    assert (out / "policy.json").read_bytes() == \
        (pipeline["fit"] / "policy.json").read_bytes()


def test_fit_policy_io_and_validation_errors(tmp_path):
    missing = str(tmp_path / "missing")
    empty = tmp_path / "empty"
    empty.mkdir()
    out = str(tmp_path / "out")
    assert main(["fit-policy", "--preds", missing, "--images", missing,
                 "--gt", missing, "--out", out]) == 3
    assert main(["fit-policy", "--preds", str(empty), "--images", str(empty),
                 "--gt", str(empty), "--out", out]) == 4


# -- apply -------------------------------------------------------------------------------

def test_apply_restores_ground_truth_here(pipeline):
    corpus = pipeline["corpus"]
    applied = pipeline["applied"]
    for i in range(6):
        name = f"case-{i:04d}-seg.nii.gz"
        out = load_nifti(applied / name, kind="label")
        gt = load_nifti(corpus / "gt" / name, kind="label")
        assert np.array_equal(out.data, gt.data)


def test_apply_is_thread_invariant(pipeline, tmp_path):
    corpus = pipeline["corpus"]
    out = tmp_path / "threaded"
    assert main(["apply", "--policy", str(pipeline["fit"] / "policy.json"),
                 "--preds", str(corpus / "preds"),
                 "--images", str(corpus / "images"),
                 "--out", str(out), "--threads", "3"]) == 0
    assert _tree_bytes(out) == _tree_bytes(pipeline["applied"])


def test_apply_missing_policy(tmp_path, corpus):
    assert main(["apply", "--policy", str(tmp_path / "nope.json"),
                 "--preds", str(corpus / "preds"),
                 "--images", str(corpus / "images"),
                 "--out", str(tmp_path / "out")]) == 3


# -- evaluate ---------------------------------------------------------------------------

def test_evaluate_matches_direct_scoring(pipeline):
    corpus = pipeline["corpus"]
    rows = read_metrics_csv(pipeline["raw_metrics"] / "metrics.csv")
    by_case = {row.case_id: row for row in rows}
    assert sorted(by_case) == [f"case-{i:04d}" for i in range(6)]

    cid = "case-0000"
    pred = load_nifti(corpus / "preds" / f"{cid}-seg.nii.gz", kind="label")
    gt = load_nifti(corpus / "gt" / f"{cid}-seg.nii.gz", kind="label")
    direct = evaluate_case(pred, gt, case_id=cid)
    assert by_case[cid].values == direct.values


def test_evaluate_post_task_scores_resection_cavity(corpus, tmp_path):
    out = tmp_path / "post"
    assert main(["evaluate", "--preds", str(corpus / "preds"),
                 "--gt", str(corpus / "gt"), "--out", str(out),
                 "--task", "gli-post"]) == 0
    header = (out / "metrics.csv").read_text().splitlines()[0]
    assert "LW_Dice_RC" in header
    assert "LW_NSD@1_RC" in header


def test_evaluate_grid_mismatch_is_invalid(tmp_path, corpus):
    other = tmp_path / "other"
    recipe = _write_recipe(tmp_path, dims=[20, 20, 20], seed=44)
    assert main(["synth", "--config", str(recipe), "--out", str(other),
                 "--cases", "6"]) == 0
    assert main(["evaluate", "--preds", str(corpus / "preds"),
                 "--gt", str(other / "gt"),
                 "--out", str(tmp_path / "out")]) == 4


# -- rank --------------------------------------------------------------------------------

def test_rank_orders_candidates(pipeline, tmp_path, capsys):
    out = tmp_path / "rank"
    raw = str(pipeline["raw_metrics"] / "metrics.csv")
    post = str(pipeline["post_metrics"] / "metrics.csv")
    assert main(["rank", f"identity={raw}", f"fitted={post}",
                 "--out", str(out)]) == 0

    lines = (out / "ranking.csv").read_text().splitlines()
    assert lines[0] == "candidate_id,ranking_score"
    names = [line.split(",")[0] for line in lines[1:]]
    scores = {line.split(",")[0]: float(line.split(",")[1]) for line in lines[1:]}
    assert names == ["fitted", "identity"]
    assert scores["fitted"] < scores["identity"]

    printed = capsys.readouterr().out.splitlines()
    assert printed[0].startswith("fitted\t")
    assert printed[1].startswith("identity\t")


def test_rank_bare_paths_use_file_stem(pipeline, tmp_path):
    raw = Path(pipeline["raw_metrics"] / "metrics.csv")
    post = Path(pipeline["post_metrics"] / "metrics.csv")
    a = tmp_path / "identity.csv"
    b = tmp_path / "fitted.csv"
    a.write_bytes(raw.read_bytes())
    b.write_bytes(post.read_bytes())
    out = tmp_path / "rank"
    assert main(["rank", str(a), str(b), "--out", str(out)]) == 0
    body = (out / "ranking.csv").read_text()
    assert "fitted," in body and "identity," in body

    # identical stems collide
    assert main(["rank", str(raw), str(post), "--out", str(out)]) == 4
