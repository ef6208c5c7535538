"""Command-line pipeline driver.

Subcommands:
    synth             generate a seeded synthetic corpus
    extract-features  radiomic feature table for a corpus
    fit-policy        fit a post-processing policy on cases with ground truth
    apply             run a saved policy over predicted masks
    evaluate          lesion-wise metrics for predictions against ground truth
    rank              aggregate metric CSVs into mean-rank scores

Option values are resolved as defaults < --config JSON < explicit flags,
and the effective configuration is echoed to <out>/run-config.json (the
thread count is omitted there because it never changes any output).

Exit codes: 0 success, 2 bad configuration, 3 I/O failure, 4 invalid data.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .metrics import (
    DEFAULT_CONNECTIVITY,
    DEFAULT_DILATION_ITERS,
    DEFAULT_TOLERANCES_MM,
    evaluate_case,
    read_metrics_csv,
    write_metrics_csv,
)
from .policy import (
    DEFAULT_CUTOFF_GRID,
    DEFAULT_PCC_GRID,
    DEFAULT_TOP_CONFUSIONS,
    FitReport,
    PostProcessPolicy,
    RankObjective,
    apply_policy,
    fit_policy_report,
    load_policy,
    save_policy,
    write_confusion_csv,
)
from .radiomics import (
    DEFAULT_BIN_COUNT,
    DEFAULT_BIN_WIDTH,
    ExtractionSettings,
    FeatureMatrix,
    extract_case_features,
    read_feature_csv,
    write_feature_csv,
    write_manifest,
)
from .ranking import rank_candidates, write_ranking_csv
from .synth import SynthConfig, generate_case, save_case, write_inventory
from .volume import (
    SEQUENCES,
    TUMOR_LABELS,
    discover_case_ids,
    load_case_bundle,
    load_nifti,
    save_nifti,
    seg_filename,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INVALID = 4

TASKS = ("gli-pre", "gli-post", "ssa")


# ---------------------------------------------------------------------------
# option plumbing
# ---------------------------------------------------------------------------

_REQUIRED = object()


class _ConfigError(Exception):
    pass


def _int(value) -> int:
    if isinstance(value, bool):
        raise ValueError(f"expected an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        return int(value)
    raise ValueError(f"expected an integer, got {value!r}")


def _float(value) -> float:
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        return float(value)
    raise ValueError(f"expected a number, got {value!r}")


def _str(value) -> str:
    if not isinstance(value, str):
        raise ValueError(f"expected a string, got {value!r}")
    return value


def _items(value, item: Callable) -> tuple:
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip()]
        return tuple(item(p) for p in parts)
    if isinstance(value, (list, tuple)):
        return tuple(item(v) for v in value)
    raise ValueError(f"expected a comma-separated list, got {value!r}")


def _ints(value) -> tuple[int, ...]:
    return _items(value, _int)


def _floats(value) -> tuple[float, ...]:
    return _items(value, _float)


def _strs(value) -> tuple[str, ...]:
    return _items(value, _str)


def _passthrough(value):
    """Structured recipe pieces; validated by SynthConfig.from_dict."""
    return value


@dataclass(frozen=True)
class _Opt:
    dest: str
    flag: str | None  # None: settable through --config only
    coerce: Callable
    default: object  # _REQUIRED marks options that must be supplied
    help: str = ""
    choices: tuple = ()
    positional: bool = False


_SYNTH_RECIPE = SynthConfig().to_dict()
_RECIPE_KEYS = tuple(_SYNTH_RECIPE)

_SYNTH_SPEC = (
    _Opt("out", "--out", _str, _REQUIRED, "corpus directory to create"),
    _Opt("cases", "--cases", _int, _REQUIRED, "number of cases to generate"),
    _Opt("seed", "--seed", _int, _SYNTH_RECIPE["seed"], "corpus seed"),
    _Opt("start_index", "--start-index", _int, 0, "index of the first case"),
    _Opt("dims", "--dims", _ints, _SYNTH_RECIPE["dims"],
         "grid size as X,Y,Z voxels"),
    _Opt("spacing", "--spacing", _floats, _SYNTH_RECIPE["spacing"],
         "voxel spacing in mm as DX,DY,DZ"),
    _Opt("lesion_count", "--lesion-count", _ints,
         _SYNTH_RECIPE["lesion_count"], "inclusive MIN,MAX lesions per case"),
    _Opt("lesion_radius", "--lesion-radius", _floats,
         _SYNTH_RECIPE["lesion_radius"], "lesion radius range in voxels"),
    _Opt("axis_scale", "--axis-scale", _floats, _SYNTH_RECIPE["axis_scale"],
         "per-axis ellipsoid scale range"),
    _Opt("shells", None, _passthrough, _SYNTH_RECIPE["shells"]),
    _Opt("islands", None, _passthrough, _SYNTH_RECIPE["islands"]),
    _Opt("swap", None, _passthrough, _SYNTH_RECIPE["swap"]),
    _Opt("jitter", "--jitter", _int, _SYNTH_RECIPE["jitter"],
         "boundary voxels to drop from each prediction"),
    _Opt("island_margin", "--island-margin", _int,
         _SYNTH_RECIPE["island_margin"],
         "minimum Chebyshev distance from islands to true voxels"),
    _Opt("lesion_separation", "--lesion-separation", _float,
         _SYNTH_RECIPE["lesion_separation"],
         "minimum gap between lesion bounding spheres"),
    _Opt("noise_sigma", "--noise-sigma", _float,
         _SYNTH_RECIPE["noise_sigma"], "smoothing sigma of image noise"),
    _Opt("noise_amplitude", "--noise-amplitude", _float,
         _SYNTH_RECIPE["noise_amplitude"], "standard deviation of image noise"),
    _Opt("sequences", "--sequences", _strs, _SYNTH_RECIPE["sequences"],
         "sequence names to synthesize"),
    _Opt("threads", "--threads", _int, 1, "worker processes"),
)

_EXTRACT_SPEC = (
    _Opt("preds", "--preds", _str, _REQUIRED, "directory of predicted masks"),
    _Opt("images", "--images", _str, _REQUIRED, "directory of image sequences"),
    _Opt("out", "--out", _str, _REQUIRED, "output directory"),
    _Opt("bin_width", "--bin-width", _float, DEFAULT_BIN_WIDTH,
         "intensity bin width for first-order features"),
    _Opt("bin_count", "--bin-count", _int, DEFAULT_BIN_COUNT,
         "gray-level count for texture features"),
    _Opt("sequences", "--sequences", _strs, list(SEQUENCES),
         "sequence names to extract from"),
    _Opt("threads", "--threads", _int, 1, "worker processes"),
)

_FIT_SPEC = (
    _Opt("preds", "--preds", _str, _REQUIRED, "directory of predicted masks"),
    _Opt("images", "--images", _str, _REQUIRED, "directory of image sequences"),
    _Opt("gt", "--gt", _str, _REQUIRED, "directory of ground-truth masks"),
    _Opt("out", "--out", _str, _REQUIRED, "output directory"),
    _Opt("task", "--task", _str, "gli-pre", "challenge task", choices=TASKS),
    _Opt("seed", "--seed", _int, 0, "clustering seed"),
    _Opt("restarts", "--restarts", _int, 10, "k-means restarts per k"),
    _Opt("k_range", "--k-range", _ints, [],
         "cluster counts to try (empty: 2..10 as data allows)"),
    _Opt("pcc_grid", "--pcc-grid", _ints, list(DEFAULT_PCC_GRID),
         "candidate component-size thresholds"),
    _Opt("cutoff_grid", "--cutoff-grid", _floats, list(DEFAULT_CUTOFF_GRID),
         "candidate relabel volume-ratio cutoffs"),
    _Opt("confusions", "--confusions", _int, DEFAULT_TOP_CONFUSIONS,
         "how many confusion pairs become relabel candidates"),
    _Opt("bin_width", "--bin-width", _float, DEFAULT_BIN_WIDTH,
         "intensity bin width for first-order features"),
    _Opt("bin_count", "--bin-count", _int, DEFAULT_BIN_COUNT,
         "gray-level count for texture features"),
    _Opt("sequences", "--sequences", _strs, list(SEQUENCES),
         "sequence names to extract from"),
    _Opt("features", "--features", _str, None,
         "precomputed features.csv (skips extraction)"),
    _Opt("threads", "--threads", _int, 1, "worker processes"),
)

_APPLY_SPEC = (
    _Opt("policy", "--policy", _str, _REQUIRED, "policy JSON to apply"),
    _Opt("preds", "--preds", _str, _REQUIRED, "directory of predicted masks"),
    _Opt("images", "--images", _str, _REQUIRED, "directory of image sequences"),
    _Opt("out", "--out", _str, _REQUIRED, "output directory for masks"),
    _Opt("threads", "--threads", _int, 1, "worker processes"),
)

_EVALUATE_SPEC = (
    _Opt("preds", "--preds", _str, _REQUIRED, "directory of predicted masks"),
    _Opt("gt", "--gt", _str, _REQUIRED, "directory of ground-truth masks"),
    _Opt("out", "--out", _str, _REQUIRED, "output directory"),
    _Opt("task", "--task", _str, "gli-pre", "challenge task", choices=TASKS),
    _Opt("tolerances", "--tolerances", _floats, list(DEFAULT_TOLERANCES_MM),
         "surface tolerances in mm"),
    _Opt("dilation", "--dilation", _int, DEFAULT_DILATION_ITERS,
         "lesion-merging dilation iterations"),
    _Opt("connectivity", "--connectivity", _int, DEFAULT_CONNECTIVITY,
         "component connectivity (6, 18 or 26)"),
    _Opt("threads", "--threads", _int, 1, "worker processes"),
)

_RANK_SPEC = (
    _Opt("csvs", None, _strs, _REQUIRED,
         "metric CSVs as name=path (bare paths use the file stem)",
         positional=True),
    _Opt("out", "--out", _str, _REQUIRED, "output directory"),
)


def _merge_config(ns: argparse.Namespace, spec: tuple[_Opt, ...]) -> dict:
    """Resolve option values: defaults, then --config JSON, then flags."""
    by_dest = {opt.dest: opt for opt in spec}
    merged = {
        opt.dest: opt.default for opt in spec if opt.default is not _REQUIRED
    }

    config_path = getattr(ns, "config", None)
    if config_path is not None:
        try:
            with open(config_path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise _ConfigError(f"cannot read config file: {exc}")
        except json.JSONDecodeError as exc:
            raise _ConfigError(f"{config_path}: malformed JSON: {exc}")
        if not isinstance(raw, dict):
            raise _ConfigError(f"{config_path}: top level must be an object")
        for key, value in raw.items():
            if key not in by_dest:
                raise _ConfigError(f"{config_path}: unknown option {key!r}")
            try:
                merged[key] = by_dest[key].coerce(value)
            except (TypeError, ValueError) as exc:
                raise _ConfigError(f"{config_path}: option {key!r}: {exc}")

    for key, value in vars(ns).items():
        if key in by_dest:
            merged[key] = value

    missing = [
        opt.flag or opt.dest
        for opt in spec
        if opt.default is _REQUIRED and opt.dest not in merged
    ]
    if missing:
        raise _ConfigError("missing required options: " + ", ".join(missing))
    for opt in spec:
        if opt.choices and merged[opt.dest] not in opt.choices:
            raise _ConfigError(
                f"option {opt.dest!r} must be one of {list(opt.choices)}, "
                f"got {merged[opt.dest]!r}"
            )
    return merged


def _json_safe(value):
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    return value


def _write_run_config(out_dir: Path, command: str, cfg: dict) -> None:
    echo = {k: _json_safe(v) for k, v in cfg.items() if k != "threads"}
    with open(out_dir / "run-config.json", "w") as fh:
        json.dump({"command": command, "config": echo}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# worker functions (module level so process pools can pickle them)
# ---------------------------------------------------------------------------

def _map_ordered(worker: Callable, items: list, threads: int) -> list:
    """Apply worker to items, results in item order regardless of threads."""
    if threads < 1:
        raise ValueError(f"--threads must be >= 1, got {threads}")
    if threads == 1 or len(items) <= 1:
        return [worker(item) for item in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, items))


def _synth_case(item):
    recipe, index, out_dir = item
    cfg = SynthConfig.from_dict(recipe)
    bundle, inventory = generate_case(cfg, index)
    out = Path(out_dir)
    save_case(bundle, out / "images", out / "preds", out / "gt")
    return bundle.case_id, inventory


def _extract_features_case(item):
    case_id, pred_dir, images_dir, settings_dict = item
    settings = ExtractionSettings.from_dict(settings_dict)
    case = load_case_bundle(case_id, pred_dir, images_dir,
                            sequences=settings.sequences)
    return extract_case_features(case, settings)


def _apply_case(item):
    case_id, policy_path, pred_dir, images_dir, out_dir = item
    policy = load_policy(policy_path)
    case = load_case_bundle(case_id, pred_dir, images_dir,
                            sequences=policy.settings.sequences)
    processed = apply_policy(policy, case)
    save_nifti(processed, Path(out_dir) / seg_filename(case_id))
    return case_id


def _evaluate_metrics_case(item):
    case_id, pred_dir, gt_dir, objective_dict = item
    objective = RankObjective.from_dict(objective_dict)
    gt_path = Path(gt_dir) / seg_filename(case_id)
    if not gt_path.exists():
        raise FileNotFoundError(f"case {case_id}: missing ground truth {gt_path}")
    pred = load_nifti(Path(pred_dir) / seg_filename(case_id), kind="label")
    gt = load_nifti(gt_path, kind="label")
    return evaluate_case(
        pred,
        gt,
        regions=objective.regions,
        tolerances=objective.tolerances,
        dilation_iters=objective.dilation_iters,
        connectivity=objective.connectivity,
        case_id=case_id,
    )


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_synth(cfg: dict) -> int:
    if cfg["cases"] < 0:
        raise ValueError(f"--cases must be >= 0, got {cfg['cases']}")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_run_config(out, "synth", cfg)
    recipe = {key: _json_safe(cfg[key]) for key in _RECIPE_KEYS}
    syn = SynthConfig.from_dict(recipe)
    for sub in ("images", "preds", "gt"):
        (out / sub).mkdir(exist_ok=True)
    if cfg["cases"] == 0:
        log.warning("no cases requested; writing an empty corpus")
        write_inventory(out, syn, {})
        return EXIT_OK
    start = cfg["start_index"]
    items = [(recipe, index, str(out))
             for index in range(start, start + cfg["cases"])]
    results = _map_ordered(_synth_case, items, cfg["threads"])
    write_inventory(out, syn, dict(results))
    log.info("wrote %d cases under %s", cfg["cases"], out)
    return EXIT_OK


def _extract_matrix(cfg: dict, settings: ExtractionSettings,
                    case_ids: list[str]) -> FeatureMatrix:
    items = [(cid, cfg["preds"], cfg["images"], settings.to_dict())
             for cid in case_ids]
    vectors = _map_ordered(_extract_features_case, items, cfg["threads"])
    return FeatureMatrix.from_vectors(vectors)


def _cmd_extract_features(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_run_config(out, "extract-features", cfg)
    settings = ExtractionSettings(
        bin_width=cfg["bin_width"],
        bin_count=cfg["bin_count"],
        sequences=tuple(cfg["sequences"]),
    )
    case_ids = discover_case_ids(cfg["preds"])
    if not case_ids:
        raise ValueError(f"no cases found under {cfg['preds']}")
    matrix = _extract_matrix(cfg, settings, case_ids)
    write_feature_csv(out / "features.csv", matrix)
    write_manifest(out / "feature-manifest.json", settings)
    log.info("extracted %d features for %d cases",
             len(matrix.names), len(case_ids))
    return EXIT_OK


def _format_fit_report(policy: PostProcessPolicy, report: FitReport) -> str:
    k = policy.kmeans.k
    sizes = Counter(report.assignments)
    lines = [
        f"task: {policy.task}",
        f"training cases: {len(report.case_ids)}",
        f"pca components: {policy.pca.n_components}",
        f"clusters: {k} (silhouette {policy.kmeans.silhouette:.4f})",
        "cluster sizes: "
        + ", ".join(f"{c}: {sizes.get(c, 0)}" for c in range(k)),
        "",
        "confusion after component filtering (rows truth, columns prediction):",
        "        " + "".join(f"{p:>12}" for p in range(5)),
    ]
    for g in range(5):
        row = "".join(f"{int(v):>12}" for v in report.confusion[g])
        lines.append(f"  {g:>4}  {row}")
    lines.append("")
    if report.candidates:
        pairs = ", ".join(f"{src}->{dst}" for src, dst in report.candidates)
    else:
        pairs = "none"
    lines.append(f"relabel candidates (src->dst): {pairs}")
    lines.append("")
    lines.append("component-size thresholds:")
    lines.append("  cluster" + "".join(f"  label {l}" for l in TUMOR_LABELS))
    for cluster in range(k):
        cells = "".join(
            f"{policy.thresholds[cluster][l]:>9}" for l in TUMOR_LABELS
        )
        lines.append(f"  {cluster:>7}{cells}")
    lines.append("")
    if policy.rules:
        lines.append("relabel rules:")
        lines.append("  cluster  src  dst   cutoff")
        for rule in policy.rules:
            lines.append(
                f"  {rule.cluster:>7}  {rule.src:>3}  {rule.dst:>3}"
                f"  {rule.cutoff:.4f}"
            )
    else:
        lines.append("relabel rules: none")
    lines.append("")
    return "\n".join(lines)


def _cmd_fit_policy(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_run_config(out, "fit-policy", cfg)
    settings = ExtractionSettings(
        bin_width=cfg["bin_width"],
        bin_count=cfg["bin_count"],
        sequences=tuple(cfg["sequences"]),
    )
    case_ids = discover_case_ids(cfg["preds"])
    if not case_ids:
        raise ValueError(f"no cases found under {cfg['preds']}")
    if cfg["features"]:
        matrix = read_feature_csv(cfg["features"])
    else:
        matrix = _extract_matrix(cfg, settings, case_ids)
    cases = [
        load_case_bundle(cid, cfg["preds"], images_dir=None, gt_dir=cfg["gt"])
        for cid in case_ids
    ]
    policy, report = fit_policy_report(
        cases,
        task=cfg["task"],
        settings=settings,
        k_range=tuple(cfg["k_range"]) or None,
        restarts=cfg["restarts"],
        seed=cfg["seed"],
        pcc_grid=tuple(cfg["pcc_grid"]),
        cutoff_grid=tuple(cfg["cutoff_grid"]),
        n_confusions=cfg["confusions"],
        feature_matrix=matrix,
    )
    save_policy(policy, out / "policy.json")
    write_confusion_csv(out / "confusion.csv", report.confusion)
    (out / "fit-report.txt").write_text(_format_fit_report(policy, report))
    log.info("fitted %d clusters, %d relabel rules; policy at %s",
             policy.kmeans.k, len(policy.rules), out / "policy.json")
    return EXIT_OK


def _cmd_apply(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_run_config(out, "apply", cfg)
    load_policy(cfg["policy"])  # fail before any per-case work
    case_ids = discover_case_ids(cfg["preds"])
    if not case_ids:
        raise ValueError(f"no cases found under {cfg['preds']}")
    items = [(cid, cfg["policy"], cfg["preds"], cfg["images"], str(out))
             for cid in case_ids]
    _map_ordered(_apply_case, items, cfg["threads"])
    log.info("post-processed %d masks into %s", len(case_ids), out)
    return EXIT_OK


def _cmd_evaluate(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_run_config(out, "evaluate", cfg)
    objective = RankObjective(
        regions=RankObjective.for_task(cfg["task"]).regions,
        tolerances=tuple(cfg["tolerances"]),
        dilation_iters=cfg["dilation"],
        connectivity=cfg["connectivity"],
    )
    case_ids = discover_case_ids(cfg["preds"])
    if not case_ids:
        raise ValueError(f"no cases found under {cfg['preds']}")
    items = [(cid, cfg["preds"], cfg["gt"], objective.to_dict())
             for cid in case_ids]
    rows = _map_ordered(_evaluate_metrics_case, items, cfg["threads"])
    write_metrics_csv(out / "metrics.csv", rows)
    log.info("evaluated %d cases into %s", len(case_ids), out / "metrics.csv")
    return EXIT_OK


def _cmd_rank(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_run_config(out, "rank", cfg)
    per_candidate = {}
    for spec in cfg["csvs"]:
        if "=" in spec:
            name, _, path = spec.partition("=")
        else:
            name, path = Path(spec).stem, spec
        if not name:
            raise ValueError(f"empty candidate name in {spec!r}")
        if name in per_candidate:
            raise ValueError(f"duplicate candidate name {name!r}")
        per_candidate[name] = read_metrics_csv(path)
    result = rank_candidates(per_candidate)
    write_ranking_csv(out / "ranking.csv", result)
    for name in sorted(result.candidates,
                       key=lambda n: (result.scores[n], n)):
        print(f"{name}\t{result.scores[name]!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_COMMANDS: dict[str, tuple[tuple[_Opt, ...], Callable[[dict], int], str]] = {
    "synth": (_SYNTH_SPEC, _cmd_synth,
              "generate a seeded synthetic corpus"),
    "extract-features": (_EXTRACT_SPEC, _cmd_extract_features,
                         "compute the radiomic feature table for a corpus"),
    "fit-policy": (_FIT_SPEC, _cmd_fit_policy,
                   "fit a post-processing policy on cases with ground truth"),
    "apply": (_APPLY_SPEC, _cmd_apply,
              "run a saved policy over predicted masks"),
    "evaluate": (_EVALUATE_SPEC, _cmd_evaluate,
                 "score predictions against ground truth"),
    "rank": (_RANK_SPEC, _cmd_rank,
             "aggregate metric CSVs into mean-rank scores"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gliopost",
        description="Adaptive post-processing for multi-label brain "
                    "tumor segmentations.",
    )
    subs = parser.add_subparsers(dest="command", metavar="command")
    for name, (spec, _, blurb) in _COMMANDS.items():
        sub = subs.add_parser(name, help=blurb, description=blurb)
        sub.add_argument("--config", default=argparse.SUPPRESS, metavar="FILE",
                         help="JSON file of option values; explicit flags win")
        for opt in spec:
            if opt.positional:
                sub.add_argument(opt.dest, nargs="*",
                                 default=argparse.SUPPRESS,
                                 metavar="CSV", help=opt.help)
            elif opt.flag is not None:
                kwargs = dict(dest=opt.dest, type=opt.coerce,
                              default=argparse.SUPPRESS, help=opt.help)
                if opt.choices:
                    kwargs["choices"] = opt.choices
                sub.add_argument(opt.flag, **kwargs)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG

    spec, handler, _ = _COMMANDS[ns.command]
    try:
        cfg = _merge_config(ns, spec)
    except _ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG

    try:
        return handler(cfg)
    except json.JSONDecodeError as exc:
        log.error("malformed JSON: %s", exc)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
