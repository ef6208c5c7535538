"""Gray-level texture matrices and their feature sets.

Five families are implemented: co-occurrence (GLCM), run length
(GLRLM), size zone (GLSZM), dependence (GLDM) and neighborhood gray-tone
difference (NGTDM).  Intensities are discretized into a fixed number of
equal-width bins over the masked range; gray levels are the 1-based bin
indices and matrices are sized by the highest occupied level.

Directional families use the 13 unique 3D offsets (one per opposite
pair of the 26-neighborhood); co-occurrence matrices are symmetrized per
offset and features are averaged over offsets.  Neighborhood families
use the full 26-neighborhood.

Degenerate conventions, chosen so constant regions yield finite values:
correlation and MCC are 1 when the region has a single gray level, IMC1
is 0 when both marginal entropies vanish, and NGTDM coarseness saturates
at 1e6 when no gray-tone differences exist.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..morphology import OFFSETS_13, OFFSETS_26

DEFAULT_BIN_COUNT = 32
COARSENESS_MAX = 1.0e6

GLCM_FEATURE_NAMES = (
    "autocorrelation",
    "joint_average",
    "cluster_prominence",
    "cluster_shade",
    "cluster_tendency",
    "contrast",
    "correlation",
    "difference_average",
    "difference_entropy",
    "difference_variance",
    "joint_energy",
    "joint_entropy",
    "imc1",
    "imc2",
    "idm",
    "idmn",
    "id",
    "idn",
    "inverse_variance",
    "maximum_probability",
    "sum_average",
    "sum_entropy",
    "sum_squares",
    "mcc",
)

GLRLM_FEATURE_NAMES = (
    "short_run_emphasis",
    "long_run_emphasis",
    "gray_level_nonuniformity",
    "gray_level_nonuniformity_normalized",
    "run_length_nonuniformity",
    "run_length_nonuniformity_normalized",
    "run_percentage",
    "gray_level_variance",
    "run_variance",
    "run_entropy",
    "low_gray_level_run_emphasis",
    "high_gray_level_run_emphasis",
    "short_run_low_gray_level_emphasis",
    "short_run_high_gray_level_emphasis",
    "long_run_low_gray_level_emphasis",
    "long_run_high_gray_level_emphasis",
)

GLSZM_FEATURE_NAMES = (
    "small_area_emphasis",
    "large_area_emphasis",
    "gray_level_nonuniformity",
    "gray_level_nonuniformity_normalized",
    "size_zone_nonuniformity",
    "size_zone_nonuniformity_normalized",
    "zone_percentage",
    "gray_level_variance",
    "zone_variance",
    "zone_entropy",
    "low_gray_level_zone_emphasis",
    "high_gray_level_zone_emphasis",
    "small_area_low_gray_level_emphasis",
    "small_area_high_gray_level_emphasis",
    "large_area_low_gray_level_emphasis",
    "large_area_high_gray_level_emphasis",
)

GLDM_FEATURE_NAMES = (
    "small_dependence_emphasis",
    "large_dependence_emphasis",
    "gray_level_nonuniformity",
    "dependence_nonuniformity",
    "dependence_nonuniformity_normalized",
    "gray_level_variance",
    "dependence_variance",
    "dependence_entropy",
    "low_gray_level_emphasis",
    "high_gray_level_emphasis",
    "small_dependence_low_gray_level_emphasis",
    "small_dependence_high_gray_level_emphasis",
    "large_dependence_low_gray_level_emphasis",
    "large_dependence_high_gray_level_emphasis",
)

NGTDM_FEATURE_NAMES = (
    "coarseness",
    "contrast",
    "busyness",
    "complexity",
    "strength",
)

TEXTURE_FAMILY_NAMES = {
    "glrlm": GLRLM_FEATURE_NAMES,
    "glszm": GLSZM_FEATURE_NAMES,
    "gldm": GLDM_FEATURE_NAMES,
    "ngtdm": NGTDM_FEATURE_NAMES,
}


def discretize(intensities: np.ndarray, mask: np.ndarray, bin_count: int) -> np.ndarray:
    """Equal-width binning of masked intensities into levels 1..bin_count.

    Returns an int32 grid with 0 outside the mask.  A constant region
    maps to level 1 everywhere.
    """
    if bin_count < 1:
        raise ValueError(f"bin_count must be >= 1, got {bin_count}")
    mask = np.asarray(mask, dtype=bool)
    levels = np.zeros(mask.shape, dtype=np.int32)
    if not mask.any():
        return levels
    values = np.asarray(intensities, dtype=np.float64)[mask]
    lo = values.min()
    hi = values.max()
    if hi == lo:
        levels[mask] = 1
        return levels
    width = (hi - lo) / bin_count
    binned = np.floor((values - lo) / width).astype(np.int32) + 1
    levels[mask] = np.clip(binned, 1, bin_count)
    return levels


def _offset_slices(shape, offset):
    """Slice pair (src, dst) such that grid[src] aligns with the voxel
    displaced by ``offset``: grid[dst][k] is grid[src][k] shifted."""
    src = []
    dst = []
    for n, o in zip(shape, offset):
        if o >= 0:
            src.append(slice(0, n - o))
            dst.append(slice(o, n))
        else:
            src.append(slice(-o, n))
            dst.append(slice(0, n + o))
    return tuple(src), tuple(dst)


def crop_to_mask(levels: np.ndarray, pad: int = 0) -> np.ndarray:
    """View of the level grid restricted to the mask bounding box."""
    idx = np.nonzero(levels)
    if idx[0].size == 0:
        return levels[:0, :0, :0]
    box = tuple(
        slice(max(int(a.min()) - pad, 0), min(int(a.max()) + pad + 1, n))
        for a, n in zip(idx, levels.shape)
    )
    return levels[box]


# ---------------------------------------------------------------------------
# matrix builders
# ---------------------------------------------------------------------------

def glcm_counts(levels: np.ndarray, offset, ng: int) -> np.ndarray:
    """Symmetric co-occurrence counts for one offset (both directions)."""
    src, dst = _offset_slices(levels.shape, offset)
    a = levels[src].ravel()
    b = levels[dst].ravel()
    valid = (a > 0) & (b > 0)
    a = a[valid].astype(np.int64)
    b = b[valid].astype(np.int64)
    flat = np.bincount((a - 1) * ng + (b - 1), minlength=ng * ng)
    counts = flat.reshape(ng, ng)
    return counts + counts.T


def glrlm_counts(levels: np.ndarray, offset, ng: int) -> np.ndarray:
    """Run-length counts along one direction; rows are gray levels,
    column l-1 is the number of maximal runs of length l."""
    mask = levels > 0
    if not mask.any():
        return np.zeros((ng, 1), dtype=np.int64)
    src, dst = _offset_slices(levels.shape, offset)
    continued = np.zeros(levels.shape, dtype=bool)
    continued[dst] = mask[dst] & mask[src] & (levels[dst] == levels[src])
    starts = mask & ~continued

    coords = np.argwhere(starts)
    start_levels = levels[starts].astype(np.int64)
    lengths = np.ones(coords.shape[0], dtype=np.int64)
    step = np.asarray(offset, dtype=np.int64)
    shape = np.asarray(levels.shape, dtype=np.int64)
    pos = coords.astype(np.int64)
    alive = np.arange(coords.shape[0])
    while alive.size:
        nxt = pos[alive] + step
        inside = np.all((nxt >= 0) & (nxt < shape), axis=1)
        alive = alive[inside]
        nxt = nxt[inside]
        same = levels[nxt[:, 0], nxt[:, 1], nxt[:, 2]] == start_levels[alive]
        alive = alive[same]
        if alive.size:
            lengths[alive] += 1
            pos[alive] += step

    counts = np.zeros((ng, int(lengths.max())), dtype=np.int64)
    np.add.at(counts, (start_levels - 1, lengths - 1), 1)
    return counts


def glszm_counts(levels: np.ndarray, ng: int) -> np.ndarray:
    """Size-zone counts; a zone is a 26-connected set of equal level."""
    structure = np.ones((3, 3, 3), dtype=bool)
    zone_levels = []
    zone_sizes = []
    for g in np.unique(levels[levels > 0]):
        labeled, n = ndimage.label(levels == g, structure=structure)
        if n == 0:
            continue
        sizes = np.bincount(labeled.ravel())[1:]
        zone_levels.extend([int(g)] * n)
        zone_sizes.extend(int(s) for s in sizes)
    if not zone_sizes:
        return np.zeros((ng, 1), dtype=np.int64)
    counts = np.zeros((ng, max(zone_sizes)), dtype=np.int64)
    for g, s in zip(zone_levels, zone_sizes):
        counts[g - 1, s - 1] += 1
    return counts


def gldm_counts(levels: np.ndarray, ng: int, alpha: int = 0) -> np.ndarray:
    """Dependence counts; the dependence size of a voxel is 1 plus the
    number of 26-neighbors within ``alpha`` gray levels of it."""
    mask = levels > 0
    if not mask.any():
        return np.zeros((ng, 1), dtype=np.int64)
    dependent = np.zeros(levels.shape, dtype=np.int64)
    lv = levels.astype(np.int64)
    for off in OFFSETS_26:
        src, dst = _offset_slices(levels.shape, off)
        hit = mask[src] & mask[dst] & (np.abs(lv[src] - lv[dst]) <= alpha)
        dependent[src] += hit
    size = dependent[mask] + 1
    glv = lv[mask]
    counts = np.zeros((ng, int(size.max())), dtype=np.int64)
    np.add.at(counts, (glv - 1, size - 1), 1)
    return counts


def ngtdm_table(levels: np.ndarray, ng: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-level voxel counts n_i and absolute gray-tone differences s_i.

    Only voxels with at least one masked 26-neighbor participate; the
    difference is against the mean level of those neighbors.
    """
    mask = levels > 0
    nbr_sum = np.zeros(levels.shape, dtype=np.float64)
    nbr_cnt = np.zeros(levels.shape, dtype=np.int64)
    lv = levels.astype(np.float64)
    for off in OFFSETS_26:
        src, dst = _offset_slices(levels.shape, off)
        nbr_sum[src] += np.where(mask[dst], lv[dst], 0.0)
        nbr_cnt[src] += mask[dst]
    valid = mask & (nbr_cnt > 0)
    n_i = np.zeros(ng, dtype=np.int64)
    s_i = np.zeros(ng, dtype=np.float64)
    if not valid.any():
        return n_i, s_i
    vl = levels[valid].astype(np.int64)
    mean_nbr = nbr_sum[valid] / nbr_cnt[valid]
    np.add.at(n_i, vl - 1, 1)
    np.add.at(s_i, vl - 1, np.abs(vl - mean_nbr))
    return n_i, s_i


# ---------------------------------------------------------------------------
# feature computations
# ---------------------------------------------------------------------------

def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _glcm_features_one(counts: np.ndarray, ng: int) -> dict[str, float]:
    p = counts.astype(np.float64) / counts.sum()
    i = np.arange(1, ng + 1, dtype=np.float64)
    ii, jj = np.meshgrid(i, i, indexing="ij")
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    ux = float((i * px).sum())
    uy = float((i * py).sum())
    sigx = float(np.sqrt(((i - ux) ** 2 * px).sum()))
    sigy = float(np.sqrt(((i - uy) ** 2 * py).sum()))

    k_sum = np.arange(2, 2 * ng + 1, dtype=np.float64)
    p_sum = np.zeros(k_sum.size)
    k_diff = np.arange(0, ng, dtype=np.float64)
    p_diff = np.zeros(k_diff.size)
    np.add.at(p_sum, (ii + jj).astype(np.int64).ravel() - 2, p.ravel())
    np.add.at(p_diff, np.abs(ii - jj).astype(np.int64).ravel(), p.ravel())

    hx = _entropy(px)
    hy = _entropy(py)
    hxy = _entropy(p)
    outer = px[:, None] * py[None, :]
    nz = p > 0
    hxy1 = float(-(p[nz] * np.log2(outer[nz])).sum())
    nzo = outer > 0
    hxy2 = float(-(outer[nzo] * np.log2(outer[nzo])).sum())

    diff_avg = float((k_diff * p_diff).sum())
    features = {
        "autocorrelation": float((p * ii * jj).sum()),
        "joint_average": ux,
        "cluster_prominence": float((p * (ii + jj - ux - uy) ** 4).sum()),
        "cluster_shade": float((p * (ii + jj - ux - uy) ** 3).sum()),
        "cluster_tendency": float((p * (ii + jj - ux - uy) ** 2).sum()),
        "contrast": float((p * (ii - jj) ** 2).sum()),
        "difference_average": diff_avg,
        "difference_entropy": _entropy(p_diff),
        "difference_variance": float(((k_diff - diff_avg) ** 2 * p_diff).sum()),
        "joint_energy": float((p**2).sum()),
        "joint_entropy": hxy,
        "idm": float((p / (1.0 + (ii - jj) ** 2)).sum()),
        "idmn": float((p / (1.0 + ((ii - jj) / ng) ** 2)).sum()),
        "id": float((p / (1.0 + np.abs(ii - jj))).sum()),
        "idn": float((p / (1.0 + np.abs(ii - jj) / ng)).sum()),
        "maximum_probability": float(p.max()),
        "sum_average": float((k_sum * p_sum).sum()),
        "sum_entropy": _entropy(p_sum),
        "sum_squares": float((p * (ii - ux) ** 2).sum()),
    }

    if sigx > 0 and sigy > 0:
        features["correlation"] = ((p * ii * jj).sum() - ux * uy) / (sigx * sigy)
    else:
        features["correlation"] = 1.0

    off_diag = np.abs(ii - jj) > 0
    features["inverse_variance"] = float(
        (p[off_diag] / (ii - jj)[off_diag] ** 2).sum()
    )

    hmax = max(hx, hy)
    features["imc1"] = (hxy - hxy1) / hmax if hmax > 0 else 0.0
    imc2_arg = 1.0 - np.exp(-2.0 * (hxy2 - hxy))
    features["imc2"] = float(np.sqrt(imc2_arg)) if imc2_arg > 0 else 0.0

    occupied = px > 0
    if occupied.sum() < 2:
        features["mcc"] = 1.0
    else:
        pr = p[np.ix_(occupied, occupied)]
        pxr = px[occupied]
        pyr = py[occupied]
        q = (pr / (pxr[:, None] * pyr[None, :])) @ pr.T
        eig = np.sort(np.linalg.eigvals(q).real)
        features["mcc"] = float(np.sqrt(max(eig[-2], 0.0)))
    return features


def glcm_features(
    intensities: np.ndarray,
    mask: np.ndarray,
    bin_count: int = DEFAULT_BIN_COUNT,
    distances: tuple[int, ...] = (1,),
    offsets: tuple[tuple[int, int, int], ...] = OFFSETS_13,
) -> dict[str, float]:
    """The 24 co-occurrence features, averaged over all offsets that
    produce at least one voxel pair.

    If no offset produces a pair (scattered single voxels), all features
    are 0 except the degenerate conventions correlation = mcc = 1.
    """
    levels = crop_to_mask(discretize(intensities, mask, bin_count))
    ng = int(levels.max()) if levels.size else 0
    per_angle = []
    if ng > 0:
        for d in distances:
            for off in offsets:
                counts = glcm_counts(levels, tuple(d * o for o in off), ng)
                if counts.sum() > 0:
                    per_angle.append(_glcm_features_one(counts, ng))
    if not per_angle:
        out = {name: 0.0 for name in GLCM_FEATURE_NAMES}
        out["correlation"] = 1.0
        out["mcc"] = 1.0
        return out
    return {
        name: float(np.mean([f[name] for f in per_angle]))
        for name in GLCM_FEATURE_NAMES
    }


def _row_col_stats(counts: np.ndarray):
    """Shared scaffolding for run/zone/dependence style matrices."""
    total = counts.sum()
    p = counts.astype(np.float64) / total
    gray = np.arange(1, counts.shape[0] + 1, dtype=np.float64)
    size = np.arange(1, counts.shape[1] + 1, dtype=np.float64)
    pg = p.sum(axis=1)
    ps = p.sum(axis=0)
    return total, p, gray, size, pg, ps


def _glrlm_features_one(counts: np.ndarray, n_voxels: int) -> dict[str, float]:
    nr, p, gray, length, pg, pl = _row_col_stats(counts)
    cg = counts.sum(axis=1).astype(np.float64)
    cl = counts.sum(axis=0).astype(np.float64)
    gg, ll = np.meshgrid(gray, length, indexing="ij")
    mu_g = float((pg * gray).sum())
    mu_l = float((pl * length).sum())
    return {
        "short_run_emphasis": float((p / ll**2).sum()),
        "long_run_emphasis": float((p * ll**2).sum()),
        "gray_level_nonuniformity": float((cg**2).sum() / nr),
        "gray_level_nonuniformity_normalized": float((pg**2).sum()),
        "run_length_nonuniformity": float((cl**2).sum() / nr),
        "run_length_nonuniformity_normalized": float((pl**2).sum()),
        "run_percentage": float(nr / n_voxels),
        "gray_level_variance": float((pg * (gray - mu_g) ** 2).sum()),
        "run_variance": float((pl * (length - mu_l) ** 2).sum()),
        "run_entropy": _entropy(p.ravel()),
        "low_gray_level_run_emphasis": float((p / gg**2).sum()),
        "high_gray_level_run_emphasis": float((p * gg**2).sum()),
        "short_run_low_gray_level_emphasis": float((p / (gg**2 * ll**2)).sum()),
        "short_run_high_gray_level_emphasis": float((p * gg**2 / ll**2).sum()),
        "long_run_low_gray_level_emphasis": float((p * ll**2 / gg**2).sum()),
        "long_run_high_gray_level_emphasis": float((p * gg**2 * ll**2).sum()),
    }


def glrlm_features(
    intensities: np.ndarray,
    mask: np.ndarray,
    bin_count: int = DEFAULT_BIN_COUNT,
    offsets: tuple[tuple[int, int, int], ...] = OFFSETS_13,
) -> dict[str, float]:
    """The 16 run-length features, averaged over the 13 directions."""
    levels = crop_to_mask(discretize(intensities, mask, bin_count))
    n_voxels = int((levels > 0).sum())
    if n_voxels == 0:
        return {name: 0.0 for name in GLRLM_FEATURE_NAMES}
    ng = int(levels.max())
    per_angle = [
        _glrlm_features_one(glrlm_counts(levels, off, ng), n_voxels)
        for off in offsets
    ]
    return {
        name: float(np.mean([f[name] for f in per_angle]))
        for name in GLRLM_FEATURE_NAMES
    }


def glszm_features(
    intensities: np.ndarray,
    mask: np.ndarray,
    bin_count: int = DEFAULT_BIN_COUNT,
) -> dict[str, float]:
    """The 16 size-zone features of the single 26-connected zone matrix."""
    levels = crop_to_mask(discretize(intensities, mask, bin_count))
    n_voxels = int((levels > 0).sum())
    if n_voxels == 0:
        return {name: 0.0 for name in GLSZM_FEATURE_NAMES}
    counts = glszm_counts(levels, int(levels.max()))
    nz, p, gray, size, pg, ps = _row_col_stats(counts)
    cg = counts.sum(axis=1).astype(np.float64)
    cs = counts.sum(axis=0).astype(np.float64)
    gg, ss = np.meshgrid(gray, size, indexing="ij")
    mu_g = float((pg * gray).sum())
    mu_s = float((ps * size).sum())
    return {
        "small_area_emphasis": float((p / ss**2).sum()),
        "large_area_emphasis": float((p * ss**2).sum()),
        "gray_level_nonuniformity": float((cg**2).sum() / nz),
        "gray_level_nonuniformity_normalized": float((pg**2).sum()),
        "size_zone_nonuniformity": float((cs**2).sum() / nz),
        "size_zone_nonuniformity_normalized": float((ps**2).sum()),
        "zone_percentage": float(nz / n_voxels),
        "gray_level_variance": float((pg * (gray - mu_g) ** 2).sum()),
        "zone_variance": float((ps * (size - mu_s) ** 2).sum()),
        "zone_entropy": _entropy(p.ravel()),
        "low_gray_level_zone_emphasis": float((p / gg**2).sum()),
        "high_gray_level_zone_emphasis": float((p * gg**2).sum()),
        "small_area_low_gray_level_emphasis": float((p / (gg**2 * ss**2)).sum()),
        "small_area_high_gray_level_emphasis": float((p * gg**2 / ss**2).sum()),
        "large_area_low_gray_level_emphasis": float((p * ss**2 / gg**2).sum()),
        "large_area_high_gray_level_emphasis": float((p * gg**2 * ss**2).sum()),
    }


def gldm_features(
    intensities: np.ndarray,
    mask: np.ndarray,
    bin_count: int = DEFAULT_BIN_COUNT,
    alpha: int = 0,
) -> dict[str, float]:
    """The 14 dependence features over the 26-neighborhood."""
    levels = crop_to_mask(discretize(intensities, mask, bin_count))
    if not (levels > 0).any():
        return {name: 0.0 for name in GLDM_FEATURE_NAMES}
    counts = gldm_counts(levels, int(levels.max()), alpha)
    nz, p, gray, size, pg, pd = _row_col_stats(counts)
    cg = counts.sum(axis=1).astype(np.float64)
    cd = counts.sum(axis=0).astype(np.float64)
    gg, dd = np.meshgrid(gray, size, indexing="ij")
    mu_g = float((pg * gray).sum())
    mu_d = float((pd * size).sum())
    return {
        "small_dependence_emphasis": float((p / dd**2).sum()),
        "large_dependence_emphasis": float((p * dd**2).sum()),
        "gray_level_nonuniformity": float((cg**2).sum() / nz),
        "dependence_nonuniformity": float((cd**2).sum() / nz),
        "dependence_nonuniformity_normalized": float((pd**2).sum()),
        "gray_level_variance": float((pg * (gray - mu_g) ** 2).sum()),
        "dependence_variance": float((pd * (size - mu_d) ** 2).sum()),
        "dependence_entropy": _entropy(p.ravel()),
        "low_gray_level_emphasis": float((p / gg**2).sum()),
        "high_gray_level_emphasis": float((p * gg**2).sum()),
        "small_dependence_low_gray_level_emphasis": float((p / (gg**2 * dd**2)).sum()),
        "small_dependence_high_gray_level_emphasis": float((p * gg**2 / dd**2).sum()),
        "large_dependence_low_gray_level_emphasis": float((p * dd**2 / gg**2).sum()),
        "large_dependence_high_gray_level_emphasis": float((p * gg**2 * dd**2).sum()),
    }


def ngtdm_features(
    intensities: np.ndarray,
    mask: np.ndarray,
    bin_count: int = DEFAULT_BIN_COUNT,
) -> dict[str, float]:
    """The 5 neighborhood gray-tone difference features."""
    levels = crop_to_mask(discretize(intensities, mask, bin_count))
    if not (levels > 0).any():
        return {name: 0.0 for name in NGTDM_FEATURE_NAMES}
    ng = int(levels.max())
    n_i, s_i = ngtdm_table(levels, ng)
    nvp = int(n_i.sum())
    if nvp == 0:
        return {name: 0.0 for name in NGTDM_FEATURE_NAMES}
    p_i = n_i / nvp
    gray = np.arange(1, ng + 1, dtype=np.float64)
    occ = p_i > 0
    ngp = int(occ.sum())

    ps_dot = float((p_i * s_i).sum())
    coarseness = 1.0 / ps_dot if ps_dot > 0 else COARSENESS_MAX
    coarseness = min(coarseness, COARSENESS_MAX)

    if ngp > 1:
        gi, gj = np.meshgrid(gray[occ], gray[occ], indexing="ij")
        pi, pj = np.meshgrid(p_i[occ], p_i[occ], indexing="ij")
        si, sj = np.meshgrid(s_i[occ], s_i[occ], indexing="ij")
        contrast = (
            float((pi * pj * (gi - gj) ** 2).sum())
            / (ngp * (ngp - 1))
            * float(s_i.sum())
            / nvp
        )
        busy_den = float(np.abs(gi * pi - gj * pj).sum())
        busyness = ps_dot / busy_den if busy_den > 0 else 0.0
        complexity = float(
            (np.abs(gi - gj) * (pi * si + pj * sj) / (pi + pj)).sum()
        ) / nvp
        s_sum = float(s_i.sum())
        strength = (
            float(((pi + pj) * (gi - gj) ** 2).sum()) / s_sum if s_sum > 0 else 0.0
        )
    else:
        contrast = 0.0
        busyness = 0.0
        complexity = 0.0
        strength = 0.0

    return {
        "coarseness": coarseness,
        "contrast": contrast,
        "busyness": busyness,
        "complexity": complexity,
        "strength": strength,
    }


def texture_family_features(
    intensities: np.ndarray,
    mask: np.ndarray,
    family: str,
    bin_count: int = DEFAULT_BIN_COUNT,
) -> dict[str, float]:
    """Dispatch to one of the non-GLCM texture families by name."""
    family = family.lower()
    if family == "glrlm":
        return glrlm_features(intensities, mask, bin_count)
    if family == "glszm":
        return glszm_features(intensities, mask, bin_count)
    if family == "gldm":
        return gldm_features(intensities, mask, bin_count)
    if family == "ngtdm":
        return ngtdm_features(intensities, mask, bin_count)
    raise ValueError(f"unknown texture family: {family!r}")
