"""Heatmap coding and detector metrics (absolute-pixel AP, AKD).

Keypoints are evaluated per channel, one channel per semantic keypoint of a
cloth category (for example ``towel/corner0``).  A detection is a candidate
pixel with a confidence score; ground truth is the set of visible keypoint
positions.  True positives are decided by plain L2 pixel distance with
thresholds of 2, 4 and 8 pixels; distances are deliberately not scaled by
object size.

Heatmaps use integer pixel coordinates: grid cell (row i, col j) holds the
value at point (x=j, y=i).  This differs from the annotation convention of
pixel centres at half-integers by a constant 0.5 px shift, which is far
below the coarsest matching threshold and is the usual convention for dense
per-pixel regression targets.

Average precision follows COCO: greedy matching in descending score order
(each detection takes the nearest still-unmatched ground truth within the
threshold, distance ties broken by ground-truth index), then 101-point
interpolated precision over recall.  For multi-image inputs, matching is per
image but the precision/recall curve is built from the score-pooled
detections of each channel, as COCO does.
"""

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .annotate import COCO_CATEGORY_IDS, load_coco
from .errors import ConfigError, WriteError
from .templates import CANONICAL_KEYPOINTS

DEFAULT_THRESHOLDS = (2.0, 4.0, 8.0)  # px
DEFAULT_SIGMA = 4.0                   # px, heatmap blob width
DECODE_THRESHOLD = 0.01               # minimum probability for a detection


@dataclass(frozen=True)
class Detection:
    """One candidate keypoint: channel name, pixel position, confidence."""

    category: str
    x: float
    y: float
    score: float


@dataclass(frozen=True)
class EvalSample:
    """Everything the metrics need to know about one image.

    ``gt_visible`` maps a channel name to the visible ground-truth positions
    in that image; occluded keypoints are simply absent.
    """

    detections: tuple[Detection, ...]
    gt_visible: dict[str, tuple[tuple[float, float], ...]]


# ---------------------------------------------------------------------------
# heatmaps


def encode_heatmap(keypoints, sigma: float,
                   size: tuple[int, int]) -> np.ndarray:
    """Compose Gaussian blobs by pointwise maximum.

    ``keypoints`` is a sequence of (x, y) positions, ``size`` is
    (width, height).  Cell (i, j) of the returned array equals
    max_k exp(-((j - x_k)^2 + (i - y_k)^2) / (2 sigma^2)), so a keypoint at
    integer coordinates produces an exact 1.0 at its own pixel and the
    composition never exceeds 1.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    width, height = int(size[0]), int(size[1])
    grid = np.zeros((height, width))
    cols = np.arange(width, dtype=float)
    rows = np.arange(height, dtype=float)
    inv = 1.0 / (2.0 * sigma * sigma)
    for x, y in keypoints:
        blob = np.exp(-((cols - x) ** 2)[None, :] * inv
                      - ((rows - y) ** 2)[:, None] * inv)
        np.maximum(grid, blob, out=grid)
    return grid


def decode_heatmap(heatmap: np.ndarray, threshold: float = DECODE_THRESHOLD,
                   category: str = "") -> list[Detection]:
    """Extract 3x3 local maxima with at least ``threshold`` probability.

    A pixel is kept when it is strictly greater than its eight neighbours,
    except that on exact ties the pixel earlier in row-major order wins, so
    a plateau emits only its first pixel.  Detections are returned sorted by
    descending score, score ties again in row-major order.
    """
    h = np.asarray(heatmap, dtype=float)
    if h.ndim != 2:
        raise ValueError(f"heatmap must be 2-D, got shape {h.shape}")
    padded = np.pad(h, 1, constant_values=-np.inf)

    def shifted(di, dj):
        return padded[1 + di:1 + di + h.shape[0], 1 + dj:1 + dj + h.shape[1]]

    keep = h >= threshold
    # neighbours earlier in row-major order must be strictly smaller …
    for di, dj in ((-1, -1), (-1, 0), (-1, 1), (0, -1)):
        keep &= h > shifted(di, dj)
    # … later ones may also tie
    for di, dj in ((0, 1), (1, -1), (1, 0), (1, 1)):
        keep &= h >= shifted(di, dj)

    ii, jj = np.nonzero(keep)
    order = np.lexsort((ii * h.shape[1] + jj, -h[ii, jj]))
    return [Detection(category, float(jj[k]), float(ii[k]),
                      float(h[ii[k], jj[k]])) for k in order]


# ---------------------------------------------------------------------------
# average precision


def _match(detections, gt_visible, threshold: float):
    """Greedy score-order matching; returns (score, is_tp) per detection.

    Output preserves the processing order (descending score, input-order
    ties) so the caller can feed it straight into a PR curve.
    """
    order = sorted(range(len(detections)),
                   key=lambda i: (-detections[i].score, i))
    taken = [False] * len(gt_visible)
    results = []
    for i in order:
        det = detections[i]
        best = None
        for g, (gx, gy) in enumerate(gt_visible):
            if taken[g]:
                continue
            dist = math.hypot(det.x - gx, det.y - gy)
            if dist <= threshold and (best is None or (dist, g) < best):
                best = (dist, g)
        if best is not None:
            taken[best[1]] = True
        results.append((det.score, best is not None))
    return results


def _ap_from_matches(matches, n_gt: int) -> float:
    """101-point interpolated AP from (score, is_tp) pairs in score order."""
    if n_gt == 0:
        return 1.0 if not matches else 0.0
    if not matches:
        return 0.0
    flags = np.array([tp for _, tp in matches], dtype=float)
    tp_cum = np.cumsum(flags)
    recall = tp_cum / n_gt
    precision = tp_cum / np.arange(1, flags.size + 1)
    # interpolated precision: running maximum from the right
    precision = np.maximum.accumulate(precision[::-1])[::-1]
    points = np.linspace(0.0, 1.0, 101)
    idx = np.searchsorted(recall, points, side="left")
    valid = idx < recall.size
    return float(np.where(valid, precision[np.minimum(idx, recall.size - 1)],
                          0.0).mean())


def average_precision(detections, gt_visible, threshold: float) -> float:
    """AP for one pooled collection of detections against visible GT."""
    return _ap_from_matches(_match(list(detections), list(gt_visible),
                                   threshold), len(gt_visible))


def _pooled_ap(samples, category: str, threshold: float) -> tuple[float, int]:
    """Match per image, pool the outcomes, build one curve.

    Returns (ap, matched_count) for the channel at this threshold.
    """
    pooled = []
    n_gt = 0
    for si, sample in enumerate(samples):
        dets = [d for d in sample.detections if d.category == category]
        gts = list(sample.gt_visible.get(category, ()))
        n_gt += len(gts)
        for di, (score, tp) in enumerate(_match(dets, gts, threshold)):
            pooled.append((score, si, di, tp))
    pooled.sort(key=lambda rec: (-rec[0], rec[1], rec[2]))
    matches = [(score, tp) for score, _, _, tp in pooled]
    return (_ap_from_matches(matches, n_gt),
            sum(1 for _, tp in matches if tp))


def mean_ap(samples, categories=None,
            thresholds=DEFAULT_THRESHOLDS) -> float:
    """Mean AP over thresholds and channels, detections pooled per channel.

    Channels without a single visible ground-truth keypoint anywhere are
    excluded from the mean (their AP is undefined), mirroring how COCO skips
    absent categories.  If that leaves no channel at all, the result is 1.0
    for an empty detection set and 0.0 otherwise.
    """
    samples = list(samples)
    if categories is None:
        categories = sorted(
            {c for s in samples for c in s.gt_visible}
            | {d.category for s in samples for d in s.detections}
        )
    aps = []
    for cat in categories:
        if not any(s.gt_visible.get(cat) for s in samples):
            continue
        for thr in thresholds:
            aps.append(_pooled_ap(samples, cat, thr)[0])
    if not aps:
        empty = not any(s.detections for s in samples)
        return 1.0 if empty else 0.0
    return float(np.mean(aps))


# ---------------------------------------------------------------------------
# average keypoint distance


class AkdResult(NamedTuple):
    """Mean distance (None when no pairs accumulated), pair and skip counts."""

    value: float | None
    pairs: int
    skipped: int


def akd(samples) -> AkdResult:
    """Average distance from visible GT to the top-scoring detection.

    For every (image, channel) pair the highest-score detection of the
    channel (score ties resolved by input order) is compared against each
    visible ground-truth keypoint of that channel.  Ground truth in images
    where the channel has no detection at all is skipped, not penalised,
    and the skip count is reported so the bias is visible.
    """
    total = 0.0
    pairs = 0
    skipped = 0
    for sample in samples:
        best: dict[str, Detection] = {}
        for det in sample.detections:
            cur = best.get(det.category)
            if cur is None or det.score > cur.score:
                best[det.category] = det
        for cat, gts in sample.gt_visible.items():
            det = best.get(cat)
            if det is None:
                skipped += len(gts)
                continue
            for gx, gy in gts:
                total += math.hypot(det.x - gx, det.y - gy)
                pairs += 1
    if pairs == 0:
        return AkdResult(None, 0, skipped)
    return AkdResult(total / pairs, pairs, skipped)


# ---------------------------------------------------------------------------
# report assembly


@dataclass(frozen=True)
class EvalReport:
    """Per-channel AP table plus the two headline numbers.

    ``ap`` maps channel name to {threshold string: AP}; channels with no
    visible ground truth hold None.  ``mean_ap`` averages the defined
    entries.  ``akd`` is None when no (detection, visible GT) pair existed.
    """

    ap: dict[str, dict[str, float | None]]
    mean_ap: float
    akd: float | None
    akd_pairs: int
    akd_skipped: int
    counts: dict
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS

    def to_dict(self) -> dict:
        return {
            "ap": self.ap,
            "mean_ap": self.mean_ap,
            "akd": self.akd,
            "akd_pairs": self.akd_pairs,
            "akd_skipped": self.akd_skipped,
            "counts": self.counts,
            "thresholds": list(self.thresholds),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def evaluate(samples, categories=None,
             thresholds=DEFAULT_THRESHOLDS) -> EvalReport:
    """Compute the full report for a set of per-image samples."""
    samples = list(samples)
    if categories is None:
        categories = sorted(
            {c for s in samples for c in s.gt_visible}
            | {d.category for s in samples for d in s.detections}
        )
    ap_table: dict[str, dict[str, float | None]] = {}
    matched = {f"{thr:g}": 0 for thr in thresholds}
    defined = []
    for cat in categories:
        has_gt = any(s.gt_visible.get(cat) for s in samples)
        row: dict[str, float | None] = {}
        for thr in thresholds:
            if has_gt:
                value, n_matched = _pooled_ap(samples, cat, thr)
                row[f"{thr:g}"] = value
                matched[f"{thr:g}"] += n_matched
                defined.append(value)
            else:
                row[f"{thr:g}"] = None
        ap_table[cat] = row
    if defined:
        overall = float(np.mean(defined))
    else:
        overall = 1.0 if not any(s.detections for s in samples) else 0.0
    akd_result = akd(samples)
    counts = {
        "visible_gt": sum(len(g) for s in samples
                          for g in s.gt_visible.values()),
        "detections": sum(len(s.detections) for s in samples),
        "images": len(samples),
        "matched": matched,
    }
    return EvalReport(
        ap=ap_table,
        mean_ap=overall,
        akd=akd_result.value,
        akd_pairs=akd_result.pairs,
        akd_skipped=akd_result.skipped,
        counts=counts,
        thresholds=tuple(thresholds),
    )


def write_report(report: EvalReport, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    except OSError as exc:
        raise WriteError(f"cannot write report to {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# file-level evaluation

# one detections file entry:
# {"image_id": 3, "category_id": 1, "keypoint_name": "corner0",
#  "x": 10.5, "y": 20.0, "score": 0.93}
# The standard COCO results array carries one score per instance, which
# cannot express several independently scored candidates per keypoint, so
# detections are flattened to one entry per candidate instead.


def _channel(category, keypoint_name: str) -> str:
    return f"{category.value}/{keypoint_name}"


def _load_detections(path, image_ids: set[int]) -> dict[int, list[Detection]]:
    """Parse and validate the detections file; ConfigError names the spot."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise WriteError(f"cannot read detections from {path}: {exc}"
                         ) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"detections file is not valid JSON: {exc}") from exc

    if not isinstance(data, list):
        raise ConfigError("detections file must be a JSON array", "")
    id_to_category = {v: k for k, v in COCO_CATEGORY_IDS.items()}
    per_image: dict[int, list[Detection]] = {}
    for i, entry in enumerate(data):
        where = f"/{i}"
        if not isinstance(entry, dict):
            raise ConfigError("detection entry must be an object", where)
        for key in ("image_id", "category_id", "keypoint_name",
                    "x", "y", "score"):
            if key not in entry:
                raise ConfigError(f"missing key {key!r}", f"{where}/{key}")
        if entry["category_id"] not in id_to_category:
            raise ConfigError(f"unknown category_id {entry['category_id']}",
                              f"{where}/category_id")
        category = id_to_category[entry["category_id"]]
        if entry["keypoint_name"] not in CANONICAL_KEYPOINTS[category]:
            raise ConfigError(
                f"unknown keypoint {entry['keypoint_name']!r} for "
                f"{category.value}", f"{where}/keypoint_name")
        if entry["image_id"] not in image_ids:
            raise ConfigError(
                f"image_id {entry['image_id']} not in the ground truth",
                f"{where}/image_id")
        score = entry["score"]
        if not isinstance(score, (int, float)) or not 0.0 < score <= 1.0:
            raise ConfigError("score must lie in (0, 1]", f"{where}/score")
        det = Detection(_channel(category, entry["keypoint_name"]),
                        float(entry["x"]), float(entry["y"]), float(score))
        per_image.setdefault(int(entry["image_id"]), []).append(det)
    return per_image


def evaluate_files(gt_path, pred_path,
                   thresholds=DEFAULT_THRESHOLDS) -> EvalReport:
    """Score a detections file against a ground-truth COCO file.

    The channel universe is every canonical keypoint of every cloth
    category present in the ground truth, so channels the detector never
    fired on still appear in the AP table.
    """
    records = load_coco(gt_path)
    per_image_dets = _load_detections(pred_path,
                                      {rec.image_id for rec in records})

    total_gt = 0
    samples = []
    channels: set[str] = set()
    for rec in records:
        total_gt += len(rec.keypoints)
        channels.update(_channel(rec.category, n)
                        for n in CANONICAL_KEYPOINTS[rec.category])
        gt_visible: dict[str, tuple] = {}
        for kp in rec.keypoints:
            if kp.visible:
                key = _channel(rec.category, kp.name)
                gt_visible.setdefault(key, ())
                gt_visible[key] += ((kp.x, kp.y),)
        samples.append(EvalSample(
            detections=tuple(per_image_dets.get(rec.image_id, ())),
            gt_visible=gt_visible,
        ))

    report = evaluate(samples, categories=sorted(channels),
                      thresholds=thresholds)
    return dataclasses.replace(
        report, counts={**report.counts, "gt": total_gt})


__all__ = [
    "AkdResult",
    "DECODE_THRESHOLD",
    "DEFAULT_SIGMA",
    "DEFAULT_THRESHOLDS",
    "Detection",
    "EvalReport",
    "EvalSample",
    "akd",
    "average_precision",
    "decode_heatmap",
    "encode_heatmap",
    "evaluate",
    "evaluate_files",
    "mean_ap",
    "write_report",
]
