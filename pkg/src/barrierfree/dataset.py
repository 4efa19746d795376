"""Label files, dataset statistics, splits and COCO-style AP.

Ground-truth labels are one text file per image with lines
``class_index cx cy w h`` (normalised to the image). Files may sit under a
season directory (``spring/``, ``summer/``, ...), which tags their records.
"""
import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detection import CLASS_NAMES, BoundingBox, iou, read_names_file

SEASONS = ("spring", "summer", "autumn", "winter")
IOU_THRESHOLDS = np.round(np.linspace(0.5, 0.95, 10), 2)
RECALL_LEVELS = np.linspace(0.0, 1.0, 101)
SIZE_SPLIT_AREA = 96.0 * 96.0
AREA_RANGES = {
    "all": (0.0, math.inf),
    "small": (0.0, SIZE_SPLIT_AREA),
    "large": (SIZE_SPLIT_AREA, math.inf),
}
DEFAULT_IMAGE_SIZE = (640, 512)
_COORD_TOL = 1e-9


class LabelError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotationRecord:
    image_id: str
    class_index: int
    bbox_norm: tuple  # (cx, cy, w, h)
    season: str = None

    def pixel_box(self, width, height):
        cx, cy, w, h = self.bbox_norm
        return BoundingBox(
            (cx - w / 2) * width, (cy - h / 2) * height,
            (cx + w / 2) * width, (cy + h / 2) * height,
        )


@dataclass(frozen=True)
class GroundTruth:
    image_id: str
    class_index: int
    bbox: BoundingBox


@dataclass(frozen=True)
class Prediction:
    image_id: str
    class_index: int
    bbox: BoundingBox
    confidence: float


@dataclass(frozen=True)
class EvalResult:
    ap: float
    ap50: float
    ap75: float
    ap_s: float
    ap_l: float

    COLUMNS = ("AP", "AP50", "AP75", "AP_S", "AP_L")

    def as_row(self):
        return (self.ap, self.ap50, self.ap75, self.ap_s, self.ap_l)


# -- parsing -------------------------------------------------------------------

def parse_label_line(line, image_id, season=None, where=""):
    parts = line.split()
    if len(parts) != 5:
        raise LabelError(f"{where}: expected 5 fields, got {len(parts)}")
    try:
        cls = int(parts[0])
        cx, cy, w, h = (float(v) for v in parts[1:])
    except ValueError:
        raise LabelError(f"{where}: non-numeric field") from None
    if not 0 <= cls < len(CLASS_NAMES):
        raise LabelError(f"{where}: class index {cls} out of range 0..{len(CLASS_NAMES) - 1}")
    if not all(0.0 <= v <= 1.0 for v in (cx, cy, w, h)):
        raise LabelError(f"{where}: coordinate outside [0, 1]")
    if w <= 0 or h <= 0:
        raise LabelError(f"{where}: width and height must be positive")
    if (cx - w / 2 < -_COORD_TOL or cx + w / 2 > 1 + _COORD_TOL
            or cy - h / 2 < -_COORD_TOL or cy + h / 2 > 1 + _COORD_TOL):
        raise LabelError(f"{where}: box extends beyond the image")
    return AnnotationRecord(image_id, cls, (cx, cy, w, h), season)


def parse_annotations(label_dir, names_file=None):
    """Read every ``*.txt`` under ``label_dir`` (sorted) into records.

    The image id is the file stem. Errors carry ``file:line``.
    """
    if names_file is not None:
        read_names_file(names_file)
    root = Path(label_dir)
    if not root.is_dir():
        raise LabelError(f"{root}: not a directory")
    records = []
    for path in sorted(root.rglob("*.txt")):
        rel_parts = path.relative_to(root).parts[:-1]
        season = next((p for p in rel_parts if p in SEASONS), None)
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            if line.strip():
                records.append(parse_label_line(line, path.stem, season, f"{path}:{lineno}"))
    return records


def parse_predictions(lines):
    """Prediction records, one JSON object per line, pixel boxes."""
    preds = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            preds.append(Prediction(
                str(rec["image_id"]), int(rec["class_index"]),
                BoundingBox(float(rec["x_min"]), float(rec["y_min"]),
                            float(rec["x_max"]), float(rec["y_max"])),
                float(rec["confidence"]),
            ))
        except (KeyError, ValueError, TypeError) as exc:
            raise LabelError(f"predictions:{lineno}: {exc!r}") from None
        if not 0 <= preds[-1].class_index < len(CLASS_NAMES):
            raise LabelError(f"predictions:{lineno}: class index out of range")
    return preds


def ground_truth_boxes(records, image_size=DEFAULT_IMAGE_SIZE):
    width, height = image_size
    return [GroundTruth(r.image_id, r.class_index, r.pixel_box(width, height)) for r in records]


# -- statistics and splits -------------------------------------------------------

@dataclass(frozen=True)
class ClassDistribution:
    counts: tuple
    season_counts: dict
    season_images: dict

    @property
    def imbalance_ratio(self):
        nonzero = [c for c in self.counts if c]
        return max(nonzero) / min(nonzero) if nonzero else None


def class_distribution(records):
    counts = [0] * len(CLASS_NAMES)
    season_counts, season_images = {}, {}
    for r in records:
        counts[r.class_index] += 1
        if r.season is not None:
            season_counts.setdefault(r.season, [0] * len(CLASS_NAMES))[r.class_index] += 1
            season_images.setdefault(r.season, set()).add(r.image_id)
    return ClassDistribution(
        tuple(counts),
        {s: tuple(c) for s, c in season_counts.items()},
        {s: len(ids) for s, ids in season_images.items()},
    )


def split_dataset(records, ratio=0.8, seed=0):
    """Seeded image-level split; floor(n * ratio) images go to training."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    ids = sorted({r.image_id for r in records})
    order = np.random.default_rng(seed).permutation(len(ids))
    n_train = math.floor(len(ids) * ratio)
    train_ids = {ids[i] for i in order[:n_train]}
    train = [r for r in records if r.image_id in train_ids]
    held_out = [r for r in records if r.image_id not in train_ids]
    return train, held_out


# -- average precision -------------------------------------------------------------

def _in_range(area, rng):
    return rng[0] <= area < rng[1]


def _group(items):
    out = {}
    for idx, it in enumerate(items):
        out.setdefault((it.class_index, it.image_id), []).append((idx, it))
    return out


def _match_greedy(dets, gts, thr, area_rng):
    """Greedy COCO matching inside one (class, image).

    ``dets`` must already be in descending confidence order. Returns one
    flag per detection: True (TP), False (FP) or None (ignored).
    """
    gt_ignore = [not _in_range(g.bbox.area, area_rng) for g in gts]
    taken = [False] * len(gts)
    flags = []
    for d in dets:
        best, best_key = None, None
        for j, g in enumerate(gts):
            if taken[j]:
                continue
            ov = iou(d.bbox, g.bbox)
            if ov < thr:
                continue
            key = (not gt_ignore[j], ov)
            if best is None or key > best_key:
                best, best_key = j, key
        if best is None:
            flags.append(None if not _in_range(d.bbox.area, area_rng) else False)
        else:
            taken[best] = True
            flags.append(None if gt_ignore[best] else True)
    return flags


def _interpolated_ap(tp_flags, npos):
    """101-point interpolated AP from TP/FP flags in score order."""
    tp = np.cumsum(np.asarray(tp_flags, dtype=np.int64))
    k = np.arange(1, len(tp_flags) + 1)
    recall = tp / npos
    precision = tp / k
    # right-to-left running maximum
    envelope = np.maximum.accumulate(precision[::-1])[::-1] if len(precision) else precision
    idx = np.searchsorted(recall, RECALL_LEVELS, side="left")
    q = np.zeros(len(RECALL_LEVELS))
    valid = idx < len(envelope)
    q[valid] = envelope[idx[valid]]
    return float(q.mean())


def _sorted_predictions(predictions):
    # stable: equal confidences keep input order
    return sorted(enumerate(predictions), key=lambda t: -t[1].confidence)


def _class_ap_table(predictions, ground_truth, matcher, ap_fn):
    """{range: {class: [AP per IoU threshold]}} over classes with GT in range."""
    gt_groups = _group(ground_truth)
    ranked = _sorted_predictions(predictions)
    classes = sorted({g.class_index for g in ground_truth})
    table = {}
    for name, area_rng in AREA_RANGES.items():
        per_class = {}
        for c in classes:
            npos = sum(1 for g in ground_truth if g.class_index == c and _in_range(g.bbox.area, area_rng))
            if npos == 0:
                continue
            dets_c = [(i, p) for i, p in ranked if p.class_index == c]
            aps = []
            for thr in IOU_THRESHOLDS:
                flag_of = {}
                by_image = {}
                for i, p in dets_c:
                    by_image.setdefault(p.image_id, []).append((i, p))
                for image_id, items in by_image.items():
                    gts = [g for _, g in gt_groups.get((c, image_id), [])]
                    flags = matcher([p for _, p in items], gts, thr, area_rng)
                    flag_of.update({i: f for (i, _), f in zip(items, flags)})
                kept = [flag_of[i] for i, _ in dets_c if flag_of[i] is not None]
                aps.append(ap_fn(kept, npos))
            per_class[c] = aps
        table[name] = per_class
    return table


def _summarise(table):
    def mean_over_classes(per_class, pick):
        if not per_class:
            return 0.0
        return float(np.mean([pick(v) for v in per_class.values()]))

    all_ = table["all"]
    return EvalResult(
        ap=mean_over_classes(all_, np.mean),
        ap50=mean_over_classes(all_, lambda v: v[0]),
        ap75=mean_over_classes(all_, lambda v: v[5]),
        ap_s=mean_over_classes(table["small"], np.mean),
        ap_l=mean_over_classes(table["large"], np.mean),
    )


def evaluate_ap(predictions, ground_truth):
    """COCO-style AP over IoU 0.50:0.05:0.95 with a 96x96 size split.

    Matching, per class, image and threshold: predictions in descending
    confidence (ties keep input order) take the unmatched ground truth with
    the highest IoU at or above the threshold, preferring boxes inside the
    evaluated size range. Detections matched to out-of-range ground truth,
    and unmatched detections outside the range, are ignored. Precision is
    read at 101 recall levels from its right-to-left envelope. Classes with
    no ground truth in the range are left out of the class mean; with no
    classes at all the metric is 0.
    """
    return _summarise(_class_ap_table(predictions, ground_truth, _match_greedy, _interpolated_ap))


# -- brute-force oracle ----------------------------------------------------------------

MAX_ORACLE_BOXES = 6


def _match_exhaustive(dets, gts, thr, area_rng):
    """Enumerate every injective detection -> GT assignment and keep the one
    satisfying the greedy rule's constraints (exactly one does)."""
    gt_ignore = [not _in_range(g.bbox.area, area_rng) for g in gts]
    ov = [[iou(d.bbox, g.bbox) for g in gts] for d in dets]

    def pref(i, j):
        return (not gt_ignore[j], ov[i][j])

    valid = []
    for assign in itertools.product([None, *range(len(gts))], repeat=len(dets)):
        used = [a for a in assign if a is not None]
        if len(used) != len(set(used)):
            continue
        ok = True
        for i, a in enumerate(assign):
            earlier = set(x for x in assign[:i] if x is not None)
            free = [j for j in range(len(gts)) if j not in earlier and ov[i][j] >= thr]
            if a is None:
                ok = not free
            else:
                ok = ov[i][a] >= thr and all(
                    pref(i, j) < pref(i, a) or (pref(i, j) == pref(i, a) and j >= a) for j in free
                )
            if not ok:
                break
        if ok:
            valid.append(assign)
    if len(valid) != 1:
        raise AssertionError(f"expected one consistent assignment, found {len(valid)}")
    flags = []
    for i, a in enumerate(valid[0]):
        if a is None:
            flags.append(None if not _in_range(dets[i].bbox.area, area_rng) else False)
        else:
            flags.append(None if gt_ignore[a] else True)
    return flags


def _direct_ap(tp_flags, npos):
    """Interpolated precision at each recall level as a plain max over cutoffs."""
    points = []
    tp = 0
    for k, f in enumerate(tp_flags, start=1):
        tp += bool(f)
        points.append((tp / npos, tp / k))
    total = 0.0
    for r in RECALL_LEVELS:
        total += max((p for rc, p in points if rc >= r), default=0.0)
    return total / len(RECALL_LEVELS)


def ap_oracle(predictions, ground_truth):
    """Independent reference for :func:`evaluate_ap` on tiny instances.

    Refuses (ValueError) when an image carries more than six boxes.
    """
    per_image = Counter(p.image_id for p in predictions) + Counter(g.image_id for g in ground_truth)
    if per_image and max(per_image.values()) > MAX_ORACLE_BOXES:
        raise ValueError(f"oracle limited to {MAX_ORACLE_BOXES} boxes per image")
    order = sorted(range(len(predictions)), key=lambda i: (-predictions[i].confidence, i))
    results = {}
    for name, area_rng in AREA_RANGES.items():
        class_aps = []
        for c in sorted({g.class_index for g in ground_truth}):
            gts_c = [g for g in ground_truth if g.class_index == c]
            npos = sum(_in_range(g.bbox.area, area_rng) for g in gts_c)
            if not npos:
                continue
            ranked = [predictions[i] for i in order if predictions[i].class_index == c]
            per_thr = []
            for thr in IOU_THRESHOLDS:
                flags = [None] * len(ranked)
                for image_id in {p.image_id for p in ranked}:
                    pos = [k for k, p in enumerate(ranked) if p.image_id == image_id]
                    gts = [g for g in gts_c if g.image_id == image_id]
                    for k, f in zip(pos, _match_exhaustive([ranked[k] for k in pos], gts, thr, area_rng)):
                        flags[k] = f
                per_thr.append(_direct_ap([f for f in flags if f is not None], npos))
            class_aps.append(per_thr)
        results[name] = class_aps

    def avg(rows, pick):
        return sum(pick(r) for r in rows) / len(rows) if rows else 0.0

    def mean(r):
        return sum(r) / len(r)

    return EvalResult(
        ap=avg(results["all"], mean),
        ap50=avg(results["all"], lambda r: r[0]),
        ap75=avg(results["all"], lambda r: r[5]),
        ap_s=avg(results["small"], mean),
        ap_l=avg(results["large"], mean),
    )
