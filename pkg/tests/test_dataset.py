import numpy as np
import pytest

from barrierfree.dataset import (
    IOU_THRESHOLDS,
    GroundTruth,
    LabelError,
    Prediction,
    ap_oracle,
    class_distribution,
    evaluate_ap,
    ground_truth_boxes,
    parse_annotations,
    parse_label_line,
    parse_predictions,
    split_dataset,
)
from barrierfree.detection import BoundingBox, write_names_file

from ap_instances import random_instance


def box(*c):
    return BoundingBox(*c)


class TestLabels:
    def test_valid(self):
        r = parse_label_line("4 0.5 0.5 0.2 0.4", "a")
        assert r.class_index == 4
        assert r.pixel_box(640, 512) == box(256, 153.6, 384, 358.4)

    @pytest.mark.parametrize("line,msg", [
        ("4 0.5 0.5 0.2", "5 fields"),
        ("12 0.5 0.5 0.2 0.2", "out of range"),
        ("x 0.5 0.5 0.2 0.2", "non-numeric"),
        ("1 1.2 0.5 0.2 0.2", "outside"),
        ("1 0.5 0.5 0 0.2", "positive"),
        ("1 0.95 0.5 0.2 0.2", "beyond"),
    ])
    def test_invalid(self, line, msg):
        with pytest.raises(LabelError, match=msg):
            parse_label_line(line, "a", where="f.txt:3")

    def test_directory(self, tmp_path):
        (tmp_path / "winter").mkdir()
        (tmp_path / "winter" / "b.txt").write_text("1 0.5 0.5 0.1 0.1\n\n4 0.2 0.2 0.1 0.1\n")
        (tmp_path / "a.txt").write_text("0 0.5 0.5 0.1 0.1\n")
        write_names_file(tmp_path / "classes.names")
        recs = parse_annotations(tmp_path, tmp_path / "classes.names")
        assert [(r.image_id, r.class_index, r.season) for r in recs] == [
            ("a", 0, None), ("b", 1, "winter"), ("b", 4, "winter")]

    def test_error_location(self, tmp_path):
        (tmp_path / "a.txt").write_text("0 0.5 0.5 0.1 0.1\n0 0.5 0.5 0.1\n")
        with pytest.raises(LabelError, match="a.txt:2"):
            parse_annotations(tmp_path)

    def test_predictions(self):
        preds = parse_predictions([
            '{"image_id": "a", "class_index": 1, "x_min": 0, "y_min": 0, "x_max": 5, "y_max": 5, "confidence": 0.7}',
        ])
        assert preds[0].bbox.area == 25
        with pytest.raises(LabelError, match="predictions:1"):
            parse_predictions(['{"image_id": "a"}'])


class TestStatsAndSplit:
    def records(self, n_images):
        return [parse_label_line(f"{i % 3} 0.5 0.5 0.1 0.1", f"im{i:03d}", "summer") for i in range(n_images)]

    def test_distribution(self):
        dist = class_distribution(self.records(10))
        assert dist.counts[:3] == (4, 3, 3)
        assert dist.imbalance_ratio == pytest.approx(4 / 3)
        assert dist.season_images == {"summer": 10}

    def test_split_sizes(self):
        train, held = split_dataset(self.records(100), 0.8, seed=3)
        assert len({r.image_id for r in train}) == 80
        assert len({r.image_id for r in held}) == 20
        assert not {r.image_id for r in train} & {r.image_id for r in held}

    def test_split_seeded(self):
        a = split_dataset(self.records(50), seed=1)
        assert a == split_dataset(self.records(50), seed=1)
        assert a != split_dataset(self.records(50), seed=2)

    def test_single_image(self):
        train, held = split_dataset(self.records(1))
        assert train == [] and len(held) == 1

    def test_bad_ratio(self):
        with pytest.raises(ValueError):
            split_dataset(self.records(3), ratio=1.0)


class TestAveragePrecision:
    def test_perfect(self):
        gts = [GroundTruth("a", 1, box(0, 0, 50, 50)), GroundTruth("a", 4, box(100, 100, 300, 300))]
        preds = [Prediction(g.image_id, g.class_index, g.bbox, 0.9) for g in gts]
        assert evaluate_ap(preds, gts).as_row() == (1.0, 1.0, 1.0, 1.0, 1.0)

    def test_iou_point_six(self):
        gts = [GroundTruth("a", 1, box(0, 0, 100, 100))]
        preds = [Prediction("a", 1, box(0, 0, 100, 60), 0.9)]
        r = evaluate_ap(preds, gts)
        assert (r.ap50, r.ap75, r.ap_l, r.ap_s) == (1.0, 0.0, pytest.approx(0.3), 0.0)
        assert r.ap == pytest.approx(0.3, abs=1e-12)

    def test_duplicate_is_false_positive(self):
        gts = [GroundTruth("a", 1, box(0, 0, 100, 100))]
        preds = [Prediction("a", 1, box(0, 0, 100, 100), 0.9), Prediction("a", 1, box(0, 0, 100, 100), 0.95)]
        assert evaluate_ap(preds, gts).ap == 1.0  # FP ranked after the full-recall point
        preds.append(Prediction("a", 1, box(0, 0, 100, 99), 0.99))
        r = evaluate_ap(preds, gts)
        assert r.ap50 == 1.0  # the near-copy takes the match
        wrong = [Prediction("a", 1, box(300, 300, 400, 400), 0.99)] + preds[:1]
        assert evaluate_ap(wrong, gts).ap50 == pytest.approx(0.5)

    def test_no_predictions(self):
        gts = [GroundTruth("a", 1, box(0, 0, 10, 10))]
        assert evaluate_ap([], gts).as_row() == (0.0,) * 5

    def test_empty(self):
        assert evaluate_ap([], []).as_row() == (0.0,) * 5

    def test_class_mean(self):
        gts = [GroundTruth("a", 1, box(0, 0, 100, 100)), GroundTruth("a", 2, box(0, 0, 100, 100))]
        preds = [Prediction("a", 1, box(0, 0, 100, 100), 0.9)]
        assert evaluate_ap(preds, gts).ap == pytest.approx(0.5)

    def test_out_of_range_match_ignored(self):
        gts = [GroundTruth("a", 1, box(0, 0, 200, 200)), GroundTruth("a", 1, box(300, 300, 350, 350))]
        preds = [Prediction("a", 1, g.bbox, 0.9) for g in gts]
        r = evaluate_ap(preds, gts)
        assert r.ap_s == 1.0 and r.ap_l == 1.0

    def test_thresholds(self):
        assert IOU_THRESHOLDS.tolist() == [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95]

    def test_pixel_ground_truth(self):
        recs = [parse_label_line("1 0.5 0.5 0.5 0.5", "a")]
        assert ground_truth_boxes(recs, (100, 200))[0].bbox == box(25, 50, 75, 150)

    def test_oracle_agrees(self):
        rng = np.random.default_rng(0)
        for _ in range(60):
            preds, gts = random_instance(rng)
            a = np.array(evaluate_ap(preds, gts).as_row())
            b = np.array(ap_oracle(preds, gts).as_row())
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_oracle_size_limit(self):
        gts = [GroundTruth("a", 1, box(i, 0, i + 1, 1)) for i in range(7)]
        with pytest.raises(ValueError):
            ap_oracle([], gts)
