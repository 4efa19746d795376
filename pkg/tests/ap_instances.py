"""Random tiny detection problems for checking the AP evaluator."""

from barrierfree.dataset import GroundTruth, Prediction
from barrierfree.detection import BoundingBox as box


def random_instance(rng, n_images=3, n_classes=2):
    """Tiny AP problem: at most 6 boxes per image, predictions jittered from GT."""
    gts, preds = [], []
    for i in range(n_images):
        image = f"img{i}"
        n_gt = int(rng.integers(0, 4))
        local = []
        for _ in range(n_gt):
            size = rng.choice([rng.uniform(20, 90), rng.uniform(100, 200)])
            x, y = rng.uniform(0, 400, 2)
            g = GroundTruth(image, int(rng.integers(n_classes)), box(x, y, x + size, y + size * rng.uniform(0.6, 1.2)))
            gts.append(g)
            local.append(g)
        for _ in range(int(rng.integers(0, 7 - n_gt))):
            conf = float(rng.choice([0.3, 0.5, 0.9, rng.uniform()]))
            if local and rng.random() < 0.7:
                g = local[int(rng.integers(len(local)))]
                j = rng.normal(0, 0.1 * g.bbox.width, 4)
                b = g.bbox
                try:
                    pb = box(b.x_min + j[0], b.y_min + j[1], b.x_max + j[2], b.y_max + j[3])
                except ValueError:
                    continue
                cls = g.class_index if rng.random() < 0.85 else int(rng.integers(n_classes))
            else:
                x, y = rng.uniform(0, 400, 2)
                s = rng.uniform(20, 200)
                pb, cls = box(x, y, x + s, y + s), int(rng.integers(n_classes))
            preds.append(Prediction(image, cls, pb, conf))
    return preds, gts


def disjoint_false_positive(rng, preds, gts, n_classes=2):
    """A prediction overlapping no ground truth in its image."""
    image = f"img{int(rng.integers(3))}"
    others = [g.bbox for g in gts if g.image_id == image]
    while True:
        x, y = rng.uniform(0, 600, 2)
        s = rng.uniform(10, 200)
        b = box(x, y, x + s, y + s)
        if all(b.x_min >= o.x_max or b.x_max <= o.x_min or b.y_min >= o.y_max or b.y_max <= o.y_min
               for o in others):
            return Prediction(image, int(rng.integers(n_classes)), b, float(rng.uniform()))
