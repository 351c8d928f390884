"""Scoring detections against ground truth, including don't-care regions
and the quad mode used for straight-line benchmarks.
"""


from textshape.detect import Detection
from textshape.evaluate import evaluate_dataset, match, report_lines
from textshape.geom import Polygon
from textshape.synth import rect_annotation

gt_a = rect_annotation(0, 0, 200, 50)
gt_b = rect_annotation(0, 100, 160, 50)
dont_care = rect_annotation(300, 0, 80, 40)
dont_care.ignore = True


def as_det(ann, score, dx=0.0):
    return Detection(polygon=Polygon.make(ann.closed_vertices() + [dx, 0.0]), score=score)


# One good hit, one slightly shifted hit, one detection on the ignore region.
dets = [as_det(gt_a, 0.95), as_det(gt_b, 0.80, dx=12.0), as_det(dont_care, 0.60)]
rep = match(dets, [gt_a, gt_b, dont_care], iou_threshold=0.5)
for line in report_lines(rep):
    print(line)
print(f"matched pairs: {rep.matches}")

# Same image twice: micro-averaged counts double, the scores do not move.
corpus = evaluate_dataset(
    {"img1": dets, "img2": dets},
    {"img1": [gt_a, gt_b, dont_care], "img2": [gt_a, gt_b, dont_care]},
)
print(f"corpus: tp={corpus.overall.tp} fscore={corpus.overall.fscore:.4f}")

# Quad mode reduces both sides to oriented rectangles before the IoU.
quad_rep = match(dets, [gt_a, gt_b, dont_care], mode="quad")
print(f"quad mode counts: {quad_rep.counts} (polygon mode: {rep.counts})")
