import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pointparts import EvalRecord, InvalidInputError, a_iou, dataset_metrics, object_miou


class TestObjectMiou:
    def test_identity_is_perfect(self, rng):
        labels = rng.integers(1, 4, size=30)
        rec = object_miou(labels, labels, 3)
        assert rec.object_miou == 1.0
        assert (rec.per_part_iou == 1.0).all()

    def test_hand_worked_example(self):
        rec = object_miou([1, 2, 2, 2], [1, 1, 2, 2], 2)
        assert rec.per_part_iou[0] == pytest.approx(1 / 2)
        assert rec.per_part_iou[1] == pytest.approx(2 / 3)
        assert rec.object_miou == pytest.approx(7 / 12)

    def test_absent_part_scores_one(self):
        rec = object_miou([1, 1], [1, 1], 3)
        assert rec.per_part_iou.tolist() == [1.0, 1.0, 1.0]

    def test_mean_over_full_schema(self):
        # part 3 absent from both -> IoU 1 still enters the mean
        rec = object_miou([1, 2], [2, 1], 3)
        assert rec.object_miou == pytest.approx((0 + 0 + 1) / 3)

    def test_symmetry(self, rng):
        a = rng.integers(1, 4, size=25)
        b = rng.integers(1, 4, size=25)
        assert object_miou(a, b, 3).object_miou == object_miou(b, a, 3).object_miou

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            object_miou([1, 2], [1], 2)

    def test_out_of_range_labels(self):
        with pytest.raises(InvalidInputError):
            object_miou([0, 1], [1, 1], 2)

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=50, deadline=None)
    def test_relabeling_invariance(self, seed):
        r = np.random.default_rng(seed)
        p = int(r.integers(2, 6))
        n = int(r.integers(p, 50))
        pred = r.integers(1, p + 1, size=n)
        gt = r.integers(1, p + 1, size=n)
        perm = r.permutation(p) + 1
        base = object_miou(pred, gt, p)
        mapped = object_miou(perm[pred - 1], perm[gt - 1], p)
        assert mapped.object_miou == pytest.approx(base.object_miou)
        assert np.allclose(np.sort(mapped.per_part_iou), np.sort(base.per_part_iou))


def record(cat, mious):
    """EvalRecord stub whose pooled counts reproduce the given per-part IoUs."""
    iou = np.asarray(mious, dtype=float)
    union = np.full(iou.size, 100, dtype=np.int64)
    inter = np.rint(iou * union).astype(np.int64)
    return EvalRecord(cat, inter / union, float((inter / union).mean()), inter, union)


class TestDatasetMetrics:
    def test_single_category_equal_averages(self):
        recs = [record("a", [1.0, 0.5]), record("a", [0.0, 0.5])]
        inst, cls = dataset_metrics(recs)
        assert inst == cls == pytest.approx(0.5)

    def test_two_category_example(self):
        recs = [record("A", [1.0]), record("B", [0.0]), record("B", [0.5])]
        inst, cls = dataset_metrics(recs)
        assert inst == pytest.approx(0.5)
        assert cls == pytest.approx((1.0 + 0.25) / 2)

    def test_all_perfect(self):
        recs = [record(c, [1.0, 1.0]) for c in "abc"]
        assert dataset_metrics(recs) == (1.0, 1.0)

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            dataset_metrics([])

    def test_instance_average_ignores_categories(self, rng):
        mious = rng.uniform(0, 1, size=8)
        recs_a = [record("x", [m]) for m in mious]
        recs_b = [record(f"c{i}", [m]) for i, m in enumerate(mious)]
        assert dataset_metrics(recs_a)[0] == pytest.approx(dataset_metrics(recs_b)[0])


class TestAIou:
    def test_single_object_equals_object_miou(self):
        rec = record("a", [0.25, 0.75])
        inst, cls = a_iou([rec])
        assert inst == cls == pytest.approx(rec.object_miou)

    def test_hand_pooling(self):
        r1 = EvalRecord("a", np.array([0.5]), 0.5, np.array([1]), np.array([2]))
        r2 = EvalRecord("a", np.array([0.75]), 0.75, np.array([3]), np.array([4]))
        inst, cls = a_iou([r1, r2])
        assert inst == pytest.approx(4 / 6)
        assert cls == pytest.approx(4 / 6)

    def test_all_perfect_is_one(self):
        recs = [record("a", [1.0, 1.0]), record("b", [1.0, 1.0, 1.0])]
        inst, cls = a_iou(recs)
        assert inst == 1.0 and cls == 1.0

    def test_pooling_differs_from_mean_of_means(self):
        r1 = EvalRecord("a", np.array([0.1]), 0.1, np.array([1]), np.array([10]))
        r2 = EvalRecord("a", np.array([1.0]), 1.0, np.array([1000]), np.array([1000]))
        inst, _ = a_iou([r1, r2])
        assert inst == pytest.approx(1001 / 1010)
        assert inst != pytest.approx(np.mean([0.1, 1.0]))

    def test_bounds(self, rng):
        recs = []
        for i in range(10):
            p = int(rng.integers(1, 5))
            union = rng.integers(1, 50, size=p)
            inter = (rng.random(p) * union).astype(np.int64)
            iou = inter / union
            recs.append(EvalRecord(f"c{i % 3}", iou, float(iou.mean()), inter, union))
        inst, cls = a_iou(recs)
        assert 0.0 <= inst <= 1.0 and 0.0 <= cls <= 1.0
