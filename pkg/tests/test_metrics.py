"""Tests for evaluation metrics and typing scores."""

from functools import lru_cache

import numpy as np
import pytest

from pressense.contact import ContactLabel
from pressense.metrics import (EvaluationReport, FrameEvaluation, TypingTranscript,
                               char_errors, contact_accuracy, contact_iou,
                               evaluate_frames, label_metrics, net_wpm,
                               report_to_dict, volumetric_iou)
from pressense.pressure import ContactImage, PressureImage


def frame(gt_any: bool, est_peak: float, size=(4, 4)) -> FrameEvaluation:
    est = np.zeros(size)
    est[1, 1] = est_peak
    fingers = (0, 1, 0, 0, 0) if gt_any else (0, 0, 0, 0, 0)
    force = 0 if gt_any else -1
    return FrameEvaluation(frame_id="f", gt_label=ContactLabel(fingers, force),
                           est_pressure=PressureImage(est))


class TestContactAccuracy:
    def test_hand_case(self):
        frames = [frame(True, 5.0),   # contact, estimated contact: hit
                  frame(True, 0.5),   # contact, estimated none: miss
                  frame(False, 0.0),  # none, none: hit
                  frame(False, 2.0)]  # none, estimated contact: miss
        assert contact_accuracy(frames, threshold=1.0) == 0.5

    def test_threshold_boundary(self):
        assert contact_accuracy([frame(True, 1.0)], threshold=1.0) == 1.0

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            contact_accuracy([])


class TestContactIoU:
    def test_oracle_exact_agreement(self):
        # brute-force per-pixel loop must agree exactly
        rng = np.random.default_rng(0)
        for _ in range(200):
            h, w = rng.integers(1, 9, 2)
            a = rng.integers(0, 2, (h, w))
            b = rng.integers(0, 2, (h, w))
            inter = sum(int(a[y, x] and b[y, x]) for y in range(h) for x in range(w))
            union = sum(int(a[y, x] or b[y, x]) for y in range(h) for x in range(w))
            got = contact_iou(ContactImage(a), ContactImage(b))
            if union == 0:
                assert got is None
            else:
                assert got == inter / union  # exact: small integer ratios

    def test_both_empty_is_undefined(self):
        z = ContactImage(np.zeros((3, 3), dtype=int))
        assert contact_iou(z, z) is None

    def test_disjoint_is_zero(self):
        a = ContactImage(np.array([[1, 0]]))
        b = ContactImage(np.array([[0, 1]]))
        assert contact_iou(a, b) == 0.0

    def test_identical_is_one(self):
        a = ContactImage(np.array([[1, 0], [1, 1]]))
        assert contact_iou(a, a) == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            contact_iou(ContactImage(np.zeros((2, 2), dtype=int)),
                        ContactImage(np.zeros((3, 3), dtype=int)))


class TestVolumetricIoU:
    def test_oracle_exact_agreement(self):
        # integer-valued images keep every sum exact in float64
        rng = np.random.default_rng(1)
        for _ in range(200):
            h, w = rng.integers(1, 9, 2)
            a = rng.integers(0, 7, (h, w)).astype(float)
            b = rng.integers(0, 7, (h, w)).astype(float)
            mins = sum(min(a[y, x], b[y, x]) for y in range(h) for x in range(w))
            maxs = sum(max(a[y, x], b[y, x]) for y in range(h) for x in range(w))
            got = volumetric_iou(PressureImage(a), PressureImage(b))
            if maxs == 0:
                assert got is None
            else:
                assert got == mins / maxs

    def test_half_scaled_copy_is_exactly_half(self):
        # powers of two make 0.5 * x exact, so the ratio is exactly 0.5
        rng = np.random.default_rng(2)
        base = rng.integers(1, 64, (6, 6)).astype(float)
        gt = PressureImage(base)
        est = PressureImage(0.5 * base)
        assert volumetric_iou(gt, est) == 0.5

    def test_identical_is_one(self):
        img = PressureImage(np.array([[1.5, 0.0], [3.25, 2.0]]))
        assert volumetric_iou(img, img) == 1.0

    def test_both_zero_is_undefined(self):
        z = PressureImage(np.zeros((2, 2)))
        assert volumetric_iou(z, z) is None

    def test_zero_vs_nonzero_is_zero(self):
        z = PressureImage(np.zeros((2, 2)))
        nz = PressureImage(np.ones((2, 2)))
        assert volumetric_iou(z, nz) == 0.0


class TestLabelMetrics:
    def test_hand_case(self):
        pairs = [
            (ContactLabel((1, 0, 0, 0, 0), 0), ContactLabel((1, 0, 0, 0, 0), 0)),
            (ContactLabel((0, 1, 0, 0, 0), 1), ContactLabel((1, 1, 0, 0, 0), 0)),
            (ContactLabel((0, 0, 0, 0, 0), -1), ContactLabel((0, 0, 1, 0, 0), -1)),
        ]
        m = label_metrics(pairs)
        assert m.per_finger == (2 / 3, 1.0, 2 / 3, 1.0, 1.0)
        assert m.force == 0.5  # only two pairs carry a reference force
        assert m.n_force_frames == 2

    def test_force_masking(self):
        pairs = [(ContactLabel((1, 0, 0, 0, 0), 1), ContactLabel((1, 0, 0, 0, 0), -1))]
        m = label_metrics(pairs)
        assert m.force is None
        assert m.n_force_frames == 0

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            label_metrics([])


def naive_levenshtein(a: str, b: str) -> int:
    """Oracle: the textbook recursion."""
    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        return min(rec(i - 1, j) + 1,
                   rec(i, j - 1) + 1,
                   rec(i - 1, j - 1) + (a[i - 1] != b[j - 1]))
    return rec(len(a), len(b))


class TestCharErrors:
    def test_frozen_cases(self):
        assert char_errors("kitten", "sitting") == 3
        assert char_errors("", "abc") == 3
        assert char_errors("abc", "") == 3
        assert char_errors("same", "same") == 0

    def test_matches_naive_recursive_oracle(self):
        rng = np.random.default_rng(3)
        alphabet = "abcde "
        for _ in range(300):
            la, lb = rng.integers(0, 13, 2)
            a = "".join(rng.choice(list(alphabet), la))
            b = "".join(rng.choice(list(alphabet), lb))
            assert char_errors(a, b) == naive_levenshtein(a, b)

    def test_symmetry(self):
        assert char_errors("flaw", "lawn") == char_errors("lawn", "flaw")


class TestNetWpm:
    def test_frozen_thirty(self):
        t = TypingTranscript(reference="x" * 150, typed="x" * 150, elapsed_s=60.0)
        s = net_wpm(t)
        assert s.wpm == 30.0
        assert s.net_wpm == 30.0
        assert s.errors == 0

    def test_frozen_three_errors(self):
        ref = "x" * 150
        typed = "y" * 3 + "x" * 147  # 3 substitutions, same length
        t = TypingTranscript(reference=ref, typed=typed, elapsed_s=60.0)
        s = net_wpm(t)
        assert s.errors == 3
        assert s.wpm == 30.0
        assert s.net_wpm == 27.0

    def test_can_go_negative(self):
        t = TypingTranscript(reference="abcdefghij", typed="zzzzz", elapsed_s=60.0)
        assert net_wpm(t).net_wpm < 0

    def test_elapsed_validation(self):
        with pytest.raises(ValueError):
            TypingTranscript(reference="a", typed="a", elapsed_s=0.0)


class TestEvaluateFrames:
    def _frames(self):
        gt1 = np.zeros((4, 4))
        gt1[0, 0] = 2.0
        est1 = np.zeros((4, 4))
        est1[0, 0] = 1.0
        f1 = FrameEvaluation(frame_id="a", gt_label=ContactLabel((1, 0, 0, 0, 0), 0),
                             est_pressure=PressureImage(est1),
                             gt_pressure=PressureImage(gt1),
                             est_label=ContactLabel((1, 0, 0, 0, 0), 0))
        gt2 = np.zeros((4, 4))
        gt2[1, 1] = 4.0
        est2 = np.zeros((4, 4))
        est2[2, 2] = 4.0
        f2 = FrameEvaluation(frame_id="b", gt_label=ContactLabel((0, 1, 0, 0, 0), 1),
                             est_pressure=PressureImage(est2),
                             gt_pressure=PressureImage(gt2),
                             est_label=ContactLabel((0, 0, 0, 0, 0), -1))
        return [f1, f2]

    def test_per_frame_mode(self):
        rep = evaluate_frames(self._frames(), iou_mode="per_frame")
        # frame a: vol 1/2, contact 1/1; frame b: vol 0, contact 0
        assert rep.volumetric_iou == pytest.approx((0.5 + 0.0) / 2)
        assert rep.contact_iou == pytest.approx((1.0 + 0.0) / 2)
        assert rep.contact_accuracy == 1.0

    def test_global_mode(self):
        rep = evaluate_frames(self._frames(), iou_mode="global")
        assert rep.volumetric_iou == pytest.approx((1 + 0) / (2 + 8))
        assert rep.contact_iou == pytest.approx(1 / 3)

    def test_undefined_frames_excluded_from_average(self):
        zero = PressureImage(np.zeros((4, 4)))
        f = FrameEvaluation(frame_id="z", gt_label=ContactLabel.no_contact(),
                            est_pressure=zero, gt_pressure=zero)
        rep = evaluate_frames(self._frames() + [f], iou_mode="per_frame")
        assert rep.volumetric_iou == pytest.approx(0.25)  # still two defined frames

    def test_weak_frames_have_no_iou(self):
        frames = [frame(True, 5.0), frame(False, 0.0)]
        rep = evaluate_frames(frames)
        assert rep.contact_iou is None
        assert rep.volumetric_iou is None
        d = report_to_dict(rep)
        assert "contact_accuracy" in d
        assert "contact_iou" not in d
        assert "volumetric_iou" not in d

    def test_label_block(self):
        rep = evaluate_frames(self._frames())
        assert rep.label is not None
        d = report_to_dict(rep)
        assert d["label_accuracy"]["per_finger"]["thumb"] == 1.0

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            evaluate_frames(self._frames(), iou_mode="weird")
