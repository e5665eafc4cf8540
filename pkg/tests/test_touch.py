"""Tests for the touch engine, key layouts, and typing scores."""

import itertools

import numpy as np
import pytest

from pressense.errors import IncompleteSessionError, SessionError
from pressense.metrics import char_errors
from pressense.pressure import PressureImage
from pressense.touch import (Key, KeyEvent, KeyLayout, TouchEngine, hit_test,
                             layout_from_dict, layout_to_dict, qwerty_layout,
                             score_typing, typed_text, width_map)

GRID = 16


def blob_frame(present: bool, cy: float = 8.0, cx: float = 8.0, peak: float = 10.0
               ) -> PressureImage:
    grid = np.zeros((GRID, GRID))
    if present:
        ys = np.arange(GRID)[:, None]
        xs = np.arange(GRID)[None, :]
        grid = peak * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * 1.5 ** 2))
    return PressureImage(grid)


def run_sequence(bits, debounce=2):
    """Feed a binary presence sequence; returns touch (kind, frame) pairs."""
    eng = TouchEngine(layout=None, debounce_frames=debounce)
    events = []
    for b in bits:
        te, _, _ = eng.step_frame(blob_frame(bool(b)))
        events.extend((e.kind, e.frame) for e in te)
    return events


def oracle_debounce(bits, debounce):
    """Independent reference state machine, straight from the stated rule:
    a press registers after `debounce` consecutive present frames; a release
    after `debounce` consecutive absent frames following a registered press."""
    events = []
    state = "idle"
    run = 0
    for i, b in enumerate(bits):
        if state == "idle":
            if b:
                state, run = "maybe_down", 1
                if run >= debounce:
                    state = "down"
                    events.append(("down", i))
        elif state == "maybe_down":
            if b:
                run += 1
                if run >= debounce:
                    state = "down"
                    events.append(("down", i))
            else:
                state, run = "idle", 0
        elif state == "down":
            if not b:
                state, run = "maybe_up", 1
                if run >= debounce:
                    state = "idle"
                    events.append(("up", i))
        elif state == "maybe_up":
            if b:
                state, run = "down", 0
            else:
                run += 1
                if run >= debounce:
                    state = "idle"
                    events.append(("up", i))
    return events


class TestDebounce:
    def test_worked_example(self):
        # the canonical sequence: down on the second pressed frame, up after
        # two absent frames, the single-frame gap forgiven
        assert run_sequence([0, 1, 1, 1, 0, 1, 0, 0]) == [("down", 2), ("up", 7)]

    def test_flicker_suppressed(self):
        assert run_sequence([1, 0, 1, 0, 1, 0]) == []

    def test_single_frame_gap_forgiven(self):
        events = run_sequence([1, 1, 0, 1, 1, 0, 0])
        assert events == [("down", 1), ("up", 6)]

    def test_debounce_one_is_immediate(self):
        assert run_sequence([1, 0], debounce=1) == [("down", 0), ("up", 1)]

    @pytest.mark.parametrize("n", range(1, 11))
    def test_exhaustive_against_oracle(self, n):
        for bits in itertools.product([0, 1], repeat=n):
            got = run_sequence(bits)
            want = oracle_debounce(bits, 2)
            assert got == want, f"sequence {bits}"
            # structural invariants: alternating down/up, no short presses
            kinds = [k for k, _ in got]
            assert kinds == ["down", "up"] * (len(kinds) // 2) + (
                ["down"] if len(kinds) % 2 else [])
            downs = [f for k, f in got if k == "down"]
            for d in downs:
                assert all(bits[d - 1:d + 1])  # at least 2 consecutive contact frames

    def test_press_still_down_at_stream_end_emits_no_up(self):
        assert run_sequence([0, 1, 1, 1]) == [("down", 2)]


class TestTracking:
    def test_moving_touch_keeps_one_track(self):
        eng = TouchEngine(layout=None, debounce_frames=2, association_radius=6.0)
        downs, ups, strokes = [], [], []
        for i in range(6):
            te, _, st = eng.step_frame(blob_frame(True, cy=5.0, cx=3.0 + i))
            downs += [e for e in te if e.kind == "down"]
            ups += [e for e in te if e.kind == "up"]
            strokes += st
        assert len(downs) == 1 and len(ups) == 0
        assert len({s.track_id for s in strokes}) == 1
        xs = [s.x for s in strokes]
        assert xs == sorted(xs)  # stroke follows the motion

    def test_two_simultaneous_touches(self):
        grid = np.zeros((24, 24))
        for cy, cx in ((6, 6), (18, 18)):
            ys = np.arange(24)[:, None]
            xs = np.arange(24)[None, :]
            grid += 8.0 * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * 1.5 ** 2))
        eng = TouchEngine(layout=None, debounce_frames=2)
        img = PressureImage(grid)
        eng.step_frame(img)
        te, _, _ = eng.step_frame(img)
        assert sum(1 for e in te if e.kind == "down") == 2
        assert len({e.track_id for e in te}) == 2

    def test_jump_beyond_radius_is_new_track(self):
        eng = TouchEngine(layout=None, debounce_frames=1, association_radius=3.0)
        te1, _, _ = eng.step_frame(blob_frame(True, cy=3.0, cx=3.0))
        te2, _, _ = eng.step_frame(blob_frame(True, cy=12.0, cx=12.0))
        assert [e.kind for e in te1] == ["down"]
        kinds = sorted(e.kind for e in te2)
        assert kinds == ["down", "up"]  # old track released, new one pressed
        assert te2[0].track_id != te1[0].track_id or te2[1].track_id != te1[0].track_id

    def test_dimension_change_raises(self):
        eng = TouchEngine(layout=None)
        eng.step_frame(PressureImage(np.zeros((8, 8))))
        with pytest.raises(SessionError):
            eng.step_frame(PressureImage(np.zeros((9, 8))))

    def test_validation(self):
        with pytest.raises(ValueError):
            TouchEngine(debounce_frames=0)
        with pytest.raises(ValueError):
            TouchEngine(threshold=-1.0)


class TestLayout:
    def test_qwerty_loads(self):
        layout = qwerty_layout()
        assert layout.name == "qwerty"
        labels = {k.label for k in layout.keys}
        assert {"q", "a", "z", "Space", "Enter", "Backspace"} <= labels
        assert len(layout.keys) == 29

    def test_round_trip(self):
        layout = qwerty_layout()
        again = layout_from_dict(layout_to_dict(layout))
        assert again == layout

    def test_hit_test_half_open_edges(self):
        layout = KeyLayout("t", (Key("a", 0.0, 0.0, 10.0, 10.0),
                                 Key("b", 10.0, 0.0, 10.0, 10.0)))
        assert hit_test(layout, 0.0, 5.0) == "a"
        assert hit_test(layout, 10.0, 5.0) == "b"   # left edge belongs to the key
        assert hit_test(layout, 20.0, 5.0) is None  # right edge is outside
        assert hit_test(layout, 5.0, 15.0) is None

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            KeyLayout("t", (Key("a", 0.0, 0.0, 10.0, 10.0),
                            Key("b", 5.0, 5.0, 10.0, 10.0)))

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            KeyLayout("t", (Key("a", 0.0, 0.0, 5.0, 5.0),
                            Key("a", 10.0, 0.0, 5.0, 5.0)))


class TestKeyEvents:
    def _layout(self):
        return KeyLayout("mini", (Key("q", 2.0, 2.0, 6.0, 6.0),
                                  Key("Enter", 10.0, 10.0, 5.0, 5.0)))

    def test_key_down_on_key(self):
        eng = TouchEngine(layout=self._layout(), debounce_frames=2)
        eng.step_frame(blob_frame(True, cy=5.0, cx=5.0))
        _, ke, _ = eng.step_frame(blob_frame(True, cy=5.0, cx=5.0))
        assert [(e.kind, e.key) for e in ke] == [("down", "q")]

    def test_key_assignment_fixed_at_down(self):
        # the touch drifts onto Enter after the down; the up still reports q
        eng = TouchEngine(layout=self._layout(), debounce_frames=2,
                          association_radius=12.0)
        eng.step_frame(blob_frame(True, cy=5.0, cx=5.0))
        eng.step_frame(blob_frame(True, cy=5.0, cx=5.0))
        eng.step_frame(blob_frame(True, cy=12.0, cx=12.0))
        eng.step_frame(blob_frame(False))
        _, ke, _ = eng.step_frame(blob_frame(False))
        assert [(e.kind, e.key) for e in ke] == [("up", "q")]

    def test_touch_off_keys_has_no_key_event(self):
        eng = TouchEngine(layout=self._layout(), debounce_frames=1)
        te, ke, _ = eng.step_frame(blob_frame(True, cy=15.0, cx=2.0))
        assert len(te) == 1 and ke == []


class TestWidthMap:
    def test_clamped_ends(self):
        assert width_map(0.0) == 1.0
        assert width_map(1.0) == 1.0
        assert width_map(30.0) == 12.0
        assert width_map(1000.0) == 12.0

    def test_linear_midpoint(self):
        assert width_map(15.5) == pytest.approx((1.0 + 12.0) / 2)

    def test_monotone(self):
        ps = np.linspace(0, 35, 50)
        ws = [width_map(p) for p in ps]
        assert all(b >= a for a, b in zip(ws, ws[1:]))

    def test_validation(self):
        with pytest.raises(ValueError):
            width_map(5.0, min_width=10.0, max_width=1.0)


def ke(kind, key, frame):
    return KeyEvent(kind=kind, key=key, frame=frame, x=0.0, y=0.0)


class TestTypedText:
    def test_folding(self):
        events = [ke("down", "h", 0), ke("up", "h", 1), ke("down", "i", 2),
                  ke("down", "Backspace", 3), ke("down", "i", 4),
                  ke("down", "Space", 5), ke("down", "Shift", 6),
                  ke("down", "u", 7), ke("down", "Enter", 8), ke("down", "x", 9)]
        assert typed_text(events) == "hi u"

    def test_backspace_on_empty(self):
        assert typed_text([ke("down", "Backspace", 0), ke("down", "a", 1),
                           ke("down", "Enter", 2)]) == "a"


class TestScoreTyping:
    def test_hand_case(self):
        # "hi" typed over 30 frames at 15 fps: 2 seconds
        events = [ke("down", "h", 0), ke("down", "i", 10), ke("down", "Enter", 30)]
        transcript, score = score_typing(events, "hi", frame_rate=15.0)
        assert transcript.typed == "hi"
        assert transcript.elapsed_s == 2.0
        assert score.errors == 0
        assert score.wpm == pytest.approx((2 / 5) / (2 / 60))
        assert score.net_wpm == score.wpm

    def test_errors_penalized(self):
        events = [ke("down", "h", 0), ke("down", "x", 10), ke("down", "Enter", 30)]
        _, score = score_typing(events, "hi", frame_rate=15.0)
        assert score.errors == char_errors("hi", "hx")
        assert score.net_wpm < score.wpm

    def test_no_enter_raises(self):
        with pytest.raises(IncompleteSessionError):
            score_typing([ke("down", "h", 0)], "h", 15.0)

    def test_instant_enter_charges_one_frame(self):
        transcript, _ = score_typing([ke("down", "Enter", 5)], "", 10.0)
        assert transcript.elapsed_s == pytest.approx(0.1)
