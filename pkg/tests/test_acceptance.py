"""Acceptance gate: one test per core requirement, one printed verdict line each.

Every test prints ``PASS name: detail`` or ``FAIL name: detail`` before
asserting, so a bare ``pytest -s tests/test_acceptance.py`` reads as a
checklist.  Tolerances and budgets are stated inline with each check.
"""

import itertools
import json
import time
from functools import lru_cache

import numpy as np
import pytest

from pressense.contact import ContactLabel
from pressense.errors import SingularConfigurationError
from pressense.geometry import Homography, estimate_homography
from pressense.losses import softmax, structure_aware_ce, structure_target_distribution
from pressense.metrics import char_errors, contact_iou, net_wpm, TypingTranscript, volumetric_iou
from pressense.pressure import ContactImage, PressureImage, make_bin_spec
from pressense.synth import SplitPlan, SynthConfig, generate_dataset, write_records
from pressense.tinynet import (LossConfig, ModelConfig, TrainConfig, domain_loss_grads,
                               gradient_check, init_model, param_count, train_toy)
from pressense.tinynet.model import Batch
from pressense.touch import TouchEngine, qwerty_layout
from pressense.service.replay import ReplaySettings, replay_records
from pressense.synth import SessionRecord


def verdict(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


def random_label(rng) -> ContactLabel:
    fingers = tuple(int(v) for v in rng.integers(0, 2, 5))
    if not any(fingers):
        return ContactLabel(fingers=fingers, force=-1)
    return ContactLabel(fingers=fingers, force=int(rng.integers(-1, 2)))


def mixed_batch(cfg: ModelConfig, n: int, seed: int) -> Batch:
    rng = np.random.default_rng(seed)
    return Batch(features=rng.normal(0.0, 1.0, (n, cfg.height, cfg.width, cfg.channels)),
                 is_full=np.array([True] * (n // 2) + [False] * (n - n // 2)),
                 bin_targets=rng.integers(0, cfg.n_bins, (n, cfg.height, cfg.width)),
                 labels=tuple(random_label(rng) for _ in range(n)))


def test_gradient_correctness():
    # analytic gradient of the combined loss vs central differences:
    # 50 seeded small models (<= 5k params), mixed batches, rel err < 1e-4, < 1 min
    loss_cfg = LossConfig(pressure_reduction="mean")
    assert loss_cfg.lambda1 == 0.01 and loss_cfg.lambda2 == 0.001
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(50):
        cfg = ModelConfig(width=8, height=8, channels=2, hidden_channels=4,
                          mlp_hidden=4, n_bins=5, seed=seed)
        params = init_model(cfg)
        assert param_count(params) <= 5000
        batch = mixed_batch(cfg, 4, seed=1000 + seed)
        worst = max(worst, gradient_check(params, batch, loss_cfg))
    elapsed = time.perf_counter() - t0
    verdict("gradient-correctness",
            worst < 1e-4 and elapsed < 60.0,
            f"max rel err {worst:.2e} over 50 seeds in {elapsed:.1f}s")


def test_structure_aware_minimizer():
    # gradient descent on single-pixel logits reaches exp(-|b-k|)/Z for every
    # bin k of a 9-bin spec, within 1e-3 per component, < 10 s
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(9):
        z = np.zeros((1, 1, 9))
        target = np.full((1, 1), k, dtype=np.int64)
        for _ in range(3000):
            _, g = structure_aware_ce(z, target)
            z = z - 0.5 * g
        probs = softmax(z)[0, 0]
        want = structure_target_distribution(k, 9)
        worst = max(worst, float(np.abs(probs - want).max()))
    elapsed = time.perf_counter() - t0
    verdict("structure-aware-minimizer",
            worst < 1e-3 and elapsed < 10.0,
            f"max component error {worst:.2e} across all 9 target bins in {elapsed:.1f}s")


def test_gradient_reversal_exact():
    # encoder-side gradient of the domain term under reversal is the exact
    # bitwise negation of the unreversed gradient, across 20 random models
    encoder = ("enc1_w", "enc1_b", "enc2_w", "enc2_b")
    heads = ("domain1_w", "domain1_b", "domain2_w", "domain2_b")
    all_exact = True
    for seed in range(20):
        cfg = ModelConfig(width=8, height=8, channels=2, hidden_channels=4,
                          mlp_hidden=4, n_bins=5, seed=seed)
        params = init_model(cfg)
        batch = mixed_batch(cfg, 6, seed=2000 + seed)
        l_f, g_fwd = domain_loss_grads(params, batch, reverse_domain=False)
        l_r, g_rev = domain_loss_grads(params, batch, reverse_domain=True)
        ok = (l_f == l_r
              and all(np.array_equal(g_rev[n], -g_fwd[n]) for n in encoder)
              and all(np.any(g_fwd[n] != 0.0) for n in encoder)
              and all(np.array_equal(g_rev[n], g_fwd[n]) for n in heads))
        all_exact = all_exact and ok
    verdict("gradient-reversal", all_exact,
            "encoder grads negate bit-for-bit over 20 random models")


def test_ablation_ordering():
    # paired-seed benchmark: median weak-domain contact accuracy must satisfy
    # baseline < contact-loss-only, baseline < domain-loss-only, and
    # combined >= max(single) - 1 point; < 10 min
    t0 = time.perf_counter()
    plan = SplitPlan(full_train=(0,), weak_train=(1,), full_test=(2,), weak_test=(3,))
    accs = {"baseline": [], "contact": [], "domain": [], "both": []}
    for seed in range(5):
        synth = SynthConfig(width=16, height=16, blob_sigma=2.0, prompts_per_session=8,
                            cycles_per_prompt=2, frames_per_cycle=12,
                            weak_frames_per_prompt=12, seed=seed)
        data = generate_dataset(synth, plan, sessions_per_participant=3)
        for name, (c, d) in {"baseline": (False, False), "contact": (True, False),
                             "domain": (False, True), "both": (True, True)}.items():
            cfg = TrainConfig(epochs=40, batch_size=8, lr=2e-3, enable_contact=c,
                              enable_domain=d, seed=seed)
            accs[name].append(train_toy(data, cfg).history[-1].weak_contact_accuracy)
    med = {k: float(np.median(v)) for k, v in accs.items()}
    elapsed = time.perf_counter() - t0
    ok = (med["baseline"] < med["contact"]
          and med["baseline"] < med["domain"]
          and med["both"] >= max(med["contact"], med["domain"]) - 0.01
          and elapsed < 600.0)
    verdict("ablation-ordering", ok,
            f"medians baseline={med['baseline']:.3f} contact={med['contact']:.3f} "
            f"domain={med['domain']:.3f} both={med['both']:.3f} in {elapsed:.0f}s")


def test_metric_oracles_exact():
    # IoU metrics agree exactly with per-pixel brute force on 1,000 random
    # integer-valued image pairs up to 8x8; halving an image gives exactly 0.5
    rng = np.random.default_rng(0)
    agree = True
    for _ in range(1000):
        h = int(rng.integers(1, 9))
        w = int(rng.integers(1, 9))
        a = rng.integers(0, 5, (h, w)).astype(np.float64)
        b = rng.integers(0, 5, (h, w)).astype(np.float64)

        mins = maxs = 0.0
        inter = union = 0
        for i in range(h):
            for j in range(w):
                mins += min(a[i, j], b[i, j])
                maxs += max(a[i, j], b[i, j])
                pa, pb = a[i, j] >= 1.0, b[i, j] >= 1.0
                inter += pa and pb
                union += pa or pb
        want_v = None if maxs == 0.0 else mins / maxs
        want_c = None if union == 0 else inter / union

        got_v = volumetric_iou(PressureImage(a), PressureImage(b))
        got_c = contact_iou(ContactImage((a >= 1.0).astype(np.uint8)),
                            ContactImage((b >= 1.0).astype(np.uint8)))
        agree = agree and got_v == want_v and got_c == want_c

    img = PressureImage(2.0 ** rng.integers(0, 5, (8, 8)).astype(np.float64))
    half = PressureImage(0.5 * img.data)
    halving = volumetric_iou(img, half) == 0.5
    verdict("metric-oracles", agree and halving,
            "exact brute-force agreement on 1000 pairs; halving case exactly 0.5")


def test_homography_recovery():
    # synthesize-and-recover: 100 random projective maps, 20 noiseless points,
    # max reprojection error < 1e-6 px; collinear input raises
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        angle = rng.uniform(0, 2 * np.pi)
        scale = rng.uniform(0.5, 2.0)
        shear = rng.uniform(-0.2, 0.2)
        true = np.array([
            [scale * np.cos(angle), -scale * np.sin(angle) + shear, rng.uniform(-50, 50)],
            [scale * np.sin(angle), scale * np.cos(angle), rng.uniform(-50, 50)],
            [rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3), 1.0]])
        src = rng.uniform(0, 100, (20, 2))
        dst = Homography(true).apply(src)
        est = estimate_homography(src, dst)
        worst = max(worst, float(np.linalg.norm(est.apply(src) - dst, axis=1).max()))

    collinear = np.array([[float(i), 2.0 * i + 1.0] for i in range(8)])
    with pytest.raises(SingularConfigurationError):
        estimate_homography(collinear, collinear * 2.0)
    verdict("homography-recovery", worst < 1e-6,
            f"max reprojection {worst:.2e} px over 100 maps; collinear rejected")


def test_debounce_exact():
    # exhaustive check of all binary contact sequences up to length 10 against
    # an independent state machine; anchor sequence gives down@2 / up@7
    def oracle(bits, debounce=2):
        events, state, run = [], "idle", 0
        for i, b in enumerate(bits):
            if state in ("idle", "maybe_down"):
                if b:
                    run += 1
                    state = "maybe_down"
                    if run >= debounce:
                        state, run = "down", 0
                        events.append(("down", i))
                else:
                    state, run = "idle", 0
            elif state in ("down", "maybe_up"):
                if b:
                    state, run = "down", 0
                else:
                    run += 1
                    state = "maybe_up"
                    if run >= debounce:
                        state, run = "idle", 0
                        events.append(("up", i))
        return events

    def engine_events(bits):
        eng = TouchEngine(layout=None, debounce_frames=2)
        out = []
        grid = np.zeros((8, 8))
        ys, xs = np.arange(8)[:, None], np.arange(8)[None, :]
        blob = 10.0 * np.exp(-((xs - 4.0) ** 2 + (ys - 4.0) ** 2) / (2 * 1.5 ** 2))
        for b in bits:
            te, _, _ = eng.step_frame(PressureImage(blob if b else grid))
            out.extend((e.kind, e.frame) for e in te)
        return out

    checked = 0
    ok = True
    for n in range(1, 11):
        for bits in itertools.product((0, 1), repeat=n):
            got = engine_events(bits)
            ok = ok and got == oracle(bits)
            for kind, i in got:
                if kind == "down":   # a press needs two consecutive contact frames
                    ok = ok and bits[i] == 1 and bits[i - 1] == 1
            checked += 1
    anchor = engine_events([0, 1, 1, 1, 0, 1, 0, 0]) == [("down", 2), ("up", 7)]
    verdict("debounce-exactness", ok and anchor,
            f"{checked} sequences match the reference machine; anchor down@2/up@7")


def test_typing_scores():
    # net WPM hand cases are exact; edit distance matches a recursive oracle
    s30 = net_wpm(TypingTranscript(reference="x" * 150, typed="x" * 150, elapsed_s=60.0))
    s27 = net_wpm(TypingTranscript(reference="x" * 150, typed="y" * 3 + "x" * 147,
                                   elapsed_s=60.0))
    exact = s30.net_wpm == 30.0 and s27.net_wpm == 27.0 and s27.wpm == 30.0

    @lru_cache(maxsize=None)
    def lev(a: str, b: str) -> int:
        if not a:
            return len(b)
        if not b:
            return len(a)
        return min(lev(a[1:], b) + 1, lev(a, b[1:]) + 1,
                   lev(a[1:], b[1:]) + (a[0] != b[0]))

    rng = np.random.default_rng(7)
    alphabet = list("abcd ")
    agree = True
    for _ in range(500):
        la, lb = rng.integers(0, 13, 2)
        a = "".join(rng.choice(alphabet, la))
        b = "".join(rng.choice(alphabet, lb))
        agree = agree and char_errors(a, b) == lev(a, b)
    verdict("typing-scores", exact and agree,
            "30.0 and 27.0 exact; 500 random pairs match the recursive oracle")


def _typing_session(n_grid=(105, 185)) -> list[SessionRecord]:
    """A hand-built fully-labeled session that types 'q' then Enter."""
    w, h = n_grid
    ys, xs = np.arange(h)[:, None], np.arange(w)[None, :]

    def frame(cx=None, cy=None):
        grid = np.zeros((h, w))
        if cx is not None:
            grid = 15.0 * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * 2.5 ** 2))
        return PressureImage(grid)

    spots = [(5.0, 67.0), (5.0, 67.0), None, None,
             (89.25, 112.0), (89.25, 112.0), None, None]
    records = []
    for i, s in enumerate(spots):
        img = frame(*s) if s else frame()
        label = (ContactLabel(fingers=(0, 1, 0, 0, 0), force=0) if s
                 else ContactLabel.no_contact())
        records.append(SessionRecord(
            session_id="typing-0", participant_id=0, frame_index=i,
            timestamp=i / 15.0, domain="full", label=label, prompt="type q",
            pressure=img))
    return records


def test_determinism_and_replay():
    # same seed -> byte-identical datasets; replaying a typing session twice
    # -> byte-identical reports; weak-domain reports carry contact accuracy only
    import tempfile, os
    cfg = SynthConfig(width=16, height=16, blob_sigma=2.0, prompts_per_session=4,
                      cycles_per_prompt=1, frames_per_cycle=8,
                      weak_frames_per_prompt=8, seed=11)
    plan = SplitPlan(full_train=(0,), weak_train=(1,), full_test=(2,), weak_test=(3,))
    with tempfile.TemporaryDirectory() as d:
        pa, pb = os.path.join(d, "a.jsonl"), os.path.join(d, "b.jsonl")
        write_records(generate_dataset(cfg, plan).full_train, pa)
        write_records(generate_dataset(cfg, plan).full_train, pb)
        datasets_equal = open(pa, "rb").read() == open(pb, "rb").read()

    session = _typing_session()
    settings = ReplaySettings(mode="keyboard", reference="q")
    r1 = replay_records(session, settings)
    r2 = replay_records(session, settings)
    b1 = json.dumps(r1.report, sort_keys=True).encode()
    b2 = json.dumps(r2.report, sort_keys=True).encode()
    replay_equal = b1 == b2
    typed_q = r1.report.get("transcripts", [{}])[0].get("typed") == "q"

    weak = generate_dataset(cfg, plan).weak_test
    params = init_model(ModelConfig(width=16, height=16, channels=3))
    bins = make_bin_spec(9, 1.0, 30.0)
    weak_report = replay_records(weak, ReplaySettings(), params=params,
                                 bins=bins).report["metrics"]
    weak_only_contact = ("contact_accuracy" in weak_report
                        and "volumetric_iou" not in weak_report
                        and "contact_iou" not in weak_report)
    verdict("determinism-and-replay",
            datasets_equal and replay_equal and typed_q and weak_only_contact,
            "datasets byte-identical; replay reports byte-identical; "
            "weak replay reports contact accuracy only")


def test_throughput_budget():
    # full-size frame through the event engine in < 20 ms median
    w, h = 105, 185
    ys, xs = np.arange(h)[:, None], np.arange(w)[None, :]
    frames = []
    for i in range(60):
        grid = np.zeros((h, w))
        for cx, cy in ((20.0 + 0.3 * i, 60.0), (60.0, 100.0 + 0.2 * i), (90.0, 40.0)):
            grid += 12.0 * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * 2.5 ** 2))
        frames.append(PressureImage(grid))
    eng = TouchEngine(layout=qwerty_layout())
    times = []
    for f in frames:
        t0 = time.perf_counter()
        eng.step_frame(f)
        times.append(time.perf_counter() - t0)
    median_ms = float(np.median(times) * 1e3)
    verdict("throughput-budget", median_ms < 20.0,
            f"step_frame median {median_ms:.2f} ms on a {w}x{h} grid")
