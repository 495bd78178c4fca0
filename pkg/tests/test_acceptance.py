"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines, or
``python tests/test_acceptance.py`` for a plain summary. Criterion 9 needs a
network connection, an API key and a local copy of the UCI ADL Home A files;
without them it is reported as SKIP and never gates.
"""

from __future__ import annotations

import json
import math
import os
import random
import shutil
import sys
import tempfile
import time
from pathlib import Path

import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from adl_llm import synthetic  # noqa: E402
from adl_llm.evaluation import ecdf, score  # noqa: E402
from adl_llm.fewshot import (  # noqa: E402
    Example,
    ExamplePool,
    SelectionConfig,
    build_pool,
    select_examples,
)
from adl_llm.label_extract import Prediction, extract, normalize  # noqa: E402
from adl_llm.llm_client import Embedding, LocalEmbedder, MockLLMClient, prompt_hash  # noqa: E402
from adl_llm.model import SensorState  # noqa: E402
from adl_llm.pipeline import RunConfig, prepare_run, run_recognize  # noqa: E402
from adl_llm.segmentation import Window, WindowingConfig, segment  # noqa: E402

RESULTS: dict[int, tuple[str, str]] = {}


def report(n: int, status: str, detail: str) -> None:
    RESULTS[n] = (status, detail)
    print(f"[{status}] criterion {n}: {detail}", flush=True)


def gate(n: int, ok: bool, detail: str) -> None:
    report(n, "PASS" if ok else "FAIL", detail)
    assert ok, detail


# 1 -------------------------------------------------------------------------

def check_segmentation(streams: int = 500, seed: int = 20240501):
    rng = random.Random(seed)
    elapsed = 0.0
    mismatches = 0
    total_windows = 0
    for _ in range(streams):
        horizon = rng.uniform(50, 900)
        n = rng.randint(0, 300)
        states = []
        for i in range(n):
            t_s = rng.uniform(0, horizon)
            dur = rng.choice([rng.uniform(0.05, 5), rng.uniform(5, 300)])
            states.append(SensorState(f"S{i}", f"s{i:03d}", t_s, t_s + dur))
        states.sort(key=lambda s: (s.t_s, s.sensor_id))
        tau = rng.uniform(5, 120)
        overlap = rng.choice([0, 0.5, 0.8])
        span = (0.0, max([horizon] + [s.t_e for s in states]))
        started = time.perf_counter()
        windows = segment(states, WindowingConfig(tau, overlap), span)
        elapsed += time.perf_counter() - started
        got = [[(s.sensor_id, c.value) for s, c in w.states] for w in windows]
        want = oracles.window_association([(s.t_s, s.t_e, s.sensor_id) for s in states],
                                          tau, overlap, span)
        total_windows += len(want)
        if len(windows) != len(want) or got != [a for _, a in want] or any(
                abs(w.t - t) > 1e-9 for w, (t, _) in zip(windows, want)):
            mismatches += 1
    return mismatches, elapsed, total_windows


def test_criterion_1_segmentation_oracle():
    mismatches, elapsed, n_windows = check_segmentation()
    gate(1, mismatches == 0 and elapsed < 10,
         f"{mismatches}/500 streams differ from brute force over {n_windows} windows; "
         f"segmentation time {elapsed:.2f}s (< 10s)")


# 2 -------------------------------------------------------------------------

class _FixedEmbedder:
    tag = "fixed"

    def __init__(self, vector):
        self.vector = vector

    def embed(self, text):
        return Embedding(tuple(self.vector))


def _pool(vectors):
    return ExamplePool([Example(f"t{i}", "a", Embedding(tuple(v))) for i, v in enumerate(vectors)],
                       "fixed")


def check_selection(pools: int = 200, seed: int = 7):
    rng = random.Random(seed)
    order_mismatch = scale_mismatch = 0
    elapsed = 0.0
    for _ in range(pools):
        size = rng.randint(1, 200)
        dim = rng.randint(1, 64)
        vectors = [[rng.gauss(0, 1) for _ in range(dim)] for _ in range(size)]
        query = [rng.gauss(0, 1) for _ in range(dim)]
        k = rng.randint(1, 25)
        pool = _pool(vectors)
        started = time.perf_counter()
        got = [int(e.text[1:]) for e in select_examples(pool, "q", _FixedEmbedder(query),
                                                        SelectionConfig(k))]
        elapsed += time.perf_counter() - started
        want, _ = oracles.top_k_by_sort(vectors, query, k)
        if got != want:
            order_mismatch += 1
        c = rng.uniform(1e-3, 1e3)
        # one positive factor for the query, an independent one per pool vector
        scales = [rng.uniform(0.1, 10) for _ in vectors]
        scaled_pool = _pool([[s * x for x in v] for s, v in zip(scales, vectors)])
        scaled = [int(e.text[1:]) for e in select_examples(
            scaled_pool, "q", _FixedEmbedder([c * x for x in query]), SelectionConfig(k))]
        if set(scaled) != set(got):
            scale_mismatch += 1
    return order_mismatch, scale_mismatch, elapsed


def test_criterion_2_selection_oracle():
    order_mismatch, scale_mismatch, elapsed = check_selection()
    gate(2, order_mismatch == 0 and scale_mismatch == 0 and elapsed < 5,
         f"{order_mismatch}/200 pools differ from stable sort, "
         f"{scale_mismatch}/200 change under positive scaling; {elapsed:.2f}s (< 5s)")


# 3 -------------------------------------------------------------------------

def check_pool_invariants(datasets: int = 300, seed: int = 3):
    rng = random.Random(seed)
    vocab = [f"window text {i}" for i in range(40)]
    labels = ["A", "B", "C", "D"]
    embedder = LocalEmbedder()
    failures = 0
    for _ in range(datasets):
        base = [(rng.choice(vocab), rng.choice(labels)) for _ in range(rng.randint(0, 60))]
        dupes = [rng.choice(base) for _ in range(rng.randint(0, 20))] if base else []
        conflicts = []
        for text, label in rng.sample(base, min(len(base), rng.randint(0, 5))):
            conflicts.append((text, rng.choice([x for x in labels if x != label])))
        data = base + dupes + conflicts
        rng.shuffle(data)
        windows = [(Window(float(i), 1.0), label) for i, (_, label) in enumerate(data)]
        texts = {float(i): text for i, (text, _) in enumerate(data)}
        pool = build_pool(windows, lambda w: texts[w.t], embedder)
        pool_texts = [e.text for e in pool]
        seen: dict[str, set[str]] = {}
        for text, label in data:
            seen.setdefault(text, set()).add(label)
        clean = {t for t, ls in seen.items() if len(ls) == 1}
        ok = (len(pool_texts) == len(set(pool_texts))
              and not any(len(seen[t]) > 1 for t in pool_texts)
              and set(pool_texts) == clean
              and all(seen[e.text] == {e.label} for e in pool))
        failures += not ok
    return failures


def test_criterion_3_pool_invariants():
    failures = check_pool_invariants()
    gate(3, failures == 0, f"{failures}/300 generated datasets violate pool invariants")


# 4 -------------------------------------------------------------------------

UCI_LIKE = ["snacking", "sleeping", "showering", "leaving", "personal care", "relaxing on couch"]
MARBLE_LIKE = ["preparing lunch", "eating", "watching TV", "taking medicines", "answering phone"]


def check_label_extraction():
    emb = LocalEmbedder()
    problems = []
    if extract("Reasoning...\n{preparing lunch}", MARBLE_LIKE, emb) != ("preparing lunch", False):
        problems.append("exact case")
    if extract("{preparing midnight snack}", UCI_LIKE, emb) != ("snacking", True):
        problems.append("midnight snack fallback")

    @settings(max_examples=300, deadline=None, database=None)
    @given(st.sampled_from(MARBLE_LIKE), st.text(" \t\n", max_size=4),
           st.text(" \t\n", max_size=4), st.booleans(), st.text("abc .\n", max_size=30))
    def padded(label, left, right, upper, prefix):
        shown = label.upper() if upper else label
        assert extract(prefix + "{" + left + shown + right + "}", MARBLE_LIKE, emb) == (label, False)

    @settings(max_examples=300, deadline=None, database=None)
    @given(st.text(st.characters(whitelist_categories=("Ll", "Lu", "Zs", "Nd")),
                   min_size=1, max_size=40).filter(str.strip))
    def argmax(text):
        candidates = UCI_LIKE + MARBLE_LIKE
        if normalize(text) in {normalize(c) for c in candidates}:
            return
        label, fallback = extract("{" + text + "}", candidates, emb)
        q = emb.embed(text).values
        sims = [oracles.cosine(q, emb.embed(c).values) for c in candidates]
        best = max(sims)
        assert fallback
        assert label == next(c for c, s in zip(candidates, sims) if s >= best - 1e-12)

    for name, fn in (("padded exact path", padded), ("fallback argmax", argmax)):
        try:
            fn()
        except AssertionError:
            problems.append(name)
    return problems


def test_criterion_4_label_extraction():
    problems = check_label_extraction()
    gate(4, not problems, "all extraction checks hold" if not problems
         else "failed: " + ", ".join(problems))


# 5 -------------------------------------------------------------------------

def _write_synthetic(root: Path) -> dict[str, Path]:
    home, events, annotations = synthetic.generate(seed=7)
    paths = {"home": root / "home.yaml", "events": root / "events.csv",
             "annotations": root / "annotations.csv"}
    paths["home"].write_text(yaml.safe_dump(home, sort_keys=False), encoding="utf-8")
    paths["events"].write_text(events, encoding="utf-8")
    paths["annotations"].write_text(annotations, encoding="utf-8")
    return paths


def check_end_to_end(root: Path):
    paths = _write_synthetic(root)
    out = root / "run"
    cfg = RunConfig(home=str(paths["home"]), events=str(paths["events"]),
                    annotations=str(paths["annotations"]), out=str(out),
                    windowing=WindowingConfig.profile("marble"))
    plan, _ = prepare_run(cfg, client=MockLLMClient(default="{sleeping}"))
    activities = list(plan.meta.activities)

    # script: correct, wrong, and brace-less answers in rotation, one per prompt hash
    script: dict[str, tuple[str, str]] = {}
    for i, (bundle, window) in enumerate(zip(plan.bundles, plan.targets)):
        key = prompt_hash(bundle.user)
        if key in script:
            continue
        truth = window.truth
        wrong = activities[(activities.index(truth) + 1) % len(activities)]
        kind = i % 3
        if kind == 0:
            script[key] = (f"The subject is busy.\n{{{truth}}}", truth)
        elif kind == 1:
            script[key] = (f"Most likely:\n{{{wrong}}}", wrong)
        else:
            script[key] = (f"Thinking it over.\n{truth.upper()}", truth)
    responses = {k: v[0] for k, v in script.items()}
    expected = [script[prompt_hash(b.user)][1] for b in plan.bundles]
    truths = [w.truth for w in plan.targets]
    want, _ = oracles.weighted_f1(truths, expected)

    started = time.perf_counter()
    artifacts = []
    for _ in range(2):
        shutil.rmtree(out, ignore_errors=True)
        report = run_recognize(cfg, client=MockLLMClient(responses))
        artifacts.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    elapsed = time.perf_counter() - started
    return report, want, artifacts, elapsed, len(truths)


def test_criterion_5_end_to_end(tmp_path):
    report, want, artifacts, elapsed, n = check_end_to_end(tmp_path)
    diff = abs(report.weighted_f1 - want)
    identical = artifacts[0] == artifacts[1]
    gate(5, diff <= 1e-9 and identical and elapsed < 30,
         f"weighted F1 {report.weighted_f1:.6f} vs oracle {want:.6f} (|diff| {diff:.1e}) "
         f"on {n} windows; repeat run byte-identical: {identical}; {elapsed:.2f}s (< 30s)")


# 6 -------------------------------------------------------------------------

def check_metrics(sets: int = 1000, seed: int = 11):
    rng = random.Random(seed)
    worst = 0.0
    row_failures = 0
    for _ in range(sets):
        n_classes = rng.randint(1, 12)
        classes = [f"c{i}" for i in range(n_classes)]
        n = rng.randint(1, 200)
        truths = [rng.choice(classes) for _ in range(n)]
        predicted = [rng.choice(classes) if rng.random() < 0.5 else t for t in truths]
        preds = [Prediction(float(i), p, "", False, 0.0) for i, p in enumerate(predicted)]
        r = score(preds, [(float(i), t) for i, t in enumerate(truths)])
        want, _ = oracles.weighted_f1(truths, predicted)
        worst = max(worst, abs(r.weighted_f1 - want))
        idx = {label: i for i, label in enumerate(r.labels)}
        rows_ok = all(sum(r.confusion[idx[c]]) == r.support[c] for c in r.labels)
        total_ok = sum(map(sum, r.confusion)) == n
        row_failures += not (rows_ok and total_ok)
    return worst, row_failures


def test_criterion_6_metrics_oracle():
    worst, row_failures = check_metrics()
    gate(6, worst <= 1e-9 and row_failures == 0,
         f"max |weighted F1 - oracle| = {worst:.1e} over 1000 sets; "
         f"{row_failures} confusion row-sum violations")


# 7 -------------------------------------------------------------------------

def test_criterion_7_window_profiles():
    marble, uci = WindowingConfig.profile("marble"), WindowingConfig.profile("uci")
    ok = (marble.tau, marble.overlap, uci.tau, uci.overlap) == (16, 0.8, 60, 0.8)
    gate(7, ok, f"marble tau={marble.tau:g}s o={marble.overlap:g}; "
                f"uci tau={uci.tau:g}s o={uci.overlap:g}")


# 8 -------------------------------------------------------------------------

def check_ecdf():
    problems = []
    if ecdf([1, 2, 2, 4]) != [(1, 0.25), (2, 0.75), (4, 1.0)]:
        problems.append("fixture")

    @settings(max_examples=300, deadline=None, database=None)
    @given(st.lists(st.floats(0, 1e4), min_size=1, max_size=100))
    def prop(xs):
        pts = ecdf(xs)
        assert all(a[0] < b[0] and a[1] <= b[1] for a, b in zip(pts, pts[1:]))
        assert pts[-1][1] == 1.0
        assert all(f == sum(v <= x for v in xs) / len(xs) for x, f in pts)

    try:
        prop()
    except AssertionError:
        problems.append("property")
    return problems


def test_criterion_8_ecdf():
    problems = check_ecdf()
    gate(8, not problems, "fixture and property suite hold" if not problems
         else "failed: " + ", ".join(problems))


# 9 -------------------------------------------------------------------------

LIVE_DIR_ENV = "ADL_UCI_HOME_A"
LIVE_MAX_ENV = "ADL_LIVE_MAX_WINDOWS"


def live_requirements() -> str | None:
    if not os.environ.get("OPENAI_API_KEY"):
        return "OPENAI_API_KEY not set"
    if not os.environ.get(LIVE_DIR_ENV):
        return f"{LIVE_DIR_ENV} not set (directory made by scripts/uci_to_canonical.py)"
    return None


def check_live(root: Path):
    """Zero-shot run on UCI Home A against the configured endpoint.

    The test split is capped at ``ADL_LIVE_MAX_WINDOWS`` (default 300)
    evenly spaced windows to bound cost.
    """
    from adl_llm.pipeline import recognize, score_predictions

    data = Path(os.environ[LIVE_DIR_ENV])
    cfg = RunConfig(home=str(data / "home.yaml"), intervals=str(data / "intervals.csv"),
                    annotations=str(data / "annotations.csv"), out=str(root / "live"),
                    windowing=WindowingConfig.profile("uci"))
    plan, client = prepare_run(cfg)
    cap = int(os.environ.get(LIVE_MAX_ENV, "300"))
    if len(plan.targets) > cap:
        step = len(plan.targets) / cap
        keep = sorted({int(i * step) for i in range(cap)})
        plan.targets = [plan.targets[i] for i in keep]
        plan.bundles = [plan.bundles[i] for i in keep]
    predictions = recognize(plan, client, parallelism=4)
    return score_predictions(predictions, plan.meta.activities), len(predictions)


def test_criterion_9_live_optional(tmp_path):
    missing = live_requirements()
    if missing:
        report(9, "SKIP", f"optional live check not run: {missing}")
        pytest.skip(missing)
    try:
        rep, n = check_live(tmp_path)
    except Exception as exc:  # never gates
        report(9, "FAIL", f"optional live check errored: {exc}")
        pytest.xfail(str(exc))
    status = "PASS" if rep.weighted_f1 >= 0.85 else "FAIL"
    report(9, status, f"UCI Home A zero-shot weighted F1 {rep.weighted_f1:.3f} on {n} windows "
                      f"(expectation >= 0.85; optional)")
    if status == "FAIL":
        pytest.xfail("optional live check below expectation")


def main() -> int:
    checks = [
        test_criterion_1_segmentation_oracle, test_criterion_2_selection_oracle,
        test_criterion_3_pool_invariants, test_criterion_4_label_extraction,
        test_criterion_5_end_to_end, test_criterion_6_metrics_oracle,
        test_criterion_7_window_profiles, test_criterion_8_ecdf,
    ]
    failed = 0
    for fn in checks:
        with tempfile.TemporaryDirectory() as tmp:
            try:
                if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                    fn(Path(tmp))
                else:
                    fn()
            except AssertionError:
                failed += 1
    missing = live_requirements()
    if missing:
        report(9, "SKIP", f"optional live check not run: {missing}")
    else:
        with tempfile.TemporaryDirectory() as tmp:
            try:
                test_criterion_9_live_optional(Path(tmp))
            except BaseException as exc:  # xfail/skip outcomes are non-gating
                print(f"criterion 9 outcome: {type(exc).__name__}")
    print(json.dumps({str(k): v[0] for k, v in sorted(RESULTS.items())}))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
