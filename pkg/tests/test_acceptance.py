"""End-to-end acceptance battery.

Ten checks, each printing one ``[PASS]`` line with its measured numbers (a
failed assertion shows up as the test failing instead).  Together they pin:
exactness of the reference decoders, bit-level reproducibility, the witness
guarantees on every approximate-decode error, the invariant audits, the
comparison budget, and the error-rate orderings on the production-scale codes.
"""

import time

import numpy as np
import pytest

import tbtdec as tb
from tbtdec.codes import bits_to_int
from tbtdec.montecarlo import _make_frame, build_context


def _transmit(ctx, params, point_idx, frame, genie_zero=False):
    return _make_frame(ctx, params, point_idx, frame, genie_zero)


@pytest.mark.slow
def test_acceptance_01_exact_decoder_matches_exhaustive_search():
    """Trellis exact-ML equals brute-force ML: 1e4 frames x {1,3,5} dB x 2 codes."""
    t0 = time.perf_counter()
    frames = 10_000
    checked = 0
    for name in ("toy-conv-m2-l8", "toy-block-n8-k4-c1"):
        ctx = build_context(name)
        table = tb.codeword_table(ctx.spec)
        for point_idx, ebn0 in enumerate((1.0, 3.0, 5.0)):
            params = tb.ChannelParams(ebn0_db=ebn0, rate=ctx.rate, seed=11)
            for frame in range(frames):
                _, _, rec = _transmit(ctx, params, point_idx, frame)
                weights = tb.edge_weights(ctx.ridx.trellis, rec)
                out = tb.decode_exact_ml(ctx.ridx, weights)
                ml = tb.brute_force_ml(ctx.spec, rec, table)
                w_out = out.weight
                w_ml = tb.euclidean_weight(rec, ml)
                assert w_out == pytest.approx(w_ml, rel=1e-9)
                if not np.array_equal(out.codeword, ml):
                    # only an exact weight tie may pick a different codeword
                    assert w_out == pytest.approx(w_ml, rel=1e-12)
                checked += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    print(
        f"\n[PASS] 01 exact decoder == exhaustive search on {checked} frames "
        f"(2 codes x 3 points, rel 1e-9) in {elapsed:.1f}s"
    )


def test_acceptance_02_first_sweep_is_exact():
    """Multi-source sweep costs equal per-start sweeps on 1e3 frames."""
    frames = 500
    checked = 0
    for name in ("toy-conv-m2-l8", "toy-block-n6-k3-c2"):
        ctx = build_context(name)
        params = tb.ChannelParams(ebn0_db=2.0, rate=ctx.rate, seed=13)
        for frame in range(frames):
            _, _, rec = _transmit(ctx, params, 0, frame)
            weights = tb.edge_weights(ctx.ridx.trellis, rec)
            p1 = tb.phase1(ctx.ridx, weights)
            costs = tb.parallel_start_costs(ctx.ridx, weights)
            for p in range(ctx.ridx.trellis.n_sections + 1):
                oracle = costs[p].min(axis=0)
                assert np.all(np.abs(np.nan_to_num(p1.cost[p] - oracle)) <= 1e-12)
                assert np.array_equal(p1.cost[p], oracle)  # in fact bitwise
            checked += 1
    print(f"\n[PASS] 02 first sweep exact (<=1e-12, in fact bitwise) on {checked} frames")


def test_acceptance_03_invariant_audit_clean_and_sharp():
    """Zero violations on 1e4 honest frames; 20/20 corruptions detected."""
    ctx = build_context("toy-block-n6-k3-c2")
    ridx = ctx.ridx
    params = tb.ChannelParams(ebn0_db=1.5, rate=ctx.rate, seed=17)
    t0 = time.perf_counter()
    for frame in range(10_000):
        _, _, rec = _transmit(ctx, params, 0, frame)
        weights = tb.edge_weights(ridx.trellis, rec)
        p1 = tb.phase1(ridx, weights)
        p2 = tb.phase2(ridx, weights, p1)
        report = tb.audit_decode_invariants(ridx, weights, p1, p2)
        assert report.passed, (frame, report.violations)

    deltas = {"cost-up": 0.25, "cost-down": -0.25, "metric-down": -1e3, "dist-down": -1e3}
    detected = mutations = 0
    for kind, delta in deltas.items():
        done = 0
        for frame in range(60):
            if done >= 5:
                break
            _, _, rec = _transmit(ctx, params, 0, frame)
            weights = tb.edge_weights(ridx.trellis, rec)
            p1 = tb.phase1(ridx, weights)
            p2 = tb.phase2(ridx, weights, p1)
            rng = np.random.Generator(np.random.Philox(key=[29, frame]))
            p = int(rng.integers(1, ridx.trellis.n_sections + 1))
            if kind.startswith("cost"):
                arr = p1.cost[p]
                finite = np.flatnonzero(np.isfinite(arr))
            else:
                arr = p2.metric[p] if kind == "metric-down" else p2.dist[p]
                finite = np.flatnonzero(np.isfinite(p2.metric[p]))
            if len(finite) == 0:
                continue
            arr[int(finite[int(rng.integers(len(finite)))])] += delta
            if p == ridx.trellis.n_sections:
                p1.delta_finals = p1.cost[-1][ridx.trellis.finals]
                p2.metric_finals = p2.metric[-1][ridx.trellis.finals]
            mutations += 1
            done += 1
            if not tb.audit_decode_invariants(ridx, weights, p1, p2).passed:
                detected += 1
    assert mutations == 20
    assert detected == 20
    elapsed = time.perf_counter() - t0
    print(
        f"\n[PASS] 03 audit: 0 violations on 10000 frames, 20/20 corruptions "
        f"detected in {elapsed:.1f}s"
    )


@pytest.mark.slow
def test_acceptance_04_crossing_witness_on_every_error(tmp_path):
    """>=1e5 frames at 1-3 dB: every approximate-decode error has a cross-path witness."""
    t0 = time.perf_counter()
    runs = (("toy-conv-m2-l8", 34_000), ("toy-block-n8-k4-c1", 12_000))
    total_frames = 0
    total_mismatches = 0
    total_witnessed = 0
    for name, frames in runs:
        log = tmp_path / f"mismatch-{name}.jsonl"
        config = tb.SimConfig(
            code=name,
            ebn0_db=(1.0, 2.0, 3.0),
            frames=frames,
            seed=19,
            decoders=("two-phase-L1", "exact-ml"),
            mismatch_log=str(log),
        )
        rows = tb.run_monte_carlo(config)
        mismatches = sum(r.ml_mismatches for r in rows if r.decoder == "two-phase-L1")
        assert mismatches > 0
        reports = [tb.MismatchReport.from_json(l) for l in log.read_text().splitlines()]
        assert len(reports) == mismatches
        witnessed = sum(1 for r in reports if r.crossing_witness is not None)
        assert witnessed == mismatches
        for r in reports[:50]:
            k, j = r.crossing_witness
            assert k != j and j != r.ml_subtrellis
        total_frames += 3 * frames
        total_mismatches += mismatches
        total_witnessed += witnessed
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    print(
        f"\n[PASS] 04 crossing witness on {total_witnessed}/{total_mismatches} errors "
        f"over {total_frames} frames (2 codes at 1-3 dB) in {elapsed:.1f}s"
    )


def test_acceptance_05_semi_codeword_witness_under_genie_zero(tmp_path):
    """Genie-zero run: every error frame yields a semi-codeword witness."""
    log = tmp_path / "mismatch.jsonl"
    config = tb.SimConfig(
        code="toy-block-n8-k4-c1",
        ebn0_db=(1.0,),
        frames=20_000,
        seed=101,
        genie_zero=True,
        decoders=("two-phase-L1", "exact-ml"),
        mismatch_log=str(log),
    )
    rows = tb.run_monte_carlo(config)
    mismatches = sum(r.ml_mismatches for r in rows if r.decoder == "two-phase-L1")
    assert mismatches >= 3
    reports = [tb.MismatchReport.from_json(l) for l in log.read_text().splitlines()]
    with_witness = sum(1 for r in reports if r.semi_witness is not None)
    assert with_witness == mismatches
    for r in reports:
        assert r.semi_witness_start is not None
        assert r.semi_witness_final is not None
    print(
        f"\n[PASS] 05 semi-codeword witness on {with_witness}/{mismatches} "
        f"genie-zero errors over 20000 frames"
    )


def test_acceptance_06_07_per_frame_dominance_and_budget():
    """Per frame: exact <= L1, L2 <= L1, and L1 comparisons <= 2x one sweep."""
    frames = 2_000
    results = {}
    for name in ("toy-conv-m2-l8", "toy-block-n8-k4-c1"):
        ctx = build_context(name)
        budget = 2 * ctx.ridx.trellis.num_edges
        params = tb.ChannelParams(ebn0_db=1.0, rate=ctx.rate, seed=23)
        worst = 0
        for frame in range(frames):
            _, _, rec = _transmit(ctx, params, 0, frame)
            weights = tb.edge_weights(ctx.ridx.trellis, rec)
            exact = tb.decode_exact_ml(ctx.ridx, weights)
            l1 = tb.decode_two_phase(ctx.ridx, weights, list_size=1)
            l2 = tb.decode_two_phase(ctx.ridx, weights, list_size=2)
            assert exact.weight <= l1.weight + 1e-12 * max(1.0, abs(l1.weight))
            assert l2.weight <= l1.weight + 1e-12 * max(1.0, abs(l1.weight))
            assert l1.comparisons <= budget
            worst = max(worst, l1.comparisons)
        results[name] = (worst, budget)
    summary = ", ".join(f"{n}: {w}/{b}" for n, (w, b) in results.items())
    print(
        f"\n[PASS] 06 dominance exact<=L1 and L2<=L1 on {2 * frames} frames"
        f"\n[PASS] 07 comparison budget (worst/allowed): {summary}"
    )


def test_acceptance_08_label_spaces_match_linear_algebra():
    """Toy codes: subtrellis labels partition the code; cross labels = span."""
    checked = []
    for name in ("toy-block-n4-k2-c1", "toy-block-n6-k3-c2", "toy-block-n8-k4-c1"):
        spec = tb.get_code(name).spec()
        trellis = tb.build_tbt_product(spec)
        code = {int(bits_to_int(c)) for c in tb.enumerate_codewords(spec)}
        union = set()
        for i in range(len(trellis.starts)):
            labels = tb.subtrellis_labels(trellis, i)
            assert not (labels & union)
            union |= labels
        assert union == code
        assert tb.verify_semi_codeword_space(spec, trellis)
        checked.append(name)
    # small tail-biting convolutional code: closed-path labels == encoder image
    spec = tb.get_code("toy-conv-m1-l4").spec()
    trellis = tb.build_tbt_conv(spec)
    closed = set()
    for i in range(len(trellis.starts)):
        closed |= tb.subtrellis_labels(trellis, i)
    image = {
        int(bits_to_int(tb.encode_conv_tailbiting(spec, np.array([(m >> (3 - b)) & 1 for b in range(4)], dtype=np.uint8))))
        for m in range(16)
    }
    assert closed == image
    checked.append("toy-conv-m1-l4")
    print(f"\n[PASS] 08 label spaces match on {', '.join(checked)}")


@pytest.mark.slow
def test_acceptance_09_production_scale_error_rates():
    """mem4/mem6: 1e4 frames x {2,3,4} dB, orderings hold, under 10 min each."""
    lines = []
    for name in ("mem4-circle20", "mem6-circle48"):
        t0 = time.perf_counter()
        config = tb.SimConfig(
            code=name,
            ebn0_db=(2.0, 3.0, 4.0),
            frames=10_000,
            seed=7,
            decoders=("two-phase-L1", "two-phase-L2", "exact-ml"),
        )
        rows = tb.run_monte_carlo(config)
        elapsed = time.perf_counter() - t0
        assert elapsed < 600.0
        by = {(r.ebn0_db, r.decoder): r for r in rows}
        for ebn0 in (2.0, 3.0, 4.0):
            assert by[(ebn0, "exact-ml")].frame_errors <= by[(ebn0, "two-phase-L1")].frame_errors
            assert by[(ebn0, "two-phase-L2")].frame_errors <= by[(ebn0, "two-phase-L1")].frame_errors
        for decoder in ("two-phase-L1", "two-phase-L2", "exact-ml"):
            bers = [by[(e, decoder)].ber for e in (2.0, 3.0, 4.0)]
            assert bers[0] >= bers[1] >= bers[2]
        fer = by[(3.0, "two-phase-L1")].fer
        lines.append(f"{name} in {elapsed:.0f}s (FER@3dB L1={fer:.2e})")
    print(f"\n[PASS] 09 production-scale orderings: " + "; ".join(lines))


def test_acceptance_10_results_invariant_to_worker_count(tmp_path):
    """CSV and traces byte-identical no matter how work is split."""
    texts = []
    for workers in (1, 2, 3):
        config = tb.SimConfig(
            code="toy-conv-m2-l8",
            ebn0_db=(1.0, 3.0),
            frames=400,
            seed=31,
            decoders=("two-phase-L1", "two-phase-L2", "exact-ml", "phase1-only"),
            workers=workers,
            mismatch_log=str(tmp_path / f"m{workers}.jsonl"),
        )
        texts.append(tb.emit_results(tb.run_monte_carlo(config)))
    assert texts[0] == texts[1] == texts[2]
    logs = [(tmp_path / f"m{w}.jsonl").read_text() for w in (1, 2, 3)]
    assert logs[0] == logs[1] == logs[2]
    config = tb.SimConfig(code="toy-conv-m2-l8", ebn0_db=(2.0,), frames=5, seed=31)
    _, trace_a = tb.trace_frame(config, frame=3)
    _, trace_b = tb.trace_frame(config, frame=3)
    assert trace_a == trace_b
    print("\n[PASS] 10 byte-identical CSV, mismatch logs and traces across worker counts")
