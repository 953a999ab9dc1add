"""Two-phase decoder tests: exactness, dominance, lists, fallback."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

import tbtdec as tb
from tbtdec.codes import bits_to_int

from conftest import enumerate_paths, random_received


def _weights_of(ridx, seed, frame):
    rec = random_received(ridx, seed=seed, frame=frame)
    return rec, tb.edge_weights(ridx.trellis, rec)


# ---------------------------------------------------------------------------
# Phase 1

def test_phase1_is_viterbi_when_single_start():
    rows = (
        tb.GeneratorRow(bits=(1, 1, 0, 0), span=tb.Span(1, 2, "linear")),
        tb.GeneratorRow(bits=(0, 1, 1, 0), span=tb.Span(2, 3, "linear")),
    )
    spec = tb.validate_generator(tb.GeneratorSpec(n=4, k=2, rows=rows))
    ridx = tb.build_reach_index(tb.build_tbt_product(spec))
    assert ridx.t == 1
    _, weights = _weights_of(ridx, seed=2, frame=0)
    p1 = tb.phase1(ridx, weights)
    sub = tb.viterbi_subtrellis(ridx, weights, 0)
    assert float(p1.delta_finals[0]) == sub.weight
    out = tb.decode_two_phase(ridx, weights)
    assert out.stage == "phase1"
    assert np.array_equal(out.codeword, sub.codeword)


@pytest.mark.parametrize("frame", range(25))
def test_phase1_cost_matches_per_start_sweeps(ridx_conv_m2, frame):
    ridx = ridx_conv_m2
    _, weights = _weights_of(ridx, seed=5, frame=frame)
    p1 = tb.phase1(ridx, weights)
    costs = tb.parallel_start_costs(ridx, weights)
    for p in range(ridx.trellis.n_sections + 1):
        joint = costs[p].min(axis=0)
        # bitwise equality: the multi-source sweep performs the same float
        # additions as the cheapest per-start sweep at every vertex
        assert np.array_equal(p1.cost[p], joint)


def test_phase1_unit_weights_count_sections(ridx_conv_m1):
    ridx = ridx_conv_m1
    weights = tb.WeightAssignment(
        sections=[np.ones(sec.num_edges) for sec in ridx.trellis.sections]
    )
    p1 = tb.phase1(ridx, weights)
    for p in range(ridx.trellis.n_sections + 1):
        finite = np.isfinite(p1.cost[p])
        assert np.all(p1.cost[p][finite] == p)


def test_phase1_survivor_is_reachable(ridx_block6):
    ridx = ridx_block6
    _, weights = _weights_of(ridx, seed=7, frame=1)
    p1 = tb.phase1(ridx, weights)
    for i, f in enumerate(ridx.trellis.finals):
        s = int(p1.surv_finals[i])
        assert ridx.fwd[-1][f] >> s & 1


def test_phase1_comparisons_equal_edge_count(ridx_block6, ridx_conv_m2):
    for ridx in (ridx_block6, ridx_conv_m2):
        _, weights = _weights_of(ridx, seed=11, frame=0)
        p1 = tb.phase1(ridx, weights)
        assert p1.comparisons == ridx.trellis.num_edges


def test_noiseless_frame_stops_in_phase1(conv_m2, ridx_conv_m2):
    msg = np.array([1, 0, 1, 1, 0, 0, 1, 0], dtype=np.uint8)
    c = tb.encode_conv_tailbiting(conv_m2, msg)
    rec = tb.ReceivedVector(r=tb.bpsk_modulate(c))
    weights = tb.edge_weights(ridx_conv_m2.trellis, rec)
    out = tb.decode_two_phase(ridx_conv_m2, weights)
    assert out.stage == "phase1"
    assert out.weight == 0.0
    assert np.array_equal(out.codeword, c)


def test_crossing_frame_defers_to_phase2(ridx_block4):
    _, weights = _weights_of(ridx_block4, seed=23, frame=0)
    p1 = tb.phase1(ridx_block4, weights)
    assert tb.phase1_decision(ridx_block4, p1, weights) is None
    out = tb.decode_two_phase(ridx_block4, weights)
    assert out.stage == "phase2"


# ---------------------------------------------------------------------------
# Phase 2

def test_phase2_seeds_participants_with_final_costs(ridx_block6):
    ridx = ridx_block6
    _, weights = _weights_of(ridx, seed=23, frame=0)
    p1 = tb.phase1(ridx, weights)
    p2 = tb.phase2(ridx, weights, p1)
    starts = ridx.trellis.starts
    for i in range(ridx.t):
        if p2.participants[i]:
            assert float(p2.metric[0][starts[i]]) == float(p1.delta_finals[i])
            assert float(p2.dist[0][starts[i]]) == 0.0
        else:
            assert not np.isfinite(p2.metric[0][starts[i]])


def test_phase2_prune_drops_expensive_crossed_finals(ridx_conv_m2):
    ridx = ridx_conv_m2
    for frame in range(40):
        _, weights = _weights_of(ridx, seed=31, frame=frame)
        p1 = tb.phase1(ridx, weights)
        own = p1.surv_finals == np.arange(ridx.t)
        if not own.any():
            continue
        pruned = tb.phase2(ridx, weights, p1, participation_prune=True).participants
        full = tb.phase2(ridx, weights, p1, participation_prune=False).participants
        threshold = p1.delta_finals[own].min()
        assert np.array_equal(pruned, full & (p1.delta_finals <= threshold))
        assert not pruned[own].any()


def test_phase2_metric_at_final_is_true_path_weight(ridx_block6):
    # at a participant's own final the correction telescopes away, up to
    # float rounding; the traced path weight must match to high precision
    ridx = ridx_block6
    checked = 0
    for frame in range(30):
        _, weights = _weights_of(ridx, seed=23, frame=frame)
        p1 = tb.phase1(ridx, weights)
        if tb.phase1_decision(ridx, p1, weights) is not None:
            continue
        p2 = tb.phase2(ridx, weights, p1)
        out = tb.final_decision(ridx, weights, p1, p2)
        if out.stage != "phase2":
            continue
        i = out.subtrellis
        assert float(p2.metric_finals[i]) == pytest.approx(out.weight, rel=1e-9)
        assert int(p2.trellis_finals[i]) == i
        checked += 1
    assert checked > 0


def test_disabling_prune_never_hurts(ridx_block6):
    ridx = ridx_block6
    for frame in range(60):
        _, weights = _weights_of(ridx, seed=37, frame=frame)
        a = tb.decode_two_phase(ridx, weights, participation_prune=True)
        b = tb.decode_two_phase(ridx, weights, participation_prune=False)
        assert b.weight <= a.weight + 1e-12
        assert b.comparisons >= a.comparisons


# ---------------------------------------------------------------------------
# Whole-decoder properties

@pytest.mark.parametrize("name", ["toy-block-n4-k2-c1", "toy-block-n6-k3-c2"])
def test_outcome_codeword_is_in_code(name):
    entry = tb.get_code(name)
    spec = entry.spec()
    ridx = tb.build_reach_index(tb.build_tbt_product(spec))
    code = {bits_to_int(c) for c in tb.enumerate_codewords(spec)}
    for frame in range(50):
        _, weights = _weights_of(ridx, seed=41, frame=frame)
        for out in (
            tb.decode_two_phase(ridx, weights),
            tb.decode_phase1_only(ridx, weights),
            tb.decode_exact_ml(ridx, weights),
        ):
            assert bits_to_int(out.codeword) in code


def test_two_phase_dominates_exact(ridx_block6, ridx_conv_m2):
    for ridx in (ridx_block6, ridx_conv_m2):
        for frame in range(60):
            _, weights = _weights_of(ridx, seed=43, frame=frame)
            exact = tb.decode_exact_ml(ridx, weights)
            out = tb.decode_two_phase(ridx, weights)
            only1 = tb.decode_phase1_only(ridx, weights)
            assert out.weight >= exact.weight - 1e-9
            assert only1.weight >= exact.weight - 1e-9
            if only1.stage == "phase1":
                # the final pool always contains every loop-closing final, so
                # the revised decision can only improve on the sweep-1 answer
                assert only1.weight >= out.weight - 1e-9


def test_exact_ml_matches_brute_force(block6, conv_m1, ridx_block6, ridx_conv_m1):
    for spec, ridx in ((block6, ridx_block6), (conv_m1, ridx_conv_m1)):
        table = tb.codeword_table(spec)
        for frame in range(80):
            rec, weights = _weights_of(ridx, seed=47, frame=frame)
            out = tb.decode_exact_ml(ridx, weights)
            ml = tb.brute_force_ml(spec, rec, table)
            assert np.array_equal(out.codeword, ml)
            assert out.weight == pytest.approx(tb.euclidean_weight(rec, ml), rel=1e-9)


def test_brute_force_all_tied_picks_lexicographic_least(block6):
    rec = tb.ReceivedVector(r=np.zeros(block6.n))
    ml = tb.brute_force_ml(block6, rec)
    assert not ml.any()


def test_exact_ml_counts_restricted_sweeps(ridx_block6):
    _, weights = _weights_of(ridx_block6, seed=53, frame=0)
    out = tb.decode_exact_ml(ridx_block6, weights)
    assert out.comparisons == int(ridx_block6.member_counts.sum())
    assert out.edge_visits == ridx_block6.t * ridx_block6.trellis.num_edges


def test_comparison_budget_two_sweeps(ridx_block6, ridx_conv_m2):
    for ridx in (ridx_block6, ridx_conv_m2):
        budget = 2 * ridx.trellis.num_edges
        for frame in range(60):
            _, weights = _weights_of(ridx, seed=59, frame=frame)
            out = tb.decode_two_phase(ridx, weights)
            assert out.comparisons <= budget


def test_viterbi_subtrellis_matches_enumeration(ridx_block6):
    ridx = ridx_block6
    _, weights = _weights_of(ridx, seed=61, frame=0)
    table = tb.all_pairs_start_final_distances(ridx, weights)
    for i in range(ridx.t):
        best = np.inf
        for a, b, edges, _ in enumerate_paths(ridx.trellis):
            if a == i and b == i:
                w = sum(float(weights.sections[p][e]) for p, e in enumerate(edges))
                best = min(best, w)
        sub = tb.viterbi_subtrellis(ridx, weights, i)
        assert sub.weight == pytest.approx(best, rel=1e-12)
        assert float(table.d[i, i]) == pytest.approx(best, rel=1e-12)


# ---------------------------------------------------------------------------
# List variant

def test_list_size_one_matches_scalar_pipeline(ridx_block6):
    ridx = ridx_block6
    for frame in range(40):
        _, weights = _weights_of(ridx, seed=67, frame=frame)
        a = tb.decode_two_phase(ridx, weights, list_size=1)
        p1 = tb.phase1(ridx, weights)
        stopped = tb.phase1_decision(ridx, p1, weights)
        if stopped is not None:
            b = stopped
        else:
            p2 = tb.phase2(ridx, weights, p1)
            b = tb.final_decision(ridx, weights, p1, p2)
        assert np.array_equal(a.codeword, b.codeword)
        assert a.weight == b.weight
        assert a.stage == b.stage


@given(st.integers(min_value=0, max_value=5_000))
def test_larger_list_never_worse(ridx_block6, frame):
    _, weights = _weights_of(ridx_block6, seed=71, frame=frame)
    w1 = tb.decode_two_phase(ridx_block6, weights, list_size=1).weight
    w2 = tb.decode_two_phase(ridx_block6, weights, list_size=2).weight
    assert w2 <= w1


def test_big_list_recovers_exact_ml(ridx_block4):
    ridx = ridx_block4
    for frame in range(60):
        _, weights = _weights_of(ridx, seed=73, frame=frame)
        exact = tb.decode_exact_ml(ridx, weights)
        out = tb.decode_two_phase(ridx, weights, list_size=8)
        assert out.weight == pytest.approx(exact.weight, rel=1e-12)


def test_list_comparisons_within_scaled_budget(ridx_block6):
    ridx = ridx_block6
    for frame in range(20):
        _, weights = _weights_of(ridx, seed=79, frame=frame)
        out = tb.decode_two_phase(ridx, weights, list_size=2)
        assert out.comparisons <= (1 + 2 * 2) * ridx.trellis.num_edges


# ---------------------------------------------------------------------------
# Fallback (requires an inconsistent reach index; a built one never starves)

def _doctored_ridx():
    """A reach index whose masks starve the scalar second sweep.

    Vertices per index: {s0, s1} -> {a, b} -> {f0, f1}.  Membership is kept
    only on s0->a (bit 0), s1->a (bit 1) and a->f0 (bit 0).  The weights make
    the subtrellis-1 candidate win vertex a in the second sweep (0.5 < 1.0)
    and then dead-end on the bit-0-only edge, while subtrellis 0 — which
    could have continued — was shadowed.  A built index never has such bits
    (every surviving candidate can reach its own final), so this is the only
    way to reach the fallback branch.
    """
    trellis = tb.Trellis.from_edge_lists(
        label_width=1,
        v_counts=[2, 2, 2],
        edge_lists=[
            [(0, 0, 0), (1, 0, 1), (0, 1, 1), (1, 1, 0)],
            [(0, 0, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1)],
        ],
        starts=[0, 1],
        finals=[0, 1],
    )
    ridx = tb.build_reach_index(trellis)
    # canonical per-section edge order is (to, frm):
    # section 1: s0->a, s1->a, s0->b, s1->b; section 2: a->f0, b->f0, a->f1, b->f1
    ridx.edge_masks[0] = np.array([[1], [2], [0], [0]], dtype=np.uint64)
    ridx.edge_masks[1] = np.array([[1], [0], [0], [0]], dtype=np.uint64)
    weights = tb.WeightAssignment(
        sections=[
            np.array([1.0, 0.0, 0.5, 1e6]),
            np.array([0.0, 1e6, 2e6, 0.0]),
        ]
    )
    return ridx, weights


def test_starved_pool_falls_back_to_restricted_viterbi():
    ridx, weights = _doctored_ridx()
    p1 = tb.phase1(ridx, weights)
    assert tb.phase1_decision(ridx, p1, weights) is None
    out = tb.decode_two_phase(ridx, weights)
    assert out.stage == "fallback"
    assert out.fallback_comparisons > 0
    assert np.isfinite(out.weight)
    # a larger list keeps the shadowed candidate alive and decodes normally
    out2 = tb.decode_two_phase(ridx, weights, list_size=2)
    assert out2.stage == "phase2"
    assert out2.weight <= out.weight


def test_phase1_only_fallback_on_starved_phase1():
    ridx, weights = _doctored_ridx()
    out = tb.decode_phase1_only(ridx, weights)
    assert out.stage in ("phase1", "fallback")
    assert np.isfinite(out.weight)


def test_weights_shape_checked(ridx_block4):
    bad = tb.WeightAssignment(sections=[np.zeros(3)] * 4)
    with pytest.raises(tb.LengthMismatchError):
        tb.phase1(ridx_block4, bad)
