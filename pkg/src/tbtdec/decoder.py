"""Two-phase decoding on tail-biting trellises.

The decoder makes two Viterbi-like passes over the trellis:

* Phase 1 (estimation) relaxes every edge once with *all* starts seeded at
  cost zero.  Afterwards ``cost[v]`` is the cheapest way to reach v from any
  start — a lower bound obtained on the semi-codeword space — and each vertex
  remembers which start its survivor came from.  If the cheapest final's
  survivor is its own paired start, that survivor is already the cheapest
  path overall and decoding stops: nothing, codeword or not, can beat it.

* Phase 2 (revision) re-walks the trellis restricted to paths that stay
  inside a single subtrellis, using the membership masks for an O(1) edge
  test.  Each surviving candidate carries the identity of its subtrellis and
  a corrected metric ``dist[u] + cost_to_come_lower_bound`` so that at a
  final state the metric equals the true path weight.  The final decision
  picks the best codeword seen by either phase.

Both passes do one cost comparison per scanned edge (phase 2 only for edges
that pass membership), so the comparison count is at most twice that of a
single full-trellis Viterbi sweep.  The exhaustive alternative — one
restricted Viterbi sweep per subtrellis — is implemented as
``decode_exact_ml`` and doubles as the maximum-likelihood oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ReceivedVector, WeightAssignment
from .errors import LengthMismatchError, NoPathError
from .trellis import ReachIndex, label_bits

__all__ = [
    "Phase1State",
    "Phase2State",
    "ListState",
    "DecodeOutcome",
    "SubtrellisResult",
    "DistanceTable",
    "phase1",
    "phase1_decision",
    "phase2",
    "final_decision",
    "decode_two_phase",
    "decode_phase1_only",
    "viterbi_subtrellis",
    "decode_exact_ml",
    "brute_force_ml",
    "euclidean_weight",
    "all_pairs_start_final_distances",
    "parallel_start_costs",
]


# ---------------------------------------------------------------------------
# State containers

@dataclass
class Phase1State:
    """Multi-source sweep results: per-index cost / survivor-start / pred arrays."""

    cost: list[np.ndarray]
    surv: list[np.ndarray]
    pred_edge: list[np.ndarray]  # entry p is for time index p+1
    comparisons: int
    edge_visits: int
    delta_finals: np.ndarray  # (t,) cost at final i
    surv_finals: np.ndarray  # (t,) survivor start at final i


@dataclass
class Phase2State:
    """Subtrellis-restricted sweep: metric / trellis id / path dist / pred arrays."""

    metric: list[np.ndarray]
    trellis: list[np.ndarray]
    dist: list[np.ndarray]
    pred_edge: list[np.ndarray]
    participants: np.ndarray  # bool (t,)
    comparisons: int
    edge_visits: int
    metric_finals: np.ndarray
    trellis_finals: np.ndarray


@dataclass
class ListState:
    """Per-vertex top-L candidate lists kept by the list-decoding variant."""

    metric: list[np.ndarray]  # (L, V) per index
    trellis: list[np.ndarray]
    dist: list[np.ndarray]
    pred_edge: list[np.ndarray]
    pred_rank: list[np.ndarray]
    comparisons: int


@dataclass
class DecodeOutcome:
    codeword: np.ndarray  # uint8 (n_sections * label_width,)
    path: np.ndarray  # int32 (n_sections + 1,) local vertex ids
    weight: float
    stage: str  # "phase1" | "phase2" | "fallback" | "exact"
    subtrellis: int
    comparisons: int
    edge_visits: int
    fallback_comparisons: int = 0


@dataclass
class SubtrellisResult:
    weight: float
    path: np.ndarray
    codeword: np.ndarray
    comparisons: int


@dataclass
class DistanceTable:
    """d[k, j] = weight of the cheapest start-k..final-j path (inf if none)."""

    d: np.ndarray


# ---------------------------------------------------------------------------
# Shared sweep machinery

def _check_weights(ridx: ReachIndex, weights: WeightAssignment) -> None:
    for p, sec in enumerate(ridx.trellis.sections):
        if len(weights.sections[p]) != sec.num_edges:
            raise LengthMismatchError(f"weights for section {p + 1} do not match edge count")


def _grouped_first_min(values: np.ndarray, starts: np.ndarray, sizes: np.ndarray):
    """Per-group minimum plus the first edge attaining it (ties: lowest edge id)."""
    best = np.minimum.reduceat(values, starts)
    tie = values == np.repeat(best, sizes)
    pos = np.where(tie, np.arange(len(values)), len(values))
    return best, np.minimum.reduceat(pos, starts)


def _traceback(
    ridx: ReachIndex,
    pred_edge: list[np.ndarray],
    final_vertex: int,
    weights: WeightAssignment,
):
    """Walk pred edges from a final back to index 0: path, labels, true weight.

    The weight is re-accumulated left to right over the traced edges — the
    same float additions the sweep performed — so it is the exact path sum
    rather than a metric that went through a telescoping correction.
    """
    trellis = ridx.trellis
    n, width = trellis.n_sections, trellis.label_width
    path = np.zeros(n + 1, dtype=np.int32)
    bits = np.zeros(n * width, dtype=np.uint8)
    edges = np.zeros(n, dtype=np.int64)
    v = int(final_vertex)
    path[n] = v
    for p in range(n - 1, -1, -1):
        sec = trellis.sections[p]
        e = int(pred_edge[p][v])
        edges[p] = e
        bits[p * width : (p + 1) * width] = label_bits(int(sec.labels[e]), width)
        v = int(sec.frm[e])
        path[p] = v
    weight = 0.0
    for p in range(n):
        weight += float(weights.sections[p][edges[p]])
    return path, bits, weight


# ---------------------------------------------------------------------------
# Phase 1

def phase1(ridx: ReachIndex, weights: WeightAssignment) -> Phase1State:
    """One forward sweep with every start seeded at zero cost.

    Ties between equal-cost candidates go to the earliest edge in the
    section's canonical order, so results are deterministic and match a
    scalar edge-by-edge relaxation with strict-improvement updates.
    """
    _check_weights(ridx, weights)
    trellis = ridx.trellis
    t = ridx.t
    cost = [np.full(v, np.inf) for v in trellis.v_counts]
    surv = [np.zeros(v, dtype=np.int32) for v in trellis.v_counts]
    pred_edge: list[np.ndarray] = []
    cost[0][trellis.starts] = 0.0
    surv[0][trellis.starts] = np.arange(t, dtype=np.int32)
    comparisons = 0
    for p, sec in enumerate(trellis.sections):
        cand = cost[p][sec.frm] + weights.sections[p]
        best, win = _grouped_first_min(cand, ridx.group_starts[p], ridx.group_sizes[p])
        cost[p + 1] = best
        surv[p + 1] = surv[p][sec.frm[win]]
        pred_edge.append(win.astype(np.int32))
        comparisons += sec.num_edges
    return Phase1State(
        cost=cost,
        surv=surv,
        pred_edge=pred_edge,
        comparisons=comparisons,
        edge_visits=comparisons,
        delta_finals=cost[-1][trellis.finals],
        surv_finals=surv[-1][trellis.finals],
    )


def phase1_decision(
    ridx: ReachIndex, p1: Phase1State, weights: WeightAssignment
) -> DecodeOutcome | None:
    """Stop if the cheapest final's survivor closed its own subtrellis."""
    j = int(np.argmin(p1.delta_finals))
    if int(p1.surv_finals[j]) != j:
        return None
    path, bits, weight = _traceback(ridx, p1.pred_edge, ridx.trellis.finals[j], weights)
    return DecodeOutcome(
        codeword=bits,
        path=path,
        weight=weight,
        stage="phase1",
        subtrellis=j,
        comparisons=p1.comparisons,
        edge_visits=p1.edge_visits,
    )


# ---------------------------------------------------------------------------
# Phase 2

def _participants(p1: Phase1State, prune: bool) -> np.ndarray:
    t = len(p1.delta_finals)
    own = p1.surv_finals == np.arange(t)
    crossed = ~own
    if not prune:
        return crossed
    threshold = p1.delta_finals[own].min() if own.any() else np.inf
    return crossed & (p1.delta_finals <= threshold)


def phase2(
    ridx: ReachIndex,
    weights: WeightAssignment,
    p1: Phase1State,
    participation_prune: bool = True,
) -> Phase2State:
    """Second sweep restricted to membership-consistent paths.

    A subtrellis participates when phase 1 crossed its final (and, under the
    default pruning rule, when its phase-1 final cost does not exceed the best
    final that already closed as a codeword — such a subtrellis could never
    win).  Each start seeds metric = its final's phase-1 cost; the update for
    an edge (u, v) inside subtrellis j adds the edge weight to the path dist
    and corrects the heuristic part: metric = dist + cost(final j) - cost(v).
    At final j the correction telescopes away and metric is the exact weight
    of the traced path.
    """
    trellis = ridx.trellis
    t = ridx.t
    participants = _participants(p1, participation_prune)
    metric = [np.full(v, np.inf) for v in trellis.v_counts]
    tr = [np.zeros(v, dtype=np.int32) for v in trellis.v_counts]
    dist = [np.full(v, np.inf) for v in trellis.v_counts]
    pred_edge: list[np.ndarray] = []
    tr[0][trellis.starts] = np.arange(t, dtype=np.int32)
    active = trellis.starts[participants]
    metric[0][active] = p1.delta_finals[participants]
    dist[0][active] = 0.0
    d_final = p1.delta_finals
    comparisons = 0
    edge_visits = 0
    for p, sec in enumerate(trellis.sections):
        tr_u = tr[p][sec.frm]
        ok = np.isfinite(metric[p][sec.frm]) & ridx.member_bit(p, tr_u)
        step = dist[p][sec.frm] + weights.sections[p]
        cand = np.where(ok, (step + d_final[tr_u]) - p1.cost[p + 1][sec.to], np.inf)
        best, win = _grouped_first_min(cand, ridx.group_starts[p], ridx.group_sizes[p])
        metric[p + 1] = best
        tr[p + 1] = tr_u[win]
        dist[p + 1] = step[win]
        pred_edge.append(win.astype(np.int32))
        comparisons += int(ok.sum())
        edge_visits += sec.num_edges
    return Phase2State(
        metric=metric,
        trellis=tr,
        dist=dist,
        pred_edge=pred_edge,
        participants=participants,
        comparisons=comparisons,
        edge_visits=edge_visits,
        metric_finals=metric[-1][trellis.finals],
        trellis_finals=tr[-1][trellis.finals],
    )


def final_decision(
    ridx: ReachIndex,
    weights: WeightAssignment,
    p1: Phase1State,
    p2: Phase2State,
) -> DecodeOutcome:
    """Pick the best codeword either phase produced; fall back if neither did.

    Candidates: finals phase 1 closed as codewords (at their phase-1 cost) and
    finals phase 2 assigned a finite metric.  Ties prefer phase 1, then the
    lowest subtrellis index.  If the pool is empty — possible only when
    membership starves every participant — run a single restricted Viterbi
    sweep on the most promising subtrellis so a codeword is always returned.
    """
    t = ridx.t
    own = p1.surv_finals == np.arange(t)
    best: tuple | None = None
    for i in range(t):
        if own[i]:
            key = (float(p1.delta_finals[i]), 0, i)
            if best is None or key < best:
                best = key
    for i in range(t):
        m = float(p2.metric_finals[i])
        if np.isfinite(m):
            key = (m, 1, i)
            if best is None or key < best:
                best = key
    comparisons = p1.comparisons + p2.comparisons
    edge_visits = p1.edge_visits + p2.edge_visits
    if best is None:
        i_star = int(np.argmin(p1.delta_finals))
        sub = viterbi_subtrellis(ridx, weights, i_star)
        return DecodeOutcome(
            codeword=sub.codeword,
            path=sub.path,
            weight=sub.weight,
            stage="fallback",
            subtrellis=i_star,
            comparisons=comparisons,
            edge_visits=edge_visits,
            fallback_comparisons=sub.comparisons,
        )
    _, stage_code, i = best
    if stage_code == 0:
        path, bits, weight = _traceback(ridx, p1.pred_edge, ridx.trellis.finals[i], weights)
        stage = "phase1"
    else:
        path, bits, weight = _traceback(ridx, p2.pred_edge, ridx.trellis.finals[i], weights)
        stage = "phase2"
    return DecodeOutcome(
        codeword=bits,
        path=path,
        weight=weight,
        stage=stage,
        subtrellis=i,
        comparisons=comparisons,
        edge_visits=edge_visits,
    )


# ---------------------------------------------------------------------------
# List variant

def _phase2_list(
    ridx: ReachIndex,
    weights: WeightAssignment,
    p1: Phase1State,
    list_size: int,
    participants: np.ndarray,
) -> ListState:
    """Keep the best `list_size` candidates per vertex instead of one.

    Candidate lists hold at most one entry per subtrellis first (each
    subtrellis's cheapest), then fill remaining slots with the next-best
    leftovers by metric.  Ordering ties follow (metric, source rank, edge io
    order), which reduces to the scalar rule on rank 0.
    """
    trellis = ridx.trellis
    t = ridx.t
    L = list_size
    d_final = p1.delta_finals
    metric = [np.full((L, v), np.inf) for v in trellis.v_counts]
    tr = [np.zeros((L, v), dtype=np.int32) for v in trellis.v_counts]
    dist = [np.full((L, v), np.inf) for v in trellis.v_counts]
    pred_edge = [np.zeros((L, v), dtype=np.int32) for v in trellis.v_counts[1:]]
    pred_rank = [np.zeros((L, v), dtype=np.int32) for v in trellis.v_counts[1:]]
    tr[0][0, trellis.starts] = np.arange(t, dtype=np.int32)
    active = trellis.starts[participants]
    metric[0][0, active] = d_final[participants]
    dist[0][0, active] = 0.0
    comparisons = 0
    for p, sec in enumerate(trellis.sections):
        E = sec.num_edges
        tr_u = tr[p][:, sec.frm]  # (L, E)
        ok = np.isfinite(metric[p][:, sec.frm]) & ridx.member_bit(p, tr_u)
        step = dist[p][:, sec.frm] + weights.sections[p][None, :]
        cand = np.where(
            ok, (step + d_final[tr_u]) - p1.cost[p + 1][sec.to][None, :], np.inf
        )
        comparisons += int(ok.sum())
        flat = cand.ravel()
        alive = np.flatnonzero(np.isfinite(flat))
        if len(alive) == 0:
            continue
        c_met = flat[alive]
        c_to = np.tile(sec.to, L)[alive]
        c_tr = tr_u.ravel()[alive]
        c_step = step.ravel()[alive]
        c_edge = np.tile(np.arange(E, dtype=np.int32), L)[alive]
        c_rank = np.repeat(np.arange(L, dtype=np.int32), E)[alive]
        order_id = np.arange(len(alive))
        # Cheapest candidate of each (vertex, subtrellis) pair gets priority.
        by_pair = np.lexsort((order_id, c_met, c_tr, c_to))
        firsts = np.ones(len(alive), dtype=bool)
        firsts[1:] = (c_to[by_pair][1:] != c_to[by_pair][:-1]) | (
            c_tr[by_pair][1:] != c_tr[by_pair][:-1]
        )
        stage = np.ones(len(alive), dtype=np.int8)
        stage[by_pair[firsts]] = 0
        final_order = np.lexsort((order_id, c_met, stage, c_to))
        to_sorted = c_to[final_order]
        new_group = np.ones(len(alive), dtype=bool)
        new_group[1:] = to_sorted[1:] != to_sorted[:-1]
        group_anchor = np.repeat(
            np.flatnonzero(new_group),
            np.diff(np.append(np.flatnonzero(new_group), len(alive))),
        )
        slot = np.arange(len(alive)) - group_anchor
        take = slot < L
        sel = final_order[take]
        rows = slot[take]
        cols = to_sorted[take]
        metric[p + 1][rows, cols] = c_met[sel]
        tr[p + 1][rows, cols] = c_tr[sel]
        dist[p + 1][rows, cols] = c_step[sel]
        pred_edge[p][rows, cols] = c_edge[sel]
        pred_rank[p][rows, cols] = c_rank[sel]
    return ListState(
        metric=metric,
        trellis=tr,
        dist=dist,
        pred_edge=pred_edge,
        pred_rank=pred_rank,
        comparisons=comparisons,
    )


def _traceback_list(
    ridx: ReachIndex,
    ls: ListState,
    final_vertex: int,
    rank: int,
    weights: WeightAssignment,
):
    trellis = ridx.trellis
    n, width = trellis.n_sections, trellis.label_width
    path = np.zeros(n + 1, dtype=np.int32)
    bits = np.zeros(n * width, dtype=np.uint8)
    edges = np.zeros(n, dtype=np.int64)
    v, r = int(final_vertex), int(rank)
    path[n] = v
    for p in range(n - 1, -1, -1):
        sec = trellis.sections[p]
        e = int(ls.pred_edge[p][r, v])
        r = int(ls.pred_rank[p][r, v])
        edges[p] = e
        bits[p * width : (p + 1) * width] = label_bits(int(sec.labels[e]), width)
        v = int(sec.frm[e])
        path[p] = v
    weight = 0.0
    for p in range(n):
        weight += float(weights.sections[p][edges[p]])
    return path, bits, weight


def decode_two_phase(
    ridx: ReachIndex,
    weights: WeightAssignment,
    list_size: int = 1,
    participation_prune: bool = True,
) -> DecodeOutcome:
    """Run both phases; with list_size > 1 also track top-L candidate lists.

    The list run keeps the single-candidate recursion alongside the lists and
    pools the finals of both, so enlarging the list can only improve (or tie)
    the returned weight, frame by frame.
    """
    p1 = phase1(ridx, weights)
    stopped = phase1_decision(ridx, p1, weights)
    if stopped is not None:
        return stopped
    p2 = phase2(ridx, weights, p1, participation_prune)
    scalar = final_decision(ridx, weights, p1, p2)
    if list_size <= 1:
        return scalar
    ls = _phase2_list(ridx, weights, p1, list_size, p2.participants)
    best: tuple | None = None
    final_metrics = ls.metric[-1][:, ridx.trellis.finals]  # (L, t)
    for i in range(ridx.t):
        for r in range(list_size):
            m = float(final_metrics[r, i])
            if np.isfinite(m):
                key = (m, i, r)
                if best is None or key < best:
                    best = key
    comparisons = scalar.comparisons + ls.comparisons
    if best is not None:
        _, i, r = best
        path, bits, weight = _traceback_list(
            ridx, ls, ridx.trellis.finals[i], r, weights
        )
        # Compare true path weights; the single-candidate result wins ties so
        # a larger list can only strictly improve the decision.
        if scalar.stage == "fallback" or weight < scalar.weight:
            return DecodeOutcome(
                codeword=bits,
                path=path,
                weight=weight,
                stage="phase2",
                subtrellis=i,
                comparisons=comparisons,
                edge_visits=scalar.edge_visits,
            )
    out = DecodeOutcome(
        codeword=scalar.codeword,
        path=scalar.path,
        weight=scalar.weight,
        stage=scalar.stage,
        subtrellis=scalar.subtrellis,
        comparisons=comparisons,
        edge_visits=scalar.edge_visits,
        fallback_comparisons=scalar.fallback_comparisons,
    )
    return out


def decode_phase1_only(ridx: ReachIndex, weights: WeightAssignment) -> DecodeOutcome:
    """Decode using only the first sweep: cheapest final that closed its loop.

    Useful as a baseline showing how much the revision phase recovers.  When
    no final's survivor came from its own start there is no codeword to trace,
    so a single restricted sweep on the most promising subtrellis stands in
    (stage "fallback").
    """
    p1 = phase1(ridx, weights)
    own = p1.surv_finals == np.arange(ridx.t)
    if own.any():
        candidates = np.where(own, p1.delta_finals, np.inf)
        i = int(np.argmin(candidates))
        path, bits, weight = _traceback(ridx, p1.pred_edge, ridx.trellis.finals[i], weights)
        return DecodeOutcome(
            codeword=bits,
            path=path,
            weight=weight,
            stage="phase1",
            subtrellis=i,
            comparisons=p1.comparisons,
            edge_visits=p1.edge_visits,
        )
    i_star = int(np.argmin(p1.delta_finals))
    sub = viterbi_subtrellis(ridx, weights, i_star)
    return DecodeOutcome(
        codeword=sub.codeword,
        path=sub.path,
        weight=sub.weight,
        stage="fallback",
        subtrellis=i_star,
        comparisons=p1.comparisons,
        edge_visits=p1.edge_visits,
        fallback_comparisons=sub.comparisons,
    )


# ---------------------------------------------------------------------------
# Exhaustive references

def viterbi_subtrellis(ridx: ReachIndex, weights: WeightAssignment, i: int) -> SubtrellisResult:
    """Standard Viterbi from start i over edges that belong to subtrellis i."""
    _check_weights(ridx, weights)
    trellis = ridx.trellis
    cost = np.full(trellis.v_counts[0], np.inf)
    cost[trellis.starts[i]] = 0.0
    preds: list[np.ndarray] = []
    comparisons = 0
    for p, sec in enumerate(trellis.sections):
        ok = ridx.member_bit(p, np.full(sec.num_edges, i, dtype=np.int64))
        cand = np.where(ok, cost[sec.frm] + weights.sections[p], np.inf)
        cost, win = _grouped_first_min(cand, ridx.group_starts[p], ridx.group_sizes[p])
        preds.append(win.astype(np.int32))
        comparisons += int(ok.sum())
    if not np.isfinite(cost[trellis.finals[i]]):
        raise NoPathError(f"subtrellis {i} has no start-to-final path")
    path, bits, weight = _traceback(ridx, preds, trellis.finals[i], weights)
    return SubtrellisResult(weight=weight, path=path, codeword=bits, comparisons=comparisons)


def parallel_start_costs(ridx: ReachIndex, weights: WeightAssignment) -> list[np.ndarray]:
    """Per-start shortest-path costs to every vertex, swept jointly.

    Row i of the returned per-index arrays is an independent single-source
    sweep from start i; used as the oracle for phase-1 exactness and for the
    per-subtrellis lower bounds in the invariant audits.
    """
    _check_weights(ridx, weights)
    trellis = ridx.trellis
    t = ridx.t
    costs = [np.full((t, v), np.inf) for v in trellis.v_counts]
    costs[0][np.arange(t), trellis.starts] = 0.0
    for p, sec in enumerate(trellis.sections):
        cand = costs[p][:, sec.frm] + weights.sections[p][None, :]
        costs[p + 1] = np.minimum.reduceat(cand, ridx.group_starts[p], axis=1)
    return costs


def all_pairs_start_final_distances(
    ridx: ReachIndex, weights: WeightAssignment
) -> DistanceTable:
    """Start-to-final distance table; diagonal entries are codeword weights."""
    costs = parallel_start_costs(ridx, weights)
    return DistanceTable(d=costs[-1][:, ridx.trellis.finals])


def decode_exact_ml(ridx: ReachIndex, weights: WeightAssignment) -> DecodeOutcome:
    """Maximum-likelihood decoding: best closed path over every subtrellis.

    Comparison counts reflect the t restricted sweeps this is equivalent to
    (the joint sweep plus one traceback pass is just the fast realization).
    """
    table = all_pairs_start_final_distances(ridx, weights)
    diag = np.diagonal(table.d)
    i_star = int(np.argmin(diag))
    if not np.isfinite(diag[i_star]):
        raise NoPathError("no subtrellis contains a start-to-final path")
    sub = viterbi_subtrellis(ridx, weights, i_star)
    return DecodeOutcome(
        codeword=sub.codeword,
        path=sub.path,
        weight=sub.weight,
        stage="exact",
        subtrellis=i_star,
        comparisons=int(ridx.member_counts.sum()),
        edge_visits=ridx.t * ridx.trellis.num_edges,
    )


def euclidean_weight(received: ReceivedVector, codeword: np.ndarray) -> float:
    """Squared Euclidean distance between the received frame and a codeword."""
    return float(((received.r - (1.0 - 2.0 * codeword.astype(np.float64))) ** 2).sum())


def brute_force_ml(spec, received: ReceivedVector, table: np.ndarray | None = None) -> np.ndarray:
    """Exhaustive ML over the codebook; ties pick the lexicographically least.

    Pass a precomputed ``codeword_table(spec)`` to amortize enumeration over
    many frames.  Minimizing squared distance to the BPSK image is the same
    as minimizing the correlation-style score 4 * (c . r) + const, which is
    what gets computed.
    """
    from .codes import codeword_table

    if table is None:
        table = codeword_table(spec)
    score = table.astype(np.float64) @ received.r
    best = score.min()
    ties = np.flatnonzero(score == best)
    if len(ties) == 1:
        return table[ties[0]].copy()
    rows = sorted(tuple(int(b) for b in table[ix]) for ix in ties)
    return np.array(rows[0], dtype=np.uint8)
