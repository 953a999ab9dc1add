"""Monte-Carlo simulation harness: frame generation, decoding, tallies, CSV.

Every frame's randomness comes from counter-based streams keyed by
(seed, stream id), where the stream id encodes the Eb/N0 point and frame
number.  Results are therefore a pure function of the configuration: the same
seed gives byte-identical CSV and trace output at any worker count, and every
decoder sees exactly the same noisy frames.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .catalog import get_code
from .channel import ChannelParams, awgn_transmit, bpsk_modulate, edge_weights, random_bits
from .codes import (
    ConvCodeSpec,
    GeneratorSpec,
    SemiCodewordBasis,
    encode_block,
    encode_conv_tailbiting,
    semi_codeword_basis,
)
from .decoder import (
    DecodeOutcome,
    all_pairs_start_final_distances,
    decode_exact_ml,
    decode_phase1_only,
    decode_two_phase,
    parallel_start_costs,
    phase1,
    phase1_decision,
    phase2,
    final_decision,
)
from .diagnostics import (
    MismatchReport,
    audit_decode_invariants,
    crossing_pair_witness,
    semi_codeword_witness,
    write_mismatch_reports,
)
from .errors import CatalogError, LengthMismatchError
from .trellis import ReachIndex, Trellis, build_reach_index, build_tbt_conv, build_tbt_product

__all__ = [
    "SimConfig",
    "SimResultRow",
    "SimContext",
    "build_context",
    "run_monte_carlo",
    "emit_results",
    "parse_results",
    "trace_frame",
    "frame_streams",
    "CSV_HEADER",
    "DECODER_NAMES",
]

CSV_HEADER = (
    "ebn0_db,decoder,frames,bit_errors,frame_errors,ber,fer,"
    "ml_mismatches,phase1_stops,fallbacks,avg_comparisons"
)
DECODER_NAMES = ("two-phase-L1", "two-phase-L2", "exact-ml", "phase1-only")

CodeLike = Union[str, GeneratorSpec, ConvCodeSpec]


@dataclass(frozen=True)
class SimConfig:
    code: CodeLike
    ebn0_db: tuple[float, ...]
    frames: int
    seed: int
    decoders: tuple[str, ...] = ("two-phase-L1", "exact-ml")
    genie_zero: bool = False
    participation_prune: bool = True
    workers: int = 1
    mismatch_log: str | None = None


@dataclass
class SimResultRow:
    ebn0_db: float
    decoder: str
    frames: int
    bit_errors: int
    frame_errors: int
    ber: float
    fer: float
    ml_mismatches: int
    phase1_stops: int
    fallbacks: int
    avg_comparisons: float


# ---------------------------------------------------------------------------
# Simulation context

@dataclass
class SimContext:
    name: str
    spec: CodeLike
    ridx: ReachIndex
    rate: float
    error_bits: str  # "message" | "codeword"
    bits_per_frame: int  # BER denominator contribution per frame
    basis: SemiCodewordBasis | None  # block codes only


def _resolve_spec(code: CodeLike) -> tuple[str, GeneratorSpec | ConvCodeSpec, str]:
    if isinstance(code, str):
        entry = get_code(code)
        return entry.name, entry.spec(), entry.error_bits
    if isinstance(code, ConvCodeSpec):
        return f"conv-m{code.memory}-l{code.circle}", code, "message"
    if isinstance(code, GeneratorSpec):
        return f"block-n{code.n}-k{code.k}", code, "codeword"
    raise CatalogError(f"cannot interpret code selector {code!r}")


@lru_cache(maxsize=8)
def build_context(code: CodeLike) -> SimContext:
    """Build (and cache) the trellis machinery for a code selector."""
    name, spec, error_bits = _resolve_spec(code)
    if isinstance(spec, ConvCodeSpec):
        trellis = build_tbt_conv(spec)
        ridx = build_reach_index(trellis)
        if list(ridx.trellis.v_counts) != list(trellis.v_counts):
            raise CatalogError(f"{name}: unreachable encoder states; cannot map paths to messages")
        rate = 0.5
        bits = spec.k
        basis = None
    else:
        trellis = build_tbt_product(spec)
        ridx = build_reach_index(trellis)
        rate = spec.k / spec.n
        bits = spec.n
        basis = semi_codeword_basis(spec)
    return SimContext(
        name=name,
        spec=spec,
        ridx=ridx,
        rate=rate,
        error_bits=error_bits,
        bits_per_frame=bits,
        basis=basis,
    )


def frame_streams(point_idx: int, frame: int) -> tuple[int, int]:
    """Noise and message stream ids for one frame of one Eb/N0 point."""
    base = (point_idx << 33) | (frame << 1)
    return base, base | 1


def _make_frame(ctx: SimContext, params: ChannelParams, point_idx: int, frame: int, genie_zero: bool):
    noise_stream, msg_stream = frame_streams(point_idx, frame)
    spec = ctx.spec
    if genie_zero:
        msg = np.zeros(spec.k, dtype=np.uint8)
    else:
        msg = random_bits(params.seed, msg_stream, spec.k)
    if isinstance(spec, ConvCodeSpec):
        codeword = encode_conv_tailbiting(spec, msg)
    else:
        codeword = encode_block(spec, msg)
    received = awgn_transmit(bpsk_modulate(codeword), params, noise_stream)
    return msg, codeword, received


def _conv_message_from_path(path: np.ndarray) -> np.ndarray:
    """Input bits of a convolutional trellis path: newest state bit per step."""
    return (path[1:] & 1).astype(np.uint8)


def _run_decoder(name: str, ctx: SimContext, weights, prune: bool) -> DecodeOutcome:
    if name == "two-phase-L1":
        return decode_two_phase(ctx.ridx, weights, 1, prune)
    if name == "two-phase-L2":
        return decode_two_phase(ctx.ridx, weights, 2, prune)
    if name == "exact-ml":
        return decode_exact_ml(ctx.ridx, weights)
    if name == "phase1-only":
        return decode_phase1_only(ctx.ridx, weights)
    raise CatalogError(f"unknown decoder {name!r}; available: {', '.join(DECODER_NAMES)}")


# ---------------------------------------------------------------------------
# Core loop

@dataclass
class _Tally:
    frames: int = 0
    bit_errors: int = 0
    frame_errors: int = 0
    ml_mismatches: int = 0
    phase1_stops: int = 0
    fallbacks: int = 0
    comparisons: int = 0

    def merge(self, other: "_Tally") -> None:
        self.frames += other.frames
        self.bit_errors += other.bit_errors
        self.frame_errors += other.frame_errors
        self.ml_mismatches += other.ml_mismatches
        self.phase1_stops += other.phase1_stops
        self.fallbacks += other.fallbacks
        self.comparisons += other.comparisons


def _bit_errors(ctx: SimContext, outcome: DecodeOutcome, msg: np.ndarray, codeword: np.ndarray) -> int:
    if ctx.error_bits == "message":
        decoded = _conv_message_from_path(outcome.path)
        return int(np.count_nonzero(decoded != msg))
    return int(np.count_nonzero(outcome.codeword != codeword))


def _run_chunk(config: SimConfig, point_idx: int, lo: int, hi: int):
    """Simulate frames [lo, hi) of one Eb/N0 point; returns tallies and reports."""
    ctx = build_context(config.code)
    ebn0 = config.ebn0_db[point_idx]
    params = ChannelParams(ebn0_db=ebn0, rate=ctx.rate, seed=config.seed)
    tallies = {name: _Tally() for name in config.decoders}
    reports: list[MismatchReport] = []
    want_exact = "exact-ml" in config.decoders
    for frame in range(lo, hi):
        msg, codeword, received = _make_frame(ctx, params, point_idx, frame, config.genie_zero)
        weights = edge_weights(ctx.ridx.trellis, received)
        outcomes = {
            name: _run_decoder(name, ctx, weights, config.participation_prune)
            for name in config.decoders
        }
        exact = outcomes.get("exact-ml")
        table = None
        for name, outcome in outcomes.items():
            tally = tallies[name]
            tally.frames += 1
            tally.bit_errors += _bit_errors(ctx, outcome, msg, codeword)
            if not np.array_equal(outcome.codeword, codeword):
                tally.frame_errors += 1
            if outcome.stage == "phase1":
                tally.phase1_stops += 1
            elif outcome.stage == "fallback":
                tally.fallbacks += 1
            tally.comparisons += outcome.comparisons + outcome.fallback_comparisons
            if want_exact and name != "exact-ml" and not np.array_equal(outcome.codeword, exact.codeword):
                tally.ml_mismatches += 1
                if table is None:
                    table = all_pairs_start_final_distances(ctx.ridx, weights)
                witness = crossing_pair_witness(table, exact.subtrellis)
                report = MismatchReport(
                    frame=frame,
                    ebn0_db=ebn0,
                    decoder=name,
                    ml_subtrellis=exact.subtrellis,
                    ml_weight=exact.weight,
                    out_subtrellis=outcome.subtrellis,
                    out_weight=outcome.weight,
                    crossing_witness=witness,
                    crossing_shares_ml_start=(witness[0] == exact.subtrellis) if witness else None,
                )
                if ctx.basis is not None and ctx.basis.matrix.shape[0] <= 20:
                    semi = semi_codeword_witness(received, exact.codeword, ctx.spec, ctx.basis)
                    if semi.witness is not None:
                        report.semi_witness = "".join(str(int(b)) for b in semi.witness)
                        report.semi_witness_start = semi.start
                        report.semi_witness_final = semi.final
                reports.append(report)
    return tallies, reports


def _chunk_bounds(frames: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, frames)) if frames else 1
    size, extra = divmod(frames, workers)
    bounds = []
    lo = 0
    for w in range(workers):
        hi = lo + size + (1 if w < extra else 0)
        bounds.append((lo, hi))
        lo = hi
    return bounds


def run_monte_carlo(config: SimConfig) -> list[SimResultRow]:
    """Simulate every (Eb/N0 point, decoder) pair in the configuration.

    Tallies are integer sums, so how frames are split across workers cannot
    change any output; mismatch reports are gathered and written in frame
    order at the end.
    """
    if config.frames < 1:
        raise LengthMismatchError("frames must be >= 1")
    if not config.ebn0_db:
        raise LengthMismatchError("at least one Eb/N0 point required")
    if not config.decoders:
        raise LengthMismatchError("at least one decoder required")
    for name in config.decoders:
        if name not in DECODER_NAMES:
            raise CatalogError(f"unknown decoder {name!r}; available: {', '.join(DECODER_NAMES)}")
    ctx = build_context(config.code)

    rows: list[SimResultRow] = []
    all_reports: list[tuple[int, MismatchReport]] = []
    bounds = _chunk_bounds(config.frames, config.workers)
    for point_idx, ebn0 in enumerate(config.ebn0_db):
        tallies = {name: _Tally() for name in config.decoders}
        if config.workers > 1 and len(bounds) > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                futures = [
                    pool.submit(_run_chunk, config, point_idx, lo, hi) for lo, hi in bounds
                ]
                chunk_results = [f.result() for f in futures]
        else:
            chunk_results = [_run_chunk(config, point_idx, lo, hi) for lo, hi in bounds]
        for chunk_tallies, chunk_reports in chunk_results:
            for name in config.decoders:
                tallies[name].merge(chunk_tallies[name])
            all_reports.extend((point_idx, r) for r in chunk_reports)
        for name in config.decoders:
            tally = tallies[name]
            denom = tally.frames * ctx.bits_per_frame
            rows.append(
                SimResultRow(
                    ebn0_db=ebn0,
                    decoder=name,
                    frames=tally.frames,
                    bit_errors=tally.bit_errors,
                    frame_errors=tally.frame_errors,
                    ber=tally.bit_errors / denom,
                    fer=tally.frame_errors / tally.frames,
                    ml_mismatches=tally.ml_mismatches,
                    phase1_stops=tally.phase1_stops,
                    fallbacks=tally.fallbacks,
                    avg_comparisons=tally.comparisons / tally.frames,
                )
            )
    if config.mismatch_log and all_reports:
        all_reports.sort(key=lambda item: (item[0], item[1].frame, item[1].decoder))
        write_mismatch_reports(config.mismatch_log, [r for _, r in all_reports])
    return rows


# ---------------------------------------------------------------------------
# CSV emission

def _fmt(x: float) -> str:
    return f"{x:.6g}"


def emit_results(rows: list[SimResultRow], path: str | None = None, comments: tuple[str, ...] = ()) -> str:
    """Render result rows as CSV (optional '#' metadata comments first)."""
    lines = [f"# {c}" for c in comments]
    lines.append(CSV_HEADER)
    for r in rows:
        lines.append(
            f"{_fmt(r.ebn0_db)},{r.decoder},{r.frames},{r.bit_errors},{r.frame_errors},"
            f"{_fmt(r.ber)},{_fmt(r.fer)},{r.ml_mismatches},{r.phase1_stops},"
            f"{r.fallbacks},{_fmt(r.avg_comparisons)}"
        )
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def parse_results(text: str) -> list[SimResultRow]:
    """Inverse of emit_results for values surviving the 6-significant-digit format."""
    rows = []
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines or lines[0] != CSV_HEADER:
        raise LengthMismatchError("missing or malformed CSV header")
    for ln in lines[1:]:
        parts = ln.split(",")
        rows.append(
            SimResultRow(
                ebn0_db=float(parts[0]),
                decoder=parts[1],
                frames=int(parts[2]),
                bit_errors=int(parts[3]),
                frame_errors=int(parts[4]),
                ber=float(parts[5]),
                fer=float(parts[6]),
                ml_mismatches=int(parts[7]),
                phase1_stops=int(parts[8]),
                fallbacks=int(parts[9]),
                avg_comparisons=float(parts[10]),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Single-frame tracing

def _trace_float(x: float) -> str:
    return repr(float(x))


def trace_frame(
    config: SimConfig,
    frame: int,
    point_idx: int = 0,
    list_size: int = 1,
    trace_path: str | None = None,
) -> tuple[DecodeOutcome, str]:
    """Replay one frame with per-vertex phase records and an invariant audit.

    The frame is reconstructed from the same streams the Monte-Carlo loop
    uses, so the outcome here equals the outcome inside a full run.
    """
    ctx = build_context(config.code)
    ridx = ctx.ridx
    trellis = ridx.trellis
    ebn0 = config.ebn0_db[point_idx]
    params = ChannelParams(ebn0_db=ebn0, rate=ctx.rate, seed=config.seed)
    msg, codeword, received = _make_frame(ctx, params, point_idx, frame, config.genie_zero)
    weights = edge_weights(trellis, received)

    lines = [f"frame={frame} ebn0_db={_trace_float(ebn0)} seed={config.seed} code={ctx.name}"]
    p1 = phase1(ridx, weights)
    for p in range(trellis.n_sections + 1):
        for v in range(trellis.v_counts[p]):
            gid = ridx.global_vertex(p, v)
            if p == 0:
                pred = -1
            else:
                sec = trellis.sections[p - 1]
                pred = ridx.global_vertex(p - 1, int(sec.frm[p1.pred_edge[p - 1][v]]))
            lines.append(
                f"phase=1 v={gid} cost={_trace_float(p1.cost[p][v])}"
                f" surv={int(p1.surv[p][v])} pred={pred}"
            )
    stopped = phase1_decision(ridx, p1, weights)
    p2 = None
    if stopped is not None:
        outcome = stopped
    else:
        p2 = phase2(ridx, weights, p1, config.participation_prune)
        for p in range(trellis.n_sections + 1):
            for v in range(trellis.v_counts[p]):
                gid = ridx.global_vertex(p, v)
                if np.isfinite(p2.metric[p][v]):
                    if p == 0:
                        pred = -1
                    else:
                        sec = trellis.sections[p - 1]
                        pred = ridx.global_vertex(p - 1, int(sec.frm[p2.pred_edge[p - 1][v]]))
                    lines.append(
                        f"phase=2 v={gid} metric={_trace_float(p2.metric[p][v])}"
                        f" trellis={int(p2.trellis[p][v])}"
                        f" dist={_trace_float(p2.dist[p][v])} pred={pred}"
                    )
                else:
                    lines.append(f"phase=2 v={gid} metric=inf trellis=-1 dist=inf pred=-1")
        outcome = final_decision(ridx, weights, p1, p2)
        if list_size > 1:
            outcome = decode_two_phase(ridx, weights, list_size, config.participation_prune)
    bits = "".join(str(int(b)) for b in outcome.codeword)
    lines.append(
        f"outcome stage={outcome.stage} subtrellis={outcome.subtrellis}"
        f" weight={_trace_float(outcome.weight)} codeword={bits}"
    )
    audit = audit_decode_invariants(ridx, weights, p1, p2)
    lines.append(f"audit checks={len(audit.checks)} violations={len(audit.violations)}")
    for violation in audit.violations:
        lines.append(f"audit-violation {violation}")
    text = "\n".join(lines) + "\n"
    if trace_path:
        with open(trace_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return outcome, text
