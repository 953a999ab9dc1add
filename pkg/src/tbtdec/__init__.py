"""Forward-error-correction toolkit for tail-biting trellis decoding.

The package builds tail-biting trellises for block and convolutional codes,
decodes noisy frames with a two-phase approximate maximum-likelihood decoder
that runs in time linear in the trellis size, and ships the exact references,
diagnostics, and Monte-Carlo machinery needed to audit that decoder.
"""

from .catalog import CatalogEntry, get_code, list_codes
from .channel import (
    ChannelParams,
    ReceivedVector,
    WeightAssignment,
    awgn_transmit,
    bpsk_modulate,
    edge_weights,
    gaussian_samples,
    random_bits,
)
from .codes import (
    ConvCodeSpec,
    GeneratorRow,
    GeneratorSpec,
    SemiCodewordBasis,
    Span,
    codeword_table,
    conv_initial_state,
    encode_block,
    encode_conv_tailbiting,
    enumerate_codewords,
    format_generator_file,
    parse_generator_file,
    semi_codeword_basis,
    taps_from_octal,
    validate_conv,
    validate_generator,
)
from .decoder import (
    DecodeOutcome,
    DistanceTable,
    Phase1State,
    Phase2State,
    SubtrellisResult,
    all_pairs_start_final_distances,
    brute_force_ml,
    decode_exact_ml,
    decode_phase1_only,
    decode_two_phase,
    euclidean_weight,
    parallel_start_costs,
    phase1,
    phase1_decision,
    phase2,
    final_decision,
    viterbi_subtrellis,
)
from .diagnostics import (
    AuditReport,
    MismatchReport,
    SemiWitnessReport,
    audit_decode_invariants,
    crossing_pair_witness,
    semi_codeword_witness,
    verify_semi_codeword_space,
    write_mismatch_reports,
)
from .montecarlo import (
    CSV_HEADER,
    DECODER_NAMES,
    SimConfig,
    SimContext,
    SimResultRow,
    build_context,
    emit_results,
    frame_streams,
    parse_results,
    run_monte_carlo,
    trace_frame,
)
from .errors import (
    CatalogError,
    DependentRowsError,
    EmptyTrellisError,
    LengthMismatchError,
    NoPathError,
    ShapeMismatchError,
    SpanMismatchError,
    TooLargeError,
    ToolkitError,
    ZeroRowError,
)
from .trellis import (
    ReachIndex,
    Section,
    Trellis,
    build_reach_index,
    build_tbt_conv,
    build_tbt_product,
    elementary_trellis,
    semi_codeword_labels,
    subtrellis_labels,
    trellis_product,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "ReceivedVector",
    "WeightAssignment",
    "awgn_transmit",
    "bpsk_modulate",
    "edge_weights",
    "gaussian_samples",
    "random_bits",
    "ConvCodeSpec",
    "GeneratorRow",
    "GeneratorSpec",
    "SemiCodewordBasis",
    "Span",
    "codeword_table",
    "conv_initial_state",
    "encode_block",
    "encode_conv_tailbiting",
    "enumerate_codewords",
    "format_generator_file",
    "parse_generator_file",
    "semi_codeword_basis",
    "taps_from_octal",
    "validate_conv",
    "validate_generator",
    "DecodeOutcome",
    "DistanceTable",
    "Phase1State",
    "Phase2State",
    "SubtrellisResult",
    "all_pairs_start_final_distances",
    "brute_force_ml",
    "decode_exact_ml",
    "decode_phase1_only",
    "decode_two_phase",
    "euclidean_weight",
    "parallel_start_costs",
    "phase1",
    "phase1_decision",
    "phase2",
    "final_decision",
    "viterbi_subtrellis",
    "AuditReport",
    "MismatchReport",
    "SemiWitnessReport",
    "audit_decode_invariants",
    "crossing_pair_witness",
    "semi_codeword_witness",
    "verify_semi_codeword_space",
    "write_mismatch_reports",
    "CSV_HEADER",
    "DECODER_NAMES",
    "SimConfig",
    "SimContext",
    "SimResultRow",
    "build_context",
    "emit_results",
    "frame_streams",
    "parse_results",
    "run_monte_carlo",
    "trace_frame",
    "CatalogEntry",
    "get_code",
    "list_codes",
    "CatalogError",
    "DependentRowsError",
    "EmptyTrellisError",
    "LengthMismatchError",
    "NoPathError",
    "ShapeMismatchError",
    "SpanMismatchError",
    "TooLargeError",
    "ToolkitError",
    "ZeroRowError",
    "ReachIndex",
    "Section",
    "Trellis",
    "build_reach_index",
    "build_tbt_conv",
    "build_tbt_product",
    "elementary_trellis",
    "semi_codeword_labels",
    "subtrellis_labels",
    "trellis_product",
    "__version__",
]
