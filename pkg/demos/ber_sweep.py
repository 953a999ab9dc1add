"""Small BER/FER sweep comparing the two-phase decoder against exact ML.

Runs in well under a minute; bump FRAMES for smoother curves.
"""

from tbtdec import SimConfig, emit_results, run_monte_carlo

FRAMES = 2000

config = SimConfig(
    code="toy-conv-m2-l8",
    ebn0_db=(1.0, 2.0, 3.0, 4.0),
    frames=FRAMES,
    seed=42,
    decoders=("two-phase-L1", "two-phase-L2", "exact-ml"),
)
rows = run_monte_carlo(config)

print(emit_results(rows))

# The interesting columns: the approximate decoder should track exact ML
# closely while spending a bounded number of comparisons, and the early-stop
# rate should climb with SNR as frames get cleaner.
print("# per-point summary")
for row in rows:
    if row.decoder != "two-phase-L1":
        continue
    stop_rate = row.phase1_stops / row.frames
    print(
        f"#   {row.ebn0_db:3.1f} dB: FER={row.fer:.4g} "
        f"ml_mismatches={row.ml_mismatches} "
        f"early-stop={stop_rate:.1%} avg_comparisons={row.avg_comparisons:.1f}"
    )
