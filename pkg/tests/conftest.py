"""Shared fixtures and independent scalar oracles for the test suite.

The oracles here are deliberately written in the dumbest possible style —
bit-by-bit shift registers, explicit path enumeration, dictionary shortest
paths — so they share no code (and no bugs) with the vectorized library.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

import tbtdec as tb

settings.register_profile("ci", derandomize=True, max_examples=50, deadline=None)
settings.load_profile("ci")


# ---------------------------------------------------------------------------
# Specs

@pytest.fixture(scope="session")
def block4() -> tb.GeneratorSpec:
    return tb.get_code("toy-block-n4-k2-c1").spec()


@pytest.fixture(scope="session")
def block6() -> tb.GeneratorSpec:
    return tb.get_code("toy-block-n6-k3-c2").spec()


@pytest.fixture(scope="session")
def block8() -> tb.GeneratorSpec:
    return tb.get_code("toy-block-n8-k4-c1").spec()


@pytest.fixture(scope="session")
def conv_m1() -> tb.ConvCodeSpec:
    return tb.get_code("toy-conv-m1-l4").spec()


@pytest.fixture(scope="session")
def conv_m2() -> tb.ConvCodeSpec:
    return tb.get_code("toy-conv-m2-l8").spec()


def build_block(spec: tb.GeneratorSpec) -> tb.ReachIndex:
    return tb.build_reach_index(tb.build_tbt_product(spec))


def build_conv(spec: tb.ConvCodeSpec) -> tb.ReachIndex:
    return tb.build_reach_index(tb.build_tbt_conv(spec))


@pytest.fixture(scope="session")
def ridx_block4(block4) -> tb.ReachIndex:
    return build_block(block4)


@pytest.fixture(scope="session")
def ridx_block6(block6) -> tb.ReachIndex:
    return build_block(block6)


@pytest.fixture(scope="session")
def ridx_block8(block8) -> tb.ReachIndex:
    return build_block(block8)


@pytest.fixture(scope="session")
def ridx_conv_m1(conv_m1) -> tb.ReachIndex:
    return build_conv(conv_m1)


@pytest.fixture(scope="session")
def ridx_conv_m2(conv_m2) -> tb.ReachIndex:
    return build_conv(conv_m2)


# ---------------------------------------------------------------------------
# Scalar oracles

def scalar_conv_encode(spec: tb.ConvCodeSpec, msg) -> np.ndarray:
    """Bit-by-bit shift-register encoding with explicit wraparound indexing."""
    msg = [int(b) for b in msg]
    L, m = spec.circle, spec.memory
    out = []
    for t in range(L):
        v0 = 0
        v1 = 0
        for d in range(m + 1):
            v0 ^= spec.taps0[d] & msg[(t - d) % L]
            v1 ^= spec.taps1[d] & msg[(t - d) % L]
        out.extend([v0, v1])
    return np.array(out, dtype=np.uint8)


def scalar_block_encode(spec: tb.GeneratorSpec, msg) -> np.ndarray:
    out = np.zeros(spec.n, dtype=np.uint8)
    for bit, row in zip(msg, spec.rows):
        if int(bit):
            out ^= row.array
    return out


def enumerate_paths(trellis: tb.Trellis, limit: int = 5000):
    """Yield every start-to-final path as (start_idx, final_idx, edges, label_bits)."""
    finals = {int(f): j for j, f in enumerate(trellis.finals)}
    stack = []
    for i, s in enumerate(trellis.starts):
        stack.append((0, int(s), i, [], []))
    count = 0
    while stack:
        p, v, i, edges, labels = stack.pop()
        if p == trellis.n_sections:
            if v in finals:
                count += 1
                if count > limit:
                    raise AssertionError("path enumeration exceeded limit")
                yield i, finals[v], edges, labels
            continue
        sec = trellis.sections[p]
        for e in range(sec.num_edges):
            if int(sec.frm[e]) == v:
                stack.append(
                    (
                        p + 1,
                        int(sec.to[e]),
                        i,
                        edges + [e],
                        labels + list(tb.trellis.label_bits(int(sec.labels[e]), trellis.label_width)),
                    )
                )


def path_weight(weights: tb.WeightAssignment, edges) -> float:
    total = 0.0
    for p, e in enumerate(edges):
        total += float(weights.sections[p][e])
    return total


def random_received(ridx: tb.ReachIndex, seed: int, frame: int, sigma: float = 0.8):
    """A reproducible random received vector (not tied to any codeword)."""
    gen = np.random.Generator(np.random.Philox(key=[seed, frame]))
    n_bits = ridx.trellis.n_sections * ridx.trellis.label_width
    r = gen.normal(0.0, 1.0, n_bits) + gen.choice([-1.0, 1.0], n_bits) * sigma
    return tb.ReceivedVector(r=r)


def transmit_codeword(ridx, codeword, ebn0_db, rate, seed, stream):
    params = tb.ChannelParams(ebn0_db=ebn0_db, rate=rate, seed=seed)
    return tb.awgn_transmit(tb.bpsk_modulate(codeword), params, stream)
