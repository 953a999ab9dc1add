"""Named code definitions used by the CLI and the test corpus.

Toy entries are small enough to enumerate exhaustively (brute-force oracles,
path enumeration, witness searches); the two production-scale convolutional
entries are the simulation workhorses.  ``error_bits`` records what the bit
error rate counts for each entry: recovered *message* bits for convolutional
codes, raw *codeword* bits for generic block codes (which carry no canonical
message mapping here).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

from .codes import (
    ConvCodeSpec,
    GeneratorRow,
    GeneratorSpec,
    Span,
    taps_from_octal,
    validate_conv,
    validate_generator,
)
from .errors import CatalogError

__all__ = ["CatalogEntry", "get_code", "list_codes", "CATALOG"]

CodeSpec = Union[GeneratorSpec, ConvCodeSpec]


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    error_bits: str  # "message" | "codeword"
    build: Callable[[], CodeSpec]

    def spec(self) -> CodeSpec:
        spec = self.build()
        if isinstance(spec, ConvCodeSpec):
            return validate_conv(spec)
        return validate_generator(spec)


def _block(n: int, k: int, rows: list[tuple[str, int, int, str]]) -> GeneratorSpec:
    parsed = tuple(
        GeneratorRow(bits=tuple(int(b) for b in bits), span=Span(lo, hi, kind))
        for bits, lo, hi, kind in rows
    )
    return GeneratorSpec(n=n, k=k, rows=parsed)


def _conv_octal(memory: int, octal0: str, octal1: str, circle: int) -> ConvCodeSpec:
    taps0 = taps_from_octal(octal0)
    taps1 = taps_from_octal(octal1)
    return ConvCodeSpec(memory=memory, taps0=taps0, taps1=taps1, circle=circle)


CATALOG: dict[str, CatalogEntry] = {
    entry.name: entry
    for entry in [
        CatalogEntry(
            name="mem4-circle20",
            description="rate-1/2 memory-4 convolutional code (octal 72/62), 20 sections, 16 subtrellises",
            error_bits="message",
            build=lambda: _conv_octal(4, "72", "62", 20),
        ),
        CatalogEntry(
            name="mem6-circle48",
            description="rate-1/2 memory-6 convolutional code (octal 554/744), 48 sections, 64 subtrellises",
            error_bits="message",
            build=lambda: _conv_octal(6, "554", "744", 48),
        ),
        CatalogEntry(
            name="toy-conv-m1-l4",
            description="rate-1/2 memory-1 toy convolutional code (taps 11/10), 4 sections, 2 subtrellises",
            error_bits="message",
            build=lambda: ConvCodeSpec(memory=1, taps0=(1, 1), taps1=(1, 0), circle=4),
        ),
        CatalogEntry(
            name="toy-conv-m2-l8",
            description="rate-1/2 memory-2 toy convolutional code (taps 111/101), 8 sections, 4 subtrellises",
            error_bits="message",
            build=lambda: ConvCodeSpec(memory=2, taps0=(1, 1, 1), taps1=(1, 0, 1), circle=8),
        ),
        CatalogEntry(
            name="toy-block-n4-k2-c1",
            description="(4,2) block code, one linear and one circular row, 2 subtrellises",
            error_bits="codeword",
            build=lambda: _block(
                4,
                2,
                [
                    ("1100", 1, 2, "linear"),
                    ("1001", 4, 1, "circular"),
                ],
            ),
        ),
        CatalogEntry(
            name="toy-block-n6-k3-c2",
            description="(6,3) block code with two circular rows, 4 subtrellises",
            error_bits="codeword",
            build=lambda: _block(
                6,
                3,
                [
                    ("111000", 1, 3, "linear"),
                    ("100101", 4, 1, "circular"),
                    ("010011", 5, 2, "circular"),
                ],
            ),
        ),
        CatalogEntry(
            name="toy-block-n8-k4-c1",
            description="(8,4) block code, three linear rows and one circular row, 2 subtrellises",
            error_bits="codeword",
            build=lambda: _block(
                8,
                4,
                [
                    ("11100000", 1, 3, "linear"),
                    ("00111000", 3, 5, "linear"),
                    ("00001110", 5, 7, "linear"),
                    ("10000011", 7, 1, "circular"),
                ],
            ),
        ),
    ]
}


def list_codes() -> list[str]:
    return sorted(CATALOG)


def get_code(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        known = ", ".join(list_codes())
        raise CatalogError(f"unknown code {name!r}; available: {known}") from None
