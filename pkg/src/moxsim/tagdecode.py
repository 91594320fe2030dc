"""Tag bit recovery from two decoded copies of the same packet.

XORing the decoded data-field bits of the original and the backscattered
packet cancels the payload and leaves the tag's per-symbol polarity:
all-zero rows where the tag reflected at 0 degrees, all-one rows where it
flipped the phase, with a few smeared bits where the convolutional decoder
straddles a transition. A sliding window over symbol groups searches for
clean fixed-length runs and turns the rows back into tag bits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .receiver import DecodedPacket
from .tag import TagConfig

ZERO = 0
ONE = 1
AMBIGUOUS = -1


@dataclass
class GammaStream:
    """Per-symbol XOR rows plus the detection flags of the two sources.

    ``rows`` has shape (n_symbols, bits_per_symbol); it is empty when
    either source packet was missed.
    """

    rows: np.ndarray
    original_detected: bool = True
    backscatter_detected: bool = True

    @property
    def both_detected(self) -> bool:
        return self.original_detected and self.backscatter_detected

    @property
    def n_symbols(self) -> int:
        return self.rows.shape[0]

    @property
    def bits_per_symbol(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class WindowConfig:
    """Decoding-window shape.

    A group of R symbols is classified from its own bits plus the following
    ``window_groups - 1`` groups. A run of identical bits at least
    ``run_fraction`` of one symbol's bit count long decides the value;
    otherwise the window's majority does, with exact ties AMBIGUOUS.
    """

    window_groups: int = 2
    run_fraction: float = 1.0

    def __post_init__(self):
        if self.window_groups < 1:
            raise ValueError("window_groups must be at least 1")
        if not 0.5 < self.run_fraction <= 1.0:
            raise ValueError("run_fraction must be in (0.5, 1]")


@dataclass
class TagDecodeResult:
    """Recovered tag bits with per-bit confidence and BER bookkeeping.

    ``per_bit_confidence`` holds the deciding run or majority fraction (0.5
    marks a coin-flipped tie). ``errors``/``total`` is this result's BER
    contribution against the reference it was scored with; a missed trial
    charges every reference bit. ``payload_error`` is the simulation-side
    packet-error hook.
    """

    tag_bits: np.ndarray
    per_bit_confidence: np.ndarray
    packets_missed: bool = False
    errors: int = 0
    total: int = 0
    payload_error: bool = False
    group_values: Optional[np.ndarray] = None
    mode: str = "bpsk"

    @property
    def ber_contribution(self) -> tuple:
        return self.errors, self.total

    def score(self, reference_bits: Sequence[int]) -> "TagDecodeResult":
        """Fill ``errors``/``total`` against the transmitted tag bits."""
        truth = np.asarray(reference_bits, dtype=np.uint8)
        self.total = int(truth.size)
        if self.packets_missed:
            self.errors = int(truth.size)
        else:
            if self.tag_bits.size != truth.size:
                raise ValueError("decoded payload length differs from reference")
            self.errors = int(np.count_nonzero(self.tag_bits != truth))
        return self


def missed_result(reference_bits: Sequence[int], mode: str) -> TagDecodeResult:
    """The all-errors result for a trial whose packets were not decodable."""
    n = len(reference_bits)
    return TagDecodeResult(
        tag_bits=np.zeros(0, dtype=np.uint8),
        per_bit_confidence=np.zeros(0, dtype=float),
        packets_missed=True,
        errors=n,
        total=n,
        payload_error=True,
        mode=mode,
    )


def xor_packets(original: DecodedPacket, backscatter: DecodedPacket) -> GammaStream:
    """Per-symbol XOR of two decodes; a missed source yields empty rows."""
    if not (original.detected and backscatter.detected):
        return GammaStream(
            np.zeros((0, 0), dtype=np.uint8),
            original.detected,
            backscatter.detected,
        )
    q = original.symbol_bit_groups
    b = backscatter.symbol_bit_groups
    if q.shape[1] != b.shape[1]:
        raise ValueError("packets carry different bits per symbol")
    n = min(q.shape[0], b.shape[0])
    return GammaStream(q[:n] ^ b[:n], True, True)


def _classify_window(bits: np.ndarray, bits_per_symbol: int, wcfg: WindowConfig):
    """One window: first qualifying run wins, else majority, else AMBIGUOUS."""
    if bits.size == 0:
        return AMBIGUOUS, 0.5
    threshold = int(np.ceil(wcfg.run_fraction * bits_per_symbol))

    edges = np.flatnonzero(np.diff(bits)) + 1
    starts = np.concatenate([[0], edges])
    lengths = np.diff(np.concatenate([starts, [bits.size]]))
    qualifying = np.flatnonzero(lengths >= threshold)
    if qualifying.size:
        first = qualifying[0]
        value = int(bits[starts[first]])
        return value, float(min(lengths[first] / bits.size, 1.0))

    ones = int(bits.sum())
    if 2 * ones == bits.size:
        return AMBIGUOUS, 0.5
    value = int(2 * ones > bits.size)
    return value, float(max(ones, bits.size - ones) / bits.size)


def window_classify(
    gamma: GammaStream,
    r: int,
    wcfg: WindowConfig,
    start_symbol: int = 0,
    n_groups: Optional[int] = None,
) -> tuple:
    """Classify each run of ``r`` symbols as ZERO, ONE or AMBIGUOUS.

    Returns ``(values, confidences)`` over the groups starting at
    ``start_symbol``; each group's window covers it and the next
    ``window_groups - 1`` groups, truncated at the stream end.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    if n_groups is None:
        n_groups = (gamma.n_symbols - start_symbol) // r
    if start_symbol + n_groups * r > gamma.n_symbols:
        raise ValueError("groups extend past the end of the stream")

    flat = gamma.rows.reshape(-1)
    group_bits = r * gamma.bits_per_symbol
    base = start_symbol * gamma.bits_per_symbol
    values = np.empty(n_groups, dtype=np.int64)
    confs = np.empty(n_groups, dtype=float)
    for i in range(n_groups):
        lo = base + i * group_bits
        hi = min(lo + wcfg.window_groups * group_bits, flat.size)
        values[i], confs[i] = _classify_window(
            flat[lo:hi], gamma.bits_per_symbol, wcfg
        )
    return values, confs


def decide_tag_bits(
    raw_values: np.ndarray,
    encoding: str,
    rng: Optional[np.random.Generator] = None,
    confidences: Optional[np.ndarray] = None,
) -> TagDecodeResult:
    """Turn classified group values into tag bits.

    Absolute mapping for 'bpsk'; change detection between consecutive
    groups for 'dbpsk', which is immune to a polarity inversion affecting
    every group. AMBIGUOUS entries become seeded coin flips recorded with
    confidence 0.5.
    """
    values = np.asarray(raw_values, dtype=np.int64).copy()
    if values.size == 0:
        raise ValueError("no group values to decide on")
    if encoding not in ("bpsk", "dbpsk"):
        raise ValueError(f"unknown encoding {encoding!r}")
    if encoding == "dbpsk" and values.size < 2:
        raise ValueError("dbpsk needs a reference group plus data groups")
    if confidences is None:
        confidences = np.ones(values.size, dtype=float)
    confidences = np.asarray(confidences, dtype=float).copy()

    ambiguous = values == AMBIGUOUS
    if ambiguous.any():
        if rng is None:
            raise ValueError("ambiguous groups present but no rng supplied")
        values[ambiguous] = rng.integers(0, 2, int(ambiguous.sum()))
        confidences[ambiguous] = 0.5

    if encoding == "bpsk":
        bits = values.astype(np.uint8)
        bit_confs = confidences
    else:
        bits = (values[1:] ^ values[:-1]).astype(np.uint8)
        bit_confs = np.minimum(confidences[1:], confidences[:-1])
    return TagDecodeResult(
        tag_bits=bits,
        per_bit_confidence=bit_confs,
        group_values=values,
        mode=encoding,
    )


def decode_tag(
    gamma: GammaStream,
    tag_cfg: TagConfig,
    wcfg: WindowConfig,
    rng: Optional[np.random.Generator] = None,
) -> TagDecodeResult:
    """Window-classify and decide in one step for a known tag layout."""
    if not gamma.both_detected:
        raise ValueError("cannot decode tag from a missed packet pair")
    values, confs = window_classify(
        gamma,
        tag_cfg.symbols_per_bit,
        wcfg,
        start_symbol=tag_cfg.start_symbol,
        n_groups=tag_cfg.n_groups,
    )
    return decide_tag_bits(values, tag_cfg.mode, rng, confs)


def tag_ber(results: Sequence[TagDecodeResult], reference_bits=None) -> tuple:
    """Aggregate ``(ber, per, detection_rate)`` over trials.

    ``reference_bits`` may be one sequence shared by every trial, a list of
    per-trial sequences, or None to reuse each result's stored score.
    Missed trials charge every reference bit as an error, so BER can exceed
    0.5 and reaches 1.0 when nothing is received.
    """
    if not results:
        return 0.0, 0.0, 0.0
    if reference_bits is None:
        scored = list(results)
    else:
        first = reference_bits[0] if len(reference_bits) else None
        per_trial = isinstance(first, (list, tuple, np.ndarray))
        refs = reference_bits if per_trial else [reference_bits] * len(results)
        if len(refs) != len(results):
            raise ValueError("need one reference per result")
        scored = [r.score(ref) for r, ref in zip(results, refs)]

    errors = sum(r.errors for r in scored)
    total = sum(r.total for r in scored)
    misses = sum(1 for r in scored if r.packets_missed)
    packet_errors = sum(1 for r in scored if r.payload_error or r.packets_missed)
    n = len(scored)
    ber = errors / total if total else 0.0
    return ber, packet_errors / n, 1.0 - misses / n
