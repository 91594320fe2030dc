"""Backscatter tag modulation.

The tag toggles its reflection phase once per OFDM data symbol, multiplying
every sample of that symbol (guard interval included) by +1 or -1. Tag bits
map to phases through a per-modulation codebook; with BPSK subcarriers only
the 0/180 degree entries are reachable, coding one bit per symbol group.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .phy import Ppdu

# Phase -> embedded bits for each excitation-signal modulation. Phase steps
# of 90 degrees need QPSK-or-denser constellations; BPSK exposes only the
# half-cycle flip.
_CODEBOOK = {
    "bpsk": {0: (0,), 180: (1,)},
    "qpsk": {0: (0, 0), 90: (0, 1), 180: (1, 0), 270: (1, 1)},
    "16qam": {0: (0, 0), 90: (0, 1), 180: (1, 0), 270: (1, 1)},
    "64qam": {0: (0, 0), 90: (0, 1), 180: (1, 0), 270: (1, 1)},
}

MODES = ("bpsk", "dbpsk")


@dataclass(frozen=True)
class TagCodebook:
    """Phase-to-bits table for one excitation modulation."""

    modulation: str
    entries: dict

    def phases(self) -> tuple:
        return tuple(sorted(self.entries))


def codebook_for(modulation: str) -> TagCodebook:
    key = modulation.lower()
    if key not in _CODEBOOK:
        raise ValueError(f"unknown modulation {modulation!r}")
    return TagCodebook(key, dict(_CODEBOOK[key]))


def codebook_lookup(modulation: str, phase_deg: float) -> np.ndarray:
    """Bits embedded by reflecting at ``phase_deg`` against ``modulation``."""
    book = codebook_for(modulation)
    phase = int(round(phase_deg)) % 360
    if phase not in book.entries:
        raise ValueError(
            f"{modulation} codebook has no {phase_deg} degree entry"
        )
    return np.array(book.entries[phase], dtype=np.uint8)


@dataclass(frozen=True)
class TagConfig:
    """Tag payload and its mapping onto OFDM symbols.

    ``symbols_per_bit`` is the modulation-rate knob: each tag bit (or
    differential transition) spans that many consecutive data symbols.
    """

    tag_bits: tuple
    mode: str = "bpsk"
    symbols_per_bit: int = 1
    start_symbol: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 1 <= self.symbols_per_bit <= 8:
            raise ValueError("symbols_per_bit must be in [1, 8]")
        if self.start_symbol < 0:
            raise ValueError("start_symbol must be nonnegative")
        if any(b not in (0, 1) for b in self.tag_bits):
            raise ValueError("tag_bits must contain only 0/1")

    @property
    def n_groups(self) -> int:
        """Symbol groups occupied, counting the DBPSK reference group."""
        extra = 1 if self.mode == "dbpsk" else 0
        return len(self.tag_bits) + extra

    @property
    def span_symbols(self) -> int:
        return self.n_groups * self.symbols_per_bit


def tag_capacity(n_symbols: int, cfg: TagConfig) -> int:
    """Max tag bits that fit in ``n_symbols`` data symbols."""
    groups = (n_symbols - cfg.start_symbol) // cfg.symbols_per_bit
    if cfg.mode == "dbpsk":
        groups -= 1  # first group carries the phase reference
    return max(groups, 0)


@dataclass
class ThetaVector:
    """Per-data-symbol reflection multiplier, +1 or -1.

    ``group_starts[i]`` is the first symbol index of group i; groups cover
    ``symbols_per_bit`` symbols each and the multiplier is +1 outside them.
    """

    values: np.ndarray
    group_starts: np.ndarray
    symbols_per_bit: int
    mode: str

    @property
    def n_symbols(self) -> int:
        return self.values.size


def encode_tag_phases(cfg: TagConfig) -> np.ndarray:
    """Phase (degrees) of each symbol group for the configured payload."""
    bits = np.array(cfg.tag_bits, dtype=np.uint8)
    if cfg.mode == "bpsk":
        return 180.0 * bits
    # Differential: a 1 toggles the phase, group 0 is the 0-degree reference.
    toggles = np.concatenate([[0], bits])
    return 180.0 * (np.cumsum(toggles) % 2)


def build_theta(cfg: TagConfig, n_symbols: int) -> ThetaVector:
    """Expand the tag payload into a per-symbol +/-1 multiplier."""
    if cfg.start_symbol + cfg.span_symbols > n_symbols:
        raise ValueError(
            f"tag needs {cfg.start_symbol + cfg.span_symbols} symbols, "
            f"packet has {n_symbols}"
        )
    phases = encode_tag_phases(cfg)
    values = np.ones(n_symbols, dtype=float)
    group_starts = cfg.start_symbol + cfg.symbols_per_bit * np.arange(phases.size)
    for start, phase in zip(group_starts, phases):
        values[start : start + cfg.symbols_per_bit] = np.cos(np.deg2rad(phase))
    return ThetaVector(values, group_starts, cfg.symbols_per_bit, cfg.mode)


def apply_tag(ppdu: Ppdu, theta: ThetaVector) -> Ppdu:
    """Multiply each data symbol (with its guard interval) by its theta.

    The preamble is reflected unmodified so both packets stay detectable
    with the same synchronization circuitry.
    """
    if theta.n_symbols != ppdu.n_data_symbols:
        raise ValueError(
            f"theta covers {theta.n_symbols} symbols, packet has "
            f"{ppdu.n_data_symbols}"
        )
    per_sample = np.repeat(theta.values, ppdu.cfg.symbol_duration)
    tagged = Ppdu(
        preamble=ppdu.preamble.copy(),
        data_samples=ppdu.data_samples * per_sample,
        symbol_boundaries=ppdu.symbol_boundaries.copy(),
        psdu_bits=ppdu.psdu_bits.copy(),
        grid=ppdu.grid,
        cfg=ppdu.cfg,
        scramble_seed=ppdu.scramble_seed,
    )
    return tagged
