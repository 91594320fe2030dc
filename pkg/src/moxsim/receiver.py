"""Baseband receive chain: detection, sync, equalization, decoding.

The chain is a conventional preamble-based OFDM receiver: short-training
autocorrelation flags the packet and yields a coarse frequency estimate,
long-training cross-correlation refines timing and frequency, and the two
long symbols give a zero-forcing channel estimate. Pilot-based common phase
tracking is a toggle: tracking it removes the very per-symbol phase flips a
backscatter tag uses, so tag-aware receivers run with it off.

The receiver is genie-aided for link parameters a SIG field would normally
carry: payload length, subcarrier plan and scrambler seed arrive
out-of-band. Detection, timing, frequency offset and the channel estimate
are all earned from the waveform.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .phy import (
    SERVICE_BITS,
    PhyConfig,
    ltf_reference,
    scramble,
    _interleaver_table,
    _subcarrier_layout,
)


@dataclass(frozen=True)
class RxConfig:
    """Receiver behavior switches.

    ``pilot_tracking`` applies per-symbol common-phase correction from the
    pilots. ``genie_sync`` skips detection and trusts
    ``genie_start_sample`` as the preamble start (frequency offset is still
    estimated from the preamble).
    """

    detection_threshold: float = 0.6
    pilot_tracking: bool = False
    genie_sync: bool = False
    genie_start_sample: int = 0

    def __post_init__(self):
        if not 0.0 < self.detection_threshold < 1.0:
            raise ValueError("detection_threshold must lie in (0, 1)")
        if self.genie_start_sample < 0:
            raise ValueError("genie_start_sample must be nonnegative")


@dataclass
class SyncResult:
    detected: bool
    start_sample: int = -1
    metric_peak: float = 0.0
    coarse_cfo_hz: float = 0.0
    fine_cfo_hz: float = 0.0

    @property
    def cfo_hz(self) -> float:
        return self.coarse_cfo_hz + self.fine_cfo_hz


@dataclass
class DecodedPacket:
    """Receiver output for one packet.

    ``symbol_bit_groups`` holds the descrambled data-field bits partitioned
    per OFDM symbol (row i = bits carried by symbol i), the operand of the
    XOR tag decoder. ``crc_like_ok`` is a simulation-side hook the harness
    fills by comparing ``psdu_bits`` with the transmitted truth.
    """

    detected: bool
    sync: SyncResult
    equalized: Optional[np.ndarray] = None
    symbol_bit_groups: Optional[np.ndarray] = None
    psdu_bits: Optional[np.ndarray] = None
    crc_like_ok: Optional[bool] = None
    cfg: Optional[PhyConfig] = None

    @property
    def n_symbols(self) -> int:
        return 0 if self.symbol_bit_groups is None else self.symbol_bit_groups.shape[0]


def _fft_backoff(cfg: PhyConfig) -> int:
    """Samples the FFT window starts early, inside the guard interval."""
    return 2 if cfg.fft_size == 64 else 4


def _ltf_core(cfg: PhyConfig) -> np.ndarray:
    """Time-domain long-training symbol (one FFT period, unnormalized)."""
    _, bins, _, _ = _subcarrier_layout(cfg)
    spec = np.zeros(cfg.fft_size, dtype=complex)
    spec[bins] = ltf_reference(cfg)
    return np.fft.ifft(spec)


def detect_packet(samples: np.ndarray, phy: PhyConfig, rx: RxConfig) -> SyncResult:
    """Locate the preamble, or report a miss.

    Short-training autocorrelation at lag fft/4 must clear the threshold and
    hold it for a quarter-STF plateau; long-training cross-correlation then
    pins the start sample.
    """
    if rx.genie_sync:
        return SyncResult(True, rx.genie_start_sample)
    fft = phy.fft_size
    lag = fft // 4
    win = 2 * lag
    if samples.size < 3 * lag + fft:
        return SyncResult(detected=False)

    prod = np.conj(samples[:-lag]) * samples[lag:]
    prod_cum = np.concatenate([[0.0], np.cumsum(prod)])
    energy = np.abs(samples[lag:]) ** 2
    energy_cum = np.concatenate([[0.0], np.cumsum(energy)])

    n_pos = prod.size - win + 1
    if n_pos <= 0:
        return SyncResult(detected=False)
    p = prod_cum[win : win + n_pos] - prod_cum[:n_pos]
    r = energy_cum[win : win + n_pos] - energy_cum[:n_pos]
    r = np.maximum(r, 1e-12)
    metric = np.abs(p) ** 2 / r**2

    above = metric >= rx.detection_threshold
    if above.size < lag:
        return SyncResult(detected=False)
    # Plateau: most of a quarter-STF stretch above threshold. Requiring
    # every position would let a single noise dip erase the packet, while
    # noise alone cannot hold ninety percent of a window this high.
    above_cum = np.concatenate([[0], np.cumsum(above)])
    counts = above_cum[lag:] - above_cum[:-lag]
    plateau = np.nonzero(counts >= int(np.ceil(0.9 * lag)))[0]
    if plateau.size == 0:
        return SyncResult(detected=False)
    d0 = int(plateau[0])

    # Coarse CFO from the autocorrelation phase averaged across the plateau.
    p_avg = p[d0 : d0 + lag].sum()
    coarse = float(np.angle(p_avg)) * phy.sample_rate_hz / (2.0 * np.pi * lag)
    peak = float(metric[d0 : d0 + lag].max())

    # Long-training cross-correlation around the expected position.
    ltf_nominal = d0 + 10 * lag + fft // 2
    lo = max(ltf_nominal - win, 0)
    hi = ltf_nominal + win
    seg_end = hi + 2 * fft
    if seg_end > samples.size:
        return SyncResult(detected=False)
    seg = samples[lo:seg_end]
    n = np.arange(seg.size)
    seg = seg * np.exp(-2j * np.pi * coarse * n / phy.sample_rate_hz)
    ref = _ltf_core(phy)
    corr = np.abs(np.correlate(seg, ref, mode="valid"))
    span = hi - lo + 1
    score = corr[:span] + corr[fft : fft + span]
    p1 = lo + int(np.argmax(score))

    start = p1 - 10 * lag - fft // 2
    if start < 0:
        return SyncResult(detected=False)
    return SyncResult(True, start, peak, coarse, 0.0)


def estimate_cfo(samples: np.ndarray, sync: SyncResult, phy: PhyConfig) -> tuple:
    """Coarse (short-training) plus fine (long-training) estimate in Hz.

    Correlation windows keep a margin away from field boundaries: samples
    there mix training fields with neighbors (multipath tails, timing
    error), which would bias the phase at any SNR.
    """
    if not sync.detected:
        raise ValueError("cannot estimate CFO without a detected packet")
    start = sync.start_sample
    fft = phy.fft_size
    lag = fft // 4
    fs = phy.sample_rate_hz
    margin = fft // 8

    stf = samples[start + lag : start + 9 * lag]
    p = np.sum(np.conj(stf[:-lag]) * stf[lag:])
    coarse = float(np.angle(p)) * fs / (2.0 * np.pi * lag)

    ltf_at = start + 10 * lag + fft // 2
    seg = samples[ltf_at : ltf_at + 2 * fft]
    n = np.arange(seg.size)
    seg = seg * np.exp(-2j * np.pi * coarse * n / fs)
    first = seg[margin : fft - margin]
    second = seg[fft + margin : 2 * fft - margin]
    p2 = np.sum(np.conj(first) * second)
    fine = float(np.angle(p2)) * fs / (2.0 * np.pi * fft)
    return coarse, fine


def demod_equalize(
    samples: np.ndarray,
    sync: SyncResult,
    rx: RxConfig,
    phy: PhyConfig,
    n_symbols: Optional[int] = None,
) -> np.ndarray:
    """Equalized occupied-subcarrier values for each data symbol.

    The frequency offset in ``sync`` is removed with phase zero at the
    packet start, both long-training symbols are averaged into a
    zero-forcing channel estimate, and each data FFT window starts a few
    samples inside the guard interval (the common early-window phase ramp
    cancels because the channel estimate shares it).
    """
    fft = phy.fft_size
    lag = fft // 4
    gi = phy.guard_interval_samples
    backoff = _fft_backoff(phy)
    start = sync.start_sample
    n_symbols = phy.n_data_symbols if n_symbols is None else n_symbols

    need = start + phy.preamble_length + n_symbols * phy.symbol_duration
    if samples.size < need:
        samples = np.concatenate(
            [samples, np.zeros(need - samples.size, dtype=complex)]
        )

    n = np.arange(samples.size - start)
    rot = samples[start:] * np.exp(
        -2j * np.pi * sync.cfo_hz * n / phy.sample_rate_hz
    )

    _, bins, pilot_cols, _ = _subcarrier_layout(phy)
    ltf_at = 10 * lag + fft // 2 - backoff
    ltf1 = np.fft.fft(rot[ltf_at : ltf_at + fft])
    ltf2 = np.fft.fft(rot[ltf_at + fft : ltf_at + 2 * fft])
    h = 0.5 * (ltf1[bins] + ltf2[bins]) / ltf_reference(phy)
    h = np.where(np.abs(h) < 1e-9, 1e-9, h)

    data_at = phy.preamble_length
    offsets = data_at + np.arange(n_symbols) * phy.symbol_duration + gi - backoff
    windows = rot[offsets[:, None] + np.arange(fft)]
    spectra = np.fft.fft(windows, axis=1)
    eq = spectra[:, bins] / h

    if rx.pilot_tracking:
        cpe = np.angle(eq[:, pilot_cols].sum(axis=1))
        eq = eq * np.exp(-1j * cpe)[:, None]
    return eq


# Trellis tables for the rate-1/2 K=7 code. Index w = (input << 6) | state
# with state bits holding the six previous inputs, newest in bit 5.
_W = np.arange(128, dtype=np.int64)
_OUT_A = np.array([bin(w & 0b1011011).count("1") & 1 for w in range(128)], np.uint8)
_OUT_B = np.array([bin(w & 0b1111001).count("1") & 1 for w in range(128)], np.uint8)
_NEXT = (_W >> 1).astype(np.int64)


@njit(cache=True)
def _viterbi_kernel(rx_a, rx_b, out_a, out_b, nxt, end_state):  # pragma: no cover
    n = rx_a.size
    big = 1 << 30
    pm = np.full(64, big, np.int64)
    pm[0] = 0
    back = np.empty((n, 64), np.uint8)
    npm = np.empty(64, np.int64)
    for t in range(n):
        npm[:] = big
        for w in range(128):
            s = w & 63
            m = pm[s]
            if m >= big:
                continue
            m += (rx_a[t] != out_a[w]) + (rx_b[t] != out_b[w])
            s2 = nxt[w]
            if m < npm[s2]:
                npm[s2] = m
                back[t, s2] = w
        pm[:] = npm
    state = np.argmin(pm) if end_state < 0 else end_state
    bits = np.empty(n, np.uint8)
    for t in range(n - 1, -1, -1):
        w = back[t, state]
        bits[t] = w >> 6
        state = w & 63
    return bits


def viterbi_decode(coded_bits: np.ndarray, terminated: bool = False) -> np.ndarray:
    """Hard-decision Viterbi decode of a rate-1/2 stream.

    ``terminated`` forces traceback from the zero state (stream known to end
    in six zero bits); otherwise the best end state wins.
    """
    coded_bits = np.asarray(coded_bits, dtype=np.uint8)
    if coded_bits.size % 2:
        raise ValueError("coded bit stream must have even length")
    return _viterbi_kernel(
        coded_bits[0::2].copy(),
        coded_bits[1::2].copy(),
        _OUT_A,
        _OUT_B,
        _NEXT,
        0 if terminated else -1,
    )


def decode_packet(
    samples: np.ndarray, rx: RxConfig, phy: PhyConfig, scramble_seed: int
) -> DecodedPacket:
    """Run the full chain on a sample buffer containing one packet.

    ``scramble_seed`` is genie-provided link state (see module docstring);
    descrambling with it keeps the per-symbol bit groups of two decodes of
    the same transmission XOR-compatible.
    """
    sync = detect_packet(samples, phy, rx)
    if not sync.detected:
        return DecodedPacket(False, sync, cfg=phy)

    sync.coarse_cfo_hz, sync.fine_cfo_hz = estimate_cfo(samples, sync, phy)

    eq = demod_equalize(samples, sync, rx, phy)
    _, _, _, data_cols = _subcarrier_layout(phy)
    hard = (eq[:, data_cols].real > 0).astype(np.uint8)

    table = _interleaver_table(phy.coded_bits_per_symbol)
    coded = hard[:, table].reshape(-1)
    field = viterbi_decode(coded)

    descrambled = scramble(field, scramble_seed)
    psdu = descrambled[SERVICE_BITS : SERVICE_BITS + 8 * phy.psdu_length_bytes]

    return DecodedPacket(
        detected=True,
        sync=sync,
        equalized=eq,
        symbol_bit_groups=descrambled.reshape(
            phy.n_data_symbols, phy.bits_per_symbol
        ),
        psdu_bits=psdu,
        cfg=phy,
    )
