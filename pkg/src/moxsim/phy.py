"""802.11n single-stream MCS0 waveform generation.

Builds BPSK-subcarrier OFDM packets (legacy-style STF/LTF preamble plus
scrambled / rate-1/2 coded / interleaved data symbols) while exposing
per-symbol structure, so later stages can manipulate and decode the packet
at OFDM-symbol granularity.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Rate-1/2 convolutional code, K=7, generators 133/171 (octal).
# Both generators have odd tap weight, so a complemented steady-state input
# yields a complemented output stream.
G1_OCTAL = 0o133
G2_OCTAL = 0o171
G1_TAPS = np.array([1, 0, 1, 1, 0, 1, 1], dtype=np.uint8)  # 133
G2_TAPS = np.array([1, 1, 1, 1, 0, 0, 1], dtype=np.uint8)  # 171

SERVICE_BITS = 16
TAIL_BITS = 6

# Legacy short training field: 12 tones, every 4th subcarrier.
_STF_INDICES = np.array([-24, -20, -16, -12, -8, -4, 4, 8, 12, 16, 20, 24])
_STF_SIGNS = np.array([1, -1, 1, -1, -1, 1, -1, -1, 1, 1, 1, 1], dtype=float)

# Long training sequence on the 56 occupied 20 MHz subcarriers
# (-28..-1, +1..+28), i.e. the legacy +/-26 sequence extended to the edges.
_LTF_20 = np.array(
    [1, 1]
    + [1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1]
    + [1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1]
    + [-1, -1],
    dtype=float,
)


@dataclass(frozen=True)
class PhyConfig:
    """Static parameters of a single-stream BPSK-subcarrier packet.

    ``variant`` selects the subcarrier plan: 'ht' (52 data subcarriers at
    20 MHz, 108 at 40 MHz) or 'legacy' (48 data subcarriers, 20 MHz only).
    """

    bandwidth_mhz: int
    fft_size: int
    data_subcarriers: int
    pilot_subcarriers: int
    guard_interval_samples: int
    psdu_length_bytes: int
    variant: str = "ht"

    def __post_init__(self):
        if self.variant not in ("ht", "legacy"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.bandwidth_mhz not in (20, 40):
            raise ValueError(f"unsupported bandwidth {self.bandwidth_mhz} MHz")
        if self.variant == "legacy" and self.bandwidth_mhz != 20:
            raise ValueError("legacy variant is 20 MHz only")
        if self.fft_size != 64 * (self.bandwidth_mhz // 20):
            raise ValueError("fft_size must be 64 * (bandwidth_mhz / 20)")
        if self.guard_interval_samples != self.fft_size // 4:
            raise ValueError("guard interval must be fft_size / 4")
        if not 1 <= self.psdu_length_bytes <= 4095:
            raise ValueError("psdu_length_bytes must be in [1, 4095]")
        expect = {("ht", 20): (52, 4), ("ht", 40): (108, 6), ("legacy", 20): (48, 4)}
        if (self.data_subcarriers, self.pilot_subcarriers) != expect[
            (self.variant, self.bandwidth_mhz)
        ]:
            raise ValueError("subcarrier counts do not match the variant")

    @classmethod
    def for_bandwidth(cls, bandwidth_mhz: int, psdu_length_bytes: int = 1000) -> "PhyConfig":
        if bandwidth_mhz == 20:
            data, pilots = 52, 4
        elif bandwidth_mhz == 40:
            data, pilots = 108, 6
        else:
            raise ValueError(f"unsupported bandwidth {bandwidth_mhz} MHz")
        fft = 64 * (bandwidth_mhz // 20)
        return cls(bandwidth_mhz, fft, data, pilots, fft // 4, psdu_length_bytes)

    @classmethod
    def legacy_20mhz(cls, psdu_length_bytes: int = 1000) -> "PhyConfig":
        """48-data-subcarrier plan (24 data bits per symbol at rate 1/2)."""
        return cls(20, 64, 48, 4, 16, psdu_length_bytes, variant="legacy")

    @property
    def coding_rate(self) -> float:
        return 0.5

    @property
    def bits_per_symbol(self) -> int:
        """Data bits carried by one OFDM symbol (26 at 20 MHz, 54 at 40 MHz)."""
        return self.data_subcarriers // 2

    @property
    def coded_bits_per_symbol(self) -> int:
        return self.data_subcarriers

    @property
    def symbol_duration(self) -> int:
        return self.fft_size + self.guard_interval_samples

    @property
    def sample_rate_hz(self) -> float:
        return self.bandwidth_mhz * 1e6

    @property
    def n_data_symbols(self) -> int:
        total = SERVICE_BITS + 8 * self.psdu_length_bytes + TAIL_BITS
        return -(-total // self.bits_per_symbol)

    @property
    def preamble_length(self) -> int:
        # 10 short symbols + double GI + 2 long symbols
        short = self.fft_size // 4
        return 10 * short + self.fft_size // 2 + 2 * self.fft_size


@lru_cache(maxsize=None)
def _subcarrier_layout(cfg: PhyConfig):
    """Occupied/pilot/data logical subcarrier indices and their FFT bins."""
    if cfg.variant == "legacy":
        occupied = np.array([k for k in range(-26, 27) if k != 0])
        pilots = np.array([-21, -7, 7, 21])
    elif cfg.bandwidth_mhz == 20:
        occupied = np.array([k for k in range(-28, 29) if k != 0])
        pilots = np.array([-21, -7, 7, 21])
    else:
        occupied = np.array([k for k in range(-58, 59) if abs(k) >= 2])
        pilots = np.array([-53, -25, -11, 11, 25, 53])
    pilot_cols = np.searchsorted(occupied, pilots)
    data_cols = np.setdiff1d(np.arange(occupied.size), pilot_cols)
    bins = occupied % cfg.fft_size
    return occupied, bins, pilot_cols, data_cols


def occupied_subcarriers(cfg: PhyConfig) -> np.ndarray:
    return _subcarrier_layout(cfg)[0].copy()


def pilot_columns(cfg: PhyConfig) -> np.ndarray:
    """Column indices of pilot subcarriers within the occupied ordering."""
    return _subcarrier_layout(cfg)[2].copy()


def data_columns(cfg: PhyConfig) -> np.ndarray:
    """Column indices of data subcarriers within the occupied ordering."""
    return _subcarrier_layout(cfg)[3].copy()


def ltf_reference(cfg: PhyConfig) -> np.ndarray:
    """Known +/-1 long-training values on the occupied subcarriers."""
    n_occupied = _subcarrier_layout(cfg)[0].size
    if n_occupied == _LTF_20.size:
        return _LTF_20.copy()
    if n_occupied == _LTF_20.size - 4:  # legacy plan drops the two edge pairs
        return _LTF_20[2:-2].copy()
    return np.resize(_LTF_20, n_occupied).astype(float)


def pilot_values(cfg: PhyConfig) -> np.ndarray:
    """Fixed +1 pilots on every symbol (no per-symbol polarity rotation)."""
    return np.ones(cfg.pilot_subcarriers, dtype=float)


@dataclass
class CodedSymbolGrid:
    """Frequency-domain subcarrier values per OFDM data symbol.

    ``values[i]`` holds symbol i's complex value on each occupied subcarrier
    (ascending logical index); ``data_cols``/``pilot_cols`` select the data
    and pilot entries.
    """

    values: np.ndarray
    data_cols: np.ndarray
    pilot_cols: np.ndarray

    @property
    def n_symbols(self) -> int:
        return self.values.shape[0]

    def data_values(self) -> np.ndarray:
        return self.values[:, self.data_cols]


@dataclass
class Ppdu:
    """One generated packet: preamble + data samples + per-symbol structure.

    ``symbol_boundaries[i]`` is the offset of data symbol i (start of its
    guard interval) within ``data_samples``.
    """

    preamble: np.ndarray
    data_samples: np.ndarray
    symbol_boundaries: np.ndarray
    psdu_bits: np.ndarray
    grid: CodedSymbolGrid
    cfg: PhyConfig
    scramble_seed: int

    @property
    def samples(self) -> np.ndarray:
        return np.concatenate([self.preamble, self.data_samples])

    @property
    def n_data_symbols(self) -> int:
        return self.symbol_boundaries.size


def scramble(bits: np.ndarray, seed: int) -> np.ndarray:
    """XOR ``bits`` with the x^7 + x^4 + 1 LFSR keystream (self-inverse)."""
    if not 1 <= seed <= 127:
        raise ValueError("scrambler seed must be a nonzero 7-bit value")
    bits = np.asarray(bits, dtype=np.uint8)
    return bits ^ scrambler_sequence(seed, bits.size)


def scrambler_sequence(seed: int, length: int) -> np.ndarray:
    """First ``length`` keystream bits for a given 7-bit seed (period 127)."""
    if not 1 <= seed <= 127:
        raise ValueError("scrambler seed must be a nonzero 7-bit value")
    state = [(seed >> i) & 1 for i in range(7)]  # state[i] = x_{i+1}
    period = np.empty(127, dtype=np.uint8)
    for n in range(127):
        fb = state[6] ^ state[3]  # x7 xor x4
        period[n] = fb
        state = [fb] + state[:-1]
    reps = -(-length // 127)
    return np.tile(period, reps)[:length]


def conv_encode(bits: np.ndarray) -> np.ndarray:
    """Rate-1/2 K=7 convolutional encoder (zero initial state).

    Output is serialized [a0, b0, a1, b1, ...]; the caller appends tail bits
    if the trellis should terminate.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    a = np.convolve(bits, G1_TAPS)[: bits.size] & 1
    b = np.convolve(bits, G2_TAPS)[: bits.size] & 1
    out = np.empty(2 * bits.size, dtype=np.uint8)
    out[0::2] = a
    out[1::2] = b
    return out


@lru_cache(maxsize=None)
def _interleaver_table(n_cbps: int) -> np.ndarray:
    """Position table: coded bit k lands at table[k] (BPSK, single stream)."""
    if n_cbps == 52:
        n_col, n_row = 13, 4
    elif n_cbps == 108:
        n_col, n_row = 18, 6
    elif n_cbps == 48:
        n_col, n_row = 16, 3
    else:
        raise ValueError(f"no interleaver defined for {n_cbps} coded bits")
    k = np.arange(n_cbps)
    # First permutation; the second is the identity for 1 bit per subcarrier.
    return n_row * (k % n_col) + k // n_col


def interleave_symbol(coded_bits: np.ndarray, cfg: PhyConfig) -> np.ndarray:
    """Block-interleave one symbol's worth of coded bits."""
    coded_bits = np.asarray(coded_bits, dtype=np.uint8)
    if coded_bits.size != cfg.coded_bits_per_symbol:
        raise ValueError(
            f"expected {cfg.coded_bits_per_symbol} coded bits, got {coded_bits.size}"
        )
    table = _interleaver_table(cfg.coded_bits_per_symbol)
    out = np.empty_like(coded_bits)
    out[table] = coded_bits
    return out


def deinterleave_symbol(bits: np.ndarray, cfg: PhyConfig) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size != cfg.coded_bits_per_symbol:
        raise ValueError(
            f"expected {cfg.coded_bits_per_symbol} coded bits, got {bits.size}"
        )
    return bits[_interleaver_table(cfg.coded_bits_per_symbol)]


def _freq_to_time(cfg: PhyConfig, freq_rows: np.ndarray) -> np.ndarray:
    """IFFT each row of occupied-subcarrier values and prepend guard intervals."""
    _, bins, _, _ = _subcarrier_layout(cfg)
    n_sym = freq_rows.shape[0]
    spectrum = np.zeros((n_sym, cfg.fft_size), dtype=complex)
    spectrum[:, bins] = freq_rows
    core = np.fft.ifft(spectrum, axis=1)
    gi = core[:, -cfg.guard_interval_samples:]
    return np.concatenate([gi, core], axis=1)


def build_preamble(cfg: PhyConfig) -> np.ndarray:
    """10 short training symbols + double-GI + 2 long symbols, unit mean power."""
    short = cfg.fft_size // 4
    stf_spec = np.zeros(cfg.fft_size, dtype=complex)
    stf_spec[_STF_INDICES % cfg.fft_size] = _STF_SIGNS * (1 + 1j)
    stf_core = np.fft.ifft(stf_spec)
    stf = np.tile(stf_core[:short], 10)  # tones every 4th bin => period fft/4

    _, bins, _, _ = _subcarrier_layout(cfg)
    ltf_spec = np.zeros(cfg.fft_size, dtype=complex)
    ltf_spec[bins] = ltf_reference(cfg)
    ltf_core = np.fft.ifft(ltf_spec)
    ltf = np.concatenate([ltf_core[-cfg.fft_size // 2 :], ltf_core, ltf_core])

    preamble = np.concatenate([stf, ltf])
    return preamble / np.sqrt(np.mean(np.abs(preamble) ** 2))


def build_ppdu(psdu: np.ndarray, cfg: PhyConfig, scramble_seed: int) -> Ppdu:
    """Assemble a complete packet from PSDU bits.

    The data field is service + PSDU + tail + pad, scrambled (tail re-zeroed),
    rate-1/2 encoded, block-interleaved per symbol, BPSK mapped, pilot
    inserted and IFFT'd with a cyclic prefix. Data samples are normalized to
    unit mean power so receiver SNR is exact.
    """
    psdu = np.asarray(psdu, dtype=np.uint8)
    if psdu.size != cfg.psdu_length_bytes * 8:
        raise ValueError(
            f"psdu must be {cfg.psdu_length_bytes * 8} bits, got {psdu.size}"
        )

    n_sym = cfg.n_data_symbols
    n_dbps = cfg.bits_per_symbol
    n_field = n_sym * n_dbps
    field = np.zeros(n_field, dtype=np.uint8)
    field[SERVICE_BITS : SERVICE_BITS + psdu.size] = psdu

    scrambled = scramble(field, scramble_seed)
    tail_at = SERVICE_BITS + psdu.size
    scrambled[tail_at : tail_at + TAIL_BITS] = 0  # tail returns encoder to zero

    coded = conv_encode(scrambled).reshape(n_sym, cfg.coded_bits_per_symbol)
    table = _interleaver_table(cfg.coded_bits_per_symbol)
    interleaved = np.empty_like(coded)
    interleaved[:, table] = coded

    occupied, _, pilot_cols, data_cols = _subcarrier_layout(cfg)
    grid_values = np.zeros((n_sym, occupied.size), dtype=complex)
    grid_values[:, data_cols] = 2.0 * interleaved - 1.0
    grid_values[:, pilot_cols] = pilot_values(cfg)

    symbols = _freq_to_time(cfg, grid_values)
    data_samples = symbols.reshape(-1)
    data_samples = data_samples / np.sqrt(np.mean(np.abs(data_samples) ** 2))
    boundaries = np.arange(n_sym) * cfg.symbol_duration

    grid = CodedSymbolGrid(grid_values, data_cols.copy(), pilot_cols.copy())
    return Ppdu(
        preamble=build_preamble(cfg),
        data_samples=data_samples,
        symbol_boundaries=boundaries,
        psdu_bits=psdu.copy(),
        grid=grid,
        cfg=cfg,
        scramble_seed=scramble_seed,
    )
