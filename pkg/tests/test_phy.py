"""Waveform generation against independent bit-level oracles.

The scrambler and convolutional encoder are checked against direct
shift-register implementations written here, the interleaver against
hand-computed position tables, and packet assembly against structural
properties (cyclic prefixes, spectral support, normalization).
"""
import numpy as np
import pytest

from moxsim.phy import (
    SERVICE_BITS,
    TAIL_BITS,
    PhyConfig,
    build_ppdu,
    build_preamble,
    conv_encode,
    deinterleave_symbol,
    interleave_symbol,
    occupied_subcarriers,
    data_columns,
    pilot_columns,
    ltf_reference,
    pilot_values,
    scramble,
    scrambler_sequence,
)


def lfsr_reference(seed, length):
    """Bit-at-a-time x^7 + x^4 + 1 keystream, no period shortcuts."""
    state = [(seed >> i) & 1 for i in range(7)]
    out = np.empty(length, dtype=np.uint8)
    for n in range(length):
        fb = state[6] ^ state[3]
        out[n] = fb
        state = [fb] + state[:6]
    return out


def conv_encode_reference(bits):
    """Shift-register rate-1/2 encoder, taps 133/171 octal."""
    taps_a = (1, 0, 1, 1, 0, 1, 1)
    taps_b = (1, 1, 1, 1, 0, 0, 1)
    sr = [0] * 6
    out = []
    for b in bits:
        window = [int(b)] + sr
        out.append(sum(w * t for w, t in zip(window, taps_a)) % 2)
        out.append(sum(w * t for w, t in zip(window, taps_b)) % 2)
        sr = [int(b)] + sr[:5]
    return np.array(out, dtype=np.uint8)


def test_scrambler_matches_bit_level_lfsr():
    for seed in (1, 2, 0x5D, 93, 127):
        ref = lfsr_reference(seed, 300)
        assert np.array_equal(scrambler_sequence(seed, 300), ref)


def test_scrambler_period_is_exactly_127_for_every_seed():
    for seed in range(1, 128):
        ks = lfsr_reference(seed, 254)
        assert np.array_equal(ks[:127], ks[127:])
        # No shorter period: 127 is prime, so any proper period would be 1.
        assert not np.all(ks[:127] == ks[0])


def test_scramble_is_self_inverse():
    rng = np.random.default_rng(0)
    for seed in (1, 45, 127):
        bits = rng.integers(0, 2, 500).astype(np.uint8)
        assert np.array_equal(scramble(scramble(bits, seed), seed), bits)


def test_scramble_rejects_bad_seeds():
    bits = np.zeros(8, dtype=np.uint8)
    for seed in (0, 128, -1):
        with pytest.raises(ValueError):
            scramble(bits, seed)
        with pytest.raises(ValueError):
            scrambler_sequence(seed, 10)


def test_conv_encode_matches_shift_register_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        bits = rng.integers(0, 2, int(rng.integers(1, 200))).astype(np.uint8)
        assert np.array_equal(conv_encode(bits), conv_encode_reference(bits))


def test_conv_encode_single_one_gives_generator_taps():
    # Impulse response reads the generators straight off the output.
    out = conv_encode(np.array([1, 0, 0, 0, 0, 0, 0], dtype=np.uint8))
    assert np.array_equal(out[0::2], [1, 0, 1, 1, 0, 1, 1])
    assert np.array_equal(out[1::2], [1, 1, 1, 1, 0, 0, 1])


# First entries of the position tables, computed by hand from
# row * (k mod cols) + k // cols.
_TABLE_52_HEAD = [0, 4, 8, 12, 16, 20, 24, 28, 32, 36, 40, 44, 48, 1, 5, 9]
_TABLE_48_HEAD = [0, 3, 6, 9, 12, 15, 18, 21, 24, 27, 30, 33, 36, 39, 42, 45, 1, 4]
_TABLE_108_HEAD = [0, 6, 12, 18, 24, 30, 36, 42, 48, 54, 60, 66, 72, 78, 84, 90, 96, 102, 1]


@pytest.mark.parametrize(
    "cfg,head",
    [
        (PhyConfig.for_bandwidth(20), _TABLE_52_HEAD),
        (PhyConfig.for_bandwidth(40), _TABLE_108_HEAD),
        (PhyConfig.legacy_20mhz(), _TABLE_48_HEAD),
    ],
)
def test_interleaver_against_hand_computed_table(cfg, head):
    n = cfg.coded_bits_per_symbol
    bits = np.zeros(n, dtype=np.uint8)
    for k, position in enumerate(head):
        bits[:] = 0
        bits[k] = 1
        out = interleave_symbol(bits, cfg)
        assert out[position] == 1 and out.sum() == 1


@pytest.mark.parametrize(
    "cfg",
    [PhyConfig.for_bandwidth(20), PhyConfig.for_bandwidth(40), PhyConfig.legacy_20mhz()],
)
def test_interleaver_roundtrip_is_identity(cfg):
    rng = np.random.default_rng(2)
    for _ in range(10):
        bits = rng.integers(0, 2, cfg.coded_bits_per_symbol).astype(np.uint8)
        assert np.array_equal(deinterleave_symbol(interleave_symbol(bits, cfg), cfg), bits)
        assert np.array_equal(interleave_symbol(deinterleave_symbol(bits, cfg), cfg), bits)


def test_interleaver_rejects_wrong_length():
    cfg = PhyConfig.for_bandwidth(20)
    with pytest.raises(ValueError):
        interleave_symbol(np.zeros(51, dtype=np.uint8), cfg)
    with pytest.raises(ValueError):
        deinterleave_symbol(np.zeros(53, dtype=np.uint8), cfg)


def test_symbol_count_examples():
    assert PhyConfig.for_bandwidth(20, 1000).n_data_symbols == 309
    assert PhyConfig.for_bandwidth(40, 1000).n_data_symbols == 149
    assert PhyConfig.legacy_20mhz(1000).n_data_symbols == 335


def test_symbol_count_formula_over_random_lengths():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = int(rng.integers(1, 4096))
        cfg = PhyConfig.for_bandwidth(20, n)
        total = SERVICE_BITS + 8 * n + TAIL_BITS
        expected = total // 26 + (1 if total % 26 else 0)
        assert cfg.n_data_symbols == expected


def test_config_constants():
    cfg20 = PhyConfig.for_bandwidth(20)
    assert cfg20.bits_per_symbol == 26
    assert cfg20.coded_bits_per_symbol == 52
    assert cfg20.coding_rate == 0.5
    assert cfg20.symbol_duration == 80
    assert cfg20.sample_rate_hz == 20e6
    assert cfg20.preamble_length == 320

    cfg40 = PhyConfig.for_bandwidth(40)
    assert cfg40.bits_per_symbol == 54
    assert cfg40.symbol_duration == 160
    assert cfg40.preamble_length == 640

    legacy = PhyConfig.legacy_20mhz()
    assert legacy.bits_per_symbol == 24


def test_config_validation():
    with pytest.raises(ValueError):
        PhyConfig.for_bandwidth(30)
    with pytest.raises(ValueError):
        PhyConfig(20, 64, 52, 4, 16, 0)
    with pytest.raises(ValueError):
        PhyConfig(20, 128, 52, 4, 32, 100)
    with pytest.raises(ValueError):
        PhyConfig(20, 64, 48, 4, 16, 100)  # legacy counts need variant='legacy'
    with pytest.raises(ValueError):
        PhyConfig(40, 128, 108, 6, 32, 100, variant="legacy")
    with pytest.raises(ValueError):
        PhyConfig(20, 64, 52, 4, 16, 100, variant="dsss")


def test_subcarrier_layout_20mhz():
    cfg = PhyConfig.for_bandwidth(20)
    occ = occupied_subcarriers(cfg)
    assert occ.size == 56
    assert occ[0] == -28 and occ[-1] == 28
    assert 0 not in occ
    pilots = occ[pilot_columns(cfg)]
    assert sorted(pilots) == [-21, -7, 7, 21]
    assert data_columns(cfg).size == 52
    assert np.array_equal(np.abs(ltf_reference(cfg)), np.ones(56))
    assert np.array_equal(pilot_values(cfg), np.ones(4))


def test_subcarrier_layout_40mhz_and_legacy():
    cfg = PhyConfig.for_bandwidth(40)
    occ = occupied_subcarriers(cfg)
    assert occ.size == 114
    assert occ[0] == -58 and occ[-1] == 58
    assert not np.any(np.abs(occ) < 2)
    pilots = occ[pilot_columns(cfg)]
    assert sorted(pilots) == [-53, -25, -11, 11, 25, 53]
    assert data_columns(cfg).size == 108

    legacy = PhyConfig.legacy_20mhz()
    occ = occupied_subcarriers(legacy)
    assert occ.size == 52
    assert occ[0] == -26 and occ[-1] == 26
    assert data_columns(legacy).size == 48


def test_preamble_structure():
    cfg = PhyConfig.for_bandwidth(20)
    p = build_preamble(cfg)
    assert p.size == 320
    # Short training repeats every quarter FFT for ten periods.
    for i in range(1, 10):
        assert np.allclose(p[:16], p[16 * i : 16 * (i + 1)], atol=1e-12)
    # The two long symbols are identical and the double GI is their tail.
    assert np.allclose(p[192:256], p[256:320], atol=1e-12)
    assert np.allclose(p[160:192], p[288:320], atol=1e-12)
    assert np.isclose(np.mean(np.abs(p) ** 2), 1.0, atol=1e-12)


def _make_ppdu(n_bytes=40, seed=7, bandwidth=20):
    cfg = PhyConfig.for_bandwidth(bandwidth, n_bytes)
    rng = np.random.default_rng(seed)
    psdu = rng.integers(0, 2, n_bytes * 8).astype(np.uint8)
    return psdu, cfg, build_ppdu(psdu, cfg, scramble_seed=93)


def test_ppdu_shapes_and_power():
    psdu, cfg, ppdu = _make_ppdu()
    n_sym = cfg.n_data_symbols
    assert ppdu.data_samples.size == n_sym * 80
    assert ppdu.samples.size == 320 + n_sym * 80
    assert np.array_equal(ppdu.symbol_boundaries, np.arange(n_sym) * 80)
    assert np.isclose(np.mean(np.abs(ppdu.data_samples) ** 2), 1.0, atol=1e-12)
    assert np.array_equal(ppdu.psdu_bits, psdu)
    assert ppdu.n_data_symbols == n_sym


def test_ppdu_guard_interval_is_cyclic_prefix():
    _, cfg, ppdu = _make_ppdu()
    for i in range(cfg.n_data_symbols):
        sym = ppdu.data_samples[i * 80 : (i + 1) * 80]
        assert np.allclose(sym[:16], sym[64:], atol=1e-12)


def test_ppdu_grid_contents():
    _, cfg, ppdu = _make_ppdu()
    grid = ppdu.grid
    assert grid.values.shape == (cfg.n_data_symbols, 56)
    assert np.allclose(grid.values[:, grid.pilot_cols], 1.0)
    data = grid.values[:, grid.data_cols]
    assert np.all(np.isin(data.real, (-1.0, 1.0)))
    assert np.allclose(data.imag, 0.0)
    assert np.array_equal(grid.data_values(), data)


def test_ppdu_spectrum_confined_to_occupied_bins():
    _, cfg, ppdu = _make_ppdu()
    occ_bins = occupied_subcarriers(cfg) % 64
    free = np.setdiff1d(np.arange(64), occ_bins)
    for i in range(0, cfg.n_data_symbols, 5):
        core = ppdu.data_samples[i * 80 + 16 : (i + 1) * 80]
        spec = np.fft.fft(core)
        assert np.max(np.abs(spec[free])) < 1e-9


def test_ppdu_field_bits_recoverable_from_grid():
    # Demap + deinterleave + re-encode closes the loop on the data field.
    psdu, cfg, ppdu = _make_ppdu()
    hard = (ppdu.grid.values[:, ppdu.grid.data_cols].real > 0).astype(np.uint8)
    coded = np.vstack([deinterleave_symbol(row, cfg) for row in hard]).reshape(-1)
    n_field = cfg.n_data_symbols * cfg.bits_per_symbol
    field = np.zeros(n_field, dtype=np.uint8)
    field[SERVICE_BITS : SERVICE_BITS + psdu.size] = psdu
    scrambled = scramble(field, 93)
    scrambled[SERVICE_BITS + psdu.size : SERVICE_BITS + psdu.size + TAIL_BITS] = 0
    assert np.array_equal(coded, conv_encode(scrambled))


def test_ppdu_deterministic():
    _, _, a = _make_ppdu(seed=11)
    _, _, b = _make_ppdu(seed=11)
    assert a.samples.tobytes() == b.samples.tobytes()


def test_ppdu_rejects_wrong_psdu_length():
    cfg = PhyConfig.for_bandwidth(20, 10)
    with pytest.raises(ValueError):
        build_ppdu(np.zeros(79, dtype=np.uint8), cfg, 1)
