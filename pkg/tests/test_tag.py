"""Tag modulation: codebook, differential encoding, per-symbol multipliers."""
import numpy as np
import pytest

from moxsim.phy import PhyConfig, build_ppdu
from moxsim.tag import (
    TagConfig,
    apply_tag,
    build_theta,
    codebook_for,
    codebook_lookup,
    encode_tag_phases,
    tag_capacity,
)


def test_codebook_bpsk_has_only_half_cycle_phases():
    book = codebook_for("bpsk")
    assert book.phases() == (0, 180)
    assert tuple(codebook_lookup("bpsk", 0)) == (0,)
    assert tuple(codebook_lookup("bpsk", 180)) == (1,)


def test_codebook_quadrature_rows_carry_two_bits():
    for modulation in ("qpsk", "16qam", "64qam"):
        book = codebook_for(modulation)
        assert book.phases() == (0, 90, 180, 270)
        assert tuple(codebook_lookup(modulation, 90)) == (0, 1)
        assert tuple(codebook_lookup(modulation, 270)) == (1, 1)


def test_codebook_rejects_unknown_entries():
    with pytest.raises(ValueError):
        codebook_for("fsk")
    with pytest.raises(ValueError):
        codebook_lookup("bpsk", 90)


def test_encode_tag_phases_bpsk_is_direct():
    cfg = TagConfig((1, 0, 1), mode="bpsk")
    assert np.array_equal(encode_tag_phases(cfg), [180.0, 0.0, 180.0])


def test_encode_tag_phases_dbpsk_toggles_from_reference():
    cfg = TagConfig((1, 0, 1), mode="dbpsk")
    assert np.array_equal(encode_tag_phases(cfg), [0.0, 180.0, 180.0, 0.0])
    cfg = TagConfig((0, 0), mode="dbpsk")
    assert np.array_equal(encode_tag_phases(cfg), [0.0, 0.0, 0.0])


def test_tag_config_validation():
    with pytest.raises(ValueError):
        TagConfig((0, 1), mode="qpsk")
    with pytest.raises(ValueError):
        TagConfig((0, 1), symbols_per_bit=0)
    with pytest.raises(ValueError):
        TagConfig((0, 1), symbols_per_bit=9)
    with pytest.raises(ValueError):
        TagConfig((0, 1), start_symbol=-1)
    with pytest.raises(ValueError):
        TagConfig((0, 2))


def test_tag_capacity_rules():
    bpsk = TagConfig((), mode="bpsk", symbols_per_bit=2)
    dbpsk = TagConfig((), mode="dbpsk", symbols_per_bit=2)
    assert tag_capacity(309, bpsk) == 154
    assert tag_capacity(309, dbpsk) == 153  # one group spent on the reference
    late = TagConfig((), mode="bpsk", symbols_per_bit=4, start_symbol=9)
    assert tag_capacity(309, late) == 75
    assert tag_capacity(1, dbpsk) == 0
    assert tag_capacity(0, bpsk) == 0


def test_build_theta_values_and_layout():
    cfg = TagConfig((1, 0, 1), mode="bpsk", symbols_per_bit=2, start_symbol=3)
    theta = build_theta(cfg, 20)
    assert theta.n_symbols == 20
    assert np.array_equal(theta.group_starts, [3, 5, 7])
    expected = np.ones(20)
    expected[3:5] = -1.0
    expected[7:9] = -1.0
    assert np.array_equal(theta.values, expected)


def test_build_theta_rejects_overflow():
    cfg = TagConfig((1,) * 10, mode="bpsk", symbols_per_bit=2)
    with pytest.raises(ValueError):
        build_theta(cfg, 19)
    build_theta(cfg, 20)  # exact fit is fine


def _packet(n_bytes=40):
    cfg = PhyConfig.for_bandwidth(20, n_bytes)
    rng = np.random.default_rng(5)
    psdu = rng.integers(0, 2, n_bytes * 8).astype(np.uint8)
    return build_ppdu(psdu, cfg, 17)


def test_apply_tag_leaves_preamble_untouched():
    ppdu = _packet()
    bits = tuple(np.random.default_rng(6).integers(0, 2, 10))
    tagged = apply_tag(ppdu, build_theta(TagConfig(bits), ppdu.n_data_symbols))
    assert tagged.preamble.tobytes() == ppdu.preamble.tobytes()
    assert tagged.samples[:320].tobytes() == ppdu.samples[:320].tobytes()


def test_apply_tag_multiplies_whole_symbols():
    ppdu = _packet()
    n = ppdu.n_data_symbols
    bits = tuple(np.random.default_rng(7).integers(0, 2, n // 2))
    theta = build_theta(TagConfig(bits, symbols_per_bit=2), n)
    tagged = apply_tag(ppdu, theta)
    for i in range(n):
        seg = slice(i * 80, (i + 1) * 80)
        assert np.allclose(
            tagged.data_samples[seg], theta.values[i] * ppdu.data_samples[seg],
            atol=1e-15,
        )


def test_apply_tag_all_zero_bpsk_payload_is_transparent():
    ppdu = _packet()
    theta = build_theta(TagConfig((0,) * 5), ppdu.n_data_symbols)
    tagged = apply_tag(ppdu, theta)
    assert np.array_equal(tagged.data_samples, ppdu.data_samples)


def test_apply_tag_scales_subcarriers_linearly():
    ppdu = _packet()
    n = ppdu.n_data_symbols
    bits = tuple(np.random.default_rng(8).integers(0, 2, n))
    theta = build_theta(TagConfig(bits), n)
    tagged = apply_tag(ppdu, theta)
    for i in range(0, n, 7):
        core = slice(i * 80 + 16, (i + 1) * 80)
        want = theta.values[i] * np.fft.fft(ppdu.data_samples[core])
        assert np.allclose(np.fft.fft(tagged.data_samples[core]), want, atol=1e-9)


def test_apply_tag_rejects_mismatched_theta():
    ppdu = _packet()
    theta = build_theta(TagConfig((1,)), ppdu.n_data_symbols + 1)
    with pytest.raises(ValueError):
        apply_tag(ppdu, theta)
