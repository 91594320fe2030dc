"""Monte-Carlo trial runner and sweep aggregation.

A trial transmits one packet twice, as received over the direct path and as
received via the tag reflection, decodes both copies independently and
recovers the tag payload from their XOR. Every random draw in a trial comes
from a generator seeded by (base seed, axis index, trial index), so any
trial can be reproduced in isolation and aggregation reduces to summing
integers, making results independent of trial execution order.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import (
    MODEL_RMS_NS,
    ChannelRealization,
    PathLossParams,
    add_awgn,
    apply_cfo,
    apply_channel,
    draw_cfo,
    ideal_channel,
    make_pdp,
    path_loss_snr,
    realize_channel,
)
from .phy import PhyConfig, build_ppdu
from .receiver import RxConfig, decode_packet
from .tag import TagConfig, apply_tag, build_theta, tag_capacity
from .tagdecode import (
    TagDecodeResult,
    WindowConfig,
    decode_tag,
    missed_result,
    xor_packets,
)

AXES = ("snr", "distance", "rate", "psdu", "model")
DISTANCE_MODES = ("fixed_tx", "fixed_rx")
COUPLINGS = ("shared", "independent")

_PAD_MIN = 200
_PAD_MAX = 600
_PAD_TAIL = 64


@dataclass(frozen=True)
class ExperimentSpec:
    """Full description of one sweep.

    ``axis`` names the swept quantity and ``axis_values`` its values:
    'snr' (dB), 'distance' (m), 'rate' (symbols per tag bit), 'psdu'
    (payload bytes), 'model' (channel model letter). Non-swept quantities
    keep their scalar fields. ``distance_mode`` picks whether a distance
    sweep attenuates the links through the path-loss anchor ('fixed_tx')
    or pins receive SNR at ``snr_db`` regardless of distance ('fixed_rx').
    ``channel_coupling`` controls whether the two packets of a trial see
    the same multipath draw ('shared', the default) or independent ones.
    """

    axis: str = "snr"
    axis_values: tuple = (25.0,)
    trials: int = 200
    base_seed: int = 1

    bandwidth_mhz: int = 20
    psdu_bytes: int = 1000
    mode: str = "bpsk"
    symbols_per_bit: int = 1
    start_symbol: int = 0
    n_tag_bits: Optional[int] = None

    channel: str = "ideal"
    channel_coupling: str = "shared"
    snr_db: float = 25.0
    cfo_ppm: float = 20.0
    path_loss: PathLossParams = field(default_factory=PathLossParams)
    distance_mode: str = "fixed_tx"

    pilot_tracking: bool = False
    genie_sync: bool = False
    detection_threshold: float = 0.6
    window_groups: int = 2
    run_fraction: float = 1.0

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}")
        if not self.axis_values:
            raise ValueError("axis_values must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.distance_mode not in DISTANCE_MODES:
            raise ValueError(f"distance_mode must be one of {DISTANCE_MODES}")
        if self.channel_coupling not in COUPLINGS:
            raise ValueError(f"channel_coupling must be one of {COUPLINGS}")


@dataclass(frozen=True)
class _TrialParams:
    """Spec with the axis value folded in."""

    phy: PhyConfig
    mode: str
    symbols_per_bit: int
    channel: str
    snr_original_db: float
    snr_backscatter_db: float
    axis_numeric: float


@dataclass
class BerRecord:
    """One sweep point: rates plus the counts they came from."""

    axis: float
    tag_ber: float
    per: float
    detection_rate: float
    trials: int
    tag_bits: int


def axis_numeric(spec: ExperimentSpec, axis_index: int) -> float:
    """CSV axis column for a sweep point (model letters map to RMS ns)."""
    value = spec.axis_values[axis_index]
    if spec.axis == "model":
        key = str(value).upper()
        if key not in MODEL_RMS_NS:
            raise ValueError(f"unknown channel model {value!r}")
        return MODEL_RMS_NS[key]
    return float(value)


def _resolve(spec: ExperimentSpec, axis_index: int) -> _TrialParams:
    value = spec.axis_values[axis_index]
    psdu_bytes = spec.psdu_bytes
    rate = spec.symbols_per_bit
    channel = spec.channel
    snr_orig = spec.snr_db
    snr_back = spec.snr_db

    if spec.axis == "snr":
        snr_orig = snr_back = float(value)
    elif spec.axis == "distance":
        if spec.distance_mode == "fixed_tx":
            snr_orig = snr_back = path_loss_snr(spec.path_loss, float(value))
        # fixed_rx keeps both links at spec.snr_db whatever the distance
    elif spec.axis == "rate":
        rate = int(value)
    elif spec.axis == "psdu":
        psdu_bytes = int(value)
    elif spec.axis == "model":
        channel = str(value).upper()

    phy = PhyConfig.for_bandwidth(spec.bandwidth_mhz, psdu_bytes)
    return _TrialParams(
        phy, spec.mode, rate, channel, snr_orig, snr_back,
        axis_numeric(spec, axis_index),
    )


def _trial_rng(spec: ExperimentSpec, axis_index: int, trial_index: int):
    ss = np.random.SeedSequence(
        entropy=spec.base_seed, spawn_key=(axis_index, trial_index)
    )
    return np.random.Generator(np.random.PCG64(ss))


def _receive(
    tx: np.ndarray,
    params: _TrialParams,
    ch: ChannelRealization,
    snr_db: float,
    cfo_hz: float,
    rng: np.random.Generator,
    spec: ExperimentSpec,
) -> tuple:
    """One over-the-air leg: channel, CFO, noise, padding, then decode."""
    pad = int(rng.integers(_PAD_MIN, _PAD_MAX))
    phase0 = float(rng.uniform(0.0, 2.0 * np.pi))

    y = apply_channel(tx, ch)
    y = apply_cfo(y, cfo_hz, params.phy.sample_rate_hz, phase0)
    buf = np.concatenate(
        [np.zeros(pad, dtype=complex), y, np.zeros(_PAD_TAIL, dtype=complex)]
    )
    buf = add_awgn(buf, snr_db, rng)

    rx = RxConfig(
        detection_threshold=spec.detection_threshold,
        pilot_tracking=spec.pilot_tracking,
        genie_sync=spec.genie_sync,
        genie_start_sample=pad,
    )
    return buf, pad, rx


def _decode_leg(buf, pad, rx, params, seed, spec) -> tuple:
    dec = decode_packet(buf, rx, params.phy, seed)
    ok = dec.detected
    if ok and not spec.genie_sync:
        tolerance = params.phy.guard_interval_samples // 2
        ok = abs(dec.sync.start_sample - pad) <= tolerance
    return dec, ok


def run_trial(
    spec: ExperimentSpec,
    trial_index: int,
    axis_index: int = 0,
    detail: bool = False,
):
    """One deterministic trial; returns its scored TagDecodeResult.

    With ``detail`` also returns a dict of the intermediate objects
    (packets, decodes, channel draws) for inspection.
    """
    params = _resolve(spec, axis_index)
    rng = _trial_rng(spec, axis_index, trial_index)

    psdu = rng.integers(0, 2, params.phy.psdu_length_bytes * 8).astype(np.uint8)
    seed = int(rng.integers(1, 128))
    ppdu = build_ppdu(psdu, params.phy, seed)

    probe = TagConfig((), spec.mode, params.symbols_per_bit, spec.start_symbol)
    capacity = tag_capacity(ppdu.n_data_symbols, probe)
    n_bits = capacity if spec.n_tag_bits is None else spec.n_tag_bits
    if not 0 < n_bits <= capacity:
        raise ValueError(f"tag payload of {n_bits} bits exceeds capacity {capacity}")
    tag_bits = tuple(int(b) for b in rng.integers(0, 2, n_bits))
    tag_cfg = TagConfig(tag_bits, spec.mode, params.symbols_per_bit, spec.start_symbol)
    tagged = apply_tag(ppdu, build_theta(tag_cfg, ppdu.n_data_symbols))

    cfo_hz = draw_cfo(rng, spec.cfo_ppm) if spec.cfo_ppm > 0 else 0.0
    if params.channel == "ideal":
        ch_orig = ch_back = ideal_channel()
    else:
        pdp = make_pdp(params.channel, params.phy.sample_rate_hz)
        ch_orig = realize_channel(pdp, rng)
        ch_back = (
            ch_orig
            if spec.channel_coupling == "shared"
            else realize_channel(pdp, rng)
        )

    buf_o, pad_o, rx_o = _receive(
        ppdu.samples, params, ch_orig, params.snr_original_db, cfo_hz, rng, spec
    )
    buf_b, pad_b, rx_b = _receive(
        tagged.samples, params, ch_back, params.snr_backscatter_db, cfo_hz, rng, spec
    )
    dec_orig, ok_orig = _decode_leg(buf_o, pad_o, rx_o, params, seed, spec)
    dec_back, ok_back = _decode_leg(buf_b, pad_b, rx_b, params, seed, spec)

    if ok_orig and ok_back:
        gamma = xor_packets(dec_orig, dec_back)
        wcfg = WindowConfig(spec.window_groups, spec.run_fraction)
        result = decode_tag(gamma, tag_cfg, wcfg, rng).score(tag_bits)
        dec_orig.crc_like_ok = bool(np.array_equal(dec_orig.psdu_bits, psdu))
        dec_back.crc_like_ok = bool(np.array_equal(dec_back.psdu_bits, psdu))
        # Packet error means the productive payload failed: the direct copy
        # carries it, the reflected copy's payload is sacrificial (the tag's
        # symbol flips corrupt it by design).
        result.payload_error = not dec_orig.crc_like_ok
    else:
        result = missed_result(tag_bits, spec.mode)

    if not detail:
        return result
    return result, {
        "psdu": psdu,
        "scramble_seed": seed,
        "tag_bits": tag_bits,
        "original": dec_orig,
        "backscatter": dec_back,
        "cfo_hz": cfo_hz,
        "params": params,
        "tx_original": ppdu.samples,
        "tx_backscatter": tagged.samples,
    }


def aggregate(spec: ExperimentSpec, axis_index: int, results) -> BerRecord:
    """Fold trial outcomes into one record; order of ``results`` is free."""
    errors = bits = 0
    misses = packet_errors = count = 0
    for r in results:
        errors += r.errors
        bits += r.total
        misses += int(r.packets_missed)
        packet_errors += int(r.payload_error or r.packets_missed)
        count += 1
    return BerRecord(
        axis=axis_numeric(spec, axis_index),
        tag_ber=errors / bits if bits else 0.0,
        per=packet_errors / count if count else 0.0,
        detection_rate=1.0 - misses / count if count else 0.0,
        trials=count,
        tag_bits=bits,
    )


def run_sweep(spec: ExperimentSpec, max_workers: Optional[int] = None) -> list:
    """All axis points, ``spec.trials`` trials each, sorted by axis value.

    ``max_workers`` > 1 runs trials in a thread pool; results are identical
    to the serial run because trials are independent and aggregation is a
    commutative sum.
    """
    records = []
    for axis_index in range(len(spec.axis_values)):
        indices = range(spec.trials)
        if max_workers is not None and max_workers > 1:
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                results = list(
                    pool.map(lambda t: run_trial(spec, t, axis_index), indices)
                )
        else:
            results = [run_trial(spec, t, axis_index) for t in indices]
        records.append(aggregate(spec, axis_index, results))
    records.sort(key=lambda r: r.axis)
    return records


CSV_HEADER = "axis,tag_ber,per,detection_rate,trials,tag_bits"


def emit_csv(records, path) -> None:
    lines = [CSV_HEADER]
    for r in sorted(records, key=lambda rec: rec.axis):
        lines.append(
            f"{r.axis:.6g},{r.tag_ber:.6g},{r.per:.6g},"
            f"{r.detection_rate:.6g},{r.trials},{r.tag_bits}"
        )
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)
