"""Physical-layer simulator for tag backscatter riding on 802.11n OFDM.

A WiFi transmitter sends a single-stream BPSK-subcarrier packet; a passive
tag flips its reflection phase once per OFDM symbol; a receiver decodes the
direct and reflected copies separately and XORs the two decoded bit streams
to read the tag. This package generates the packets, models the tag and
the channel, implements the receive chain (with pilot phase tracking as an
explicit toggle) and runs Monte-Carlo sweeps of tag BER, packet error rate
and detection rate.
"""
from .channel import (
    ChannelRealization,
    DelayProfile,
    MODEL_RMS_NS,
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
from .harness import (
    BerRecord,
    ExperimentSpec,
    aggregate,
    emit_csv,
    run_sweep,
    run_trial,
)
from .phy import (
    CodedSymbolGrid,
    PhyConfig,
    Ppdu,
    build_ppdu,
    build_preamble,
    conv_encode,
    deinterleave_symbol,
    interleave_symbol,
    scramble,
    scrambler_sequence,
)
from .presets import PRESETS, parse_config, preset_spec
from .receiver import (
    DecodedPacket,
    RxConfig,
    SyncResult,
    decode_packet,
    demod_equalize,
    detect_packet,
    estimate_cfo,
    viterbi_decode,
)
from .tag import (
    TagCodebook,
    TagConfig,
    ThetaVector,
    apply_tag,
    build_theta,
    codebook_lookup,
    encode_tag_phases,
    tag_capacity,
)
from .tagdecode import (
    AMBIGUOUS,
    ONE,
    ZERO,
    GammaStream,
    TagDecodeResult,
    WindowConfig,
    decide_tag_bits,
    decode_tag,
    missed_result,
    tag_ber,
    window_classify,
    xor_packets,
)
from .trace import read_trace, write_trace

__version__ = "0.1.0"
