"""Multipath, oscillator offset, noise and path-loss models.

Channels are block-fading: one tap realization per packet, drawn from an
exponential power-delay profile whose RMS delay spread matches a named
indoor model. Carrier frequency offset and AWGN are applied separately so
a trial can share one CFO across both over-the-air packets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

# RMS delay spread (ns) per indoor channel model.
MODEL_RMS_NS = {"A": 0.0, "B": 15.0, "C": 30.0, "D": 50.0, "E": 100.0, "F": 150.0}

CARRIER_HZ = 2.4e9
DEFAULT_CFO_PPM = 20.0


@dataclass(frozen=True)
class DelayProfile:
    """Tap delays (seconds) and mean powers (sum 1) of a multipath profile."""

    delays_s: np.ndarray
    powers: np.ndarray
    rms_delay_ns: float
    label: str = ""

    @property
    def n_taps(self) -> int:
        return self.delays_s.size


@dataclass(frozen=True)
class ChannelRealization:
    """One block-fading draw: complex taps at sample spacing, sum |g|^2 = 1."""

    taps: np.ndarray
    label: str = ""

    @property
    def n_taps(self) -> int:
        return self.taps.size


def _discrete_rms_ns(tau_ns: float, delays_ns: np.ndarray) -> float:
    p = np.exp(-delays_ns / tau_ns)
    p = p / p.sum()
    mean = np.dot(p, delays_ns)
    return float(np.sqrt(np.dot(p, delays_ns**2) - mean**2))


def make_pdp(model, sample_rate_hz: float) -> DelayProfile:
    """Exponential power-delay profile with a target RMS delay spread.

    ``model`` is a model letter ('A'..'F') or an RMS delay spread in ns.
    Taps sit on the sample grid, truncated at five times the RMS spread;
    the decay constant is solved so the discrete profile hits the target
    spread exactly.
    """
    if isinstance(model, str):
        key = model.upper()
        if key not in MODEL_RMS_NS:
            raise ValueError(f"unknown channel model {model!r}")
        rms_ns = MODEL_RMS_NS[key]
        label = key
    else:
        rms_ns = float(model)
        if rms_ns < 0:
            raise ValueError("rms delay spread must be nonnegative")
        label = f"{rms_ns:g}ns"

    ts_ns = 1e9 / sample_rate_hz
    if rms_ns == 0.0:
        return DelayProfile(np.zeros(1), np.ones(1), 0.0, label)

    n_taps = int(np.ceil(5.0 * rms_ns / ts_ns)) + 1
    delays_ns = ts_ns * np.arange(n_taps)
    max_rms = _discrete_rms_ns(1e12, delays_ns)  # near-uniform limit
    if rms_ns >= max_rms:
        raise ValueError(
            f"rms delay {rms_ns} ns not reachable with {n_taps} taps "
            f"at {sample_rate_hz / 1e6:g} MHz"
        )
    tau = brentq(
        lambda t: _discrete_rms_ns(t, delays_ns) - rms_ns, 1e-3, 1e12, xtol=1e-9
    )
    powers = np.exp(-delays_ns / tau)
    powers = powers / powers.sum()
    return DelayProfile(delays_ns * 1e-9, powers, rms_ns, label)


def realize_channel(pdp: DelayProfile, rng: np.random.Generator) -> ChannelRealization:
    """Draw Rayleigh taps from the profile, renormalized to unit energy."""
    scale = np.sqrt(pdp.powers / 2.0)
    taps = scale * (rng.standard_normal(pdp.n_taps) + 1j * rng.standard_normal(pdp.n_taps))
    energy = np.sum(np.abs(taps) ** 2)
    if energy == 0.0:
        taps = np.zeros(pdp.n_taps, dtype=complex)
        taps[0] = 1.0
    else:
        taps = taps / np.sqrt(energy)
    return ChannelRealization(taps, pdp.label)


def ideal_channel() -> ChannelRealization:
    """Distortion-free unit channel (no random phase, unlike model A)."""
    return ChannelRealization(np.ones(1, dtype=complex), "ideal")


def apply_channel(samples: np.ndarray, channel: ChannelRealization) -> np.ndarray:
    """Convolve with the taps; output grows by n_taps - 1 samples."""
    return np.convolve(samples, channel.taps)


def apply_cfo(
    samples: np.ndarray, cfo_hz: float, sample_rate_hz: float, phase0: float = 0.0
) -> np.ndarray:
    """Rotate by a constant frequency offset starting at ``phase0`` radians."""
    n = np.arange(samples.size)
    return samples * np.exp(1j * (2.0 * np.pi * cfo_hz * n / sample_rate_hz + phase0))


def draw_cfo(
    rng: np.random.Generator,
    ppm: float = DEFAULT_CFO_PPM,
    carrier_hz: float = CARRIER_HZ,
) -> float:
    """Uniform oscillator offset within +/- ppm of the carrier."""
    max_hz = ppm * 1e-6 * carrier_hz
    return float(rng.uniform(-max_hz, max_hz))


def add_awgn(
    samples: np.ndarray, snr_db: float, rng: np.random.Generator
) -> np.ndarray:
    """Add complex white noise for the given SNR against unit signal power.

    ``snr_db=inf`` returns the samples unchanged (aside from a copy).
    """
    if np.isinf(snr_db):
        return samples.copy()
    noise_var = 10.0 ** (-snr_db / 10.0)
    sigma = np.sqrt(noise_var / 2.0)
    noise = sigma * (
        rng.standard_normal(samples.size) + 1j * rng.standard_normal(samples.size)
    )
    return samples + noise


@dataclass(frozen=True)
class PathLossParams:
    """Free-space-style SNR anchor: snr_ref_db at ref_distance_m."""

    snr_ref_db: float = 35.0
    ref_distance_m: float = 1.0
    exponent: float = 2.0


def path_loss_snr(params: PathLossParams, distance_m: float) -> float:
    """Receive SNR at ``distance_m`` under the inverse-power-law model."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    return params.snr_ref_db - 10.0 * params.exponent * np.log10(
        distance_m / params.ref_distance_m
    )
