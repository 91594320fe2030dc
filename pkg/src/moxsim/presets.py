"""Sweep configuration files and built-in experiment presets.

Config files are flat ``key = value`` text. Keys mirror ExperimentSpec
fields; ``axis_values`` is a comma list, path-loss parameters appear as
``snr_ref_db`` / ``ref_distance_m`` / ``exponent``, and ``n_tag_bits``
accepts ``auto`` to fill each packet to capacity.
"""
from __future__ import annotations

from .channel import PathLossParams
from .harness import ExperimentSpec

_BOOL_KEYS = {"pilot_tracking", "genie_sync"}
_INT_KEYS = {
    "trials",
    "base_seed",
    "bandwidth_mhz",
    "psdu_bytes",
    "symbols_per_bit",
    "start_symbol",
    "window_groups",
}
_FLOAT_KEYS = {"snr_db", "cfo_ppm", "detection_threshold", "run_fraction"}
_STR_KEYS = {"axis", "mode", "channel", "distance_mode", "channel_coupling"}
_PATH_LOSS_KEYS = {"snr_ref_db", "ref_distance_m", "exponent"}


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_axis_values(raw: str, axis: str) -> tuple:
    items = [v.strip() for v in raw.split(",") if v.strip()]
    if axis == "model":
        return tuple(v.upper() for v in items)
    if axis in ("rate", "psdu"):
        return tuple(int(float(v)) for v in items)
    return tuple(float(v) for v in items)


def parse_config(text: str) -> ExperimentSpec:
    """Build an ExperimentSpec from flat key=value text."""
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected key = value")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key in pairs:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = raw

    kwargs = {}
    pl = {}
    axis = pairs.get("axis", "snr").strip()
    for key, raw in pairs.items():
        if key == "axis_values":
            kwargs[key] = _parse_axis_values(raw, axis)
        elif key == "n_tag_bits":
            kwargs[key] = None if raw.lower() == "auto" else int(raw)
        elif key in _BOOL_KEYS:
            kwargs[key] = _parse_bool(raw)
        elif key in _INT_KEYS:
            kwargs[key] = int(raw)
        elif key in _FLOAT_KEYS:
            kwargs[key] = float(raw)
        elif key in _STR_KEYS:
            kwargs[key] = raw
        elif key in _PATH_LOSS_KEYS:
            pl[key] = float(raw)
        else:
            raise ValueError(f"unknown config key {key!r}")
    if pl:
        kwargs["path_loss"] = PathLossParams(**{**_path_loss_defaults(), **pl})
    return ExperimentSpec(**kwargs)


def _path_loss_defaults() -> dict:
    d = PathLossParams()
    return {
        "snr_ref_db": d.snr_ref_db,
        "ref_distance_m": d.ref_distance_m,
        "exponent": d.exponent,
    }


# Built-in experiments. Each sweeps one quantity with everything else at
# the defaults used throughout: 1000-byte packets, 20 MHz, model B fading,
# 2 symbols per tag bit, shared +/-20 ppm oscillator offset, pilot
# tracking off, 200 packets per point.
PRESETS = {
    "snr_bpsk": """
        axis = snr
        axis_values = -5, 0, 5, 10, 15, 20, 25, 30, 35, 40
        mode = bpsk
        symbols_per_bit = 2
        channel = B
    """,
    "snr_dbpsk": """
        axis = snr
        axis_values = -5, 0, 5, 10, 15, 20, 25, 30, 35, 40
        mode = dbpsk
        symbols_per_bit = 2
        channel = B
    """,
    "rate_bpsk": """
        axis = rate
        axis_values = 1, 2, 3, 4, 5, 6, 7, 8
        mode = bpsk
        channel = B
        snr_db = 25
    """,
    "rate_dbpsk": """
        axis = rate
        axis_values = 1, 2, 3, 4, 5, 6, 7, 8
        mode = dbpsk
        channel = B
        snr_db = 25
    """,
    "psdu_length": """
        axis = psdu
        axis_values = 480, 720, 1000, 1480, 2040
        mode = dbpsk
        symbols_per_bit = 2
        channel = B
        snr_db = 25
    """,
    "channel_models": """
        axis = model
        axis_values = A, B, C, D, E, F
        mode = dbpsk
        symbols_per_bit = 2
        snr_db = 25
    """,
    "wide_band": """
        axis = snr
        axis_values = -5, 0, 5, 10, 15, 20, 25, 30, 35, 40
        mode = dbpsk
        symbols_per_bit = 2
        bandwidth_mhz = 40
        channel = B
    """,
    "distance_fixed_tx": """
        axis = distance
        axis_values = 1, 1.45, 2.11, 3.07, 4.47, 6.49, 9.44, 13.7, 20
        distance_mode = fixed_tx
        mode = dbpsk
        symbols_per_bit = 2
        channel = B
        snr_ref_db = 35
        ref_distance_m = 1
    """,
    "distance_fixed_rx": """
        axis = distance
        axis_values = 1, 2, 5, 10, 20
        distance_mode = fixed_rx
        mode = dbpsk
        symbols_per_bit = 2
        channel = B
        snr_db = 35
    """,
    "detection": """
        axis = snr
        axis_values = -10, -7.5, -5, -2.5, 0, 2.5, 5, 10, 15
        mode = dbpsk
        symbols_per_bit = 2
        channel = B
    """,
    "pilot_tracking_on": """
        axis = snr
        axis_values = 10, 15, 20, 25, 30
        mode = dbpsk
        symbols_per_bit = 2
        channel = B
        pilot_tracking = true
    """,
}


def preset_spec(name: str) -> ExperimentSpec:
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ValueError(f"unknown preset {name!r} (have: {known})")
    return parse_config(PRESETS[name])
