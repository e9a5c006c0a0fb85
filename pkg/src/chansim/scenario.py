"""Scenario configuration files: INI-style documents with [environment],
[tx_array], [rx_array], and [simulation] sections.

Distance-like values (volume side, spacing, receiver distance, element size)
are interpreted in wavelengths when ``unit = lambda`` (the default) and in
metres when ``unit = m``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import (
    ArrayGeometry,
    CavityEnvironment,
    build_linear_array,
    build_planar_array,
    check_min_scatterer,
)


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the key or line."""


_AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}

DEFAULTS = {
    "environment": {
        "unit": "lambda",
        "volume_side": "400",
        "quality_factor": "1.6e7",
        "field_scale": "1.0",
    },
    "tx_array": {
        "layout": "planar",
        "nx": "6",
        "ny": "6",
        "count": "36",
        "spacing": "0.4",
        "axis": "x",
        "element_size": "0.2,0.2",
    },
    "rx_array": {
        "layout": "planar",
        "nx": "4",
        "ny": "4",
        "count": "16",
        "spacing": "0.4",
        "axis": "x",
        "element_size": "0.2,0.2",
        "distance": "10",
    },
    "simulation": {
        "seed": "12345",
        "n_trials": "2000",
        "sigma2": "3.0",
        "envelope": "real",
        "strict_spacing": "false",
        "n_waves": "2000",
        "impedance_tx_file": "",
        "impedance_rx_file": "",
    },
}

_REQUIRED = {("environment", "frequency_hz")}
_KNOWN = {sec: set(keys) for sec, keys in DEFAULTS.items()}
_KNOWN["environment"].add("frequency_hz")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Fully resolved scenario: environment, panels, and simulation knobs."""

    env: CavityEnvironment
    tx: ArrayGeometry
    rx: ArrayGeometry
    distance: float
    seed: int
    n_trials: int
    sigma2: float
    envelope: str
    strict_spacing: bool
    n_waves: int
    impedance_tx_file: str
    impedance_rx_file: str
    resolved: dict = field(default_factory=dict)


def _merge(path, overrides: dict[str, str] | None) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not read:
        raise ConfigError(f"{path}: cannot read configuration file")

    merged: dict[str, dict[str, str]] = {s: dict(v) for s, v in DEFAULTS.items()}
    for sec in parser.sections():
        if sec not in _KNOWN:
            raise ConfigError(f"{path}: unknown section [{sec}]")
        for key, val in parser.items(sec):
            if key not in _KNOWN[sec]:
                raise ConfigError(f"{path}: unknown key '{key}' in [{sec}]")
            merged[sec][key] = val
    for sec, key in _REQUIRED:
        if key not in merged[sec]:
            raise ConfigError(f"{path}: missing required key '{key}' in [{sec}]")

    for item in overrides or {}:
        val = (overrides or {})[item]
        if "." not in item:
            raise ConfigError(f"override '{item}' must look like section.key")
        sec, key = item.split(".", 1)
        if sec not in _KNOWN or key not in _KNOWN[sec]:
            raise ConfigError(f"override names unknown key '{item}'")
        merged[sec][key] = val
    return merged


def _as_float(merged, sec, key) -> float:
    try:
        return float(merged[sec][key])
    except ValueError:
        raise ConfigError(f"key '{key}' in [{sec}] is not a number: "
                          f"{merged[sec][key]!r}") from None


def _as_int(merged, sec, key) -> int:
    try:
        return int(float(merged[sec][key]))
    except ValueError:
        raise ConfigError(f"key '{key}' in [{sec}] is not an integer: "
                          f"{merged[sec][key]!r}") from None


def _as_bool(merged, sec, key) -> bool:
    val = merged[sec][key].strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"key '{key}' in [{sec}] is not a boolean: {val!r}")


def _build_array(merged, sec, unit_scale, origin=(0.0, 0.0, 0.0)) -> ArrayGeometry:
    layout = merged[sec]["layout"].strip().lower()
    spacing = _as_float(merged, sec, "spacing") * unit_scale
    size_raw = merged[sec]["element_size"].split(",")
    if len(size_raw) != 2:
        raise ConfigError(f"element_size in [{sec}] must be 'sx,sy'")
    element_size = tuple(float(v) * unit_scale for v in size_raw)
    if layout == "linear":
        count = _as_int(merged, sec, "count")
        axis = merged[sec]["axis"].strip().lower()
        if axis not in _AXES:
            raise ConfigError(f"axis in [{sec}] must be x, y, or z")
        return build_linear_array(count, spacing, _AXES[axis], origin, element_size)
    if layout == "planar":
        nx, ny = _as_int(merged, sec, "nx"), _as_int(merged, sec, "ny")
        return build_planar_array(nx, ny, spacing, origin, (0.0, 0.0, 1.0),
                                  element_size)
    raise ConfigError(f"layout in [{sec}] must be 'linear' or 'planar'")


def load_scenario(path, overrides: dict[str, str] | None = None) -> Scenario:
    """Parse, validate, and resolve a scenario configuration file."""
    merged = _merge(path, overrides)

    frequency = _as_float(merged, "environment", "frequency_hz")
    if frequency <= 0:
        raise ConfigError("frequency_hz must be positive")
    unit = merged["environment"]["unit"].strip().lower()
    if unit not in ("lambda", "m"):
        raise ConfigError("unit must be 'lambda' or 'm'")
    wavelength = 299_792_458.0 / frequency
    unit_scale = wavelength if unit == "lambda" else 1.0

    side = _as_float(merged, "environment", "volume_side") * unit_scale
    env = CavityEnvironment(
        frequency=frequency,
        volume=side**3,
        quality_factor=_as_float(merged, "environment", "quality_factor"),
        field_scale=_as_float(merged, "environment", "field_scale"),
    )

    tx = _build_array(merged, "tx_array", unit_scale)
    distance = _as_float(merged, "rx_array", "distance") * unit_scale
    rx = _build_array(merged, "rx_array", unit_scale).translated((0.0, 0.0, distance))

    envelope = merged["simulation"]["envelope"].strip().lower()
    if envelope not in ("real", "complex"):
        raise ConfigError("envelope must be 'real' or 'complex'")
    strict = _as_bool(merged, "simulation", "strict_spacing")
    for panel, name in ((tx, "tx_array"), (rx, "rx_array")):
        check_min_scatterer(panel, wavelength, strict=strict)

    resolved = {f"{sec}.{key}": merged[sec][key]
                for sec in sorted(merged) for key in sorted(merged[sec])}
    resolved["derived.wavelength_m"] = repr(wavelength)
    resolved["derived.wavenumber_rad_per_m"] = repr(env.wavenumber)
    resolved["derived.volume_m3"] = repr(env.volume)
    resolved["derived.tx_elements"] = str(len(tx))
    resolved["derived.rx_elements"] = str(len(rx))

    return Scenario(
        env=env, tx=tx, rx=rx, distance=distance,
        seed=_as_int(merged, "simulation", "seed"),
        n_trials=_as_int(merged, "simulation", "n_trials"),
        sigma2=_as_float(merged, "simulation", "sigma2"),
        envelope=envelope,
        strict_spacing=strict,
        n_waves=_as_int(merged, "simulation", "n_waves"),
        impedance_tx_file=merged["simulation"]["impedance_tx_file"].strip(),
        impedance_rx_file=merged["simulation"]["impedance_rx_file"].strip(),
        resolved=resolved,
    )


def validate_config(path, overrides: dict[str, str] | None = None) -> dict[str, str]:
    """Resolve a configuration and return the normalized parameter report.

    The report maps 'section.key' to the resolved value (defaults included)
    plus derived quantities; minimum-scatterer violations surface as warnings
    (or errors under strict_spacing) during resolution.
    """
    return dict(load_scenario(path, overrides).resolved)
