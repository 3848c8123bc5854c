"""Declarative simulation input: one flat key=value file per scenario.

Format: ``section.key = value`` lines, ``#`` comments, blank lines
ignored. docs/scenario-format.md documents every key. Unknown keys are
rejected so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .adversary import AttackerConfig
from .device import DeviceConfig
from .energy import EnergyParams
from .phy import RadioParams


class ScenarioError(ValueError):
    """Scenario file or config is invalid."""


@dataclass(frozen=True)
class Downlink:
    at_s: float
    payload: bytes


@dataclass(frozen=True)
class ScenarioConfig:
    horizon_s: float = 60.0
    rng_seed: int = 0
    sample_rate_hz: float = 10_000.0
    device: DeviceConfig = DeviceConfig()
    energy: EnergyParams = EnergyParams()
    attacker: AttackerConfig = AttackerConfig(strategy="silent")
    downlinks: tuple[Downlink, ...] = ()
    boot_token: int | str = "random"

    def __post_init__(self) -> None:
        if self.horizon_s <= 0:
            raise ScenarioError("horizon_s must be positive")
        if self.sample_rate_hz < 0:
            raise ScenarioError("sample_rate_hz must be >= 0")
        if not 0 <= self.rng_seed < (1 << 64):
            raise ScenarioError("rng_seed must be an unsigned 64-bit integer")
        for dl in self.downlinks:
            if dl.at_s < 0:
                raise ScenarioError("downlink times must be >= 0")


def _parse_bool(raw: str, key: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "on", "yes", "1"):
        return True
    if lowered in ("false", "off", "no", "0"):
        return False
    raise ScenarioError(f"{key}: expected a boolean, got {raw!r}")


def _parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ScenarioError(f"{key}: expected a number, got {raw!r}") from exc


def _parse_int(raw: str, key: str) -> int:
    try:
        return int(raw, 0)
    except ValueError as exc:
        raise ScenarioError(f"{key}: expected an integer, got {raw!r}") from exc


def parse_scenario_text(text: str, source: str = "<string>") -> ScenarioConfig:
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ScenarioError(f"{source}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if key in pairs:
            raise ScenarioError(f"{source}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return _build_config(pairs, source)


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    return parse_scenario_text(text, source=str(path))


_TOP_KEYS = {"horizon_s", "seed", "sample_rate_hz"}
_RADIO_KEYS = {
    "spreading_factor",
    "bandwidth_hz",
    "coding_rate",
    "preamble_symbols",
    "low_data_rate_optimize",
    "explicit_header",
}
_DEVICE_KEYS = {
    "beacon_period_s",
    "listen_window_s",
    "ap_enabled",
    "shared_key_hex",
    "token_retransmit_interval_s",
    "uplink_period_s",
    "uplink_payload_bytes",
    "uplink_airtime_s",
    "uplink_offset_s",
    "announce_on_boot",
    "announce_delay_s",
    "ap_idle_overhead_s",
    "boot_token",
}
_ENERGY_KEYS = {
    "battery_capacity_ah",
    "sensor_drain_ah_per_year",
    "rx_current_ma",
    "tx_current_ma",
    "sleep_current_ma",
}
_ATTACKER_KEYS = {
    "strategy",
    "payload_bytes",
    "sync_offset_s",
    "active_from_s",
    "active_to_s",
}


def _build_config(pairs: dict[str, str], source: str) -> ScenarioConfig:
    top: dict[str, object] = {}
    radio: dict[str, object] = {}
    dev: dict[str, object] = {}
    eng: dict[str, object] = {}
    att: dict[str, object] = {}
    downlinks: list[tuple[int, Downlink]] = []
    boot_token: int | str = "random"

    for key, raw in pairs.items():
        if key in _TOP_KEYS:
            if key == "seed":
                top["rng_seed"] = _parse_int(raw, key)
            else:
                top[key] = _parse_float(raw, key)
        elif key.startswith("radio."):
            sub = key[len("radio.") :]
            if sub not in _RADIO_KEYS:
                raise ScenarioError(f"{source}: unknown key {key!r}")
            if sub in ("spreading_factor", "bandwidth_hz", "preamble_symbols"):
                radio[sub] = _parse_int(raw, key)
            elif sub == "coding_rate":
                radio[sub] = raw
            elif sub == "low_data_rate_optimize":
                radio[sub] = None if raw.lower() == "auto" else _parse_bool(raw, key)
            else:
                radio[sub] = _parse_bool(raw, key)
        elif key.startswith("device."):
            sub = key[len("device.") :]
            if sub not in _DEVICE_KEYS:
                raise ScenarioError(f"{source}: unknown key {key!r}")
            if sub == "boot_token":
                boot_token = "random" if raw.lower() == "random" else _parse_int(raw, key)
            elif sub == "shared_key_hex":
                try:
                    dev["shared_key"] = bytes.fromhex(raw)
                except ValueError as exc:
                    raise ScenarioError(f"{key}: invalid hex {raw!r}") from exc
            elif sub in ("ap_enabled", "announce_on_boot"):
                dev[sub] = _parse_bool(raw, key)
            elif sub == "uplink_payload_bytes":
                dev["uplink_payload_len"] = _parse_int(raw, key)
            elif sub in ("uplink_airtime_s", "uplink_offset_s"):
                dev[sub] = None if raw.lower() in ("formula", "auto") else _parse_float(raw, key)
            else:
                dev[sub] = _parse_float(raw, key)
        elif key.startswith("energy."):
            sub = key[len("energy.") :]
            if sub not in _ENERGY_KEYS:
                raise ScenarioError(f"{source}: unknown key {key!r}")
            eng[sub] = _parse_float(raw, key)
        elif key.startswith("attacker."):
            sub = key[len("attacker.") :]
            if sub not in _ATTACKER_KEYS:
                raise ScenarioError(f"{source}: unknown key {key!r}")
            if sub == "strategy":
                att[sub] = _normalize_strategy(raw, source)
            elif sub == "payload_bytes":
                att["payload_len"] = _parse_int(raw, key)
            elif sub == "active_to_s":
                att[sub] = None if raw.lower() == "none" else _parse_float(raw, key)
            else:
                att[sub] = _parse_float(raw, key)
        elif key.startswith("gateway.downlink."):
            ordinal = key[len("gateway.downlink.") :]
            try:
                n = int(ordinal)
            except ValueError as exc:
                raise ScenarioError(f"{source}: unknown key {key!r}") from exc
            parts = raw.split()
            if not 1 <= len(parts) <= 2:
                raise ScenarioError(f"{key}: expected '<time_s> [payload_hex]', got {raw!r}")
            at = _parse_float(parts[0], key)
            payload = bytes.fromhex(parts[1]) if len(parts) == 2 else b""
            downlinks.append((n, Downlink(at, payload)))
        else:
            raise ScenarioError(f"{source}: unknown key {key!r}")

    try:
        radio_params = RadioParams(**radio)  # type: ignore[arg-type]
        device = DeviceConfig(radio=radio_params, **dev)  # type: ignore[arg-type]
        energy = EnergyParams(**eng)  # type: ignore[arg-type]
        attacker = AttackerConfig(**att) if att else AttackerConfig(strategy="silent")
        downlinks.sort(key=lambda item: item[0])
        return ScenarioConfig(
            device=device,
            energy=energy,
            attacker=attacker,
            downlinks=tuple(dl for _, dl in downlinks),
            boot_token=boot_token,
            **top,  # type: ignore[arg-type]
        )
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"{source}: {exc}") from exc


def _normalize_strategy(raw: str, source: str) -> str:
    aliases = {
        "flood": "max_payload_flood",
        "max_payload_flood": "max_payload_flood",
        "forgery": "random_mac_forgery",
        "random_mac_forgery": "random_mac_forgery",
        "silent": "silent",
    }
    try:
        return aliases[raw.lower()]
    except KeyError as exc:
        raise ScenarioError(f"{source}: unknown attacker strategy {raw!r}") from exc
