"""Authenticated-preamble defense for periodically listening LoRa nodes:
frame codec, per-frame token MAC, device/attacker/gateway models, and a
deterministic energy-and-lifetime simulator."""

from .adversary import AttackerConfig, BeaconSchedule, next_attack_frame
from .auth import (
    TokenState,
    compute_ap_mac,
    compute_ap_mac_batch,
    generate_boot_token,
    predict_frame_counter,
    token_announcement_due,
    verify_ap_mac,
)
from .device import ChannelFrame, DeviceConfig, DeviceState, Mode, Verdict, boot, on_wake, receive_path
from .energy import (
    AnnualDrains,
    EnergyLedger,
    EnergyParams,
    battery_lifetime_years,
    lifetime_summary,
    overhead_and_mitigation_report,
)
from .phy import (
    ApFrame,
    CrcMismatch,
    LegacyFrame,
    PayloadTooLong,
    RadioParams,
    TruncatedFrame,
    decode_frame,
    encode_frame,
    time_on_air,
    time_to_ap_decision,
)
from .scenario import ScenarioConfig, ScenarioError, load_scenario, parse_scenario_text
from .sim import (
    GatewayState,
    SimResult,
    UnknownDevice,
    export_run,
    gateway_send_downlink,
    lifetime_comparison,
    run_scenario,
)
from .trace import EventTrace, write_current_csv, write_events_csv

__all__ = [
    "AnnualDrains",
    "ApFrame",
    "AttackerConfig",
    "BeaconSchedule",
    "ChannelFrame",
    "CrcMismatch",
    "DeviceConfig",
    "DeviceState",
    "EnergyLedger",
    "EnergyParams",
    "EventTrace",
    "GatewayState",
    "LegacyFrame",
    "Mode",
    "PayloadTooLong",
    "RadioParams",
    "ScenarioConfig",
    "ScenarioError",
    "SimResult",
    "TokenState",
    "TruncatedFrame",
    "UnknownDevice",
    "Verdict",
    "battery_lifetime_years",
    "boot",
    "compute_ap_mac",
    "compute_ap_mac_batch",
    "decode_frame",
    "encode_frame",
    "export_run",
    "gateway_send_downlink",
    "generate_boot_token",
    "lifetime_comparison",
    "lifetime_summary",
    "load_scenario",
    "next_attack_frame",
    "on_wake",
    "overhead_and_mitigation_report",
    "parse_scenario_text",
    "predict_frame_counter",
    "receive_path",
    "run_scenario",
    "time_on_air",
    "time_to_ap_decision",
    "token_announcement_due",
    "verify_ap_mac",
    "write_current_csv",
    "write_events_csv",
]
