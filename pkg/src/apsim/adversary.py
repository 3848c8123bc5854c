"""Attacker models.

The flooding attacker has sniffed the target's listening schedule and
lands one maximum-length frame in every window (worst case for the
defender: 93% duty cycle, no regulatory restraint). Against an
AP-protected target it forges the 4 MAC bytes at random each time, which
is the strongest move available without the key.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .device import ChannelFrame
from .phy import ApFrame, LegacyFrame, RadioParams, time_on_air

STRATEGIES = ("max_payload_flood", "random_mac_forgery", "silent")


@dataclass(frozen=True)
class AttackerConfig:
    strategy: str = "max_payload_flood"
    payload_len: int = 242
    sync_offset_s: float = 0.0
    active_from_s: float = 0.0
    active_to_s: float | None = None  # None: whole horizon

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if not 0 <= self.payload_len <= 255:
            raise ValueError("payload_len must be in [0, 255]")
        if self.sync_offset_s < 0:
            raise ValueError("sync_offset_s must be >= 0")


@dataclass(frozen=True)
class BeaconSchedule:
    """The target's wake grid, as observed by the attacker's sniffer."""

    origin_s: float
    period_s: float

    def next_slot(self, now: float) -> float:
        if now <= self.origin_s:
            return self.origin_s
        elapsed = now - self.origin_s
        k = int(elapsed // self.period_s)
        slot = self.origin_s + k * self.period_s
        if slot < now:
            slot += self.period_s
        return slot


def build_attack_frame(
    cfg: AttackerConfig, radio: RadioParams, ap_layout: bool, rng: random.Random
) -> ChannelFrame:
    """One malicious frame, timed later by the caller.

    Layout matches the target: AP frames (with a fresh random MAC)
    against an AP receiver, plain frames otherwise. The PHY CRC is valid;
    only the authentication fails.
    """
    header = rng.randbytes(3)
    payload = rng.randbytes(cfg.payload_len)
    if ap_layout:
        frame = ApFrame(
            preamble_symbols=radio.preamble_symbols,
            ap_mac=rng.randbytes(4),
            header=header,
            payload=payload,
        )
    else:
        frame = LegacyFrame(
            preamble_symbols=radio.preamble_symbols, header=header, payload=payload
        )
    airtime = time_on_air(radio, cfg.payload_len, ap_enabled=ap_layout)
    return ChannelFrame(frame, start_s=0.0, airtime_s=airtime, source="attacker", mic_valid=False)


def next_attack_time(cfg: AttackerConfig, schedule: BeaconSchedule, now: float) -> float | None:
    """Start time of the next attack transmission at or after ``now``,
    or None when the strategy is silent or the active interval is over."""
    if cfg.strategy == "silent":
        return None
    t = max(now, cfg.active_from_s)
    slot = schedule.next_slot(t - cfg.sync_offset_s)
    send = slot + cfg.sync_offset_s
    while send < t:
        send += schedule.period_s
    if cfg.active_to_s is not None and send >= cfg.active_to_s:
        return None
    return send


def next_attack_frame(
    cfg: AttackerConfig,
    schedule: BeaconSchedule,
    now: float,
    radio: RadioParams,
    ap_layout: bool,
    rng: random.Random,
) -> ChannelFrame | None:
    """Next frame the attacker will put on the air, stamped with its
    send time."""
    send = next_attack_time(cfg, schedule, now)
    if send is None:
        return None
    frame = build_attack_frame(cfg, radio, ap_layout, rng)
    return ChannelFrame(frame.frame, send, frame.airtime_s, "attacker", mic_valid=False)


class AttackSource:
    """Stream of attack transmissions for one scenario.

    The junk payload is generated once (its content never matters to the
    target); AP-layout frames get a fresh uniformly random MAC on every
    transmission, which avoids re-running the payload CRC 5760 times a
    simulated day."""

    def __init__(
        self,
        cfg: AttackerConfig,
        schedule: BeaconSchedule,
        radio: RadioParams,
        ap_layout: bool,
        rng: random.Random,
    ) -> None:
        self.cfg = cfg
        self.schedule = schedule
        self.ap_layout = ap_layout
        self.rng = rng
        self._base: ChannelFrame | None = None
        if cfg.strategy != "silent":
            self._base = build_attack_frame(cfg, radio, ap_layout, rng)

    def next(self, now: float) -> ChannelFrame | None:
        if self._base is None:
            return None
        send = next_attack_time(self.cfg, self.schedule, now)
        if send is None:
            return None
        frame = self._base.frame
        if self.ap_layout:
            frame = replace(frame, ap_mac=self.rng.randbytes(4))
        return ChannelFrame(frame, send, self._base.airtime_s, "attacker", mic_valid=False)
