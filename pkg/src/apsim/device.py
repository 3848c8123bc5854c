"""Class B end-device state machine.

The device sleeps, wakes every beacon period to listen for a fixed
window, and handles whatever the channel offers: silence (sleep again),
a frame it can authenticate from the first 4 post-sync bytes (receive it
all), or a frame that fails that check (drop it at the decision point).
The functions here are pure: they map (state, stimulus) to a new state
plus a list of timed mode segments, and the event loop in sim.py turns
those segments into trace entries and charge accrual.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, replace

from . import auth, phy
from .auth import TokenState, compute_ap_mac, predict_frame_counter, verify_ap_mac
from .phy import ApFrame, Frame, RadioParams

DEFAULT_SHARED_KEY = bytes(range(16))
ANNOUNCE_PAYLOAD_LEN = 8  # the 64-bit token value


class Mode(str, enum.Enum):
    SLEEPING = "sleeping"
    LISTENING = "listening"
    RECEIVING = "receiving"
    VERIFYING_AP = "verifying_ap"
    TRANSMITTING = "transmitting"


class Verdict(str, enum.Enum):
    ACCEPTED = "accepted"
    DISCARDED_EARLY = "discarded_early"
    DISCARDED_AFTER_FULL_RX = "discarded_after_full_rx"


@dataclass(frozen=True)
class DeviceConfig:
    """Operating parameters of the end device.

    ``uplink_airtime_s=None`` derives the uplink airtime from the radio
    parameters instead of the configured constant. ``uplink_offset_s``
    defaults to half an uplink period plus half a beacon period so the
    daily uplink never lands on a listening slot. ``ap_idle_overhead_s``
    is the extra per-window receiver dwell the authentication check costs
    when the window turns out to be empty; the default annualizes to
    ~0.17 Ah/year at the default currents.
    """

    beacon_period_s: float = 15.0
    listen_window_s: float = 0.3
    ap_enabled: bool = False
    radio: RadioParams = RadioParams()
    shared_key: bytes = DEFAULT_SHARED_KEY
    token_retransmit_interval_s: float = 86400.0
    uplink_period_s: float = 86400.0
    uplink_payload_len: int = 20
    uplink_airtime_s: float | None = 5.0
    uplink_offset_s: float | None = None
    announce_on_boot: bool = True
    announce_delay_s: float = 5.0
    ap_idle_overhead_s: float = 0.0253
    ap_counter_tolerance: int = 0  # accept MACs for counter +/- this many frames

    def __post_init__(self) -> None:
        if self.listen_window_s >= self.beacon_period_s:
            raise ValueError("listen_window_s must be shorter than beacon_period_s")
        if self.uplink_period_s < self.beacon_period_s:
            raise ValueError("uplink_period_s must be >= beacon_period_s")
        if len(self.shared_key) != auth.KEY_LEN:
            raise ValueError(f"shared_key must be {auth.KEY_LEN} bytes")
        if not 0 <= self.uplink_payload_len <= phy.MAX_PAYLOAD_LEN:
            raise ValueError("uplink_payload_len out of range")
        if self.ap_idle_overhead_s < 0 or self.announce_delay_s < 0:
            raise ValueError("durations must be >= 0")

    @property
    def effective_uplink_airtime_s(self) -> float:
        if self.uplink_airtime_s is not None:
            return self.uplink_airtime_s
        return phy.time_on_air(self.radio, self.uplink_payload_len)

    @property
    def effective_uplink_offset_s(self) -> float:
        if self.uplink_offset_s is not None:
            return self.uplink_offset_s
        return self.uplink_period_s / 2 + self.beacon_period_s / 2

    @property
    def announce_airtime_s(self) -> float:
        return phy.time_on_air(self.radio, ANNOUNCE_PAYLOAD_LEN)

    @property
    def ap_decision_time_s(self) -> float:
        return phy.time_to_ap_decision(self.radio)


@dataclass(frozen=True)
class ChannelFrame:
    """A transmission as seen on the channel.

    ``mic_valid`` stands in for the full-payload integrity check that a
    non-AP receiver performs after complete reception: frames built by
    the gateway carry True, attacker frames False. The early
    authentication check never looks at it.
    """

    frame: Frame
    start_s: float
    airtime_s: float
    source: str  # "gateway" or "attacker"
    mic_valid: bool

    @property
    def end_s(self) -> float:
        return self.start_s + self.airtime_s


@dataclass(frozen=True)
class DeviceState:
    mode: Mode
    token_state: TokenState
    next_wake_s: float
    last_announce_s: float = float("-inf")

    def expected_counter(self, now: float) -> int:
        return predict_frame_counter(self.token_state, now)

    def expected_mac(self, now: float) -> bytes:
        return compute_ap_mac(self.expected_counter(now), self.token_state.shared_key)

    def frame_start(self, now: float) -> float:
        """Start time of the reception frame containing ``now``."""
        origin = self.token_state.origin_time
        period = self.token_state.frame_duration
        return origin + ((now - origin) // period) * period


@dataclass(frozen=True)
class Segment:
    """One timed slice of device activity, offsets relative to the
    stimulus that produced it."""

    mode: Mode
    duration_s: float


@dataclass(frozen=True)
class WakeOutcome:
    state: DeviceState
    segments: tuple[Segment, ...]
    verdict: Verdict | None
    awake_s: float


def boot(
    config: DeviceConfig,
    boot_token: int | str = "random",
    *,
    rng: random.Random | None = None,
    boot_time: float = 0.0,
) -> DeviceState:
    """Initial device state at ``boot_time``.

    ``boot_token`` is either a provisioned counter value or ``"random"``
    for a manufacturing-style random initialization (draws from ``rng``).
    The token announcement itself is a scheduled uplink, driven by the
    event loop via :func:`announcement_payload`.
    """
    if isinstance(boot_token, str):
        token = auth.generate_boot_token(boot_token, rng=rng)
    else:
        token = auth.generate_boot_token("manufactured", value=boot_token)
    token_state = TokenState(
        token=token,
        shared_key=config.shared_key,
        frame_duration=config.beacon_period_s,
        origin_time=boot_time,
    )
    return DeviceState(
        mode=Mode.SLEEPING,
        token_state=token_state,
        next_wake_s=boot_time,
    )


def announcement_payload(state: DeviceState, now: float) -> tuple[bytes, TokenState]:
    """Uplink body announcing the current counter, plus the frame-aligned
    state a gateway should store for prediction."""
    counter = state.expected_counter(now)
    payload = counter.to_bytes(8, "little")
    gateway_view = TokenState(
        token=counter,
        shared_key=state.token_state.shared_key,
        frame_duration=state.token_state.frame_duration,
        origin_time=state.frame_start(now),
    )
    return payload, gateway_view


def receive_path(
    state: DeviceState, config: DeviceConfig, channel: ChannelFrame, now: float
) -> WakeOutcome:
    """Advance through a reception that locks on at ``now``.

    With AP enabled, the verdict is available once the 4 MAC bytes are
    down (a fixed point in the frame, independent of payload length);
    a failed check ends the reception right there. Without AP, the whole
    frame is received and then the integrity-check model decides.
    """
    decision_abs = channel.start_s + config.ap_decision_time_s
    segments: list[Segment] = []

    if config.ap_enabled:
        mac = channel.frame.ap_mac if isinstance(channel.frame, ApFrame) else b""
        counter = state.expected_counter(now)
        ok = _mac_matches(mac, counter, config)
        segments.append(Segment(Mode.RECEIVING, max(decision_abs - now, 0.0)))
        segments.append(Segment(Mode.VERIFYING_AP, 0.0))
        if not ok:
            verdict = Verdict.DISCARDED_EARLY
        else:
            segments.append(Segment(Mode.RECEIVING, channel.end_s - decision_abs))
            verdict = Verdict.ACCEPTED
    else:
        segments.append(Segment(Mode.RECEIVING, channel.end_s - now))
        verdict = Verdict.ACCEPTED if channel.mic_valid else Verdict.DISCARDED_AFTER_FULL_RX

    awake = sum(seg.duration_s for seg in segments)
    new_state = replace(state, mode=Mode.SLEEPING)
    return WakeOutcome(new_state, tuple(segments), verdict, awake)


def _mac_matches(mac: bytes, counter: int, config: DeviceConfig) -> bool:
    key = config.shared_key
    for delta in range(-config.ap_counter_tolerance, config.ap_counter_tolerance + 1):
        if verify_ap_mac(mac, (counter + delta) % auth.TOKEN_MOD, key):
            return True
    return False


def on_wake(
    state: DeviceState, config: DeviceConfig, now: float, channel: ChannelFrame | None
) -> WakeOutcome:
    """One listening window: silence puts the device back to sleep after
    the window (plus the idle authentication dwell when AP is on); a
    frame whose transmission started inside the window, or recently
    enough that its preamble is still running, hands over to the receive
    path."""
    next_state = replace(state, next_wake_s=now + config.beacon_period_s)

    if channel is not None and _detectable(config, channel, now):
        lock_time = max(now, channel.start_s)
        listen = Segment(Mode.LISTENING, lock_time - now)
        rx = receive_path(next_state, config, channel, lock_time)
        segments = (listen, *rx.segments)
        return WakeOutcome(rx.state, segments, rx.verdict, listen.duration_s + rx.awake_s)

    segments = [Segment(Mode.LISTENING, config.listen_window_s)]
    if config.ap_enabled and config.ap_idle_overhead_s > 0:
        segments.append(Segment(Mode.VERIFYING_AP, config.ap_idle_overhead_s))
    awake = sum(seg.duration_s for seg in segments)
    return WakeOutcome(replace(next_state, mode=Mode.SLEEPING), tuple(segments), None, awake)


def _detectable(config: DeviceConfig, channel: ChannelFrame, wake_time: float) -> bool:
    """A frame can be locked onto if it starts inside the window, or
    started at most one preamble duration before the receiver opened."""
    preamble_s = (config.radio.preamble_symbols + 4.25) * config.radio.symbol_time_s
    window_end = wake_time + config.listen_window_s
    return wake_time - preamble_s <= channel.start_s < window_end


@dataclass(frozen=True)
class Transmission:
    """A device-originated transmission the event loop must execute."""

    kind: str  # "uplink" or "announce"
    payload_len: int
    airtime_s: float


def scheduled_uplink(config: DeviceConfig) -> Transmission:
    """The periodic data uplink."""
    return Transmission("uplink", config.uplink_payload_len, config.effective_uplink_airtime_s)


def announcement_uplink(config: DeviceConfig) -> Transmission:
    return Transmission("announce", ANNOUNCE_PAYLOAD_LEN, config.announce_airtime_s)
