"""Deterministic discrete-event simulation of one device, one gateway,
and one attacker on a shared virtual clock.

Events are processed in timestamp order; ties break by actor priority
(gateway, then attacker, then device) and finally by insertion order, so
identical configurations replay bit-identically. A frame whose
transmission starts exactly on a wake boundary is on the channel before
the device opens its window, which is how a perfectly synchronized
attacker lands in every window.
"""

from __future__ import annotations

import heapq
import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from . import device as dev
from .adversary import AttackerConfig, AttackSource, BeaconSchedule
from .auth import TokenState, compute_ap_mac, predict_frame_counter
from .device import ChannelFrame, DeviceConfig, Mode, Verdict
from .energy import (
    AnnualDrains,
    EnergyLedger,
    EnergyParams,
    SCENARIOS,
    battery_lifetime_years,
    lifetime_summary,
    overhead_and_mitigation_report,
)
from .phy import ApFrame, LegacyFrame, time_on_air, time_to_ap_decision
from .scenario import ScenarioConfig
from .trace import EventTrace, write_current_csv, write_events_csv

PRIORITY = {"gateway": 0, "attacker": 1, "device": 2}

DEVICE_ID = "dev0"


class UnknownDevice(KeyError):
    """Gateway has no token for the device yet; downlink must wait."""


@dataclass
class GatewayState:
    """Server-side view: one predictable counter per announced device."""

    known_tokens: dict[str, TokenState] = field(default_factory=dict)
    pending_downlinks: deque = field(default_factory=deque)

    def learn_token(self, device_id: str, state: TokenState) -> None:
        self.known_tokens[device_id] = state


def gateway_send_downlink(
    gw: GatewayState,
    device_id: str,
    payload: bytes,
    now: float,
    radio,
    ap_enabled: bool,
) -> ChannelFrame:
    """Build the downlink frame whose transmission starts at ``now``.

    With AP on, the MAC comes from the counter predicted for ``now``; no
    token on file raises :class:`UnknownDevice`.
    """
    header = b"\x00\x00\x00"
    if ap_enabled:
        token_state = gw.known_tokens.get(device_id)
        if token_state is None:
            raise UnknownDevice(device_id)
        counter = predict_frame_counter(token_state, now)
        mac = compute_ap_mac(counter, token_state.shared_key)
        frame = ApFrame(
            preamble_symbols=radio.preamble_symbols,
            ap_mac=mac,
            header=header,
            payload=payload,
        )
    else:
        frame = LegacyFrame(
            preamble_symbols=radio.preamble_symbols, header=header, payload=payload
        )
    airtime = time_on_air(radio, len(payload), ap_enabled=ap_enabled)
    return ChannelFrame(frame, start_s=now, airtime_s=airtime, source="gateway", mic_valid=True)


@dataclass
class SimResult:
    config: ScenarioConfig
    trace: EventTrace
    ledger: EnergyLedger
    gateway: GatewayState
    summary: dict[str, float]


class _Engine:
    def __init__(self, cfg: ScenarioConfig) -> None:
        cfg_master = random.Random(cfg.rng_seed)
        self.cfg = cfg
        self.attacker_rng = random.Random(cfg_master.getrandbits(64))
        boot_rng = random.Random(cfg_master.getrandbits(64))

        self.dcfg: DeviceConfig = cfg.device
        self.dstate = dev.boot(self.dcfg, cfg.boot_token, rng=boot_rng, boot_time=0.0)
        self.gateway = GatewayState()
        self.schedule = BeaconSchedule(origin_s=0.0, period_s=self.dcfg.beacon_period_s)
        self.attack_source = AttackSource(
            cfg.attacker, self.schedule, self.dcfg.radio,
            ap_layout=self.dcfg.ap_enabled, rng=self.attacker_rng,
        )

        self.trace = EventTrace()
        self.ledger = EnergyLedger()
        self.mode = Mode.SLEEPING
        self.mode_since = 0.0
        self.busy_until = 0.0
        # transmissions currently on the air, oldest first
        self.active_frames: list[tuple[int, ChannelFrame]] = []
        self.verdicts = {v: 0 for v in Verdict}
        self.accepted_downlinks = 0

        self._heap: list = []
        self._seq = itertools.count()
        self._frame_order = itertools.count()
        self.trace.record_mode(0.0, Mode.SLEEPING)

    # -- plumbing ---------------------------------------------------------

    def push(self, t: float, actor: str, kind: str, payload=None) -> None:
        heapq.heappush(self._heap, (t, PRIORITY[actor], next(self._seq), kind, payload))

    def emit(self, t: float, actor: str, kind: str, detail: str = "") -> None:
        self.trace.log(t, actor, kind, detail)

    def set_mode(self, t: float, mode: Mode) -> None:
        if mode is self.mode:
            return
        self.ledger.accrue(self.mode.value, t - self.mode_since, self.cfg.energy)
        self.mode = mode
        self.mode_since = t
        self.trace.record_mode(t, mode)
        self.emit(t, "device", "mode", mode.value)

    # -- setup ------------------------------------------------------------

    def prime(self) -> None:
        horizon = self.cfg.horizon_s
        self.push(0.0, "device", "wake")
        if self.dcfg.announce_on_boot and self.dcfg.announce_delay_s < horizon:
            self.push(self.dcfg.announce_delay_s, "device", "tx_due", ("announce", None))
        uplink_epoch = self.dcfg.effective_uplink_offset_s
        if uplink_epoch < horizon:
            self.push(uplink_epoch, "device", "tx_due", ("uplink", uplink_epoch))
        for dl in self.cfg.downlinks:
            if dl.at_s < horizon:
                self.push(dl.at_s, "gateway", "downlink_intent", dl.payload)
        self._push_next_attack(self.cfg.attacker.active_from_s)

    def _push_next_attack(self, now: float) -> None:
        ch = self.attack_source.next(now)
        if ch is not None and ch.start_s < self.cfg.horizon_s:
            self.push(ch.start_s, "attacker", "frame_tx", ch)

    # -- event handlers ----------------------------------------------------

    def run(self) -> None:
        self.prime()
        horizon = self.cfg.horizon_s
        while self._heap:
            t, _, _, kind, payload = heapq.heappop(self._heap)
            if t >= horizon:
                break
            getattr(self, "_ev_" + kind)(t, payload)
        # truncate whatever is in flight at the horizon
        self.ledger.accrue(self.mode.value, horizon - self.mode_since, self.cfg.energy)
        self.ledger.horizon_s = horizon
        self.trace.horizon_s = horizon

    def _ev_wake(self, t: float, _payload) -> None:
        self.push(t + self.dcfg.beacon_period_s, "device", "wake")
        if self.mode is not Mode.SLEEPING:
            self.emit(t, "device", "wake_skipped", self.mode.value)
            return
        self.emit(t, "device", "wake")
        self.set_mode(t, Mode.LISTENING)
        idle_tail = self.dcfg.ap_idle_overhead_s if self.dcfg.ap_enabled else 0.0
        self.busy_until = t + self.dcfg.listen_window_s + idle_tail
        ch = self._lockable_frame(t)
        if ch is not None:
            for _, other in self.active_frames:
                if other is not ch and dev._detectable(self.dcfg, other, t):
                    self.emit(t, "device", "frame_missed", f"busy src={other.source}")
            self._begin_reception(t, ch)
            return
        self.push(t + self.dcfg.listen_window_s, "device", "window_close", t)

    def _lockable_frame(self, t: float) -> ChannelFrame | None:
        """Frame the receiver locks onto at ``t``: the earliest-started
        detectable transmission, gateway beating attacker on exact ties."""
        self.active_frames = [(o, c) for o, c in self.active_frames if c.end_s > t]
        candidates = [
            (c.start_s, PRIORITY[c.source], o, c)
            for o, c in self.active_frames
            if dev._detectable(self.dcfg, c, t)
        ]
        if not candidates:
            return None
        return min(candidates)[3]

    def _ev_window_close(self, t: float, _wake_time) -> None:
        if self.mode is not Mode.LISTENING:
            return  # a reception or transmission took over this window
        if self.dcfg.ap_enabled and self.dcfg.ap_idle_overhead_s > 0:
            self.set_mode(t, Mode.VERIFYING_AP)
            self.push(t + self.dcfg.ap_idle_overhead_s, "device", "idle_verify_done", None)
            return
        self.emit(t, "device", "window_silent")
        self.set_mode(t, Mode.SLEEPING)

    def _ev_idle_verify_done(self, t: float, _payload) -> None:
        if self.mode is not Mode.VERIFYING_AP:
            return
        self.emit(t, "device", "window_silent")
        self.set_mode(t, Mode.SLEEPING)

    def _ev_frame_tx(self, t: float, ch: ChannelFrame) -> None:
        if ch.source == "attacker":
            self._push_next_attack(ch.start_s + self.schedule.period_s)
        self.active_frames = [(o, c) for o, c in self.active_frames if c.end_s > t]
        self.active_frames.append((next(self._frame_order), ch))
        self.emit(
            t, ch.source, "frame_tx",
            f"payload={len(ch.frame.payload)}B toa={ch.airtime_s:.6f}s",
        )
        if self.mode is Mode.LISTENING:
            self._begin_reception(t, ch)
        elif self.mode in (Mode.RECEIVING, Mode.TRANSMITTING, Mode.VERIFYING_AP):
            self.emit(t, "device", "frame_missed", f"busy src={ch.source}")

    def _begin_reception(self, t: float, ch: ChannelFrame) -> None:
        plan = dev.receive_path(self.dstate, self.dcfg, ch, t)
        self.emit(t, "device", "rx_start", f"src={ch.source}")
        self.set_mode(t, Mode.RECEIVING)
        if self.dcfg.ap_enabled:
            decision = ch.start_s + self.dcfg.ap_decision_time_s
            self.busy_until = decision if plan.verdict is Verdict.DISCARDED_EARLY else ch.end_s
            self.push(decision, "device", "rx_decision", (plan.verdict, ch))
        else:
            self.busy_until = ch.end_s
            self.push(ch.end_s, "device", "rx_done", (plan.verdict, ch))

    def _ev_rx_decision(self, t: float, payload) -> None:
        verdict, ch = payload
        self.set_mode(t, Mode.VERIFYING_AP)
        if verdict is Verdict.DISCARDED_EARLY:
            self.emit(t, "device", "ap_reject", f"src={ch.source}")
            self._finish_frame(t, verdict, ch)
        else:
            self.emit(t, "device", "ap_accept", f"src={ch.source}")
            self.set_mode(t, Mode.RECEIVING)
            self.push(ch.end_s, "device", "rx_done", (verdict, ch))

    def _ev_rx_done(self, t: float, payload) -> None:
        verdict, ch = payload
        self.emit(t, "device", "rx_complete", f"src={ch.source}")
        self._finish_frame(t, verdict, ch)

    def _finish_frame(self, t: float, verdict: Verdict, ch: ChannelFrame) -> None:
        self.verdicts[verdict] += 1
        if verdict is Verdict.ACCEPTED and ch.source == "gateway":
            self.accepted_downlinks += 1
        self.emit(t, "device", "verdict", verdict.value)
        self.set_mode(t, Mode.SLEEPING)
        self.busy_until = t

    def _ev_tx_due(self, t: float, payload) -> None:
        kind, epoch = payload
        if self.mode is not Mode.SLEEPING:
            self.emit(t, "device", "tx_deferred", kind)
            self.push(max(self.busy_until, t), "device", "tx_due", payload)
            return
        tx = dev.scheduled_uplink(self.dcfg) if kind == "uplink" else dev.announcement_uplink(self.dcfg)
        self.set_mode(t, Mode.TRANSMITTING)
        self.emit(t, "device", "tx_start", f"kind={kind} payload={tx.payload_len}B toa={tx.airtime_s:.6f}s")
        self.busy_until = t + tx.airtime_s
        announced: tuple[bytes, TokenState] | None = None
        if kind == "announce":
            announced = dev.announcement_payload(self.dstate, t)
        self.push(t + tx.airtime_s, "device", "tx_done", (kind, announced))
        if kind == "uplink":
            next_epoch = epoch + self.dcfg.uplink_period_s
            if next_epoch < self.cfg.horizon_s:
                self.push(next_epoch, "device", "tx_due", ("uplink", next_epoch))
        else:
            retransmit = t + self.dcfg.token_retransmit_interval_s
            if retransmit < self.cfg.horizon_s:
                self.push(retransmit, "device", "tx_due", ("announce", None))

    def _ev_tx_done(self, t: float, payload) -> None:
        kind, announced = payload
        self.emit(t, "device", "tx_done", kind)
        self.set_mode(t, Mode.SLEEPING)
        self.busy_until = t
        if kind == "announce" and announced is not None:
            _, gateway_view = announced
            self.gateway.learn_token(DEVICE_ID, gateway_view)
            self.emit(t, "gateway", "token_learned", f"counter={gateway_view.token}")
            while self.gateway.pending_downlinks:
                dl_payload = self.gateway.pending_downlinks.popleft()
                self.push(t, "gateway", "downlink_intent", dl_payload)

    def _ev_downlink_intent(self, t: float, payload: bytes) -> None:
        if self.dcfg.ap_enabled and DEVICE_ID not in self.gateway.known_tokens:
            self.gateway.pending_downlinks.append(payload)
            self.emit(t, "gateway", "downlink_deferred", "unknown-device")
            return
        slot = self.schedule.next_slot(t)
        ch = gateway_send_downlink(
            self.gateway, DEVICE_ID, payload, slot, self.dcfg.radio, self.dcfg.ap_enabled
        )
        if slot < self.cfg.horizon_s:
            self.emit(t, "gateway", "downlink_scheduled", f"at={slot:.6f}")
            self.push(slot, "gateway", "frame_tx", ch)

    # -- summary ------------------------------------------------------------

    def summarize(self) -> dict[str, float]:
        annual = self.ledger.annualize()
        total = sum(annual.values())
        intervals = self.trace.awake_intervals()
        summary: dict[str, float] = {}
        for bucket in sorted(annual):
            summary[f"annual_ah.{bucket}"] = annual[bucket]
        summary["annual_ah.total"] = total
        summary["lifetime_years"] = battery_lifetime_years(
            total, self.cfg.energy.battery_capacity_ah
        )
        summary["awake.count"] = float(len(intervals))
        summary["awake.total_s"] = sum(e - s for s, e in intervals)
        summary["awake.mean_s"] = (
            summary["awake.total_s"] / len(intervals) if intervals else 0.0
        )
        for verdict in Verdict:
            summary[f"verdicts.{verdict.value}"] = float(self.verdicts[verdict])
        summary["downlinks.accepted"] = float(self.accepted_downlinks)
        return summary


def run_scenario(cfg: ScenarioConfig) -> SimResult:
    """Execute one scenario; same config and seed give bit-identical
    results."""
    engine = _Engine(cfg)
    engine.run()
    return SimResult(cfg, engine.trace, engine.ledger, engine.gateway, engine.summarize())


# -- reference four-scenario comparison -------------------------------------


def reference_scenario(name: str, seed: int = 1, horizon_s: float = 86400.0) -> ScenarioConfig:
    """The four canonical operating conditions at the default parameters."""
    if name not in SCENARIOS:
        raise ValueError(f"scenario must be one of {SCENARIOS}")
    ap = name.endswith("_ap") and not name.endswith("_no_ap")
    attacked = name.startswith("attack")
    return ScenarioConfig(
        horizon_s=horizon_s,
        rng_seed=seed,
        sample_rate_hz=0.0,
        device=DeviceConfig(ap_enabled=ap),
        attacker=AttackerConfig(strategy="max_payload_flood" if attacked else "silent"),
        boot_token=7,
    )


def simulated_lifetimes(seed: int = 1, horizon_s: float = 86400.0) -> dict[str, float]:
    """Lifetime of each canonical scenario from a simulated horizon,
    annualized."""
    out = {}
    for name in SCENARIOS:
        result = run_scenario(reference_scenario(name, seed, horizon_s))
        out[name] = result.summary["lifetime_years"]
    return out


def lifetime_comparison(seed: int = 1, horizon_s: float = 86400.0) -> dict[str, float]:
    """Closed-form and simulated lifetimes side by side, plus the headline
    ratios, as a flat key->value mapping."""
    analytic = lifetime_summary()
    simulated = simulated_lifetimes(seed, horizon_s)
    ratios = overhead_and_mitigation_report(analytic)
    drains = AnnualDrains()

    out: dict[str, float] = {}
    for name in SCENARIOS:
        out[f"analytic.lifetime_years.{name}"] = analytic[name]
        out[f"simulated.lifetime_years.{name}"] = simulated[name]
    for key, value in ratios.items():
        out[f"ratio.{key}"] = value
    # awake-time view of the same reduction, from the radio timing itself
    radio = DeviceConfig().radio
    toa = time_on_air(radio, 242)
    out["ratio.attack_awake_reduction"] = 1.0 - time_to_ap_decision(radio) / toa
    out["drain.attack_rx_no_ap_ah_per_year"] = drains.attack_rx_no_ap
    out["drain.attack_rx_ap_ah_per_year"] = drains.attack_rx_ap
    return out


# -- report output -----------------------------------------------------------


def report_kv(summary: dict[str, float]) -> str:
    return "\n".join(f"{k}={summary[k]!r}" for k in sorted(summary)) + "\n"


def report_text(result: SimResult) -> str:
    cfg = result.config
    s = result.summary
    lines = [
        "Scenario summary",
        "----------------",
        f"horizon: {cfg.horizon_s:.0f} s   seed: {cfg.rng_seed}",
        f"authenticated preamble: {'on' if cfg.device.ap_enabled else 'off'}   "
        f"attacker: {cfg.attacker.strategy}",
        "",
        f"awake intervals: {int(s['awake.count'])} "
        f"(mean {s['awake.mean_s']:.3f} s, total {s['awake.total_s']:.3f} s)",
        f"frames accepted: {int(s['verdicts.accepted'])}   "
        f"discarded early: {int(s['verdicts.discarded_early'])}   "
        f"discarded after full rx: {int(s['verdicts.discarded_after_full_rx'])}",
        "",
        "annualized drain (Ah/year):",
    ]
    for key in sorted(s):
        if key.startswith("annual_ah."):
            lines.append(f"  {key.removeprefix('annual_ah.'):<14} {s[key]:.4f}")
    lines.append("")
    lines.append(f"expected battery lifetime: {s['lifetime_years']:.2f} years")
    return "\n".join(lines) + "\n"


def export_run(result: SimResult, out_dir: str | Path) -> dict[str, Path]:
    """Write events.csv, current.csv (when sampling is on), report.txt and
    report.kv; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"events": out / "events.csv", "report_txt": out / "report.txt", "report_kv": out / "report.kv"}
    write_events_csv(result.trace, paths["events"])
    if result.config.sample_rate_hz > 0:
        paths["current"] = out / "current.csv"
        write_current_csv(
            result.trace, result.config.energy, result.config.sample_rate_hz, paths["current"]
        )
    paths["report_txt"].write_text(report_text(result))
    paths["report_kv"].write_text(report_kv(result.summary))
    return paths
