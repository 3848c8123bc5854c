"""Timestamped simulation output: event log, mode timeline, current trace.

The current trace is synthesized from the mode timeline as a step
function of the configured per-mode currents, sampled at a fixed rate —
the software analogue of a bench power capture.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .device import Mode
from .energy import EnergyParams


@dataclass(frozen=True)
class TraceEvent:
    t_s: float
    actor: str  # "device", "gateway", "attacker", "sim"
    kind: str
    detail: str = ""


@dataclass
class EventTrace:
    """Ordered event log plus the device's mode step function."""

    events: list[TraceEvent] = field(default_factory=list)
    mode_changes: list[tuple[float, Mode]] = field(default_factory=list)
    horizon_s: float = 0.0

    def log(self, t_s: float, actor: str, kind: str, detail: str = "") -> None:
        if self.events and t_s < self.events[-1].t_s - 1e-12:
            raise ValueError("events must be logged in nondecreasing time order")
        self.events.append(TraceEvent(t_s, actor, kind, detail))

    def record_mode(self, t_s: float, mode: Mode) -> None:
        self.mode_changes.append((t_s, mode))

    def mode_segments(self) -> list[tuple[float, float, Mode]]:
        """(start, end, mode) slices tiling [0, horizon), zero-length
        slices dropped."""
        segs: list[tuple[float, float, Mode]] = []
        for i, (t, mode) in enumerate(self.mode_changes):
            end = self.mode_changes[i + 1][0] if i + 1 < len(self.mode_changes) else self.horizon_s
            end = min(end, self.horizon_s)
            if end > t:
                segs.append((t, end, mode))
        return segs

    def awake_intervals(self) -> list[tuple[float, float]]:
        """Maximal non-sleeping spans of the mode timeline."""
        intervals: list[tuple[float, float]] = []
        for start, end, mode in self.mode_segments():
            if mode is Mode.SLEEPING:
                continue
            if intervals and abs(intervals[-1][1] - start) < 1e-12:
                intervals[-1] = (intervals[-1][0], end)
            else:
                intervals.append((start, end))
        return intervals

    def current_samples(
        self, params: EnergyParams, sample_rate_hz: float
    ) -> tuple[np.ndarray, np.ndarray]:
        """Sampled current draw over [0, horizon).

        Returns (t_s, current_mA); a 60 s horizon at 10 kHz yields
        exactly 600 000 samples.
        """
        if sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        n = int(round(self.horizon_s * sample_rate_hz))
        t = np.arange(n, dtype=np.float64) / sample_rate_hz
        segs = self.mode_segments()
        if not segs:
            return t, np.zeros(n)
        starts = np.array([s for s, _, _ in segs])
        currents = np.array([params.current_ma(m.value) for _, _, m in segs])
        idx = np.searchsorted(starts, t, side="right") - 1
        idx = np.clip(idx, 0, len(segs) - 1)
        return t, currents[idx]


def write_events_csv(trace: EventTrace, path: str | Path) -> None:
    """Event log as ``timestamp_s,actor,event,detail`` rows."""
    lines = ["timestamp_s,actor,event,detail"]
    for ev in trace.events:
        detail = ev.detail.replace(",", ";")
        lines.append(f"{ev.t_s:.6f},{ev.actor},{ev.kind},{detail}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_current_csv(
    trace: EventTrace, params: EnergyParams, sample_rate_hz: float, path: str | Path
) -> int:
    """Current trace as ``timestamp_s,current_mA`` rows; returns the
    sample count."""
    t, current = trace.current_samples(params, sample_rate_hz)
    with open(path, "w") as f:
        f.write("timestamp_s,current_mA\n")
        for ti, ci in zip(t, current):
            f.write(f"{ti:.6f},{ci:.6g}\n")
    return len(t)
