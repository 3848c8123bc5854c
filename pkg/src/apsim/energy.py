"""Charge accounting per radio state and battery-lifetime arithmetic.

Two routes to a lifetime figure exist and are cross-checked by the test
suite: the closed-form path in :func:`lifetime_summary` (annual drain
figures composed per scenario) and the simulation path (a ledger filled
by the event loop, then annualized).
"""

from __future__ import annotations

from dataclasses import dataclass, field

HOURS_PER_YEAR = 8760.0  # 365 days
SECONDS_PER_YEAR = 365.0 * 86400.0

SCENARIOS = (
    "normal_no_ap",
    "normal_ap",
    "attack_no_ap",
    "attack_ap",
)


@dataclass(frozen=True)
class EnergyParams:
    """Electrical parameters of the reference node.

    Defaults: 4x 5.8 Ah primary cells, 11.5 mA receive, 18 mA transmit
    (at 7 dBm), sensing electronics worth 2.2 Ah/year, negligible sleep
    current.
    """

    battery_capacity_ah: float = 23.2
    sensor_drain_ah_per_year: float = 2.2
    rx_current_ma: float = 11.5
    tx_current_ma: float = 18.0
    sleep_current_ma: float = 0.0

    def __post_init__(self) -> None:
        if self.battery_capacity_ah <= 0:
            raise ValueError("battery_capacity_ah must be positive")
        for name in ("sensor_drain_ah_per_year", "rx_current_ma", "tx_current_ma", "sleep_current_ma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def current_ma(self, mode: str) -> float:
        """Drain for a device mode; listening/receiving/verifying all run
        the receiver."""
        if mode in ("listening", "receiving", "verifying_ap"):
            return self.rx_current_ma
        if mode == "transmitting":
            return self.tx_current_ma
        if mode == "sleeping":
            return self.sleep_current_ma
        raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class AnnualDrains:
    """Measured annual charge budget of the reference deployment (Ah/year).

    ``attack_rx_no_ap`` is exactly 11.5 mA x 14 s / 15 s x 8760 h; the
    other radio rows come from the same measurement campaign and are kept
    verbatim as the calibration point for the closed-form lifetime path.
    """

    sensor: float = 2.2
    uplink_data: float = 0.025
    downlink_listening: float = 1.983
    ap_overhead: float = 0.17
    attack_rx_no_ap: float = 94.024
    attack_rx_ap: float = 6.354

    def scenario_total(self, scenario: str) -> float:
        """Total annual drain for one of the four operating scenarios.

        Under attack the periodic listening cost is subsumed by the
        per-window reception cost, so the listening row is dropped there.
        """
        base = self.sensor + self.uplink_data
        if scenario == "normal_no_ap":
            return base + self.downlink_listening
        if scenario == "normal_ap":
            return base + self.downlink_listening + self.ap_overhead
        if scenario == "attack_no_ap":
            return base + self.attack_rx_no_ap
        if scenario == "attack_ap":
            return base + self.ap_overhead + self.attack_rx_ap
        raise ValueError(f"unknown scenario {scenario!r}")


class EnergyLedger:
    """Per-mode charge accumulator for one simulation run.

    ``charge_ah`` maps device mode (plus the synthetic ``sensor`` bucket)
    to amp-hours; the total is defined as the sum over buckets, so
    conservation holds exactly at every point.
    """

    def __init__(self) -> None:
        self.charge_ah: dict[str, float] = {}
        self.horizon_s: float = 0.0

    @property
    def total_ah(self) -> float:
        return sum(self.charge_ah.values())

    def accrue(self, mode: str, duration_s: float, params: EnergyParams) -> None:
        """Add ``current(mode) x duration`` to the mode bucket, and the
        wall-clock sensing share alongside it."""
        if duration_s < 0:
            raise ValueError(f"duration must be >= 0, got {duration_s}")
        if duration_s == 0:
            return
        self._add(mode, params.current_ma(mode) * 1e-3 * duration_s / 3600.0)
        self._add("sensor", params.sensor_drain_ah_per_year * duration_s / SECONDS_PER_YEAR)

    def _add(self, bucket: str, amount_ah: float) -> None:
        self.charge_ah[bucket] = self.charge_ah.get(bucket, 0.0) + amount_ah

    def annualize(self) -> dict[str, float]:
        """Scale every bucket to amp-hours per year."""
        if self.horizon_s <= 0:
            raise ValueError("ledger horizon must be positive to annualize")
        scale = SECONDS_PER_YEAR / self.horizon_s
        return {mode: ah * scale for mode, ah in self.charge_ah.items()}

    def annual_total(self) -> float:
        return sum(self.annualize().values())


def battery_lifetime_years(annual_drain_ah: float, capacity_ah: float) -> float:
    """Linear-discharge lifetime: capacity over annual drain."""
    if annual_drain_ah <= 0:
        raise ValueError("annual_drain_ah must be positive")
    return capacity_ah / annual_drain_ah


def lifetime_summary(
    capacity_ah: float = 23.2, drains: AnnualDrains | None = None
) -> dict[str, float]:
    """Closed-form lifetime (years) for all four operating scenarios."""
    drains = drains or AnnualDrains()
    return {
        scenario: battery_lifetime_years(drains.scenario_total(scenario), capacity_ah)
        for scenario in SCENARIOS
    }


def overhead_and_mitigation_report(
    lifetimes: dict[str, float], drains: AnnualDrains | None = None
) -> dict[str, float]:
    """Headline ratios derived from the four scenario lifetimes.

    The attack-drain reduction admits several plausible definitions
    (drain ratio, lifetime-loss ratios, awake-time ratio); all are
    reported so none has to be guessed from a single rounded headline.
    """
    drains = drains or AnnualDrains()
    normal_no_ap = lifetimes["normal_no_ap"]
    normal_ap = lifetimes["normal_ap"]
    attack_no_ap = lifetimes["attack_no_ap"]
    attack_ap = lifetimes["attack_ap"]
    return {
        # cost of the mechanism when nobody attacks
        "ap_lifetime_overhead": 1.0 - normal_ap / normal_no_ap,
        # how much lifetime an attack removes, per protection level
        "attack_lifetime_reduction_no_ap": 1.0 - attack_no_ap / normal_no_ap,
        "attack_lifetime_reduction_ap_vs_ap": 1.0 - attack_ap / normal_ap,
        "attack_lifetime_reduction_ap_vs_no_ap": 1.0 - attack_ap / normal_no_ap,
        # attack energy suppressed by early discard
        "attack_drain_reduction": 1.0 - drains.attack_rx_ap / drains.attack_rx_no_ap,
        # lifetime recovered under attack by enabling the mechanism
        "attack_lifetime_gain_factor": attack_ap / attack_no_ap,
    }
