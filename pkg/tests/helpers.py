"""Shared builders for simulator tests."""

from __future__ import annotations

import random

from apsim.adversary import AttackerConfig
from apsim.device import DeviceConfig
from apsim.phy import RadioParams
from apsim.scenario import Downlink, ScenarioConfig


def trace_scenario(ap: bool, strategy: str, horizon_s: float = 60.0, seed: int = 1) -> ScenarioConfig:
    """Steady-state one-minute window, matching the shipped scenario files."""
    return ScenarioConfig(
        horizon_s=horizon_s,
        rng_seed=seed,
        device=DeviceConfig(ap_enabled=ap, announce_on_boot=False),
        attacker=AttackerConfig(strategy=strategy),
        boot_token=7,
    )


def random_downlink_scenario(rng: random.Random) -> ScenarioConfig:
    """A small randomized scenario with one legitimate downlink.

    AP on, random radio/period/token (token sometimes a few steps below
    the 64-bit wrap), quiet attacker, and a downlink whose target window
    always finishes inside the horizon.
    """
    period = rng.uniform(5.0, 30.0)
    horizon = 8 * period + 20.0
    sf = rng.randrange(7, 13)
    cr = rng.choice(("4/5", "4/6", "4/7", "4/8"))
    token = (1 << 64) - rng.randrange(1, 6) if rng.random() < 0.3 else rng.getrandbits(64)
    downlink_at = rng.uniform(4.0, 6 * period)
    return ScenarioConfig(
        horizon_s=horizon,
        rng_seed=rng.getrandbits(32),
        sample_rate_hz=0.0,
        device=DeviceConfig(
            beacon_period_s=period,
            listen_window_s=rng.uniform(0.05, 0.3),
            ap_enabled=True,
            radio=RadioParams(spreading_factor=sf, coding_rate=cr),
            announce_on_boot=True,
            announce_delay_s=rng.uniform(0.5, 2.0),
            shared_key=rng.randbytes(16),
        ),
        attacker=AttackerConfig(strategy="silent"),
        downlinks=(Downlink(downlink_at, rng.randbytes(rng.randrange(0, 21))),),
        boot_token=token,
    )
