"""Command-line front end.

Subcommands: ``run`` executes a scenario file and writes the output set
(events.csv, current.csv, report.txt, report.kv); ``table2`` prints the
four-scenario battery-lifetime summary, closed form next to simulation;
``vectors`` emits or checks the frame-MAC test vectors.
"""

from __future__ import annotations

import argparse
import random
import sys
from dataclasses import replace

from .auth import compute_ap_mac
from .energy import SCENARIOS
from .scenario import ScenarioError, load_scenario
from .sim import export_run, lifetime_comparison, run_scenario

_STRATEGY_FLAG = {
    "flood": "max_payload_flood",
    "forgery": "random_mac_forgery",
    "silent": "silent",
}


def default_vector_cases() -> list[tuple[bytes, int]]:
    """Deterministic (key, token) list shared with the checked-in golden
    vector file."""
    rng = random.Random(0x1C0FFEE)
    cases = [
        (bytes(16), 0),
        (bytes(16), 1),
        (bytes(16), (1 << 64) - 1),
        (bytes.fromhex("000102030405060708090a0b0c0d0e0f"), 0),
        (bytes.fromhex("000102030405060708090a0b0c0d0e0f"), 0x0123456789ABCDEF),
        (bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c"), 42),
        (bytes.fromhex("ffffffffffffffffffffffffffffffff"), 1 << 63),
    ]
    for _ in range(25):
        cases.append((rng.randbytes(16), rng.getrandbits(64)))
    return cases


def emit_vectors() -> str:
    lines = ["# AP MAC vectors: key_hex token_hex mac_hex"]
    for key, token in default_vector_cases():
        lines.append(f"{key.hex()} {token:016x} {compute_ap_mac(token, key).hex()}")
    return "\n".join(lines) + "\n"


def check_vectors(path: str) -> list[str]:
    """Recompute every vector in ``path``; returns mismatch descriptions."""
    failures = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key_hex, token_hex, mac_hex = line.split()
            got = compute_ap_mac(int(token_hex, 16), bytes.fromhex(key_hex)).hex()
            if got != mac_hex:
                failures.append(f"{path}:{lineno}: expected {mac_hex}, computed {got}")
    return failures


def _apply_overrides(cfg, args):
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    if args.horizon is not None:
        cfg = replace(cfg, horizon_s=args.horizon)
    if args.sample_rate_hz is not None:
        cfg = replace(cfg, sample_rate_hz=args.sample_rate_hz)
    if args.ap is not None:
        cfg = replace(cfg, device=replace(cfg.device, ap_enabled=args.ap == "on"))
    if args.attack is not None:
        cfg = replace(cfg, attacker=replace(cfg.attacker, strategy=_STRATEGY_FLAG[args.attack]))
    return cfg


def _cmd_run(args) -> int:
    try:
        cfg = _apply_overrides(load_scenario(args.scenario), args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    result = run_scenario(cfg)
    paths = export_run(result, args.out)
    for name in sorted(paths):
        print(f"wrote {paths[name]}")
    print()
    print((paths["report_txt"]).read_text(), end="")
    return 0


def _cmd_table2(args) -> int:
    comparison = lifetime_comparison(seed=args.seed, horizon_s=args.horizon)
    if args.kv:
        for key in sorted(comparison):
            print(f"{key}={comparison[key]!r}")
        return 0
    print("Expected battery lifetime (years)")
    print(f"{'scenario':<16} {'closed form':>12} {'simulated':>12} {'delta':>8}")
    for name in SCENARIOS:
        a = comparison[f"analytic.lifetime_years.{name}"]
        s = comparison[f"simulated.lifetime_years.{name}"]
        print(f"{name:<16} {a:>12.3f} {s:>12.3f} {100 * (s / a - 1):>+7.1f}%")
    print()
    print(f"lifetime overhead of the mechanism (normal operation): "
          f"{100 * comparison['ratio.ap_lifetime_overhead']:.1f}%")
    print(f"attack drain reduction (annual charge): "
          f"{100 * comparison['ratio.attack_drain_reduction']:.1f}%")
    print(f"attack awake-time reduction (per window): "
          f"{100 * comparison['ratio.attack_awake_reduction']:.1f}%")
    print(f"lifetime reduction under attack, unprotected: "
          f"{100 * comparison['ratio.attack_lifetime_reduction_no_ap']:.1f}%")
    print(f"lifetime reduction under attack, protected (vs protected normal): "
          f"{100 * comparison['ratio.attack_lifetime_reduction_ap_vs_ap']:.1f}%")
    print(f"lifetime reduction under attack, protected (vs unprotected normal): "
          f"{100 * comparison['ratio.attack_lifetime_reduction_ap_vs_no_ap']:.1f}%")
    return 0


def _cmd_vectors(args) -> int:
    if args.check:
        try:
            failures = check_vectors(args.check)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        if failures:
            for failure in failures:
                print(failure, file=sys.stderr)
            return 1
        print(f"{args.check}: all vectors match")
        return 0
    text = emit_vectors()
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apsim",
        description="Authenticated-preamble device simulator and lifetime calculator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file and write outputs")
    p_run.add_argument("scenario", help="scenario file (key = value format)")
    p_run.add_argument("--seed", type=int, help="override rng seed")
    p_run.add_argument("--horizon", type=float, help="override horizon (seconds)")
    p_run.add_argument("--ap", choices=["on", "off"], help="override authenticated preamble")
    p_run.add_argument("--attack", choices=sorted(_STRATEGY_FLAG), help="override attacker strategy")
    p_run.add_argument("--out", default="out", help="output directory (default: out)")
    p_run.add_argument("--sample-rate-hz", type=float, dest="sample_rate_hz",
                       help="current-trace sample rate (0 disables current.csv)")
    p_run.set_defaults(func=_cmd_run)

    p_t2 = sub.add_parser(
        "table2", help="four-scenario lifetime summary, closed form vs simulated"
    )
    p_t2.add_argument("--seed", type=int, default=1)
    p_t2.add_argument("--horizon", type=float, default=86400.0,
                      help="simulated horizon per scenario (default: one day)")
    p_t2.add_argument("--kv", action="store_true", help="machine-readable key=value output")
    p_t2.set_defaults(func=_cmd_table2)

    p_vec = sub.add_parser("vectors", help="emit or check frame-MAC test vectors")
    p_vec.add_argument("--check", metavar="FILE", help="verify vectors in FILE")
    p_vec.add_argument("--out", metavar="FILE", help="write emitted vectors to FILE")
    p_vec.set_defaults(func=_cmd_vectors)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
