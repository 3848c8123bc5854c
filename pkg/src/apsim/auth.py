"""Token lifecycle and the 4-byte frame MAC.

The receiver and the sender share a 16-byte key and a 64-bit counter that
advances once per reception frame. The per-frame MAC is the last 4 bytes
of one AES-128 block encryption of the counter, so both sides can derive
it before any payload exists, and only a quarter of the ciphertext is
ever exposed on air.
"""

from __future__ import annotations

import hmac
import random
from dataclasses import dataclass

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .phy import AP_MAC_LEN

KEY_LEN = 16
TOKEN_BITS = 64
TOKEN_MOD = 1 << TOKEN_BITS

ApMac = bytes  # always exactly AP_MAC_LEN bytes


class TimeBeforeOrigin(ValueError):
    """Prediction target predates the synchronization point."""


@dataclass(frozen=True)
class TokenState:
    """Shared counter state: value at ``origin_time`` plus the frame period."""

    token: int
    shared_key: bytes
    frame_duration: float
    origin_time: float = 0.0

    def __post_init__(self) -> None:
        if len(self.shared_key) != KEY_LEN:
            raise ValueError(f"shared_key must be {KEY_LEN} bytes")
        if not 0 <= self.token < TOKEN_MOD:
            raise ValueError("token must be an unsigned 64-bit value")
        if self.frame_duration <= 0:
            raise ValueError("frame_duration must be positive")


def _pad_token(token: int) -> bytes:
    """64-bit counter little-endian in bytes 0..7, zeros in 8..15."""
    return token.to_bytes(8, "little") + bytes(8)


_ENCRYPTORS: dict[bytes, object] = {}


def _encrypt_block(key: bytes, block: bytes) -> bytes:
    # ECB is stateless across blocks, so one encryptor context per key can
    # be reused for every call (single-threaded use, as everywhere here).
    enc = _ENCRYPTORS.get(key)
    if enc is None:
        enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
        _ENCRYPTORS[key] = enc
    return enc.update(block)


def compute_ap_mac(token: int, shared_key: bytes) -> ApMac:
    """MAC for one frame: last 4 bytes of AES-128(key, padded counter)."""
    if len(shared_key) != KEY_LEN:
        raise ValueError(f"shared_key must be {KEY_LEN} bytes")
    if not 0 <= token < TOKEN_MOD:
        raise ValueError("token must be an unsigned 64-bit value")
    cipher = _encrypt_block(shared_key, _pad_token(token))
    return cipher[-AP_MAC_LEN:]


def compute_ap_mac_batch(tokens: np.ndarray, shared_key: bytes) -> np.ndarray:
    """MACs for many counters in one AES pass.

    ``tokens`` is a uint64 array; returns a (n, 4) uint8 array. Used for
    bulk analyses (e.g. forgery-rate trials over 10^6 frames) where one
    Python-level AES call per frame would dominate.
    """
    if len(shared_key) != KEY_LEN:
        raise ValueError(f"shared_key must be {KEY_LEN} bytes")
    tokens = np.ascontiguousarray(tokens, dtype="<u8")
    blocks = np.zeros((tokens.size, KEY_LEN), dtype=np.uint8)
    blocks[:, :8] = tokens.view(np.uint8).reshape(-1, 8)
    cipher = _encrypt_block(shared_key, blocks.tobytes())
    out = np.frombuffer(cipher, dtype=np.uint8).reshape(-1, KEY_LEN)
    return out[:, KEY_LEN - AP_MAC_LEN :]


def verify_ap_mac(received: ApMac, token: int, shared_key: bytes) -> bool:
    """True iff ``received`` is the MAC for this counter and key.

    Comparison always covers all 4 bytes (no early exit on first
    mismatch).
    """
    if len(received) != AP_MAC_LEN:
        return False
    return hmac.compare_digest(received, compute_ap_mac(token, shared_key))


def predict_frame_counter(known: TokenState, target_time: float) -> int:
    """Counter value for the frame containing ``target_time``.

    Elapsed time since the synchronization point divided by the frame
    duration, added to the known value; wraps modulo 2^64.
    """
    if target_time < known.origin_time:
        raise TimeBeforeOrigin(
            f"target_time {target_time} predates origin {known.origin_time}"
        )
    elapsed_frames = int((target_time - known.origin_time) // known.frame_duration)
    return (known.token + elapsed_frames) % TOKEN_MOD


def generate_boot_token(seed_mode: str, *, value: int = 0, rng: random.Random | None = None) -> int:
    """Initial 64-bit counter value.

    ``"manufactured"`` returns the provisioned ``value``; ``"random"``
    draws from ``rng`` (a seeded generator keeps simulations
    reproducible; a fresh one is made if none is given).
    """
    if seed_mode == "manufactured":
        if not 0 <= value < TOKEN_MOD:
            raise ValueError("manufactured token must be an unsigned 64-bit value")
        return value
    if seed_mode == "random":
        if rng is None:
            rng = random.Random()
        return rng.getrandbits(TOKEN_BITS)
    raise ValueError(f"seed_mode must be 'random' or 'manufactured', got {seed_mode!r}")


def token_announcement_due(
    now: float, last_sent: float, retransmit_interval: float
) -> bool:
    """True once a full retransmit interval has passed since the last send."""
    if retransmit_interval <= 0:
        raise ValueError("retransmit_interval must be positive")
    return now - last_sent >= retransmit_interval
