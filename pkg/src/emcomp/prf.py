"""AES-backed pseudorandomness.

Three consumers, one primitive:

* the GGM tree PRG of the comparison-function keys uses fixed-key AES in a
  Matyas-Meyer-Oseas one-way mode, `pi_j(s) = AES_{K_j}(s) ^ s`, so a batch
  of seeds expands with bulk ECB calls (no per-seed key schedule);
* share generation uses a keyed PRF in counter mode, `AES_k(LE128(ctr))`;
* the dealer draws all correlated randomness from a hierarchical
  deterministic generator built on the same PRF, so provisioning is a pure
  function of the session seed.

The four fixed PRG keys are nothing-up-my-sleeve constants (leading hex
digits of pi).  Test vectors for the cipher and the PRF are pinned in the
test suite so both parties, and both kernel backends, derive identical bits.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

PRG_KEYS: tuple[bytes, ...] = (
    bytes.fromhex("243f6a8885a308d313198a2e03707344"),
    bytes.fromhex("a4093822299f31d0082efa98ec4e6c89"),
    bytes.fromhex("452821e638d01377be5466cf34e90c6c"),
    bytes.fromhex("c0ac29b7c97c50dd3f84d5b5b5470917"),
)

_ECB_CACHE: dict[bytes, object] = {}


def aes_ecb(key: bytes, data: bytes) -> bytes:
    """Raw AES-128-ECB over a multiple of 16 bytes (encrypt only)."""
    enc = _ECB_CACHE.get(key)
    if enc is None:
        enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
        _ECB_CACHE[key] = enc
    return enc.update(data)


def mmo_batch(key_index: int, seeds: np.ndarray) -> np.ndarray:
    """pi_j over a (N, 16) uint8 seed batch: AES_{K_j}(s) ^ s."""
    flat = np.ascontiguousarray(seeds, dtype=np.uint8)
    out = np.frombuffer(aes_ecb(PRG_KEYS[key_index], flat.tobytes()), dtype=np.uint8)
    return out.reshape(flat.shape) ^ flat


class SeedReuseError(RuntimeError):
    """A (key, counter) PRF position was consumed twice."""


@dataclass
class PrfSeed:
    """Counter-mode PRF position; each (key, counter) pair is used once."""

    key: bytes
    counter: int = 0
    _watermark: int = field(default=-1, repr=False)

    def take(self, blocks: int = 1) -> int:
        """Reserve `blocks` consecutive counters, enforcing forward-only use."""
        if self.counter <= self._watermark:
            raise SeedReuseError(f"counter {self.counter} already consumed")
        start = self.counter
        self._watermark = start + blocks - 1
        self.counter = start + blocks
        return start


def _counter_blocks(start: int, count: int) -> bytes:
    ctrs = np.arange(start, start + count, dtype=np.uint64)
    blk = np.zeros((count, 16), dtype=np.uint8)
    blk[:, :8] = ctrs.view(np.uint8).reshape(count, 8)
    return blk.tobytes()


def prf_u64(key: bytes, start_counter: int, count: int, ell: int = 64) -> np.ndarray:
    """`count` pseudorandom values, uniform over Z_{2^ell}."""
    blocks = (count + 1) // 2
    raw = aes_ecb(key, _counter_blocks(start_counter, blocks))
    vals = np.frombuffer(raw, dtype="<u8")[:count].copy()
    if ell < 64:
        vals &= np.uint64((1 << ell) - 1)
    return vals


class Drbg:
    """Hierarchical deterministic generator for dealer material.

    Child generators are domain-separated by tag, so the provisioning code
    can hand independent streams to every bundle while staying a pure
    function of the root seed.
    """

    def __init__(self, key: bytes):
        if len(key) != 16:
            raise ValueError("Drbg key must be 16 bytes")
        self.key = key
        self._ctr = 0

    @classmethod
    def from_seed(cls, seed: int) -> "Drbg":
        return cls(hashlib.sha256(b"emcomp-root:" + str(seed).encode()).digest()[:16])

    def child(self, tag: str) -> "Drbg":
        block = hashlib.sha256(tag.encode()).digest()[:16]
        return Drbg(aes_ecb(self.key, block))

    def raw(self, nbytes: int) -> bytes:
        blocks = (nbytes + 15) // 16
        out = aes_ecb(self.key, _counter_blocks(self._ctr, blocks))
        self._ctr += blocks
        return out[:nbytes]

    def u64(self, shape, ell: int = 64) -> np.ndarray:
        count = int(np.prod(shape)) if not np.isscalar(shape) else int(shape)
        blocks = (count + 1) // 2
        raw = aes_ecb(self.key, _counter_blocks(self._ctr, blocks))
        self._ctr += blocks
        vals = np.frombuffer(raw, dtype="<u8")[:count].copy()
        if ell < 64:
            vals &= np.uint64((1 << ell) - 1)
        return vals.reshape(shape)

    def bits(self, shape) -> np.ndarray:
        count = int(np.prod(shape)) if not np.isscalar(shape) else int(shape)
        raw = np.frombuffer(self.raw((count + 7) // 8), dtype=np.uint8)
        return np.unpackbits(raw)[:count].reshape(shape)

    def seeds(self, count: int) -> np.ndarray:
        """(count, 16) uint8 block of fresh 128-bit seeds."""
        return np.frombuffer(self.raw(count * 16), dtype=np.uint8).reshape(count, 16).copy()
