"""Fixed-point arithmetic over the two's-complement ring Z_{2^ell}.

Every shared value in a protocol run lives in one ring: unsigned integers
reduced modulo 2^ell, read as signed two's complement (top bit = sign).
Real numbers map in and out through a binary fixed-point encoding with
`frac` fractional bits, so a product of two encoded values carries 2*frac
fractional bits until a truncation gate rescales it.

Scalar operations work on plain Python ints (arbitrary precision, masked on
the way out); bulk operations use uint64 numpy arrays, whose native modular
wraparound matches Z_{2^64} and is masked down for smaller rings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1


class RingOverflowError(ValueError):
    """A real value does not fit the fixed-point range (never clamped)."""


@dataclass(frozen=True)
class RingConfig:
    """Ring geometry shared by all values of one protocol run."""

    ell: int = 64
    frac: int = 16

    def __post_init__(self) -> None:
        if not 8 <= self.ell <= 64:
            raise ValueError(f"ell must be within [8, 64], got {self.ell}")
        if not 0 <= self.frac <= self.ell - 2:
            raise ValueError(f"frac must be within [0, ell-2], got {self.frac}")

    # ------------------------------------------------------------------ ints
    @property
    def modulus(self) -> int:
        return 1 << self.ell

    @property
    def mask(self) -> int:
        return (1 << self.ell) - 1

    @property
    def half(self) -> int:
        """Sign boundary 2^(ell-1); values >= half decode as negative."""
        return 1 << (self.ell - 1)

    def reduce(self, v: int) -> int:
        return v & self.mask

    def signed(self, v: int) -> int:
        v &= self.mask
        return v - self.modulus if v >= self.half else v

    def msb(self, v: int) -> int:
        return (v >> (self.ell - 1)) & 1

    def encode(self, x: float, frac: int | None = None) -> int:
        """Round x to the fixed-point grid.  Out-of-range values raise."""
        f = self.frac if frac is None else frac
        if not abs(x) < float(1 << (self.ell - f - 1)):
            raise RingOverflowError(
                f"|{x}| >= 2^{self.ell - f - 1} does not fit ell={self.ell}, frac={f}"
            )
        v = round(x * (1 << f))
        if not -self.half <= v < self.half:
            raise RingOverflowError(f"{x} rounds outside the signed range")
        return v & self.mask

    def decode(self, v: int, frac: int | None = None) -> float:
        f = self.frac if frac is None else frac
        return self.signed(v) / float(1 << f)

    # ----------------------------------------------------------------- arrays
    def reduce_arr(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.uint64)
        if self.ell == 64:
            return a
        return a & np.uint64(self.mask)

    def signed_arr(self, a: np.ndarray) -> np.ndarray:
        """Two's-complement reading as int64 (exact for ell <= 64)."""
        a = self.reduce_arr(a)
        h = np.uint64(self.half)
        return ((a ^ h) - h).view(np.int64) if self.ell == 64 else (
            a.astype(np.int64) - (np.int64(self.modulus) * (a >= h).astype(np.int64))
        )

    def msb_arr(self, a: np.ndarray) -> np.ndarray:
        return ((self.reduce_arr(a) >> np.uint64(self.ell - 1)) & np.uint64(1)).astype(np.uint8)

    def encode_arr(self, x: np.ndarray, frac: int | None = None) -> np.ndarray:
        f = self.frac if frac is None else frac
        x = np.asarray(x, dtype=np.float64)
        bound = float(1 << (self.ell - f - 1))
        if not np.all(np.abs(x) < bound):
            raise RingOverflowError(f"values exceed 2^{self.ell - f - 1} for frac={f}")
        v = np.rint(x * float(1 << f)).astype(np.int64)
        if np.any(v >= self.half) or np.any(v < -self.half):
            raise RingOverflowError("rounding left the signed range")
        return self.reduce_arr(v.astype(np.uint64))

    def decode_arr(self, a: np.ndarray, frac: int | None = None) -> np.ndarray:
        f = self.frac if frac is None else frac
        return self.signed_arr(a).astype(np.float64) / float(1 << f)


@dataclass(frozen=True)
class RingElement:
    """A single ring value bound to its configuration."""

    value: int
    cfg: RingConfig

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", self.value & self.cfg.mask)

    def _check(self, other: "RingElement") -> None:
        if other.cfg != self.cfg:
            raise ValueError("ring configurations differ")

    def __add__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        return RingElement(self.value + other.value, self.cfg)

    def __sub__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        return RingElement(self.value - other.value, self.cfg)

    def __mul__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        return RingElement(self.value * other.value, self.cfg)

    def __neg__(self) -> "RingElement":
        return RingElement(-self.value, self.cfg)

    @property
    def signed(self) -> int:
        return self.cfg.signed(self.value)

    def decode(self) -> float:
        return self.cfg.decode(self.value)


def encode(x: float, cfg: RingConfig) -> RingElement:
    return RingElement(cfg.encode(x), cfg)


def decode(e: RingElement, cfg: RingConfig | None = None) -> float:
    cfg = cfg or e.cfg
    return cfg.decode(e.value)


def ring_add(a: RingElement, b: RingElement) -> RingElement:
    return a + b


def ring_sub(a: RingElement, b: RingElement) -> RingElement:
    return a - b


def ring_mul(a: RingElement, b: RingElement) -> RingElement:
    return a * b
