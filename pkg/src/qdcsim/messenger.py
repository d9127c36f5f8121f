"""Value types carried through the network and the seedable random source.

The random source is SplitMix64 (Steele, Lea & Flood 2014): a 64-bit counter
advanced by the golden-ratio increment and passed through a fixed finalizer.
Uniform variates take the top 53 bits of each output, so every stream is a
platform-independent function of its seed. The compiled event loop in
``qdcsim._kernels`` runs the same recurrence on ``uint64`` arrays.
"""
from __future__ import annotations

import cmath
import enum
import math
import zlib
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
INV_2_53 = 1.0 / (1 << 53)

NORM_TOL = 1e-12


class DegenerateAmplitudeError(ValueError):
    pass


class PortId(enum.IntEnum):
    PORT0 = 0
    PORT1 = 1

    @property
    def other(self) -> "PortId":
        return PortId(1 - self.value)


@dataclass(frozen=True)
class JonesVector:
    """Two complex polarization amplitudes (H, V)."""

    h: complex
    v: complex

    @property
    def norm2(self) -> float:
        return abs(self.h) ** 2 + abs(self.v) ** 2

    def is_unit(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm2 - 1.0) <= tol

    def as_array(self) -> np.ndarray:
        return np.array([self.h, self.v], dtype=np.complex128)

    def close_to(self, other: "JonesVector", tol: float = 1e-12, up_to_phase: bool = False) -> bool:
        if up_to_phase:
            overlap = abs(self.h.conjugate() * other.h + self.v.conjugate() * other.v)
            return abs(overlap - 1.0) <= tol
        return abs(self.h - other.h) <= tol and abs(self.v - other.v) <= tol


H = JonesVector(1.0 + 0j, 0j)
V = JonesVector(0j, 1.0 + 0j)
DIAGONAL = JonesVector(complex(1 / math.sqrt(2)), complex(1 / math.sqrt(2)))


def jones_normalize(h: complex, v: complex) -> JonesVector:
    norm = math.sqrt(abs(h) ** 2 + abs(v) ** 2)
    if not norm > 0.0:
        raise DegenerateAmplitudeError("degenerate amplitude")
    return JonesVector(complex(h) / norm, complex(v) / norm)


def random_jones(stream: "RandomStream") -> JonesVector:
    """Random unit vector: |h|^2 uniform on [0, 1), independent uniform phases."""
    weight = stream.uniform()
    phase_h = 2.0 * math.pi * stream.uniform()
    phase_v = 2.0 * math.pi * stream.uniform()
    return JonesVector(
        math.sqrt(weight) * cmath.exp(1j * phase_h),
        math.sqrt(1.0 - weight) * cmath.exp(1j * phase_v),
    )


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 counter; returns ``(new_state, output)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return state, z ^ (z >> 31)


def derive_seed(seed: int, *keys: int | str) -> int:
    """Mix a parent seed with integer or string keys into a child seed.

    Strings are reduced with CRC-32 so the result depends on names, not on
    construction order or Python's per-process hash salt.
    """
    words = [int(seed) & MASK64]
    for key in keys:
        if isinstance(key, str):
            words.append(zlib.crc32(key.encode("utf-8")))
        else:
            words.append(int(key) & MASK64)
    state = np.random.SeedSequence(words).generate_state(1, dtype=np.uint64)[0]
    return int(state)


class RandomStream:
    """Single-owner SplitMix64 stream of uniform variates on [0, 1)."""

    __slots__ = ("seed", "state")

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self.state = self.seed

    def uniform(self) -> float:
        self.state, out = splitmix64_next(self.state)
        return (out >> 11) * INV_2_53

    def child(self, *keys: int | str) -> "RandomStream":
        return RandomStream(derive_seed(self.seed, *keys))

    def snapshot(self) -> int:
        return self.state

    def restore(self, state: int) -> None:
        self.state = int(state) & MASK64

    def copy(self) -> "RandomStream":
        clone = RandomStream(self.seed)
        clone.state = self.state
        return clone

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed:#x}, state={self.state:#x})"


def uniform(stream: RandomStream) -> float:
    return stream.uniform()


@dataclass(frozen=True)
class Messenger:
    message: JonesVector
    location: tuple[str, PortId]
