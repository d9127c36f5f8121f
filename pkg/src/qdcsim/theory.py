"""Closed-form detector intensities of the delayed-choice interferometer."""
from __future__ import annotations

import math
from dataclasses import dataclass

CLAMP_TOL = 1e-12


class DarkPointError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class OracleParams:
    alpha: float
    phi: float
    delta0: float = math.pi / 8
    delta1: float = -7 * math.pi / 40

    def __post_init__(self):
        for name in ("alpha", "phi", "delta0", "delta1"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def wheeler_intensities(p: OracleParams) -> tuple[float, float]:
    """Polarizer absent: classical mixture of open and closed interferometer."""
    fringe = math.cos(p.alpha) ** 2 * math.cos(p.phi)
    return (1.0 + fringe) / 2.0, (1.0 - fringe) / 2.0


def _clamp(x: float) -> float:
    if x < 0.0:
        if x < -CLAMP_TOL:
            raise ArithmeticError(f"intensity {x!r} is negative beyond rounding")
        return 0.0
    return x


def quantum_intensities(p: OracleParams) -> tuple[float, float]:
    """45-degree polarizer present; intensities are not normalized."""
    c2 = math.cos(p.alpha) ** 2
    s2a = math.sin(2.0 * p.alpha)
    half = p.phi / 2.0
    cross = math.sqrt(2.0) / 4.0 * s2a
    i0 = 0.25 + 0.25 * c2 * math.cos(p.phi) + cross * math.cos(half) * math.cos(half + p.delta0)
    i1 = 0.25 - 0.25 * c2 * math.cos(p.phi) - cross * math.sin(half) * math.sin(half - p.delta1)
    return _clamp(i0), _clamp(i1)


def normalized_fraction_d1(i0: float, i1: float) -> float:
    total = i0 + i1
    if not total > 0.0:
        raise DarkPointError("dark point: I0 + I1 = 0")
    return i1 / total


def theory_fraction_d1(mode: str, p: OracleParams) -> float:
    if mode == "wheeler":
        return normalized_fraction_d1(*wheeler_intensities(p))
    if mode == "quantum":
        return normalized_fraction_d1(*quantum_intensities(p))
    raise ValueError(f"unknown mode {mode!r}")
