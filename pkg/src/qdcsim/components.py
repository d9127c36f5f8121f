"""Event-based processing units for the optical elements of the set-up.

Each unit accepts one messenger and emits, absorbs or detects it. Only the
polarizing beam splitter (and the polarizer built from it) carries state:
the last message seen on each input port plus a two-component estimate of
the arrival rates, ten floats in all.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from qdcsim.messenger import (
    DIAGONAL,
    NORM_TOL,
    Messenger,
    JonesVector,
    PortId,
    RandomStream,
    random_jones,
)

INV_SQRT2 = 1.0 / math.sqrt(2.0)
DEFAULT_GAMMA = 0.99


class MessageNormError(ValueError):
    pass


def _abs2(z: complex) -> float:
    return z.real * z.real + z.imag * z.imag


def _scale(z: complex, a: float) -> complex:
    return complex(z.real * a, z.imag * a)


def _times_i(z: complex) -> complex:
    return complex(-z.imag, z.real)


def _unit(h: complex, v: complex) -> JonesVector:
    inv = 1.0 / math.sqrt(_abs2(h) + _abs2(v))
    return JonesVector(_scale(h, inv), _scale(v, inv))


def check_gamma(gamma: float) -> float:
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"learning parameter must satisfy 0 <= gamma < 1, got {gamma!r}")
    return float(gamma)


def _check_message(msg: JonesVector) -> None:
    if not msg.is_unit(NORM_TOL):
        raise MessageNormError(f"message is not a unit vector (|m|^2 = {msg.norm2!r})")


@dataclass
class AdaptivePbsState:
    """Memory of one adaptive beam-splitter unit.

    ``y0``/``y1`` hold the last message that arrived at input port 0/1 and
    ``x0``/``x1`` estimate the fraction of messengers arriving at each port.
    """

    y0: JonesVector
    y1: JonesVector
    x0: float
    x1: float

    def stored(self, port: PortId) -> JonesVector:
        return self.y0 if port == PortId.PORT0 else self.y1

    def as_floats(self) -> tuple[float, ...]:
        return (
            self.y0.h.real, self.y0.h.imag, self.y0.v.real, self.y0.v.imag,
            self.y1.h.real, self.y1.h.imag, self.y1.v.real, self.y1.v.imag,
            self.x0, self.x1,
        )

    def copy(self) -> "AdaptivePbsState":
        return AdaptivePbsState(self.y0, self.y1, self.x0, self.x1)


@dataclass(frozen=True)
class Emitted:
    port: PortId
    message: JonesVector


@dataclass(frozen=True)
class Absorbed:
    unit: str = ""


@dataclass(frozen=True)
class Detected:
    detector: int


UnitOutcome = Emitted | Absorbed | Detected


def pbs_init(stream: RandomStream) -> AdaptivePbsState:
    """Randomized initial memory: x0 first, then y0 and y1 (three draws each)."""
    x0 = stream.uniform()
    y0 = random_jones(stream)
    y1 = random_jones(stream)
    return AdaptivePbsState(y0=y0, y1=y1, x0=x0, x1=1.0 - x0)


def pbs_output_amplitudes(state: AdaptivePbsState) -> tuple[complex, complex, complex, complex]:
    """Transmit H, reflect V with a factor i, applied to the stored memory.

    Returns (out0.h, out0.v, out1.h, out1.v) before normalization.
    """
    r0 = math.sqrt(state.x0)
    r1 = math.sqrt(state.x1)
    w0h = _scale(state.y0.h, r0)
    w0v = _scale(state.y0.v, r0)
    w1h = _scale(state.y1.h, r1)
    w1v = _scale(state.y1.v, r1)
    return w0h, _times_i(w1v), w1h, _times_i(w0v)


def pbs_process(
    state: AdaptivePbsState,
    gamma: float,
    in_port: PortId,
    msg: JonesVector,
    stream: RandomStream,
) -> Emitted:
    _check_message(msg)
    in_port = PortId(in_port)
    if in_port == PortId.PORT0:
        state.x0 = gamma * state.x0 + (1.0 - gamma)
        state.x1 = gamma * state.x1
        state.y0 = msg
    else:
        state.x0 = gamma * state.x0
        state.x1 = gamma * state.x1 + (1.0 - gamma)
        state.y1 = msg

    a0h, a0v, a1h, a1v = pbs_output_amplitudes(state)
    p0 = _abs2(a0h) + _abs2(a0v)
    p1 = _abs2(a1h) + _abs2(a1v)
    # p0 + p1 is 1 up to rounding; the ratio keeps a vanishing port unreachable
    if stream.uniform() < p0 / (p0 + p1):
        return Emitted(PortId.PORT0, _unit(a0h, a0v))
    return Emitted(PortId.PORT1, _unit(a1h, a1v))


def hwp_process(theta: float, msg: JonesVector) -> JonesVector:
    c = math.cos(2.0 * theta)
    s = math.sin(2.0 * theta)
    h, v = msg.h, msg.v
    return JonesVector(
        complex(c * h.real + s * v.real, c * h.imag + s * v.imag),
        complex(s * h.real - c * v.real, s * h.imag - c * v.imag),
    )


def rotator_process(alpha: float, msg: JonesVector) -> JonesVector:
    """Preparation plate: maps H to (cos alpha, sin alpha)."""
    c = math.cos(alpha)
    s = math.sin(alpha)
    h, v = msg.h, msg.v
    return JonesVector(
        complex(c * h.real - s * v.real, c * h.imag - s * v.imag),
        complex(s * h.real + c * v.real, s * h.imag + c * v.imag),
    )


def phase_process(phi: float, msg: JonesVector) -> JonesVector:
    c = math.cos(phi)
    s = math.sin(phi)
    h, v = msg.h, msg.v
    return JonesVector(
        complex(h.real * c - h.imag * s, h.real * s + h.imag * c),
        complex(v.real * c - v.imag * s, v.real * s + v.imag * c),
    )


def to_diagonal_basis(msg: JonesVector) -> JonesVector:
    h, v = msg.h, msg.v
    return JonesVector(
        complex((h.real + v.real) * INV_SQRT2, (h.imag + v.imag) * INV_SQRT2),
        complex((h.real - v.real) * INV_SQRT2, (h.imag - v.imag) * INV_SQRT2),
    )


# the diagonal-basis change is its own inverse
from_diagonal_basis = to_diagonal_basis


def polarizer_process(
    state: AdaptivePbsState,
    gamma: float,
    msg: JonesVector,
    stream: RandomStream,
    name: str = "",
) -> Emitted | Absorbed:
    """Adaptive beam splitter in the 45-degree basis; port 1 exits are destroyed."""
    out = pbs_process(state, gamma, PortId.PORT0, to_diagonal_basis(msg), stream)
    if out.port == PortId.PORT0:
        return Emitted(PortId.PORT0, from_diagonal_basis(out.message))
    return Absorbed(name)


@dataclass(frozen=True)
class DetectorCounts:
    n0: int = 0
    n1: int = 0

    def __getitem__(self, detector: int) -> int:
        return (self.n0, self.n1)[detector]

    @property
    def total(self) -> int:
        return self.n0 + self.n1


def detector_process(counts: DetectorCounts, detector: int, msg: JonesVector | None = None) -> DetectorCounts:
    if detector == 0:
        return DetectorCounts(counts.n0 + 1, counts.n1)
    if detector == 1:
        return DetectorCounts(counts.n0, counts.n1 + 1)
    raise ValueError(f"unknown detector {detector!r}")


def source_emit(source: str = "SRC") -> Messenger:
    """A fresh messenger carrying linear polarization at 45 degrees."""
    return Messenger(DIAGONAL, (source, PortId.PORT0))
