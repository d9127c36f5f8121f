"""Stationary wave-optics propagation through a topology.

Every unit acts on complex field amplitudes instead of messengers: beam
splitters apply their unitary to both inputs at once, polarizers project onto
the 45-degree axis, detectors and dumps collect intensity. Used to check that
a wiring reproduces the closed-form intensities before any event is simulated.
"""
from __future__ import annotations

import math
from graphlib import TopologicalSorter

import numpy as np

from qdcsim.network import NetworkTopology, UnitKind, check_topology


def hwp_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def rotation_matrix(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s], [s, c]], dtype=complex)


PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)


def propagate(topology: NetworkTopology, source_field=(1 / math.sqrt(2), 1 / math.sqrt(2))) -> dict[str, float]:
    """Intensity collected by every terminal unit (detectors, dumps) and
    removed by every polarizer, for a unit-intensity source."""
    check_topology(topology)
    deps = {name: set() for name in topology.units}
    for (src, _), (dst, _) in topology.edges.items():
        deps[dst].add(src)

    inbox: dict[tuple[str, int], np.ndarray] = {}
    collected: dict[str, float] = {}

    def field_at(name: str, port: int) -> np.ndarray:
        return inbox.get((name, port), np.zeros(2, dtype=complex))

    def send(name: str, port: int, amp: np.ndarray) -> None:
        dst = topology.edges[(name, port)]
        inbox[dst] = inbox.get(dst, np.zeros(2, dtype=complex)) + amp

    for name in TopologicalSorter(deps).static_order():
        u = topology.units[name]
        if u.kind == UnitKind.SOURCE:
            send(name, 0, np.asarray(source_field, dtype=complex))
        elif u.kind == UnitKind.PBS:
            a, b = field_at(name, 0), field_at(name, 1)
            send(name, 0, np.array([a[0], 1j * b[1]]))
            send(name, 1, np.array([b[0], 1j * a[1]]))
        elif u.kind == UnitKind.HWP:
            send(name, 0, hwp_matrix(u.param) @ field_at(name, 0))
        elif u.kind == UnitKind.ROTATOR:
            send(name, 0, rotation_matrix(u.param) @ field_at(name, 0))
        elif u.kind == UnitKind.PHASE:
            send(name, 0, np.exp(1j * u.param) * field_at(name, 0))
        elif u.kind == UnitKind.POLARIZER:
            a = field_at(name, 0)
            kept = PLUS * (PLUS.conj() @ a)
            collected[name] = float(np.vdot(a, a).real - np.vdot(kept, kept).real)
            send(name, 0, kept)
        else:
            a = field_at(name, 0)
            collected[name] = float(np.vdot(a, a).real)
    return collected


def detector_intensities(topology: NetworkTopology) -> tuple[float, float]:
    collected = propagate(topology)
    out = [0.0, 0.0]
    for name, slot in topology.detectors.items():
        out[slot] += collected[name]
    return out[0], out[1]
