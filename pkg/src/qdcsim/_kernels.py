"""Array form of the event loop, compiled with numba when available.

Set ``QDCSIM_DISABLE_NUMBA=1`` to run the very same functions as plain
Python over numpy arrays. Both paths are always importable as
``run_events_py`` and ``run_events_jit`` (the latter is ``None`` without
numba); ``run_events`` is whichever the flag selects.

Layout of the compiled network (``U`` units):

* ``kind[U]``, ``detector[U]``: unit kind codes and detector slots
* ``cos_p[U]``, ``sin_p[U]``: precomputed trigonometry of each unit parameter
* ``next_unit[U, 2]``, ``next_port[U, 2]``: edge targets, -1 when unwired
* ``memory[U, 10]``: y0.h, y0.v, y1.h, y1.v as (re, im) pairs, then x0, x1
* ``rng[U]``: SplitMix64 counters of the adaptive units
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from qdcsim.components import AdaptivePbsState, DetectorCounts
from qdcsim.messenger import INV_2_53, JonesVector
from qdcsim.network import (
    NetworkState,
    NetworkTopology,
    RunTally,
    TopologyError,
    UnitKind,
    WiringCycleError,
)

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and not _flag("QDCSIM_DISABLE_NUMBA")

K_SOURCE = int(UnitKind.SOURCE)
K_PBS = int(UnitKind.PBS)
K_HWP = int(UnitKind.HWP)
K_ROTATOR = int(UnitKind.ROTATOR)
K_PHASE = int(UnitKind.PHASE)
K_POLARIZER = int(UnitKind.POLARIZER)
K_DETECTOR = int(UnitKind.DETECTOR)
K_DUMP = int(UnitKind.DUMP)

STATUS_OK = 0
STATUS_NO_EDGE = 1
STATUS_HOP_LIMIT = 2
STATUS_BAD_UNIT = 3

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
SH30 = np.uint64(30)
SH27 = np.uint64(27)
SH31 = np.uint64(31)
SH11 = np.uint64(11)
INV_SQRT2 = 1.0 / math.sqrt(2.0)


def _build(jit):
    """Assemble the event loop with every helper passed through ``jit``."""

    def _uniform(rng, u):
        s = rng[u] + GOLDEN
        rng[u] = s
        z = (s ^ (s >> SH30)) * MIX1
        z = (z ^ (z >> SH27)) * MIX2
        z = z ^ (z >> SH31)
        return float(z >> SH11) * INV_2_53

    uniform = jit(_uniform)

    def _pbs_step(mem, rng, u, gamma, port, msg):
        """Adaptive beam splitter update and emission; ``msg`` is overwritten.

        Returns the output port.
        """
        if port == 0:
            mem[u, 8] = gamma * mem[u, 8] + (1.0 - gamma)
            mem[u, 9] = gamma * mem[u, 9]
            mem[u, 0] = msg[0]
            mem[u, 1] = msg[1]
            mem[u, 2] = msg[2]
            mem[u, 3] = msg[3]
        else:
            mem[u, 8] = gamma * mem[u, 8]
            mem[u, 9] = gamma * mem[u, 9] + (1.0 - gamma)
            mem[u, 4] = msg[0]
            mem[u, 5] = msg[1]
            mem[u, 6] = msg[2]
            mem[u, 7] = msg[3]
        r0 = math.sqrt(mem[u, 8])
        r1 = math.sqrt(mem[u, 9])
        # out0 = (y0.h, i y1.v), out1 = (y1.h, i y0.v), weighted by sqrt(x)
        a0h_re = mem[u, 0] * r0
        a0h_im = mem[u, 1] * r0
        a0v_re = -(mem[u, 7] * r1)
        a0v_im = mem[u, 6] * r1
        a1h_re = mem[u, 4] * r1
        a1h_im = mem[u, 5] * r1
        a1v_re = -(mem[u, 3] * r0)
        a1v_im = mem[u, 2] * r0
        p0 = (a0h_re * a0h_re + a0h_im * a0h_im) + (a0v_re * a0v_re + a0v_im * a0v_im)
        p1 = (a1h_re * a1h_re + a1h_im * a1h_im) + (a1v_re * a1v_re + a1v_im * a1v_im)
        if uniform(rng, u) < p0 / (p0 + p1):
            inv = 1.0 / math.sqrt(p0)
            msg[0] = a0h_re * inv
            msg[1] = a0h_im * inv
            msg[2] = a0v_re * inv
            msg[3] = a0v_im * inv
            return 0
        inv = 1.0 / math.sqrt(p1)
        msg[0] = a1h_re * inv
        msg[1] = a1h_im * inv
        msg[2] = a1v_re * inv
        msg[3] = a1v_im * inv
        return 1

    pbs_step = jit(_pbs_step)

    def _run_events(kind, detector, cos_p, sin_p, next_unit, next_port, mem, rng,
                    source, gamma, n, hop_limit, discard, tally):
        """Run ``n`` messengers; ``tally`` gets (n0, n1, absorbed, lost).

        Returns (status, unit index where a failure occurred).
        """
        msg = np.empty(4)
        tmp = np.empty(4)
        for event in range(n):
            msg[0] = INV_SQRT2
            msg[1] = 0.0
            msg[2] = INV_SQRT2
            msg[3] = 0.0
            u = next_unit[source, 0]
            port = next_port[source, 0]
            if u < 0:
                return STATUS_NO_EDGE, source
            slot = -1
            hops = 0
            while True:
                if hops == hop_limit:
                    return STATUS_HOP_LIMIT, u
                hops += 1
                k = kind[u]
                out = 0
                if k == K_PBS:
                    out = pbs_step(mem, rng, u, gamma, port, msg)
                elif k == K_HWP:
                    c = cos_p[u]
                    s = sin_p[u]
                    tmp[0] = c * msg[0] + s * msg[2]
                    tmp[1] = c * msg[1] + s * msg[3]
                    tmp[2] = s * msg[0] - c * msg[2]
                    tmp[3] = s * msg[1] - c * msg[3]
                    msg[:] = tmp
                elif k == K_ROTATOR:
                    c = cos_p[u]
                    s = sin_p[u]
                    tmp[0] = c * msg[0] - s * msg[2]
                    tmp[1] = c * msg[1] - s * msg[3]
                    tmp[2] = s * msg[0] + c * msg[2]
                    tmp[3] = s * msg[1] + c * msg[3]
                    msg[:] = tmp
                elif k == K_PHASE:
                    c = cos_p[u]
                    s = sin_p[u]
                    tmp[0] = msg[0] * c - msg[1] * s
                    tmp[1] = msg[0] * s + msg[1] * c
                    tmp[2] = msg[2] * c - msg[3] * s
                    tmp[3] = msg[2] * s + msg[3] * c
                    msg[:] = tmp
                elif k == K_POLARIZER:
                    tmp[0] = (msg[0] + msg[2]) * INV_SQRT2
                    tmp[1] = (msg[1] + msg[3]) * INV_SQRT2
                    tmp[2] = (msg[0] - msg[2]) * INV_SQRT2
                    tmp[3] = (msg[1] - msg[3]) * INV_SQRT2
                    if pbs_step(mem, rng, u, gamma, 0, tmp) != 0:
                        slot = 2
                        break
                    msg[0] = (tmp[0] + tmp[2]) * INV_SQRT2
                    msg[1] = (tmp[1] + tmp[3]) * INV_SQRT2
                    msg[2] = (tmp[0] - tmp[2]) * INV_SQRT2
                    msg[3] = (tmp[1] - tmp[3]) * INV_SQRT2
                elif k == K_DETECTOR:
                    slot = detector[u]
                    break
                elif k == K_DUMP:
                    slot = 3
                    break
                else:
                    return STATUS_BAD_UNIT, u
                nxt = next_unit[u, out]
                if nxt < 0:
                    return STATUS_NO_EDGE, u
                port = next_port[u, out]
                u = nxt
            if event >= discard:
                tally[slot] += 1
        return STATUS_OK, -1

    return jit(_run_events)


def _identity(func):
    return func


run_events_py = _build(_identity)
if NUMBA_AVAILABLE:
    run_events_jit = _build(numba.njit(nogil=True))
else:  # pragma: no cover
    run_events_jit = None
run_events = run_events_jit if USE_NUMBA else run_events_py


def _run_events_python(*args):
    with np.errstate(over="ignore"):
        return run_events_py(*args)


@dataclass
class CompiledNetwork:
    names: list[str]
    kind: np.ndarray
    detector: np.ndarray
    cos_p: np.ndarray
    sin_p: np.ndarray
    next_unit: np.ndarray
    next_port: np.ndarray
    memory: np.ndarray
    rng: np.ndarray
    source: int
    gamma: float


def _trig(kind: UnitKind, param: float) -> tuple[float, float]:
    # same expressions as the unit functions in qdcsim.components
    if kind == UnitKind.HWP:
        return math.cos(2.0 * param), math.sin(2.0 * param)
    if kind in (UnitKind.ROTATOR, UnitKind.PHASE):
        return math.cos(param), math.sin(param)
    return 0.0, 0.0


def compile_network(topology: NetworkTopology, state: NetworkState) -> CompiledNetwork:
    names = list(topology.units)
    index = {name: i for i, name in enumerate(names)}
    n = len(names)
    kind = np.empty(n, dtype=np.int64)
    detector = np.full(n, -1, dtype=np.int64)
    cos_p = np.zeros(n)
    sin_p = np.zeros(n)
    next_unit = np.full((n, 2), -1, dtype=np.int64)
    next_port = np.full((n, 2), -1, dtype=np.int64)
    memory = np.zeros((n, 10))
    rng = np.zeros(n, dtype=np.uint64)
    for i, name in enumerate(names):
        u = topology.units[name]
        kind[i] = int(u.kind)
        detector[i] = u.detector
        cos_p[i], sin_p[i] = _trig(u.kind, u.param)
        if name in state.memory:
            memory[i] = state.memory[name].as_floats()
            rng[i] = state.streams[name].state
    for (src, sport), (dst, dport) in topology.edges.items():
        if dst not in index:
            raise TopologyError(f"edge {src}:{sport} leads to unknown unit {dst!r}")
        next_unit[index[src], sport] = index[dst]
        next_port[index[src], sport] = dport
    return CompiledNetwork(names, kind, detector, cos_p, sin_p, next_unit, next_port,
                           memory, rng, index[topology.source], state.gamma)


def write_back(compiled: CompiledNetwork, state: NetworkState) -> None:
    for i, name in enumerate(compiled.names):
        if name not in state.memory:
            continue
        m = compiled.memory[i]
        state.memory[name] = AdaptivePbsState(
            y0=JonesVector(complex(m[0], m[1]), complex(m[2], m[3])),
            y1=JonesVector(complex(m[4], m[5]), complex(m[6], m[7])),
            x0=float(m[8]),
            x1=float(m[9]),
        )
        state.streams[name].restore(int(compiled.rng[i]))


def run_compiled(
    compiled: CompiledNetwork,
    n: int,
    hop_limit: int,
    discard: int = 0,
    use_numba: bool | None = None,
) -> RunTally:
    if use_numba is None:
        use_numba = USE_NUMBA
    tally = np.zeros(4, dtype=np.int64)
    args = (compiled.kind, compiled.detector, compiled.cos_p, compiled.sin_p,
            compiled.next_unit, compiled.next_port, compiled.memory, compiled.rng,
            compiled.source, float(compiled.gamma), int(n), int(hop_limit), int(discard), tally)
    if use_numba:
        if run_events_jit is None:
            raise RuntimeError("numba is not installed")
        status, where = run_events_jit(*args)
    else:
        status, where = _run_events_python(*args)
    if status == STATUS_HOP_LIMIT:
        raise WiringCycleError(f"messenger exceeded the hop limit of {hop_limit} near {compiled.names[where]}")
    if status == STATUS_NO_EDGE:
        raise TopologyError(f"no edge leaving {compiled.names[where]}")
    if status == STATUS_BAD_UNIT:
        raise TopologyError(f"unit {compiled.names[where]} cannot receive messengers")
    n0, n1, absorbed, lost = (int(t) for t in tally)
    return RunTally(DetectorCounts(n0, n1), absorbed, lost, n - min(discard, n))
