"""Directed graph of processing units and the one-messenger-at-a-time event loop.

A topology is a set of named units plus edges ``(unit, out_port) -> (unit,
in_port)``. Runtime memory lives in :class:`NetworkState`, kept apart from the
wiring so one topology can be re-initialized for every sweep point.

Two engines walk messengers through a topology. :func:`run_one` is the
reference loop built on the unit functions in :mod:`qdcsim.components`;
:func:`run_many` by default hands the whole batch to the array kernel in
:mod:`qdcsim._kernels` and writes the final unit memory back. Both consume
the per-unit random streams identically, so they agree event by event.
"""
from __future__ import annotations

import enum
from collections.abc import Callable
from dataclasses import dataclass, field

from qdcsim.components import (
    DEFAULT_GAMMA,
    Absorbed,
    AdaptivePbsState,
    Detected,
    DetectorCounts,
    Emitted,
    check_gamma,
    hwp_process,
    pbs_init,
    pbs_process,
    phase_process,
    polarizer_process,
    rotator_process,
    source_emit,
)
from qdcsim.messenger import PortId, RandomStream

DEFAULT_HOP_LIMIT = 64


class TopologyError(RuntimeError):
    pass


class WiringCycleError(TopologyError):
    pass


class UnitKind(enum.IntEnum):
    SOURCE = 0
    PBS = 1
    HWP = 2
    ROTATOR = 3
    PHASE = 4
    POLARIZER = 5
    DETECTOR = 6
    DUMP = 7

    @property
    def label(self) -> str:
        return self.name.lower()


# (input ports, output ports) per kind
_PORTS = {
    UnitKind.SOURCE: ((), (0,)),
    UnitKind.PBS: ((0, 1), (0, 1)),
    UnitKind.HWP: ((0,), (0,)),
    UnitKind.ROTATOR: ((0,), (0,)),
    UnitKind.PHASE: ((0,), (0,)),
    UnitKind.POLARIZER: ((0,), (0,)),
    UnitKind.DETECTOR: ((0,), ()),
    UnitKind.DUMP: ((0,), ()),
}
ADAPTIVE_KINDS = (UnitKind.PBS, UnitKind.POLARIZER)
TERMINAL_KINDS = (UnitKind.DETECTOR, UnitKind.DUMP)


@dataclass(frozen=True)
class Unit:
    """One processing unit.

    ``param`` is the plate angle (HWP), preparation angle (rotator) or phase
    (shifter); ``detector`` is the count slot of a detector unit.
    """

    name: str
    kind: UnitKind
    param: float = 0.0
    detector: int = -1

    @property
    def inputs(self) -> tuple[int, ...]:
        return _PORTS[self.kind][0]

    @property
    def outputs(self) -> tuple[int, ...]:
        return _PORTS[self.kind][1]


Endpoint = tuple[str, int]


@dataclass
class NetworkTopology:
    units: dict[str, Unit] = field(default_factory=dict)
    edges: dict[Endpoint, Endpoint] = field(default_factory=dict)

    def add(self, name: str, kind: UnitKind, param: float = 0.0, detector: int = -1) -> str:
        if name in self.units:
            raise TopologyError(f"duplicate unit name {name!r}")
        self.units[name] = Unit(name, UnitKind(kind), float(param), int(detector))
        return name

    def connect(self, src: str, src_port: int, dst: str, dst_port: int = 0) -> None:
        key = (src, int(src_port))
        if key in self.edges:
            raise TopologyError(f"output {src}:{src_port} is already wired")
        self.edges[key] = (dst, int(dst_port))

    @property
    def source(self) -> str:
        sources = [u.name for u in self.units.values() if u.kind == UnitKind.SOURCE]
        if len(sources) != 1:
            raise TopologyError(f"expected exactly one source, found {len(sources)}")
        return sources[0]

    @property
    def detectors(self) -> dict[str, int]:
        return {u.name: u.detector for u in self.units.values() if u.kind == UnitKind.DETECTOR}

    def of_kind(self, *kinds: UnitKind) -> list[Unit]:
        return [u for u in self.units.values() if u.kind in kinds]

    def next_hop(self, unit: str, port: int) -> Endpoint:
        try:
            return self.edges[(unit, int(port))]
        except KeyError:
            raise TopologyError(f"no edge from {unit}:{int(port)}") from None

    def to_text(self) -> str:
        return topology_to_text(self)

    @classmethod
    def from_text(cls, text: str) -> "NetworkTopology":
        return topology_from_text(text)


def validate_topology(topology: NetworkTopology) -> list[str]:
    """Wiring problems as human-readable strings; an empty list means ok."""
    errors: list[str] = []
    units = topology.units

    n_sources = sum(u.kind == UnitKind.SOURCE for u in units.values())
    if n_sources != 1:
        errors.append(f"expected exactly one source unit, found {n_sources}")

    for (src, sport), (dst, dport) in topology.edges.items():
        if src not in units:
            errors.append(f"edge from unknown unit {src!r}")
            continue
        if sport not in units[src].outputs:
            errors.append(f"{src} ({units[src].kind.label}) has no output port {sport}")
        if dst not in units:
            errors.append(f"edge {src}:{sport} leads to unknown unit {dst!r}")
        elif dport not in units[dst].inputs:
            errors.append(f"{dst} ({units[dst].kind.label}) has no input port {dport}")

    for u in units.values():
        for port in u.outputs:
            if (u.name, port) not in topology.edges:
                errors.append(f"dangling output port {u.name}:{port}")
        if u.kind == UnitKind.DETECTOR and u.detector not in (0, 1):
            errors.append(f"detector {u.name} has invalid count slot {u.detector}")

    # multiple feeds into one input are allowed only for terminals
    fed: dict[Endpoint, str] = {}
    for (src, sport), dst in topology.edges.items():
        if dst in fed and dst[0] in units and units[dst[0]].kind not in TERMINAL_KINDS:
            errors.append(f"input {dst[0]}:{dst[1]} is fed by both {fed[dst]} and {src}:{sport}")
        fed[dst] = f"{src}:{sport}"

    succ: dict[str, list[str]] = {name: [] for name in units}
    for (src, _), (dst, _) in topology.edges.items():
        if src in units and dst in units:
            succ[src].append(dst)

    # iterative three-colour DFS
    colour = dict.fromkeys(units, 0)
    for root in units:
        if colour[root]:
            continue
        stack = [(root, iter(succ[root]))]
        colour[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[node] = 2
                stack.pop()
            elif colour[nxt] == 1:
                errors.append(f"cycle through {nxt}")
            elif colour[nxt] == 0:
                colour[nxt] = 1
                stack.append((nxt, iter(succ[nxt])))

    if n_sources == 1:
        seen = {topology.source}
        todo = [topology.source]
        while todo:
            for nxt in succ[todo.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        for name, u in units.items():
            if u.kind == UnitKind.DETECTOR and name not in seen:
                errors.append(f"detector {name} is unreachable from the source")

    return errors


def check_topology(topology: NetworkTopology) -> NetworkTopology:
    errors = validate_topology(topology)
    if errors:
        raise TopologyError("invalid topology: " + "; ".join(errors))
    return topology


def topology_to_text(topology: NetworkTopology) -> str:
    lines = ["# qdcsim topology", "# unit <name> <kind> [param] | edge <unit>:<port> -> <unit>:<port>"]
    for u in topology.units.values():
        if u.kind in (UnitKind.HWP, UnitKind.ROTATOR, UnitKind.PHASE):
            lines.append(f"unit {u.name} {u.kind.label} {u.param!r}")
        elif u.kind == UnitKind.DETECTOR:
            lines.append(f"unit {u.name} {u.kind.label} {u.detector}")
        else:
            lines.append(f"unit {u.name} {u.kind.label}")
    for (src, sport), (dst, dport) in topology.edges.items():
        lines.append(f"edge {src}:{sport} -> {dst}:{dport}")
    return "\n".join(lines) + "\n"


def topology_from_text(text: str) -> NetworkTopology:
    topology = NetworkTopology()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        try:
            if words[0] == "unit":
                kind = UnitKind[words[2].upper()]
                extra = words[3] if len(words) > 3 else None
                if kind == UnitKind.DETECTOR:
                    topology.add(words[1], kind, detector=int(extra))
                else:
                    topology.add(words[1], kind, float(extra) if extra is not None else 0.0)
            elif words[0] == "edge" and words[2] == "->":
                src, sport = words[1].rsplit(":", 1)
                dst, dport = words[3].rsplit(":", 1)
                topology.connect(src, int(sport), dst, int(dport))
            else:
                raise ValueError(words[0])
        except (IndexError, KeyError, ValueError) as exc:
            raise TopologyError(f"line {lineno}: cannot parse {raw!r}") from exc
    return topology


@dataclass
class NetworkState:
    """Mutable memory of every adaptive unit plus its private random stream."""

    gamma: float
    memory: dict[str, AdaptivePbsState]
    streams: dict[str, RandomStream]

    def copy(self) -> "NetworkState":
        return NetworkState(
            self.gamma,
            {k: v.copy() for k, v in self.memory.items()},
            {k: s.copy() for k, s in self.streams.items()},
        )

    def fingerprint(self) -> tuple:
        return tuple(
            (name, self.memory[name].as_floats(), self.streams[name].state)
            for name in sorted(self.memory)
        )


def init_state(topology: NetworkTopology, seed: int, gamma: float = DEFAULT_GAMMA) -> NetworkState:
    """Fresh randomized memory for every adaptive unit.

    Each unit owns a child stream keyed by its name, so results do not depend
    on the order in which units were added.
    """
    root = RandomStream(seed)
    memory: dict[str, AdaptivePbsState] = {}
    streams: dict[str, RandomStream] = {}
    for u in topology.of_kind(*ADAPTIVE_KINDS):
        stream = root.child(u.name)
        memory[u.name] = pbs_init(stream)
        streams[u.name] = stream
    return NetworkState(check_gamma(gamma), memory, streams)


@dataclass(frozen=True)
class RunTally:
    """Outcome counts of a batch of messengers.

    ``absorbed`` counts messengers destroyed by a polarizer; ``lost`` counts
    those leaving a beam splitter through an exit that has no optical path
    behind it (wired to a dump unit).
    """

    counts: DetectorCounts
    absorbed: int
    lost: int
    emitted: int

    @property
    def detected(self) -> int:
        return self.counts.total

    def __add__(self, other: "RunTally") -> "RunTally":
        return RunTally(
            DetectorCounts(self.counts.n0 + other.counts.n0, self.counts.n1 + other.counts.n1),
            self.absorbed + other.absorbed,
            self.lost + other.lost,
            self.emitted + other.emitted,
        )


Trace = Callable[[str, int], None]


def run_one(
    topology: NetworkTopology,
    state: NetworkState,
    hop_limit: int = DEFAULT_HOP_LIMIT,
    trace: Trace | None = None,
) -> Detected | Absorbed:
    """Create one messenger and follow it until it is detected or destroyed."""
    messenger = source_emit(topology.source)
    msg = messenger.message
    unit, port = topology.next_hop(topology.source, 0)
    gamma = state.gamma
    for _ in range(hop_limit):
        if trace is not None:
            trace(unit, port)
        u = topology.units[unit]
        kind = u.kind
        out_port = 0
        if kind == UnitKind.PBS:
            out = pbs_process(state.memory[unit], gamma, PortId(port), msg, state.streams[unit])
            out_port, msg = int(out.port), out.message
        elif kind == UnitKind.HWP:
            msg = hwp_process(u.param, msg)
        elif kind == UnitKind.ROTATOR:
            msg = rotator_process(u.param, msg)
        elif kind == UnitKind.PHASE:
            msg = phase_process(u.param, msg)
        elif kind == UnitKind.POLARIZER:
            out = polarizer_process(state.memory[unit], gamma, msg, state.streams[unit], unit)
            if isinstance(out, Absorbed):
                return out
            msg = out.message
        elif kind == UnitKind.DETECTOR:
            return Detected(u.detector)
        elif kind == UnitKind.DUMP:
            return Absorbed(unit)
        else:
            raise TopologyError(f"unit {unit} of kind {kind.label} cannot receive messengers")
        unit, port = topology.next_hop(unit, out_port)
    raise WiringCycleError(f"messenger exceeded the hop limit of {hop_limit}")


def run_many_reference(
    topology: NetworkTopology,
    state: NetworkState,
    n: int,
    hop_limit: int = DEFAULT_HOP_LIMIT,
    discard: int = 0,
) -> RunTally:
    """Pure-Python loop over :func:`run_one`; the cross-check for the kernel."""
    if n < 1:
        raise ValueError("event count must be >= 1")
    n0 = n1 = absorbed = lost = 0
    for k in range(n):
        out = run_one(topology, state, hop_limit)
        if k < discard:
            continue
        if isinstance(out, Detected):
            if out.detector == 0:
                n0 += 1
            else:
                n1 += 1
        elif topology.units[out.unit].kind == UnitKind.DUMP:
            lost += 1
        else:
            absorbed += 1
    return RunTally(DetectorCounts(n0, n1), absorbed, lost, n - min(discard, n))


def run_many(
    topology: NetworkTopology,
    state: NetworkState,
    n: int,
    hop_limit: int = DEFAULT_HOP_LIMIT,
    discard: int = 0,
    engine: str = "kernel",
) -> RunTally:
    """Send ``n`` messengers one by one through persistent unit memory.

    ``discard`` drops the first events from the tally (diagnostics only).
    ``engine`` is ``"kernel"`` (array loop, compiled unless disabled by the
    ``QDCSIM_DISABLE_NUMBA`` environment flag) or ``"reference"``.
    """
    if engine == "reference":
        return run_many_reference(topology, state, n, hop_limit, discard)
    if engine != "kernel":
        raise ValueError(f"unknown engine {engine!r}")
    if n < 1:
        raise ValueError("event count must be >= 1")
    from qdcsim import _kernels

    compiled = _kernels.compile_network(topology, state)
    result = _kernels.run_compiled(compiled, n, hop_limit, discard)
    _kernels.write_back(compiled, state)
    return result
