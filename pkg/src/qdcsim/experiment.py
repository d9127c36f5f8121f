"""The delayed-choice set-up, its sweep procedure and the comparison with theory.

Wiring of :func:`build_topology` (names as used in the topology):

* ``SRC`` emits (1, 1)/sqrt(2) into ``PBS1``, which splits the two
  interferometer arms: arm a (transmitted, H) and arm b (reflected, V).
* Arm b passes the compensator ``C1`` (HWP at pi/4, V -> H) and the phase
  shifter ``PHI``. Each arm then meets a preparation plate ``PREP_a`` /
  ``PREP_b`` turning H into cos(alpha) H + sin(alpha) V.
* ``PBS2_a`` and ``PBS2_b`` are the two independent halves of PBS2. Their H
  exits form the closed pair, their V exits the open pair.
* Closed pair: arm b goes through compensator ``C2`` (H -> V), both merge in
  ``PBS3_1``, cross the plates ``HWP_0`` and ``HWP_PI8`` and split again in
  ``PBS4_1``. The H exit carries the D0 share (phase ``DELTA0``), the V exit
  the D1 share (phase ``DELTA1``).
* Open pair: arm b goes through compensator ``C3`` (V -> H), both merge in
  ``PBS3_2`` and split again in ``PBS4_2`` without mixing.
* ``PBS5_2`` merges the closed and open D0 shares (closed as H), ``PBS5_1``
  the D1 shares (closed as V). In quantum mode a polarizer ``P0``/``P1`` at
  45 degrees sits in front of each detector.
* The merging beam splitters PBS3 and PBS5 have one exit with no optical path
  behind it; it leads to a dump unit. Only transient leakage reaches a dump.

Where the two extra phases sit is decided in :func:`_closed_exit_phases`.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from qdcsim.components import DEFAULT_GAMMA, check_gamma
from qdcsim.messenger import derive_seed
from qdcsim.network import (
    NetworkTopology,
    RunTally,
    UnitKind,
    check_topology,
    init_state,
    run_many,
)
from qdcsim.theory import OracleParams, theory_fraction_d1

DELTA0 = math.pi / 8
DELTA1 = -7 * math.pi / 40
EVENTS = 10_000
PHI_POINTS = 50
ALPHA_GRID = tuple(l * math.pi / 8 for l in range(8))
TOLERANCE = 0.03


class AllAbsorbedError(RuntimeError):
    pass


class Mode(str, enum.Enum):
    WHEELER = "wheeler"
    QUANTUM = "quantum"

    def __str__(self) -> str:
        return self.value


def phi_grid(points: int = PHI_POINTS) -> list[float]:
    """Evenly spaced phases on [0, 2 pi)."""
    if points < 1:
        raise ValueError("need at least one phase value")
    return [2 * math.pi * k / points for k in range(points)]


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: float = 0.0
    phi_values: tuple[float, ...] = field(default_factory=lambda: tuple(phi_grid()))
    delta0: float = DELTA0
    delta1: float = DELTA1
    gamma: float = DEFAULT_GAMMA
    events_per_point: int = EVENTS
    seed: int = 0
    mode: Mode = Mode.WHEELER
    discard: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "phi_values", tuple(float(p) for p in self.phi_values))
        if self.events_per_point < 1:
            raise ValueError("events_per_point must be >= 1")
        if not self.phi_values:
            raise ValueError("phi_values must not be empty")
        check_gamma(self.gamma)
        for name in ("alpha", "delta0", "delta1"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class SweepRow:
    phi: float
    alpha: float
    mode: Mode
    n0: int
    n1: int
    absorbed: int
    f1_sim: float
    f1_theory: float
    lost: int = 0


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list[SweepRow]


def _closed_exit_phases(topology: NetworkTopology, delta0: float, delta1: float) -> tuple[str, str]:
    """Put the two extra phases on the closed-interferometer exits of PBS4_1.

    They act on the wave-like share of each detector only, which is where the
    closed-form intensities carry them. Returns the (D0, D1) path heads.
    """
    topology.add("DELTA0", UnitKind.PHASE, delta0)
    topology.add("DELTA1", UnitKind.PHASE, delta1)
    topology.connect("PBS4_1", 0, "DELTA0")
    topology.connect("PBS4_1", 1, "DELTA1")
    return "DELTA0", "DELTA1"


def build_topology(
    mode: Mode | str,
    alpha: float,
    phi: float,
    delta0: float = DELTA0,
    delta1: float = DELTA1,
) -> NetworkTopology:
    mode = Mode(mode)
    t = NetworkTopology()
    add, wire = t.add, t.connect
    quarter = math.pi / 4

    add("SRC", UnitKind.SOURCE)
    add("PBS1", UnitKind.PBS)
    wire("SRC", 0, "PBS1", 0)

    # first splitter, relative phase, preparation of the control polarization
    add("C1", UnitKind.HWP, quarter)
    add("PHI", UnitKind.PHASE, phi)
    add("PREP_a", UnitKind.ROTATOR, alpha)
    add("PREP_b", UnitKind.ROTATOR, alpha)
    wire("PBS1", 0, "PREP_a")
    wire("PBS1", 1, "C1")
    wire("C1", 0, "PHI")
    wire("PHI", 0, "PREP_b")

    # PBS2: one independent unit per arm; H -> closed, V -> open
    add("PBS2_a", UnitKind.PBS)
    add("PBS2_b", UnitKind.PBS)
    wire("PREP_a", 0, "PBS2_a", 0)
    wire("PREP_b", 0, "PBS2_b", 0)

    # closed interferometer: merge, Hadamard-type plates, split
    add("C2", UnitKind.HWP, quarter)
    add("PBS3_1", UnitKind.PBS)
    add("HWP_0", UnitKind.HWP, 0.0)
    add("HWP_PI8", UnitKind.HWP, math.pi / 8)
    add("PBS4_1", UnitKind.PBS)
    wire("PBS2_a", 0, "PBS3_1", 0)
    wire("PBS2_b", 0, "C2")
    wire("C2", 0, "PBS3_1", 1)
    wire("PBS3_1", 0, "HWP_0")
    wire("HWP_0", 0, "HWP_PI8")
    wire("HWP_PI8", 0, "PBS4_1", 0)
    closed_d0, closed_d1 = _closed_exit_phases(t, delta0, delta1)

    # open interferometer: merge and split without mixing the arms
    add("C3", UnitKind.HWP, quarter)
    add("PBS3_2", UnitKind.PBS)
    add("PBS4_2", UnitKind.PBS)
    wire("PBS2_b", 1, "C3")
    wire("C3", 0, "PBS3_2", 0)
    wire("PBS2_a", 1, "PBS3_2", 1)
    wire("PBS3_2", 0, "PBS4_2", 0)

    # recombination of wave-like (closed) and particle-like (open) shares
    add("PBS5_1", UnitKind.PBS)
    add("PBS5_2", UnitKind.PBS)
    wire(closed_d0, 0, "PBS5_2", 0)
    wire("PBS4_2", 1, "PBS5_2", 1)
    wire("PBS4_2", 0, "PBS5_1", 0)
    wire(closed_d1, 0, "PBS5_1", 1)

    add("D0", UnitKind.DETECTOR, detector=0)
    add("D1", UnitKind.DETECTOR, detector=1)
    if mode == Mode.QUANTUM:
        add("P0", UnitKind.POLARIZER)
        add("P1", UnitKind.POLARIZER)
        wire("PBS5_2", 0, "P0")
        wire("PBS5_1", 0, "P1")
        wire("P0", 0, "D0")
        wire("P1", 0, "D1")
    else:
        wire("PBS5_2", 0, "D0")
        wire("PBS5_1", 0, "D1")

    for merger in ("PBS3_1", "PBS3_2", "PBS5_1", "PBS5_2"):
        dump = add(f"DUMP_{merger}", UnitKind.DUMP)
        wire(merger, 1, dump)

    return check_topology(t)


def point_seed(config: ExperimentConfig, phi: float) -> int:
    """Seed of one sweep point, independent of sweep order.

    Mixes the run seed, the rank of ``phi`` among the sorted phase values,
    alpha in units of 2**-32 rad and the mode name.
    """
    rank = sorted(config.phi_values).index(phi)
    alpha_q = round(config.alpha * 2**32)
    return derive_seed(config.seed, rank, alpha_q & ((1 << 64) - 1), config.mode.value)


def theory_f1(config: ExperimentConfig, phi: float) -> float:
    return theory_fraction_d1(config.mode.value, OracleParams(config.alpha, phi, config.delta0, config.delta1))


def run_point(config: ExperimentConfig, phi: float, engine: str = "kernel") -> SweepRow:
    if phi not in config.phi_values:
        raise ValueError(f"phi={phi!r} is not part of the configured sweep")
    topology = build_topology(config.mode, config.alpha, phi, config.delta0, config.delta1)
    state = init_state(topology, point_seed(config, phi), config.gamma)
    tally: RunTally = run_many(topology, state, config.events_per_point,
                               discard=config.discard, engine=engine)
    n0, n1 = tally.counts.n0, tally.counts.n1
    if n0 + n1 == 0:
        raise AllAbsorbedError(f"all events absorbed at alpha={config.alpha!r}, phi={phi!r}")
    return SweepRow(
        phi=phi,
        alpha=config.alpha,
        mode=config.mode,
        n0=n0,
        n1=n1,
        absorbed=tally.absorbed,
        f1_sim=n1 / (n0 + n1),
        f1_theory=theory_f1(config, phi),
        lost=tally.lost,
    )


def run_sweep(config: ExperimentConfig, jobs: int = 1, engine: str = "kernel") -> SweepResult:
    """One row per phase value, in the order of ``config.phi_values``."""
    if jobs <= 1:
        rows = [run_point(config, phi, engine) for phi in config.phi_values]
    else:
        # the compiled loop releases the GIL, so threads run in parallel
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda phi: run_point(config, phi, engine), config.phi_values))
    return SweepResult(config, rows)


def run_all(configs: list[ExperimentConfig], jobs: int = 1, engine: str = "kernel") -> list[SweepResult]:
    tasks = [(i, phi) for i, c in enumerate(configs) for phi in c.phi_values]
    if jobs <= 1:
        rows = [run_point(configs[i], phi, engine) for i, phi in tasks]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda t: run_point(configs[t[0]], t[1], engine), tasks))
    results = [SweepResult(c, []) for c in configs]
    for (i, _), row in zip(tasks, rows):
        results[i].rows.append(row)
    return results


@dataclass(frozen=True)
class Deviation:
    max_abs: float
    rms: float


def compare_to_theory(result: SweepResult | list[SweepRow]) -> dict[Mode, Deviation]:
    rows = result.rows if isinstance(result, SweepResult) else list(result)
    if not rows:
        raise ValueError("empty result")
    by_mode: dict[Mode, list[float]] = {}
    for row in rows:
        by_mode.setdefault(Mode(row.mode), []).append(abs(row.f1_sim - row.f1_theory))
    return {
        mode: Deviation(max(devs), math.sqrt(sum(d * d for d in devs) / len(devs)))
        for mode, devs in by_mode.items()
    }


def fringe_visibility(rows: list[SweepRow]) -> float:
    """Contrast of the least-squares fit f1 = c + a cos(phi) + b sin(phi)."""
    import numpy as np

    phi = np.array([r.phi for r in rows])
    f1 = np.array([r.f1_sim for r in rows])
    design = np.column_stack([np.ones_like(phi), np.cos(phi), np.sin(phi)])
    (c, a, b), *_ = np.linalg.lstsq(design, f1, rcond=None)
    return float(math.hypot(a, b) / c)


def configs_for(alphas, modes, base: ExperimentConfig) -> list[ExperimentConfig]:
    return [replace(base, alpha=a, mode=Mode(m)) for a in alphas for m in modes]
