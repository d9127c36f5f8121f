"""Events per second of the three engines on the full interferometer.

    python3 benchmarks/bench_kernels.py [--events N]

Engines: compiled kernel, the same kernel run as plain Python, and the
object-level reference loop. All three produce identical tallies.
"""
import argparse
import math
import time

from qdcsim import _kernels
from qdcsim.experiment import Mode, build_topology
from qdcsim.network import DEFAULT_HOP_LIMIT, init_state, run_many


def _time(fn):
    t0 = time.perf_counter()
    out = fn()
    return time.perf_counter() - t0, out


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--events", type=int, default=20_000)
    args = p.parse_args()
    n = args.events

    topology = build_topology(Mode.QUANTUM, math.pi / 4, 1.0)

    def kernel(use_numba):
        state = init_state(topology, 1)
        compiled = _kernels.compile_network(topology, state)
        return _kernels.run_compiled(compiled, n, DEFAULT_HOP_LIMIT, use_numba=use_numba)

    results = {}
    if _kernels.run_events_jit is not None:
        kernel(True)  # compile outside the timed region
        results["numba kernel"] = _time(lambda: kernel(True))
    results["python kernel"] = _time(lambda: kernel(False))
    results["reference"] = _time(lambda: run_many(topology, init_state(topology, 1), n, engine="reference"))

    tallies = {name: tally for name, (_, tally) in results.items()}
    base = results["reference"][0]
    print(f"{'engine':<15}{'seconds':>10}{'events/s':>14}{'speedup':>10}")
    for name, (secs, _) in results.items():
        print(f"{name:<15}{secs:>10.3f}{n / secs:>14,.0f}{base / secs:>9.1f}x")
    print("identical tallies:", len(set(tallies.values())) == 1)


if __name__ == "__main__":
    main()
