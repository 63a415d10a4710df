"""Time the compiled and pure-Python window kernels on identical inputs.

    python benchmarks/bench_kernel.py --realizations 4 --windows 20
"""
import argparse
import time

import numpy as np

from wifislice import simulator
from wifislice.domain import NetworkConfig
from wifislice.simulator import Episode, simulate_window
from wifislice.training import sample_realizations


def time_kernel(kernel, realizations, windows, allocation):
    """Seconds spent per window and the resulting throughput matrices."""
    out = []
    elapsed = 0.0
    for r in realizations:
        ep = Episode(r)
        for t in range(windows):
            arrivals, channel = ep.window_inputs()
            t0 = time.perf_counter()
            m, ep.queues = simulate_window(r, t, allocation, ep.queues, arrivals, channel,
                                           kernel=kernel)
            elapsed += time.perf_counter() - t0
            out.append(m.throughput)
            ep.t += 1
            ep._inputs = None
    return elapsed / (len(realizations) * windows), np.array(out)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--realizations", type=int, default=4)
    parser.add_argument("--windows", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    config = NetworkConfig()
    if args.windows > config.num_windows:
        parser.error(f"at most {config.num_windows} windows")
    reals = sample_realizations(args.realizations, np.random.default_rng(args.seed), config)
    allocation = np.array([0.4, 0.3, 0.3])
    kernels = simulator.kernels()
    if "compiled" not in kernels:
        print("compiled kernel not built; timing the Python kernel only")

    results = {}
    for name, kernel in kernels.items():
        per_window, thr = time_kernel(kernel, reals, args.windows, allocation)
        results[name] = (per_window, thr)
        print(f"{name:>9}: {per_window * 1e3:8.3f} ms/window")
    if len(results) == 2:
        same = np.array_equal(results["python"][1], results["compiled"][1])
        speedup = results["python"][0] / results["compiled"][0]
        print(f"  speedup: {speedup:8.1f}x   identical output: {same}")


if __name__ == "__main__":
    main()
