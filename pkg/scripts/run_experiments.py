"""Reproduce the bisimulation-engine trend experiments at desk scale.

    python scripts/run_experiments.py [--latency MS] [--quick]

Prints three tables: query time against engine head start on the chains
scenario, the approximation effect on the self-contained scenario, and the
zero-head-start crossover on the three-file scenario.
"""

import argparse
import sys

from hypersetdb.experiments import (
    build_chains, build_self_contained, build_three_file, run_experiment,
)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--latency", type=float, default=25.0,
                        help="simulated per-document fetch latency [ms]")
    parser.add_argument("--quick", action="store_true",
                        help="smaller scenarios and fewer head-start steps")
    options = parser.parse_args()
    latency = options.latency

    if options.quick:
        chains = build_chains(files=4, names=15)
        delays = [0, 250, 500, 750]
        self_contained = build_self_contained(names=10)
        three = build_three_file(names=21)
    else:
        chains = build_chains(files=10, names=51)
        delays = [0, 500, 1000, 1500, 2000]
        self_contained = build_self_contained(names=25)
        three = build_three_file(names=61)

    print("chains scenario: query time against engine head start d")
    print("  %8s  %12s" % ("d [ms]", "t(d) [ms]"))
    for delay in delays:
        m = run_experiment(chains, "engine", delay_ms=delay,
                           fetch_latency_ms=latency)
        print("  %8d  %12.0f" % (delay, m.wall_ms))

    print("\nself-contained scenario: exploiting approximation files")
    with_approx = run_experiment(self_contained, "engine_with_approx",
                                 delay_ms=0, fetch_latency_ms=latency)
    without = run_experiment(self_contained, "no_engine",
                             fetch_latency_ms=latency)
    print("  engine+approximations: %d document fetches, "
          "%d productive derivation rounds"
          % (with_approx.engine_fetches, with_approx.engine_productive_rounds))
    print("  no engine: full saturation over %d questions in %.0f ms"
          % (without.questions_resolved, without.wall_ms))

    print("\nthree-file scenario: crossover at zero head start")
    local = run_experiment(three, "no_engine", fetch_latency_ms=latency)
    engine = run_experiment(three, "engine", delay_ms=0,
                            fetch_latency_ms=latency)
    print("  without engine: %8.0f ms" % local.wall_ms)
    print("  engine, d=0:    %8.0f ms   (asking an ignorant engine only "
          "adds cost)" % engine.wall_ms)
    return 0


if __name__ == "__main__":
    sys.exit(main())
