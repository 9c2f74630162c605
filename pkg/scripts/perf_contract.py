"""Time growing a network against scoring a stream of the same size.

Usage: python scripts/perf_contract.py [n_events] [spec] [runs]
"""

from __future__ import annotations

import statistics
import sys
import time

from netevo.events import seed_graph
from netevo.generator import Empirical, grow
from netevo.likelihood import sequence_log_likelihood
from netevo.models import parse_spec

# one target per new node, so events and edges coincide
OUTER = Empirical({1: 1.0}, {0: 0.5, 1: 0.3, 2: 0.2})
DEFAULT_SPEC = "0.5*degree+0.3*pfp(0.05)+0.2*recent(3)"


def measure(n: int, spec_text: str = DEFAULT_SPEC, runs: int = 3, seed: int = 1):
    spec = parse_spec(spec_text)
    grow_times, score_times = [], []
    for r in range(runs):
        t = time.perf_counter()
        res = grow(seed_graph(), OUTER, spec, n, seed=seed + r)
        grow_times.append(time.perf_counter() - t)
        assert len(res.events) == n
        t = time.perf_counter()
        sequence_log_likelihood(spec, seed_graph(), res.events)
        score_times.append(time.perf_counter() - t)
    return statistics.median(grow_times), statistics.median(score_times), grow_times, score_times


def main(argv: list[str]) -> None:
    n = int(argv[1]) if len(argv) > 1 else 100_000
    spec = argv[2] if len(argv) > 2 else DEFAULT_SPEC
    runs = int(argv[3]) if len(argv) > 3 else 3
    g, s, gs, ss = measure(n, spec, runs)
    print(f"spec={spec} events={n}")
    print("grow  " + " ".join(f"{x:.2f}" for x in gs) + f"  median {g:.2f}s")
    print("score " + " ".join(f"{x:.2f}" for x in ss) + f"  median {s:.2f}s")
    print(f"ratio {g / s:.1f}")


if __name__ == "__main__":
    main(sys.argv)
