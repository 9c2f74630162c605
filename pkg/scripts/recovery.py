"""Parameter-recovery experiment: grow synthetic streams from known models
and check what the estimator gives back.

Usage: python scripts/recovery.py [n_choices] [n_seeds]
"""

from __future__ import annotations

import argparse
import time

from netevo.estimation import FitConfig, fit_model
from netevo.events import seed_graph
from netevo.generator import Empirical, grow
from netevo.likelihood import NEW_NODE, score_many
from netevo.models import parse_spec

SINGLE = Empirical({1: 1.0}, {0: 1.0})
CASES = [
    ("0.7*degree + 0.3*null", ("null", "degree")),
    ("pfp(0.05)", ("pfp",)),
    ("pfp(-0.2)", ("pfp",)),
    ("0.5*pfp(0.1) + 0.5*recent(3)", ("pfp", "recent")),
]
RIVALS = ["null", "degree", "triangle", "singleton", "doubleton", "recent(3)", "pfp(0.2)", "pfp(-0.2)"]


def run_case(truth: str, families, n: int, seed: int):
    events = grow(seed_graph(), SINGLE, parse_spec(truth), n, seed).events
    t = time.perf_counter()
    fit = fit_model(seed_graph(), events, FitConfig(candidate_components=families))
    elapsed = time.perf_counter() - t
    reps = score_many([fit.spec] + [parse_spec(r) for r in RIVALS], seed_graph(), events, role=NEW_NODE)
    best_rival = max(reps[1:], key=lambda r: r.log_likelihood)
    return fit, reps[0], best_rival, elapsed


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("n", nargs="?", type=int, default=20_000)
    ap.add_argument("seeds", nargs="?", type=int, default=3)
    args = ap.parse_args()
    print("truth,seed,fitted,c0,best_rival,rival_c0,seconds")
    for truth, fams in CASES:
        for seed in range(args.seeds):
            fit, rep, rival, dt = run_case(truth, fams, args.n, seed)
            print(f'"{truth}",{seed},"{fit.spec.format(4)}",{rep.c0:.4g},"{rival.spec_new}",{rival.c0:.4g},{dt:.1f}')


if __name__ == "__main__":
    main()
