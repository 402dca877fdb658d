#!/usr/bin/env python3
"""Agreement/consistency sweep over network sizes, dimensions, adversaries
and input scenarios; prints one line per cell and a final verdict."""

import argparse
import itertools
import time

from mbasim import NetworkConfig, run_trial
from mbasim.adversaries import make_adversary
from mbasim.scenarios import build_inputs, parse_call, scenario_rng

ADVERSARIES = ["silent", "crash_after(3)", "equivocator", "split_keeper", "random_byzantine"]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--scenarios", nargs="+", default=["unanimous", "split", "ambiguous"])
    parser.add_argument("--sizes", nargs="+", type=int, default=[4, 7, 10])
    parser.add_argument("--components", nargs="+", type=int, default=[1, 4])
    args = parser.parse_args()

    started = time.perf_counter()
    all_ok = True
    for n, m, adv_text, scenario in itertools.product(
        args.sizes, args.components, ADVERSARIES, args.scenarios
    ):
        t = (n - 1) // 3
        adv_name, adv_params = parse_call(adv_text)
        scen_name, scen_params = parse_call(scenario)
        bad = 0
        iters = []
        for seed in range(args.trials):
            config = NetworkConfig(n, t, m, seed, adversary=adv_name)
            inputs = build_inputs(scen_name, scen_params, config, scenario_rng(seed))
            rec = run_trial(config, inputs, make_adversary(adv_name, adv_params))
            if rec.failed or rec.consistency is False:
                bad += 1
            iters.append(rec.mbba_iterations)
        ok = bad == 0
        all_ok = all_ok and ok
        print(
            f"n={n:2d} t={t} m={m:2d} {adv_name:16s} {scenario:12s}"
            f" max_iters={max(iters):3d} {'ok' if ok else f'FAILURES={bad}'}"
        )
    print(f"\n{'all cells ok' if all_ok else 'FAILURES PRESENT'}"
          f" ({time.perf_counter() - started:.1f}s)")


if __name__ == "__main__":
    main()
