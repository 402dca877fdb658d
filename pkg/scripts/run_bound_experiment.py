#!/usr/bin/env python3
"""Step-count bound experiment: split_keeper campaigns at n=7, t=2 for a
range of ambiguous-component counts, checked against 1 + the coin-discard
game at heads probability h/2.  Writes records and reports next to this
script unless told otherwise."""

import argparse
from pathlib import Path

from mbasim.cli import ExperimentConfig, run_campaign, write_outputs


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--ambiguous", type=int, nargs="+", default=[1, 2, 4])
    parser.add_argument("--outdir", type=Path, default=Path("bound-experiment"))
    args = parser.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    overall_ok = True
    for l in args.ambiguous:
        config = ExperimentConfig(
            nodes=7,
            byzantine=2,
            components=4,
            adversary="split_keeper",
            scenario=f"ambiguous({l})",
            trials=args.trials,
            seed=args.seed,
            out=str(args.outdir / f"records-l{l}.jsonl"),
            report=str(args.outdir / f"summary-l{l}.json"),
        )
        records, summary, rows = run_campaign(config)
        write_outputs(config, records, summary, rows)
        ok = summary["bound_check"]["passed"] and not summary["failed"]
        overall_ok = overall_ok and ok
        print(f"== l={l} ({args.trials} trials) ==")
        print(summary["bound_check_text"])
        print()
    print("overall:", "pass" if overall_ok else "FAIL")


if __name__ == "__main__":
    main()
