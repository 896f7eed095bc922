#!/usr/bin/env python3
"""Generate synthetic study CSVs for the analyze command.

Two shapes:
  study  System participants log 3x to 5x the baseline claim counts per
         lean, so every per-lean comparison should come out significant.
  null   System counts are a reshuffle of the baseline counts, so no
         comparison should come out significant.
"""

from __future__ import annotations

import argparse
import csv
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from counterpoint.analytics import STUDY_CSV_HEADER

LEANS = ("left", "right", "neutral")


def study_rows(rng: random.Random, per_cell: int) -> list[dict]:
    rows = []
    for lean in LEANS:
        baselines = [rng.randint(2, 5) for _ in range(per_cell)]
        for i, n_claims in enumerate(baselines):
            rows.append(_row(f"{lean[0]}b{i}", "baseline", lean, n_claims, rng))
        for i in range(per_cell):
            factor = rng.uniform(3.0, 5.0)
            n_claims = round(rng.choice(baselines) * factor)
            rows.append(_row(f"{lean[0]}s{i}", "system", lean, n_claims, rng))
    return rows


def null_rows(rng: random.Random, per_cell: int) -> list[dict]:
    rows = []
    for lean in LEANS:
        baselines = [rng.randint(2, 8) for _ in range(per_cell)]
        mirrored = list(baselines)
        rng.shuffle(mirrored)
        for i, n_claims in enumerate(baselines):
            rows.append(_row(f"{lean[0]}b{i}", "baseline", lean, n_claims, rng))
        for i, n_claims in enumerate(mirrored):
            rows.append(_row(f"{lean[0]}s{i}", "system", lean, n_claims, rng))
    return rows


def _row(pid: str, condition: str, lean: str, n_claims: int, rng: random.Random) -> dict:
    before = rng.randint(1, 5)
    return {
        "participant_id": pid,
        "condition": condition,
        "lean": lean,
        "n_claims": n_claims,
        "n_counters": max(0, n_claims - rng.randint(0, 2)),
        "duration_minutes": rng.randint(24, 36),
        "stance_before": before,
        "stance_after": max(1, min(5, before + rng.randint(-1, 1))),
    }


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", help="output CSV path")
    parser.add_argument("--shape", choices=("study", "null"), default="study")
    parser.add_argument("--per-cell", type=int, default=6,
                        help="participants per condition per lean")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = random.Random(args.seed)
    build = study_rows if args.shape == "study" else null_rows
    rows = build(rng, args.per_cell)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=STUDY_CSV_HEADER)
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
