"""Summarize the scenario-tree corpus and regenerate the two shipped tree files.

    python3 scripts/tree_corpus.py [--write]
"""
import argparse
from pathlib import Path

import numpy as np

import svset
from svset.corpus import make_corpus
from svset.fans import deterministic_fan_test
from svset.io import tree_to_json, write_json
from svset.tree import hull_vs_conditional

DATA = Path(svset.__file__).parent / "data" / "trees"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7905)
    ap.add_argument("--write", action="store_true", help="overwrite the shipped example trees")
    args = ap.parse_args()

    corpus = make_corpus(args.seed)
    rows = []
    for case in corpus:
        rep = hull_vs_conditional(case.tree, case.selections)
        fan = deterministic_fan_test(case.selections).verdict
        rows.append((case.kind, case.tree.depth, rep.max_gap, fan == rep.is_martingale))
    for kind in ("deterministic", "rotated"):
        gaps = np.array([g for k, _, g, _ in rows if k == kind])
        agree = sum(a for k, _, _, a in rows if k == kind)
        print(f"{kind:<14} n={len(gaps)}  gap min {gaps.min():.3e}  max {gaps.max():.3e}  agreement {agree}/{len(gaps)}")

    if args.write:
        det = max((c for c in corpus if c.kind == "deterministic"), key=lambda c: c.tree.depth)
        rot = next(c for c in corpus if c.kind == "rotated" and c.tree.depth == 3)
        write_json(DATA / "deterministic_fan.json", tree_to_json(det.tree, det.selections))
        write_json(DATA / "rotating_fan.json", tree_to_json(rot.tree, rot.selections))
        print(f"wrote {DATA}")


if __name__ == "__main__":
    main()
