"""Regenerate the machine-made half of the golden parser corpus.

Run ``python3 tests/make_corpus.py`` from the repository root.  The files
are canonical serializations of seeded random policies; once written they
are frozen inputs, so a change in their text shows up in review.
"""

from __future__ import annotations

import random
from pathlib import Path

from abuc.syntax import serialize_policy
from policygen import ast_policy

OUT = Path(__file__).parent / "corpus" / "generated"
COUNT = 40


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for seed in range(COUNT):
        policy = ast_policy(random.Random(10_000 + seed))
        (OUT / f"gen_{seed:03d}.ucp").write_text(serialize_policy(policy), encoding="utf-8")


if __name__ == "__main__":
    main()
