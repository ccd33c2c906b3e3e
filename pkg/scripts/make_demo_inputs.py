#!/usr/bin/env python3
"""Write a ready-to-run demo workspace: seeds, dialogues, reward events,
mock-backend scripts, vocabulary, and a forge.json wired to all of them.

Usage:
    python3 scripts/make_demo_inputs.py [--dir demo] [--seeds 25] [--dialogues 40]

Afterwards every forge stage can run offline, e.g.:
    forge --config demo/forge.json rewrite --seeds demo/seeds.jsonl \
        --out demo/open.jsonl --backend rewriter
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from medforge.demo import (
    foundry_scripts,
    icd_vocabulary,
    make_dialogues,
    make_seeds,
    pipeline_scripts,
)
from medforge.foundry import dedup_complaints, deidentify_dialogue
from medforge.records import RewardEvent, write_records


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dir", default="demo")
    parser.add_argument("--seeds", type=int, default=25)
    parser.add_argument("--dialogues", type=int, default=40)
    parser.add_argument("--rng-seed", type=int, default=7)
    args = parser.parse_args()

    base = Path(args.dir)
    base.mkdir(parents=True, exist_ok=True)

    seeds = make_seeds(args.seeds, rng_seed=args.rng_seed)
    wrong = {seeds[i].id for i in range(5, len(seeds), 8)}
    scripts = pipeline_scripts(seeds, wrong_answer_ids=wrong)
    write_records(base / "seeds.jsonl", seeds)

    dialogues = make_dialogues(args.dialogues, rng_seed=41, near_duplicates=2)
    write_records(base / "dialogues.jsonl", dialogues)
    kept, _ = dedup_complaints([deidentify_dialogue(d) for d in dialogues], tau=0.8)
    emr_replies, question_replies = foundry_scripts(kept, rng_seed=13)

    events = []
    for i in range(500):
        events.append(RewardEvent("web", 2.1 - 0.001 * i + 0.3 * ((i * 37) % 11) / 11, 2 * i))
        events.append(RewardEvent("textbooks", 1.4 - 0.0005 * i + 0.2 * ((i * 53) % 7) / 7, 2 * i + 1))
    write_records(base / "events.jsonl", events)

    (base / "icd10.txt").write_text("\n".join(icd_vocabulary()) + "\n", encoding="utf-8")

    config = {
        "backends": [
            {"id": "rewriter", "kind": "mock", "script": scripts.rewriter},
            {"id": "reason", "kind": "mock", "script": scripts.reasoning},
            {"id": "reflect", "kind": "mock", "script": scripts.reflection},
            {"id": "narrator", "kind": "mock", "script": scripts.narrator},
            {"id": "emr", "kind": "mock", "script": emr_replies},
            {"id": "vignette", "kind": "mock", "script": question_replies},
        ],
        "templates_dir": "",
        "defaults": {"k": 20, "temperature": 1.2, "budget": 4, "easy_fraction": 0.1, "tau": 0.8, "epsilon": 0.05, "eta": 0.1},
        "service": {"bind": "127.0.0.1", "port": 8765},
        "reviewers": {"dr-attending": 1, "dr-associate": 2, "dr-chief": 3},
    }
    (base / "forge.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")

    print(f"demo inputs written to {base}/")
    print(f"  {len(seeds)} seeds ({len(wrong)} planted wrong-answer traces)")
    print(f"  {len(dialogues)} dialogues ({len(dialogues) - len(kept)} near-duplicates)")
    print(f"  {len(events)} reward events")


if __name__ == "__main__":
    main()
