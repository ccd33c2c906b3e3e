#!/usr/bin/env python3
"""Drive the whole offline pipeline over the demo workspace and print a
stage-by-stage summary: rewrite -> synth -> narrate -> emit-sft, then the
foundry build and the bandit schedule.

Usage:
    python3 scripts/make_demo_inputs.py --dir demo
    python3 scripts/run_synthesis_demo.py --dir demo
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from medforge.cli import run as forge


def stage(label: str, argv: list[str]) -> None:
    code = forge(argv)
    print(f"  {label:<14} exit={code}")
    if code != 0:
        sys.exit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dir", default="demo")
    args = parser.parse_args()
    base = Path(args.dir)
    config = str(base / "forge.json")
    if not Path(config).exists():
        sys.exit(f"no {config}; run scripts/make_demo_inputs.py first")

    print("pipeline:")
    stage("rewrite", ["--config", config, "rewrite", "--seeds", str(base / "seeds.jsonl"),
                      "--out", str(base / "open.jsonl"), "--backend", "rewriter"])
    stage("synth", ["--config", config, "synth", "--seeds", str(base / "seeds.jsonl"),
                    "--open", str(base / "open.jsonl"), "--out", str(base / "traces.jsonl"),
                    "--reasoning-backend", "reason", "--reflection-backend", "reflect"])
    stage("narrate", ["--config", config, "narrate", "--traces", str(base / "traces.jsonl"),
                      "--seeds", str(base / "seeds.jsonl"), "--open", str(base / "open.jsonl"),
                      "--out", str(base / "sft.jsonl"), "--backend", "narrator"])
    stage("emit-sft", ["--config", config, "emit-sft", "--records", str(base / "sft.jsonl"),
                       "--out", str(base / "sft.final.jsonl")])
    stage("foundry", ["--config", config, "foundry", "build", "--dialogues", str(base / "dialogues.jsonl"),
                      "--out", str(base / "items.jsonl"), "--vocab", str(base / "icd10.txt"),
                      "--tau", "0.8", "--seed", "99", "--emr-backend", "emr", "--question-backend", "vignette"])
    stage("mix", ["--config", config, "mix", "--events", str(base / "events.jsonl"),
                  "--out", str(base / "schedule.jsonl"), "--phase-len", "200"])

    print("\noutputs:")
    for name in ("open", "traces", "sft", "sft.final", "items", "schedule"):
        path = base / f"{name}.jsonl"
        n = len(path.read_text(encoding="utf-8").splitlines())
        manifest = Path(str(path) + ".manifest.json")
        digest = json.loads(manifest.read_text())["config_digest"][:12] if manifest.exists() else "-"
        print(f"  {name:<12} {n:>4} lines   config={digest}")
    print(f"\nreview service: forge --config {config} serve --items {base / 'items.jsonl'}")


if __name__ == "__main__":
    main()
