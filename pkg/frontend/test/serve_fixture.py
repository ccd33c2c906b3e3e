#!/usr/bin/env python3
"""Seed a 10-item review store and serve the real REST API for the UI tests.

Usage: python3 serve_fixture.py --port 8977
Prints "READY" on stdout once uvicorn is about to accept connections.
"""

from __future__ import annotations

import argparse
import threading

import uvicorn

from medforge.demo import foundry_scripts, icd_vocabulary, make_dialogues
from medforge.foundry import build_items, dedup_complaints, deidentify_dialogue
from medforge.gateway import BackendConfig, Gateway
from medforge.review import ReviewStore
from medforge.service import create_app


def seeded_store(n: int = 10) -> ReviewStore:
    dialogues = make_dialogues(n, rng_seed=41)
    kept, _ = dedup_complaints([deidentify_dialogue(d) for d in dialogues], tau=0.8)
    emr_replies, question_replies = foundry_scripts(kept, rng_seed=13)
    gw = Gateway()
    gw.register(BackendConfig(id="emr", kind="mock", script=emr_replies))
    gw.register(BackendConfig(id="q", kind="mock", script=question_replies))
    outcome = build_items(gw, "emr", "q", dialogues, icd_vocabulary(), tau=0.8, rng_seed=99)
    assert len(outcome.items) == n, f"fixture expected {n} items, built {len(outcome.items)}"
    return ReviewStore(outcome.items)


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--port", type=int, required=True)
    args = parser.parse_args()
    app = create_app(seeded_store())
    config = uvicorn.Config(app, host="127.0.0.1", port=args.port, log_level="error")
    server = uvicorn.Server(config)
    threading.Timer(0.2, lambda: print("READY", flush=True)).start()
    server.run()


if __name__ == "__main__":
    main()
