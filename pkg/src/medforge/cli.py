"""forge: the single entry point wiring every pipeline stage.

Exit codes: 0 success, 1 validation/usage error, 2 runtime error. Every
run writes a ``<out>.manifest.json`` sidecar (inputs, config digest,
counts, seed) sufficient to reproduce the run byte-identically with mock
backends; outputs are flushed record by record so partial results survive
mid-run failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Sequence

from . import demo, mixer
from .dual_expert import DualExpertEngine, LoopConfig
from .evaluation import EvalResult, evaluate, render_report
from .foundry import DEFAULT_TAU, build_items, compute_stats, load_vocabulary
from .gateway import Gateway, GatewayError, load_gateway
from .preference import DEFAULT_K, DEFAULT_TEMPERATURE, build_group
from .question_pipeline import (
    Rejection,
    TriagePanel,
    rewrite_open,
    traces_to_sft,
    triage_difficulty,
    word_count,
)
from .records import (
    DialogueRecord,
    EvalItem,
    FoundryItem,
    OpenQuestion,
    QuestionSeed,
    ReasoningTrace,
    RecordError,
    RecordWriter,
    RewardEvent,
    canonical_json,
    read_records,
)
from .review import ReviewStore


class UsageError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the CLI contract wants 1
    def error(self, message: str):
        raise UsageError(message)


DEFAULTS = {
    "k": DEFAULT_K,
    "temperature": DEFAULT_TEMPERATURE,
    "budget": 4,
    "easy_fraction": 0.1,
    "tau": DEFAULT_TAU,
    "epsilon": mixer.DEFAULT_FLOOR,
    "eta": mixer.DEFAULT_ETA,
}


def load_config(path: str | None) -> dict:
    if not path:
        return {"backends": [], "templates_dir": "", "defaults": dict(DEFAULTS), "service": {}}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    defaults = dict(DEFAULTS)
    defaults.update(raw.get("defaults", {}))
    raw["defaults"] = defaults
    service = raw.get("service", {})
    port = service.get("port", 8000)
    if not isinstance(port, int) or not 1 <= port <= 65535:
        raise ConfigError(f"service.port must be in [1, 65535], got {port!r}")
    return raw


def config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def build_gateway(config: dict, needed_backends: Sequence[str]) -> Gateway:
    gw = load_gateway(config)
    for backend_id in needed_backends:
        try:
            gw.backend(backend_id)
        except GatewayError as exc:
            # a dangling backend reference is a config invariant, not a runtime failure
            raise ConfigError(str(exc)) from exc
    return gw


def write_manifest(out_path: str, command: str, config: dict, counts: dict, seed: int | None, inputs: dict, status: str = "ok", extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "inputs": inputs,
        "config_digest": config_digest(config),
        "counts": counts,
        "seed": seed,
        "status": status,
        "finished_ms": int(time.time() * 1000),
    }
    if extra:
        manifest.update(extra)
    Path(out_path + ".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_rejects(out: str, rejections: list) -> int:
    if not rejections:
        return 0
    with RecordWriter(out + ".rejects.jsonl") as writer:
        for rejection in rejections:
            writer.write(rejection.to_dict() if hasattr(rejection, "to_dict") else rejection)
    return len(rejections)


def _parallel_map(items: Iterable[Any], fn: Callable[[Any], Any], jobs: int) -> Iterator[Any]:
    """Apply fn over items with a bounded worker pool; results come back in
    input order so outputs stay stable. jobs=1 is a plain loop (the only
    reproducible mode for ordinal-scripted mock backends)."""
    if jobs <= 1:
        for item in items:
            yield fn(item)
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, item) for item in items]
        for future in futures:
            yield future.result()


# -- subcommands ---------------------------------------------------------------


def cmd_rewrite(args: argparse.Namespace, config: dict) -> int:
    gw = build_gateway(config, [args.backend])
    seeds = sorted(read_records(args.seeds, QuestionSeed), key=lambda s: s.id)
    rejections: list[Rejection] = []
    counts = {"in": len(seeds), "out": 0}
    status = "failed"
    try:
        with RecordWriter(args.out) as writer:
            for result in _parallel_map(seeds, lambda seed: rewrite_open(gw, args.backend, seed), args.jobs):
                if isinstance(result, Rejection):
                    rejections.append(result)
                else:
                    writer.write(result)
                    counts["out"] += 1
        status = "ok"
    finally:
        counts["rejected"] = _write_rejects(args.out, rejections)
        write_manifest(args.out, "rewrite", config, counts, args.seed, {"seeds": args.seeds}, status=status)
    return 0


def cmd_triage(args: argparse.Namespace, config: dict) -> int:
    members = [m for m in args.panel.split(",") if m]
    gw = build_gateway(config, members)
    panel = TriagePanel(member_backend_ids=tuple(members))
    seeds = sorted(read_records(args.seeds, QuestionSeed), key=lambda s: s.id)
    counts = {"in": len(seeds), "easy": 0, "hard": 0}
    status = "failed"
    try:
        with RecordWriter(args.out) as writer:
            results = _parallel_map(seeds, lambda seed: (seed, triage_difficulty(gw, seed, panel)), args.jobs)
            for seed, result in results:
                counts[result.difficulty] += 1
                writer.write(
                    QuestionSeed(
                        id=seed.id,
                        source=seed.source,
                        stem=seed.stem,
                        options=seed.options,
                        correct_label=seed.correct_label,
                        ground_truth=seed.ground_truth,
                        difficulty=result.difficulty,
                    )
                )
        status = "ok"
    finally:
        write_manifest(args.out, "triage", config, counts, args.seed, {"seeds": args.seeds, "panel": members}, status=status)
    return 0


def cmd_synth(args: argparse.Namespace, config: dict) -> int:
    gw = build_gateway(config, [args.reasoning_backend, args.reflection_backend])
    loop_config = LoopConfig(
        reasoning_backend_id=args.reasoning_backend,
        reflection_backend_id=args.reflection_backend,
        gt_guided=args.gt_guided,
        max_iterations=args.budget if args.budget is not None else int(config["defaults"]["budget"]),
    )
    seeds = list(read_records(args.seeds, QuestionSeed))
    opens = {}
    if args.open:
        opens = {o.seed_id: o for o in read_records(args.open, OpenQuestion)}
    counts = {"in": len(seeds), "out": 0, "diagnosed": 0}
    status = "failed"

    def run_one(seed):
        # one engine per task: loop state is single-threaded by design
        return DualExpertEngine(gw, loop_config).run_loop(seed, opens.get(seed.id))

    try:
        with RecordWriter(args.out) as writer:
            for trace in _parallel_map(seeds, run_one, args.jobs):
                writer.write(trace)
                counts["out"] += 1
                counts["diagnosed"] += int(trace.termination == "diagnosed")
        status = "ok"
    finally:
        write_manifest(
            args.out,
            "synth",
            config,
            counts,
            args.seed,
            {"seeds": args.seeds, "open": args.open or ""},
            status=status,
            extra={"gt_guided": args.gt_guided, "budget": loop_config.max_iterations},
        )
    return 0


def cmd_narrate(args: argparse.Namespace, config: dict) -> int:
    # wraps the narrate+filter+emit chain; emit-sft re-reads its output
    gw = build_gateway(config, [args.backend])
    seeds = {s.id: s for s in read_records(args.seeds, QuestionSeed)}
    opens = {o.seed_id: o for o in read_records(args.open, OpenQuestion)}
    traces = sorted(read_records(args.traces, ReasoningTrace), key=lambda t: t.seed_id)
    counts = {"in": len(traces), "out": 0, "rejected": 0}
    rejections: list[Rejection] = []
    think_words: list[int] = []
    status = "failed"
    try:
        with RecordWriter(args.out) as writer:
            per_trace = _parallel_map(
                traces, lambda trace: traces_to_sft(gw, args.backend, seeds, opens, [trace]), args.jobs
            )
            for outcome in per_trace:
                rejections.extend(outcome.rejections)
                for record in outcome.records:
                    writer.write(record)
                    think_words.append(word_count(record.think))
                    counts["out"] += 1
        status = "ok"
    finally:
        counts["rejected"] = _write_rejects(args.out, rejections)
        mean_words = round(sum(think_words) / len(think_words), 2) if think_words else 0.0
        write_manifest(
            args.out,
            "narrate",
            config,
            counts,
            args.seed,
            {"traces": args.traces, "seeds": args.seeds, "open": args.open},
            status=status,
            extra={"mean_think_words": mean_words},
        )
    return 0


def cmd_emit_sft(args: argparse.Namespace, config: dict) -> int:
    # the narrate stage already emits full SftRecords; this pass re-validates
    # them record by record and rewrites canonically
    records = list(read_records(args.records, "sft"))
    counts = {"in": len(records), "out": len(records)}
    with RecordWriter(args.out) as writer:
        for record in records:
            writer.write(record)
    write_manifest(args.out, "emit-sft", config, counts, None, {"records": args.records})
    return 0


def cmd_prefs(args: argparse.Namespace, config: dict) -> int:
    gw = build_gateway(config, [args.backend, args.judge])
    seeds = list(read_records(args.seeds, QuestionSeed))
    opens = {}
    if args.open:
        opens = {o.seed_id: o for o in read_records(args.open, OpenQuestion)}
    k = args.k if args.k is not None else int(config["defaults"]["k"])
    temperature = args.temperature if args.temperature is not None else float(config["defaults"]["temperature"])
    counts = {"in": len(seeds), "out": 0, "skipped": 0}
    skipped = []
    status = "failed"

    def run_group(seed):
        open_input = opens[seed.id].open_stem if seed.id in opens else seed.stem
        return build_group(
            gw, seed, open_input, args.backend, args.judge, k=k, temperature=temperature, seed_value=args.seed
        )

    try:
        with RecordWriter(args.out) as writer:
            for outcome in _parallel_map(seeds, run_group, args.jobs):
                if outcome.record is None:
                    counts["skipped"] += 1
                    skipped.append({"seed_id": outcome.seed_id, "reason": outcome.skipped_reason, "warnings": outcome.warnings})
                else:
                    writer.write(outcome.record)
                    counts["out"] += 1
        status = "ok"
    finally:
        _write_rejects(args.out, skipped)
        write_manifest(args.out, "prefs", config, counts, args.seed, {"seeds": args.seeds}, status=status, extra={"k": k, "temperature": temperature})
    return 0


def cmd_mix(args: argparse.Namespace, config: dict) -> int:
    events = list(read_records(args.events, RewardEvent))
    if args.sources:
        sources = [s for s in args.sources.split(",") if s]
    else:
        sources = sorted({e.source_id for e in events})
    epsilon = args.epsilon if args.epsilon is not None else float(config["defaults"]["epsilon"])
    eta = args.eta if args.eta is not None else float(config["defaults"]["eta"])
    try:
        state = mixer.init_mixer(sources, floor=epsilon, eta=eta)
        vectors = mixer.schedule(state, events, args.phase_len, pre_normalized=args.pre_normalized)
    except mixer.MixerError as exc:
        raise UsageError(str(exc)) from exc
    counts = {"events": len(events), "phases": len(vectors)}
    with RecordWriter(args.out) as writer:
        for i, vector in enumerate(vectors):
            writer.write({"phase": i, "ratios": vector})
    write_manifest(args.out, "mix", config, counts, None, {"events": args.events}, extra={"epsilon": epsilon, "eta": eta, "phase_len": args.phase_len})
    return 0


def cmd_foundry_build(args: argparse.Namespace, config: dict) -> int:
    gw = build_gateway(config, [args.emr_backend, args.question_backend])
    dialogues = list(read_records(args.dialogues, DialogueRecord))
    vocabulary = load_vocabulary(args.vocab)
    tau = args.tau if args.tau is not None else float(config["defaults"]["tau"])
    outcome = build_items(
        gw,
        args.emr_backend,
        args.question_backend,
        dialogues,
        vocabulary,
        tau=tau,
        rng_seed=args.seed,
        key_nota=args.key_nota,
    )
    counts = {
        "in": len(dialogues),
        "out": len(outcome.items),
        "deduped": len(outcome.dropped_duplicates),
        "rejected": len(outcome.rejections),
    }
    with RecordWriter(args.out) as writer:
        for item in outcome.items:
            writer.write(item)
    _write_rejects(args.out, outcome.rejections)
    write_manifest(
        args.out,
        "foundry build",
        config,
        counts,
        args.seed,
        {"dialogues": args.dialogues, "vocab": args.vocab},
        extra={"tau": tau, "dropped_duplicates": outcome.dropped_duplicates},
    )
    return 0


def cmd_stats(args: argparse.Namespace, config: dict) -> int:
    items = list(read_records(args.items, FoundryItem))
    stats = compute_stats(items)
    text = json.dumps(stats, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        write_manifest(args.out, "stats", config, {"items": len(items)}, None, {"items": args.items})
    print(text)
    return 0


def cmd_eval(args: argparse.Namespace, config: dict) -> int:
    gw = build_gateway(config, [args.backend])
    items = list(read_records(args.items, EvalItem))
    if not items:
        raise UsageError(f"no eval items in {args.items}")
    result = evaluate(gw, args.backend, items)
    Path(args.out).write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    write_manifest(
        args.out,
        "eval",
        config,
        {"items": result.n_items, "correct": result.n_correct},
        None,
        {"items": args.items},
        extra={"accuracy": result.accuracy},
    )
    return 0


def cmd_report(args: argparse.Namespace, config: dict) -> int:
    results = []
    for path in args.results:
        with open(path, "r", encoding="utf-8") as fh:
            results.append(EvalResult.from_dict(json.load(fh)))
    table = render_report(results)
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
        write_manifest(args.out, "report", config, {"results": len(results)}, None, {"results": args.results})
    print(table, end="")
    return 0


def cmd_serve(args: argparse.Namespace, config: dict) -> int:
    import uvicorn

    from .service import create_app

    items = list(read_records(args.items, FoundryItem)) if args.items else []
    reviewers = config.get("reviewers") or {}
    store = ReviewStore(items=items, reviewers=reviewers)
    app = create_app(store)
    service = config.get("service", {})
    host = args.host or service.get("bind", "127.0.0.1")
    port = args.port or service.get("port", 8000)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


# -- parser ---------------------------------------------------------------------


def _add_worker_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="sampling seed, recorded in the manifest")
    p.add_argument("--jobs", type=int, default=1, help="worker threads; keep 1 for scripted-mock reproducibility")


def build_parser() -> _Parser:
    parser = _Parser(prog="forge", description="training-data foundry and evaluation toolkit")
    parser.add_argument("--config", default="", help="path to forge.json")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("rewrite", help="closed seeds -> open questions")
    p.add_argument("--seeds", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backend", required=True)
    _add_worker_flags(p)

    p = sub.add_parser("triage", help="label seeds easy/hard via a model panel")
    p.add_argument("--seeds", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--panel", required=True, help="comma-separated backend ids")
    _add_worker_flags(p)

    p = sub.add_parser("synth", help="run the dual-expert loop over seeds")
    p.add_argument("--seeds", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--open", default="", help="open questions JSONL (optional)")
    p.add_argument("--reasoning-backend", required=True)
    p.add_argument("--reflection-backend", required=True)
    p.add_argument("--gt-guided", action="store_true")
    p.add_argument("--budget", type=int, default=None, help="max loop iterations")
    _add_worker_flags(p)

    p = sub.add_parser("narrate", help="traces -> first-person SFT records")
    p.add_argument("--traces", required=True)
    p.add_argument("--seeds", required=True)
    p.add_argument("--open", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backend", required=True)
    _add_worker_flags(p)

    p = sub.add_parser("emit-sft", help="re-validate and canonicalize SFT records")
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("prefs", help="rejection-sampled preference pairs")
    p.add_argument("--seeds", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--open", default="")
    p.add_argument("--backend", required=True, help="sampling backend id")
    p.add_argument("--judge", required=True, help="judge backend id")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--temperature", type=float, default=None)
    _add_worker_flags(p)

    p = sub.add_parser("mix", help="bandit ratio schedule from reward events")
    p.add_argument("--events", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--phase-len", type=int, required=True)
    p.add_argument("--sources", default="", help="comma-separated; default: inferred")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--pre-normalized", action="store_true", help="event rewards are already in [0, 1]")

    p_foundry = sub.add_parser("foundry", help="benchmark foundry")
    foundry_sub = p_foundry.add_subparsers(dest="foundry_command")
    p = foundry_sub.add_parser("build", help="dialogues -> 21-option items")
    p.add_argument("--dialogues", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emr-backend", required=True)
    p.add_argument("--question-backend", required=True)
    p.add_argument("--key-nota", action="store_true", help="withhold the diagnosis so index 20 is the keyed answer")

    p = sub.add_parser("stats", help="demographics for built items")
    p.add_argument("--items", required=True)
    p.add_argument("--out", default="")

    p = sub.add_parser("eval", help="accuracy of a backend on eval items")
    p.add_argument("--items", required=True)
    p.add_argument("--backend", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="markdown table over eval results")
    p.add_argument("--results", nargs="+", required=True)
    p.add_argument("--out", default="")

    p = sub.add_parser("serve", help="run the review REST service")
    p.add_argument("--items", default="")
    p.add_argument("--host", default="")
    p.add_argument("--port", type=int, default=0)

    return parser


_HANDLERS = {
    "rewrite": cmd_rewrite,
    "triage": cmd_triage,
    "synth": cmd_synth,
    "narrate": cmd_narrate,
    "emit-sft": cmd_emit_sft,
    "prefs": cmd_prefs,
    "mix": cmd_mix,
    "stats": cmd_stats,
    "eval": cmd_eval,
    "report": cmd_report,
    "serve": cmd_serve,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return 1
        config = load_config(args.config)
        if args.command == "foundry":
            if getattr(args, "foundry_command", None) != "build":
                parser.print_usage(sys.stderr)
                return 1
            return cmd_foundry_build(args, config)
        return _HANDLERS[args.command](args, config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (ConfigError, RecordError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except GatewayError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(run())
