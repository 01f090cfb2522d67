"""Command-line front end: scene synthesis, generation, validation, stats."""
from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, RunConfig, load_config, parse_mix
from .qagen import (TaskKind, generate_dataset, read_jsonl, validate_dataset)
from .synth import generate_scene, load_scene, save_scene

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_SHORTFALL = 3

# Payload fields worth histogramming: bounded categorical outcomes only.
_OUTCOME_FIELDS = ("trend", "verdict", "direction", "same", "changed",
                   "moved", "hand_a1", "hand_ak", "dir_a1", "dir_ak",
                   "dir_1", "dir_2", "instruction", "answer")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; we reserve 2 for data."""

    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="rea-forge",
                     description="Synthetic scene and spatial QA tooling.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="emit synthetic scene files")
    p_synth.add_argument("--config", type=Path)
    p_synth.add_argument("--seed", type=int)
    p_synth.add_argument("--count", type=int)
    p_synth.add_argument("--out", type=Path)

    p_gen = sub.add_parser("generate", help="emit a JSONL QA dataset")
    p_gen.add_argument("--config", type=Path)
    p_gen.add_argument("--n", type=int)
    p_gen.add_argument("--seed", type=int)
    p_gen.add_argument("--mix", type=str)
    p_gen.add_argument("--out", type=Path)
    p_gen.add_argument("--scene", type=Path, action="append", default=None)

    p_val = sub.add_parser("validate", help="check a JSONL dataset")
    p_val.add_argument("input", type=Path)

    p_stats = sub.add_parser("stats", help="per-task counts and histograms")
    p_stats.add_argument("input", type=Path)

    return parser


def _load_base_config(args) -> RunConfig:
    if getattr(args, "config", None) is not None:
        return load_config(args.config)
    return RunConfig()


def _log_config(cfg: RunConfig) -> None:
    print("config: " + json.dumps(cfg.effective_dict(), sort_keys=True),
          file=sys.stderr)


def _threads_from_env() -> int:
    raw = os.environ.get("REA_FORGE_THREADS")
    if raw is None:
        return 0
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"REA_FORGE_THREADS must be an integer, got {raw!r}")
    if value < 1:
        raise ConfigError("REA_FORGE_THREADS must be >= 1")
    return value


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.tmp-{os.getpid()}")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


def _cmd_synth(args) -> int:
    cfg = _load_base_config(args)
    if args.seed is not None:
        cfg.synth = replace(cfg.synth, seed=args.seed)
    if args.count is not None:
        if args.count < 1:
            raise ConfigError("--count must be >= 1")
        cfg.scene_count = args.count
    if args.out is not None:
        cfg.out = args.out
    if cfg.out is None:
        raise ConfigError("synth needs an output directory (--out)")
    _log_config(cfg)
    out_dir = cfg.out
    out_dir.mkdir(parents=True, exist_ok=True)
    for i in range(cfg.scene_count):
        scene = generate_scene(replace(cfg.synth, seed=cfg.synth.seed + i))
        path = out_dir / f"{scene.scene_id}.json"
        save_scene(scene, path)
        print(path)
    return EXIT_OK


def _resolve_scenes(cfg: RunConfig):
    if cfg.scene_paths:
        scenes = []
        for path in cfg.scene_paths:
            try:
                scenes.append(load_scene(path))
            except (OSError, ValueError) as exc:
                raise ConfigError(f"cannot load scene {path}: {exc}") from None
        return scenes
    # No scene files given: fall back to deterministic built-in demo scenes.
    return [generate_scene(replace(cfg.synth, seed=cfg.synth.seed + i))
            for i in range(cfg.scene_count)]


def _cmd_generate(args) -> int:
    cfg = _load_base_config(args)
    if args.n is not None:
        if args.n < 0:
            raise ConfigError("--n must be >= 0")
        cfg.n = args.n
    if args.seed is not None:
        cfg.seed = args.seed
    if args.mix is not None:
        cfg.mix = parse_mix(args.mix)
    if args.out is not None:
        cfg.out = args.out
    if args.scene:
        cfg.scene_paths = list(args.scene)
    env_threads = _threads_from_env()
    if env_threads:
        cfg.threads = env_threads
    _log_config(cfg)

    scenes = _resolve_scenes(cfg)
    result = generate_dataset(scenes, cfg.n, mix=cfg.mix, seed=cfg.seed,
                              params=cfg.params, threads=cfg.threads)
    from .qagen import dumps_jsonl
    text = dumps_jsonl(result.records)
    if cfg.out is not None:
        _atomic_write(cfg.out, text)
    else:
        sys.stdout.write(text)
    report = result.report
    print(f"generated {sum(report.generated.values())}"
          f"/{sum(report.requested.values())} records", file=sys.stderr)
    if not report.ok:
        for short in report.shortfalls:
            print(f"shortfall: {short.task.value} record {short.record_index} "
                  f"after {short.attempts} attempts: {short.last_error}",
                  file=sys.stderr)
        return EXIT_SHORTFALL
    return EXIT_OK


def _read_dataset(path: Path):
    if not path.exists():
        raise ConfigError(f"no such file: {path}")
    return read_jsonl(path)


def _cmd_validate(args) -> int:
    _log_config(RunConfig())
    records, parse_errors = _read_dataset(args.input)
    for lineno, message in parse_errors:
        print(f"line {lineno}: {message}")
    report = validate_dataset(records)
    for issue in report.issues:
        print(f"{issue.record_id}: {issue.problem}")
    failures = len(parse_errors) + len(report.issues)
    if failures:
        print(f"FAILED: {failures} issue(s) across {report.total} parsed "
              f"record(s)")
        return EXIT_INVALID
    print(f"OK: {report.total} record(s)")
    return EXIT_OK


def _cmd_stats(args) -> int:
    _log_config(RunConfig())
    records, parse_errors = _read_dataset(args.input)
    tasks = Counter(record.task.value for record in records)
    kinds = Counter(record.relation_payload.get("kind", "?")
                    for record in records)
    scenes = Counter(record.scene_id for record in records)
    fields: dict = {}
    for record in records:
        payload = record.relation_payload
        kind = payload.get("kind", "?")
        for name in _OUTCOME_FIELDS:
            if name not in payload:
                continue
            bucket = fields.setdefault(kind, {}).setdefault(name, Counter())
            bucket[str(payload[name])] += 1
    stats = {
        "total": len(records),
        "parse_errors": len(parse_errors),
        "tasks": {task.value: tasks.get(task.value, 0) for task in TaskKind},
        "kinds": dict(sorted(kinds.items())),
        "scenes": dict(sorted(scenes.items())),
        "payload_fields": {
            kind: {name: dict(sorted(counter.items()))
                   for name, counter in sorted(per_kind.items())}
            for kind, per_kind in sorted(fields.items())
        },
    }
    json.dump(stats, sys.stdout, indent=2, sort_keys=False)
    sys.stdout.write("\n")
    return EXIT_INVALID if parse_errors else EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "synth": _cmd_synth,
            "generate": _cmd_generate,
            "validate": _cmd_validate,
            "stats": _cmd_stats,
        }[args.command]
        return handler(args)
    except (_UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
