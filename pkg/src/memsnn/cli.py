"""Command-line front end.

Subcommands:
  run     sweep synapse kinds over repeats and write CSV reports
  replay  re-run one saved genome with a per-step trajectory dump
  trace   re-run one saved genome and dump synapse activity per robot step

Values resolve as flags > config file > defaults; ``--override key=value``
adjusts any documented constant (see ``memsnn run --list-overrides``).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .config import DEFAULT_SETTINGS, OVERRIDABLE_KEYS, Settings
from .evolve import genome_from_json
from .lab import (ExperimentConfig, format_summary_table,
                  generation_csv_lines, run_experiment, summary_csv_lines,
                  ttest_csv_lines)
from .tasks import replay_trial

VALID_KINDS = ("unipolar", "bipolar", "constant")
DEFAULT_GENERATIONS = {"phototaxis": 1000, "tmaze": 500}
DEFAULT_REPEATS = 30


class UsageError(Exception):
    """Configuration problem; the message names the offending key."""


@dataclass
class RunConfig:
    task: str
    kinds: tuple[str, ...]
    generations: int
    repeats: int
    seed: int
    outdir: str
    workers: int = 1
    dry_run: bool = False
    trace_trajectories: bool = False
    overrides: dict[str, float] = field(default_factory=dict)
    config_path: str | None = dataclasses.field(default=None, compare=False)

    def settings(self) -> Settings:
        try:
            return DEFAULT_SETTINGS.with_overrides(self.overrides)
        except KeyError as exc:
            raise UsageError(f"unknown override key: {exc.args[0]}") from exc


def _parse_override(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise UsageError(f"override must look like key=value, got {text!r}")
    key, _, value = text.partition("=")
    key = key.strip()
    try:
        return key, float(value)
    except ValueError as exc:
        raise UsageError(f"override {key}: not a number: {value!r}") from exc


def _read_config_file(path: str) -> dict[str, str]:
    """Flat key=value lines; '#' starts a comment; blank lines ignored."""
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


_FILE_KEYS = ("task", "synapse", "generations", "repeats", "seed", "outdir",
              "workers", "override")


def parse_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags, the optional config file, and defaults into a RunConfig."""
    file_values: dict[str, str] = {}
    if args.config:
        file_values = _read_config_file(args.config)
        for key in file_values:
            if key not in _FILE_KEYS:
                raise UsageError(f"unknown config file key: {key}")

    def pick(flag_value, key, fallback):
        if flag_value is not None:
            return flag_value
        if key in file_values:
            return file_values[key]
        return fallback

    task = pick(args.task, "task", None)
    if task is None:
        raise UsageError("task is required (phototaxis or tmaze)")
    if task not in ("phototaxis", "tmaze"):
        raise UsageError(f"task: unknown value {task!r}")

    if args.synapse:
        kinds = tuple(args.synapse)
    elif "synapse" in file_values:
        kinds = tuple(k.strip() for k in file_values["synapse"].split(",")
                      if k.strip())
    else:
        kinds = VALID_KINDS
    for kind in kinds:
        if kind not in VALID_KINDS:
            raise UsageError(f"synapse: unknown kind {kind!r}")

    def pick_int(flag_value, key, fallback, minimum, name):
        raw = pick(flag_value, key, fallback)
        try:
            value = int(raw)
        except (TypeError, ValueError):
            raise UsageError(f"{name}: expected an integer, got {raw!r}")
        if value < minimum:
            raise UsageError(f"{name}: must be >= {minimum}, got {value}")
        return value

    generations = pick_int(args.generations, "generations",
                           DEFAULT_GENERATIONS[task], 1, "generations")
    repeats = pick_int(args.repeats, "repeats", DEFAULT_REPEATS, 1, "repeats")
    seed = pick_int(args.seed, "seed", 1, 0, "seed")
    workers = pick_int(args.workers, "workers", 1, 1, "workers")

    outdir = pick(args.outdir, "outdir",
                  os.environ.get("MEMSNN_OUTDIR", "memsnn-out"))

    overrides: dict[str, float] = {}
    if "override" in file_values:
        for item in file_values["override"].split(","):
            item = item.strip()
            if item:
                key, value = _parse_override(item)
                overrides[key] = value
    for item in args.override or ():
        key, value = _parse_override(item)
        overrides[key] = value
    for key in overrides:
        if key not in OVERRIDABLE_KEYS:
            raise UsageError(f"unknown override key: {key}")

    return RunConfig(task=task, kinds=kinds, generations=generations,
                     repeats=repeats, seed=seed, outdir=str(outdir),
                     workers=workers, dry_run=bool(args.dry_run),
                     trace_trajectories=bool(args.trace_trajectories),
                     overrides=overrides, config_path=args.config)


def config_echo_lines(cfg: RunConfig) -> list[str]:
    lines = [f"task={cfg.task}",
             f"synapse={','.join(cfg.kinds)}",
             f"generations={cfg.generations}",
             f"repeats={cfg.repeats}",
             f"seed={cfg.seed}",
             f"outdir={cfg.outdir}",
             f"workers={cfg.workers}"]
    if cfg.overrides:
        body = ",".join(f"{k}={v!r}" for k, v in sorted(cfg.overrides.items()))
        lines.append(f"override={body}")
    return lines


def _write_lines(path: Path, lines: list[str]) -> None:
    """Write atomically; an interrupted run leaves only a .partial file."""
    partial = path.with_name(path.name + ".partial")
    partial.write_text("\n".join(lines) + "\n", encoding="utf-8")
    partial.rename(path)


def cmd_run(cfg: RunConfig) -> int:
    settings = cfg.settings()
    if cfg.dry_run:
        print("config ok:")
        for line in config_echo_lines(cfg):
            print(f"  {line}")
        return 0
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    probe = outdir / ".write-probe"
    try:
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory not writable: {exc}",
              file=sys.stderr)
        return 1

    _write_lines(outdir / "config_echo.txt", config_echo_lines(cfg))
    experiment = ExperimentConfig(task=cfg.task, kinds=cfg.kinds,
                                  generations=cfg.generations,
                                  repeats=cfg.repeats, base_seed=cfg.seed,
                                  settings=settings, workers=cfg.workers)
    report = run_experiment(experiment)
    _write_lines(outdir / "generations.csv", generation_csv_lines(report))
    _write_lines(outdir / "summary.csv", summary_csv_lines(report))
    _write_lines(outdir / "ttests.csv", ttest_csv_lines(report))
    for kind in report.kinds:
        for rep in report.results[kind]:
            if rep.best_genome_json:
                _write_lines(outdir / f"best_genome_{kind}_{rep.repeat}.json",
                             [rep.best_genome_json])
    print(format_summary_table(report))
    return 0


def _load_genome(path: str):
    return genome_from_json(Path(path).read_text(encoding="utf-8"))


def _replay_common(args, columns: str, row_formatter) -> int:
    genome = _load_genome(args.genome)
    overrides = dict(_parse_override(item) for item in (args.override or ()))
    try:
        settings = DEFAULT_SETTINGS.with_overrides(overrides)
    except KeyError as exc:
        raise UsageError(f"unknown override key: {exc.args[0]}") from exc
    result, rows = replay_trial(genome, args.task, args.seed, settings)
    out_path = Path(args.out)
    lines = [columns] + [row_formatter(row) for row in rows]
    out_path.parent.mkdir(parents=True, exist_ok=True)
    _write_lines(out_path, lines)
    print(f"fitness={result.f!r} steps={result.st} solved={result.solved} "
          f"rows={len(rows)} -> {out_path}")
    return 0


def cmd_replay(args) -> int:
    return _replay_common(
        args, "robot_step,x,y,heading,action,f",
        lambda r: f"{r[0]},{r[1]!r},{r[2]!r},{r[3]!r},{r[4]},{r[5]!r}")


def cmd_trace(args) -> int:
    return _replay_common(
        args, "robot_step,avg_weight,total_switches",
        lambda r: f"{r[0]},{r[6]!r},{r[7]}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memsnn",
        description="Evolve spiking robot controllers with memristive "
                    "synapses on phototaxis and T-maze tasks.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment sweep")
    run.add_argument("--task", choices=("phototaxis", "tmaze"))
    run.add_argument("--synapse", action="append", choices=VALID_KINDS,
                     help="synapse kind to include (repeatable; default all)")
    run.add_argument("--generations", type=int)
    run.add_argument("--repeats", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--outdir")
    run.add_argument("--workers", type=int)
    run.add_argument("--config", help="key=value config file")
    run.add_argument("--override", action="append", metavar="KEY=VALUE",
                     help="adjust a documented constant (repeatable)")
    run.add_argument("--dry-run", action="store_true",
                     help="validate the configuration and exit")
    run.add_argument("--trace-trajectories", action="store_true",
                     help="also dump best-genome trajectories after the run")
    run.add_argument("--list-overrides", action="store_true",
                     help="print the overridable constants and exit")

    for name, helptext in (("replay", "trajectory dump for one genome"),
                           ("trace", "synapse activity dump for one genome")):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("genome", help="genome JSON file")
        cmd.add_argument("--task", choices=("phototaxis", "tmaze"),
                         required=True)
        cmd.add_argument("--seed", type=int, default=1)
        cmd.add_argument("--out", default=f"{name}.csv")
        cmd.add_argument("--override", action="append", metavar="KEY=VALUE")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            if args.list_overrides:
                defaults = DEFAULT_SETTINGS.as_dict()
                for key in OVERRIDABLE_KEYS:
                    print(f"{key}={defaults[key]!r}")
                return 0
            cfg = parse_config(args)
            cfg.settings()  # fail fast on bad override keys
            return cmd_run(cfg)
        if args.command == "replay":
            return cmd_replay(args)
        if args.command == "trace":
            return cmd_trace(args)
        parser.error(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def entry() -> None:
    sys.exit(main())
