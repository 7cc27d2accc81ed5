"""Command-line front end: ``python -m vosmem <command> ...``."""
from __future__ import annotations

import argparse
import logging
import logging.config
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional, Sequence

from vosmem import __version__
from vosmem.config import RunConfig, config_digest, load_config, read_manifest, validate_config
from vosmem.crud import create_run, list_runs, update_run_status
from vosmem.database import DATABASE_URL, get_session, init_db, make_engine
from vosmem.errors import CommandResult, OutputError, UsageError, handle_return_or_raise
from vosmem.harness import bench, run_seeds, sweep
from vosmem.models import CommandEnum, RunRecord, RunStatusEnum, SweepAxisEnum
from vosmem.oracles import OracleCheckReport, run_oracle_checks
from vosmem.reporting import (
    RunManifest,
    write_bench_csv,
    write_frame_csv,
    write_manifest,
    write_summary_csv,
    write_sweep_csv,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(levelname)-5.5s [%(name)s] %(message)s"
LOGGING_INI = Path(__file__).resolve().parent.parent / "logging.ini"


def configure_logging(level: Optional[str] = None) -> None:
    ini = Path(os.environ.get("VOSMEM_LOGGING_INI", LOGGING_INI))
    if ini.is_file():
        logging.config.fileConfig(ini, disable_existing_loggers=False)
    else:
        logging.basicConfig(format=LOG_FORMAT, stream=sys.stderr)
    if level:
        logging.getLogger().setLevel(level.upper())


def _int_list(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _load(config_path: str) -> tuple[RunConfig, dict]:
    """Config plus the manifest it came from (empty for YAML files)."""
    path = Path(config_path)
    if path.suffix == ".json":
        manifest = read_manifest(path)
        return validate_config(manifest["config"], source=str(path)), manifest
    return load_config(path), {}


def _resolve_seeds(config: RunConfig, seeds: Optional[Sequence[int]]) -> RunConfig:
    if seeds is None:
        return config
    if not seeds:
        raise UsageError("--seeds needs at least one seed")
    data = config.model_dump(mode="json")
    data["seeds"] = list(seeds)
    return validate_config(data, source="--seeds")


def _out_dir(out: str) -> Path:
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory {path}: {e}") from e
    return path


@contextmanager
def recorded_run(registry: Optional[str], command: CommandEnum, config: RunConfig,
                 out_dir: Path) -> Iterator[dict]:
    """Track the run in the registry; callers may set ``outcome["mean_jf"]``."""
    outcome: dict = {"mean_jf": None}
    if not registry:
        yield outcome
        return
    engine = make_engine(registry)
    init_db(engine)
    with get_session(engine) as session:
        run = create_run(session, command, config_digest(config), config.seeds, __version__, str(out_dir))
    try:
        yield outcome
    except Exception:
        with get_session(engine) as session:
            update_run_status(session, run.id, RunStatusEnum.FAILED)
        raise
    with get_session(engine) as session:
        update_run_status(session, run.id, RunStatusEnum.SUCCEEDED, outcome["mean_jf"])


def _manifest(command: CommandEnum, config: RunConfig, outputs: dict[str, Path], **extra) -> RunManifest:
    return RunManifest(
        command=command.value,
        config_digest=config_digest(config),
        seeds=config.seeds,
        outputs={name: path.name for name, path in outputs.items()},
        config=config.model_dump(mode="json"),
        **extra,
    )


@handle_return_or_raise
def cmd_simulate(config_path: str, out: str, seeds: Optional[Sequence[int]] = None,
                 workers: Optional[int] = None, registry: Optional[str] = None) -> RunManifest:
    config, _ = _load(config_path)
    config = _resolve_seeds(config, seeds)
    out_dir = _out_dir(out)
    with recorded_run(registry, CommandEnum.SIMULATE, config, out_dir) as outcome:
        results = dict(zip(config.seeds, run_seeds(config, workers=workers)))
        outputs = {f"frames_seed{seed}": write_frame_csv(out_dir / f"frames_seed{seed}.csv", result)
                   for seed, result in sorted(results.items())}
        outputs["summary"] = write_summary_csv(out_dir / "summary.csv", results)
        manifest = _manifest(CommandEnum.SIMULATE, config, outputs)
        write_manifest(out_dir / "manifest.json", manifest)
        outcome["mean_jf"] = sum(r.mean_jf for r in results.values()) / len(results)
    logger.info("simulate: %d seed(s), mean J&F %.4f -> %s", len(results), outcome["mean_jf"], out_dir)
    return manifest


@handle_return_or_raise
def cmd_sweep(config_path: str, out: str, axis: Optional[str] = None, values: Optional[Sequence[str]] = None,
              seeds: Optional[Sequence[int]] = None, workers: Optional[int] = None,
              registry: Optional[str] = None) -> RunManifest:
    config, previous = _load(config_path)
    axis = axis or previous.get("axis")
    values = values if values is not None else previous.get("values")
    if not axis:
        raise UsageError("sweep needs --axis")
    if not values:
        raise UsageError("sweep needs a nonempty --values list")
    config = _resolve_seeds(config, seeds)
    out_dir = _out_dir(out)
    with recorded_run(registry, CommandEnum.SWEEP, config, out_dir):
        rows = sweep(axis, values, config, workers=workers)
        outputs = {"sweep": write_sweep_csv(out_dir / "sweep.csv", rows)}
        manifest = _manifest(CommandEnum.SWEEP, config, outputs, axis=rows[0].axis,
                             values=[str(v) for v in values])
        write_manifest(out_dir / "manifest.json", manifest)
    return manifest


@handle_return_or_raise
def cmd_bench(config_path: str, out: str, frames: Optional[Sequence[int]] = None,
              registry: Optional[str] = None) -> RunManifest:
    config, previous = _load(config_path)
    frames = frames if frames is not None else previous.get("frame_counts")
    if not frames:
        raise UsageError("bench needs --frames")
    out_dir = _out_dir(out)
    with recorded_run(registry, CommandEnum.BENCH, config, out_dir):
        rows = bench(config, frames)
        outputs = {"bench": write_bench_csv(out_dir / "bench.csv", rows)}
        manifest = _manifest(CommandEnum.BENCH, config, outputs, frame_counts=list(frames))
        write_manifest(out_dir / "manifest.json", manifest)
    return manifest


@handle_return_or_raise
def cmd_check_metrics(cases: int = 500, reads: int = 200, seed: int = 0) -> OracleCheckReport:
    return run_oracle_checks(cases, reads, seed)


@handle_return_or_raise
def cmd_runs(registry: str = DATABASE_URL, command: Optional[str] = None) -> list[RunRecord]:
    engine = make_engine(registry)
    init_db(engine)
    with get_session(engine) as session:
        return list_runs(session, CommandEnum(command) if command else None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vosmem", description="Quality-aware memory engine experiments")
    parser.add_argument("--log-level", default=None, help="override the root log level, e.g. DEBUG")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    def with_run_flags(sub: argparse.ArgumentParser) -> argparse.ArgumentParser:
        sub.add_argument("--config", required=True, help="YAML config or a manifest.json to replay")
        sub.add_argument("--out", required=True, help="output directory, created if missing")
        sub.add_argument("--registry", default=None, help="SQLAlchemy URL of the run registry")
        return sub

    simulate = with_run_flags(commands.add_parser("simulate", help="run episodes and write per-frame CSV"))
    simulate.add_argument("--seeds", type=_int_list, default=None)
    simulate.add_argument("--workers", type=int, default=None)

    sweep_parser = with_run_flags(commands.add_parser("sweep", help="sweep one policy axis"))
    sweep_parser.add_argument("--axis", choices=[a.value for a in SweepAxisEnum], default=None)
    sweep_parser.add_argument("--values", type=_str_list, default=None, help="e.g. 0,0.4,0.8,0.95")
    sweep_parser.add_argument("--seeds", type=_int_list, default=None)
    sweep_parser.add_argument("--workers", type=int, default=None)

    bench_parser = with_run_flags(commands.add_parser("bench", help="latency and occupancy per frame bucket"))
    bench_parser.add_argument("--frames", type=_int_list, default=None, help="e.g. 600,2000")

    check = commands.add_parser("check-metrics", help="cross-check J, F and the memory read against oracles")
    check.add_argument("--cases", type=int, default=500)
    check.add_argument("--reads", type=int, default=200)
    check.add_argument("--seed", type=int, default=0)

    runs = commands.add_parser("runs", help="list runs recorded in the registry")
    runs.add_argument("--registry", default=DATABASE_URL)
    runs.add_argument("--command", dest="filter_command", choices=[c.value for c in CommandEnum], default=None)
    return parser


def dispatch(args: argparse.Namespace) -> CommandResult:
    if args.command == "simulate":
        return cmd_simulate(args.config, args.out, args.seeds, args.workers, args.registry)
    if args.command == "sweep":
        return cmd_sweep(args.config, args.out, args.axis, args.values, args.seeds, args.workers, args.registry)
    if args.command == "bench":
        return cmd_bench(args.config, args.out, args.frames, args.registry)
    if args.command == "check-metrics":
        return cmd_check_metrics(args.cases, args.reads, args.seed)
    return cmd_runs(args.registry, args.filter_command)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    result = dispatch(args)
    if result.error_code:
        print(f"error {result.error_code}: {result.error_message}", file=sys.stderr)
        return result.error_code
    if isinstance(result.data, RunManifest):
        print(f"{result.data.command} done, config {result.data.config_digest[:12]}")
    elif isinstance(result.data, list):
        for record in result.data:
            print(record)
    elif result.data is not None:
        print(result.data.model_dump_json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
