"""``wavegrasp`` command line: train, eval, diagnose.

Exit codes: 0 success, 1 usage/configuration error, 2 runtime error.
Log verbosity comes from ``WAVEGRASP_LOG`` (DEBUG, INFO, WARNING; default WARNING).
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .checkpoint import PolicyCheckpoint, file_digest
from .config import DEFAULT_SEED, build_config
from .diagnose import run_checks
from .errors import ConfigurationError, WaveGraspError
from .evaluate import REFERENCE_SUCCESS_RATES, EvalProtocol, evaluate, summary_dict
from .train import train

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
DEFAULT_EVAL_SEED = EvalProtocol.base_seed

DEVIATIONS = """\
defaults that differ from, or fill gaps in, the published setup:
  beta_pos 0.05 m/step and beta_yaw 0.1 rad/step (published beta = 0.5, unitless)
  critic input 35 = 30 stacked obs + 5 actions (published: 40); twin critics
  hidden widths 64 (actor 2 layers, critics 3 layers; published 256) for desk-scale compute
  desk-scale training: 2500 episodes (published ~10,000), batch 256, one update per env step
  agent inputs re-expressed as gripper-minus-cube offsets before scaling (same information)
  optimiser Adam(0.9, 0.999, 1e-8); target entropy -5; tau 0.005
  training episodes run their full length; evaluation stops at first success
  evaluation uses deterministic (mean) actions
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def _write_manifest(path: Path, manifest: dict) -> None:
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="wavegrasp",
        description="Wave-disturbed grasping: SAC training and sea-state evaluation.",
        epilog=DEVIATIONS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train a policy in the static environment", epilog=DEVIATIONS,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    t.add_argument("--config", help="YAML config file (sections env, sac, train, eval)")
    t.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one config value; repeatable; beats the config file")
    t.add_argument("--seed", type=int, help=f"training seed (default {DEFAULT_SEED})")
    t.add_argument("--episodes", type=int, help="number of training episodes")
    t.add_argument("--out", help="output directory (default from config, else runs/train)")
    t.add_argument("--no-figures", action="store_true", help="skip PNG figures")

    e = sub.add_parser("eval", help="evaluate a checkpoint under sea states 0-2")
    e.add_argument("checkpoint", help="policy checkpoint file")
    e.add_argument("--config", help="YAML config file; only the eval section is used")
    e.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    e.add_argument("--sea-state", type=int, nargs="+", choices=(0, 1, 2), help="WMO codes (default 0 1 2)")
    e.add_argument("--trials", type=int, help="trials per sea state (default 15)")
    e.add_argument("--time-limit", type=float, help="seconds of simulated time per trial (default 30)")
    e.add_argument("--seed", type=int, help=f"base trial seed (default {DEFAULT_EVAL_SEED})")
    e.add_argument("--out", default="runs/eval", help="output directory (default runs/eval)")
    e.add_argument("--no-figures", action="store_true")

    sub.add_parser("diagnose", help="run fast self-checks")
    return p


def cmd_train(args) -> int:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"train.seed={args.seed}")
    if args.episodes is not None:
        overrides.append(f"train.episodes={args.episodes}")
    if args.out is not None:
        overrides.append(f"train.out_dir={json.dumps(str(args.out))}")
    cfg = build_config(args.config, overrides)
    out = Path(cfg.train.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    manifest_path = out / "manifest.json"
    manifest = {
        "command": "train",
        "version": __version__,
        "seed": cfg.train.seed,
        "config": cfg.to_dict(),
        "started": _now(),
        "finished": None,
        "status": "running",
    }
    _write_manifest(manifest_path, manifest)
    try:
        result = train(cfg.env, cfg.sac, cfg.train)
    except BaseException:
        manifest.update(status="failed", finished=_now())
        _write_manifest(manifest_path, manifest)
        raise
    if not args.no_figures:
        from .plots import training_curve

        training_curve([r.ret for r in result.records], result.smoothed, out / "training_curve.png",
                       cfg.train.smoothing_window)
    successes = sum(r.success for r in result.records[-100:])
    manifest.update(
        status="complete",
        finished=_now(),
        checkpoint=result.checkpoint_path.name,
        checkpoint_sha256=file_digest(result.checkpoint_path),
        checkpoint_config_hash=result.checkpoint.config_hash,
    )
    _write_manifest(manifest_path, manifest)
    print(f"episodes={len(result.records)} last100_success={successes / min(100, len(result.records)):.3f} "
          f"checkpoint={result.checkpoint_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    overrides = list(args.overrides)
    for flag, key in ((args.trials, "trials"), (args.time_limit, "time_limit"), (args.seed, "base_seed")):
        if flag is not None:
            overrides.append(f"eval.{key}={flag}")
    if args.sea_state is not None:
        overrides.append(f"eval.sea_states={json.dumps(args.sea_state)}")
    cfg = build_config(args.config, overrides)
    ckpt = PolicyCheckpoint.load(args.checkpoint)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": "eval",
        "version": __version__,
        "seed": cfg.eval.base_seed,
        "config": {"eval": cfg.to_dict()["eval"], "env": ckpt.env_config().to_dict()},
        "checkpoint": str(args.checkpoint),
        "checkpoint_sha256": file_digest(args.checkpoint),
        "started": _now(),
        "finished": None,
        "status": "running",
    }
    _write_manifest(out / "manifest.json", manifest)
    report = evaluate(ckpt, cfg.eval, out_dir=out)
    if not args.no_figures:
        from .plots import distance_traces, success_rates

        for state, r in report.items():
            distance_traces(r["traces"], out / f"distance_state{state}.png", f"sea state {state}")
        success_rates(report, out / "success_rates.png", REFERENCE_SUCCESS_RATES)
    manifest.update(status="complete", finished=_now())
    _write_manifest(out / "manifest.json", manifest)
    for state, r in summary_dict(report).items():
        print(f"sea_state={state} success_rate={r['success_rate']:.3f} trials={r['trials']} "
              f"mean_steps={r['mean_steps']}")
    return EXIT_OK


def cmd_diagnose(args, fault: str | None = None) -> int:
    results = run_checks(fault=fault)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_RUNTIME


def main(argv=None) -> int:
    level = os.environ.get("WAVEGRASP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"train": cmd_train, "eval": cmd_eval, "diagnose": cmd_diagnose}
    try:
        return handlers[args.command](args)
    except (ConfigurationError, FileNotFoundError) as exc:
        print(f"wavegrasp {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WaveGraspError, OSError) as exc:
        print(f"wavegrasp {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
