"""
Command-line entry point for centrolab.

This module provides subcommands for:
- Synthetic data generation and backbone pretraining
- Binding and evaluation of encoder sets
- Theory verification sweeps
- Full experiment grids and their summaries

Exit codes: 0 success, 1 config error, 2 numeric failure, 3 failed check.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from centrolab.anchors.strategies import AnchorStrategy, parse_anchor_flag
from centrolab.binder.encoders import load_encoder_set, save_encoder_set
from centrolab.binder.trainer import train_adaptive
from centrolab.config import settings
from centrolab.errors import AcceptanceError, CentrolabError, ConfigError
from centrolab.evalsuite.export import export_embeddings
from centrolab.evalsuite.report import evaluate, save_report
from centrolab.guardrails.config_validator import config_validator
from centrolab.models.schemas import ExperimentConfig, TheoryRow
from centrolab.numkit.rng import derive_seed, make_rng
from centrolab.pipeline.acceptance import check_run, require_acceptance, write_acceptance
from centrolab.pipeline.runner import build_backbone, dataset_from_spec, run_experiment, train_method
from centrolab.pipeline.summary import summarize
from centrolab.synthgen.dataset import load_dataset, save_dataset
from centrolab.theory.bound import BoundInstance, random_instance, theorem1_slack, theorem1_sweep, tightness_sweep
from centrolab.theory.holder import holder_sweep, reverse_holder_check
from centrolab.theory.propositions import proposition_sweep

logger = logging.getLogger("centrolab")

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


# -----------------------------
# HELPERS
# -----------------------------
def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config from --config, defaults otherwise; --seed narrows the seed list."""
    if args.config:
        config = config_validator.load(args.config)
    else:
        config = ExperimentConfig(name="default")
    if args.seed is not None:
        config = config.model_copy(update={"seeds": [args.seed]})
    return config


def cli_seed(args: argparse.Namespace, config: ExperimentConfig) -> int:
    return args.seed if args.seed is not None else config.seeds[0]


def out_dir(args: argparse.Namespace, default: str) -> Path:
    path = Path(args.out or Path(settings.output_dir) / default)
    path.mkdir(parents=True, exist_ok=True)
    return path


def check_method(method: str) -> str:
    method = method.strip().lower()
    is_valid, suggestion = config_validator.check_method(method)
    if not is_valid:
        hint = f" (did you mean '{suggestion}'?)" if suggestion else ""
        raise ConfigError(f"unknown method '{method}'{hint}")
    return method


def check_anchor(flag: str) -> AnchorStrategy:
    is_valid, suggestion = config_validator.check_anchor_flag(flag)
    if not is_valid:
        hint = f" (did you mean '{suggestion}'?)" if suggestion else ""
        raise ConfigError(f"unknown anchor strategy '{flag.strip().lower()}'{hint}")
    return parse_anchor_flag(flag)


def with_anchor(config: ExperimentConfig, flag: str) -> ExperimentConfig:
    """
    Add the adaptive method of an --anchor flag to the grid.

    wavg weights given in the flag replace anchor_weights. The result is
    validated again, so weights of the wrong length are a config error.
    """
    strategy = check_anchor(flag)
    data = config.model_dump(mode="json")
    data["bind"]["anchor"] = flag.strip().lower()
    if strategy.label not in data["methods"]:
        data["methods"].append(strategy.label)
    if strategy.weights is not None:
        data["anchor_weights"] = list(strategy.weights)
    return ExperimentConfig.model_validate(data)


# -----------------------------
# SUBCOMMANDS
# -----------------------------
def cmd_gen_data(args: argparse.Namespace) -> int:
    config = load_config(args)
    seed = cli_seed(args, config)
    dataset = dataset_from_spec(config.dataset, seed)
    path = save_dataset(dataset, out_dir(args, f"{config.name}/seed_{seed}/dataset"))
    logger.info(f"Dataset written to {path}")
    return 0


def cmd_pretrain(args: argparse.Namespace) -> int:
    config = load_config(args)
    seed = cli_seed(args, config)
    dataset = load_dataset(args.data)
    encoders = build_backbone(config, dataset, seed, args.backbone)
    path = save_encoder_set(encoders, out_dir(args, f"{config.name}/seed_{seed}/backbones/{args.backbone}"))
    logger.info(f"{args.backbone} encoders written to {path}")
    return 0


def cmd_bind(args: argparse.Namespace) -> int:
    config = load_config(args)
    seed = cli_seed(args, config)
    strategy = check_anchor(args.anchor) if args.anchor else None
    method = check_method(args.method or (strategy.label if strategy else "centrobind"))
    if strategy is not None and (method == "none" or method.startswith("fabind:")):
        raise ConfigError(f"--anchor applies to adaptive methods, not '{method}'")

    overrides = {k: v for k, v in (("tau", args.tau), ("epochs", args.epochs), ("batch_size", args.batch_size)) if v is not None}
    if strategy is not None:
        overrides["anchor"] = args.anchor.strip().lower()
    if overrides:
        config = config.model_copy(update={"bind": config.bind.model_copy(update=overrides)})

    dataset = load_dataset(args.data)
    encoders = load_encoder_set(args.encoders)
    rng = make_rng(derive_seed(seed, args.backbone, method, "bind"))
    if strategy is None:
        trained, trace = train_method(method, dataset, encoders, config, rng)
    else:
        if strategy.weights is not None and len(strategy.weights) != dataset.n_modalities:
            raise ConfigError(f"{len(strategy.weights)} anchor weights for {dataset.n_modalities} modalities")
        trained, trace = train_adaptive(dataset, encoders, config.bind, rng)

    target = out_dir(args, f"{config.name}/bind/{method.replace(':', '-')}/seed_{seed}")
    save_encoder_set(trained, target / "encoders")
    trace.to_csv(target / "trace.csv")
    logger.info(f"Bound encoders written to {target}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = load_config(args)
    seed = cli_seed(args, config)
    dataset = load_dataset(args.data)
    encoders = load_encoder_set(args.encoders)

    echo = dict(config.model_dump(mode="json"), cell={"seed": seed, "backbone": args.backbone, "method": args.method})
    report = evaluate(encoders, dataset, config.eval, args.method, args.backbone, seed, config_echo=echo)

    target = out_dir(args, f"{config.name}/eval/{args.method.replace(':', '-')}/seed_{seed}")
    save_report(report, target)
    if args.export or config.eval.export_embeddings:
        export_embeddings(encoders, dataset, target / "embeddings.csv", split=config.eval.split)
    logger.info(f"Report written to {target}")
    return 0


def theory_rows(seed: int, n_theorem: int, n_holder: int) -> List[TheoryRow]:
    """Randomized sweeps plus the degenerate and tightness instances."""
    rng = make_rng(seed)
    rows = theorem1_sweep(rng, n_instances=n_theorem)

    singleton = theorem1_slack(BoundInstance(np.ones((1, 1, 1)), np.ones((1, 1, 1)), 1.0))
    rows.append(
        TheoryRow(
            check="theorem1_singleton", instance=0, params={"M": 1, "B": 1},
            lhs=singleton.lhs, rhs=singleton.rhs, slack=singleton.slack,
            passed=abs(singleton.slack) <= 1e-12,
        )
    )
    for i, m in enumerate((2, 3, 4)):
        curve = tightness_sweep(random_instance(rng, m, m, 0.3))
        rows.append(
            TheoryRow(
                check="theorem1_tightness", instance=i, params={"M": m, "B": m},
                lhs=float(curve[0, 1]), rhs=float(curve[-1, 1]), slack=float(curve[0, 1] - curve[-1, 1]),
                passed=bool(abs(curve[-1, 1]) <= 1e-9 and curve[-1, 1] <= curve[0, 1] + 1e-9),
            )
        )

    rows.extend(holder_sweep(rng, n_instances=n_holder))
    equal = reverse_holder_check(np.ones((2, 2)))
    rows.append(
        TheoryRow(
            check="reverse_holder_equality", instance=0, params={"M": 2, "n": 2},
            lhs=equal.lhs, rhs=equal.rhs, slack=equal.rhs - equal.lhs,
            passed=abs(equal.lhs - equal.rhs) <= 1e-12,
        )
    )

    rows.extend(proposition_sweep(rng))
    return rows


def cmd_theory_check(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else settings.theory_seed
    rows = theory_rows(seed, args.instances, args.holder_instances)

    frame = pd.DataFrame([dict(r.model_dump(), params=json.dumps(r.params, sort_keys=True)) for r in rows])
    path = out_dir(args, "theory") / "theory.csv"
    frame.to_csv(path, index=False, float_format="%.17g")

    failed = frame[~frame["passed"]]
    for check, group in frame.groupby("check", sort=True):
        logger.info(f"{check}: {int(group['passed'].sum())}/{len(group)} passed, min slack {group['slack'].min():.3e}")
    logger.info(f"Theory table written to {path}")
    if len(failed):
        raise AcceptanceError(f"{len(failed)} theory instance(s) failed; see {path}")
    return 0


def cmd_summarize(args: argparse.Namespace) -> int:
    summarize(args.run_dir)
    if args.check:
        results = check_run(args.run_dir)
        write_acceptance(results, args.run_dir)
        require_acceptance(results)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args)
    if args.anchor:
        config = with_anchor(config, args.anchor)
    run_dir = Path(args.out or config.output_dir or Path(settings.output_dir) / config.name)
    threads = args.threads if args.threads is not None else settings.threads
    run_experiment(config, run_dir, threads=threads)
    summarize(run_dir)
    return 0


# -----------------------------
# PARSER
# -----------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config")
    common.add_argument("--seed", type=int, help="Seed (overrides the config's seed list)")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--threads", type=int, help="Worker processes")
    common.add_argument("--log-level", help="Logging level (default from CENTROLAB_LOG_LEVEL)")

    parser = argparse.ArgumentParser(prog="centrolab", description="Multimodal binding lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="Generate a synthetic dataset")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("pretrain", parents=[common], help="Build backbone encoders for a dataset")
    p.add_argument("--data", required=True, help="Dataset directory")
    p.add_argument("--backbone", choices=["random", "pretrained"], default="pretrained")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("bind", parents=[common], help="Bind encoders with one method")
    p.add_argument("--data", required=True, help="Dataset directory")
    p.add_argument("--encoders", required=True, help="Backbone encoder directory")
    p.add_argument("--method", help="none, fabind:N, centrobind, wavg, random, random-intra, median")
    p.add_argument("--anchor", help="Adaptive anchor: centroid, wavg:w1,..,wM, random, random-intra, median")
    p.add_argument("--backbone", default="pretrained", help="Backbone label used for seeding")
    p.add_argument("--tau", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.set_defaults(func=cmd_bind)

    p = sub.add_parser("eval", parents=[common], help="Evaluate an encoder set")
    p.add_argument("--data", required=True, help="Dataset directory")
    p.add_argument("--encoders", required=True, help="Encoder directory")
    p.add_argument("--method", default="centrobind", help="Method label for the report")
    p.add_argument("--backbone", default="pretrained", help="Backbone label for the report")
    p.add_argument("--export", action="store_true", help="Also export embeddings as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("theory-check", parents=[common], help="Run the theory verification sweeps")
    p.add_argument("--instances", type=int, default=100, help="Randomized bound instances")
    p.add_argument("--holder-instances", type=int, default=1000, help="Randomized Hölder instances")
    p.set_defaults(func=cmd_theory_check)

    p = sub.add_parser("summarize", parents=[common], help="Summarize a run directory")
    p.add_argument("run_dir", help="Run directory")
    p.add_argument("--check", action="store_true", help="Evaluate ordering criteria; exit 3 on failure")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("run", parents=[common], help="Run a full experiment grid")
    p.add_argument("--anchor", help="Add this adaptive anchor's method to the grid")
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format=LOG_FORMAT,
    )

    try:
        return args.func(args)
    except CentrolabError as e:
        logger.error(str(e))
        return e.exit_code
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return ConfigError.exit_code
    except (OSError, ValueError) as e:
        logger.error(f"Error: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
