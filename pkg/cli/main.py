import argparse
import sys
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ValidationError
from rich.console import Console
from rich.table import Table
from scipy.linalg import LinAlgError

from orchestrator.bench import check_scenario, run_bench_to_file
from orchestrator.engine import Engine
from settings.config_model import SCENARIOS, ProjectConfig
from settings.manager import SettingsManager
from utils.errors import ConfigError, DataError
from utils.telemetry import TelemetryLogger, set_verbosity

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

console = Console()
err_console = Console(stderr=True)


class UsageParser(argparse.ArgumentParser):
    """Reports usage problems as ConfigError so they share the usage exit code."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="Project settings JSON; explicit flags override its values")
    parser.add_argument("--log-dir", help="Write run telemetry to DIR/telemetry.log")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log progress at INFO level")


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(prog="trboost", description="Boosted fine-tuning for semi-supervised domain adaptation")
    sub = parser.add_subparsers(dest="command", parser_class=UsageParser)
    sub.required = True

    train = sub.add_parser("train", help="Fine-tune a linear classifier with DA/SSL boosting blocks")
    train.add_argument("--source", required=True, help="Labeled source features CSV")
    train.add_argument("--target-labeled", required=True, help="Labeled target features CSV")
    train.add_argument("--target-unlabeled", required=True, help="Unlabeled target features CSV")
    init = train.add_mutually_exclusive_group(required=True)
    init.add_argument("--init-model", help="Model JSON holding the initial linear classifier")
    init.add_argument("--bootstrap-init", action="store_true",
                      help="Fit the initial classifier on labeled source and target")
    train.add_argument("--blocks", type=int, help="Number of DA/SSL block pairs K (default 100)")
    train.add_argument("--batch-size", type=int, help="Balanced-sampling batch size (default 64)")
    train.add_argument("--xi", type=float, help="Noise magnitude for unlabeled target (default 1.0)")
    train.add_argument("--node-size", type=int, help="Random feature map width (default 100)")
    train.add_argument("--lr", type=float, help="Learning rate (default 0.1)")
    train.add_argument("--ridge-lambda", type=float, help="Base learner ridge penalty (default 0.01)")
    train.add_argument("--seed", type=int, help="Random seed (default 2021)")
    train.add_argument("--deterministic", action="store_const", const=True,
                       help="Weighted full-batch fits instead of balanced sampling")
    train.add_argument("--no-source-removal", dest="remove_misclassified_source", action="store_const", const=False,
                       help="Keep misclassified source samples")
    train.add_argument("--activation", choices=["tanh", "sigmoid", "relu"], help="Feature map activation")
    train.add_argument("--no-mapping", dest="use_mapping", action="store_const", const=False,
                       help="Use z-scored raw features instead of random projections")
    train.add_argument("--threads", type=int, help="Parallel per-class ridge fits (default 1)")
    train.add_argument("--test", help="Optional labeled target test CSV for per-block accuracy")
    train.add_argument("--out", required=True, help="Output model JSON; the training log goes next to it")
    _common(train)

    boot = sub.add_parser("bootstrap-init", help="Fit a one-vs-rest ridge classifier usable as --init-model")
    boot.add_argument("--source", required=True, help="Labeled source features CSV")
    boot.add_argument("--target-labeled", required=True, help="Labeled target features CSV")
    boot.add_argument("--ridge-lambda", type=float, help="Ridge penalty (default 0.01)")
    boot.add_argument("--out", required=True, help="Output model JSON")
    _common(boot)

    pred = sub.add_parser("predict", help="Score a feature file with a saved model")
    pred.add_argument("--model", required=True, help="Model JSON")
    pred.add_argument("--features", required=True, help="Features CSV (a label column is ignored)")
    pred.add_argument("--out", required=True, help="Predictions CSV")
    _common(pred)

    synth = sub.add_parser("synth-source", help="Synthesize a labeled virtual source from a linear layer")
    synth.add_argument("--linear-layer", required=True, help="Model JSON holding the classifier's last linear layer")
    synth.add_argument("--target-features", required=True, help="Target features CSV used for moment alignment")
    synth.add_argument("--per-class", type=int, help="Samples per class (default 100)")
    synth.add_argument("--beta-a", type=float, help="Beta parameter a (default 0.75)")
    synth.add_argument("--beta-b", type=float, help="Beta parameter b (default 0.75)")
    synth.add_argument("--lambda", dest="ridge_lambda", type=float, help="Pseudo-inverse ridge penalty (default 1e-6)")
    synth.add_argument("--seed", type=int, help="Random seed (default 2021)")
    synth.add_argument("--out", required=True, help="Output labeled features CSV")
    _common(synth)

    bench = sub.add_parser("bench", help="Run a benchmark scenario on synthetic shift data")
    bench.add_argument("--scenario", help=f"One of: {', '.join(SCENARIOS)}")
    bench.add_argument("--seeds", type=int, help="Seeds per configuration (default 5)")
    bench.add_argument("--seed", dest="base_seed", type=int, help="First seed (default 2021)")
    bench.add_argument("--blocks", type=int, help="Fine-tuning blocks per trained model (default 50)")
    bench.add_argument("--threads", type=int, help="Parallel per-class ridge fits (default 1)")
    bench.add_argument("--out", required=True, help="Metrics CSV")
    _common(bench)

    return parser


# =============================================================================
# CONFIG MERGING
# =============================================================================

def _overrides(args: argparse.Namespace, fields) -> Dict[str, Any]:
    return {name: getattr(args, name) for name in fields if getattr(args, name, None) is not None}


def _merge(base: BaseModel, updates: Dict[str, Any]) -> BaseModel:
    # model_validate so flag values get the same checks as file values
    return type(base).model_validate({**base.model_dump(), **updates})


def load_project(args: argparse.Namespace) -> ProjectConfig:
    manager = SettingsManager(args.config) if args.config else SettingsManager()
    if args.config:
        return manager.load_settings()
    return manager.get_config()


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_train(args, project: ProjectConfig, engine: Engine) -> int:
    cfg = _merge(project.train, _overrides(args, [
        "blocks", "batch_size", "xi", "node_size", "lr", "ridge_lambda", "seed", "deterministic",
        "remove_misclassified_source", "activation", "use_mapping", "threads",
    ]))
    result, log_path = engine.train_from_files(
        args.source, args.target_labeled, args.target_unlabeled, args.out,
        cfg=cfg, init_model_path=args.init_model, test_path=args.test,
    )
    console.print(f"[green]✔ Trained {len(result.model.blocks)} blocks.[/green] Model: {args.out}  Log: {log_path}")
    if result.log:
        final = result.log[-1]
        console.print(f"Labeled cross-entropy: {final.labeled_cross_entropy:.6f}")
        if final.test_accuracy is not None:
            console.print(f"Test accuracy: {final.test_accuracy:.4f}")
    return EXIT_OK


def cmd_bootstrap_init(args, project: ProjectConfig, engine: Engine) -> int:
    lam = args.ridge_lambda if args.ridge_lambda is not None else project.train.ridge_lambda
    if lam < 0:
        raise ConfigError(f"--ridge-lambda must be >= 0, got {lam}")
    model = engine.bootstrap_from_files(args.source, args.target_labeled, args.out, lam=lam)
    console.print(f"[green]✔ Initial model {model.outputs}×{model.input_dims} written to {args.out}[/green]")
    return EXIT_OK


def cmd_predict(args, project: ProjectConfig, engine: Engine) -> int:
    _, labels = engine.predict_from_files(args.model, args.features, args.out)
    console.print(f"[green]✔ {labels.shape[0]} predictions written to {args.out}[/green]")
    return EXIT_OK


def cmd_synth_source(args, project: ProjectConfig, engine: Engine) -> int:
    cfg = _merge(project.synth, _overrides(args, ["per_class", "beta_a", "beta_b", "ridge_lambda", "seed"]))
    synth = engine.synth_source_from_files(args.linear_layer, args.target_features, args.out, cfg=cfg)
    console.print(f"[green]✔ {synth.features.shape[0]} virtual source samples written to {args.out}[/green]")
    return EXIT_OK


def cmd_bench(args, project: ProjectConfig, engine: Engine) -> int:
    if args.scenario is not None:
        check_scenario(args.scenario)
    cfg = _merge(project.bench, _overrides(args, ["scenario", "seeds", "base_seed", "blocks"]))
    train_cfg = _merge(project.train, _overrides(args, ["threads"]))
    rows = run_bench_to_file(cfg, args.out, train_cfg)

    table = Table(title=f"{cfg.scenario} ({cfg.seeds} seeds)")
    for column in ("config", "initial", "accuracy", "std", "improvement"):
        table.add_column(column)
    for row in rows:
        if row["seed"] == "aggregate":
            table.add_row(row["config"], f"{row['initial_accuracy']:.4f}", f"{row['accuracy']:.4f}",
                          f"{row['accuracy_std']:.4f}", f"{row['improvement']:+.4f}")
    console.print(table)
    console.print(f"Metrics: {args.out}")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "bootstrap-init": cmd_bootstrap_init,
    "predict": cmd_predict,
    "synth-source": cmd_synth_source,
    "bench": cmd_bench,
}


def main(argv: Optional[List[str]] = None) -> int:
    telemetry = None
    try:
        args = build_parser().parse_args(argv)
        set_verbosity(args.verbose)
        if args.log_dir:
            telemetry = TelemetryLogger(args.log_dir)
            telemetry.log_event("command_started", {"command": args.command})
        project = load_project(args)
        code = COMMANDS[args.command](args, project, Engine(config=project, telemetry=telemetry))
        if telemetry:
            telemetry.log_event("command_finished", {"command": args.command, "exit_code": code})
        return code
    except (ConfigError, ValidationError) as e:
        err_console.print(f"[red]✘ Usage error:[/red] {e}")
        if telemetry:
            telemetry.log_error(type(e).__name__, str(e))
        return EXIT_USAGE
    except (DataError, LinAlgError, OSError) as e:
        err_console.print(f"[red]✘ Data error:[/red] {e}")
        if telemetry:
            telemetry.log_error(type(e).__name__, str(e))
        return EXIT_DATA
    finally:
        if telemetry:
            telemetry.close()


if __name__ == "__main__":
    sys.exit(main())
