"""Command-line interface: simulate data, train, evaluate, diagnose.

Every command resolves its flags into a full configuration, runs on a single
master seed where randomness is involved, and writes a run manifest next to
its primary output, so any result file can be traced back to the exact
invocation that made it.

Exit codes: 0 success, 2 usage error, 3 data or layout error, 4 training
divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

from . import __version__, bell, exact, trainer
from .epr import (
    DetectorAngles,
    InsufficientDataError,
    SETTING_PAIR_LABELS,
    empirical_correlations,
    generate_dataset,
    load_dataset,
    save_dataset,
    sidecar_path,
)
from .exact import HiddenState, enumerate_distribution
from .trainer import TrainerConfig, TrainingDivergedError, load_model, save_model

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

LOCALITY_RESIDUAL_BOUND = 1e-10
MI_TV_BOUND = 1e-3

# Schema of the diagnostics report written by `eprbm diagnose --out`.
DIAGNOSTICS_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["model", "locality", "measurement_independence"],
    "properties": {
        "model": {"type": "string"},
        "locality": {
            "type": "object",
            "required": ["max_residual", "threshold", "pass"],
            "properties": {
                "max_residual": {"type": "number"},
                "threshold": {"type": "number"},
                "pass": {"type": "boolean"},
            },
        },
        "measurement_independence": {
            "type": "object",
            "required": [
                "setting_pairs",
                "hidden_state_labels",
                "conditional",
                "pooled",
                "tv_distances",
                "max_tv",
                "threshold",
                "violated",
            ],
            "properties": {
                "setting_pairs": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": {"type": "integer", "enum": [0, 1]},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
                "hidden_state_labels": {
                    "type": "array",
                    "items": {"type": "string", "pattern": "^[01]+$"},
                },
                "conditional": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number"}},
                },
                "pooled": {"type": "array", "items": {"type": "number"}},
                "tv_distances": {"type": "array", "items": {"type": "number"}},
                "max_tv": {"type": "number"},
                "threshold": {"type": "number"},
                "violated": {"type": "boolean"},
            },
        },
    },
}


@dataclass
class RunManifest:
    """Record of one CLI run: what was asked, with what seeds, what came out."""

    command: str
    config: dict
    seeds: dict
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    version: str = __version__
    duration_seconds: float = 0.0

    def write(self, primary_output) -> str:
        path = f"{primary_output}.manifest.json"
        payload = {
            "command": self.command,
            "version": self.version,
            "config": self.config,
            "seeds": self.seeds,
            "inputs": [str(p) for p in self.inputs],
            "outputs": [str(p) for p in self.outputs],
            "duration_seconds": self.duration_seconds,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        return path


def _parse_angles(text: str) -> DetectorAngles:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError(
            f"--angles needs 4 comma-separated radians a,a',b,b', got {text!r}"
        )
    values = [float(p) for p in parts]
    return DetectorAngles(*values)


def _print_report(report: bell.CorrelationReport) -> None:
    for label, value in zip(
        ("C(a,b)", "C(a,b')", "C(a',b)", "C(a',b')"), report.correlations()
    ):
        print(f"{label:9s} = {value:+.3f}")
    print(f"S = {report.s:.3f}  [{report.source}]")


def _bell_verdict(s: float) -> str:
    if s > 2.0:
        return f"S = {s:.3f} (> 2: violates CHSH bound)"
    return f"S = {s:.3f} (<= 2: does not violate CHSH bound)"


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    angles = args.angles if args.angles is not None else DetectorAngles()
    dataset = generate_dataset(angles, args.trials, args.seed)
    save_dataset(dataset, args.out)
    try:
        report = empirical_correlations(dataset)
    except InsufficientDataError as err:
        print(f"correlation report unavailable: {err}")
        report = None
    if report is not None:
        _print_report(report)
    manifest = RunManifest(
        command="simulate",
        config={
            "trials": args.trials,
            "seed": args.seed,
            "angles": angles.to_dict(),
            "out": str(args.out),
        },
        seeds={"master": args.seed},
        inputs=[],
        outputs=[str(args.out), sidecar_path(args.out)],
        duration_seconds=time.perf_counter() - started,
    )
    manifest.write(args.out)
    return EXIT_OK


def _resolve_trainer_config(args, parser: argparse.ArgumentParser) -> TrainerConfig:
    """Defaults, overridden by --config file values, overridden by flags."""
    values = {}
    if args.config:
        with open(args.config) as fh:
            values.update(json.load(fh))
    flag_map = {
        "seed": args.seed,
        "learning_rate": args.learning_rate,
        "learning_rate_decay": args.lr_decay,
        "batch_size": args.batch_size,
        "n_persistent_chains": args.chains,
        "gibbs_steps_per_update": args.gibbs_steps,
        "n_epochs": args.epochs,
        "weight_init_scale": args.init_scale,
    }
    for key, value in flag_map.items():
        if value is not None:
            values[key] = value
    if "seed" not in values:
        parser.error("a seed is required: pass --seed or put one in --config")
    return TrainerConfig.from_dict(values)


def cmd_train(args, parser: argparse.ArgumentParser) -> int:
    started = time.perf_counter()
    config = _resolve_trainer_config(args, parser)
    dataset = load_dataset(args.data)
    trace_path = args.trace if args.trace else f"{args.out}.trace.csv"
    try:
        model, trace = trainer.train(dataset, config)
    except TrainingDivergedError as err:
        err.trace.to_csv(trace_path)
        print(f"{err} (partial trace kept at {trace_path})", file=sys.stderr)
        return EXIT_DIVERGED
    save_model(args.out, model, trainer_config=config, dataset_seed=dataset.seed)
    trace.to_csv(trace_path)
    report = bell.model_correlations_exact(model)
    print(f"trained model written to {args.out}")
    _print_report(report)
    print(_bell_verdict(report.s))
    manifest = RunManifest(
        command="train",
        config={
            "data": str(args.data),
            "out": str(args.out),
            "trace": str(trace_path),
            "trainer": config.to_dict(),
        },
        seeds={"master": config.seed},
        inputs=[str(args.data), sidecar_path(args.data)],
        outputs=[str(args.out), str(trace_path)],
        duration_seconds=time.perf_counter() - started,
    )
    manifest.write(args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    started = time.perf_counter()
    model, _ = load_model(args.model)
    theory = bell.theory_correlations(DetectorAngles())
    data_report = None
    if args.data:
        data_report = empirical_correlations(load_dataset(args.data))
    model_report = bell.model_correlations_exact(model)
    print(bell.comparison_table(theory, data_report, model_report), end="")
    print(_bell_verdict(model_report.s))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(bell.comparison_csv(theory, data_report, model_report))
        manifest = RunManifest(
            command="eval",
            config={
                "model": str(args.model),
                "data": str(args.data) if args.data else None,
                "out": str(args.out),
            },
            seeds={},
            inputs=[str(args.model)] + ([str(args.data)] if args.data else []),
            outputs=[str(args.out)],
            duration_seconds=time.perf_counter() - started,
        )
        manifest.write(args.out)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    started = time.perf_counter()
    model, _ = load_model(args.model)
    dist = enumerate_distribution(model)
    residual = exact.locality_check(dist)
    mi = exact.measurement_independence_check(dist)
    n = model.n_hidden
    labels = [HiddenState.from_index(i, n).label() for i in range(2**n)]

    print(f"max factorization residual = {residual:.3e}")
    if residual <= LOCALITY_RESIDUAL_BOUND:
        print(f"locality PASS (residual <= {LOCALITY_RESIDUAL_BOUND:g})")
    else:
        print(f"locality FAIL (residual > {LOCALITY_RESIDUAL_BOUND:g})")
    print()
    pair_names = [SETTING_PAIR_LABELS[p] for p in mi.setting_pairs]
    header = "lambda  " + "  ".join(f"{name:>8s}" for name in pair_names + ["pooled"])
    print("P(lambda | settings):")
    print(header)
    for i, label in enumerate(labels):
        cells = [f"{mi.conditional[p][i]:8.5f}" for p in range(4)]
        cells.append(f"{mi.pooled[i]:8.5f}")
        print(f"{label:6s}  " + "  ".join(cells))
    print()
    for name, tv in zip(pair_names, mi.tv_distances):
        print(f"TV(P(lambda | {name}), P(lambda)) = {tv:.6f}")
    if mi.max_tv > MI_TV_BOUND:
        print(
            f"measurement independence VIOLATED (max TV = {mi.max_tv:.6f} "
            f"> {MI_TV_BOUND:g})"
        )
    else:
        print(
            f"measurement independence not violated (max TV = {mi.max_tv:.6f} "
            f"<= {MI_TV_BOUND:g})"
        )

    if args.out:
        report = {
            "model": str(args.model),
            "locality": {
                "max_residual": residual,
                "threshold": LOCALITY_RESIDUAL_BOUND,
                "pass": bool(residual <= LOCALITY_RESIDUAL_BOUND),
            },
            "measurement_independence": {
                "setting_pairs": [list(p) for p in mi.setting_pairs],
                "hidden_state_labels": labels,
                "conditional": mi.conditional.tolist(),
                "pooled": mi.pooled.tolist(),
                "tv_distances": mi.tv_distances.tolist(),
                "max_tv": mi.max_tv,
                "threshold": MI_TV_BOUND,
                "violated": bool(mi.max_tv > MI_TV_BOUND),
            },
        }
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
        manifest = RunManifest(
            command="diagnose",
            config={"model": str(args.model), "out": str(args.out)},
            seeds={},
            inputs=[str(args.model)],
            outputs=[str(args.out)],
            duration_seconds=time.perf_counter() - started,
        )
        manifest.write(args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprbm",
        description=(
            "Simulate EPR experiment data, train a restricted Boltzmann "
            "machine on it, and analyze the result as a hidden-variable model."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a simulated EPR dataset")
    p_sim.add_argument("--trials", type=int, default=100000)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument(
        "--angles",
        type=str,
        default=None,
        help="detector angles a,a',b,b' in radians (default: 0,pi/2,pi/4,-pi/4)",
    )
    p_sim.add_argument("--out", required=True, help="dataset CSV path")

    p_train = sub.add_parser("train", help="train a model on a dataset")
    p_train.add_argument("--data", required=True, help="dataset CSV from simulate")
    p_train.add_argument("--out", required=True, help="model JSON path")
    p_train.add_argument("--trace", default=None, help="trace CSV path")
    p_train.add_argument("--config", default=None, help="trainer config JSON path")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--learning-rate", type=float, default=None)
    p_train.add_argument("--lr-decay", type=float, default=None)
    p_train.add_argument("--epochs", type=int, default=None)
    p_train.add_argument("--batch-size", type=int, default=None)
    p_train.add_argument("--chains", type=int, default=None)
    p_train.add_argument("--gibbs-steps", type=int, default=None)
    p_train.add_argument("--init-scale", type=float, default=None)

    p_eval = sub.add_parser("eval", help="compare theory/data/model correlations")
    p_eval.add_argument("--model", required=True, help="model JSON path")
    p_eval.add_argument("--data", default=None, help="optional dataset CSV")
    p_eval.add_argument("--out", default=None, help="optional comparison CSV path")

    p_diag = sub.add_parser(
        "diagnose", help="run locality and measurement-independence checks"
    )
    p_diag.add_argument("--model", required=True, help="model JSON path")
    p_diag.add_argument("--out", default=None, help="optional JSON report path")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.angles is not None:
        try:
            args.angles = _parse_angles(args.angles)
        except ValueError as err:
            parser.error(str(err))
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "train":
            return cmd_train(args, parser)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "diagnose":
            return cmd_diagnose(args)
        parser.error(f"unknown command {args.command!r}")
    except TrainingDivergedError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
