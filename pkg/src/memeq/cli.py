"""Command-line entry points: characterize, train, sweep, heatmap."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .devices import DeviceKind
from .network import WeightInit, build_network, save_checkpoint
from .presets import default_params
from .trainer import save_loss_history, train
from .data import load_normalized
from .workbench import (
    CellKey,
    cell_seed,
    characterize,
    emit_heatmap,
    load_config,
    run_directory,
    run_sweep,
    save_loss_histories,
    save_min_loss_table,
    SweepResult,
    CellResult,
    ExperimentConfig,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="memeq",
                                     description="memristive equilibrium-propagation workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
            ("characterize", "hysteresis traces and loop metrics per model"),
            ("train", "train a single grid cell"),
            ("sweep", "train the full model/resistance grid"),
            ("heatmap", "render a heatmap from sweep results")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config", type=Path, help="experiment config (INI)")
        cmd.add_argument("--seed", type=int, default=None, help="override master seed")
        cmd.add_argument("--out", type=Path, default=Path("out"), help="output base directory")

    sub.choices["train"].add_argument("--model", type=str, default=None)
    sub.choices["train"].add_argument("--hidden", type=int, default=None)
    sub.choices["train"].add_argument("--r-off", dest="r_off", type=float, default=None,
                                      help="r_off in ohm")
    sub.choices["sweep"].add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
    except Exception as exc:
        print(f"error: cannot load config {args.config}: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    run_dir = run_directory(args.out, config)

    try:
        return _dispatch(args, config, run_dir)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args, config: ExperimentConfig, run_dir: Path) -> int:
    if args.command == "characterize":
        for kind in config.models:
            if kind is DeviceKind.LINEAR_BASELINE:
                continue   # the baseline has no hysteresis fingerprint
            metrics = characterize(kind, run_dir / "hysteresis", r_on=config.r_on)
            print(f"{kind.value}: low-frequency area {metrics['low_loop_area']:.3e}, "
                  f"high-frequency area {metrics['high_loop_area']:.3e}, "
                  f"direction {metrics['direction']}")
        print(f"traces written to {run_dir / 'hysteresis'}")
        return 0

    if args.command == "train":
        kind = DeviceKind(args.model) if args.model else config.models[0]
        hidden = args.hidden if args.hidden else config.hidden_sizes[0]
        r_off = args.r_off if args.r_off else config.r_off_values[0]
        modulation = config.modulations[0]
        dataset = load_normalized(config.dataset)
        params = default_params(kind, r_on=config.r_on, r_off=r_off)
        seed = cell_seed(config.seed, config.dataset, hidden, r_off)
        network = build_network(config.topology(hidden), params,
                                WeightInit(seed=seed, r_min=config.r_on, r_max=r_off))
        losses = train(network, dataset, config.training(modulation, kind))
        tag = f"{modulation}_h{hidden}_roff{r_off:g}_{kind.value}"
        save_loss_history(run_dir / f"loss_{tag}.csv", losses)
        save_checkpoint(network, str(run_dir / f"checkpoint_{tag}"))
        print(f"{tag}: min loss {min(losses):.4f} (epoch {losses.index(min(losses))}), "
              f"final {losses[-1]:.4f}")
        print(f"artifacts in {run_dir}")
        return 0

    if args.command == "sweep":
        def progress(key, cell):
            print(f"  {key.modulation} h={key.hidden} r_off={key.r_off:g} "
                  f"{key.model.value}: min loss {cell.min_loss:.4f}")

        result = run_sweep(config, workers=args.workers, progress=progress)
        save_min_loss_table(result, run_dir / "min_loss.csv")
        save_loss_histories(result, run_dir / "losses")
        for hidden in config.hidden_sizes:
            for modulation in config.modulations:
                emit_heatmap(result, run_dir / f"heatmap_{modulation}_h{hidden}.csv",
                             hidden=hidden, modulation=modulation)
        print(f"sweep complete; results in {run_dir}")
        return 0

    if args.command == "heatmap":
        table = run_dir / "min_loss.csv"
        if not table.exists():
            raise FileNotFoundError(f"{table} not found; run `memeq sweep` first")
        result = _load_sweep(config, table)
        for hidden in config.hidden_sizes:
            for modulation in config.modulations:
                emit_heatmap(result, run_dir / f"heatmap_{modulation}_h{hidden}.csv",
                             hidden=hidden, modulation=modulation)
        print(f"heatmaps rendered in {run_dir}")
        return 0

    raise ValueError(f"unknown command {args.command}")


def _load_sweep(config: ExperimentConfig, table: Path) -> SweepResult:
    cells = {}
    with open(table, "r", encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            model, r_off, hidden, modulation, min_loss = line.strip().split(",")
            key = CellKey(DeviceKind(model), float(r_off), int(hidden), modulation)
            cells[key] = CellResult(losses=[float(min_loss)])
    return SweepResult(config=config, cells=cells)


if __name__ == "__main__":
    sys.exit(main())
