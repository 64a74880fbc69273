"""Experiment harness: config files, the model/resistance sweep, heatmaps,
and hysteresis characterization.

Configs are INI files with strictly unit-suffixed quantities (see
:mod:`memeq.units`). One sweep cell = (model, r_off, hidden size, modulation
scheme); all models sharing a (dataset, hidden, r_off) combination start from
the same drawn memristance matrices, which is asserted by checksum.
"""

from __future__ import annotations

import configparser
import hashlib
import os
import tempfile
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .data import DatasetKind, load_normalized
from .devices import DeviceKind, DeviceState, loop_area, pinch_ratio, simulate_waveform
from .network import CircuitTopology, NonlinearityKind, WeightInit, build_network
from .presets import characterization_frequencies, default_params, pam_default_frequency
from .trainer import TrainingConfig, train
from .units import parse_quantity

DATASET_INPUTS = {DatasetKind.IRIS: (4, 3), DatasetKind.BREAST_CANCER: (30, 2)}


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetKind
    hidden_sizes: tuple[int, ...]
    models: tuple[DeviceKind, ...]
    r_on: float
    r_off_values: tuple[float, ...]
    modulations: tuple[str, ...]
    seed: int
    epochs: int = 50
    beta: float = 1e-6
    estimator: str = "forward"
    const_voltage: float = 1.0
    target_voltage: float = 1.0
    gain: float = 4.0
    nonlinearity: NonlinearityKind = NonlinearityKind.RELU_LIKE
    v_break: float = 0.0
    bias_voltage: float = 0.5
    output_load: float = 1e-3
    etas: dict = field(default_factory=dict)            # (modulation, kind) -> eta
    pam_frequencies: dict = field(default_factory=dict)  # kind -> Hz
    digest: str = ""

    def eta_for(self, modulation: str, kind: DeviceKind) -> float:
        try:
            return self.etas[(modulation, kind)]
        except KeyError:
            raise ValueError(f"config has no eta for {modulation}/{kind.value}") from None

    def topology(self, hidden: int) -> CircuitTopology:
        n_in, n_out = DATASET_INPUTS[self.dataset]
        return CircuitTopology(
            input_count=n_in, hidden_sizes=(hidden,), output_count=n_out,
            gain=self.gain, nonlinearity=self.nonlinearity, v_break=self.v_break,
            bias_voltage=self.bias_voltage, output_load=self.output_load)

    def training(self, modulation: str, kind: DeviceKind) -> TrainingConfig:
        frequency = self.pam_frequencies.get(kind, pam_default_frequency(kind)) \
            if modulation == "pam" else None
        return TrainingConfig(
            eta=self.eta_for(modulation, kind), beta=self.beta, epochs=self.epochs,
            estimator=self.estimator, modulation=modulation,
            const_voltage=self.const_voltage, const_frequency=frequency,
            target_voltage=self.target_voltage)


def load_config(path) -> ExperimentConfig:
    raw = Path(path).read_bytes()
    parser = configparser.ConfigParser()
    parser.read_string(raw.decode("utf-8"))

    exp = parser["experiment"]
    dataset = DatasetKind(exp["dataset"].strip())
    hidden = tuple(int(v) for v in _csv(exp["hidden"]))
    models = tuple(DeviceKind(v) for v in _csv(exp["models"]))
    r_on = parse_quantity(exp["r_on"], "ohm")
    r_off = tuple(parse_quantity(v, "ohm") for v in _csv(exp["r_off"]))
    modulations = tuple(_csv(exp["modulation"]))
    for m in modulations:
        if m not in ("pwm", "pam"):
            raise ValueError(f"unknown modulation scheme {m!r}")
    seed = int(exp["seed"])

    net = parser["network"] if parser.has_section("network") else {}
    tr = parser["training"] if parser.has_section("training") else {}

    etas = {}
    for modulation in ("pwm", "pam"):
        section = f"eta.{modulation}"
        if parser.has_section(section):
            for key, value in parser[section].items():
                etas[(modulation, DeviceKind(key))] = float(value)
    pam_frequencies = {}
    if parser.has_section("pam_frequency"):
        for key, value in parser["pam_frequency"].items():
            pam_frequencies[DeviceKind(key)] = parse_quantity(value, "hertz")

    return ExperimentConfig(
        dataset=dataset, hidden_sizes=hidden, models=models, r_on=r_on,
        r_off_values=r_off, modulations=modulations, seed=seed,
        epochs=int(tr.get("epochs", 50)),
        beta=float(tr.get("beta", 1e-6)),
        estimator=tr.get("estimator", "forward"),
        const_voltage=parse_quantity(tr.get("const_voltage", "1V"), "volt"),
        target_voltage=parse_quantity(tr.get("target_voltage", "1V"), "volt"),
        gain=float(net.get("gain", 4.0)),
        nonlinearity=NonlinearityKind(net.get("nonlinearity", "relu_like")),
        v_break=parse_quantity(net.get("breakpoint", "0V"), "volt"),
        bias_voltage=parse_quantity(net.get("bias_voltage", "500mV"), "volt"),
        output_load=1.0 / parse_quantity(net.get("output_load", "1kohm"), "ohm"),
        etas=etas, pam_frequencies=pam_frequencies,
        digest=hashlib.sha256(raw).hexdigest()[:8])


def _csv(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def cell_seed(master_seed: int, dataset: DatasetKind, hidden: int, r_off: float) -> int:
    """Counter-style seed shared by every model in one (hidden, r_off) cell."""
    tag = f"{master_seed}:{dataset.value}:{hidden}:{r_off:.17g}"
    return int.from_bytes(hashlib.sha256(tag.encode()).digest()[:16], "big")


@dataclass(frozen=True)
class CellKey:
    model: DeviceKind
    r_off: float
    hidden: int
    modulation: str


@dataclass
class CellResult:
    losses: list[float]

    @property
    def min_loss(self) -> float:
        return min(self.losses)


@dataclass
class SweepResult:
    config: ExperimentConfig
    cells: dict     # CellKey -> CellResult

    def min_loss_table(self) -> dict:
        return {key: cell.min_loss for key, cell in self.cells.items()}


def run_cell(config: ExperimentConfig, key: CellKey) -> CellResult:
    dataset = load_normalized(config.dataset)
    params = default_params(key.model, r_on=config.r_on, r_off=key.r_off)
    seed = cell_seed(config.seed, config.dataset, key.hidden, key.r_off)
    network = build_network(config.topology(key.hidden), params,
                            WeightInit(seed=seed, r_min=config.r_on, r_max=key.r_off))
    losses = train(network, dataset, config.training(key.modulation, key.model))
    return CellResult(losses=losses)


def run_sweep(config: ExperimentConfig, workers: int = 1, progress=None) -> SweepResult:
    """Train every grid cell; deterministic for a fixed config and seed.

    Models sharing (hidden, r_off) start from identical drawn memristances;
    violated checksums raise instead of silently diverging.
    """
    keys = [CellKey(model, r_off, hidden, modulation)
            for modulation in config.modulations
            for hidden in config.hidden_sizes
            for r_off in config.r_off_values
            for model in config.models]

    _verify_shared_init(config)

    cells = {}
    if workers <= 1:
        for key in keys:
            cells[key] = _run_cell_wrapped(config, key)
            if progress:
                progress(key, cells[key])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for key, cell in zip(keys, pool.map(lambda k: _run_cell_wrapped(config, k), keys)):
                cells[key] = cell
                if progress:
                    progress(key, cell)
    return SweepResult(config=config, cells=cells)


def _run_cell_wrapped(config, key) -> CellResult:
    try:
        return run_cell(config, key)
    except Exception as exc:
        raise RuntimeError(
            f"cell (model={key.model.value}, r_off={key.r_off:g}, hidden={key.hidden}, "
            f"modulation={key.modulation}) failed: {exc}") from exc


def _verify_shared_init(config: ExperimentConfig) -> None:
    for hidden in config.hidden_sizes:
        topology = config.topology(hidden)
        for r_off in config.r_off_values:
            seed = cell_seed(config.seed, config.dataset, hidden, r_off)
            init = WeightInit(seed=seed, r_min=config.r_on, r_max=r_off)
            checksums = {
                build_network(topology, default_params(m, config.r_on, r_off), init).init_checksum
                for m in config.models}
            if len(checksums) != 1:
                raise RuntimeError(
                    f"initial memristances differ across models at hidden={hidden}, "
                    f"r_off={r_off:g}")


def save_min_loss_table(result: SweepResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("model,r_off_ohm,hidden,modulation,min_loss\n")
        for key in sorted(result.cells, key=lambda k: (k.modulation, k.hidden, -k.r_off,
                                                       k.model.value)):
            fh.write(f"{key.model.value},{key.r_off:.17g},{key.hidden},{key.modulation},"
                     f"{result.cells[key].min_loss:.17g}\n")


def save_loss_histories(result: SweepResult, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for key, cell in result.cells.items():
        name = f"{key.modulation}_h{key.hidden}_roff{key.r_off:g}_{key.model.value}.csv"
        with open(directory / name, "w", encoding="utf-8") as fh:
            fh.write("epoch,loss\n")
            for epoch, loss in enumerate(cell.losses):
                fh.write(f"{epoch},{loss:.17g}\n")


def emit_heatmap(result: SweepResult, path, hidden: int | None = None,
                 modulation: str | None = None) -> None:
    """Write the min-loss table (rows = model, cols = r_off desc) and an SVG.

    The written files are complete or absent; the table is staged through a
    temporary file and moved into place.
    """
    if not result.cells:
        raise ValueError("empty sweep result")
    hiddens = sorted({k.hidden for k in result.cells})
    modulations = sorted({k.modulation for k in result.cells})
    if hidden is None:
        if len(hiddens) != 1:
            raise ValueError(f"hidden size is ambiguous ({hiddens}); pass hidden=")
        hidden = hiddens[0]
    if modulation is None:
        if len(modulations) != 1:
            raise ValueError(f"modulation is ambiguous ({modulations}); pass modulation=")
        modulation = modulations[0]

    r_offs = sorted({k.r_off for k in result.cells if k.hidden == hidden
                     and k.modulation == modulation}, reverse=True)
    models = [m for m in result.config.models]
    grid = np.full((len(models), len(r_offs)), np.nan)
    for i, model in enumerate(models):
        for j, r_off in enumerate(r_offs):
            key = CellKey(model, r_off, hidden, modulation)
            if key not in result.cells:
                raise ValueError(f"sweep result is missing cell {key}")
            grid[i, j] = result.cells[key].min_loss

    path = Path(path)
    header = "model," + ",".join(f"{int(r)}" for r in r_offs)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for model, row in zip(models, grid):
                fh.write(model.value + "," + ",".join(f"{v:.3f}" for v in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    _render_heatmap_svg(grid, models, r_offs, path.with_suffix(".svg"))


def _render_heatmap_svg(grid, models, r_offs, path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(1.4 * len(r_offs) + 2.5, 0.5 * len(models) + 1.5))
    image = ax.imshow(grid, cmap="RdYlGn_r", aspect="auto")
    ax.set_xticks(range(len(r_offs)), [f"{int(r)}" for r in r_offs])
    ax.set_yticks(range(len(models)), [m.value for m in models])
    ax.set_xlabel("r_off [ohm]")
    for i in range(grid.shape[0]):
        for j in range(grid.shape[1]):
            ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center", fontsize=8)
    fig.colorbar(image, ax=ax, label="min loss")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def characterize(kind: DeviceKind, output_dir, amplitude: float = 1.0,
                 frequencies: tuple[float, float] | None = None,
                 r_on: float = 100.0, r_off: float = 10_000.0,
                 periods: int = 3) -> dict:
    """Drive one model at its two characterization frequencies.

    Writes a trace file per frequency plus a metrics file; metrics are
    computed over the final (settled) period. Returns the metrics dict.
    """
    if frequencies is None:
        frequencies = characterization_frequencies(kind)
    f_low, f_high = frequencies
    params = default_params(kind, r_on=r_on, r_off=r_off)
    lo, hi = params.state_bounds()
    x0 = hi if kind is DeviceKind.VTEAM else lo + 0.01 * (hi - lo)
    initial = DeviceState.for_params(params, x0)

    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    metrics = {"model": kind.value, "amplitude_V": amplitude}
    for tag, freq in (("low", f_low), ("high", f_high)):
        trace = simulate_waveform(params, initial, amplitude, freq, periods=periods)
        trace.to_csv(output_dir / f"{kind.value}_{tag}.csv")
        cycle = trace.tail_period(freq)
        metrics[f"{tag}_frequency_Hz"] = freq
        metrics[f"{tag}_loop_area"] = loop_area(cycle)
        metrics[f"{tag}_pinch_ratio"] = pinch_ratio(cycle)
        if tag == "low":
            quarter = len(cycle.x) // 4
            metrics["direction"] = ("reversed" if cycle.x[quarter] < cycle.x[0]
                                    else "normal")
    metrics["area_shrinks_with_frequency"] = metrics["high_loop_area"] < metrics["low_loop_area"]

    with open(output_dir / f"{kind.value}_metrics.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(metrics.keys()) + "\n")
        fh.write(",".join(str(v) for v in metrics.values()) + "\n")
    return metrics


def run_directory(base, config: ExperimentConfig) -> Path:
    path = Path(base) / f"{config.digest}-s{config.seed}"
    path.mkdir(parents=True, exist_ok=True)
    return path
