"""Layered nonlinear resistive network built from two memristor crossbars.

The circuit template: duplicated input wordlines (+u, -u per feature) plus a
constant bias wordline feed the first crossbar; each first-crossbar bitline
node carries a diode nonlinearity to ground and the input side of a
bidirectional amplifier; the amplifier output drives the second crossbar,
whose bitlines form duplicated output pairs read as (plus - minus).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .devices import DeviceParams, conductance_of, memristance_of, state_from_memristance


class NonlinearityKind(Enum):
    RELU_LIKE = "relu_like"
    SIGMOID_LIKE = "sigmoid_like"


@dataclass(frozen=True)
class Neuron:
    """Diode nonlinearity plus bidirectional amplifier for one hidden node.

    The diode branch sinks ``g_diode * (v - break)`` above its breakpoint and
    only ``g_leak * (v - break)`` below it. The amplifier applies ``gain``
    forward (voltage) and exactly ``1/gain`` backward (current); both are
    derived from the single stored ``gain`` so their product is reciprocal by
    construction.
    """

    kind: NonlinearityKind = NonlinearityKind.RELU_LIKE
    v_break: float = 0.0        # ReLU-like breakpoint
    v_low: float = -0.5         # sigmoid-like lower breakpoint
    v_high: float = 0.5         # sigmoid-like upper breakpoint
    g_diode: float = 1.0        # on-slope, S
    g_leak: float = 1e-6        # off-slope, S
    gain: float = 4.0

    def __post_init__(self):
        if self.gain <= 0:
            raise ValueError("amplifier gain must be > 0")
        if self.kind is NonlinearityKind.SIGMOID_LIKE and not self.v_low < self.v_high:
            raise ValueError("sigmoid-like breakpoints must satisfy v_low < v_high")

    @property
    def forward_gain(self) -> float:
        return self.gain

    @property
    def backward_attenuation(self) -> float:
        return 1.0 / self.gain


def nonlinearity_current(neuron: Neuron, branch_voltage):
    """Current drawn from the node by the diode branch(es), in A."""
    v = np.asarray(branch_voltage, dtype=float)
    if neuron.kind is NonlinearityKind.RELU_LIKE:
        slope = np.where(v >= neuron.v_break, neuron.g_diode, neuron.g_leak)
        return slope * (v - neuron.v_break)
    up = np.where(v > neuron.v_high, neuron.g_diode, neuron.g_leak) * (v - neuron.v_high)
    down = np.where(v < neuron.v_low, neuron.g_diode, neuron.g_leak) * (v - neuron.v_low)
    return up + down


def nonlinearity_slope(neuron: Neuron, branch_voltage):
    """di/dv of the diode branch(es); piecewise constant."""
    v = np.asarray(branch_voltage, dtype=float)
    if neuron.kind is NonlinearityKind.RELU_LIKE:
        return np.where(v >= neuron.v_break, neuron.g_diode, neuron.g_leak)
    up = np.where(v > neuron.v_high, neuron.g_diode, neuron.g_leak)
    down = np.where(v < neuron.v_low, neuron.g_diode, neuron.g_leak)
    return up + down


def signed_output(i_plus, i_minus):
    """Signed reading of a duplicated output pair."""
    return i_plus - i_minus


@dataclass(frozen=True)
class CircuitTopology:
    """Shape of the layered network. Exactly one hidden layer is supported."""

    input_count: int
    hidden_sizes: tuple[int, ...]
    output_count: int
    bias: bool = True
    bias_voltage: float = 0.5
    gain: float = 4.0
    nonlinearity: NonlinearityKind = NonlinearityKind.RELU_LIKE
    v_break: float = 0.0
    v_low: float = -0.5
    v_high: float = 0.5
    # input conductance of the read-out stage at every output bitline; with a
    # purely floating bitline the outputs would be convex combinations of the
    # hidden voltages, which collapses small hidden layers to a rank-one map
    output_load: float = 1e-3

    def __post_init__(self):
        if isinstance(self.hidden_sizes, int):
            object.__setattr__(self, "hidden_sizes", (self.hidden_sizes,))
        else:
            object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))
        if len(self.hidden_sizes) != 1:
            raise ValueError("exactly one hidden layer is supported")
        if self.input_count < 1 or self.output_count < 1 or self.hidden_sizes[0] < 1:
            raise ValueError("layer sizes must be >= 1")

    @property
    def hidden_size(self) -> int:
        return self.hidden_sizes[0]

    @property
    def n_wordlines(self) -> int:
        # duplicated inputs plus the bias line
        return 2 * self.input_count + (1 if self.bias else 0)

    @property
    def n_output_nodes(self) -> int:
        return 2 * self.output_count

    @property
    def device_count(self) -> int:
        return self.n_wordlines * self.hidden_size + self.hidden_size * self.n_output_nodes

    def neuron(self) -> Neuron:
        return Neuron(kind=self.nonlinearity, v_break=self.v_break, v_low=self.v_low,
                      v_high=self.v_high, gain=self.gain)


@dataclass(frozen=True)
class WeightInit:
    """Uniform-in-memristance initialization over [r_min, r_max], seeded."""

    seed: int
    r_min: float
    r_max: float

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ValueError("require 0 < r_min < r_max")


class Crossbar:
    """Bank of identical-model devices at wordline/bitline intersections."""

    def __init__(self, params: DeviceParams, x: np.ndarray):
        self.params = params
        lo, hi = params.state_bounds()
        self.x_min, self.x_max = lo, hi
        self.x = np.clip(np.asarray(x, dtype=float), lo, hi)

    @property
    def shape(self) -> tuple[int, int]:
        return self.x.shape

    def conductances(self) -> np.ndarray:
        return conductance_of(self.params, self.x)

    def memristances(self) -> np.ndarray:
        return memristance_of(self.params, self.x)


class Network:
    """Two crossbars plus the hidden-neuron bank; owns cached conductances."""

    def __init__(self, topology: CircuitTopology, crossbar_in: Crossbar, crossbar_out: Crossbar,
                 init_checksum: str = ""):
        h = topology.hidden_size
        if crossbar_in.shape != (topology.n_wordlines, h):
            raise ValueError("first crossbar shape does not match topology")
        if crossbar_out.shape != (h, topology.n_output_nodes):
            raise ValueError("second crossbar shape does not match topology")
        self.topology = topology
        self.neuron = topology.neuron()
        self.crossbar_in = crossbar_in
        self.crossbar_out = crossbar_out
        self.init_checksum = init_checksum
        self.g_in = crossbar_in.conductances()
        self.g_out = crossbar_out.conductances()

    def refresh_conductances(self) -> None:
        self.g_in = self.crossbar_in.conductances()
        self.g_out = self.crossbar_out.conductances()

    def wordline_voltages(self, features) -> np.ndarray:
        """Map feature vectors to wordline drive: (+u, -u) pairs plus bias."""
        f = np.asarray(features, dtype=float)
        single = f.ndim == 1
        f = np.atleast_2d(f)
        if f.shape[1] != self.topology.input_count:
            raise ValueError("feature count does not match topology")
        w = np.empty((f.shape[0], self.topology.n_wordlines))
        w[:, 0 : 2 * self.topology.input_count : 2] = f
        w[:, 1 : 2 * self.topology.input_count : 2] = -f
        if self.topology.bias:
            w[:, -1] = self.topology.bias_voltage
        return w[0] if single else w

    @staticmethod
    def signed_outputs(output_voltages) -> np.ndarray:
        o = np.asarray(output_voltages)
        return signed_output(o[..., 0::2], o[..., 1::2])


def build_network(topology: CircuitTopology, params: DeviceParams, init: WeightInit) -> Network:
    """Build a network with memristances drawn uniformly from the init range.

    The same seed reproduces the network bit-exactly; the drawn memristance
    matrices (before the per-model state inversion) are checksummed so that
    different device models built from one seed can be proven to start from
    identical weights.
    """
    rng = np.random.Generator(np.random.Philox(key=init.seed))
    shape_in = (topology.n_wordlines, topology.hidden_size)
    shape_out = (topology.hidden_size, topology.n_output_nodes)
    m_in = rng.uniform(init.r_min, init.r_max, size=shape_in)
    m_out = rng.uniform(init.r_min, init.r_max, size=shape_out)
    checksum = hashlib.sha256(m_in.tobytes() + m_out.tobytes()).hexdigest()
    crossbar_in = Crossbar(params, state_from_memristance(params, m_in))
    crossbar_out = Crossbar(params, state_from_memristance(params, m_out))
    return Network(topology, crossbar_in, crossbar_out, init_checksum=checksum)


def save_checkpoint(network: Network, path_prefix: str) -> list[str]:
    """Write one delimited file per crossbar: row,col,x,memristance_ohm."""
    paths = []
    for tag, cb in (("crossbar1", network.crossbar_in), ("crossbar2", network.crossbar_out)):
        path = f"{path_prefix}_{tag}.csv"
        m = cb.memristances()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("row,col,x,memristance_ohm\n")
            rows, cols = cb.shape
            for r in range(rows):
                for c in range(cols):
                    fh.write(f"{r},{c},{cb.x[r, c]:.17g},{m[r, c]:.17g}\n")
        paths.append(path)
    return paths


def load_checkpoint(network: Network, path_prefix: str) -> None:
    """Restore crossbar states written by :func:`save_checkpoint`."""
    for tag, cb in (("crossbar1", network.crossbar_in), ("crossbar2", network.crossbar_out)):
        path = f"{path_prefix}_{tag}.csv"
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[0] != cb.x.size:
            raise ValueError(f"{path}: expected {cb.x.size} device rows, got {data.shape[0]}")
        x = np.empty_like(cb.x)
        x[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 2]
        cb.x = np.clip(x, cb.x_min, cb.x_max)
    network.refresh_conductances()
