"""Two-phase equilibrium training with pulse-programmed weight updates.

One epoch = one full-batch update: settle every sample's free equilibrium,
inject the error-proportional feedback currents and settle the nudged
equilibrium, form the per-device gradient from the difference of squared
voltage drops, scale it through Adam, translate the update value into a
programming pulse (width- or amplitude-modulated), and apply that pulse to
every device. Device states change only in the programming step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .devices import DeviceKind, PulseCommand, apply_pulse_raw
from .presets import pam_default_frequency
from .solver import NonConvergence, solve_batch


@dataclass(frozen=True)
class TrainingConfig:
    eta: float
    beta: float = 1e-6
    epochs: int = 50
    estimator: str = "forward"          # "forward" or "centred"
    modulation: str = "pwm"             # "pwm" or "pam"
    const_voltage: float = 1.0          # PWM amplitude, V
    const_frequency: float | None = None  # PAM frequency, Hz; None = per-model default
    target_voltage: float = 1.0         # one-hot high level, V
    adam_beta1: float = 0.5
    adam_beta2: float = 0.5
    adam_epsilon: float = 1e-8

    def __post_init__(self):
        if self.beta == 0:
            raise ValueError("beta must be nonzero")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.estimator not in ("forward", "centred"):
            raise ValueError("estimator must be 'forward' or 'centred'")
        if self.modulation not in ("pwm", "pam"):
            raise ValueError("modulation must be 'pwm' or 'pam'")
        if self.modulation == "pwm" and not self.const_voltage > 0:
            raise ValueError("PWM needs const_voltage > 0")
        if self.modulation == "pam" and self.const_frequency is not None \
                and not self.const_frequency > 0:
            raise ValueError("PAM needs const_frequency > 0")


@dataclass
class OptimizerState:
    """Adam moments for one bank of devices."""

    m: np.ndarray
    v: np.ndarray
    t: int
    eta: float
    beta1: float = 0.5
    beta2: float = 0.5
    epsilon: float = 1e-8

    @classmethod
    def zeros(cls, shape, config: TrainingConfig) -> "OptimizerState":
        return cls(m=np.zeros(shape), v=np.zeros(shape), t=0, eta=config.eta,
                   beta1=config.adam_beta1, beta2=config.adam_beta2,
                   epsilon=config.adam_epsilon)


def raw_gradient(du_free, du_nudged, beta):
    """Per-device gradient estimate from one sample's two phases."""
    du_free = np.asarray(du_free, dtype=float)
    du_nudged = np.asarray(du_nudged, dtype=float)
    return (du_nudged ** 2 - du_free ** 2) / beta


def adam_step(opt: OptimizerState, grad):
    """Advance the optimizer one step and return the update value(s)."""
    grad = np.asarray(grad, dtype=float)
    opt.t += 1
    opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grad
    opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * grad ** 2
    m_hat = opt.m / (1.0 - opt.beta1 ** opt.t)
    v_hat = opt.v / (1.0 - opt.beta2 ** opt.t)
    return opt.eta * m_hat / (np.sqrt(v_hat) + opt.epsilon)


def _pwm_arrays(update_value, const_voltage, kind: DeviceKind):
    update_value = np.asarray(update_value, dtype=float)
    # positive update -> negative pulse, so conductance follows -gradient;
    # VTEAM switches the opposite way, so its polarity is flipped once more
    amplitude = np.where(update_value >= 0, -const_voltage, const_voltage)
    if kind is DeviceKind.VTEAM:
        amplitude = -amplitude
    duration = np.abs(update_value) / const_voltage
    return amplitude, duration


def _pam_arrays(update_value, const_frequency, kind: DeviceKind):
    update_value = np.asarray(update_value, dtype=float)
    duration = 1.0 / const_frequency
    amplitude = -update_value / duration
    if kind is DeviceKind.VTEAM:
        amplitude = -amplitude
    return amplitude, np.broadcast_to(duration, amplitude.shape)


def pwm_modulate(update_value, const_voltage, kind: DeviceKind) -> PulseCommand:
    """Fixed-amplitude pulse whose width carries the update magnitude."""
    if not const_voltage > 0:
        raise ValueError("const_voltage must be > 0")
    amplitude, duration = _pwm_arrays(update_value, const_voltage, kind)
    return PulseCommand(amplitude=float(amplitude), duration=float(duration))


def pam_modulate(update_value, const_frequency, kind: DeviceKind) -> PulseCommand:
    """Fixed-width pulse whose amplitude carries the update magnitude."""
    if not const_frequency > 0:
        raise ValueError("const_frequency must be > 0")
    amplitude, duration = _pam_arrays(update_value, const_frequency, kind)
    return PulseCommand(amplitude=float(amplitude), duration=float(duration))


def mse_loss(predictions, targets) -> float:
    """Mean squared error over classes, then over the batch."""
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.shape != targets.shape:
        raise ValueError(f"shape mismatch: {predictions.shape} vs {targets.shape}")
    return float(np.mean((predictions - targets) ** 2))


def train(network, dataset, config: TrainingConfig) -> list[float]:
    """Run the full-batch training loop; returns the loss per epoch."""
    if not getattr(dataset, "normalized", False):
        raise ValueError("dataset must be normalized before training")
    features = np.asarray(dataset.features, dtype=float)
    wordlines = network.wordline_voltages(features)
    targets = np.asarray(dataset.targets, dtype=float) * config.target_voltage
    kind = network.crossbar_in.params.kind
    gain = network.neuron.gain
    n_out_nodes = network.topology.n_output_nodes
    zero_inj = np.zeros((features.shape[0], n_out_nodes))

    frequency = config.const_frequency
    if config.modulation == "pam" and frequency is None:
        frequency = pam_default_frequency(kind)

    opt_in = OptimizerState.zeros(network.crossbar_in.shape, config)
    opt_out = OptimizerState.zeros(network.crossbar_out.shape, config)
    losses: list[float] = []

    for epoch in range(config.epochs):
        def settle(injections, warm):
            try:
                a, o, _, _ = solve_batch(network, wordlines, injections, warm)
            except NonConvergence as exc:
                raise NonConvergence(
                    f"epoch {epoch}, sample {exc.sample}: {exc}",
                    residual=exc.residual, sample=exc.sample) from exc
            return a, o

        a0, o0 = settle(zero_inj, None)
        y_hat = o0[:, 0::2] - o0[:, 1::2]
        losses.append(mse_loss(y_hat, targets))
        warm = np.concatenate([a0, o0], axis=1)

        du_in_0 = wordlines[:, :, None] - a0[:, None, :]
        du_out_0 = gain * a0[:, :, None] - o0[:, None, :]

        if config.estimator == "forward":
            a_n, o_n = settle(_injections(targets, y_hat, config.beta), warm)
            g_in = raw_gradient(du_in_0, wordlines[:, :, None] - a_n[:, None, :],
                                config.beta).mean(axis=0)
            g_out = raw_gradient(du_out_0, gain * a_n[:, :, None] - o_n[:, None, :],
                                 config.beta).mean(axis=0)
        else:
            # symmetric estimator: average of the +beta and -beta forward forms
            a_p, o_p = settle(_injections(targets, y_hat, config.beta), warm)
            a_m, o_m = settle(_injections(targets, y_hat, -config.beta), warm)
            du_in_p = wordlines[:, :, None] - a_p[:, None, :]
            du_in_m = wordlines[:, :, None] - a_m[:, None, :]
            du_out_p = gain * a_p[:, :, None] - o_p[:, None, :]
            du_out_m = gain * a_m[:, :, None] - o_m[:, None, :]
            g_in = raw_gradient(du_in_m, du_in_p, 2.0 * config.beta).mean(axis=0)
            g_out = raw_gradient(du_out_m, du_out_p, 2.0 * config.beta).mean(axis=0)

        _program(network.crossbar_in, adam_step(opt_in, g_in), kind, config, frequency)
        _program(network.crossbar_out, adam_step(opt_out, g_out), kind, config, frequency)
        network.refresh_conductances()

    return losses


def _injections(targets, y_hat, beta):
    i_plus = beta * (targets - y_hat)
    out = np.empty((targets.shape[0], 2 * targets.shape[1]))
    out[:, 0::2] = i_plus
    out[:, 1::2] = -i_plus
    return out


def _program(crossbar, update_values, kind, config, frequency):
    if config.modulation == "pwm":
        amplitude, duration = _pwm_arrays(update_values, config.const_voltage, kind)
    else:
        amplitude, duration = _pam_arrays(update_values, frequency, kind)
    crossbar.x = apply_pulse_raw(crossbar.params, crossbar.x, amplitude, duration,
                                 crossbar.x_min, crossbar.x_max)


def save_loss_history(path, losses) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,loss\n")
        for epoch, loss in enumerate(losses):
            fh.write(f"{epoch},{loss:.17g}\n")


def load_loss_history(path) -> list[float]:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return [float(v) for v in rows[:, 1]]
