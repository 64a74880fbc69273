"""Electrical equilibrium of the layered network.

Unknowns are the hidden pre-activation node voltages (first-crossbar
bitlines) and the output node voltages; amplifier outputs are eliminated
through the forward gain. The nodal equations are piecewise linear in the
diode segments, solved by damped Newton iteration with the segment slopes
re-evaluated at every iterate (active-set tracking) and a backtracking line
search on the residual max-norm.

The free phase injects nothing at the outputs; the nudged phase injects the
error-proportional feedback currents computed from the free-phase readings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Network, nonlinearity_current, nonlinearity_slope

RESIDUAL_TOL = 1e-9     # A, max-norm over non-source nodes
MAX_ITERATIONS = 200
MAX_BACKTRACKS = 50
INPUT_LIMIT_VOLTS = 0.5


class NonConvergence(RuntimeError):
    """Newton iteration hit its cap; carries the last residual in amps."""

    def __init__(self, message, residual=float("nan"), sample=None):
        super().__init__(message)
        self.residual = residual
        self.sample = sample


@dataclass
class EquilibriumState:
    """One solved phase: node voltages, per-device drops, residual."""

    phase: str                      # "free" or "nudged"
    beta: float
    wordline_voltages: np.ndarray   # driven input nodes (known)
    hidden_voltages: np.ndarray     # pre-activation nodes, one per hidden neuron
    output_voltages: np.ndarray     # duplicated output nodes (+,-,+,-,...)
    kcl_residual: float
    iterations: int
    gain: float

    @property
    def y_plus(self) -> np.ndarray:
        return self.output_voltages[0::2]

    @property
    def y_minus(self) -> np.ndarray:
        return self.output_voltages[1::2]

    @property
    def predictions(self) -> np.ndarray:
        return self.y_plus - self.y_minus

    def voltage_drops_in(self) -> np.ndarray:
        """Delta-U across every first-crossbar device (wordline minus bitline)."""
        return self.wordline_voltages[:, None] - self.hidden_voltages[None, :]

    def voltage_drops_out(self) -> np.ndarray:
        """Delta-U across every second-crossbar device (amplified hidden minus output)."""
        return self.gain * self.hidden_voltages[:, None] - self.output_voltages[None, :]

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("node,voltage_V\n")
            for i, v in enumerate(self.wordline_voltages):
                fh.write(f"in{i},{v:.17g}\n")
            for i, v in enumerate(self.hidden_voltages):
                fh.write(f"hid{i},{v:.17g}\n")
            for i, v in enumerate(self.output_voltages):
                fh.write(f"out{i},{v:.17g}\n")
            fh.write(f"residual_A,{self.kcl_residual:.17g}\n")


def feedback_currents(y_target, y_plus, y_minus, beta):
    """Output-node injections proportional to the free-phase error.

    Returns (I_plus, I_minus) with I_minus = -I_plus exactly.
    """
    if not np.all(np.isfinite(np.asarray(beta))):
        raise ValueError("beta must be finite")
    i_plus = beta * (np.asarray(y_target, dtype=float) - np.asarray(y_plus, dtype=float)
                     + np.asarray(y_minus, dtype=float))
    return i_plus, -i_plus


def kcl_residual(network: Network, wordline_voltages, hidden_voltages, output_voltages,
                 injections=None) -> float:
    """Worst node-current imbalance, from explicit branch enumeration.

    Deliberately independent of the Newton assembly: every branch current is
    recomputed from Ohm's law / the device laws and summed per node.
    """
    w = np.asarray(wordline_voltages, dtype=float)
    a = np.asarray(hidden_voltages, dtype=float)
    o = np.asarray(output_voltages, dtype=float)
    gain = network.neuron.gain

    drops_in = w[..., :, None] - a[..., None, :]
    into_hidden = np.sum(drops_in * network.g_in, axis=-2)
    diode = nonlinearity_current(network.neuron, a)
    drops_out = gain * a[..., :, None] - o[..., None, :]
    forward = np.sum(drops_out * network.g_out, axis=-1)   # current leaving each amplifier
    node_a = into_hidden - diode - forward / gain

    node_o = np.sum(drops_out * network.g_out, axis=-2) - o * network.topology.output_load
    if injections is not None:
        node_o = node_o + np.asarray(injections, dtype=float)
    return float(np.max(np.abs(np.concatenate([np.atleast_1d(node_a.ravel()),
                                               np.atleast_1d(node_o.ravel())]))))


def solve_free(network: Network, input_voltages, tol=RESIDUAL_TOL) -> EquilibriumState:
    """Settle the network with inputs applied and no output injection."""
    features = np.asarray(input_voltages, dtype=float)
    if features.ndim != 1:
        raise ValueError("solve_free takes a single feature vector")
    if np.any(np.abs(features) > INPUT_LIMIT_VOLTS + 1e-12):
        raise ValueError(f"input voltages must lie within +-{INPUT_LIMIT_VOLTS} V")
    w = network.wordline_voltages(features)
    inj = np.zeros(network.topology.n_output_nodes)
    a, o, iters = _solve_single(network, w, inj, None, tol)
    res = kcl_residual(network, w, a, o, inj)
    if res > tol:
        raise NonConvergence(f"independent residual check failed: {res:.3e} A", residual=res)
    return EquilibriumState("free", 0.0, w, a, o, res, iters, network.neuron.gain)


def solve_nudged(network: Network, input_voltages, y_target, beta,
                 free_state: EquilibriumState | None = None, tol=RESIDUAL_TOL) -> EquilibriumState:
    """Settle with feedback currents held at their free-phase values.

    ``beta`` may be negative (used by the symmetric gradient estimator) or
    zero, in which case the warm-started iteration accepts the free solution
    unchanged.
    """
    if free_state is None:
        free_state = solve_free(network, input_voltages, tol=tol)
    y_target = np.asarray(y_target, dtype=float)
    i_plus, i_minus = feedback_currents(y_target, free_state.y_plus, free_state.y_minus, beta)
    inj = np.empty(network.topology.n_output_nodes)
    inj[0::2] = i_plus
    inj[1::2] = i_minus
    warm = np.concatenate([free_state.hidden_voltages, free_state.output_voltages])
    a, o, iters = _solve_single(network, free_state.wordline_voltages, inj, warm, tol)
    res = kcl_residual(network, free_state.wordline_voltages, a, o, inj)
    if res > tol:
        raise NonConvergence(f"independent residual check failed: {res:.3e} A", residual=res)
    return EquilibriumState("nudged", float(beta), free_state.wordline_voltages, a, o, res,
                            iters, network.neuron.gain)


def _solve_single(network, wordlines, injections, warm_start, tol):
    a, o, iters, _ = solve_batch(network, wordlines[None, :], injections[None, :],
                                 None if warm_start is None else warm_start[None, :], tol)
    return a[0], o[0], iters


def solve_batch(network: Network, wordlines, injections, warm_start=None, tol=RESIDUAL_TOL):
    """Newton-solve many independent samples against one network snapshot.

    Returns (hidden (S,H), outputs (S,2K), iterations, residuals (S,)).
    Raises NonConvergence naming the first sample that failed.
    """
    g1 = network.g_in
    g2 = network.g_out
    gain = network.neuron.gain
    neuron = network.neuron
    n_hidden = g1.shape[1]
    n_out = g2.shape[1]
    n = n_hidden + n_out

    w = np.asarray(wordlines, dtype=float)
    inj = np.asarray(injections, dtype=float)
    samples = w.shape[0]

    s1 = g1.sum(axis=0)
    s2_row = g2.sum(axis=1)
    s2_col = g2.sum(axis=0) + network.topology.output_load
    drive = w @ g1                       # (S,H)

    def residual(v, rows=None):
        d = drive if rows is None else drive[rows]
        i_inj = inj if rows is None else inj[rows]
        a = v[:, :n_hidden]
        o = v[:, n_hidden:]
        f_a = d - a * (s1 + s2_row) - nonlinearity_current(neuron, a) + (o @ g2.T) / gain
        f_o = gain * (a @ g2) - o * s2_col + i_inj
        return np.concatenate([f_a, f_o], axis=1)

    if warm_start is None:
        v = np.zeros((samples, n))
    else:
        v = np.array(warm_start, dtype=float, copy=True)

    # constant Jacobian blocks; only the hidden diagonal tracks diode segments
    j_template = np.zeros((n, n))
    j_template[:n_hidden, n_hidden:] = g2 / gain
    j_template[n_hidden:, :n_hidden] = gain * g2.T
    j_template[n_hidden:, n_hidden:] = -np.diag(s2_col)

    f = residual(v)
    norm = np.max(np.abs(f), axis=1)
    hidden_idx = np.arange(n_hidden)

    for iteration in range(MAX_ITERATIONS):
        active = norm > tol
        if not np.any(active):
            return v[:, :n_hidden], v[:, n_hidden:], iteration, norm
        idx = np.nonzero(active)[0]
        jac = np.broadcast_to(j_template, (idx.size, n, n)).copy()
        diag = -(s1 + s2_row + nonlinearity_slope(neuron, v[idx, :n_hidden]))
        jac[:, hidden_idx, hidden_idx] = diag
        step = np.linalg.solve(jac, -f[idx][..., None])[..., 0]

        alpha = np.ones(idx.size)
        for _ in range(MAX_BACKTRACKS):
            trial = v[idx] + alpha[:, None] * step
            trial_norm = np.max(np.abs(residual(trial, rows=idx)), axis=1)
            ok = trial_norm <= (1.0 - 1e-4 * alpha) * norm[idx]
            if np.all(ok):
                break
            alpha = np.where(ok, alpha, alpha * 0.5)
        v[idx] = v[idx] + alpha[:, None] * step
        f = residual(v)
        norm = np.max(np.abs(f), axis=1)

    worst = int(np.argmax(norm))
    raise NonConvergence(
        f"Newton failed to reach {tol:.1e} A in {MAX_ITERATIONS} iterations "
        f"(sample {worst}, residual {norm[worst]:.3e} A)",
        residual=float(norm[worst]), sample=worst)
