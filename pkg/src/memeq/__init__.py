"""memeq: memristive crossbar networks trained with equilibrium propagation."""

from .devices import (
    DeviceKind,
    DeviceParams,
    DeviceState,
    PulseCommand,
    WaveformTrace,
    apply_pulse,
    loop_area,
    memristance,
    pinch_ratio,
    simulate_waveform,
    state_derivative,
)
from .network import (
    CircuitTopology,
    Crossbar,
    Network,
    Neuron,
    NonlinearityKind,
    WeightInit,
    build_network,
    nonlinearity_current,
    signed_output,
)
from .presets import PRESETS_VERSION, characterization_frequencies, default_params
from .solver import (
    EquilibriumState,
    NonConvergence,
    feedback_currents,
    kcl_residual,
    solve_free,
    solve_nudged,
)
from .trainer import (
    OptimizerState,
    TrainingConfig,
    adam_step,
    mse_loss,
    pam_modulate,
    pwm_modulate,
    raw_gradient,
    train,
)

__version__ = "0.1.0"
