"""Minimal dense-network engine and the two detectors built on it.

The engine is a plain list of affine layers with relu or linear
activations, trained by mini-batch gradient descent with adaptive moment
estimates on a squared-error loss.  The forecaster predicts the value
after each window; the autoencoder reconstructs whole windows and scores
by reconstruction error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import (
    DetectorConfig,
    FittedDetector,
    ScoreSeries,
    TimeSeries,
    WindowFrame,
    frame,
    subsequences,
)
from ..errors import DimensionMismatch, NumericalDivergence

__all__ = [
    "DenseLayer",
    "DenseNet",
    "TrainSpec",
    "AutoencoderNet",
    "dense_net",
    "net_forward",
    "net_gradients",
    "net_train",
]

_ACTIVATIONS = ("relu", "linear")


@dataclass
class DenseLayer:
    weights: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)
    activation: str

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}, got {self.activation!r}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[1],):
            raise DimensionMismatch("bias must match the weight matrix's output dimension")


@dataclass
class DenseNet:
    """Chain of dense layers; mutated in place by training."""

    layers: list[DenseLayer]
    seed: int = 0

    def __post_init__(self):
        for previous, current in zip(self.layers, self.layers[1:]):
            if previous.weights.shape[1] != current.weights.shape[0]:
                raise DimensionMismatch(
                    f"layer dimensions do not chain: {previous.weights.shape} then "
                    f"{current.weights.shape}"
                )

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[1]


@dataclass(frozen=True)
class TrainSpec:
    """Mini-batch schedule and adaptive-moment optimizer constants."""

    batch_size: int = 32
    epochs: int = 50
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")


def dense_net(dims: Sequence[int], activations: Sequence[str], seed: int = 0) -> DenseNet:
    """Build a net with uniform +-sqrt(6/(fan_in+fan_out)) weights, zero bias."""
    if len(activations) != len(dims) - 1:
        raise DimensionMismatch("need one activation per layer")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out, activation in zip(dims, dims[1:], activations):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append(
            DenseLayer(
                weights=rng.uniform(-bound, bound, size=(fan_in, fan_out)),
                bias=np.zeros(fan_out),
                activation=activation,
            )
        )
    return DenseNet(layers=layers, seed=seed)


def _forward_batch(net: DenseNet, batch: np.ndarray) -> tuple[np.ndarray, list, list]:
    """Outputs plus per-layer inputs and pre-activations for backprop."""
    inputs = [batch]
    pre_activations = []
    out = batch
    for layer in net.layers:
        z = out @ layer.weights + layer.bias
        pre_activations.append(z)
        out = np.maximum(z, 0.0) if layer.activation == "relu" else z
        inputs.append(out)
    return out, inputs[:-1], pre_activations


def net_forward(net: DenseNet, x) -> np.ndarray:
    """Evaluate the net on one input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise DimensionMismatch(f"expected input of shape ({net.input_dim},), got {x.shape}")
    out, _, _ = _forward_batch(net, x[None, :])
    return out[0]


def net_gradients(net: DenseNet, batch: np.ndarray, targets: np.ndarray):
    """Loss and backprop gradients of mean squared error over the batch."""
    out, inputs, pre_activations = _forward_batch(net, batch)
    diff = out - targets
    loss = float(np.mean(diff**2))
    delta = 2.0 * diff / diff.size
    grads = [None] * len(net.layers)
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        if layer.activation == "relu":
            delta = delta * (pre_activations[i] > 0.0)
        grads[i] = (inputs[i].T @ delta, delta.sum(axis=0))
        if i:
            delta = delta @ layer.weights.T
    return loss, grads


def net_train(net: DenseNet, data, spec: TrainSpec = TrainSpec()) -> list[float]:
    """Train in place; returns one mean loss per epoch.

    ``data`` is a WindowFrame (windows predict targets) or an
    (inputs, targets) array pair for reconstruction training.  Shuffling is
    seeded from the net, so training is reproducible bit for bit.
    """
    if isinstance(data, WindowFrame):
        inputs = data.windows
        targets = data.targets[:, None]
    else:
        inputs, targets = data
        inputs = np.asarray(inputs, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)
        if targets.ndim == 1:
            targets = targets[:, None]
    n = inputs.shape[0]
    if n == 0:
        raise DimensionMismatch("training data is empty")
    if inputs.shape[1] != net.input_dim or targets.shape[1] != net.output_dim:
        raise DimensionMismatch(
            f"data shapes {inputs.shape}/{targets.shape} do not fit net "
            f"{net.input_dim}->{net.output_dim}"
        )

    rng = np.random.default_rng(net.seed)
    moment1 = [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in net.layers]
    moment2 = [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in net.layers]
    step = 0
    history = []
    for epoch in range(spec.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        # Overflow inside a batch is not a crash: the non-finite epoch loss
        # below turns it into a NumericalDivergence report.
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, n, spec.batch_size):
                chosen = order[start : start + spec.batch_size]
                loss, grads = net_gradients(net, inputs[chosen], targets[chosen])
                epoch_loss += loss * chosen.size
                step += 1
                correction1 = 1.0 - spec.beta1**step
                correction2 = 1.0 - spec.beta2**step
                for layer, m, v, (gw, gb) in zip(net.layers, moment1, moment2, grads):
                    for param, grad, m_arr, v_arr in (
                        (layer.weights, gw, m[0], v[0]),
                        (layer.bias, gb, m[1], v[1]),
                    ):
                        m_arr *= spec.beta1
                        m_arr += (1.0 - spec.beta1) * grad
                        v_arr *= spec.beta2
                        v_arr += (1.0 - spec.beta2) * grad**2
                        param -= spec.learning_rate * (m_arr / correction1) / (
                            np.sqrt(v_arr / correction2) + spec.eps
                        )
        mean_loss = epoch_loss / n
        if not np.isfinite(mean_loss):
            raise NumericalDivergence(epoch)
        history.append(mean_loss)
    return history


@dataclass(frozen=True)
class AutoencoderNet:
    """Window reconstructor: relu encoder/decoder stack, linear output.

    The bottleneck must be narrower than the window, otherwise identity
    copying makes reconstruction error meaningless.
    """

    net: DenseNet
    width: int
    hidden_dims: tuple

    def __post_init__(self):
        bottleneck = self.hidden_dims[-1]
        if bottleneck >= self.width:
            raise DimensionMismatch(
                f"bottleneck {bottleneck} must be narrower than the window width {self.width}"
            )


def _build_autoencoder(width: int, hidden_dims: Sequence[int], seed: int) -> AutoencoderNet:
    hidden = tuple(int(h) for h in hidden_dims)
    dims = [width, *hidden, *reversed(hidden[:-1]), width]
    activations = ["relu"] * (len(dims) - 2) + ["linear"]
    return AutoencoderNet(
        net=dense_net(dims, activations, seed=seed), width=width, hidden_dims=hidden
    )


def _train_spec_from(cfg: DetectorConfig) -> TrainSpec:
    return TrainSpec(
        batch_size=int(cfg.param("batch_size", 32)),
        epochs=int(cfg.param("epochs", 50)),
        learning_rate=float(cfg.param("learning_rate", 1e-3)),
    )


class MlpDetector:
    """Window-to-next-value forecaster: w -> 100 -> 50 -> 1, relu hidden."""

    name = "mlp"
    family = "neural"
    keys = frozenset({"hidden_dims", "epochs", "batch_size", "learning_rate"})
    defaults = {"hidden_dims": (100, 50), "epochs": 50, "batch_size": 32, "learning_rate": 1e-3}

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        hidden = tuple(int(h) for h in cfg.param("hidden_dims", (100, 50)))
        dims = [cfg.window_width, *hidden, 1]
        net = dense_net(dims, ["relu"] * len(hidden) + ["linear"], seed=cfg.seed)
        net_train(net, frame(train, cfg.window_width), _train_spec_from(cfg))
        return FittedDetector.wrap(cfg, net)

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        windows = frame(test, fitted.config.window_width)
        out, _, _ = _forward_batch(fitted.state, windows.windows)
        return ScoreSeries(
            scores=np.abs(out[:, 0] - windows.targets),
            indices=windows.target_indices,
            detector_name=fitted.name,
        )


class AutoencoderDetector:
    """Window reconstruction error; high error flags an unfamiliar shape."""

    name = "autoencoder"
    family = "neural"
    keys = frozenset({"hidden_dims", "epochs", "batch_size", "learning_rate"})
    defaults = {"hidden_dims": (32, 16), "epochs": 50, "batch_size": 32, "learning_rate": 1e-3}

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        width = cfg.window_width
        auto = _build_autoencoder(width, cfg.param("hidden_dims", (32, 16)), cfg.seed)
        windows = subsequences(train, width)
        net_train(auto.net, (windows.windows, windows.windows), _train_spec_from(cfg))
        return FittedDetector.wrap(cfg, auto)

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        auto: AutoencoderNet = fitted.state
        windows = subsequences(test, fitted.config.window_width)
        out, _, _ = _forward_batch(auto.net, windows.windows)
        errors = np.sqrt(((out - windows.windows) ** 2).sum(axis=1))
        return ScoreSeries(
            scores=errors, indices=windows.target_indices, detector_name=fitted.name
        )


def _reject_unknown_keys(cfg: DetectorConfig, allowed: frozenset):
    unknown = set(cfg.hyperparameters) - set(allowed)
    if unknown:
        raise ValueError(
            f"{cfg.name}: unknown hyperparameter keys {sorted(unknown)}; "
            f"allowed: {sorted(allowed)}"
        )
