"""Dense feed-forward regression network, written from scratch.

ReLU hidden layers, a single linear output neuron, inverted dropout,
Adam (or plain SGD) on an unhalved mean squared error, mean absolute
error as the evaluation metric, a deterministic train/validation split
and patience-based early stopping on the validation loss.

The per-sample :meth:`Network.forward` / :meth:`Network.backward` /
:meth:`Network.adam_step` methods define the math and are what the
gradient oracles test; :func:`fit` runs the same math through the fused
mini-batch kernel selected in :mod:`codaimp.kernels`.

Loss convention: the per-sample squared error carries no 1/2 factor, so
the output-layer gradient is ``2 * (prediction - target)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels

__all__ = [
    "AdamParams",
    "NetworkConfig",
    "Network",
    "TrainReport",
    "fit",
    "fit_new",
]

CHECKPOINT_VERSION = 1

# Training needs at least a handful of rows to split and standardize.
MIN_FIT_ROWS = 5

_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class AdamParams:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass(frozen=True)
class NetworkConfig:
    """Training controls.

    The defaults follow the full-scale profile: ten hidden layers of
    1000, 900, ..., 100 neurons, up to 300 epochs with patience 25, 10%
    dropout after each hidden layer and a 20% validation split trained
    with Adam.  :meth:`desk_profile` returns a reduced network for
    interactive and CI use; the full profile is several million
    parameters and trains accordingly slowly on a CPU.
    """

    hidden_sizes: tuple[int, ...] = tuple(range(1000, 99, -100))
    epochs: int = 300
    patience: int = 25
    dropout_rate: float = 0.1
    validation_fraction: float = 0.2
    optimizer: str = "adam"
    adam: AdamParams = field(default_factory=AdamParams)
    loss: str = "mse"
    metric: str = "mae"
    rng_seed: int = 0
    batch_size: int = 32

    def __post_init__(self):
        if not self.hidden_sizes or any(w < 1 for w in self.hidden_sizes):
            raise ValueError(f"hidden_sizes must be positive, got {self.hidden_sizes}")
        if self.epochs < 1 or self.patience < 1 or self.batch_size < 1:
            raise ValueError("epochs, patience and batch_size must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        if self.loss != "mse":
            raise ValueError(f"only the 'mse' loss is supported, got {self.loss!r}")
        if self.metric != "mae":
            raise ValueError(f"only the 'mae' metric is supported, got {self.metric!r}")

    @classmethod
    def paper_profile(cls, **overrides) -> "NetworkConfig":
        return cls(**overrides)

    @classmethod
    def desk_profile(cls, **overrides) -> "NetworkConfig":
        """Small profile for desk-scale runs: 3 hidden layers, 150 epochs."""
        overrides.setdefault("hidden_sizes", (64, 48, 32))
        overrides.setdefault("epochs", 150)
        return cls(**overrides)

    def with_seed(self, seed: int) -> "NetworkConfig":
        return replace(self, rng_seed=int(seed))


@dataclass
class TrainReport:
    """Per-epoch traces and stopping bookkeeping (epochs are 1-based)."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_mae: list[float] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    warnings: list[str] = field(default_factory=list)


class Network:
    """Weights, biases and Adam moment buffers of one regression net.

    ``weights[l]`` has shape (out_l, in_l) so a layer computes
    ``relu(W @ a + b)``; the final layer is linear with one neuron.
    After :func:`fit`, the network also carries the feature/target
    standardization used during training, and :meth:`predict` maps raw
    inputs to raw-scale outputs through it.
    """

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        self.weights = [np.ascontiguousarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.ascontiguousarray(b, dtype=np.float64) for b in biases]
        for l in range(1, len(self.weights)):
            if self.weights[l].shape[1] != self.weights[l - 1].shape[0]:
                raise ValueError(
                    f"layer {l} expects {self.weights[l].shape[1]} inputs but layer "
                    f"{l - 1} produces {self.weights[l - 1].shape[0]}"
                )
        if self.weights[-1].shape[0] != 1:
            raise ValueError("output layer must have exactly one neuron")
        self.m_w = [np.zeros_like(w) for w in self.weights]
        self.v_w = [np.zeros_like(w) for w in self.weights]
        self.m_b = [np.zeros_like(b) for b in self.biases]
        self.v_b = [np.zeros_like(b) for b in self.biases]
        self.t = 0
        self.x_mean = self.x_std = None
        self.y_mean = self.y_std = None

    @classmethod
    def initialize(cls, n_inputs: int, hidden_sizes, rng) -> "Network":
        """He-uniform weights (+-sqrt(6/fan_in)), zero biases."""
        rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        sizes = [int(n_inputs)] + [int(w) for w in hidden_sizes] + [1]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_hidden(self) -> int:
        return len(self.weights) - 1

    # -- per-sample math (parameter space, no standardization) -------------

    def forward(self, x, train: bool = False, dropout_rate: float = 0.0, rng=None):
        """Run one sample through the net.

        In train mode each hidden layer's activations are zeroed
        independently with probability ``dropout_rate`` and the survivors
        scaled by 1/(1 - rate); infer mode applies no dropout.  Returns
        the scalar prediction and the cache :meth:`backward` consumes.
        """
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.shape[0] != self.n_inputs:
            raise ValueError(f"input has {x.shape[0]} features, network expects {self.n_inputs}")
        use_dropout = train and dropout_rate > 0.0
        if use_dropout and rng is None:
            raise ValueError("train-mode dropout needs an rng")
        acts = [x]
        zs = []
        masks = []
        a = x
        for l in range(self.n_hidden):
            z = self.weights[l] @ a + self.biases[l]
            a = np.maximum(z, 0.0)
            if use_dropout:
                mask = (rng.random(a.shape[0]) >= dropout_rate) / (1.0 - dropout_rate)
                a = a * mask
                masks.append(mask)
            zs.append(z)
            acts.append(a)
        pred = (self.weights[-1] @ a + self.biases[-1])[0]
        cache = (acts, zs, masks if use_dropout else None)
        return pred, cache

    def backward(self, cache, target: float):
        """Gradients of the squared error (no 1/2) for one sample.

        The relu derivative is taken as 0 at non-positive pre-activations
        and 1 at positive ones.
        """
        acts, zs, masks = cache
        pred = (self.weights[-1] @ acts[-1] + self.biases[-1])[0]
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        g = 2.0 * (pred - float(target))
        grads_w[-1] = g * acts[-1][None, :]
        grads_b[-1] = np.array([g])
        ga = g * self.weights[-1][0]
        for l in range(self.n_hidden - 1, -1, -1):
            if masks is not None:
                ga = ga * masks[l]
            ga = ga * (zs[l] > 0)
            grads_w[l] = np.outer(ga, acts[l])
            grads_b[l] = ga.copy()
            if l > 0:
                ga = ga @ self.weights[l]
        return grads_w, grads_b

    def adam_step(self, grads_w, grads_b, batch_count: int, params: AdamParams) -> None:
        """Adam update with bias correction from summed per-sample gradients."""
        self.t += 1
        bc1 = 1.0 - params.beta1**self.t
        bc2 = 1.0 - params.beta2**self.t
        for l in range(len(self.weights)):
            for theta, g, m, v in (
                (self.weights[l], grads_w[l] / batch_count, self.m_w[l], self.v_w[l]),
                (self.biases[l], grads_b[l] / batch_count, self.m_b[l], self.v_b[l]),
            ):
                m *= params.beta1
                m += (1.0 - params.beta1) * g
                v *= params.beta2
                v += (1.0 - params.beta2) * g * g
                theta -= params.lr * (m / bc1) / (np.sqrt(v / bc2) + params.epsilon)

    def sgd_step(self, grads_w, grads_b, batch_count: int, lr: float) -> None:
        self.t += 1
        for l in range(len(self.weights)):
            self.weights[l] -= lr * grads_w[l] / batch_count
            self.biases[l] -= lr * grads_b[l] / batch_count

    # -- batch inference ----------------------------------------------------

    def _forward_batch(self, X: np.ndarray) -> np.ndarray:
        a = X
        for l in range(self.n_hidden):
            a = np.maximum(a @ self.weights[l].T + self.biases[l], 0.0)
        return (a @ self.weights[-1].T + self.biases[-1])[:, 0]

    def predict(self, X) -> np.ndarray:
        """Infer-mode predictions, one per row, in the scale of the targets.

        Applies the standardization captured by :func:`fit` when present.
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[0] == 0:
            return np.empty(0)
        if X.shape[1] != self.n_inputs:
            raise ValueError(f"input has {X.shape[1]} features, network expects {self.n_inputs}")
        if self.x_mean is not None:
            X = (X - self.x_mean) / self.x_std
        out = self._forward_batch(X)
        if self.y_mean is not None:
            out = self.y_mean + self.y_std * out
        return out

    # -- checkpointing -------------------------------------------------------

    def save(self, path) -> None:
        """Write a versioned ``.npz`` checkpoint.

        Layout: ``version`` (int), ``sizes`` (input width, hidden widths,
        1), ``W0..Wk`` / ``b0..bk`` as row-major float64 arrays, and the
        four standardization arrays when the network has been fitted.
        Optimizer moments are not part of a checkpoint.
        """
        sizes = [self.n_inputs] + [w.shape[0] for w in self.weights]
        arrays = {f"W{l}": w for l, w in enumerate(self.weights)}
        arrays.update({f"b{l}": b for l, b in enumerate(self.biases)})
        if self.x_mean is not None:
            arrays.update(
                x_mean=self.x_mean, x_std=self.x_std,
                y_mean=np.array([self.y_mean]), y_std=np.array([self.y_std]),
            )
        np.savez(path, version=CHECKPOINT_VERSION, sizes=np.array(sizes), **arrays)

    @classmethod
    def load(cls, path) -> "Network":
        with np.load(path) as data:
            version = int(data["version"])
            if version != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {version}")
            sizes = data["sizes"]
            n_layers = len(sizes) - 1
            net = cls(
                [data[f"W{l}"] for l in range(n_layers)],
                [data[f"b{l}"] for l in range(n_layers)],
            )
            if "x_mean" in data:
                net.x_mean = data["x_mean"]
                net.x_std = data["x_std"]
                net.y_mean = float(data["y_mean"][0])
                net.y_std = float(data["y_std"][0])
        return net


def _standardize_stats(A: np.ndarray):
    mean = A.mean(axis=0)
    std = A.std(axis=0)
    std = np.where(std < _STD_FLOOR, 1.0, std)
    return mean, std


def fit(net: Network, X, y, cfg: NetworkConfig, rng=None) -> TrainReport:
    """Train a network in place and return the per-epoch report.

    Rows are split into train/validation deterministically from the rng,
    features and targets standardized by the training-split mean and
    standard deviation, and mini-batches of ``min(cfg.batch_size,
    n_train)`` rows run through the fused kernel.  Training stops when
    the validation loss has not improved for ``cfg.patience`` consecutive
    epochs, and the parameters of the best validation epoch are restored.
    Reported losses and MAE values are in original target units.
    """
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = X.shape[0]
    if n < MIN_FIT_ROWS:
        raise ValueError(f"need at least {MIN_FIT_ROWS} rows to fit, got {n}")
    if y.shape[0] != n:
        raise ValueError(f"X has {n} rows but y has {y.shape[0]}")
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)

    report = TrainReport()

    perm = rng.permutation(n)
    n_val = int(round(cfg.validation_fraction * n))
    n_val = min(n_val, n - 1)  # never train on an empty split
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    monitor_train = n_val == 0
    if monitor_train:
        report.warnings.append(
            "validation split is empty; early stopping monitors the training loss"
        )

    x_mean, x_std = _standardize_stats(X[train_idx])
    y_mean, y_std = _standardize_stats(y[train_idx, None])
    y_mean, y_std = float(y_mean[0]), float(y_std[0])
    Xs = (X - x_mean) / x_std
    ys = (y - y_mean) / y_std
    Xs_train = np.ascontiguousarray(Xs[train_idx])
    ys_train = np.ascontiguousarray(ys[train_idx])
    Xs_val = np.ascontiguousarray(Xs[val_idx])
    ys_val = ys[val_idx]

    net.x_mean, net.x_std = x_mean, x_std
    net.y_mean, net.y_std = y_mean, y_std

    n_train = train_idx.shape[0]
    batch = min(cfg.batch_size, n_train)
    use_adam = cfg.optimizer == "adam"
    p = cfg.dropout_rate
    hidden = [w.shape[0] for w in net.weights[:-1]]

    best_metric = np.inf
    best_params = None
    stopped = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n_train)
        loss_sum = 0.0
        for start in range(0, n_train, batch):
            idx = order[start : start + batch]
            xb = np.ascontiguousarray(Xs_train[idx])
            yb = np.ascontiguousarray(ys_train[idx])
            masks = None
            if p > 0.0:
                masks = [
                    ((rng.random((idx.shape[0], w)) >= p) / (1.0 - p)) for w in hidden
                ]
            net.t += 1
            loss = kernels.train_batch(
                net.weights, net.biases, net.m_w, net.v_w, net.m_b, net.v_b,
                xb, yb, masks, net.t,
                cfg.adam.lr, cfg.adam.beta1, cfg.adam.beta2, cfg.adam.epsilon,
                use_adam,
            )
            loss_sum += loss * idx.shape[0]
        train_loss = loss_sum / n_train
        report.train_loss.append(train_loss * y_std**2)

        if monitor_train:
            monitored = train_loss
            report.val_loss.append(np.nan)
            report.val_mae.append(np.nan)
        else:
            val_err = net._forward_batch(Xs_val) - ys_val
            val_loss = float(np.mean(val_err * val_err))
            monitored = val_loss
            report.val_loss.append(val_loss * y_std**2)
            report.val_mae.append(float(np.mean(np.abs(val_err))) * y_std)

        stopped = epoch
        if monitored < best_metric:
            best_metric = monitored
            report.best_epoch = epoch
            best_params = (
                [w.copy() for w in net.weights],
                [b.copy() for b in net.biases],
            )
        elif epoch - report.best_epoch >= cfg.patience:
            break

    report.stopped_epoch = stopped
    if best_params is not None:
        net.weights = best_params[0]
        net.biases = best_params[1]
    return report


def fit_new(X, y, cfg: NetworkConfig) -> tuple[Network, TrainReport]:
    """Initialize a fresh network from the config seed and fit it."""
    X = np.asarray(X, dtype=np.float64)
    n_features = 1 if X.ndim == 1 else X.shape[1]
    rng = np.random.default_rng(cfg.rng_seed)
    net = Network.initialize(n_features, cfg.hidden_sizes, rng)
    report = fit(net, X, y, cfg, rng=rng)
    return net, report
