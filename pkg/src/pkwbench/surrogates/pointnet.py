"""Tiny point-set regression network with hand-written backprop.

The encoder lifts every point independently (widths 4 -> 64 -> 64 -> 128),
a max pool over the point axis collapses the set to one 128-vector, and a
small head (128 -> 64 -> 1) maps that to the scalar target.  Because the
pool is symmetric in its inputs, predictions are exactly invariant to point
order.  Per-point input is (x, y, z, q) where the coordinates live in the
unit cube and q is the discharge min-max scaled over the 50..250 l/s range.

Training is plain minibatch Adam on the mean squared error with early
stopping on a validation set; the weights that scored the best validation
MSE are the ones the fitted model keeps.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from ..errors import NonFiniteLoss, ShapeMismatch

__all__ = [
    "PointNetConfig",
    "PointNetMini",
    "attach_discharge",
    "fit_pointnet_mini",
    "normalize_discharge",
]

_LAYER_DIMS = ((4, 64), (64, 64), (64, 128), (128, 64), (64, 1))
_POOL_AFTER = 2  # index of the last per-point layer
_Q_LO_LPS = 50.0
_Q_SPAN_LPS = 200.0


def normalize_discharge(q_m3s) -> np.ndarray:
    """Map discharge in m^3/s onto [0, 1] over the 50..250 l/s span."""
    q = np.asarray(q_m3s, dtype=float)
    return (q * 1000.0 - _Q_LO_LPS) / _Q_SPAN_LPS


def attach_discharge(points, q_m3s) -> np.ndarray:
    """Broadcast one normalized discharge onto every point of each cloud.

    ``points`` is ``(n_clouds, n_points, 3)`` (or a single ``(n_points, 3)``
    cloud) and ``q_m3s`` one discharge per cloud; the result appends the
    scaled discharge as a fourth per-point channel.
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 2
    if single:
        pts = pts[None]
    if pts.ndim != 3 or pts.shape[2] != 3:
        raise ShapeMismatch(f"expected (n, points, 3) clouds, got {pts.shape}")
    q = np.atleast_1d(np.asarray(q_m3s, dtype=float))
    if q.shape != (pts.shape[0],):
        raise ShapeMismatch(
            f"{pts.shape[0]} clouds but {q.size} discharge values"
        )
    qhat = normalize_discharge(q)
    channel = np.broadcast_to(qhat[:, None, None], pts.shape[:2] + (1,))
    out = np.concatenate([pts, channel], axis=2)
    return out[0] if single else out


@dataclasses.dataclass(frozen=True)
class PointNetConfig:
    """Optimizer and schedule knobs for :func:`fit_pointnet_mini`."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 500
    patience: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs and patience must be >= 1")


def _init_params(rng):
    """Uniform fan-in initialization, one (W, b) pair per layer."""
    params = {}
    for i, (fan_in, fan_out) in enumerate(_LAYER_DIMS):
        bound = 1.0 / np.sqrt(fan_in)
        params[f"W{i}"] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        params[f"b{i}"] = rng.uniform(-bound, bound, size=fan_out)
    return params


def _check_clouds(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[2] != _LAYER_DIMS[0][0]:
        raise ShapeMismatch(
            f"expected (n, points, {_LAYER_DIMS[0][0]}) input, got {X.shape}"
        )
    if X.shape[1] == 0:
        raise ShapeMismatch("clouds must contain at least one point")
    if not np.isfinite(X).all():
        raise ValueError("cloud features must be finite")
    return X


class PointNetMini:
    """Fitted network; construct through :func:`fit_pointnet_mini`.

    Instances are also buildable directly from a parameter dict, which is
    what deserialization and the tests' finite-difference probes use.
    """

    def __init__(self, params, config=None, history=None):
        expected = {f"{kind}{i}" for i in range(len(_LAYER_DIMS)) for kind in "Wb"}
        if set(params) != expected:
            raise ShapeMismatch(f"parameter keys {sorted(params)} do not match")
        for i, (fan_in, fan_out) in enumerate(_LAYER_DIMS):
            if params[f"W{i}"].shape != (fan_in, fan_out):
                raise ShapeMismatch(f"W{i} must have shape {(fan_in, fan_out)}")
            if params[f"b{i}"].shape != (fan_out,):
                raise ShapeMismatch(f"b{i} must have shape {(fan_out,)}")
        self.params = {k: np.array(v, dtype=float) for k, v in params.items()}
        self.config = config or PointNetConfig()
        self.history = history or {}

    @property
    def n_parameters(self) -> int:
        return sum(v.size for v in self.params.values())

    def _forward(self, X, need_cache=False):
        h = X
        cache = {"acts": [X]}
        for i in range(len(_LAYER_DIMS)):
            z = h @ self.params[f"W{i}"] + self.params[f"b{i}"]
            last = i == len(_LAYER_DIMS) - 1
            h = z if last else np.maximum(z, 0.0)
            if need_cache:
                cache[f"mask{i}"] = None if last else z > 0.0
            if i == _POOL_AFTER:
                # first-maximum argmax keeps tie routing deterministic
                cache["argmax"] = np.argmax(h, axis=1)
                cache["pre_pool_shape"] = h.shape
                h = np.max(h, axis=1)
            if need_cache:
                cache["acts"].append(h)
        return h[:, 0], cache

    def predict(self, X) -> np.ndarray:
        """Predict one scalar per cloud; accepts a single cloud too."""
        X = _check_clouds(X)
        out, _ = self._forward(X)
        return out

    def loss_and_gradients(self, X, y):
        """Mean squared error over the batch and its parameter gradients."""
        X = _check_clouds(X)
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise ShapeMismatch(f"{X.shape[0]} clouds but {y.shape[0]} targets")
        out, cache = self._forward(X, need_cache=True)
        err = out - y
        loss = float(np.mean(err**2))
        grads = {}
        # d loss / d output, padded back to the (n, 1) layer shape
        delta = (2.0 / y.size) * err[:, None]
        acts = cache["acts"]
        for i in reversed(range(len(_LAYER_DIMS))):
            a_in = acts[i]
            if i == _POOL_AFTER + 1:
                # route the pooled gradient back to the winning points
                pooled_grad = delta @ self.params[f"W{i}"].T
                a_in_flat = a_in
                grads[f"W{i}"] = a_in_flat.T @ delta
                grads[f"b{i}"] = delta.sum(axis=0)
                delta = np.zeros(cache["pre_pool_shape"])
                np.put_along_axis(
                    delta, cache["argmax"][:, None, :], pooled_grad[:, None, :], axis=1
                )
                delta *= cache[f"mask{i - 1}"]
                continue
            if a_in.ndim == 3:
                flat_in = a_in.reshape(-1, a_in.shape[2])
                flat_delta = delta.reshape(-1, delta.shape[2])
            else:
                flat_in = a_in
                flat_delta = delta
            grads[f"W{i}"] = flat_in.T @ flat_delta
            grads[f"b{i}"] = flat_delta.sum(axis=0)
            if i > 0:
                delta = delta @ self.params[f"W{i}"].T
                if i - 1 != _POOL_AFTER:
                    delta = delta * cache[f"mask{i - 1}"]
        return loss, grads

    # flat views for finite-difference probing and serialization

    def parameter_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.params[k].ravel() for k in self._key_order()]
        )

    def set_parameter_vector(self, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n_parameters,):
            raise ShapeMismatch(
                f"expected {self.n_parameters} parameters, got {vec.shape}"
            )
        pos = 0
        for k in self._key_order():
            size = self.params[k].size
            self.params[k] = vec[pos : pos + size].reshape(self.params[k].shape)
            pos += size

    @staticmethod
    def _key_order():
        return [f"{kind}{i}" for i in range(len(_LAYER_DIMS)) for kind in "Wb"]


def fit_pointnet_mini(
    train_clouds,
    train_y,
    val_clouds=None,
    val_y=None,
    config: PointNetConfig | None = None,
) -> PointNetMini:
    """Train the network and return it with the best-validation weights.

    Without an explicit validation set the training set doubles as one,
    which turns early stopping into plain convergence detection.  The
    returned model's ``history`` records per-epoch train and validation
    MSE plus the epoch whose weights were kept.
    """
    config = config or PointNetConfig()
    X = _check_clouds(train_clouds)
    y = np.asarray(train_y, dtype=float).reshape(-1)
    if y.shape[0] != X.shape[0]:
        raise ShapeMismatch(f"{X.shape[0]} clouds but {y.shape[0]} targets")
    if not np.isfinite(y).all():
        raise ValueError("targets must be finite")
    if (val_clouds is None) != (val_y is None):
        raise ValueError("pass both validation clouds and targets, or neither")
    if val_clouds is None:
        Xv, yv = X, y
    else:
        Xv = _check_clouds(val_clouds)
        yv = np.asarray(val_y, dtype=float).reshape(-1)
        if yv.shape[0] != Xv.shape[0]:
            raise ShapeMismatch(f"{Xv.shape[0]} clouds but {yv.shape[0]} targets")

    rng = np.random.default_rng(config.seed)
    model = PointNetMini(_init_params(rng), config=config)
    m_state = {k: np.zeros_like(v) for k, v in model.params.items()}
    v_state = {k: np.zeros_like(v) for k, v in model.params.items()}
    step = 0

    def evaluate(Xe, ye):
        pred, _ = model._forward(Xe)
        return float(np.mean((pred - ye) ** 2))

    best_val = np.inf
    best_params = {k: v.copy() for k, v in model.params.items()}
    best_epoch = -1
    stale = 0
    train_path = []
    val_path = []
    n = X.shape[0]
    for epoch in range(config.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, grads = model.loss_and_gradients(X[batch], y[batch])
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss became {loss} at epoch {epoch}, "
                    f"batch starting at {start}"
                )
            step += 1
            bc1 = 1.0 - config.beta1**step
            bc2 = 1.0 - config.beta2**step
            for k, g in grads.items():
                m_state[k] = config.beta1 * m_state[k] + (1.0 - config.beta1) * g
                v_state[k] = config.beta2 * v_state[k] + (1.0 - config.beta2) * g * g
                model.params[k] -= (
                    config.learning_rate
                    * (m_state[k] / bc1)
                    / (np.sqrt(v_state[k] / bc2) + config.epsilon)
                )
        train_path.append(evaluate(X, y))
        val_path.append(evaluate(Xv, yv))
        if val_path[-1] < best_val:
            best_val = val_path[-1]
            best_params = {k: v.copy() for k, v in model.params.items()}
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    model.params = best_params
    model.history = {
        "train_mse": tuple(train_path),
        "val_mse": tuple(val_path),
        "best_epoch": best_epoch,
        "best_val_mse": best_val,
    }
    return model
