"""Two-hidden-layer ReLU regressor trained by momentum SGD with time-based decay."""
from __future__ import annotations

import numpy as np

from .._rng import derive_rng
from ..errors import NonFiniteLoss

BATCH_SIZE = 32
MAX_EPOCHS = 200
VALIDATION_FRACTION = 0.1


def init_params(d, h1, h2, rng):
    """He initialisation scaled by fan-in; zero biases."""
    return {
        "W1": rng.normal(0.0, np.sqrt(2.0 / d), (d, h1)),
        "b1": np.zeros(h1),
        "W2": rng.normal(0.0, np.sqrt(2.0 / h1), (h1, h2)),
        "b2": np.zeros(h2),
        "W3": rng.normal(0.0, np.sqrt(2.0 / h2), (h2, 1)),
        "b3": np.zeros(1),
    }


def forward(params, X, masks=None):
    """Returns predictions and the cache needed for backprop.

    ``masks`` are inverted-dropout multipliers for the two hidden layers.
    """
    z1 = X @ params["W1"] + params["b1"]
    a1 = np.maximum(z1, 0.0)
    if masks is not None:
        a1 = a1 * masks[0]
    z2 = a1 @ params["W2"] + params["b2"]
    a2 = np.maximum(z2, 0.0)
    if masks is not None:
        a2 = a2 * masks[1]
    out = (a2 @ params["W3"] + params["b3"])[:, 0]
    return out, (X, z1, a1, z2, a2)


def predict(params, X):
    return forward(params, X)[0]


def loss_and_grad(params, X, y, masks=None):
    """Mean squared error of a batch and its gradient with respect to every parameter."""
    pred, (X, z1, a1, z2, a2) = forward(params, X, masks)
    n = X.shape[0]
    r = pred - y
    loss = float(np.mean(r * r))
    d_out = (2.0 / n) * r[:, None]
    g = {"W3": a2.T @ d_out, "b3": d_out.sum(axis=0)}
    d_a2 = d_out @ params["W3"].T
    if masks is not None:
        d_a2 = d_a2 * masks[1]
    d_z2 = d_a2 * (z2 > 0)
    g["W2"] = a1.T @ d_z2
    g["b2"] = d_z2.sum(axis=0)
    d_a1 = d_z2 @ params["W2"].T
    if masks is not None:
        d_a1 = d_a1 * masks[0]
    d_z1 = d_a1 * (z1 > 0)
    g["W1"] = X.T @ d_z1
    g["b1"] = d_z1.sum(axis=0)
    return loss, g


def _rmse(params, X, y):
    r = predict(params, X) - y
    return float(np.sqrt(np.mean(r * r)))


def fit_nn(X, y, seed, *, dense1=32, dense2=16, dropout=0.0, learning_rate=0.01, momentum=0.9, decay=0.001,
           epochs=MAX_EPOCHS, batch_size=BATCH_SIZE, validation=None):
    """Train and return ``(params, log, best_epoch)``.

    The learning rate at update ``t`` is ``learning_rate / (1 + decay * t)``.
    Weights from the epoch with the lowest validation RMSE are restored; when
    no validation set is given, 10% of the rows are held out for that purpose.
    """
    rng = derive_rng(seed, "nn")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if validation is None:
        n = len(y)
        n_val = max(1, int(round(VALIDATION_FRACTION * n))) if n >= 10 else 0
        perm = rng.permutation(n)
        if n_val:
            Xv, yv = X[perm[:n_val]], y[perm[:n_val]]
            X, y = X[perm[n_val:]], y[perm[n_val:]]
        else:
            Xv, yv = X, y
    else:
        Xv, yv = (np.asarray(a, dtype=np.float64) for a in validation)
    params = init_params(X.shape[1], int(dense1), int(dense2), rng)
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    keep = 1.0 - float(dropout)
    n = len(y)
    step = 0
    best = (np.inf, 0, {k: v.copy() for k, v in params.items()})
    log = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        for s in range(0, n, batch_size):
            idx = order[s:s + batch_size]
            masks = None
            if dropout > 0:
                masks = ((rng.random((len(idx), params["W1"].shape[1])) < keep) / keep,
                         (rng.random((len(idx), params["W2"].shape[1])) < keep) / keep)
            loss, g = loss_and_grad(params, X[idx], y[idx], masks)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became non-finite at epoch {epoch}, update {step}")
            lr = learning_rate / (1.0 + decay * step)
            for k in params:
                velocity[k] = momentum * velocity[k] - lr * g[k]
                params[k] = params[k] + velocity[k]
            step += 1
        tr = _rmse(params, X, y)
        va = _rmse(params, Xv, yv)
        if not (np.isfinite(tr) and np.isfinite(va)):
            raise NonFiniteLoss(f"predictions became non-finite at epoch {epoch}")
        log.append({"iteration": epoch, "train_rmse": tr, "valid_rmse": va})
        if va < best[0]:
            best = (va, epoch, {k: v.copy() for k, v in params.items()})
    return best[2], log, best[1]
