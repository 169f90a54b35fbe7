"""Factorization machine regressors over binary inputs.

The second-order model is

    y(x) = w0 + sum_i w_i x_i + sum_{i<j} <v_i, v_j> x_i x_j

with latent rows ``v_i`` of rank ``k``; the third-order variant adds
``sum_{i<j<l} (sum_f u_if u_jf u_lf) x_i x_j x_l`` from a second latent
matrix.  Interactions are evaluated in O(nk) per sample through power-sum
identities that rely on ``x_i^2 = x_i``, so inputs must be binary.

Training minimizes

    mean squared error + beta1 * sum|w_i| + beta2 * (sum of squared latents)

by mini-batch gradient descent.  The L1 term uses the sign subgradient
(0 at 0).  Because the trackable objective is evaluated on the full
training set after every epoch and the best parameters are kept, the
returned model never scores worse than the initial one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .binopt import HuboModel, QuboModel, as_bits
from .errors import (
    DimensionMismatchError,
    TrainingDivergedError,
    ValidationError,
)

__all__ = [
    "FmModel",
    "HofmModel",
    "TrainConfig",
    "TrainResult",
    "fm_init",
    "hofm_init",
    "fm_predict",
    "hofm_predict",
    "fm_predict_batch",
    "hofm_predict_batch",
    "fm_objective",
    "hofm_objective",
    "fm_gradient",
    "hofm_gradient",
    "fm_train",
    "hofm_train",
    "fm_to_qubo",
    "hofm_to_hubo",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
]


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

@dataclass
class FmModel:
    """Second-order factorization machine: bias, linear weights, latents."""

    w0: float
    w: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        self.w0 = float(self.w0)
        self.w = np.asarray(self.w, dtype=np.float64)
        self.V = np.asarray(self.V, dtype=np.float64)
        if self.w.ndim != 1:
            raise ValidationError(f"w must be 1-d, got shape {self.w.shape}")
        if self.V.ndim != 2 or self.V.shape[0] != self.w.shape[0]:
            raise DimensionMismatchError(
                f"V must have shape ({self.w.shape[0]}, k), got {self.V.shape}"
            )

    @property
    def n_features(self) -> int:
        return self.w.shape[0]

    @property
    def rank(self) -> int:
        return self.V.shape[1]

    def copy(self) -> "FmModel":
        return FmModel(self.w0, self.w.copy(), self.V.copy())


@dataclass
class HofmModel:
    """Third-order factorization machine with separate latent matrices
    for pairwise (``V2``, rank k2) and triple (``V3``, rank k3) terms."""

    w0: float
    w: np.ndarray
    V2: np.ndarray
    V3: np.ndarray

    def __post_init__(self):
        self.w0 = float(self.w0)
        self.w = np.asarray(self.w, dtype=np.float64)
        self.V2 = np.asarray(self.V2, dtype=np.float64)
        self.V3 = np.asarray(self.V3, dtype=np.float64)
        n = self.w.shape[0] if self.w.ndim == 1 else -1
        if self.w.ndim != 1:
            raise ValidationError(f"w must be 1-d, got shape {self.w.shape}")
        for name, mat in (("V2", self.V2), ("V3", self.V3)):
            if mat.ndim != 2 or mat.shape[0] != n:
                raise DimensionMismatchError(
                    f"{name} must have shape ({n}, k), got {mat.shape}"
                )

    @property
    def n_features(self) -> int:
        return self.w.shape[0]

    def copy(self) -> "HofmModel":
        return HofmModel(self.w0, self.w.copy(), self.V2.copy(), self.V3.copy())


@dataclass(frozen=True)
class TrainConfig:
    """Gradient-descent settings shared by both model orders.

    ``rank3`` only matters for third-order models and falls back to
    ``rank`` when None.  ``tolerance``/``patience`` stop training early
    once the full-set objective has not improved by more than
    ``tolerance`` for ``patience`` consecutive epochs.
    """

    rank: int = 8
    rank3: int | None = None
    learning_rate: float = 0.003
    epochs: int = 500
    batch_size: int = 32
    beta1: float = 0.0
    beta2: float = 0.0
    init_scale: float = 0.01
    tolerance: float = 1e-6
    patience: int = 10

    def __post_init__(self):
        if self.rank < 1 or (self.rank3 is not None and self.rank3 < 1):
            raise ValidationError("latent rank must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.epochs < 0 or self.batch_size < 1 or self.patience < 1:
            raise ValidationError("bad epochs/batch_size/patience")
        if self.beta1 < 0 or self.beta2 < 0:
            raise ValidationError("regularization weights must be >= 0")
        if self.init_scale <= 0 or self.tolerance < 0:
            raise ValidationError("bad init_scale/tolerance")


@dataclass
class TrainResult:
    """Fitted model plus the objective it attains on the training set."""

    model: FmModel | HofmModel
    loss: float
    mse: float
    epochs_run: int
    converged: bool


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def _rng_of(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def fm_init(n_features: int, config: TrainConfig, rng=None) -> FmModel:
    """Fresh model: zero bias/weights, N(0, init_scale) latents."""
    g = _rng_of(rng)
    V = g.normal(0.0, config.init_scale, size=(n_features, config.rank))
    return FmModel(0.0, np.zeros(n_features), V)


def hofm_init(n_features: int, config: TrainConfig, rng=None) -> HofmModel:
    g = _rng_of(rng)
    k3 = config.rank3 if config.rank3 is not None else config.rank
    V2 = g.normal(0.0, config.init_scale, size=(n_features, config.rank))
    V3 = g.normal(0.0, config.init_scale, size=(n_features, k3))
    return HofmModel(0.0, np.zeros(n_features), V2, V3)


# ---------------------------------------------------------------------------
# prediction
# ---------------------------------------------------------------------------

def _as_batch(X: np.ndarray, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise DimensionMismatchError(
            f"expected shape (*, {n_features}), got {X.shape}"
        )
    return X

def fm_predict_batch(model: FmModel, X: np.ndarray) -> np.ndarray:
    """Predictions for each row of a binary matrix ``X``."""
    X = _as_batch(X, model.n_features)
    S = X @ model.V                 # per-factor linear sums
    T = X @ (model.V ** 2)
    pair = 0.5 * (S ** 2 - T).sum(axis=1)
    return model.w0 + X @ model.w + pair


def fm_predict(model: FmModel, x: Sequence[int] | np.ndarray) -> float:
    """Prediction for one binary input vector."""
    bits = as_bits(x, model.n_features)
    return float(fm_predict_batch(model, bits[None, :])[0])


def hofm_predict_batch(model: HofmModel, X: np.ndarray) -> np.ndarray:
    X = _as_batch(X, model.n_features)
    S2 = X @ model.V2
    T2 = X @ (model.V2 ** 2)
    pair = 0.5 * (S2 ** 2 - T2).sum(axis=1)
    # elementary symmetric polynomial e3 from power sums p1, p2, p3
    P1 = X @ model.V3
    P2 = X @ (model.V3 ** 2)
    P3 = X @ (model.V3 ** 3)
    triple = (P1 ** 3 - 3.0 * P1 * P2 + 2.0 * P3).sum(axis=1) / 6.0
    return model.w0 + X @ model.w + pair + triple


def hofm_predict(model: HofmModel, x: Sequence[int] | np.ndarray) -> float:
    bits = as_bits(x, model.n_features)
    return float(hofm_predict_batch(model, bits[None, :])[0])


def _predict_batch(model, X):
    if isinstance(model, FmModel):
        return fm_predict_batch(model, X)
    return hofm_predict_batch(model, X)


# ---------------------------------------------------------------------------
# objective and gradients
# ---------------------------------------------------------------------------

def _check_xy(X, y, n_features):
    X = _as_batch(X, n_features)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise DimensionMismatchError(
            f"y must have shape ({X.shape[0]},), got {y.shape}"
        )
    if X.shape[0] == 0:
        raise ValidationError("need at least one training sample")
    return X, y


def fm_objective(
    model: FmModel, X, y, beta1: float = 0.0, beta2: float = 0.0
) -> float:
    """Mean squared error plus L1(w) and squared-latent penalties."""
    X, y = _check_xy(X, y, model.n_features)
    resid = fm_predict_batch(model, X) - y
    return float(
        np.mean(resid ** 2)
        + beta1 * np.sum(np.abs(model.w))
        + beta2 * np.sum(model.V ** 2)
    )


def hofm_objective(
    model: HofmModel, X, y, beta1: float = 0.0, beta2: float = 0.0
) -> float:
    X, y = _check_xy(X, y, model.n_features)
    resid = hofm_predict_batch(model, X) - y
    return float(
        np.mean(resid ** 2)
        + beta1 * np.sum(np.abs(model.w))
        + beta2 * (np.sum(model.V2 ** 2) + np.sum(model.V3 ** 2))
    )


def _objective(model, X, y, beta1, beta2):
    if isinstance(model, FmModel):
        return fm_objective(model, X, y, beta1, beta2)
    return hofm_objective(model, X, y, beta1, beta2)


def fm_gradient(
    model: FmModel, X, y, beta1: float = 0.0, beta2: float = 0.0
) -> tuple[float, np.ndarray, np.ndarray]:
    """Gradient of :func:`fm_objective` with respect to (w0, w, V).

    The L1 part contributes ``beta1 * sign(w)``, zero at ``w_i == 0``.
    """
    X, y = _check_xy(X, y, model.n_features)
    n = X.shape[0]
    S = X @ model.V
    resid = fm_predict_batch(model, X) - y
    r = (2.0 / n) * resid

    g_w0 = float(np.sum(r))
    g_w = X.T @ r + beta1 * np.sign(model.w)
    Xr = X * r[:, None]
    # d y / d V_if = x_i * (S_f - V_if * x_i)  for binary x
    g_V = Xr.T @ S - model.V * Xr.sum(axis=0)[:, None] + 2.0 * beta2 * model.V
    return g_w0, g_w, g_V


def hofm_gradient(
    model: HofmModel, X, y, beta1: float = 0.0, beta2: float = 0.0
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Gradient of :func:`hofm_objective` w.r.t. (w0, w, V2, V3)."""
    X, y = _check_xy(X, y, model.n_features)
    n = X.shape[0]
    resid = hofm_predict_batch(model, X) - y
    r = (2.0 / n) * resid
    Xr = X * r[:, None]
    col = Xr.sum(axis=0)[:, None]

    g_w0 = float(np.sum(r))
    g_w = X.T @ r + beta1 * np.sign(model.w)

    S2 = X @ model.V2
    g_V2 = Xr.T @ S2 - model.V2 * col + 2.0 * beta2 * model.V2

    # d y / d V3_if = x_i * ((P1_f - a_i)^2 - (P2_f - a_i^2)) / 2 with
    # a_i = V3_if x_i; expanded below using x_i^2 = x_i.
    P1 = X @ model.V3
    P2 = X @ (model.V3 ** 2)
    g_V3 = (
        0.5 * (Xr.T @ (P1 ** 2 - P2))
        - model.V3 * (Xr.T @ P1)
        + (model.V3 ** 2) * col
        + 2.0 * beta2 * model.V3
    )
    return g_w0, g_w, g_V2, g_V3


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def _sgd(model, X, y, config: TrainConfig, rng) -> TrainResult:
    X, y = _check_xy(X, y, model.n_features)
    g = _rng_of(rng)
    n = X.shape[0]
    lr = config.learning_rate
    b1, b2 = config.beta1, config.beta2

    best = model.copy()
    best_loss = _objective(model, X, y, b1, b2)
    if not np.isfinite(best_loss):
        raise TrainingDivergedError(f"initial objective is {best_loss}")

    epochs_run = 0
    converged = False
    stall = 0
    for epoch in range(config.epochs):
        order = g.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            Xb, yb = X[idx], y[idx]
            if isinstance(model, FmModel):
                g_w0, g_w, g_V = fm_gradient(model, Xb, yb, b1, b2)
                model.w0 -= lr * g_w0
                model.w -= lr * g_w
                model.V -= lr * g_V
            else:
                g_w0, g_w, g_V2, g_V3 = hofm_gradient(model, Xb, yb, b1, b2)
                model.w0 -= lr * g_w0
                model.w -= lr * g_w
                model.V2 -= lr * g_V2
                model.V3 -= lr * g_V3
        epochs_run = epoch + 1

        loss = _objective(model, X, y, b1, b2)
        if not np.isfinite(loss):
            raise TrainingDivergedError(
                f"objective became {loss} at epoch {epochs_run}; "
                "lower the learning rate"
            )
        if loss < best_loss - config.tolerance:
            stall = 0
        else:
            stall += 1
        if loss < best_loss:
            best_loss = loss
            best = model.copy()
        if stall >= config.patience:
            converged = True
            break

    resid = _predict_batch(best, X) - y
    return TrainResult(
        model=best,
        loss=best_loss,
        mse=float(np.mean(resid ** 2)),
        epochs_run=epochs_run,
        converged=converged,
    )


def fm_train(
    X,
    y,
    config: TrainConfig | None = None,
    model: FmModel | None = None,
    rng=None,
) -> TrainResult:
    """Fit a second-order model by mini-batch gradient descent.

    Passing ``model`` warm-starts from its parameters (they are not
    modified); otherwise a fresh one is drawn from ``rng``.  The returned
    model is the best epoch snapshot by full-set objective, so its loss
    never exceeds the starting point's.
    """
    if config is None:
        config = TrainConfig()
    g = _rng_of(rng)
    X = np.asarray(X, dtype=np.float64)
    if model is None:
        model = fm_init(X.shape[1] if X.ndim == 2 else 0, config, g)
    else:
        if model.rank != config.rank:
            raise ValidationError(
                f"model rank {model.rank} != config rank {config.rank}"
            )
        model = model.copy()
    return _sgd(model, X, y, config, g)


def hofm_train(
    X,
    y,
    config: TrainConfig | None = None,
    model: HofmModel | None = None,
    rng=None,
) -> TrainResult:
    """Third-order counterpart of :func:`fm_train`."""
    if config is None:
        config = TrainConfig()
    g = _rng_of(rng)
    X = np.asarray(X, dtype=np.float64)
    if model is None:
        model = hofm_init(X.shape[1] if X.ndim == 2 else 0, config, g)
    else:
        model = model.copy()
    return _sgd(model, X, y, config, g)


# ---------------------------------------------------------------------------
# extraction to binary optimization models
# ---------------------------------------------------------------------------

def fm_to_qubo(model: FmModel) -> QuboModel:
    """Read the fitted surface off as a QUBO.

    On binary inputs the model is already quadratic, so the map is exact:
    ``c0 = w0``, ``Q_i = w_i``, ``Q_ij = <v_i, v_j>``.
    """
    n = model.n_features
    gram = model.V @ model.V.T
    quadratic = {
        (i, j): float(gram[i, j])
        for i in range(n)
        for j in range(i + 1, n)
        if gram[i, j] != 0.0
    }
    linear = {i: float(model.w[i]) for i in range(n) if model.w[i] != 0.0}
    return QuboModel(n, quadratic, linear, model.w0)


def hofm_to_hubo(model: HofmModel) -> HuboModel:
    """Exact cubic counterpart of :func:`fm_to_qubo`.

    Term coefficients: ``w_i`` (linear), ``<v2_i, v2_j>`` (pairs), and
    ``sum_f v3_if v3_jf v3_lf`` (triples).
    """
    n = model.n_features
    terms: dict[tuple[int, ...], float] = {}
    for i in range(n):
        if model.w[i] != 0.0:
            terms[(i,)] = float(model.w[i])
    gram = model.V2 @ model.V2.T
    for i in range(n):
        for j in range(i + 1, n):
            c = float(gram[i, j])
            if c != 0.0:
                terms[(i, j)] = terms.get((i, j), 0.0) + c
    V3 = model.V3
    for i in range(n):
        # products over factors for all (j, l) with i < j < l
        outer = V3[i] * V3[i + 1 :, :]          # (n-i-1, k3) rows j > i
        for jo, j in enumerate(range(i + 1, n)):
            tail = outer[jo] * V3[j + 1 :, :]   # rows l > j
            sums = tail.sum(axis=1)
            for lo, l in enumerate(range(j + 1, n)):
                c = float(sums[lo])
                if c != 0.0:
                    key = (i, j, l)
                    terms[key] = terms.get(key, 0.0) + c
    return HuboModel(n, terms, model.w0)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_FM_TAG = "fm-v1"
_HOFM_TAG = "hofm-v1"


def model_to_dict(model: FmModel | HofmModel) -> dict:
    if isinstance(model, FmModel):
        return {
            "format": _FM_TAG,
            "w0": model.w0,
            "w": model.w.tolist(),
            "V": model.V.tolist(),
        }
    return {
        "format": _HOFM_TAG,
        "w0": model.w0,
        "w": model.w.tolist(),
        "V2": model.V2.tolist(),
        "V3": model.V3.tolist(),
    }


def model_from_dict(data: dict) -> FmModel | HofmModel:
    tag = data.get("format")
    if tag == _FM_TAG:
        return FmModel(data["w0"], np.array(data["w"]), np.array(data["V"]))
    if tag == _HOFM_TAG:
        return HofmModel(
            data["w0"],
            np.array(data["w"]),
            np.array(data["V2"]),
            np.array(data["V3"]),
        )
    raise ValidationError(f"unknown model format tag: {tag!r}")


def save_model(model: FmModel | HofmModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path) -> FmModel | HofmModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
