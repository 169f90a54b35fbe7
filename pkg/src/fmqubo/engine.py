"""Surrogate-model training loops over black boxes and fixed datasets.

The shared pattern: maintain a sample set, train a factorization machine
on it, read the model off as a QUBO, minimize that QUBO by annealing,
and treat the minimizer as the next candidate.  Variants differ in model
order (quadratic or cubic via reduction) and in whether a block of
``m_slack`` learned slack variables is appended to every training row.
The slack block is shared by all rows, persists across iterations, and
is rewritten each iteration from the trailing bits of the annealed
state, perturbing the next retraining.

Index layout everywhere: original features occupy [0, n), slack
variables [n, n+m); order-reduction auxiliaries, when present, come
after and never leave the solver.

All randomness fans out from one master seed through stable hashing, so
results are independent of batching and of which other cells run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .anneal import AnnealConfig, solve
from .binopt import QuboModel, as_bits, reduce_hubo_to_qubo
from .data import BlackBox
from .errors import ValidationError
from .fm import (
    FmModel,
    HofmModel,
    TrainConfig,
    TrainResult,
    fm_predict_batch,
    fm_to_qubo,
    fm_train,
    hofm_predict_batch,
    hofm_to_hubo,
    hofm_train,
)
from .metrics import pearson, spearman
from .errors import ConstantInputError
from .seeding import derive_seed, rng_from

__all__ = [
    "SurrogateConfig",
    "IterationRecord",
    "OptimizeResult",
    "FqexResult",
    "GridCell",
    "GridResult",
    "stack_slack",
    "fqm",
    "fmqubo_optimize",
    "hofmqubo_optimize",
    "fmqubos_optimize",
    "fqex",
    "grid_test",
    "count_nonzero_slack",
]


@dataclass(frozen=True)
class SurrogateConfig:
    """Knobs shared by the optimization and regression loops.

    ``epsilon`` is the convergence tolerance on |true - predicted|
    (optimizers) or on the training loss (regression).  ``warm_start``
    reuses the previous iteration's model as the next initialization;
    ``skip_duplicates`` replaces an already-sampled annealer solution
    with a random feasible neighbor before querying.
    """

    m_slack: int = 0
    slack_init: tuple[int, ...] | None = None
    i_max: int = 20
    epsilon: float = 1e-3
    train: TrainConfig = field(default_factory=TrainConfig)
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    seed: int = 0
    warm_start: bool = True
    skip_duplicates: bool = False

    def __post_init__(self):
        if self.m_slack < 0:
            raise ValidationError("m_slack must be >= 0")
        if self.i_max < 1:
            raise ValidationError("i_max must be >= 1")
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")
        if self.slack_init is not None:
            s = tuple(int(b) for b in self.slack_init)
            if len(s) != self.m_slack:
                raise ValidationError(
                    f"slack_init length {len(s)} != m_slack {self.m_slack}"
                )
            if any(b not in (0, 1) for b in s):
                raise ValidationError("slack_init must be binary")
            object.__setattr__(self, "slack_init", s)

    def initial_slack(self) -> np.ndarray:
        if self.slack_init is None:
            return np.zeros(self.m_slack, dtype=np.int8)
        return np.array(self.slack_init, dtype=np.int8)


@dataclass(frozen=True)
class IterationRecord:
    """One loop iteration: what was solved, queried, and measured."""

    iteration: int
    x: np.ndarray
    s: np.ndarray
    y_model: float
    y_true: float | None
    train_loss: float
    test_pearson: float | None
    test_spearman: float | None
    n_train: int


@dataclass(frozen=True)
class OptimizeResult:
    """Outcome of a black-box optimization loop.

    When the loop did not converge, the reported triple is the best
    true response seen rather than the last iterate.
    """

    x: np.ndarray
    y_model: float
    y_true: float
    converged: bool
    trace: tuple[IterationRecord, ...]


@dataclass(frozen=True)
class FqexResult:
    """Outcome of the slack-assisted regression loop."""

    model: FmModel
    slack: np.ndarray
    loss: float
    converged: bool
    test_pearson: float | None
    test_spearman: float | None
    trace: tuple[IterationRecord, ...]


@dataclass(frozen=True)
class GridCell:
    n1: float
    m: int
    seed: int
    eta: float
    pearson: float | None
    spearman: float | None
    iterations: int
    n_nonzero_slack: int
    converged: bool


@dataclass(frozen=True)
class GridResult:
    cells: tuple[GridCell, ...]
    n_values: tuple[float, ...]
    m_values: tuple[int, ...]
    master_seed: int


def count_nonzero_slack(s) -> int:
    """Number of set bits in a slack vector."""
    return int(as_bits(s).sum())


def stack_slack(X: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Append the shared slack vector to every sample row."""
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValidationError(f"X must be 2-d, got shape {X.shape}")
    s = as_bits(s)
    if s.size == 0:
        return np.array(X, copy=True)
    tiled = np.broadcast_to(s, (X.shape[0], s.size))
    return np.concatenate([X, tiled], axis=1)


def fqm(
    X,
    Y,
    s,
    config: TrainConfig | None = None,
    model: FmModel | None = None,
    rng=None,
) -> tuple[TrainResult, QuboModel]:
    """One surrogate step: stack slack, train, extract the QUBO.

    The returned QUBO has ``X.shape[1] + len(s)`` variables with the
    slack block trailing.
    """
    Z = stack_slack(np.asarray(X, dtype=np.float64), s)
    result = fm_train(Z, np.asarray(Y, dtype=np.float64), config, model, rng)
    return result, fm_to_qubo(result.model)


def _test_metrics(model, X2, y2, s) -> tuple[float | None, float | None]:
    """Correlations of test predictions with the slack block appended."""
    if X2 is None or len(X2) < 2:
        return None, None
    Z2 = stack_slack(np.asarray(X2, dtype=np.float64), s)
    if isinstance(model, HofmModel):
        preds = hofm_predict_batch(model, Z2)
    else:
        preds = fm_predict_batch(model, Z2)
    try:
        return pearson(y2, preds), spearman(y2, preds)
    except ConstantInputError:
        return None, None


def _anneal_for(config: SurrogateConfig, groups, iteration: int):
    """Per-iteration solver config: the caller's settings, reseeded."""
    return replace(
        config.anneal,
        one_hot_groups=tuple(tuple(g) for g in groups),
        seed=derive_seed(config.seed, "anneal", iteration),
    )


def _perturb(x: np.ndarray, groups, rng) -> np.ndarray:
    """One random feasibility-preserving move."""
    x = x.copy()
    groups = [list(g) for g in groups]
    grouped = {i for g in groups for i in g}
    free = [i for i in range(x.size) if i not in grouped]
    movable = [g for g in groups if len(g) > 1]
    n_moves = len(movable) + len(free)
    if n_moves == 0:
        return x
    pick = int(rng.integers(n_moves))
    if pick < len(movable):
        g = movable[pick]
        hot = next(i for i in g if x[i] == 1)
        cold = [i for i in g if i != hot]
        x[hot] = 0
        x[cold[int(rng.integers(len(cold)))]] = 1
    else:
        j = free[pick - len(movable)]
        x[j] = 1 - x[j]
    return x


def _optimize(bb: BlackBox, n: int, config: SurrogateConfig, order: int):
    """Shared loop behind the three black-box optimizers."""
    if n < 1:
        raise ValidationError("need at least one initial sample")
    n_feat = bb.n_bits
    m = config.m_slack

    X, y = bb.sample(n, rng_from(config.seed, "sample"))
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    s = config.initial_slack()
    seen = {tuple(int(b) for b in row) for row in X}

    trace: list[IterationRecord] = []
    prev_model = None
    converged = False
    final: tuple[np.ndarray, float, float] | None = None

    for it in range(1, config.i_max + 1):
        train_rng = rng_from(config.seed, "train", it)
        if order == 2:
            result, qubo = fqm(X, y, s, config.train, prev_model, train_rng)
        else:
            Z = stack_slack(X, s)
            result = hofm_train(Z, y, config.train, prev_model, train_rng)
            reduction = reduce_hubo_to_qubo(hofm_to_hubo(result.model))
            qubo = reduction.qubo
        if config.warm_start:
            prev_model = result.model

        sol = solve(qubo, _anneal_for(config, bb.groups, it))
        z = sol.best_x[: n_feat + m]  # reduction auxiliaries stay behind
        x_new = z[:n_feat].copy()
        s = z[n_feat : n_feat + m].copy()
        y_model = float(sol.best_energy)

        if config.skip_duplicates:
            perturb_rng = rng_from(config.seed, "perturb", it)
            tries = 0
            while tuple(int(b) for b in x_new) in seen and tries < 10 * n_feat:
                x_new = _perturb(x_new, bb.groups, perturb_rng)
                tries += 1

        y_true = float(bb.query(x_new))
        trace.append(
            IterationRecord(
                iteration=it,
                x=x_new.copy(),
                s=s.copy(),
                y_model=y_model,
                y_true=y_true,
                train_loss=result.loss,
                test_pearson=None,
                test_spearman=None,
                n_train=X.shape[0],
            )
        )
        X = np.vstack([X, x_new[None, :].astype(np.float64)])
        y = np.append(y, y_true)
        seen.add(tuple(int(b) for b in x_new))

        if final is None or y_true < final[2]:
            final = (x_new, y_model, y_true)
        if abs(y_true - y_model) < config.epsilon:
            converged = True
            final = (x_new, y_model, y_true)
            break

    x_best, y_model_best, y_true_best = final
    return OptimizeResult(
        x=x_best,
        y_model=y_model_best,
        y_true=y_true_best,
        converged=converged,
        trace=tuple(trace),
    )


def fmqubo_optimize(
    bb: BlackBox, n: int, config: SurrogateConfig | None = None
) -> OptimizeResult:
    """Quadratic surrogate loop: train, solve, query, repeat.

    Stops when the black-box response of the proposed minimizer agrees
    with the model's minimum within ``epsilon``; each iteration adds its
    queried point to the sample set.
    """
    if config is None:
        config = SurrogateConfig()
    if config.m_slack != 0:
        raise ValidationError("this loop has no slack block; use the slack variant")
    return _optimize(bb, n, config, order=2)


def hofmqubo_optimize(
    bb: BlackBox, n: int, config: SurrogateConfig | None = None
) -> OptimizeResult:
    """Cubic surrogate loop; the model is reduced to a QUBO for solving.

    Reduction auxiliaries are stripped from the annealed state before
    the black box is queried.
    """
    if config is None:
        config = SurrogateConfig()
    if config.m_slack != 0:
        raise ValidationError("this loop has no slack block; use the slack variant")
    return _optimize(bb, n, config, order=3)


def fmqubos_optimize(
    bb: BlackBox, n: int, config: SurrogateConfig
) -> OptimizeResult:
    """Quadratic surrogate loop with a learned slack block.

    The annealed state's trailing ``m_slack`` bits become the shared
    slack vector for the next retraining; the leading bits are queried.
    With ``m_slack == 0`` this is exactly the plain quadratic loop.
    """
    return _optimize(bb, n, config, order=2)


def fqex(
    train_data,
    test_data,
    config: SurrogateConfig,
) -> FqexResult:
    """Slack-assisted regression on a fixed train/test split.

    Each iteration retrains on the samples with the current slack block,
    anneals the extracted QUBO, rewrites the slack block from the
    solution's trailing bits, and recomputes the training loss with the
    updated block.  Stops when that loss drops below ``epsilon``.  Test
    correlations use the final model with the final slack vector
    appended to every test row; they are reported, never used to stop.
    """
    X1, y1 = train_data
    X2, y2 = test_data
    X1 = np.asarray(X1, dtype=np.float64)
    y1 = np.asarray(y1, dtype=np.float64)
    if X1.ndim != 2 or X1.shape[0] == 0:
        raise ValidationError("empty training set")
    if X2 is not None:
        X2 = np.asarray(X2, dtype=np.float64)
        y2 = np.asarray(y2, dtype=np.float64)
        if X2.shape[0] and X2.shape[1] != X1.shape[1]:
            raise ValidationError(
                f"train/test widths differ: {X1.shape[1]} vs {X2.shape[1]}"
            )

    n_feat = X1.shape[1]
    m = config.m_slack
    groups = config.anneal.one_hot_groups
    s = config.initial_slack()

    trace: list[IterationRecord] = []
    prev_model = None
    model = None
    loss = np.inf
    converged = False

    for it in range(1, config.i_max + 1):
        train_rng = rng_from(config.seed, "train", it)
        result, qubo = fqm(X1, y1, s, config.train, prev_model, train_rng)
        model = result.model
        if config.warm_start:
            prev_model = model

        sol = solve(qubo, _anneal_for(config, groups, it))
        s = sol.best_x[n_feat : n_feat + m].copy()

        # loss is recomputed under the updated slack block: this is the
        # quantity the next retraining will start from
        Z1 = stack_slack(X1, s)
        preds = fm_predict_batch(model, Z1)
        loss = float(np.mean((preds - y1) ** 2))
        t_pear, t_spear = _test_metrics(model, X2, y2, s)

        trace.append(
            IterationRecord(
                iteration=it,
                x=sol.best_x[:n_feat].copy(),
                s=s.copy(),
                y_model=float(sol.best_energy),
                y_true=None,
                train_loss=loss,
                test_pearson=t_pear,
                test_spearman=t_spear,
                n_train=X1.shape[0],
            )
        )
        if loss < config.epsilon:
            converged = True
            break

    t_pear, t_spear = _test_metrics(model, X2, y2, s)
    return FqexResult(
        model=model,
        slack=s,
        loss=loss,
        converged=converged,
        test_pearson=t_pear,
        test_spearman=t_spear,
        trace=tuple(trace),
    )


def grid_test(
    dataset,
    n_range: Sequence[float],
    m_range: Sequence[int],
    config: SurrogateConfig,
    n_values: Sequence[float] | None = None,
    m_values: Sequence[int] | None = None,
) -> GridResult:
    """Sweep the regression loop over split knobs and slack counts.

    ``dataset`` must expose ``groups`` and ``split(knob, seed)``.
    ``n_range``/``m_range`` are inclusive [lo, hi] integer ranges at unit
    step; pass explicit ``n_values``/``m_values`` for non-unit or
    non-integer sweeps (ratios).  One split is drawn per knob value and
    shared by all m, so cells in a row differ only in the slack count.
    Every cell reseeds from (master seed, knob, m).
    """
    if n_values is None:
        a, b = n_range
        n_values = list(range(int(a), int(b) + 1))
    if m_values is None:
        a, b = m_range
        m_values = list(range(int(a), int(b) + 1))
    n_values = [float(v) if not float(v).is_integer() else int(v) for v in n_values]
    m_values = [int(v) for v in m_values]
    if not n_values or not m_values:
        raise ValidationError("empty grid")
    if any(m < 0 for m in m_values):
        raise ValidationError("slack counts must be >= 0")

    cells: list[GridCell] = []
    for n1 in n_values:
        split_seed = derive_seed(config.seed, "split", n1)
        X1, y1, X2, y2 = dataset.split(n1, split_seed)
        for m in m_values:
            cell_seed = derive_seed(config.seed, "cell", n1, m)
            cell_cfg = replace(
                config,
                m_slack=m,
                slack_init=None,  # all-zero start in every cell
                seed=cell_seed,
                anneal=replace(
                    config.anneal,
                    one_hot_groups=tuple(tuple(g) for g in dataset.groups),
                ),
            )
            res = fqex((X1, y1), (X2, y2), cell_cfg)
            cells.append(
                GridCell(
                    n1=n1,
                    m=m,
                    seed=cell_seed,
                    eta=res.loss,
                    pearson=res.test_pearson,
                    spearman=res.test_spearman,
                    iterations=len(res.trace),
                    n_nonzero_slack=count_nonzero_slack(res.slack),
                    converged=res.converged,
                )
            )
    return GridResult(
        cells=tuple(cells),
        n_values=tuple(n_values),
        m_values=tuple(m_values),
        master_seed=config.seed,
    )
