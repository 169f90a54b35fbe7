"""Simulated annealing for QUBO models, plus exhaustive search.

Each read is an independent restart with its own random stream derived
from the master seed and the read index, so results are reproducible and
unaffected by how reads are batched internally.  A sweep proposes one
move per one-hot group (relocating that group's hot bit) followed by one
flip per unconstrained variable, in ascending index order; acceptance is
Metropolis at the sweep's temperature.  Group moves never leave the
feasible set, so constrained problems need no penalty terms.

Energies are maintained incrementally: with ``M`` the symmetric
off-diagonal coefficient matrix and field ``f = lin + M x``, a flip of
bit ``j`` changes the energy by ``(1 - 2 x_j) f_j`` and a hot-bit move
``a -> b`` by ``f_b - f_a - M_ab``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .binopt import QuboModel
from .errors import CapacityError, ValidationError
from .seeding import derive_seed, rng_from

__all__ = ["AnnealConfig", "SolveResult", "solve", "brute_force"]

_BRUTE_FORCE_LIMIT = 2 ** 25
_RAND_BUDGET = 60_000_000  # floats held at once for pregenerated randomness


@dataclass(frozen=True)
class AnnealConfig:
    """Annealing schedule and constraint settings.

    Temperatures left as None are picked automatically: ``t_initial``
    becomes the largest |energy change| over 100 sampled moves (so early
    sweeps accept almost anything) and ``t_final`` is 1e-3 of that.
    """

    num_reads: int = 5000
    num_sweeps: int = 1000
    t_initial: float | None = None
    t_final: float | None = None
    schedule: str = "geometric"
    seed: int = 0
    one_hot_groups: tuple[tuple[int, ...], ...] = ()
    debug_checks: bool = False

    def __post_init__(self):
        if self.num_reads < 1 or self.num_sweeps < 1:
            raise ValidationError("num_reads and num_sweeps must be >= 1")
        if self.schedule not in ("geometric", "linear"):
            raise ValidationError(f"unknown schedule {self.schedule!r}")
        if self.t_initial is not None and self.t_initial <= 0:
            raise ValidationError("t_initial must be positive")
        if self.t_final is not None and self.t_final <= 0:
            raise ValidationError("t_final must be positive")
        if self.t_initial is not None and self.t_final is not None:
            if self.t_final > self.t_initial:
                raise ValidationError("t_final must not exceed t_initial")
        object.__setattr__(
            self,
            "one_hot_groups",
            tuple(tuple(int(i) for i in g) for g in self.one_hot_groups),
        )


@dataclass
class SolveResult:
    """Best assignment found, with per-read best energies for diagnostics."""

    best_x: np.ndarray
    best_energy: float
    best_read: int
    read_energies: np.ndarray


def _check_groups(
    groups: Sequence[Sequence[int]], n_vars: int
) -> list[np.ndarray]:
    seen: set[int] = set()
    out = []
    for g in groups:
        members = sorted(int(i) for i in g)
        if not members:
            raise ValidationError("one-hot group must be nonempty")
        if members[0] < 0 or members[-1] >= n_vars:
            raise ValidationError(f"group {members} out of range [0,{n_vars})")
        if len(set(members)) != len(members) or seen.intersection(members):
            raise ValidationError("one-hot groups must be disjoint")
        seen.update(members)
        out.append(np.array(members, dtype=np.int64))
    return out


def _temperatures(t_i: float, t_f: float, sweeps: int, schedule: str) -> np.ndarray:
    if sweeps == 1:
        return np.array([t_i])
    steps = np.arange(sweeps) / (sweeps - 1)
    if schedule == "geometric":
        return t_i * (t_f / t_i) ** steps
    return t_i + (t_f - t_i) * steps


def _random_feasible(
    rng: np.random.Generator, n_reads: int, n_vars: int,
    groups: list[np.ndarray], free: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform feasible states and per-group hot positions."""
    X = np.zeros((n_reads, n_vars), dtype=np.int8)
    if free.size:
        X[:, free] = rng.random((n_reads, free.size)) < 0.5
    hot = np.zeros((n_reads, len(groups)), dtype=np.int64)
    for gi, members in enumerate(groups):
        pos = np.minimum(
            (rng.random(n_reads) * members.size).astype(np.int64),
            members.size - 1,
        )
        hot[:, gi] = pos
        X[np.arange(n_reads), members[pos]] = 1
    return X, hot


def _auto_t_initial(
    model: QuboModel, groups: list[np.ndarray], free: np.ndarray, seed: int
) -> float:
    """Largest |energy change| over 100 single moves from random states."""
    rng = rng_from(seed, "auto-temperature")
    M, lin, _ = model.to_dense()
    n_samples = 100
    X, hot = _random_feasible(rng, n_samples, model.n_vars, groups, free)
    F = lin[None, :] + X.astype(np.float64) @ M
    scale = 0.0
    n_moves = len(groups) + free.size
    if n_moves == 0:
        return 1.0
    which = np.minimum(
        (rng.random(n_samples) * n_moves).astype(np.int64), n_moves - 1
    )
    u = rng.random(n_samples)
    for r in range(n_samples):
        m = which[r]
        if m < len(groups):
            members = groups[m]
            if members.size < 2:
                continue
            a_pos = hot[r, m]
            off = min(int(u[r] * (members.size - 1)), members.size - 2)
            b_pos = off + (off >= a_pos)
            a, b = members[a_pos], members[b_pos]
            d_e = F[r, b] - F[r, a] - M[a, b]
        else:
            j = free[m - len(groups)]
            d_e = (1.0 - 2.0 * X[r, j]) * F[r, j]
        scale = max(scale, abs(float(d_e)))
    return scale if scale > 0.0 else 1.0


def solve(model: QuboModel, config: AnnealConfig | None = None) -> SolveResult:
    """Minimize a QUBO by multi-read simulated annealing.

    When ``config.one_hot_groups`` is set, every read starts feasible and
    stays feasible.  The returned state is the best one visited across
    all reads and sweeps; energy ties go to the earliest read.
    """
    if config is None:
        config = AnnealConfig()
    groups = _check_groups(config.one_hot_groups, model.n_vars)
    grouped = (
        np.concatenate(groups) if groups else np.array([], dtype=np.int64)
    )
    free = np.setdiff1d(np.arange(model.n_vars), grouped)

    if model.n_vars == 0:
        return SolveResult(
            np.zeros(0, dtype=np.int8),
            model.constant,
            0,
            np.full(config.num_reads, model.constant),
        )

    t_i = config.t_initial
    if t_i is None:
        t_i = _auto_t_initial(model, groups, free, config.seed)
    t_f = config.t_final if config.t_final is not None else 1e-3 * t_i
    t_f = min(t_f, t_i)
    temps = _temperatures(t_i, t_f, config.num_sweeps, config.schedule)

    M, lin, c0 = model.to_dense()
    n = model.n_vars
    sweeps = config.num_sweeps
    n_groups = len(groups)
    n_moves = n_groups + free.size

    best_energy = np.inf
    best_x = np.zeros(n, dtype=np.int8)
    best_read = 0
    read_energies = np.empty(config.num_reads)

    per_read = sweeps * (n_moves + n_groups) + n + 1
    chunk_size = max(1, min(config.num_reads, _RAND_BUDGET // max(per_read, 1)))

    for chunk_start in range(0, config.num_reads, chunk_size):
        chunk = min(chunk_size, config.num_reads - chunk_start)
        rows = np.arange(chunk)

        # Per-read streams keyed by absolute read index, pregenerated in a
        # fixed order so batching cannot change any read's trajectory.
        u_init = np.empty((chunk, free.size + n_groups))
        u_prop = np.empty((sweeps, chunk, n_groups)) if n_groups else None
        u_acc = np.empty((sweeps, chunk, n_moves))
        for r in range(chunk):
            g = np.random.default_rng(
                derive_seed(config.seed, "read", chunk_start + r)
            )
            if free.size:
                u_init[r, :free.size] = g.random(free.size)
            if n_groups:
                u_init[r, free.size:] = g.random(n_groups)
                u_prop[:, r, :] = g.random((sweeps, n_groups))
            u_acc[:, r, :] = g.random((sweeps, n_moves))

        X = np.zeros((chunk, n), dtype=np.int8)
        if free.size:
            X[:, free] = u_init[:, :free.size] < 0.5
        hot = np.zeros((chunk, n_groups), dtype=np.int64)
        for gi, members in enumerate(groups):
            pos = np.minimum(
                (u_init[:, free.size + gi] * members.size).astype(np.int64),
                members.size - 1,
            )
            hot[:, gi] = pos
            X[rows, members[pos]] = 1

        Xf = X.astype(np.float64)
        F = lin[None, :] + Xf @ M
        E = c0 + Xf @ lin + 0.5 * np.einsum("ri,ri->r", Xf @ M, Xf)
        E_best = E.copy()
        X_best = X.copy()

        for s in range(sweeps):
            T = temps[s]
            for gi in range(n_groups):
                members = groups[gi]
                if members.size < 2:
                    continue
                a_pos = hot[:, gi]
                off = np.minimum(
                    (u_prop[s, :, gi] * (members.size - 1)).astype(np.int64),
                    members.size - 2,
                )
                b_pos = off + (off >= a_pos)
                a = members[a_pos]
                b = members[b_pos]
                d_e = F[rows, b] - F[rows, a] - M[a, b]
                acc = u_acc[s, :, gi] < np.exp(-np.maximum(d_e, 0.0) / T)
                if acc.any():
                    ar = rows[acc]
                    X[ar, a[acc]] = 0
                    X[ar, b[acc]] = 1
                    hot[ar, gi] = b_pos[acc]
                    F[ar] += M[:, b[acc]].T - M[:, a[acc]].T
                    E[ar] += d_e[acc]
                    upd = ar[E[ar] < E_best[ar]]
                    if upd.size:
                        E_best[upd] = E[upd]
                        X_best[upd] = X[upd]
            for fi in range(free.size):
                j = free[fi]
                xj = X[:, j]
                d_e = (1.0 - 2.0 * xj) * F[:, j]
                acc = u_acc[s, :, n_groups + fi] < np.exp(
                    -np.maximum(d_e, 0.0) / T
                )
                if acc.any():
                    ar = rows[acc]
                    delta = (1 - 2 * xj[acc]).astype(np.float64)
                    X[ar, j] = 1 - xj[acc]
                    F[ar] += delta[:, None] * M[j][None, :]
                    E[ar] += d_e[acc]
                    upd = ar[E[ar] < E_best[ar]]
                    if upd.size:
                        E_best[upd] = E[upd]
                        X_best[upd] = X[upd]

        if config.debug_checks:
            Xf = X.astype(np.float64)
            E_check = c0 + Xf @ lin + 0.5 * np.einsum("ri,ri->r", Xf @ M, Xf)
            if not np.allclose(E, E_check, rtol=1e-9, atol=1e-9):
                raise AssertionError("incremental energies drifted")

        read_energies[chunk_start : chunk_start + chunk] = E_best
        local = int(np.argmin(E_best))
        if E_best[local] < best_energy:
            best_energy = float(E_best[local])
            best_x = X_best[local].copy()
            best_read = chunk_start + local

    return SolveResult(best_x, best_energy, best_read, read_energies)


def brute_force(
    model: QuboModel, one_hot_groups: Sequence[Sequence[int]] = ()
) -> tuple[np.ndarray, float]:
    """Exhaustive minimum over all (feasible) assignments.

    Ties are broken toward the lexicographically smallest bit vector.
    Guarded to at most 2^25 candidate states.
    """
    groups = _check_groups(one_hot_groups, model.n_vars)
    grouped = (
        np.concatenate(groups) if groups else np.array([], dtype=np.int64)
    )
    free = np.setdiff1d(np.arange(model.n_vars), grouped)

    total = 1
    for members in groups:
        total *= members.size
    total <<= free.size
    if total > _BRUTE_FORCE_LIMIT:
        raise CapacityError(
            f"{total} candidate states exceed the {_BRUTE_FORCE_LIMIT} limit"
        )
    if model.n_vars == 0:
        return np.zeros(0, dtype=np.int8), model.constant

    M, lin, c0 = model.to_dense()
    radices = [members.size for members in groups] + [2] * free.size

    best_energy = np.inf
    best_x: np.ndarray | None = None
    chunk_size = 1 << 14
    for start in range(0, total, chunk_size):
        count = min(chunk_size, total - start)
        v = np.arange(start, start + count, dtype=np.int64)
        X = np.zeros((count, model.n_vars), dtype=np.int8)
        rows = np.arange(count)
        for gi in range(len(radices) - 1, -1, -1):
            digit = v % radices[gi]
            v //= radices[gi]
            if gi < len(groups):
                X[rows, groups[gi][digit]] = 1
            else:
                X[:, free[gi - len(groups)]] = digit
        Xf = X.astype(np.float64)
        E = c0 + Xf @ lin + 0.5 * np.einsum("ri,ri->r", Xf @ M, Xf)
        m = float(E.min())
        if m > best_energy:
            continue
        cand = X[E == m]
        cand = cand[np.lexsort(cand.T[::-1])][0]
        if m < best_energy or _lex_less(cand, best_x):
            best_energy = m
            best_x = cand.copy()
    return best_x, best_energy


def _lex_less(a: np.ndarray, b: np.ndarray) -> bool:
    diff = a != b
    if not diff.any():
        return False
    first = int(np.argmax(diff))
    return a[first] < b[first]
