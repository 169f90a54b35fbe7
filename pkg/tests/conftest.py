import numpy as np
import pytest

from fmqubo.binopt import HuboModel, QuboModel


def all_bitstrings(n: int) -> np.ndarray:
    """All 2^n binary vectors, rows ordered by integer value."""
    vals = np.arange(2 ** n)
    return (vals[:, None] >> np.arange(n)[None, :]) & 1


def random_qubo(rng: np.random.Generator, n: int, density: float = 1.0) -> QuboModel:
    quad = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                quad[(i, j)] = float(rng.uniform(-1, 1))
    lin = {i: float(rng.uniform(-1, 1)) for i in range(n)}
    return QuboModel(n, quad, lin, float(rng.uniform(-1, 1)))


def random_hubo(rng: np.random.Generator, n: int, max_order: int) -> HuboModel:
    terms = {}
    n_terms = int(rng.integers(3, 12))
    for _ in range(n_terms):
        order = int(rng.integers(1, max_order + 1))
        idx = tuple(sorted(rng.choice(n, size=min(order, n), replace=False).tolist()))
        terms[idx] = float(rng.uniform(-2, 2))
    return HuboModel(n, terms, float(rng.uniform(-1, 1)))


def naive_fm_predict(w0, w, V, x) -> float:
    """Double-loop pairwise form, the slow reference for the k-sum identity."""
    x = np.asarray(x, dtype=float)
    total = w0 + float(np.dot(w, x))
    n = len(x)
    for i in range(n):
        for j in range(i + 1, n):
            total += float(np.dot(V[i], V[j])) * x[i] * x[j]
    return total


def naive_hofm_predict(w0, w, V2, V3, x) -> float:
    total = naive_fm_predict(w0, w, V2, x)
    n = len(x)
    for i in range(n):
        for j in range(i + 1, n):
            for l in range(j + 1, n):
                total += float(np.sum(V3[i] * V3[j] * V3[l])) * x[i] * x[j] * x[l]
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
