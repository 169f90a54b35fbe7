"""Canonical QUBO, Ising, and HUBO problem representations.

Coefficients are stored sparsely in maps keyed by canonical sorted indices:
quadratic/coupling keys are ``(i, j)`` with ``i < j``, HUBO keys are sorted
duplicate-free index tuples.  Construction canonicalizes arbitrary keys,
accumulates duplicates, and drops exact zeros.  Models are treated as
immutable after construction and may be shared freely across threads.

Conventions:

* QUBO energy      ``c0 + sum_i Q_i x_i + sum_{i<j} Q_ij x_i x_j``  (x in {0,1})
* Ising energy     ``offset + sum_i h_i s_i + sum_{i<j} J_ij s_i s_j``  (s in {-1,+1})
* binary <-> spin  ``s = 1 - 2 x``
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EncodingRangeError,
    ParseError,
    ValidationError,
)

__all__ = [
    "QuboModel",
    "IsingModel",
    "HuboModel",
    "SlackBinding",
    "ReductionResult",
    "as_bits",
    "as_spins",
    "qubo_to_ising",
    "ising_to_qubo",
    "reduce_hubo_to_qubo",
    "default_penalty_weight",
    "gadget_penalty_value",
    "add_one_hot_penalty",
    "encode_integer",
    "decode_integer",
    "parse_qubo_text",
    "qubo_to_text",
    "parse_hubo_text",
    "hubo_to_text",
]


# ---------------------------------------------------------------------------
# binary / spin vectors
# ---------------------------------------------------------------------------

def as_bits(x: Sequence[int] | np.ndarray, n_vars: int | None = None) -> np.ndarray:
    """Validate and return ``x`` as an int8 array of {0,1} values."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValidationError(f"expected a 1-d bit vector, got shape {arr.shape}")
    if n_vars is not None and arr.shape[0] != n_vars:
        raise DimensionMismatchError(
            f"expected {n_vars} bits, got {arr.shape[0]}"
        )
    out = arr.astype(np.int8, copy=True)
    if not np.array_equal(out, arr) or not np.all((out == 0) | (out == 1)):
        raise ValidationError("bit vector entries must be exactly 0 or 1")
    return out


def as_spins(s: Sequence[int] | np.ndarray, n_vars: int | None = None) -> np.ndarray:
    """Validate and return ``s`` as an int8 array of {-1,+1} values."""
    arr = np.asarray(s)
    if arr.ndim != 1:
        raise ValidationError(f"expected a 1-d spin vector, got shape {arr.shape}")
    if n_vars is not None and arr.shape[0] != n_vars:
        raise DimensionMismatchError(
            f"expected {n_vars} spins, got {arr.shape[0]}"
        )
    out = arr.astype(np.int8, copy=True)
    if not np.array_equal(out, arr) or not np.all((out == -1) | (out == 1)):
        raise ValidationError("spin vector entries must be exactly -1 or +1")
    return out


def _canonical_pairs(
    quadratic: Mapping[tuple[int, int], float], n_vars: int, kind: str
) -> dict[tuple[int, int], float]:
    out: dict[tuple[int, int], float] = {}
    for key, coeff in quadratic.items():
        i, j = key
        if i == j:
            raise ValidationError(f"{kind} key ({i},{j}) has equal indices")
        if not (0 <= i < n_vars and 0 <= j < n_vars):
            raise ValidationError(f"{kind} key ({i},{j}) out of range [0,{n_vars})")
        if i > j:
            i, j = j, i
        out[(i, j)] = out.get((i, j), 0.0) + float(coeff)
    return {k: v for k, v in out.items() if v != 0.0}


def _canonical_linear(
    linear: Mapping[int, float], n_vars: int
) -> dict[int, float]:
    out: dict[int, float] = {}
    for i, coeff in linear.items():
        if not 0 <= i < n_vars:
            raise ValidationError(f"linear key {i} out of range [0,{n_vars})")
        out[int(i)] = out.get(int(i), 0.0) + float(coeff)
    return {k: v for k, v in out.items() if v != 0.0}


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

@dataclass
class QuboModel:
    """Quadratic binary model ``c0 + sum Q_i x_i + sum_{i<j} Q_ij x_i x_j``."""

    n_vars: int
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    linear: dict[int, float] = field(default_factory=dict)
    constant: float = 0.0

    def __post_init__(self):
        if self.n_vars < 0:
            raise ValidationError("n_vars must be non-negative")
        self.quadratic = _canonical_pairs(self.quadratic, self.n_vars, "quadratic")
        self.linear = _canonical_linear(self.linear, self.n_vars)
        self.constant = float(self.constant)

    def energy(self, x: Sequence[int] | np.ndarray) -> float:
        """Objective value for a single binary assignment."""
        bits = as_bits(x, self.n_vars)
        e = self.constant
        for i, q in self.linear.items():
            e += q * bits[i]
        for (i, j), q in self.quadratic.items():
            e += q * bits[i] * bits[j]
        return float(e)

    def energies(self, X: np.ndarray) -> np.ndarray:
        """Vectorized objective over the rows of a (n_states, n_vars) array."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_vars:
            raise DimensionMismatchError(
                f"expected shape (*, {self.n_vars}), got {X.shape}"
            )
        mat, lin, c0 = self.to_dense()
        return c0 + X @ lin + 0.5 * np.einsum("si,ij,sj->s", X, mat, X)

    def to_dense(self) -> tuple[np.ndarray, np.ndarray, float]:
        """Dense ``(symmetric_offdiag, linear, constant)`` form.

        The matrix holds ``Q_ij`` symmetrically with zero diagonal, so the
        quadratic part of the energy is ``0.5 * x^T M x``.
        """
        mat = np.zeros((self.n_vars, self.n_vars))
        for (i, j), q in self.quadratic.items():
            mat[i, j] = q
            mat[j, i] = q
        lin = np.zeros(self.n_vars)
        for i, q in self.linear.items():
            lin[i] = q
        return mat, lin, self.constant

    def scaled(self, factor: float) -> "QuboModel":
        return QuboModel(
            self.n_vars,
            {k: factor * v for k, v in self.quadratic.items()},
            {k: factor * v for k, v in self.linear.items()},
            factor * self.constant,
        )


@dataclass
class IsingModel:
    """Spin model ``offset + sum h_i s_i + sum_{i<j} J_ij s_i s_j``."""

    n_vars: int
    couplings: dict[tuple[int, int], float] = field(default_factory=dict)
    fields: dict[int, float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        if self.n_vars < 0:
            raise ValidationError("n_vars must be non-negative")
        self.couplings = _canonical_pairs(self.couplings, self.n_vars, "coupling")
        self.fields = _canonical_linear(self.fields, self.n_vars)
        self.offset = float(self.offset)

    def energy(self, s: Sequence[int] | np.ndarray) -> float:
        spins = as_spins(s, self.n_vars)
        e = self.offset
        for i, h in self.fields.items():
            e += h * spins[i]
        for (i, j), jij in self.couplings.items():
            e += jij * spins[i] * spins[j]
        return float(e)


def _canonical_terms(
    terms: Mapping[Iterable[int], float], n_vars: int
) -> dict[tuple[int, ...], float]:
    out: dict[tuple[int, ...], float] = {}
    for key, coeff in terms.items():
        idx = tuple(sorted(int(i) for i in key))
        if len(idx) == 0:
            raise ValidationError("HUBO term needs at least one index")
        if len(set(idx)) != len(idx):
            raise ValidationError(f"HUBO term {idx} has duplicate indices")
        if idx[0] < 0 or idx[-1] >= n_vars:
            raise ValidationError(f"HUBO term {idx} out of range [0,{n_vars})")
        out[idx] = out.get(idx, 0.0) + float(coeff)
    return {k: v for k, v in out.items() if v != 0.0}


@dataclass
class HuboModel:
    """Binary model with interaction terms of arbitrary order.

    ``terms`` maps sorted duplicate-free index tuples (size >= 1) to real
    coefficients; size-1 tuples are the linear part.
    """

    n_vars: int
    terms: dict[tuple[int, ...], float] = field(default_factory=dict)
    constant: float = 0.0

    def __post_init__(self):
        if self.n_vars < 0:
            raise ValidationError("n_vars must be non-negative")
        self.terms = _canonical_terms(self.terms, self.n_vars)
        self.constant = float(self.constant)

    @property
    def max_order(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    def energy(self, x: Sequence[int] | np.ndarray) -> float:
        bits = as_bits(x, self.n_vars)
        e = self.constant
        for idx, coeff in self.terms.items():
            prod = 1
            for i in idx:
                prod *= bits[i]
                if prod == 0:
                    break
            if prod:
                e += coeff
        return float(e)

    def to_qubo(self) -> QuboModel:
        """Direct conversion; requires max order <= 2."""
        if self.max_order > 2:
            raise ValidationError(
                f"model has order-{self.max_order} terms; reduce it first"
            )
        linear = {k[0]: v for k, v in self.terms.items() if len(k) == 1}
        quadratic = {
            (k[0], k[1]): v for k, v in self.terms.items() if len(k) == 2
        }
        return QuboModel(self.n_vars, quadratic, linear, self.constant)


@dataclass(frozen=True)
class SlackBinding:
    """One auxiliary variable bound to the product of two parents."""

    slack_index: int
    parent_i: int
    parent_j: int


@dataclass
class ReductionResult:
    """Outcome of quadratizing a HUBO.

    Slack indices start at ``n_original`` and are contiguous in creation
    order; each is penalty-bound to the product of its two parents, which
    may themselves be earlier slacks.
    """

    qubo: QuboModel
    n_original: int
    slack_bindings: tuple[SlackBinding, ...]
    penalty_weight: float


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------

def qubo_to_ising(model: QuboModel) -> IsingModel:
    """Equivalent Ising model under the substitution ``x = (1 - s) / 2``.

    Energies match exactly, offset included, for every paired assignment.
    """
    couplings: dict[tuple[int, int], float] = {}
    fields: dict[int, float] = {}
    offset = model.constant

    for i, q in model.linear.items():
        # q*x = q*(1-s)/2
        fields[i] = fields.get(i, 0.0) - q / 2.0
        offset += q / 2.0
    for (i, j), q in model.quadratic.items():
        # q*x_i*x_j = q*(1-s_i)(1-s_j)/4
        couplings[(i, j)] = couplings.get((i, j), 0.0) + q / 4.0
        fields[i] = fields.get(i, 0.0) - q / 4.0
        fields[j] = fields.get(j, 0.0) - q / 4.0
        offset += q / 4.0

    return IsingModel(model.n_vars, couplings, fields, offset)


def ising_to_qubo(model: IsingModel) -> QuboModel:
    """Exact inverse of :func:`qubo_to_ising` (substitute ``s = 1 - 2 x``)."""
    quadratic: dict[tuple[int, int], float] = {}
    linear: dict[int, float] = {}
    constant = model.offset

    for i, h in model.fields.items():
        linear[i] = linear.get(i, 0.0) - 2.0 * h
        constant += h
    for (i, j), jij in model.couplings.items():
        quadratic[(i, j)] = quadratic.get((i, j), 0.0) + 4.0 * jij
        linear[i] = linear.get(i, 0.0) - 2.0 * jij
        linear[j] = linear.get(j, 0.0) - 2.0 * jij
        constant += jij

    return QuboModel(model.n_vars, quadratic, linear, constant)


# ---------------------------------------------------------------------------
# order reduction
# ---------------------------------------------------------------------------

def gadget_penalty_value(x: int, y: int, z: int) -> int:
    """Penalty ``xy + 3z - 2xz - 2yz``: 0 iff z == x*y, >= 1 otherwise."""
    return x * y + 3 * z - 2 * x * z - 2 * y * z


def default_penalty_weight(model: HuboModel) -> float:
    """1 + sum of |coefficients|: no violated binding is ever profitable."""
    return 1.0 + sum(abs(c) for c in model.terms.values())


def reduce_hubo_to_qubo(
    model: HuboModel, penalty_weight: float | None = None
) -> ReductionResult:
    """Quadratize by repeated pair substitution.

    At each step the variable pair occurring in the greatest number of
    remaining order->2 terms is replaced by a slack variable ``z`` bound via
    the penalty ``lam * (x_i x_j - 2 x_i z - 2 x_j z + 3 z)``; existing
    bindings are reused instead of minting duplicates.  With ``lam`` at or
    above the default sufficiency bound, the reduced QUBO attains the same
    minimum energy as the HUBO and its minimizers project onto HUBO
    minimizers with slacks equal to their parents' products.
    """
    if penalty_weight is None:
        penalty_weight = default_penalty_weight(model)
    if penalty_weight <= 0:
        raise ValidationError("penalty_weight must be positive")

    n_original = model.n_vars
    n_total = n_original
    terms = dict(model.terms)
    bindings: dict[tuple[int, int], int] = {}
    binding_order: list[SlackBinding] = []

    # Pair occurrence counts over order->=3 terms only, kept incrementally so
    # dense cubic models (one substitution per term) stay near-linear.
    pair_counts: Counter[tuple[int, int]] = Counter()
    terms_with_pair: dict[tuple[int, int], set[tuple[int, ...]]] = {}

    def index_term(key: tuple[int, ...]):
        if len(key) > 2:
            for p in combinations(key, 2):
                pair_counts[p] += 1
                terms_with_pair.setdefault(p, set()).add(key)

    def unindex_term(key: tuple[int, ...]):
        if len(key) > 2:
            for p in combinations(key, 2):
                pair_counts[p] -= 1
                if pair_counts[p] == 0:
                    del pair_counts[p]
                owners = terms_with_pair[p]
                owners.discard(key)
                if not owners:
                    del terms_with_pair[p]

    for key in terms:
        index_term(key)

    quadratic: dict[tuple[int, int], float] = {}
    linear: dict[int, float] = {}

    def add_quad(i: int, j: int, coeff: float):
        key = (i, j) if i < j else (j, i)
        quadratic[key] = quadratic.get(key, 0.0) + coeff

    def add_lin(i: int, coeff: float):
        linear[i] = linear.get(i, 0.0) + coeff

    while pair_counts:
        # most frequent pair; ties resolved to lexicographically smallest
        best = min(pair_counts, key=lambda p: (-pair_counts[p], p))
        i, j = best

        if best in bindings:
            z = bindings[best]
        else:
            z = n_total
            n_total += 1
            bindings[best] = z
            binding_order.append(SlackBinding(z, i, j))
            add_quad(i, j, penalty_weight)
            add_quad(i, z, -2.0 * penalty_weight)
            add_quad(j, z, -2.0 * penalty_weight)
            add_lin(z, 3.0 * penalty_weight)

        for key in list(terms_with_pair.get(best, ())):
            coeff = terms.pop(key)
            unindex_term(key)
            new_key = tuple(sorted(k for k in key if k != i and k != j)) + (z,)
            new_key = tuple(sorted(new_key))
            if new_key in terms:
                unindex_term(new_key)
                coeff += terms.pop(new_key)
            if coeff != 0.0:
                terms[new_key] = coeff
                index_term(new_key)

    for idx, coeff in terms.items():
        if len(idx) == 1:
            add_lin(idx[0], coeff)
        else:
            add_quad(idx[0], idx[1], coeff)

    qubo = QuboModel(n_total, quadratic, linear, model.constant)
    return ReductionResult(qubo, n_original, tuple(binding_order), penalty_weight)


# ---------------------------------------------------------------------------
# constraints and encodings
# ---------------------------------------------------------------------------

def add_one_hot_penalty(
    model: QuboModel, groups: Sequence[Sequence[int]], weight: float
) -> QuboModel:
    """Add ``weight * (sum_{i in g} x_i - 1)^2`` per group.

    Expanded with ``x^2 = x`` this contributes ``weight`` to the constant,
    ``-weight`` to each member's linear term, and ``+2*weight`` to each
    in-group pair.  Feasible assignments gain exactly zero energy.
    """
    if weight <= 0:
        raise ValidationError("penalty weight must be positive")
    quadratic = dict(model.quadratic)
    linear = dict(model.linear)
    constant = model.constant
    for group in groups:
        members = sorted(set(int(i) for i in group))
        if not members:
            raise ValidationError("one-hot group must be nonempty")
        if members[0] < 0 or members[-1] >= model.n_vars:
            raise ValidationError(f"group {members} out of range")
        constant += weight
        for i in members:
            linear[i] = linear.get(i, 0.0) - weight
        for i, j in combinations(members, 2):
            quadratic[(i, j)] = quadratic.get((i, j), 0.0) + 2.0 * weight
    return QuboModel(model.n_vars, quadratic, linear, constant)


def encode_integer(value: float, p: int, q: int) -> np.ndarray:
    """Bits of ``value = sum_{i=-p}^{q} b_i 2^i``, ordered from 2^-p to 2^q.

    ``p = 0`` encodes plain non-negative integers in ``q + 1`` bits.
    """
    if p < 0 or q < 0:
        raise ValidationError("p and q must be non-negative")
    scaled = value * (1 << p)
    if scaled != int(scaled):
        raise EncodingRangeError(
            f"{value} is not a multiple of 2^-{p}"
        )
    scaled = int(scaled)
    n_bits = p + q + 1
    if scaled < 0 or scaled >= (1 << n_bits):
        raise EncodingRangeError(
            f"{value} outside [0, 2^{q + 1} - 2^-{p}] for p={p}, q={q}"
        )
    return np.array([(scaled >> i) & 1 for i in range(n_bits)], dtype=np.int8)


def decode_integer(bits: Sequence[int] | np.ndarray, p: int) -> float:
    """Inverse of :func:`encode_integer`; returns an int when ``p == 0``."""
    arr = as_bits(bits)
    scaled = sum(int(b) << i for i, b in enumerate(arr))
    return scaled if p == 0 else scaled / (1 << p)


# ---------------------------------------------------------------------------
# text fixture format
# ---------------------------------------------------------------------------
#
# One term per line: `i j coeff` (quadratic), `i coeff` (linear),
# `c0 coeff` (constant); HUBO lines list any number of indices before the
# coefficient.  `#` starts a comment.  Variable count is max index + 1.

def _parse_lines(text: str, allow_higher: bool):
    terms: dict[tuple[int, ...], float] = {}
    constant = 0.0
    max_index = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "c0":
            if len(tokens) != 2:
                raise ParseError("expected `c0 <coeff>`", line=lineno)
            try:
                constant += float(tokens[1])
            except ValueError:
                raise ParseError(f"bad coefficient {tokens[1]!r}", line=lineno)
            continue
        if len(tokens) < 2:
            raise ParseError("expected indices followed by a coefficient", line=lineno)
        try:
            coeff = float(tokens[-1])
        except ValueError:
            raise ParseError(f"bad coefficient {tokens[-1]!r}", line=lineno)
        try:
            idx = tuple(sorted(int(t) for t in tokens[:-1]))
        except ValueError:
            raise ParseError(f"bad variable index in {tokens[:-1]}", line=lineno)
        if any(i < 0 for i in idx):
            raise ParseError("variable indices must be non-negative", line=lineno)
        if len(set(idx)) != len(idx):
            raise ParseError(f"duplicate index in term {idx}", line=lineno)
        if not allow_higher and len(idx) > 2:
            raise ParseError(
                f"order-{len(idx)} term not allowed in a QUBO file", line=lineno
            )
        terms[idx] = terms.get(idx, 0.0) + coeff
        max_index = max(max_index, idx[-1])
    return terms, constant, max_index + 1


def parse_qubo_text(text: str) -> QuboModel:
    terms, constant, n_vars = _parse_lines(text, allow_higher=False)
    linear = {k[0]: v for k, v in terms.items() if len(k) == 1}
    quadratic = {(k[0], k[1]): v for k, v in terms.items() if len(k) == 2}
    return QuboModel(n_vars, quadratic, linear, constant)


def parse_hubo_text(text: str) -> HuboModel:
    terms, constant, n_vars = _parse_lines(text, allow_higher=True)
    return HuboModel(n_vars, terms, constant)


def qubo_to_text(model: QuboModel) -> str:
    lines = []
    if model.constant != 0.0:
        lines.append(f"c0 {model.constant!r}")
    for i in sorted(model.linear):
        lines.append(f"{i} {model.linear[i]!r}")
    for i, j in sorted(model.quadratic):
        lines.append(f"{i} {j} {model.quadratic[(i, j)]!r}")
    return "\n".join(lines) + "\n"


def hubo_to_text(model: HuboModel) -> str:
    lines = []
    if model.constant != 0.0:
        lines.append(f"c0 {model.constant!r}")
    for idx in sorted(model.terms, key=lambda k: (len(k), k)):
        prefix = " ".join(str(i) for i in idx)
        lines.append(f"{prefix} {model.terms[idx]!r}")
    return "\n".join(lines) + "\n"
