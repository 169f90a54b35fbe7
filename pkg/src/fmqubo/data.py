"""Dose-response data handling and black-box construction.

Covers CSV ingestion, one-hot encodings for the two experiment layouts,
train/test splitting, drug-order symmetrization, and the two black boxes
used by the optimizers: a lookup table over measured responses and a
synthetic box with a planted polynomial for desk-scale testing.

Encoding layouts (one one-hot block per categorical choice):

* single combination: (conc_a, L) + (conc_b, L) with L dose levels
  per drug, 16 bits at the standard L=8;
* drug pool: (drug_a, D) + (conc_a, L) + (drug_b, D) + (conc_b, L),
  88 bits at D=40 drugs and L=4 levels.

Slack variables, when used, occupy indices after all blocks and belong
to no group.
"""

from __future__ import annotations

import abc
import csv
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .binopt import HuboModel, as_bits
from .errors import (
    EncodingRangeError,
    ParseError,
    UnknownCombinationError,
    ValidationError,
)
from .seeding import rng_from

__all__ = [
    "ResponseRecord",
    "load_records",
    "EncodingSpec",
    "combination_encoding",
    "drug_pool_encoding",
    "encode",
    "encode_values",
    "decode",
    "symmetrize",
    "split_scenario1",
    "split_scenario2",
    "response_matrix",
    "group_combinations",
    "BlackBox",
    "TableBlackBox",
    "SyntheticBlackBox",
    "make_table_blackbox",
    "make_synthetic_blackbox",
    "Scenario1Dataset",
    "Scenario2Dataset",
    "SyntheticDataset",
]

_CSV_FIELDS = (
    "drug_a", "drug_b", "cell_line", "conc_a_level", "conc_b_level", "response"
)


@dataclass(frozen=True)
class ResponseRecord:
    """One measured response of a drug pair at a dose-level pair."""

    drug_a: str
    drug_b: str
    cell_line: str
    conc_a_level: int
    conc_b_level: int
    response: float


def load_records(
    path,
    n_levels: int | None = None,
    min_response: float | None = None,
) -> list[ResponseRecord]:
    """Read records from a CSV with header ``drug_a,drug_b,cell_line,
    conc_a_level,conc_b_level,response``.

    ``n_levels`` bounds the 0-based dose-level indices when given;
    ``min_response`` rejects responses at or below it (growth data uses
    -100 as the hard floor).
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header_line = fh.readline()
        header = [c.strip() for c in header_line.strip().split(",")]
        if header != list(_CSV_FIELDS):
            raise ParseError(
                f"expected header {','.join(_CSV_FIELDS)}, got {header_line.strip()!r}",
                line=1,
            )
        records = []
        for lineno, row in enumerate(csv.reader(fh), start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(_CSV_FIELDS):
                raise ParseError(
                    f"expected {len(_CSV_FIELDS)} fields, got {len(row)}",
                    line=lineno,
                )
            drug_a, drug_b, cell_line = (c.strip() for c in row[:3])
            if not drug_a or not drug_b or not cell_line:
                raise ParseError("empty identifier field", line=lineno)
            try:
                ca, cb = int(row[3]), int(row[4])
            except ValueError:
                raise ParseError(
                    f"bad concentration level in {row[3]!r},{row[4]!r}",
                    line=lineno,
                )
            try:
                response = float(row[5])
            except ValueError:
                raise ParseError(f"bad response {row[5]!r}", line=lineno)
            if ca < 0 or cb < 0:
                raise ValidationError(
                    f"line {lineno}: concentration levels must be >= 0"
                )
            if n_levels is not None and (ca >= n_levels or cb >= n_levels):
                raise ValidationError(
                    f"line {lineno}: concentration level out of range [0,{n_levels})"
                )
            if min_response is not None and response <= min_response:
                raise ValidationError(
                    f"line {lineno}: response {response} not above {min_response}"
                )
            records.append(
                ResponseRecord(drug_a, drug_b, cell_line, ca, cb, response)
            )
    return records


# ---------------------------------------------------------------------------
# one-hot encoding
# ---------------------------------------------------------------------------

_BLOCK_NAMES = ("drug_a", "conc_a", "drug_b", "conc_b")


@dataclass(frozen=True)
class EncodingSpec:
    """Ordered one-hot blocks, with optional trailing slack positions.

    ``blocks`` are (name, cardinality) pairs drawn from drug_a/conc_a/
    drug_b/conc_b; drug blocks index into ``drug_vocab``.  ``slack_bits``
    only affects ``n_total``: encoded vectors cover the blocks, and the
    surrogate engine appends the slack block itself.
    """

    blocks: tuple[tuple[str, int], ...]
    drug_vocab: tuple[str, ...] | None = None
    slack_bits: int = 0

    def __post_init__(self):
        if not self.blocks:
            raise ValidationError("need at least one block")
        for name, card in self.blocks:
            if name not in _BLOCK_NAMES:
                raise ValidationError(f"unknown block name {name!r}")
            if card < 1:
                raise ValidationError(f"block {name} has cardinality {card}")
            if name.startswith("drug"):
                if self.drug_vocab is None or len(self.drug_vocab) != card:
                    raise ValidationError(
                        f"block {name} needs a drug_vocab of size {card}"
                    )
        if self.slack_bits < 0:
            raise ValidationError("slack_bits must be >= 0")

    @property
    def total_bits(self) -> int:
        return sum(card for _, card in self.blocks)

    @property
    def n_total(self) -> int:
        return self.total_bits + self.slack_bits

    @property
    def groups(self) -> tuple[tuple[int, ...], ...]:
        """One-hot index groups, one per block; slack bits are ungrouped."""
        out = []
        base = 0
        for _, card in self.blocks:
            out.append(tuple(range(base, base + card)))
            base += card
        return tuple(out)


def combination_encoding(n_levels: int = 8, slack_bits: int = 0) -> EncodingSpec:
    """Two dose blocks for a fixed drug pair (16 bits at n_levels=8)."""
    return EncodingSpec(
        (("conc_a", n_levels), ("conc_b", n_levels)), slack_bits=slack_bits
    )


def drug_pool_encoding(
    drugs: Iterable[str], n_levels: int = 4, slack_bits: int = 0
) -> EncodingSpec:
    """Drug-identity + dose blocks for a pool of drugs.

    ``drugs`` may be ids or records; the vocabulary is sorted and
    deduplicated.  40 drugs at 4 levels gives the standard 88 bits.
    """
    ids: set[str] = set()
    for d in drugs:
        if isinstance(d, ResponseRecord):
            ids.add(d.drug_a)
            ids.add(d.drug_b)
        else:
            ids.add(str(d))
    vocab = tuple(sorted(ids))
    if not vocab:
        raise ValidationError("empty drug vocabulary")
    d = len(vocab)
    return EncodingSpec(
        (("drug_a", d), ("conc_a", n_levels), ("drug_b", d), ("conc_b", n_levels)),
        drug_vocab=vocab,
        slack_bits=slack_bits,
    )


def _block_value(record: ResponseRecord, name: str, spec: EncodingSpec) -> int:
    if name == "conc_a":
        return record.conc_a_level
    if name == "conc_b":
        return record.conc_b_level
    drug = record.drug_a if name == "drug_a" else record.drug_b
    try:
        return spec.drug_vocab.index(drug)
    except ValueError:
        raise UnknownCombinationError(f"drug {drug!r} not in vocabulary")


def encode_values(spec: EncodingSpec, values: Sequence[int]) -> np.ndarray:
    """One-hot concatenation of per-block choice indices."""
    if len(values) != len(spec.blocks):
        raise ValidationError(
            f"expected {len(spec.blocks)} values, got {len(values)}"
        )
    bits = np.zeros(spec.total_bits, dtype=np.int8)
    base = 0
    for (name, card), v in zip(spec.blocks, values):
        v = int(v)
        if not 0 <= v < card:
            raise EncodingRangeError(
                f"value {v} out of range [0,{card}) for block {name}"
            )
        bits[base + v] = 1
        base += card
    return bits


def encode(record: ResponseRecord, spec: EncodingSpec) -> np.ndarray:
    """Binary feature vector for one record (slack bits not included)."""
    return encode_values(
        spec, [_block_value(record, name, spec) for name, _ in spec.blocks]
    )


def decode(bits, spec: EncodingSpec) -> dict:
    """Per-block choices of an encoded vector.

    Accepts vectors with or without the trailing slack block; every
    feature block must contain exactly one set bit.
    """
    arr = as_bits(bits)
    if arr.shape[0] not in (spec.total_bits, spec.n_total):
        raise ValidationError(
            f"expected {spec.total_bits} or {spec.n_total} bits, "
            f"got {arr.shape[0]}"
        )
    out: dict[str, object] = {}
    base = 0
    for name, card in spec.blocks:
        block = arr[base : base + card]
        if block.sum() != 1:
            raise ValidationError(f"block {name} is not one-hot: {block.tolist()}")
        choice = int(np.argmax(block))
        base += card
        if name.startswith("drug"):
            out[name] = spec.drug_vocab[choice]
        else:
            out[name + "_level"] = choice
    return out


# ---------------------------------------------------------------------------
# symmetrization and splits
# ---------------------------------------------------------------------------

def _swap(r: ResponseRecord) -> ResponseRecord:
    return ResponseRecord(
        r.drug_b, r.drug_a, r.cell_line, r.conc_b_level, r.conc_a_level,
        r.response,
    )


def symmetrize(records: Sequence[ResponseRecord]) -> list[ResponseRecord]:
    """Append the drug/dose-swapped twin of every record.

    Exactly doubles the input, including fixed points such as
    self-paired equal-dose records.
    """
    return list(records) + [_swap(r) for r in records]


def split_scenario1(
    matrix: np.ndarray, n_extra: int, seed: int
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Split the cells of one dose-response matrix.

    Training cells are the first row and first column (single-drug
    responses at the partner's lowest dose), the equal-dose diagonal,
    and ``n_extra`` further cells drawn uniformly without replacement;
    test cells are the rest.  The two sides partition the grid.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {matrix.shape}")
    size = matrix.shape[0]
    base = {(0, j) for j in range(size)}
    base |= {(i, 0) for i in range(size)}
    base |= {(i, i) for i in range(size)}
    rest = sorted(
        (i, j) for i in range(size) for j in range(size) if (i, j) not in base
    )
    if not 0 <= n_extra <= len(rest):
        raise ValidationError(
            f"n_extra must be in [0,{len(rest)}], got {n_extra}"
        )
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(rest), size=n_extra, replace=False) if n_extra else []
    extra = {rest[int(i)] for i in picks}
    train = sorted(base | extra)
    test = sorted(c for c in rest if c not in extra)
    return train, test


def split_scenario2(
    records: Sequence[ResponseRecord], missing_ratio: float, seed: int
) -> tuple[list[ResponseRecord], list[ResponseRecord]]:
    """Hold out a fraction of unordered drug pairs entirely.

    Every dose point of a held-out pair goes to test; self-paired
    (single-drug) records always stay in training.  At least one pair is
    held out.
    """
    if not 0.0 < missing_ratio < 1.0:
        raise ValidationError(
            f"missing_ratio must be in (0,1), got {missing_ratio}"
        )
    pairs = sorted(
        {
            (min(r.drug_a, r.drug_b), max(r.drug_a, r.drug_b))
            for r in records
            if r.drug_a != r.drug_b
        }
    )
    if not pairs:
        raise ValidationError("no two-drug pairs to split")
    n_holdout = min(len(pairs), max(1, round(missing_ratio * len(pairs))))
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(pairs), size=n_holdout, replace=False)
    held = {pairs[int(i)] for i in picks}

    train, test = [], []
    for r in records:
        key = (min(r.drug_a, r.drug_b), max(r.drug_a, r.drug_b))
        if r.drug_a != r.drug_b and key in held:
            test.append(r)
        else:
            train.append(r)
    return train, test


def response_matrix(
    records: Sequence[ResponseRecord], n_levels: int = 8
) -> np.ndarray:
    """Dense dose-response matrix of one drug/drug/cell-line combination."""
    combos = {(r.drug_a, r.drug_b, r.cell_line) for r in records}
    if len(combos) != 1:
        raise ValidationError(
            f"records span {len(combos)} combinations, expected exactly 1"
        )
    matrix = np.full((n_levels, n_levels), np.nan)
    for r in records:
        if not (0 <= r.conc_a_level < n_levels and 0 <= r.conc_b_level < n_levels):
            raise ValidationError(
                f"level ({r.conc_a_level},{r.conc_b_level}) out of range "
                f"[0,{n_levels})"
            )
        if not np.isnan(matrix[r.conc_a_level, r.conc_b_level]):
            raise ValidationError(
                f"duplicate cell ({r.conc_a_level},{r.conc_b_level})"
            )
        matrix[r.conc_a_level, r.conc_b_level] = r.response
    missing = int(np.isnan(matrix).sum())
    if missing:
        raise ValidationError(f"{missing} matrix cells have no measurement")
    return matrix


def group_combinations(
    records: Sequence[ResponseRecord],
) -> dict[tuple[str, str, str], list[ResponseRecord]]:
    """Records keyed by (drug_a, drug_b, cell_line), keys sorted."""
    out: dict[tuple[str, str, str], list[ResponseRecord]] = {}
    for r in records:
        out.setdefault((r.drug_a, r.drug_b, r.cell_line), []).append(r)
    return {k: out[k] for k in sorted(out)}


# ---------------------------------------------------------------------------
# black boxes
# ---------------------------------------------------------------------------

class BlackBox(abc.ABC):
    """Queryable response surface over one-hot binary inputs."""

    @property
    @abc.abstractmethod
    def n_bits(self) -> int: ...

    @property
    @abc.abstractmethod
    def groups(self) -> tuple[tuple[int, ...], ...]: ...

    @abc.abstractmethod
    def query(self, x) -> float:
        """Response for one feasible input; deterministic per box."""

    @abc.abstractmethod
    def sample(self, n: int, rng=None) -> tuple[np.ndarray, np.ndarray]:
        """n distinct (input, response) pairs; same rng, same result."""

    def _check(self, x) -> np.ndarray:
        bits = as_bits(x, self.n_bits)
        for g in self.groups:
            if bits[list(g)].sum() != 1:
                raise ValidationError(f"group {g} is not one-hot in query input")
        return bits


class TableBlackBox(BlackBox):
    """Exact lookup over measured responses."""

    def __init__(self, records: Sequence[ResponseRecord], spec: EncodingSpec):
        if not records:
            raise ValidationError("need at least one record")
        self._spec = spec
        self._table: dict[tuple[int, ...], float] = {}
        self._records = list(records)
        for r in records:
            key = tuple(int(b) for b in encode(r, spec))
            if key in self._table and self._table[key] != r.response:
                raise ValidationError(
                    f"conflicting responses for {r.drug_a}/{r.drug_b} at "
                    f"levels ({r.conc_a_level},{r.conc_b_level})"
                )
            self._table[key] = r.response

    @property
    def n_bits(self) -> int:
        return self._spec.total_bits

    @property
    def groups(self) -> tuple[tuple[int, ...], ...]:
        return self._spec.groups

    @property
    def n_known(self) -> int:
        return len(self._table)

    def query(self, x) -> float:
        bits = self._check(x)
        key = tuple(int(b) for b in bits)
        if key not in self._table:
            fields = decode(bits, self._spec)
            raise UnknownCombinationError(f"no measurement for {fields}")
        return self._table[key]

    def sample(self, n: int, rng=None) -> tuple[np.ndarray, np.ndarray]:
        if not 1 <= n <= len(self._records):
            raise ValidationError(
                f"can sample 1..{len(self._records)} records, asked for {n}"
            )
        g = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        picks = g.choice(len(self._records), size=n, replace=False)
        X = np.stack([encode(self._records[int(i)], self._spec) for i in picks])
        y = np.array([self._records[int(i)].response for i in picks])
        return X, y


class SyntheticBlackBox(BlackBox):
    """Planted polynomial over one-hot groups, with optional query noise.

    Coefficients at the requested orders are drawn once from the seed;
    noise is a deterministic function of (seed, input), so repeated
    queries of the same point agree.  The exact polynomial is exposed as
    ``hidden`` for oracle comparisons.
    """

    def __init__(
        self,
        n_groups: int,
        group_size: int,
        planted_orders: Sequence[int],
        noise_sd: float,
        seed: int,
    ):
        orders = tuple(sorted(set(int(o) for o in planted_orders)))
        if not orders or not set(orders) <= {1, 2, 3}:
            raise ValidationError("planted orders must be within {1, 2, 3}")
        if n_groups < 1 or group_size < 1:
            raise ValidationError("need n_groups >= 1 and group_size >= 1")
        if noise_sd < 0:
            raise ValidationError("noise_sd must be >= 0")
        self.n_groups = int(n_groups)
        self.group_size = int(group_size)
        self.planted_orders = orders
        self.noise_sd = float(noise_sd)
        self.seed = int(seed)

        n = self.n_groups * self.group_size
        self._groups = tuple(
            tuple(range(g * group_size, (g + 1) * group_size))
            for g in range(n_groups)
        )
        member = np.repeat(np.arange(n_groups), group_size)
        rng = rng_from(seed, "coefficients")
        terms: dict[tuple[int, ...], float] = {}
        # cross-group terms only; within-group products vanish on feasible
        # inputs, so coefficients there would be dead weight
        if 1 in orders:
            for i in range(n):
                terms[(i,)] = float(rng.normal())
        if 2 in orders:
            for i in range(n):
                for j in range(i + 1, n):
                    if member[i] != member[j]:
                        terms[(i, j)] = float(rng.normal())
        if 3 in orders:
            for i in range(n):
                for j in range(i + 1, n):
                    if member[i] == member[j]:
                        continue
                    for l in range(j + 1, n):
                        if member[l] != member[i] and member[l] != member[j]:
                            terms[(i, j, l)] = float(rng.normal())
        self.hidden = HuboModel(n, terms, 0.0)

    @property
    def n_bits(self) -> int:
        return self.n_groups * self.group_size

    @property
    def groups(self) -> tuple[tuple[int, ...], ...]:
        return self._groups

    @property
    def feasible_count(self) -> int:
        return self.group_size ** self.n_groups

    def state_at(self, index: int) -> np.ndarray:
        """Feasible state for a mixed-radix index in [0, feasible_count)."""
        if not 0 <= index < self.feasible_count:
            raise ValidationError(f"state index {index} out of range")
        bits = np.zeros(self.n_bits, dtype=np.int8)
        v = int(index)
        for g in range(self.n_groups - 1, -1, -1):
            choice = v % self.group_size
            v //= self.group_size
            bits[g * self.group_size + choice] = 1
        return bits

    def query(self, x) -> float:
        bits = self._check(x)
        value = self.hidden.energy(bits)
        if self.noise_sd > 0.0:
            key = "".join(str(int(b)) for b in bits)
            noise_rng = rng_from(self.seed, "noise", key)
            value += self.noise_sd * float(noise_rng.normal())
        return float(value)

    def sample(self, n: int, rng=None) -> tuple[np.ndarray, np.ndarray]:
        if not 1 <= n <= self.feasible_count:
            raise ValidationError(
                f"can sample 1..{self.feasible_count} states, asked for {n}"
            )
        g = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        picks = g.choice(self.feasible_count, size=n, replace=False)
        X = np.stack([self.state_at(int(i)) for i in picks])
        y = np.array([self.query(x) for x in X])
        return X, y

    def spec_dict(self) -> dict:
        return {
            "format": "synthetic-box-v1",
            "n_groups": self.n_groups,
            "group_size": self.group_size,
            "planted_orders": list(self.planted_orders),
            "noise_sd": self.noise_sd,
            "seed": self.seed,
        }

    @classmethod
    def from_spec(cls, data: dict) -> "SyntheticBlackBox":
        if data.get("format") != "synthetic-box-v1":
            raise ValidationError(
                f"unknown black-box format tag: {data.get('format')!r}"
            )
        return cls(
            data["n_groups"],
            data["group_size"],
            data["planted_orders"],
            data["noise_sd"],
            data["seed"],
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.spec_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SyntheticBlackBox":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_spec(json.load(fh))


def make_table_blackbox(
    records: Sequence[ResponseRecord], spec: EncodingSpec
) -> TableBlackBox:
    return TableBlackBox(records, spec)


def make_synthetic_blackbox(
    n_groups: int,
    group_size: int,
    planted_orders: Sequence[int],
    noise_sd: float,
    seed: int,
) -> SyntheticBlackBox:
    return SyntheticBlackBox(n_groups, group_size, planted_orders, noise_sd, seed)


# ---------------------------------------------------------------------------
# splittable datasets for the grid harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario1Dataset:
    """One combination's dose-response matrix; split knob = n_extra."""

    matrix: np.ndarray
    spec: EncodingSpec

    @property
    def n_bits(self) -> int:
        return self.spec.total_bits

    @property
    def groups(self) -> tuple[tuple[int, ...], ...]:
        return self.spec.groups

    def split(self, knob, seed: int):
        train_cells, test_cells = split_scenario1(self.matrix, int(knob), seed)
        def realize(cells):
            X = np.stack([encode_values(self.spec, c) for c in cells])
            y = np.array([self.matrix[c] for c in cells])
            return X, y
        return (*realize(train_cells), *realize(test_cells))


@dataclass(frozen=True)
class Scenario2Dataset:
    """One cell line's records; split knob = missing pair ratio.

    Training records are symmetrized after the split so that swapped
    twins of held-out pairs never leak into training.
    """

    records: tuple[ResponseRecord, ...]
    spec: EncodingSpec

    @property
    def n_bits(self) -> int:
        return self.spec.total_bits

    @property
    def groups(self) -> tuple[tuple[int, ...], ...]:
        return self.spec.groups

    def split(self, knob, seed: int):
        train, test = split_scenario2(self.records, float(knob), seed)
        train = symmetrize(train)
        X1 = np.stack([encode(r, self.spec) for r in train])
        y1 = np.array([r.response for r in train])
        X2 = np.stack([encode(r, self.spec) for r in test])
        y2 = np.array([r.response for r in test])
        return X1, y1, X2, y2


@dataclass(frozen=True)
class SyntheticDataset:
    """Synthetic box sampled into disjoint train/test; knob = train size."""

    box: SyntheticBlackBox
    n_test: int = 100

    @property
    def n_bits(self) -> int:
        return self.box.n_bits

    @property
    def groups(self) -> tuple[tuple[int, ...], ...]:
        return self.box.groups

    def split(self, knob, seed: int):
        n_train = int(knob)
        total = self.box.feasible_count
        if n_train < 1 or n_train + self.n_test > total:
            raise ValidationError(
                f"cannot draw {n_train}+{self.n_test} distinct states "
                f"from {total}"
            )
        rng = np.random.default_rng(seed)
        picks = rng.choice(total, size=n_train + self.n_test, replace=False)
        X = np.stack([self.box.state_at(int(i)) for i in picks])
        y = np.array([self.box.query(x) for x in X])
        return X[:n_train], y[:n_train], X[n_train:], y[n_train:]
