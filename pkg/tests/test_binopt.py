import numpy as np
import pytest

from fmqubo.binopt import (
    HuboModel,
    IsingModel,
    QuboModel,
    add_one_hot_penalty,
    decode_integer,
    default_penalty_weight,
    encode_integer,
    gadget_penalty_value,
    hubo_to_text,
    ising_to_qubo,
    parse_hubo_text,
    parse_qubo_text,
    qubo_to_ising,
    qubo_to_text,
)
from fmqubo.errors import (
    DimensionMismatchError,
    EncodingRangeError,
    ParseError,
    ValidationError,
)

from conftest import all_bitstrings, random_qubo


class TestQuboEnergy:
    def test_zero_model(self):
        q = QuboModel(3)
        assert q.energy([0, 1, 1]) == 0.0

    def test_hand_evaluated(self):
        q = QuboModel(2, {(0, 1): 2.0}, {0: 1.0})
        assert q.energy([1, 1]) == 3.0
        assert q.energy([1, 0]) == 1.0

    def test_length_mismatch(self):
        q = QuboModel(2, {(0, 1): 2.0})
        with pytest.raises(DimensionMismatchError):
            q.energy([1, 0, 0])

    def test_batch_energies_match_scalar(self, rng):
        q = random_qubo(rng, 7)
        X = all_bitstrings(7)
        batch = q.energies(X)
        scalar = np.array([q.energy(x) for x in X])
        assert np.allclose(batch, scalar, atol=1e-12)

    def test_duplicate_keys_accumulate(self):
        q = QuboModel(2, {(0, 1): 1.0, (1, 0): 2.0}, {0: 1.0})
        assert q.quadratic[(0, 1)] == 3.0

    def test_zero_coefficients_dropped(self):
        q = QuboModel(2, {(0, 1): 0.0}, {0: 0.0, 1: 2.0})
        assert (0, 1) not in q.quadratic
        assert 0 not in q.linear

    def test_out_of_range_index(self):
        with pytest.raises(ValidationError):
            QuboModel(2, {(0, 5): 1.0})

    def test_non_binary_input_rejected(self):
        q = QuboModel(2, {(0, 1): 1.0})
        with pytest.raises(ValidationError):
            q.energy([0, 2])


class TestHuboEnergy:
    def test_triple_term(self):
        h = HuboModel(3, {(0, 1, 2): -1.0})
        assert h.energy([1, 1, 1]) == -1.0
        assert h.energy([1, 1, 0]) == 0.0

    def test_empty_model(self):
        h = HuboModel(3)
        assert h.energy([1, 0, 1]) == 0.0

    def test_max_order(self):
        h = HuboModel(4, {(0,): 1.0, (1, 2, 3): 2.0})
        assert h.max_order == 3

    def test_unsorted_keys_canonicalized(self):
        h = HuboModel(3, {(2, 0, 1): 1.5})
        assert h.terms == {(0, 1, 2): 1.5}

    def test_duplicate_index_in_term(self):
        with pytest.raises(ValidationError):
            HuboModel(3, {(0, 0, 1): 1.0})


class TestQuboIsingConversion:
    def test_zero_qubo(self):
        ising = qubo_to_ising(QuboModel(2))
        assert ising.couplings == {} and ising.fields == {} and ising.offset == 0.0

    def test_single_linear(self):
        ising = qubo_to_ising(QuboModel(1, linear={0: 1.0}))
        assert ising.fields[0] == pytest.approx(-0.5)
        assert ising.offset == pytest.approx(0.5)

    def test_single_quadratic(self):
        ising = qubo_to_ising(QuboModel(2, {(0, 1): 4.0}))
        assert ising.couplings[(0, 1)] == pytest.approx(1.0)
        assert ising.fields[0] == pytest.approx(-1.0)
        assert ising.fields[1] == pytest.approx(-1.0)
        assert ising.offset == pytest.approx(1.0)

    def test_inverse_examples(self):
        q = ising_to_qubo(IsingModel(1, fields={0: -0.5}, offset=0.5))
        assert q.linear[0] == pytest.approx(1.0)
        assert q.constant == pytest.approx(0.0)
        q = ising_to_qubo(
            IsingModel(2, {(0, 1): 1.0}, {0: -1.0, 1: -1.0}, offset=1.0)
        )
        assert q.quadratic[(0, 1)] == pytest.approx(4.0)
        assert q.linear == {}
        assert q.constant == pytest.approx(0.0)

    def test_energy_preservation_random(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 13))
            q = random_qubo(rng, n)
            ising = qubo_to_ising(q)
            X = all_bitstrings(n)
            for x in X[rng.choice(len(X), size=min(len(X), 32), replace=False)]:
                s = 1 - 2 * x
                assert ising.energy(s) == pytest.approx(q.energy(x), abs=1e-12)

    def test_roundtrip_identity(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 13))
            q = random_qubo(rng, n)
            back = ising_to_qubo(qubo_to_ising(q))
            assert back.n_vars == q.n_vars
            assert set(back.quadratic) == set(q.quadratic)
            for k, v in q.quadratic.items():
                assert back.quadratic[k] == pytest.approx(v, abs=1e-12)
            for k, v in q.linear.items():
                assert back.linear.get(k, 0.0) == pytest.approx(v, abs=1e-12)
            assert back.constant == pytest.approx(q.constant, abs=1e-12)


class TestIsingEnergy:
    def test_zero_model(self):
        assert IsingModel(2).energy([1, -1]) == 0.0

    def test_coupling(self):
        ising = IsingModel(2, {(0, 1): 1.0})
        assert ising.energy([1, 1]) == 1.0
        assert ising.energy([1, -1]) == -1.0

    def test_field(self):
        assert IsingModel(1, fields={0: 2.0}).energy([-1]) == -2.0

    def test_non_spin_input_rejected(self):
        with pytest.raises(ValidationError):
            IsingModel(2).energy([0, 1])


class TestGadget:
    def test_exhaustive_truth_table(self):
        for x in (0, 1):
            for y in (0, 1):
                for z in (0, 1):
                    value = gadget_penalty_value(x, y, z)
                    if z == x * y:
                        assert value == 0
                    else:
                        assert value >= 1


class TestOneHotPenalty:
    def test_single_index_group(self):
        q = add_one_hot_penalty(QuboModel(1), [(0,)], 1.0)
        # (x0 - 1)^2 = 1 - x0 once x^2 = x
        assert q.constant == pytest.approx(1.0)
        assert q.linear[0] == pytest.approx(-1.0)
        assert q.quadratic == {}

    def test_feasible_zero_infeasible_at_least_weight(self):
        base = QuboModel(4)
        groups = [(0, 1), (2, 3)]
        q = add_one_hot_penalty(base, groups, 2.5)
        for x in all_bitstrings(4):
            feasible = all(sum(x[list(g)]) == 1 for g in groups)
            if feasible:
                assert q.energy(x) == pytest.approx(0.0, abs=1e-12)
            else:
                assert q.energy(x) >= 2.5 - 1e-12

    def test_pair_group_examples(self):
        q = add_one_hot_penalty(QuboModel(2), [(0, 1)], 1.0)
        assert q.energy([1, 0]) == pytest.approx(0.0)
        assert q.energy([1, 1]) == pytest.approx(1.0)

    def test_weight_must_be_positive(self):
        with pytest.raises(ValidationError):
            add_one_hot_penalty(QuboModel(2), [(0, 1)], 0.0)


class TestIntegerEncoding:
    def test_zero(self):
        assert encode_integer(0, 0, 3).tolist() == [0, 0, 0, 0]

    def test_five(self):
        bits = encode_integer(5, 0, 3)
        # bit order is 2^0 .. 2^q
        assert bits.tolist() == [1, 0, 1, 0]
        assert decode_integer(bits, 0) == 5

    def test_overflow(self):
        with pytest.raises(EncodingRangeError):
            encode_integer(16, 0, 3)

    def test_fractional_roundtrip(self):
        value = 2.75  # 2 + 1/2 + 1/4
        bits = encode_integer(value, 2, 2)
        assert decode_integer(bits, 2) == pytest.approx(value)

    def test_roundtrip_all_representable(self):
        for v in range(16):
            assert decode_integer(encode_integer(v, 0, 3), 0) == v


class TestTextFormat:
    def test_qubo_roundtrip(self, rng):
        q = random_qubo(rng, 5)
        text = qubo_to_text(q)
        back = parse_qubo_text(text)
        assert back.n_vars == q.n_vars
        assert back.quadratic == q.quadratic
        assert back.linear == q.linear
        assert back.constant == q.constant

    def test_comments_and_blanks(self):
        q = parse_qubo_text("# comment\n\n0 1 2.0\n0 1.0\nc0 0.5\n")
        assert q.quadratic == {(0, 1): 2.0}
        assert q.linear == {0: 1.0}
        assert q.constant == 0.5

    def test_parse_error_carries_line_number(self):
        with pytest.raises(ParseError) as err:
            parse_qubo_text("0 1 2.0\nnonsense tokens here\n")
        assert "line 2" in str(err.value)

    def test_hubo_roundtrip(self):
        h = HuboModel(4, {(0, 1, 2): -1.5, (3,): 2.0}, 0.25)
        back = parse_hubo_text(hubo_to_text(h))
        assert back.terms == h.terms
        assert back.constant == h.constant


class TestDefaultPenaltyWeight:
    def test_sum_of_magnitudes_plus_one(self):
        h = HuboModel(3, {(0, 1, 2): -1.5, (0,): 2.0})
        assert default_penalty_weight(h) == pytest.approx(4.5)
