import numpy as np
import pytest

from fmqubo.fm import (
    FmModel,
    TrainConfig,
    fm_gradient,
    fm_init,
    fm_objective,
    fm_predict,
    fm_predict_batch,
    fm_to_qubo,
    fm_train,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
)
from fmqubo.errors import DimensionMismatchError, ValidationError
from fmqubo.seeding import rng_from

from conftest import all_bitstrings, naive_fm_predict


def planted_model(rng, n=8, k=2):
    return FmModel(
        w0=float(rng.normal()),
        w=rng.normal(size=n),
        V=rng.normal(size=(n, k)),
    )


class TestPredict:
    def test_all_zero_input_gives_bias(self, rng):
        m = planted_model(rng)
        assert fm_predict(m, np.zeros(8)) == pytest.approx(m.w0)

    def test_hand_evaluated(self):
        m = FmModel(0.0, np.array([1.0, 1.0]), np.array([[2.0], [3.0]]))
        assert fm_predict(m, [1, 1]) == pytest.approx(8.0)

    def test_fast_equals_naive(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 65))
            k = int(rng.integers(1, 9))
            m = planted_model(rng, n, k)
            x = (rng.random(n) < 0.5).astype(float)
            assert fm_predict(m, x) == pytest.approx(
                naive_fm_predict(m.w0, m.w, m.V, x), abs=1e-9
            )

    def test_batch_matches_scalar(self, rng):
        m = planted_model(rng, 6, 3)
        X = all_bitstrings(6).astype(float)
        batch = fm_predict_batch(m, X)
        for i, x in enumerate(X):
            assert batch[i] == pytest.approx(fm_predict(m, x), abs=1e-12)

    def test_dimension_error(self, rng):
        m = planted_model(rng, 4, 2)
        with pytest.raises(DimensionMismatchError):
            fm_predict(m, [1, 0, 1])


class TestGradient:
    def test_zero_residual_batch(self, rng):
        m = planted_model(rng, 5, 2)
        X = all_bitstrings(5)[:8].astype(float)
        y = fm_predict_batch(m, X)
        g_w0, g_w, g_V = fm_gradient(m, X, y, beta1=0.0, beta2=0.0)
        assert abs(g_w0) < 1e-12
        assert np.max(np.abs(g_w)) < 1e-12
        assert np.max(np.abs(g_V)) < 1e-12

    def test_bias_gradient_sign(self, rng):
        m = planted_model(rng, 3, 2)
        x = np.array([[1.0, 0.0, 1.0]])
        y = np.array([5.0])
        pred = fm_predict(m, x[0])
        g_w0, _, _ = fm_gradient(m, x, y, beta1=0.0, beta2=0.0)
        assert g_w0 == pytest.approx(2.0 * (pred - 5.0), rel=1e-9)

    def test_finite_differences(self, rng):
        h = 1e-5
        for trial in range(10):
            n = int(rng.integers(2, 8))
            k = int(rng.integers(1, 4))
            m = planted_model(rng, n, k)
            X = (rng.random((6, n)) < 0.5).astype(float)
            y = rng.normal(size=6)
            beta1 = float(rng.uniform(0, 0.1))
            beta2 = float(rng.uniform(0, 0.1))
            g_w0, g_w, g_V = fm_gradient(m, X, y, beta1=beta1, beta2=beta2)

            def obj(model):
                return fm_objective(model, X, y, beta1=beta1, beta2=beta2)

            w0p = FmModel(m.w0 + h, m.w, m.V)
            w0m = FmModel(m.w0 - h, m.w, m.V)
            fd = (obj(w0p) - obj(w0m)) / (2 * h)
            assert g_w0 == pytest.approx(fd, rel=1e-4, abs=1e-8)

            for i in range(n):
                wp, wm = m.w.copy(), m.w.copy()
                wp[i] += h
                wm[i] -= h
                fd = (obj(FmModel(m.w0, wp, m.V)) - obj(FmModel(m.w0, wm, m.V))) / (2 * h)
                assert g_w[i] == pytest.approx(fd, rel=1e-4, abs=1e-8)

            for i in range(n):
                for f in range(k):
                    Vp, Vm = m.V.copy(), m.V.copy()
                    Vp[i, f] += h
                    Vm[i, f] -= h
                    fd = (obj(FmModel(m.w0, m.w, Vp)) - obj(FmModel(m.w0, m.w, Vm))) / (2 * h)
                    assert g_V[i, f] == pytest.approx(fd, rel=1e-4, abs=1e-8)


class TestTrain:
    def test_bias_only_fit(self):
        X = np.zeros((1, 3))
        y = np.array([2.5])
        cfg = TrainConfig(rank=2, learning_rate=0.1, epochs=300)
        result = fm_train(X, y, cfg, rng=0)
        assert result.model.w0 == pytest.approx(2.5, abs=1e-3)

    def test_planted_recovery(self, rng):
        planted = planted_model(rng, 8, 2)
        X = (rng.random((200, 8)) < 0.5).astype(float)
        y = fm_predict_batch(planted, X)
        cfg = TrainConfig(
            rank=4, learning_rate=0.02, epochs=800, batch_size=32,
            tolerance=1e-10, patience=40,
        )
        result = fm_train(X, y, cfg, rng=1)
        pred = fm_predict_batch(result.model, X)
        assert float(np.mean((pred - y) ** 2)) < 1e-2

    def test_l1_dominance_shrinks_weights(self, rng):
        X = (rng.random((50, 4)) < 0.5).astype(float)
        y = rng.normal(size=50)
        cfg = TrainConfig(rank=2, learning_rate=0.01, epochs=200, beta1=1e3)
        result = fm_train(X, y, cfg, rng=0)
        assert np.max(np.abs(result.model.w)) < 1e-3

    def test_empty_data_rejected(self):
        with pytest.raises(ValidationError):
            fm_train(np.zeros((0, 3)), np.zeros(0), TrainConfig(rank=2), rng=0)

    def test_deterministic(self, rng):
        X = (rng.random((40, 5)) < 0.5).astype(float)
        y = rng.normal(size=40)
        cfg = TrainConfig(rank=3, epochs=50)
        a = fm_train(X, y, cfg, rng=7)
        b = fm_train(X, y, cfg, rng=7)
        assert a.model.w0 == b.model.w0
        assert np.array_equal(a.model.w, b.model.w)
        assert np.array_equal(a.model.V, b.model.V)
        assert a.loss == b.loss

    def test_loss_never_worse_than_initial(self, rng):
        X = (rng.random((40, 5)) < 0.5).astype(float)
        y = rng.normal(size=40)
        cfg = TrainConfig(rank=3, epochs=30, learning_rate=0.05)
        initial = fm_init(5, cfg, rng_from(3, "init"))
        initial_loss = fm_objective(initial, X, y, cfg.beta1, cfg.beta2)
        result = fm_train(X, y, cfg, rng=3)
        assert result.loss <= initial_loss + 1e-12

    def test_l1_monotonicity(self, rng):
        X = (rng.random((60, 5)) < 0.5).astype(float)
        planted = planted_model(rng, 5, 2)
        y = fm_predict_batch(planted, X)
        norms = []
        for beta1 in (0.0, 0.05, 0.5):
            cfg = TrainConfig(rank=3, epochs=300, learning_rate=0.01, beta1=beta1)
            result = fm_train(X, y, cfg, rng=11)
            norms.append(float(np.abs(result.model.w).sum()))
        assert norms[1] <= norms[0] + 1e-6
        assert norms[2] <= norms[1] + 1e-6

    def test_warm_start_continues_from_model(self, rng):
        X = (rng.random((30, 4)) < 0.5).astype(float)
        y = rng.normal(size=30)
        cfg = TrainConfig(rank=2, epochs=20)
        first = fm_train(X, y, cfg, rng=0)
        second = fm_train(X, y, cfg, rng=0, model=first.model)
        assert second.loss <= first.loss + 1e-12


class TestQuboExtraction:
    def test_zero_model(self):
        m = FmModel(1.5, np.zeros(3), np.zeros((3, 2)))
        q = fm_to_qubo(m)
        assert q.constant == 1.5
        assert q.linear == {} and q.quadratic == {}

    def test_hand_evaluated_coefficients(self):
        m = FmModel(0.0, np.array([1.0, 1.0]), np.array([[2.0], [3.0]]))
        q = fm_to_qubo(m)
        assert q.quadratic[(0, 1)] == pytest.approx(6.0)
        assert q.linear[0] == pytest.approx(1.0)
        assert q.linear[1] == pytest.approx(1.0)

    def test_exhaustive_equality(self, rng):
        for n in (4, 8, 12):
            m = planted_model(rng, n, 3)
            q = fm_to_qubo(m)
            X = all_bitstrings(n).astype(float)
            pred = fm_predict_batch(m, X)
            energies = q.energies(X)
            assert np.max(np.abs(pred - energies)) < 1e-9


class TestSerialization:
    def test_roundtrip(self, rng, tmp_path):
        m = planted_model(rng, 6, 3)
        path = tmp_path / "model.json"
        save_model(m, path)
        back = load_model(path)
        assert isinstance(back, FmModel)
        assert back.w0 == m.w0
        assert np.array_equal(back.w, m.w)
        assert np.array_equal(back.V, m.V)

    def test_dict_has_format_tag(self, rng):
        d = model_to_dict(planted_model(rng, 4, 2))
        assert d["format"] == "fm-v1"

    def test_unknown_tag_rejected(self):
        with pytest.raises(ValidationError):
            model_from_dict({"format": "mystery-v9"})
