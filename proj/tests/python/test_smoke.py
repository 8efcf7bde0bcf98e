import math

import numpy as np
import pytest

import tagm


@pytest.fixture(scope="module")
def dataset():
    return tagm.generate(n=300, k=2, d=3, mean="uniform", max_degree=2, seed=11)


def test_version_is_exposed():
    assert isinstance(tagm.__version__, str) and tagm.__version__


def test_generate_shapes(dataset):
    assert dataset.x.shape == (300, 3)
    assert len(dataset.labels) == 300
    assert dataset.weights.shape == (300, 2)
    assert len(dataset.truth.means) == 2
    assert dataset.truth.precisions[0].shape == (3, 3)


def test_generate_is_deterministic(dataset):
    again = tagm.generate(n=300, k=2, d=3, mean="uniform", max_degree=2, seed=11)
    assert np.array_equal(dataset.x, again.x)
    assert dataset.labels == again.labels


def test_fit_recovers_clusters(dataset):
    fit = tagm.fit(dataset.x, k=2, lam=5.0, n_init=2, seed=3)
    assert fit.params.n_states == 2
    assert len(fit.trace) >= 1
    assert all(b - a >= -1e-8 for a, b in zip(fit.trace, fit.trace[1:]))
    assert tagm.v_measure(dataset.labels, fit.labels) > 0.8
    assert math.isfinite(fit.bic)
    assert fit.n_free_params == tagm.count_free_params(fit.params)


def test_forward_backward_posteriors(dataset):
    fit = tagm.fit(dataset.x, k=2, lam=5.0, seed=3)
    e = tagm.forward_backward(fit.params, dataset.x)
    assert e.gamma.shape == (300, 2)
    assert np.allclose(e.gamma.sum(axis=1), 1.0)
    pred = tagm.predict_next(fit.params, e)
    assert pred.shape == (3,)


def test_glasso_zero_penalty_inverts():
    s = np.array([[2.0, 0.4], [0.4, 1.0]])
    theta = tagm.solve_glasso(s, lam=0.0)
    assert np.abs(theta - np.linalg.inv(s)).max() < 1e-5


def test_metrics_hand_values():
    assert tagm.v_measure([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert tagm.mcc({(0, 1)}, {(0, 1), (0, 2)}, 3) == 0.5
    assert tagm.mae(np.zeros((1, 2)), np.array([[1.0, 3.0]])) == 2.0


def test_select_k_prefers_truth(dataset):
    sel = tagm.select_k(dataset.x, [1, 2, 3], lam=5.0, seed=3)
    assert sel.best_k == 2
    assert {c.k for c in sel.candidates} == {1, 2, 3}
    assert all(c.ok for c in sel.candidates)


def test_model_round_trip(tmp_path, dataset):
    fit = tagm.fit(dataset.x, k=2, lam=5.0, seed=3)
    path = str(tmp_path / "model.json")
    tagm.save_model(path, fit.params)
    loaded = tagm.load_model(path)
    assert np.array_equal(loaded.a, fit.params.a)
    assert np.array_equal(loaded.precisions[1], fit.params.precisions[1])


def test_incremental_updates(dataset):
    st = tagm.inc_init(dataset.x[:200], k=2, lam=5.0, refit_stride=10, seed=3)
    records = [st.update(dataset.x[t]) for t in range(200, 300)]
    assert [r.t for r in records] == list(range(200, 300))
    assert sum(r.refit for r in records) == 10
    assert all(abs(r.gamma.sum() - 1.0) < 1e-9 for r in records)
    assert st.params.dim == 3


def test_errors_surface_as_python_exceptions():
    with pytest.raises(ValueError):
        tagm.fit(np.zeros((5, 2)), k=0)
    with pytest.raises(IOError):
        tagm.load_model("/nonexistent/model.json")
