import numpy as np
import pytest

from protoselect import (
    ConfigurationError,
    GmmConfig,
    ValidationError,
    fit_gmm,
    kmeanspp_init,
    responsibilities,
)


def three_clusters(n_per=200, sigma=0.1, seed=0):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]])
    data = np.vstack(
        [rng.normal(c, sigma, size=(n_per, 2)) for c in centers]
    )
    return data, centers


class TestKmeanspp:
    def test_m_equals_n_is_permutation(self):
        rng = np.random.default_rng(0)
        data = np.random.default_rng(1).normal(size=(6, 2))
        centroids = kmeanspp_init(data, 6, rng)
        rows = {tuple(r) for r in data}
        assert {tuple(c) for c in centroids} == rows

    def test_m_one_is_a_row(self):
        data = np.random.default_rng(2).normal(size=(5, 3))
        centroid = kmeanspp_init(data, 1, np.random.default_rng(0))
        assert any(np.array_equal(centroid[0], row) for row in data)

    def test_deterministic(self):
        data = np.random.default_rng(3).normal(size=(20, 4))
        a = kmeanspp_init(data, 4, np.random.default_rng(7))
        b = kmeanspp_init(data, 4, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_m_exceeds_n(self):
        with pytest.raises(ConfigurationError):
            kmeanspp_init(np.zeros((2, 2)), 3, np.random.default_rng(0))


class TestFit:
    def test_single_component_closed_form(self):
        rng = np.random.default_rng(4)
        data = rng.normal(size=(50, 3))
        model = fit_gmm(data, GmmConfig(components=1, restarts=1, seed=0))
        assert np.allclose(model.weights, [1.0])
        assert np.allclose(model.means[0], data.mean(axis=0))
        diff = data - data.mean(axis=0)
        expected = diff.T @ diff / 50 + 1e-6 * np.eye(3)
        assert np.allclose(model.covariances[0], expected)

    def test_recovers_separated_clusters(self):
        data, centers = three_clusters()
        model = fit_gmm(data, GmmConfig(components=3, seed=1))
        # match each true center to its nearest fitted mean
        for c in centers:
            nearest = model.means[np.argmin(np.linalg.norm(model.means - c, axis=1))]
            assert np.linalg.norm(nearest - c) < 0.1

    def test_loglik_monotone(self):
        rng = np.random.default_rng(5)
        data = rng.normal(size=(100, 3))
        model = fit_gmm(data, GmmConfig(components=4, seed=2))
        for trace in model.restart_traces:
            diffs = np.diff(trace)
            floor = -1e-8 * np.abs(np.array(trace[:-1]))
            assert np.all(diffs >= floor)

    def test_weights_simplex(self):
        data, _ = three_clusters(50)
        model = fit_gmm(data, GmmConfig(components=3, seed=3))
        assert abs(model.weights.sum() - 1.0) < 1e-12
        assert np.all(model.weights > 0)

    def test_permutation_invariant_up_to_component_order(self):
        data, _ = three_clusters(60, seed=6)
        perm = np.random.default_rng(9).permutation(len(data))
        a = fit_gmm(data, GmmConfig(components=3, seed=4))
        b = fit_gmm(data[perm], GmmConfig(components=3, seed=4))

        def canonical(model):
            order = np.lexsort(model.means.T)
            return model.weights[order], model.means[order]

        wa, ma = canonical(a)
        wb, mb = canonical(b)
        assert np.allclose(wa, wb, atol=1e-6)
        assert np.allclose(ma, mb, atol=1e-4)

    def test_n_equals_m_terminates(self):
        # duplicated rows force degenerate components; rescue must still finish
        data = np.array([[0.0, 0.0], [0.0, 0.0], [10.0, 10.0]])
        model = fit_gmm(data, GmmConfig(components=3, restarts=2, seed=5))
        assert np.all(np.isfinite(model.means))
        assert np.all(model.weights > 0)

    def test_m_exceeds_n(self):
        with pytest.raises(ConfigurationError):
            fit_gmm(np.zeros((2, 2)), GmmConfig(components=3))

    def test_nonfinite_data(self):
        with pytest.raises(ValidationError):
            fit_gmm(np.array([[np.nan, 0.0]]), GmmConfig(components=1))

    def test_diagonal_default_high_dim(self):
        rng = np.random.default_rng(7)
        model = fit_gmm(rng.normal(size=(30, 80)), GmmConfig(components=2, restarts=1, seed=0))
        assert model.covariance_type == "diagonal"
        assert model.covariances.shape == (2, 80)


class TestResponsibilities:
    def test_single_component(self):
        data = np.random.default_rng(8).normal(size=(20, 2))
        model = fit_gmm(data, GmmConfig(components=1, restarts=1, seed=0))
        assert np.allclose(responsibilities(model, data[0]), [1.0])

    def test_at_mean_of_separated_component(self):
        data, _ = three_clusters()
        model = fit_gmm(data, GmmConfig(components=3, seed=1))
        gamma = responsibilities(model, model.means[0])
        assert gamma[0] > 0.99

    def test_sums_to_one(self):
        data, _ = three_clusters(50, seed=10)
        model = fit_gmm(data, GmmConfig(components=3, seed=1))
        for x in data[:10]:
            gamma = responsibilities(model, x)
            assert abs(gamma.sum() - 1.0) < 1e-12
            assert np.all(gamma >= 0)

    def test_symmetric_two_component(self):
        from protoselect.gmm import GmmModel

        model = GmmModel(
            weights=np.array([0.5, 0.5]),
            means=np.array([[-3.0, 0.0], [3.0, 0.0]]),
            covariances=np.stack([np.eye(2), np.eye(2)]),
            covariance_type="full",
            final_log_likelihood=0.0,
            iterations_run=0,
            converged=True,
        )
        gamma = responsibilities(model, np.zeros(2))
        assert np.allclose(gamma, [0.5, 0.5], atol=1e-9)

    def test_dim_mismatch(self):
        data = np.random.default_rng(12).normal(size=(10, 2))
        model = fit_gmm(data, GmmConfig(components=1, restarts=1))
        with pytest.raises(ValidationError):
            responsibilities(model, np.zeros(3))
