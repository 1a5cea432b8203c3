import numpy as np
import pytest
from sklearn.base import clone

from rgevselect.distributions import GevParams, rgev_loglik_blocks
from rgevselect.estimators import RGevMLE, RSelector
from rgevselect.sampling import contaminate, sample_rgev


@pytest.fixture(scope="module")
def clean_matrix():
    return sample_rgev(60, 6, GevParams(0.0, 1.0, 0.1), seed=44).values


@pytest.fixture(scope="module")
def contaminated_matrix():
    s = sample_rgev(80, 8, GevParams(0.0, 1.0, 0.0), seed=45)
    return contaminate(s, 4, 0.5).values


class TestRGevMLE:
    def test_fit_sets_state(self, clean_matrix):
        est = RGevMLE(r=4).fit(clean_matrix)
        assert est.converged_
        assert est.r_ == 4
        assert est.params_.sigma > 0
        assert est.n_features_in_ == 6

    def test_defaults_to_all_columns(self, clean_matrix):
        est = RGevMLE().fit(clean_matrix)
        assert est.r_ == clean_matrix.shape[1]

    def test_get_set_params_and_clone(self):
        est = RGevMLE(r=3, penalize=False)
        assert est.get_params() == {"r": 3, "nonstationary": False, "penalize": False}
        dup = clone(est)
        assert dup.get_params() == est.get_params()
        est.set_params(r=5)
        assert est.r == 5

    def test_score_samples_matches_kernel(self, clean_matrix):
        est = RGevMLE(r=3).fit(clean_matrix)
        got = est.score_samples(clean_matrix)
        expect = rgev_loglik_blocks(
            clean_matrix[:, :3], est.params_.mu, est.params_.sigma, est.params_.k
        )
        assert np.allclose(got, expect)
        assert est.score(clean_matrix) == pytest.approx(float(expect.mean()))

    def test_nonstationary_needs_time(self, clean_matrix):
        est = RGevMLE(r=3, nonstationary=True)
        with pytest.raises(Exception):
            est.fit(clean_matrix)
        est.fit(clean_matrix, t=np.arange(1, 61))
        assert hasattr(est.params_, "mu1")

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            RGevMLE().fit(np.zeros(5))


class TestRSelector:
    def test_selects_and_transforms(self, contaminated_matrix):
        sel = RSelector(method="ccdf").fit(contaminated_matrix)
        assert 1 <= sel.r_ <= contaminated_matrix.shape[1]
        out = sel.transform(contaminated_matrix)
        assert out.shape == (contaminated_matrix.shape[0], sel.r_)

    def test_multiple_methods(self, contaminated_matrix):
        sel = RSelector(method=("ccdf", "spacings")).fit(contaminated_matrix)
        assert set(sel.r_by_method_) == {"ccdf", "spacings"}
        assert sel.r_ == sel.r_by_method_["ccdf"]

    def test_sklearn_protocol(self):
        sel = RSelector(method="ed", alpha=0.01)
        dup = clone(sel)
        assert dup.get_params()["alpha"] == 0.01
        assert "method" in sel.get_params()

    def test_fit_transform(self, contaminated_matrix):
        sel = RSelector(method="spacings")
        out = sel.fit_transform(contaminated_matrix)
        assert out.shape[1] == sel.r_

    def test_unfitted_transform_raises(self, contaminated_matrix):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            RSelector().transform(contaminated_matrix)
