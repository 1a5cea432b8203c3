import pytest

from rgevselect.distributions import GevParams, NsGevParams
from rgevselect.exceptions import DataValidationError
from rgevselect.harness import ExperimentConfig, load_config, run_experiment


def small_config(**kw):
    base = dict(
        population="rgev",
        params=GevParams(0.0, 1.0, 0.0),
        n=30,
        n_orders=6,
        true_r=3,
        mixing_p=0.5,
        replicates=4,
        seed=99,
        tests=("ccdf",),
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestExperimentConfig:
    def test_score_with_rgev11_rejected(self):
        with pytest.raises(DataValidationError):
            small_config(
                population="rgev11",
                params=NsGevParams(0.0, 0.1, 1.0, 0.02, 0.0),
                tests=("score",),
            )

    def test_param_type_must_match_population(self):
        with pytest.raises(DataValidationError):
            small_config(population="wakeby")

    def test_bounds_checked(self):
        with pytest.raises(DataValidationError):
            small_config(true_r=7)
        with pytest.raises(DataValidationError):
            small_config(mixing_p=1.5)
        with pytest.raises(DataValidationError):
            small_config(replicates=0)


class TestRunExperiment:
    def test_single_replicate_bookkeeping(self):
        hist = run_experiment(small_config(replicates=1))["ccdf"]
        assert hist.replicates == 1
        assert sum(hist.counts.values()) + hist.failures == 1

    def test_counts_plus_failures_equals_replicates(self):
        hists = run_experiment(small_config(replicates=6, tests=("ccdf", "spacings")))
        for hist in hists.values():
            assert sum(hist.counts.values()) + hist.failures == 6

    def test_deterministic_across_worker_counts(self):
        a = run_experiment(small_config(replicates=6, n_jobs=1))
        b = run_experiment(small_config(replicates=6, n_jobs=2))
        assert {m: h.counts for m, h in a.items()} == {m: h.counts for m, h in b.items()}
        assert {m: h.failures for m, h in a.items()} == {m: h.failures for m, h in b.items()}

    def test_same_seed_same_histogram(self):
        a = run_experiment(small_config(replicates=5))
        b = run_experiment(small_config(replicates=5))
        assert {m: h.counts for m, h in a.items()} == {m: h.counts for m, h in b.items()}


CONFIG_TEXT = """
# rGEV power experiment, desk scale
population = rgev
n = 30
R = 6
true_r = 3
mixing_p = 0.5
replicates = 4
seed = 7
mu = 0.0
sigma = 1.0
k = 0.0
tests = ccdf, spacings
alpha = 0.05
"""


class TestLoadConfig:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(CONFIG_TEXT)
        config = load_config(str(path))
        assert config.population == "rgev"
        assert config.n == 30 and config.n_orders == 6
        assert config.tests == ("ccdf", "spacings")
        assert config.params == GevParams(0.0, 1.0, 0.0)

    def test_missing_key_named(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(CONFIG_TEXT.replace("true_r = 3\n", ""))
        with pytest.raises(DataValidationError, match="true_r"):
            load_config(str(path))

    def test_missing_param_key_named(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(CONFIG_TEXT.replace("sigma = 1.0\n", ""))
        with pytest.raises(DataValidationError, match="sigma"):
            load_config(str(path))

    def test_bad_line_reported(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("population rgev\n")
        with pytest.raises(DataValidationError, match="line 1"):
            load_config(str(path))

    def test_wakeby_keys(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "population = wakeby\nn = 20\nR = 5\ntrue_r = 3\nmixing_p = 1.0\n"
            "replicates = 2\nseed = 1\nwakeby_xi = 0.0\nwakeby_alpha = 4.0\n"
            "wakeby_beta = 0.6\nwakeby_gamma = 1.0\nwakeby_delta = 0.15\n"
            "block_size = 40\n"
        )
        config = load_config(str(path))
        assert config.population == "wakeby"
        assert config.block_size == 40
