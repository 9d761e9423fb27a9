"""
Integration Tests on the Default Desk Profile.

Five paired seeds per condition with every artifact off. Each condition
takes a few minutes; together they pin the directional results of the lab:
DL-MIA is strong on the matched setting, gains over the biased baseline when
shadow and target differ, the ablation ladder is ordered, and popularity
randomization weakens both attacks.
"""

import pytest

from modules.mialab.core.config import load_experiment_config
from modules.mialab.core.config_schema import FeaturesSchema
from modules.mialab.experiments.runner import run_repetitions
from modules.mialab.schemas.report import RepetitionReport

pytestmark = [pytest.mark.integration, pytest.mark.slow]

NO_ARTIFACTS = FeaturesSchema(**{name: False for name in FeaturesSchema.model_fields})


def _repeat(tmp_path_factory, name: str, **overrides) -> RepetitionReport:
    config = load_experiment_config(overrides={key.replace("__", "."): value for key, value in overrides.items()})
    return run_repetitions(config, 5, tmp_path_factory.mktemp(name), NO_ARTIFACTS)


@pytest.fixture(scope="module")
def matched(tmp_path_factory):
    return _repeat(tmp_path_factory, "matched")


@pytest.fixture(scope="module")
def defended(tmp_path_factory):
    return _repeat(tmp_path_factory, "defended", defense__enabled=True)


@pytest.fixture(scope="module")
def mismatched(tmp_path_factory):
    return _repeat(tmp_path_factory, "mismatched", setting="SITL")


class TestMatchedSetting:
    """SLSL: shadow and target are LFM on the same synthetic dataset."""

    def test_dlmia_is_strong_and_not_below_biased(self, matched):
        assert matched.setting == "SLSL"
        assert len(matched.seeds) == 5
        assert matched.dlmia.mean >= 0.85
        assert matched.dlmia.mean >= matched.biased.mean

    def test_ablation_ladder(self, matched):
        assert matched.biased.mean <= matched.pretrain.mean <= matched.dlmia.mean


class TestMismatchedSetting:
    """SITL: ItemBase shadow, LFM target on the alternate synthetic dataset."""

    def test_dlmia_gains_over_biased(self, mismatched):
        assert mismatched.setting == "SITL"
        assert mismatched.dlmia.mean - mismatched.biased.mean > 0.05


class TestDefense:
    """Popularity randomization against the undefended matched runs."""

    def test_lowers_both_attacks(self, matched, defended):
        assert defended.defense and not matched.defense
        assert defended.seeds == matched.seeds
        assert defended.dlmia.mean < matched.dlmia.mean
        assert defended.biased.mean < matched.biased.mean
