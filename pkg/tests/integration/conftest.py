"""
Integration Test Fixtures.

Fixtures for integration tests: whole pipeline runs on the tiny synthetic
profile, written to tmp_path. These build on the root conftest.py profile.
"""

import pytest

from modules.mialab.core.config_schema import FeaturesSchema
from modules.mialab.experiments.runner import run_experiment


@pytest.fixture(scope="module")
def tiny_run(tiny_config_factory, tmp_path_factory):
    """One full run of the tiny profile with every artifact enabled."""
    features = FeaturesSchema(**{name: True for name in FeaturesSchema.model_fields})
    out_dir = tmp_path_factory.mktemp("tiny_run")
    report = run_experiment(tiny_config_factory(), out_dir, features)
    return report, out_dir, features
