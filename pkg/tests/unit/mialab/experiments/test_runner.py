"""
Unit Tests for the Repetition Runner's Process Pool Handling.
"""

from concurrent.futures import ThreadPoolExecutor

import pytest

from modules.mialab.core.config_schema import FeaturesSchema
from modules.mialab.experiments import runner

NO_ARTIFACTS = FeaturesSchema(**{name: False for name in FeaturesSchema.model_fields})


@pytest.fixture
def thread_pool(monkeypatch):
    """Swap the process pool for threads and count shutdowns."""
    pool = ThreadPoolExecutor(max_workers=2)
    shutdowns = []
    monkeypatch.setattr(runner, "get_cpu_pool", lambda workers: pool)
    monkeypatch.setattr(runner, "shutdown_pools", lambda: shutdowns.append(pool.shutdown(wait=True)))
    return shutdowns


class TestParallelRepetitions:
    """The shared pool is shut down when the parallel branch ends."""

    def test_failed_repetition_still_shuts_the_pool_down(self, thread_pool, monkeypatch, tiny_config_factory, tmp_path):
        def fail(config, out_dir, features):
            raise RuntimeError("repetition failed")

        monkeypatch.setattr(runner, "_run_in_process", fail)

        with pytest.raises(RuntimeError, match="repetition failed"):
            runner.run_repetitions(tiny_config_factory(), 2, tmp_path, NO_ARTIFACTS, workers=2)

        assert len(thread_pool) == 1
