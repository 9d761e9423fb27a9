"""
Concurrency Infrastructure.

Process pool for independent experiment repetitions. Training loops are
single-threaded and deterministic per seed; only whole repetitions, each
with its own seed and output directory, run in parallel.

Usage:
    from modules.mialab.core.concurrency import get_cpu_pool, shutdown_pools

    future = get_cpu_pool().submit(run_one, config, out_dir)
    ...
    shutdown_pools()
"""

from concurrent.futures import ProcessPoolExecutor

from modules.mialab.core.logging import get_logger

logger = get_logger(__name__)

_cpu_pool: ProcessPoolExecutor | None = None
_cpu_pool_workers: int = 0


def get_cpu_pool(max_workers: int | None = None) -> ProcessPoolExecutor:
    """Get the shared process pool for CPU-bound repetitions.

    Creates the pool lazily on first call. Size comes from concurrency.yaml
    unless max_workers is given; asking for a different size recreates the pool.
    """
    global _cpu_pool, _cpu_pool_workers
    if max_workers is None:
        from modules.mialab.core.config import get_app_config
        max_workers = get_app_config().concurrency.process_pool.max_workers
    if _cpu_pool is not None and _cpu_pool_workers != max_workers:
        shutdown_pools()
    if _cpu_pool is None:
        _cpu_pool = ProcessPoolExecutor(max_workers=max_workers)
        _cpu_pool_workers = max_workers
        logger.info("Process pool created", extra={"max_workers": max_workers})
    return _cpu_pool


def shutdown_pools() -> None:
    """Shut down the process pool and wait for running repetitions."""
    global _cpu_pool, _cpu_pool_workers
    if _cpu_pool is not None:
        _cpu_pool.shutdown(wait=True)
        logger.info("Process pool shut down")
        _cpu_pool = None
        _cpu_pool_workers = 0
