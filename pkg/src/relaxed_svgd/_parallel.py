"""Worker-count handling and deterministic block-parallel maps."""

import os
from concurrent.futures import ThreadPoolExecutor

# Row partition is fixed; only the assignment of blocks to workers varies.
BLOCK_ROWS = 32


def worker_count():
    """Number of workers, capped by the THREADS environment variable."""
    raw = os.environ.get("THREADS")
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise ValueError(f"THREADS must be a positive integer, got {raw!r}")
    return n


def block_slices(n_rows, block=BLOCK_ROWS):
    return [slice(start, min(start + block, n_rows)) for start in range(0, n_rows, block)]


def map_blocks(fn, n_rows, block=BLOCK_ROWS):
    """Apply ``fn(slice)`` to every fixed row block and return results in block order.

    Results depend only on the partition, never on how many workers ran it.
    """
    slices = block_slices(n_rows, block)
    workers = min(worker_count(), len(slices))
    if workers <= 1:
        return [fn(s) for s in slices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, slices))
