"""Small shared helpers: replica-level parallelism and deterministic output."""
from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor


def thread_cap(requested: int = 1) -> int:
    """Requested worker count capped by the HOPNET_THREADS environment variable."""
    cap = os.environ.get("HOPNET_THREADS")
    n = max(1, int(requested))
    if cap is not None:
        n = min(n, max(1, int(cap)))
    return n


def parallel_map(fn, items, threads: int = 1) -> list:
    """Map preserving item order; results do not depend on the worker count.

    ``fn`` and the items must be picklable when ``threads > 1``.
    """
    items = list(items)
    threads = thread_cap(threads)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (threads * 4))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def canonical_json(obj) -> str:
    """Stable JSON encoding used for content hashes and manifests."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_csv(path, header: list, rows) -> None:
    """CSV with repr-formatted floats: byte-identical across reruns."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")
