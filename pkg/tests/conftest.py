"""Shared fixtures. The 10k-vector index is expensive to build, so it is
constructed once per session and reused by the unit and acceptance suites."""

import time

import numpy as np
import pytest

from theoremsearch.hnsw import HnswIndex, HnswParams


def unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    rows = rng.standard_normal((n, dim)).astype(np.float32)
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return rows


@pytest.fixture(scope="session")
def ann_bundle():
    """10,000 unit vectors (dim 64, data seed 7), 100 queries, built index.

    The build wall time is recorded so the time budget can be asserted
    without building twice.
    """
    rng = np.random.default_rng(7)
    n, dim = 10_000, 64
    vectors = unit_rows(rng, n, dim)
    queries = unit_rows(rng, 100, dim)
    ids = [f"t{i:05d}" for i in range(n)]
    start = time.perf_counter()
    index = HnswIndex(dim=dim, params=HnswParams(seed=42))
    for id, vec in zip(ids, vectors):
        index.insert(id, vec)
    build_seconds = time.perf_counter() - start
    return {
        "ids": ids,
        "vectors": vectors,
        "queries": queries,
        "index": index,
        "build_seconds": build_seconds,
        "dim": dim,
    }
