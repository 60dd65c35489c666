"""Sharded graph embedding training and feature-fetch benchmarks.

Options for ``train`` and ``bench_fetch`` use the same keys as the
command-line config files; values may be Python numbers, booleans, strings,
or sequences (fanouts as lists of lists).
"""

from ._core import (
    ConfigError,
    Graph,
    GshardError,
    ParseError,
    generate,
    known_keys,
    load_edge_list,
    read_csr_cache,
    read_embeddings,
    write_csr_cache,
    write_embeddings,
)
from . import _core

__all__ = [
    "ConfigError",
    "Graph",
    "GshardError",
    "ParseError",
    "bench_fetch",
    "generate",
    "known_keys",
    "load_edge_list",
    "read_csr_cache",
    "read_embeddings",
    "train",
    "write_csr_cache",
    "write_embeddings",
]


def _fanout(value):
    if isinstance(value, str):
        return value
    items = list(value)
    if items and all(isinstance(x, int) for x in items):
        items = [items]
    return ";".join("[" + ",".join(str(int(x)) for x in f) + "]" for f in items)


def _format(key, value):
    if key == "fanout":
        return _fanout(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(str(x) for x in value)
    return str(value)


def _options(kwargs):
    return {k: _format(k, v) for k, v in kwargs.items()}


def train(graph, **options):
    """Train embeddings on ``graph``.

    Returns a dict with ``metrics`` (column name to array), ``embeddings``
    (N x d array), ``accounting`` (per-endpoint byte counts), ``manifest``
    (resolved config text) and ``error`` (empty on success).
    """
    return _core.train(graph, _options(options))


def bench_fetch(graph, **options):
    """Run the feature-fetch benchmark; one summary dict per fanout and trainer count."""
    return _core.bench_fetch(graph, _options(options))
