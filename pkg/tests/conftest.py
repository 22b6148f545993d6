import itertools

import numpy as np
import pytest

from pathcomplete import fixtures
from pathcomplete.graph import LabeledGraph
from pathcomplete.systems import SwitchedLinearSystem


def node_names(n):
    return [chr(ord("a") + i) for i in range(n)]


def random_graph(rng, n, modes, p=0.4, ensure_pc=False):
    """Random unit-labeled graph; with ``ensure_pc`` resample until path-complete."""
    from pathcomplete.observer import is_path_complete

    names = node_names(n)
    while True:
        edges = [
            (s, d, m)
            for s in names for d in names for m in range(1, modes + 1)
            if rng.random() < p
        ]
        g = LabeledGraph(modes, names, edges)
        if not ensure_pc or is_path_complete(g):
            return g


def all_unit_graphs(n, modes):
    names = node_names(n)
    slots = [(s, d, m) for s in names for d in names for m in range(1, modes + 1)]
    for mask in itertools.product((False, True), repeat=len(slots)):
        yield LabeledGraph(modes, names, [e for e, keep in zip(slots, mask) if keep])


def words_brute_force_complete(g, max_len=None):
    """Enumerate every word up to ``max_len`` (default ``2**|S|``) and test that a path carries it.

    Reach sets are bitmasks; all ``M**L`` words of each length ``L`` are
    materialized as an array, so this is genuine enumeration, independent of
    the observer code.
    """
    names = list(g.nodes)
    n = len(names)
    idx = {v: i for i, v in enumerate(names)}
    max_len = 2 ** n if max_len is None else max_len
    step = np.zeros((2 ** n, g.modes), dtype=np.int64)
    for mask in range(2 ** n):
        for m in range(1, g.modes + 1):
            out = 0
            for e in g.edges:
                if e.label == (m,) and mask >> idx[e.src] & 1:
                    out |= 1 << idx[e.dst]
            step[mask, m - 1] = out
    level = np.array([2 ** n - 1], dtype=np.int64)  # the empty word: any start node
    for _ in range(max_len):
        level = step[level].reshape(-1)  # every extension by every mode
        if np.any(level == 0):
            return False
    return True


@pytest.fixture(scope="session")
def observer_example():
    return fixtures.load_graph("observer_example")


@pytest.fixture(scope="session")
def counterexample():
    return fixtures.load_system("counterexample_system"), fixtures.load_pieces("counterexample_pieces")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_system(rng, n, modes):
    return SwitchedLinearSystem(rng.standard_normal((modes, n, n)))
