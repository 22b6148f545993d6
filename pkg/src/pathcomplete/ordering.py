"""Sufficient criteria for ordering path-complete graphs.

``G1 <= G2`` here means: whenever ``G1`` yields a certificate, so does ``G2``.
Two criteria are implemented, both exhaustive on their own terms:

* simulation: a node map ``F: S2 -> S1`` carrying every edge of ``G2`` onto an
  edge of ``G1`` with the same label; pieces then pull back as ``W_s = V_F(s)``;
* bijection: perfect matchings of ``sigma``-edges between node subsets, which
  make sums of pieces decrease (and, over all of ``S``, a common Lyapunov
  function).

Neither criterion failing proves nothing, so no negative ordering verdict is
ever reported.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .graph import GraphError, LabeledGraph
from .lyapunov import MinMaxFunction, PieceError, Pieces, sum_function

__all__ = [
    "OrderingLimitError",
    "SimulationMap",
    "BijectionWitness",
    "SumReduction",
    "Reduction",
    "DEFAULT_NODE_LIMIT",
    "iter_simulations",
    "find_simulation",
    "transfer_by_simulation",
    "find_bijection",
    "sum_reduction",
    "sum_invariant_subsets",
    "find_isomorphism",
    "are_isomorphic",
    "compare",
    "enumerate_cocomplete_2node",
    "reduce_to_representatives",
]

DEFAULT_NODE_LIMIT = 12


class OrderingLimitError(GraphError):
    """Graph too large for the exponential searches of this module."""


def _check_pair(g1: LabeledGraph, g2: LabeledGraph, limit: int) -> None:
    if g1.modes != g2.modes:
        raise GraphError(f"alphabet mismatch: {g1.modes} vs {g2.modes} modes")
    g1.require_unit("ordering")
    g2.require_unit("ordering")
    for g in (g1, g2):
        if len(g.nodes) > limit:
            raise OrderingLimitError(f"{len(g.nodes)} nodes exceeds the search limit of {limit}")


# -- simulation -----------------------------------------------------------
@dataclass(frozen=True)
class SimulationMap:
    """``mapping[s2] = s1``: how ``G1`` simulates ``G2``."""

    mapping: Mapping[str, str]

    def __call__(self, node: str) -> str:
        return self.mapping[node]

    def is_valid(self, g1: LabeledGraph, g2: LabeledGraph) -> bool:
        if set(self.mapping) != set(g2.nodes) or not set(self.mapping.values()) <= set(g1.nodes):
            return False
        return all(g1.has_edge(self.mapping[e.src], self.mapping[e.dst], e.label) for e in g2.edges)

    def to_dict(self) -> dict:
        return {k: self.mapping[k] for k in sorted(self.mapping)}


def _mode_profile(g: LabeledGraph, node: str):
    out = {e.label[0] for e in g.edges if e.src == node}
    inn = {e.label[0] for e in g.edges if e.dst == node}
    loops = {e.label[0] for e in g.edges if e.src == node and e.dst == node}
    return out, inn, loops


def _candidate_order(node: str, pool: Iterable[str]) -> list[str]:
    # same name first, so that find_simulation(g, g) returns the identity
    pool = sorted(pool)
    return ([node] if node in pool else []) + [x for x in pool if x != node]


def iter_simulations(
    g1: LabeledGraph, g2: LabeledGraph, limit: int = DEFAULT_NODE_LIMIT
) -> Iterator[SimulationMap]:
    """All maps by which ``g1`` simulates ``g2``, in canonical order.

    Backtracking over the nodes of ``g2`` in sorted order with forward
    checking: assigning ``v -> x`` prunes the domains of the unassigned
    neighbours of ``v`` to the matching successors/predecessors of ``x``.
    """
    _check_pair(g1, g2, limit)
    order = list(g2.nodes)
    prof1 = {x: _mode_profile(g1, x) for x in g1.nodes}
    domains0 = {}
    for v in order:
        out, inn, loops = _mode_profile(g2, v)
        domains0[v] = frozenset(
            x for x in g1.nodes
            if out <= prof1[x][0] and inn <= prof1[x][1] and loops <= prof1[x][2]
        )
    out_edges = {v: [(e.dst, e.label[0]) for e in g2.sorted_edges if e.src == v] for v in order}
    in_edges = {v: [(e.src, e.label[0]) for e in g2.sorted_edges if e.dst == v] for v in order}

    def prune(v, x, domains, assigned):
        new = dict(domains)
        for w, s in out_edges[v]:
            if w not in assigned:
                new[w] = new[w] & g1.successors(x, s)
                if not new[w]:
                    return None
            elif not g1.has_edge(x, assigned[w], s):
                return None
        for w, s in in_edges[v]:
            if w not in assigned:
                new[w] = new[w] & g1.predecessors(x, s)
                if not new[w]:
                    return None
            elif not g1.has_edge(assigned[w], x, s):
                return None
        return new

    def search(i, domains, assigned):
        if i == len(order):
            yield SimulationMap(dict(assigned))
            return
        v = order[i]
        for x in _candidate_order(v, domains[v]):
            assigned[v] = x
            new = prune(v, x, domains, assigned)
            if new is not None:
                new[v] = frozenset([x])
                yield from search(i + 1, new, assigned)
            del assigned[v]

    if all(domains0.values()):
        yield from search(0, domains0, {})


def find_simulation(
    g1: LabeledGraph, g2: LabeledGraph, limit: int = DEFAULT_NODE_LIMIT
) -> SimulationMap | None:
    """A map ``F: S2 -> S1`` by which ``g1`` simulates ``g2``, or None if none exists."""
    return next(iter_simulations(g1, g2, limit), None)


def transfer_by_simulation(f: SimulationMap, pieces1: Pieces, g2: LabeledGraph | None = None) -> Pieces:
    """Pull back ``G1`` pieces along ``f``: ``W_s = V_{F(s)}``."""
    if g2 is not None:
        missing = set(g2.nodes) - set(f.mapping)
        if missing:
            raise GraphError(f"simulation map is not total; missing {sorted(missing)}")
    try:
        return Pieces({s: pieces1[t] for s, t in f.mapping.items()})
    except PieceError as exc:
        raise PieceError(f"pieces do not cover the image of the map: {exc}") from exc


# -- bijections -----------------------------------------------------------
@dataclass(frozen=True)
class BijectionWitness:
    sigma: int
    P: frozenset
    Q: frozenset
    pairs: tuple[tuple[str, str], ...]

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "P": sorted(self.P),
            "Q": sorted(self.Q),
            "pairs": [list(p) for p in self.pairs],
        }


def find_bijection(g: LabeledGraph, P: Iterable[str], Q: Iterable[str], sigma: int) -> BijectionWitness | None:
    """Perfect matching of ``sigma``-edges from ``P`` onto ``Q``, or None."""
    g.require_unit("find_bijection")
    ps, qs = sorted(set(P)), sorted(set(Q))
    unknown = (set(ps) | set(qs)) - set(g.nodes)
    if unknown:
        raise GraphError(f"nodes {sorted(unknown)} are not in the graph")
    if len(ps) != len(qs):
        return None
    if not ps:
        return BijectionWitness(sigma, frozenset(), frozenset(), ())
    col = {q: j for j, q in enumerate(qs)}
    rows, cols = [], []
    for i, p in enumerate(ps):
        for q in g.successors(p, sigma):
            if q in col:
                rows.append(i)
                cols.append(col[q])
    if not rows:
        return None
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(ps), len(qs)))
    match = maximum_bipartite_matching(adj, perm_type="column")
    if np.any(match < 0):
        return None
    pairs = tuple((ps[i], qs[int(j)]) for i, j in enumerate(match))
    return BijectionWitness(sigma, frozenset(ps), frozenset(qs), pairs)


@dataclass(frozen=True)
class SumReduction:
    holds: bool
    witnesses: dict = field(default_factory=dict)  # sigma -> BijectionWitness
    failing_mode: int | None = None

    def __bool__(self) -> bool:
        return self.holds

    def clf(self, g: LabeledGraph, pieces: Pieces) -> MinMaxFunction:
        """The sum of all pieces, a common Lyapunov function when feasible."""
        if not self.holds:
            raise GraphError("sum reduction does not hold for this graph")
        return sum_function(g, pieces)

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "failing_mode": self.failing_mode,
            "witnesses": {str(s): w.to_dict() for s, w in sorted(self.witnesses.items())},
        }


def _sum_witnesses(g: LabeledGraph, nodes) -> SumReduction:
    found = {}
    for s in range(1, g.modes + 1):
        w = find_bijection(g, nodes, nodes, s)
        if w is None:
            return SumReduction(False, found, s)
        found[s] = w
    return SumReduction(True, found)


def sum_reduction(g: LabeledGraph) -> SumReduction:
    """Whether every mode's edges contain a permutation of the node set."""
    g.require_unit("sum_reduction")
    return _sum_witnesses(g, g.nodes)


def sum_invariant_subsets(g: LabeledGraph, limit: int = DEFAULT_NODE_LIMIT) -> list[frozenset]:
    """Nonempty ``P`` with a ``sigma``-matching ``P -> P`` for every mode.

    For a feasible assignment the sum of pieces over such a ``P`` is a common
    Lyapunov function, so the graph is then equivalent to the one-node graph.
    Listed by size, then lexicographically.
    """
    g.require_unit("sum_invariant_subsets")
    if len(g.nodes) > limit:
        raise OrderingLimitError(f"{len(g.nodes)} nodes exceeds the search limit of {limit}")
    return [
        frozenset(c)
        for r in range(1, len(g.nodes) + 1)
        for c in itertools.combinations(g.nodes, r)
        if _sum_witnesses(g, c).holds
    ]


# -- isomorphism ----------------------------------------------------------
def find_isomorphism(g1: LabeledGraph, g2: LabeledGraph, limit: int = DEFAULT_NODE_LIMIT) -> dict | None:
    """Label-preserving node bijection ``phi: S1 -> S2`` with ``phi(E1) = E2``."""
    _check_pair(g1, g2, limit)
    if len(g1.nodes) != len(g2.nodes) or len(g1.edges) != len(g2.edges):
        return None

    def signature(g, v):
        out = sorted((e.label[0], e.dst == v) for e in g.edges if e.src == v)
        inn = sorted(e.label[0] for e in g.edges if e.dst == v)
        return tuple(out), tuple(inn)

    sig2 = {v: signature(g2, v) for v in g2.nodes}
    cands = {v: [w for w in g2.nodes if sig2[w] == signature(g1, v)] for v in g1.nodes}
    order = sorted(g1.nodes, key=lambda v: (len(cands[v]), v))

    def consistent(phi):
        return all(
            g2.has_edge(phi[e.src], phi[e.dst], e.label)
            for e in g1.edges
            if e.src in phi and e.dst in phi
        )

    def search(i, phi, used):
        if i == len(order):
            return dict(phi)
        v = order[i]
        for w in cands[v]:
            if w in used:
                continue
            phi[v] = w
            if consistent(phi):
                found = search(i + 1, phi, used | {w})
                if found is not None:
                    return found
            del phi[v]
        return None

    return search(0, {}, frozenset())


def are_isomorphic(g1: LabeledGraph, g2: LabeledGraph) -> bool:
    return find_isomorphism(g1, g2) is not None


def compare(g1: LabeledGraph, g2: LabeledGraph, limit: int = DEFAULT_NODE_LIMIT) -> dict:
    """Whether ``g1`` simulates ``g2`` (with the map), and whether they are isomorphic."""
    f = find_simulation(g1, g2, limit)
    iso = find_isomorphism(g1, g2, limit)
    return {
        "simulates": f is not None,
        "map": None if f is None else f.to_dict(),
        "isomorphic": iso is not None,
        "isomorphism": iso,
    }


# -- two-node co-complete graphs ------------------------------------------
def enumerate_cocomplete_2node(nodes: tuple[str, str] = ("a", "b")) -> list[LabeledGraph]:
    """All 16 graphs on two nodes, two modes, with exactly one inbound edge per (node, mode)."""
    slots = [(d, s) for d in nodes for s in (1, 2)]
    return [
        LabeledGraph(2, nodes, [(src, d, s) for (d, s), src in zip(slots, choice)])
        for choice in itertools.product(nodes, repeat=len(slots))
    ]


@dataclass(frozen=True)
class Reduction:
    graph: LabeledGraph
    representative: str | None
    reason: str | None  # "isomorphic", "sum", "invariant-subset-sum", "mutual-simulation"
    witness: object = None

    def to_dict(self) -> dict:
        w = self.witness
        if isinstance(w, (SumReduction, SimulationMap)):
            w = w.to_dict()
        elif isinstance(w, tuple):
            w = [x.to_dict() for x in w]
        elif isinstance(w, frozenset):
            w = sorted(w)
        return {"graph": self.graph.to_dict(), "representative": self.representative, "reason": self.reason, "witness": w}


def reduce_to_representatives(
    graphs: Iterable[LabeledGraph], representatives: Mapping[str, LabeledGraph], cqlf: str
) -> list[Reduction]:
    """Match each graph to an equivalent representative.

    Tried in order: isomorphism; a whole-graph sum reduction or an invariant
    subset sum (both equivalent to the one-node graph ``representatives[cqlf]``);
    simulation in both directions.  Unmatched graphs get ``representative=None``.
    """
    out = []
    names = sorted(representatives)
    for g in graphs:
        red = None
        for name in names:
            r = representatives[name]
            if len(r.nodes) == len(g.nodes):
                iso = find_isomorphism(g, r)
                if iso is not None:
                    red = Reduction(g, name, "isomorphic", SimulationMap(iso))
                    break
        if red is None:
            sr = sum_reduction(g)
            if sr:
                red = Reduction(g, cqlf, "sum", sr)
        if red is None:
            subsets = sum_invariant_subsets(g)
            if subsets:
                red = Reduction(g, cqlf, "invariant-subset-sum", subsets[0])
        if red is None:
            for name in names:
                r = representatives[name]
                f, h = find_simulation(g, r), find_simulation(r, g)
                if f is not None and h is not None:
                    red = Reduction(g, name, "mutual-simulation", (f, h))
                    break
        out.append(red or Reduction(g, None, None))
    return out
