"""Labeled directed graphs over a finite mode alphabet.

A graph has nodes (strings) and edges ``(src, dst, label)`` where the label
is a nonempty word over the modes ``1..M``.  Edges form a set, so parallel
edges with identical labels collapse.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

__all__ = [
    "Edge",
    "GraphError",
    "LabeledGraph",
    "expand",
    "transpose",
    "is_deterministic",
    "is_codeterministic",
    "is_complete",
    "is_cocomplete",
    "is_strongly_connected",
    "gstar",
]


class GraphError(ValueError):
    """Raised for malformed graphs or graphs violating an operation's precondition."""


@dataclass(frozen=True, order=True)
class Edge:
    src: str
    dst: str
    label: tuple[int, ...]

    @property
    def mode(self) -> int:
        """The single mode of a unit-labeled edge."""
        if len(self.label) != 1:
            raise GraphError(f"edge {self} is not unit-labeled")
        return self.label[0]


def _as_edge(e) -> Edge:
    if isinstance(e, Edge):
        return e
    if isinstance(e, dict):
        src, dst, label = e["from"], e["to"], e["label"]
    else:
        src, dst, label = e
    if isinstance(label, (int, np.integer)):
        label = (int(label),)
    return Edge(str(src), str(dst), tuple(int(s) for s in label))


class LabeledGraph:
    """Immutable labeled graph ``G = (S, E)`` over modes ``1..modes``.

    ``edges`` accepts :class:`Edge` objects, ``(src, dst, label)`` tuples where
    ``label`` is an int or a sequence of ints, or JSON-style dicts.
    """

    def __init__(self, modes: int, nodes: Iterable, edges: Iterable = ()):
        if int(modes) < 1:
            raise GraphError("number of modes must be >= 1")
        self.modes = int(modes)
        names = [str(n) for n in nodes]
        if any(not n for n in names):
            raise GraphError("node names must be nonempty")
        if len(set(names)) != len(names):
            raise GraphError("duplicate node names")
        self.nodes: tuple[str, ...] = tuple(sorted(names))
        node_set = set(self.nodes)
        edge_set = set()
        for raw in edges:
            e = _as_edge(raw)
            if e.src not in node_set or e.dst not in node_set:
                raise GraphError(f"edge {e} has an endpoint outside the node set")
            if not e.label:
                raise GraphError(f"edge {e} has an empty label")
            if any(s < 1 or s > self.modes for s in e.label):
                raise GraphError(f"edge {e} uses a mode outside 1..{self.modes}")
            edge_set.add(e)
        self.edges: frozenset[Edge] = frozenset(edge_set)

    # -- basic queries -------------------------------------------------
    @cached_property
    def sorted_edges(self) -> tuple[Edge, ...]:
        return tuple(sorted(self.edges))

    @property
    def is_unit_labeled(self) -> bool:
        return all(len(e.label) == 1 for e in self.edges)

    def require_unit(self, what: str = "this operation") -> None:
        if not self.is_unit_labeled:
            raise GraphError(f"{what} needs a unit-labeled graph; call expand() first")

    @cached_property
    def _succ(self) -> dict[tuple[str, int], frozenset[str]]:
        out: dict[tuple[str, int], set[str]] = {}
        for e in self.edges:
            if len(e.label) == 1:
                out.setdefault((e.src, e.label[0]), set()).add(e.dst)
        return {k: frozenset(v) for k, v in out.items()}

    @cached_property
    def _pred(self) -> dict[tuple[str, int], frozenset[str]]:
        out: dict[tuple[str, int], set[str]] = {}
        for e in self.edges:
            if len(e.label) == 1:
                out.setdefault((e.dst, e.label[0]), set()).add(e.src)
        return {k: frozenset(v) for k, v in out.items()}

    def successors(self, node: str, mode: int) -> frozenset[str]:
        """Destinations of unit edges ``(node, *, mode)``."""
        return self._succ.get((node, mode), frozenset())

    def predecessors(self, node: str, mode: int) -> frozenset[str]:
        return self._pred.get((node, mode), frozenset())

    def has_edge(self, src: str, dst: str, label) -> bool:
        return _as_edge((src, dst, label)) in self.edges

    def edges_with_mode(self, mode: int) -> list[Edge]:
        return [e for e in self.sorted_edges if e.label == (mode,)]

    # -- value semantics -----------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledGraph):
            return NotImplemented
        return (self.modes, self.nodes, self.edges) == (other.modes, other.nodes, other.edges)

    def __hash__(self) -> int:
        return hash((self.modes, self.nodes, self.edges))

    def __repr__(self) -> str:
        return f"LabeledGraph(modes={self.modes}, nodes={len(self.nodes)}, edges={len(self.edges)})"

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "modes": self.modes,
            "nodes": list(self.nodes),
            "edges": [{"from": e.src, "to": e.dst, "label": list(e.label)} for e in self.sorted_edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LabeledGraph":
        try:
            return cls(data["modes"], data["nodes"], data.get("edges", []))
        except (KeyError, TypeError) as exc:
            raise GraphError(f"malformed graph document: {exc}") from exc

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "LabeledGraph":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "LabeledGraph":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")

    def to_dot(self, name: str = "G") -> str:
        lines = [f"digraph {name} {{"]
        lines += [f'  "{n}";' for n in self.nodes]
        for e in self.sorted_edges:
            label = ",".join(str(s) for s in e.label)
            lines.append(f'  "{e.src}" -> "{e.dst}" [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def gstar(modes: int, node: str = "a") -> LabeledGraph:
    """Single node with one self-loop per mode (common Lyapunov function graph)."""
    return LabeledGraph(modes, [node], [(node, node, s) for s in range(1, modes + 1)])


def expand(g: LabeledGraph) -> LabeledGraph:
    """Replace each word-labeled edge by a chain of unit-labeled edges.

    An edge ``(p, q, s1..sk)`` becomes ``p -> n2 -> ... -> nk -> q`` where the
    fresh node at position ``i`` is named ``"<p>_<q>_<s1-...-sk>_<i>"``.
    """
    nodes = set(g.nodes)
    edges: list[Edge] = []
    for e in g.sorted_edges:
        k = len(e.label)
        if k == 1:
            edges.append(e)
            continue
        word = "-".join(str(s) for s in e.label)
        chain = [e.src] + [f"{e.src}_{e.dst}_{word}_{i}" for i in range(2, k + 1)] + [e.dst]
        for fresh in chain[1:-1]:
            if fresh in g.nodes:
                raise GraphError(f"fresh node name {fresh!r} collides with an existing node")
            nodes.add(fresh)
        edges += [Edge(chain[i], chain[i + 1], (e.label[i],)) for i in range(k)]
    return LabeledGraph(g.modes, nodes, edges)


def transpose(g: LabeledGraph) -> LabeledGraph:
    g.require_unit("transpose")
    return LabeledGraph(g.modes, g.nodes, [Edge(e.dst, e.src, e.label) for e in g.edges])


def _count_per(g: LabeledGraph, by_source: bool) -> dict[tuple[str, int], int]:
    counts = {(n, s): 0 for n in g.nodes for s in range(1, g.modes + 1)}
    for e in g.edges:
        counts[(e.src if by_source else e.dst, e.mode)] += 1
    return counts


def is_deterministic(g: LabeledGraph) -> bool:
    """At most one outgoing edge per (node, mode)."""
    g.require_unit("is_deterministic")
    return all(c <= 1 for c in _count_per(g, True).values())


def is_codeterministic(g: LabeledGraph) -> bool:
    g.require_unit("is_codeterministic")
    return all(c <= 1 for c in _count_per(g, False).values())


def is_complete(g: LabeledGraph) -> bool:
    """At least one outgoing edge per (node, mode)."""
    g.require_unit("is_complete")
    return all(c >= 1 for c in _count_per(g, True).values())


def is_cocomplete(g: LabeledGraph) -> bool:
    g.require_unit("is_cocomplete")
    return all(c >= 1 for c in _count_per(g, False).values())


def strong_components(nodes: Sequence, arcs: Iterable[tuple]) -> list[frozenset]:
    """Strongly connected components of the directed graph ``(nodes, arcs)``."""
    index = {n: i for i, n in enumerate(nodes)}
    pairs = [(index[u], index[v]) for u, v in arcs]
    n = len(nodes)
    if pairs:
        rows, cols = zip(*pairs)
    else:
        rows, cols = (), ()
    adj = csr_matrix((np.ones(len(pairs)), (rows, cols)), shape=(n, n))
    k, labels = connected_components(adj, directed=True, connection="strong")
    comps: list[set] = [set() for _ in range(k)]
    for node, lab in zip(nodes, labels):
        comps[lab].add(node)
    return [frozenset(c) for c in comps]


def is_strongly_connected(g: LabeledGraph) -> bool:
    """Strong connectivity of the underlying digraph; labels ignored.

    A single node counts as strongly connected (length-0 paths).
    """
    if not g.nodes:
        return True
    return len(strong_components(g.nodes, [(e.src, e.dst) for e in g.edges])) == 1
