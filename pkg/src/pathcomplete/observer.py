"""Observer (subset) construction and the path-completeness decision.

Observer nodes are nonempty frozensets of base-graph nodes.  Reading mode
``s`` from node ``P`` leads to the union of the ``s``-successors of ``P``;
empty targets are never materialized, so a graph is path-complete exactly
when every observer node has an outgoing edge for every mode.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .graph import GraphError, LabeledGraph, expand, strong_components, transpose

__all__ = [
    "ObserverGraph",
    "CoreComponent",
    "PathCompleteness",
    "NotPathCompleteError",
    "CoreUniquenessError",
    "subset_name",
    "subset_key",
    "build_observer",
    "path_completeness",
    "is_path_complete",
    "extract_core",
    "dual_core",
]

Subset = frozenset


class NotPathCompleteError(GraphError):
    """The base graph is not path-complete."""


class CoreUniquenessError(RuntimeError):
    """More than one (or no) complete terminal component was found.

    Path-complete graphs always have exactly one, so this signals a bug.
    """


def subset_key(p: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(p))


def subset_name(p: Iterable[str]) -> str:
    return "+".join(subset_key(p))


def _sorted_subsets(subsets: Iterable[Subset]) -> list[Subset]:
    return sorted(subsets, key=lambda p: (len(p), subset_key(p)))


@dataclass(frozen=True)
class ObserverGraph:
    base: LabeledGraph
    root: Subset
    nodes: tuple[Subset, ...]
    transitions: dict = field(repr=False)  # (P, mode) -> Q

    @property
    def modes(self) -> int:
        return self.base.modes

    @property
    def edges(self) -> list[tuple[Subset, Subset, int]]:
        return [(p, q, s) for (p, s), q in self._sorted_items()]

    def _sorted_items(self):
        return sorted(self.transitions.items(), key=lambda kv: (subset_key(kv[0][0]), kv[0][1]))

    def step(self, p: Subset, mode: int) -> Subset | None:
        return self.transitions.get((p, mode))

    def read(self, word: Iterable[int], start: Subset | None = None) -> Subset:
        """Observer node reached from ``start`` (default: root) reading ``word``.

        Returns the empty set if some transition is missing.
        """
        p = self.root if start is None else start
        for s in word:
            p = self.transitions.get((p, s))
            if p is None:
                return frozenset()
        return p

    def is_complete(self) -> bool:
        return all((p, s) in self.transitions for p in self.nodes for s in range(1, self.modes + 1))

    def to_labeled_graph(self) -> LabeledGraph:
        return LabeledGraph(
            self.modes,
            [subset_name(p) for p in self.nodes],
            [(subset_name(p), subset_name(q), s) for p, q, s in self.edges],
        )


@dataclass(frozen=True)
class CoreComponent:
    """Strongly connected complete component of an observer.

    For the dual construction the edges are stored re-transposed, so the
    component is co-complete and co-deterministic instead.
    """

    nodes: tuple[Subset, ...]
    edges: tuple[tuple[Subset, Subset, int], ...]
    modes: int
    dual: bool = False

    @property
    def subsets(self) -> list[Subset]:
        return list(self.nodes)

    def to_labeled_graph(self) -> LabeledGraph:
        return LabeledGraph(
            self.modes,
            [subset_name(p) for p in self.nodes],
            [(subset_name(p), subset_name(q), s) for p, q, s in self.edges],
        )


def build_observer(g: LabeledGraph) -> ObserverGraph:
    g.require_unit("build_observer")
    if not g.nodes:
        raise GraphError("observer of an empty graph is undefined")
    root = frozenset(g.nodes)
    seen = {root}
    order = [root]
    transitions: dict[tuple[Subset, int], Subset] = {}
    queue = deque([root])
    while queue:
        p = queue.popleft()
        members = subset_key(p)
        for s in range(1, g.modes + 1):
            q = frozenset().union(*(g.successors(v, s) for v in members))
            if not q:
                continue
            transitions[(p, s)] = q
            if q not in seen:
                seen.add(q)
                order.append(q)
                queue.append(q)
    return ObserverGraph(g, root, tuple(_sorted_subsets(order)), transitions)


@dataclass(frozen=True)
class PathCompleteness:
    path_complete: bool
    witness: tuple[int, ...] | None = None  # shortest word carried by no path

    def __bool__(self) -> bool:
        return self.path_complete


def _shortest_words(og: ObserverGraph) -> dict[Subset, tuple[int, ...]]:
    words = {og.root: ()}
    queue = deque([og.root])
    while queue:
        p = queue.popleft()
        for s in range(1, og.modes + 1):
            q = og.transitions.get((p, s))
            if q is not None and q not in words:
                words[q] = words[p] + (s,)
                queue.append(q)
    return words


def path_completeness(g: LabeledGraph) -> PathCompleteness:
    """Decide path-completeness; when false, report a shortest uncovered word."""
    if not g.is_unit_labeled:
        g = expand(g)
    og = build_observer(g)
    words = _shortest_words(og)
    missing = [
        words[p] + (s,)
        for p in og.nodes
        for s in range(1, og.modes + 1)
        if (p, s) not in og.transitions
    ]
    if not missing:
        return PathCompleteness(True)
    return PathCompleteness(False, min(missing, key=lambda w: (len(w), w)))


def is_path_complete(g: LabeledGraph) -> bool:
    return path_completeness(g).path_complete


def _complete_terminal_components(og: ObserverGraph) -> list[frozenset]:
    comps = strong_components(list(og.nodes), [(p, q) for (p, _), q in og.transitions.items()])
    found = []
    for comp in comps:
        closed = all(
            og.transitions.get((p, s)) in comp for p in comp for s in range(1, og.modes + 1)
        )
        if closed:
            found.append(comp)
    return found


def extract_core(og: ObserverGraph) -> CoreComponent:
    """The unique strongly connected, deterministic, complete observer subgraph."""
    if not og.is_complete():
        raise NotPathCompleteError("base graph is not path-complete; no complete core exists")
    found = _complete_terminal_components(og)
    if len(found) != 1:
        raise CoreUniquenessError(f"expected one complete terminal component, found {len(found)}")
    comp = found[0]
    nodes = tuple(_sorted_subsets(comp))
    edges = tuple((p, q, s) for p, q, s in og.edges if p in comp)
    return CoreComponent(nodes, edges, og.modes)


def dual_core(g: LabeledGraph) -> CoreComponent:
    """Core of the observer of the transposed graph, with edges reversed back."""
    core = extract_core(build_observer(transpose(g)))
    edges = tuple(sorted(((q, p, s) for p, q, s in core.edges), key=lambda e: (subset_key(e[0]), e[2], subset_key(e[1]))))
    return CoreComponent(core.nodes, edges, core.modes, dual=True)
