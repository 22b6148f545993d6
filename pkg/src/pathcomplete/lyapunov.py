"""Quadratic pieces, numerical feasibility checks and induced Lyapunov functions.

A piece is ``V_s(x) = x^T Q_s x`` with ``Q_s`` symmetric positive definite.
The induced common Lyapunov functions combine pieces over node subsets:

* ``min-max``: ``min_P max_{s in P} V_s`` over the observer core,
* ``max-min``: ``max_P min_{s in P} V_s`` over the dual core,
* ``sum``: ``sum_s V_s`` for graphs admitting per-mode perfect matchings.
"""
from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Literal

import numpy as np
from scipy.stats import norm, qmc

from .graph import Edge, LabeledGraph, expand
from .observer import build_observer, dual_core, extract_core, subset_key, subset_name
from .systems import SwitchedLinearSystem

__all__ = [
    "PieceError",
    "Pieces",
    "quadratic_form",
    "psd_margin_ok",
    "EdgeCheck",
    "FeasibilityReport",
    "check_feasible_numeric",
    "expand_pieces",
    "MinMaxFunction",
    "induced_clf",
    "induced_dual_clf",
    "sum_function",
    "evaluate",
    "sphere_points",
    "DecreaseReport",
    "check_decrease",
    "DerivedInequality",
    "derived_min_inequality",
    "derived_max_inequality",
]

PSD_TOL = 1e-8

Polarity = Literal["min-max", "max-min", "sum"]


class PieceError(ValueError):
    """Invalid piece data: asymmetric, indefinite, dimension mismatch, or missing piece."""


def quadratic_form(q, sym_tol: float = 1e-9, require_pd: bool = True) -> np.ndarray:
    """Validate and symmetrize a quadratic-form matrix."""
    q = np.array(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise PieceError("a quadratic form needs a square matrix")
    scale = 1.0 + np.abs(q).max()
    if np.abs(q - q.T).max() > sym_tol * scale:
        raise PieceError("quadratic form matrix is not symmetric")
    q = (q + q.T) / 2
    if require_pd and np.linalg.eigvalsh(q)[0] <= 0:
        raise PieceError("quadratic form matrix is not positive definite")
    q.setflags(write=False)
    return q


class Pieces(Mapping):
    """Mapping ``node -> Q_s`` with a common dimension."""

    def __init__(self, pieces: Mapping | Iterable, require_pd: bool = True):
        items = pieces.items() if isinstance(pieces, Mapping) else pieces
        self._q = {str(k): quadratic_form(v, require_pd=require_pd) for k, v in items}
        dims = {q.shape[0] for q in self._q.values()}
        if len(dims) > 1:
            raise PieceError(f"pieces have mixed dimensions {sorted(dims)}")
        self.dimension = dims.pop() if dims else 0

    def __getitem__(self, key: str) -> np.ndarray:
        try:
            return self._q[key]
        except KeyError:
            raise PieceError(f"no piece for node {key!r}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._q))

    def __len__(self) -> int:
        return len(self._q)

    def __repr__(self) -> str:
        return f"Pieces(dimension={self.dimension}, nodes={list(self)})"

    def covers(self, nodes: Iterable[str]) -> None:
        missing = [n for n in nodes if n not in self._q]
        if missing:
            raise PieceError(f"missing pieces for nodes {missing}")

    def values_at(self, x: np.ndarray) -> dict[str, np.ndarray]:
        """``V_s(x)`` for each node, vectorized over the rows of ``x``."""
        return {k: np.einsum("ki,ij,kj->k", x, q, x) for k, q in self._q.items()}

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "pieces": {k: self._q[k].tolist() for k in self}}

    @classmethod
    def from_dict(cls, data: dict) -> "Pieces":
        try:
            out = cls(data["pieces"])
        except (KeyError, TypeError) as exc:
            raise PieceError(f"malformed piece document: {exc}") from exc
        if "dimension" in data and out and int(data["dimension"]) != out.dimension:
            raise PieceError("declared dimension does not match the piece matrices")
        return out

    @classmethod
    def load(cls, path) -> "Pieces":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def psd_margin_ok(lam_max: float, mat: np.ndarray, tol: float = PSD_TOL, eps: float = 0.0) -> bool:
    """Scale-aware test of ``mat <= -eps I`` from its largest eigenvalue."""
    return lam_max <= -eps + tol * (1.0 + np.linalg.norm(mat, "fro"))


@dataclass(frozen=True)
class EdgeCheck:
    edge: Edge
    max_eigenvalue: float  # of A_w^T Q_dst A_w - Q_src
    holds: bool


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    edges: tuple[EdgeCheck, ...]

    def __bool__(self) -> bool:
        return self.feasible

    @property
    def failing(self) -> list[Edge]:
        return [c.edge for c in self.edges if not c.holds]

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "edges": [
                {"from": c.edge.src, "to": c.edge.dst, "label": list(c.edge.label),
                 "max_eigenvalue": c.max_eigenvalue, "holds": c.holds}
                for c in self.edges
            ],
        }


def lyapunov_residual(q_src: np.ndarray, q_dst: np.ndarray, a: np.ndarray) -> np.ndarray:
    m = a.T @ q_dst @ a - q_src
    return (m + m.T) / 2


def check_feasible_numeric(
    g: LabeledGraph,
    pieces: Pieces,
    sys: SwitchedLinearSystem,
    tol: float = PSD_TOL,
    eps: float = 0.0,
) -> FeasibilityReport:
    """Check ``A_w^T Q_q A_w - Q_p <= -eps I`` on every edge ``(p, q, w)``.

    Word labels use the composite matrix ``A_{s_k} ... A_{s_1}``.
    """
    pieces.covers(g.nodes)
    if pieces.dimension != sys.dimension:
        raise PieceError(f"piece dimension {pieces.dimension} != system dimension {sys.dimension}")
    checks = []
    for e in g.sorted_edges:
        m = lyapunov_residual(pieces[e.src], pieces[e.dst], sys.word_matrix(e.label))
        lam = float(np.linalg.eigvalsh(m)[-1])
        checks.append(EdgeCheck(e, lam, psd_margin_ok(lam, m, tol, eps)))
    return FeasibilityReport(all(c.holds for c in checks), tuple(checks))


def expand_pieces(g: LabeledGraph, pieces: Pieces, sys: SwitchedLinearSystem) -> tuple[LabeledGraph, Pieces]:
    """Pieces for ``expand(g)`` that stay feasible whenever ``pieces`` is feasible for ``g``.

    The fresh node at position ``i`` of the chain for ``(p, q, s1..sk)`` gets
    ``W(x) = V_q(f_{s_i..s_k}(x))``; these pieces may be only semidefinite.
    """
    ge = expand(g)
    out = {k: pieces[k] for k in g.nodes}
    for e in g.sorted_edges:
        k = len(e.label)
        if k == 1:
            continue
        word = "-".join(str(s) for s in e.label)
        for i in range(2, k + 1):
            a = sys.word_matrix(e.label[i - 1:])
            out[f"{e.src}_{e.dst}_{word}_{i}"] = a.T @ pieces[e.dst] @ a
    return ge, Pieces(out, require_pd=False)


@dataclass(frozen=True)
class MinMaxFunction:
    subsets: tuple[frozenset, ...]
    pieces: Pieces = field(repr=False)
    polarity: Polarity = "min-max"

    def __post_init__(self):
        if self.polarity not in ("min-max", "max-min", "sum"):
            raise ValueError(f"unknown polarity {self.polarity!r}")
        for p in self.subsets:
            if not p:
                raise PieceError("subsets must be nonempty")
            self.pieces.covers(p)

    @property
    def subset_names(self) -> list[str]:
        return [subset_name(p) for p in self.subsets]

    def describe(self) -> str:
        inner, outer = {"min-max": ("max", "min"), "max-min": ("min", "max"), "sum": ("sum", "")}[self.polarity]
        terms = [f"{inner}(" + ", ".join(f"V_{s}" for s in subset_key(p)) + ")" for p in self.subsets]
        if self.polarity == "sum":
            return " + ".join(f"V_{s}" for s in subset_key(self.subsets[0]))
        return f"{outer}{{" + ", ".join(terms) + "}"

    def __call__(self, x) -> np.ndarray | float:
        return evaluate(self, x)

    def to_dict(self) -> dict:
        return {
            "polarity": self.polarity,
            "subsets": [list(subset_key(p)) for p in self.subsets],
            "pieces": self.pieces.to_dict(),
        }


def induced_clf(g: LabeledGraph, pieces: Pieces) -> MinMaxFunction:
    """Min over observer-core subsets of the max of their pieces.

    Word-labeled graphs are expanded first; ``pieces`` must then cover the
    expanded node set (see :func:`expand_pieces`).
    """
    if not g.is_unit_labeled:
        g = expand(g)
    core = extract_core(build_observer(g))
    return MinMaxFunction(tuple(core.subsets), pieces, "min-max")


def induced_dual_clf(g: LabeledGraph, pieces: Pieces) -> MinMaxFunction:
    """Max over dual-core subsets of the min of their pieces."""
    if not g.is_unit_labeled:
        g = expand(g)
    core = dual_core(g)
    return MinMaxFunction(tuple(core.subsets), pieces, "max-min")


def sum_function(g: LabeledGraph, pieces: Pieces, subset: Iterable[str] | None = None) -> MinMaxFunction:
    """Sum of the pieces over ``subset`` (default: every node of ``g``)."""
    nodes = frozenset(g.nodes if subset is None else subset)
    return MinMaxFunction((nodes,), pieces, "sum")


def evaluate(f: MinMaxFunction, x) -> np.ndarray | float:
    """Evaluate ``f`` at a point or at each row of a 2-d array of points."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != f.pieces.dimension:
        raise PieceError(f"point dimension {pts.shape[1]} != piece dimension {f.pieces.dimension}")
    names = sorted(set().union(*f.subsets))
    vals = {k: np.einsum("ki,ij,kj->k", pts, f.pieces[k], pts) for k in names}
    if f.polarity == "sum":
        out = sum(vals[k] for k in names)
    else:
        inner, outer = (np.max, np.min) if f.polarity == "min-max" else (np.min, np.max)
        per_subset = np.stack([inner(np.stack([vals[k] for k in subset_key(p)]), axis=0) for p in f.subsets])
        out = outer(per_subset, axis=0)
    return float(out[0]) if single else out


def sphere_points(n: int, count: int = 10_000, seed: int = 0) -> np.ndarray:
    """Deterministic unit-sphere sample: scrambled Sobol half, Gaussian half."""
    n_qmc = count // 2
    m = max(0, int(np.ceil(np.log2(max(n_qmc, 1)))))
    u = qmc.Sobol(d=n, scramble=True, seed=seed).random_base2(m)[:n_qmc]
    z_qmc = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    z_rand = np.random.default_rng(seed).standard_normal((count - n_qmc, n))
    z = np.vstack([z_qmc, z_rand])
    r = np.linalg.norm(z, axis=1, keepdims=True)
    z = np.where(r > 0, z / np.where(r > 0, r, 1), 0)
    z[r[:, 0] == 0, 0] = 1.0
    return z


@dataclass(frozen=True)
class DecreaseReport:
    samples: int
    violations: int
    worst: float  # max over samples/modes of (V(A x) - V(x)) / V(x)
    witness: tuple[np.ndarray, int] | None

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "violations": self.violations,
            "worst_relative_increase": self.worst,
            "witness": None if self.witness is None
            else {"x": self.witness[0].tolist(), "mode": self.witness[1]},
        }


def check_decrease(
    f: MinMaxFunction,
    sys: SwitchedLinearSystem,
    samples: int | np.ndarray = 10_000,
    tol: float = 1e-7,
    seed: int = 0,
) -> DecreaseReport:
    """Sampled check of ``V(A_s x) <= (1 + tol) V(x)`` for every mode ``s``.

    By homogeneity, unit-sphere samples suffice.  ``samples`` may also be an
    explicit array of points.
    """
    if isinstance(samples, np.ndarray):
        x = np.atleast_2d(samples)
    else:
        x = sphere_points(sys.dimension, int(samples), seed)
    v = evaluate(f, x)
    worst, witness, count = -np.inf, None, 0
    for s, a in enumerate(sys.modes, start=1):
        rel = (evaluate(f, x @ a.T) - v) / v
        bad = rel > tol
        count += int(bad.sum())
        k = int(np.argmax(rel))
        if rel[k] > worst:
            worst = float(rel[k])
            witness = (x[k].copy(), s) if rel[k] > tol else witness
    return DecreaseReport(len(x), count, worst, witness)


@dataclass(frozen=True)
class DerivedInequality:
    hypothesis: bool
    verified: bool | None  # None when the hypothesis fails (no sampling)
    worst: float | None = None

    def __bool__(self) -> bool:
        return self.hypothesis


def _derived(g, pieces, sys, p_set, q_set, mode, samples, tol, seed, kind):
    g.require_unit("derived inequalities")
    p_set, q_set = frozenset(map(str, p_set)), frozenset(map(str, q_set))
    if kind == "min":
        hyp = all(g.successors(p, mode) & q_set for p in p_set)
    else:
        hyp = all(g.predecessors(q, mode) & p_set for q in q_set)
    if not hyp or not p_set or not q_set:
        return DerivedInequality(bool(hyp and p_set and q_set), None)
    agg = np.min if kind == "min" else np.max
    x = sphere_points(sys.dimension, samples, seed)
    y = x @ sys.matrix(mode).T
    vx, vy = pieces.values_at(x), pieces.values_at(y)
    lhs = agg(np.stack([vy[q] for q in sorted(q_set)]), axis=0)
    rhs = agg(np.stack([vx[p] for p in sorted(p_set)]), axis=0)
    rel = float(np.max((lhs - rhs) / rhs))
    return DerivedInequality(True, rel <= tol, rel)


def derived_min_inequality(g, pieces, sys, p_set, q_set, mode, samples=10_000, tol=1e-7, seed=0):
    """``min_Q V_q(A x) <= min_P V_p(x)`` when every ``p`` has a ``mode``-edge into ``Q``."""
    return _derived(g, pieces, sys, p_set, q_set, mode, samples, tol, seed, "min")


def derived_max_inequality(g, pieces, sys, p_set, q_set, mode, samples=10_000, tol=1e-7, seed=0):
    """``max_Q V_q(A x) <= max_P V_p(x)`` when every ``q`` has a ``mode``-edge from ``P``."""
    return _derived(g, pieces, sys, p_set, q_set, mode, samples, tol, seed, "max")
