"""LMI certification of path-complete quadratic Lyapunov functions.

For a graph ``G`` and a switched linear system the feasibility problem is

    maximize  eps
    s.t.      I <= Q_s <= kappa I                          for every node s
              gamma^2 A_w^T Q_d A_w - Q_s <= -eps I        for every edge (s, d, w)

solved directly with Clarabel.  The constraints are homogeneous in ``Q``,
so the lower bound costs nothing, and ``kappa`` keeps the problem bounded.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import clarabel
import numpy as np
import scipy.sparse as sp

from .graph import Edge, LabeledGraph
from .lyapunov import Pieces, check_feasible_numeric, lyapunov_residual, psd_margin_ok
from .systems import SwitchedLinearSystem

__all__ = [
    "FeasibilityResult",
    "GammaResult",
    "LMIProblem",
    "solve_lmi",
    "valid_inequality_graph",
    "gamma_star",
    "max_gamma_for",
    "networked_modes",
    "DEFAULT_KAPPA",
    "DEFAULT_GAMMA_TOL",
    "DEFAULT_GAMMA_CAP",
]

DEFAULT_KAPPA = 1e4
# non-strict acceptance slack on the margin, relative to the size of the pieces
MARGIN_TOL = 1e-8
DEFAULT_GAMMA_CAP = 4.0
DEFAULT_GAMMA_TOL = float(os.environ.get("PATHCOMPLETE_GAMMA_TOL", "1e-4"))

_SOLVED = {"Solved", "AlmostSolved"}


def _svec_layout(n: int):
    """Upper-triangle, column-major indices with sqrt(2) off-diagonal scaling (Clarabel's PSD layout)."""
    idx, scale = [], []
    for j in range(n):
        for i in range(j + 1):
            idx.append(i * n + j)
            scale.append(1.0 if i == j else np.sqrt(2.0))
    return np.array(idx), np.array(scale)


def _sym_basis(n: int) -> list[np.ndarray]:
    basis = []
    for j in range(n):
        for i in range(j + 1):
            e = np.zeros((n, n))
            e[i, j] = e[j, i] = 1.0
            basis.append(e)
    return basis


class LMIProblem:
    """Conic data for one (graph, system) pair, re-solvable for any ``gamma``."""

    def __init__(self, g: LabeledGraph, sys: SwitchedLinearSystem, kappa: float = DEFAULT_KAPPA):
        n = sys.dimension
        t = n * (n + 1) // 2
        self.graph, self.system, self.kappa = g, sys, kappa
        self.nodes = list(g.nodes)
        self.edges: list[Edge] = list(g.sorted_edges)
        pos = {s: k for k, s in enumerate(self.nodes)}
        idx, scale = _svec_layout(n)
        self._basis = _sym_basis(n)

        def svec(m):
            return m.reshape(-1)[idx] * scale

        b_cols = np.stack([svec(e) for e in self._basis], axis=1)
        s_eye = svec(np.eye(n))
        nv = len(self.nodes) * t + 1
        a0, a1, b = [], [], []
        for k in range(len(self.nodes)):
            blk = np.zeros((t, nv))
            blk[:, k * t:(k + 1) * t] = -b_cols
            a0 += [blk, -blk]  # Q_s - I >= 0 ; kappa I - Q_s >= 0
            a1 += [np.zeros((t, nv))] * 2
            b += [-s_eye, kappa * s_eye]
        self._words = []
        for e in self.edges:
            a = sys.word_matrix(e.label)
            self._words.append(a)
            blk0, blk1 = np.zeros((t, nv)), np.zeros((t, nv))
            blk0[:, pos[e.src] * t:(pos[e.src] + 1) * t] -= b_cols
            blk0[:, -1] = s_eye
            blk1[:, pos[e.dst] * t:(pos[e.dst] + 1) * t] = np.stack(
                [svec(a.T @ m @ a) for m in self._basis], axis=1)
            a0.append(blk0)
            a1.append(blk1)
            b.append(np.zeros(t))
        a0, a1 = np.vstack(a0), np.vstack(a1)
        pattern = sp.csc_matrix((np.abs(a0) + np.abs(a1)) > 0)
        pattern.sort_indices()
        rows = pattern.indices
        cols = np.repeat(np.arange(nv), np.diff(pattern.indptr))
        self._indices, self._indptr, self._shape = pattern.indices, pattern.indptr, a0.shape
        self._d0, self._d1 = a0[rows, cols], a1[rows, cols]
        self._b = np.concatenate(b)
        self._cones = [clarabel.PSDTriangleConeT(n)] * (2 * len(self.nodes) + len(self.edges))
        self._p = sp.csc_matrix((nv, nv))
        self._q = np.zeros(nv)
        self._q[-1] = -1.0
        self._t = t
        self._settings = clarabel.DefaultSettings()
        self._settings.verbose = False

    def solve(self, gamma: float = 1.0):
        """Returns ``(solver_status, margin, pieces_or_None)``."""
        a = sp.csc_matrix((self._d0 + gamma ** 2 * self._d1, self._indices, self._indptr), shape=self._shape)
        sol = clarabel.DefaultSolver(self._p, self._q, a, self._b, self._cones, self._settings).solve()
        status = str(sol.status)
        if status not in _SOLVED:
            return status, float("nan"), None
        x = np.asarray(sol.x)
        mats = {}
        for k, s in enumerate(self.nodes):
            coeffs = x[k * self._t:(k + 1) * self._t]
            mats[s] = sum(c * m for c, m in zip(coeffs, self._basis))
        return status, float(x[-1]), mats

    def residuals(self, mats: dict, gamma: float = 1.0) -> dict[Edge, float]:
        return {
            e: float(np.linalg.eigvalsh(lyapunov_residual(mats[e.src], mats[e.dst], gamma * a))[-1])
            for e, a in zip(self.edges, self._words)
        }

    def exact_gamma(self, mats: dict) -> float:
        """Largest gamma for which the given pieces satisfy every edge (non-strict)."""
        best = np.inf
        chol = {s: np.linalg.cholesky(m) for s, m in mats.items()}
        for e, a in zip(self.edges, self._words):
            linv = np.linalg.inv(chol[e.src])
            m = linv @ a.T @ mats[e.dst] @ a @ linv.T
            lam = float(np.linalg.eigvalsh((m + m.T) / 2)[-1])
            if lam > 0:
                best = min(best, 1.0 / np.sqrt(lam))
        return best


@dataclass(frozen=True)
class FeasibilityResult:
    status: str  # "feasible" | "infeasible" | "indeterminate"
    margin: float
    pieces: Pieces | None
    residuals: dict = field(default_factory=dict, repr=False)  # Edge -> max eigenvalue
    solver_status: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    @property
    def indeterminate(self) -> bool:
        return self.status == "indeterminate"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "margin": self.margin,
            "solver_status": self.solver_status,
            "residuals": [
                {"from": e.src, "to": e.dst, "label": list(e.label), "max_eigenvalue": v}
                for e, v in sorted(self.residuals.items())
            ],
            "pieces": None if self.pieces is None else self.pieces.to_dict(),
        }


def _decide(prob: LMIProblem, gamma: float, strict_eps: float) -> FeasibilityResult:
    solver_status, margin, mats = prob.solve(gamma)
    if mats is None:
        return FeasibilityResult("indeterminate", margin, None, {}, solver_status)
    res = prob.residuals(mats, gamma)
    size = max(np.linalg.norm(m, "fro") for m in mats.values())
    threshold = strict_eps if strict_eps > 0 else -MARGIN_TOL * (1.0 + size)
    if margin < threshold:
        return FeasibilityResult("infeasible", margin, None, res, solver_status)
    pieces = Pieces(mats)
    check = check_feasible_numeric(prob.graph, pieces, prob.system.scaled(gamma), eps=max(strict_eps, 0.0))
    status = "feasible" if check.feasible else "indeterminate"
    return FeasibilityResult(status, margin, pieces, res, solver_status)


def solve_lmi(
    g: LabeledGraph,
    sys: SwitchedLinearSystem,
    strict_eps: float = 0.0,
    kappa: float = DEFAULT_KAPPA,
    gamma: float = 1.0,
) -> FeasibilityResult:
    """Decide whether ``g`` admits quadratic pieces for ``sys`` (scaled by ``gamma``).

    ``strict_eps > 0`` requires every edge LMI to hold with ``-strict_eps I``
    slack under the normalization ``Q_s >= I``.
    """
    if g.modes != sys.num_modes:
        raise ValueError(f"graph has {g.modes} modes, system has {sys.num_modes}")
    return _decide(LMIProblem(g, sys, kappa), gamma, strict_eps)


def valid_inequality_graph(pieces: Pieces, sys: SwitchedLinearSystem, tol: float = 1e-6) -> LabeledGraph:
    """All edges ``(i, j, s)`` with ``A_s^T Q_j A_s - Q_i`` negative semidefinite (up to ``tol``)."""
    if pieces.dimension != sys.dimension:
        raise ValueError(f"piece dimension {pieces.dimension} != system dimension {sys.dimension}")
    edges = []
    for i in pieces:
        for j in pieces:
            for s, a in enumerate(sys.modes, start=1):
                m = lyapunov_residual(pieces[i], pieces[j], a)
                if psd_margin_ok(float(np.linalg.eigvalsh(m)[-1]), m, tol):
                    edges.append((i, j, s))
    return LabeledGraph(sys.num_modes, list(pieces), edges)


@dataclass(frozen=True)
class GammaResult:
    gamma: float  # certified lower end of the bracket
    bracket: tuple[float, float]
    pieces_at_gamma: Pieces | None
    capped: bool = False  # still feasible at the cap: gamma is only a lower bound
    solves: int = 0
    indeterminate: int = 0  # solves skipped as indeterminate (treated as infeasible for bracketing)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "bracket": list(self.bracket),
            "capped": self.capped,
            "solves": self.solves,
            "indeterminate_solves": self.indeterminate,
            "pieces": None if self.pieces_at_gamma is None else self.pieces_at_gamma.to_dict(),
        }


def max_gamma_for(g: LabeledGraph, sys: SwitchedLinearSystem, pieces: Pieces) -> float:
    """Largest scaling for which fixed ``pieces`` stay a (non-strict) solution."""
    return LMIProblem(g, sys).exact_gamma({s: pieces[s] for s in g.nodes})


def gamma_star(
    g: LabeledGraph,
    sys: SwitchedLinearSystem,
    tol: float | None = None,
    cap: float = DEFAULT_GAMMA_CAP,
    kappa: float = DEFAULT_KAPPA,
) -> GammaResult:
    """Largest ``gamma`` such that ``g`` certifies ``{gamma A_s}``, by bisection.

    Feasibility in ``gamma`` is an interval containing 0, so bisection is
    exact up to ``tol``.  Every feasible solve lifts the lower end to the
    exact threshold of the pieces found, which is a rigorous certificate.
    """
    tol = DEFAULT_GAMMA_TOL if tol is None else tol
    if g.modes != sys.num_modes:
        raise ValueError(f"graph has {g.modes} modes, system has {sys.num_modes}")
    prob = LMIProblem(g, sys, kappa)
    solves = bad = 0
    lo, hi, best = 0.0, None, None

    def feasible_at(gamma):
        """Pieces certified at ``gamma`` and their exact threshold, or ``(None, 0)``."""
        nonlocal solves, bad
        solves += 1
        _, margin, mats = prob.solve(gamma)
        if mats is None:
            bad += 1
            return None, 0.0
        size = max(np.linalg.norm(m, "fro") for m in mats.values())
        if margin < -MARGIN_TOL * (1.0 + size):
            return None, 0.0
        try:
            exact = prob.exact_gamma(mats)
        except np.linalg.LinAlgError:
            bad += 1
            return None, 0.0
        if exact < gamma * (1 - 1e-9):
            bad += 1  # margin says feasible, the pieces do not quite certify gamma
            return None, 0.0
        return mats, exact

    probe = 1.0
    while hi is None:
        mats, exact = feasible_at(probe)
        if mats is None:
            hi = probe
            break
        best, lo = mats, max(lo, min(exact, cap))
        if lo >= cap or probe >= cap:
            return GammaResult(lo, (lo, cap), Pieces(best), True, solves, bad)
        probe = min(max(2.0 * probe, lo * (1 + tol)), cap)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        mats, exact = feasible_at(mid)
        if mats is None:
            hi = mid
        else:
            best, lo = mats, max(lo, min(exact, hi))
    if best is None:
        best = {s: np.eye(sys.dimension) for s in g.nodes}  # feasible at gamma = 0
    return GammaResult(lo, (lo, hi), Pieces(best), False, solves, bad)


def networked_modes(a, b, k, m: int) -> SwitchedLinearSystem:
    """Modes ``A^{s-1} (A + B K)^{m-s+1}`` for ``s = 1..m`` (channel inspected every ``m`` steps)."""
    a, b, k = (np.atleast_2d(np.asarray(v, dtype=float)) for v in (a, b, k))
    if m < 1:
        raise ValueError("m must be >= 1")
    if a.shape[0] != a.shape[1] or b.shape[0] != a.shape[0] or k.shape != (b.shape[1], a.shape[0]):
        raise ValueError(f"incompatible shapes A{a.shape} B{b.shape} K{k.shape}")
    closed = a + b @ k
    return SwitchedLinearSystem(
        np.linalg.matrix_power(a, s - 1) @ np.linalg.matrix_power(closed, m - s + 1)
        for s in range(1, m + 1)
    )
