"""Reproduction pipelines: the networked-control case study and the random-triplet comparison."""
from __future__ import annotations

import csv
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import fixtures
from .certify import DEFAULT_GAMMA_CAP, DEFAULT_GAMMA_TOL, gamma_star, networked_modes, solve_lmi
from .graph import LabeledGraph
from .lyapunov import check_decrease, induced_clf
from .systems import SwitchedLinearSystem

__all__ = [
    "COMPARISON_GRAPHS",
    "TrialRecord",
    "ExperimentReport",
    "random_triplet",
    "comparison_graphs",
    "run_trial",
    "run_experiment",
    "CaseStudyReport",
    "casestudy_netcon",
    "simulate_trajectory",
]

# fixtures compared in the random experiment, in the order G1, G2, G3
COMPARISON_GRAPHS = ("simulation_g1", "simulation_g2", "casestudy_g3")

# Venn regions as (G1, G2, G3) certificate flags
REGIONS = tuple(itertools.product((False, True), repeat=3))


def region_name(flags: Sequence[bool]) -> str:
    names = [f"G{i + 1}" for i, f in enumerate(flags) if f]
    return "&".join(names) if names else "none"


def random_triplet(seed: int) -> SwitchedLinearSystem:
    """Three 2x2 modes, each entry ``N(0, 1) + U[-1, 1]``.

    Generated by numpy's PCG64 ``default_rng(seed)``: first the 12 normal
    draws, then the 12 uniform draws, both in C order of shape ``(3, 2, 2)``.
    """
    if seed < 0:
        raise ValueError("seed must be >= 0")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((3, 2, 2))
    u = rng.uniform(-1.0, 1.0, (3, 2, 2))
    return SwitchedLinearSystem(z + u)


def comparison_graphs() -> tuple[LabeledGraph, ...]:
    return tuple(fixtures.load_graph(name) for name in COMPARISON_GRAPHS)


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    matrices: np.ndarray = field(repr=False)  # shape (3, 2, 2)
    gamma: tuple[float, ...]
    flags: tuple[bool, ...]  # gamma_i >= 1
    indeterminate: bool = False
    capped: bool = False


def run_trial(seed: int, graphs: Sequence[LabeledGraph], tol: float, cap: float = DEFAULT_GAMMA_CAP) -> TrialRecord:
    sys = random_triplet(seed)
    results = [gamma_star(g, sys, tol=tol, cap=cap) for g in graphs]
    gammas = tuple(r.gamma for r in results)
    return TrialRecord(
        seed,
        np.array(sys.modes),
        gammas,
        tuple(x >= 1.0 for x in gammas),
        any(r.indeterminate for r in results),
        any(r.capped for r in results),
    )


def _trial_job(args):
    seed, docs, tol, cap = args
    return run_trial(seed, [LabeledGraph.from_dict(d) for d in docs], tol, cap)


def _venn(flags: np.ndarray) -> dict[str, int]:
    return {region_name(r): int(np.all(flags == np.array(r), axis=1).sum()) for r in REGIONS}


@dataclass
class ExperimentReport:
    records: list[TrialRecord]
    tol: float
    base_seed: int = 0

    @property
    def trials(self) -> int:
        return len(self.records)

    @property
    def used(self) -> list[TrialRecord]:
        return [r for r in self.records if not r.indeterminate]

    @property
    def excluded(self) -> int:
        return self.trials - len(self.used)

    def gammas(self) -> np.ndarray:
        return np.array([r.gamma for r in self.used], dtype=float).reshape(-1, 3)

    def violations(self) -> int:
        """Trials with ``gamma_1 > min(gamma_2, gamma_3) + 2 tol``."""
        g = self.gammas()
        return int(np.sum(g[:, 0] > np.minimum(g[:, 1], g[:, 2]) + 2 * self.tol))

    def flags(self, interpretation: str = "unconditional") -> np.ndarray:
        """Certificate flags per used trial and graph.

        ``unconditional``: ``gamma_i >= 1``.  ``relative``: graph ``i`` is among
        the best graphs of the trial, ``gamma_i >= max_j gamma_j - 2 tol``.
        """
        g = self.gammas()
        if interpretation == "unconditional":
            return g >= 1.0
        if interpretation == "relative":
            return g >= g.max(axis=1, keepdims=True) - 2 * self.tol
        raise ValueError(f"unknown interpretation {interpretation!r}")

    def fractions(self) -> dict[str, list[float]]:
        """Per-graph certificate fractions under each reading.

        ``conditional`` restricts the unconditional flags to trials certified
        by at least one graph.
        """
        u = self.flags("unconditional")
        anyc = u.any(axis=1)
        out = {
            "unconditional": u.mean(axis=0).tolist() if len(u) else [0.0] * 3,
            "conditional": u[anyc].mean(axis=0).tolist() if anyc.any() else [0.0] * 3,
            "relative": self.flags("relative").mean(axis=0).tolist() if len(u) else [0.0] * 3,
        }
        return out

    def venn(self, interpretation: str = "unconditional") -> dict[str, int]:
        return _venn(self.flags(interpretation))

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "used": len(self.used),
            "excluded_indeterminate": self.excluded,
            "capped": sum(r.capped for r in self.used),
            "tol": self.tol,
            "base_seed": self.base_seed,
            "violations": self.violations(),
            "certified_by_any": float(self.flags("unconditional").any(axis=1).mean()) if self.used else 0.0,
            "fractions": self.fractions(),
            "venn": {k: self.venn(k) for k in ("unconditional", "relative")},
        }

    def summary(self) -> str:
        d = self.to_dict()
        lines = [
            "# certificate: gamma_i >= 1 with non-strict LMIs (unconditional);",
            "# relative: gamma_i within 2*tol of the best graph of the trial;",
            "# conditional: unconditional, among trials certified by some graph",
            f"trials {d['trials']}  used {d['used']}  excluded (indeterminate) {d['excluded_indeterminate']}",
            f"violations gamma1 > min(gamma2, gamma3) + 2tol: {d['violations']}",
            f"certified by any graph: {d['certified_by_any']:.4f}",
        ]
        for k, v in d["fractions"].items():
            lines.append(f"{k:>13}: " + "  ".join(f"G{i + 1} {x:.4f}" for i, x in enumerate(v)))
        for k, counts in d["venn"].items():
            lines.append(f"venn ({k}):")
            lines += [f"  {name:<10} {n}" for name, n in counts.items()]
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["seed", "gamma1", "gamma2", "gamma3", "cert1", "cert2", "cert3", "indeterminate"])
            for r in self.records:
                w.writerow([r.seed, *(repr(float(x)) for x in r.gamma), *(int(f) for f in r.flags), int(r.indeterminate)])

    def write_venn_csv(self, path) -> None:
        """The 8 Venn region counts, one column per interpretation."""
        kinds = ("unconditional", "relative")
        counts = {k: self.venn(k) for k in kinds}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["region", *kinds])
            for r in REGIONS:
                name = region_name(r)
                w.writerow([name, *(counts[k][name] for k in kinds)])

    @classmethod
    def read_csv(cls, path, tol: float = DEFAULT_GAMMA_TOL) -> "ExperimentReport":
        records = []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                seed = int(row["seed"])
                gam = tuple(float(row[f"gamma{i}"]) for i in (1, 2, 3))
                records.append(TrialRecord(
                    seed,
                    np.array(random_triplet(seed).modes),
                    gam,
                    tuple(bool(int(row[f"cert{i}"])) for i in (1, 2, 3)),
                    bool(int(row.get("indeterminate", 0))),
                ))
        base = records[0].seed if records else 0
        return cls(records, tol, base)


def run_experiment(
    trials: int,
    graphs: Sequence[LabeledGraph] | None = None,
    base_seed: int = 0,
    tol: float | None = None,
    cap: float = DEFAULT_GAMMA_CAP,
    workers: int = 1,
) -> ExperimentReport:
    """gamma_star of each graph on triplets seeded ``base_seed .. base_seed + trials - 1``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    graphs = comparison_graphs() if graphs is None else tuple(graphs)
    if len(graphs) != 3:
        raise ValueError("the comparison uses exactly three graphs")
    tol = DEFAULT_GAMMA_TOL if tol is None else tol
    seeds = range(base_seed, base_seed + trials)
    if workers > 1:
        docs = [g.to_dict() for g in graphs]
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_trial_job, [(s, docs, tol, cap) for s in seeds], chunksize=64))
    else:
        records = [run_trial(s, graphs, tol, cap) for s in seeds]
    return ExperimentReport(records, tol, base_seed)


# -- networked control ------------------------------------------------------
@dataclass
class CaseStudyReport:
    M: int
    verdict: str
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"M": self.M, "verdict": self.verdict, **self.details}


def _spectral_radius(a: np.ndarray) -> float:
    return float(max(abs(np.linalg.eigvals(a))))


def casestudy_netcon(m: int, samples: int = 10_000) -> CaseStudyReport:
    """Stability analysis of the plant when the channel is inspected every ``m`` steps."""
    if not 1 <= m <= 4:
        raise ValueError("the case study covers 1 <= M <= 4")
    a, b, k = fixtures.netcon_plant()
    sys = networked_modes(a, b, k, m)
    radii = sys.spectral_radii()
    details: dict = {"mode_spectral_radii": radii}
    if m == 1:
        rho = _spectral_radius(a + b @ k)
        details["closed_loop_spectral_radius"] = rho
        return CaseStudyReport(m, "stable" if rho < 1 else "unstable mode product", details)
    if m == 4:
        rho = radii[-1]
        details["unstable_mode"] = 4
        details["unstable_mode_spectral_radius"] = rho
        return CaseStudyReport(m, "unstable mode product" if rho > 1 else "inconclusive", details)
    if m == 2:
        g = fixtures.load_graph("bijection_g2")
        r = solve_lmi(g, sys)
        details["graphs"] = {"bijection_g2": r.status}
        return CaseStudyReport(m, "stable" if r.feasible else "inconclusive", details)
    checks = {}
    for name in ("gstar_3", "simulation_g1", "simulation_g2", "casestudy_g3"):
        checks[name] = solve_lmi(fixtures.load_graph(name), sys)
    details["graphs"] = {n: r.status for n, r in checks.items()}
    g3 = checks["casestudy_g3"]
    if not g3.feasible:
        return CaseStudyReport(m, "inconclusive", details)
    clf = induced_clf(fixtures.load_graph("casestudy_g3"), g3.pieces)
    dec = check_decrease(clf, sys, samples)
    details["clf"] = clf.describe()
    details["clf_subsets"] = [sorted(p) for p in clf.subsets]
    details["clf_decrease"] = dec.to_dict()
    details["pieces"] = g3.pieces.to_dict()
    return CaseStudyReport(m, "stable" if dec.ok else "inconclusive", details)


def simulate_trajectory(sys: SwitchedLinearSystem, word: Sequence[int], x0, steps: int | None = None) -> np.ndarray:
    """States ``x(0..steps)`` under ``x(t+1) = A_{w(t)} x(t)``; the word repeats if shorter than ``steps``."""
    x = np.asarray(x0, dtype=float)
    if x.shape != (sys.dimension,):
        raise ValueError(f"initial state has shape {x.shape}, expected ({sys.dimension},)")
    word = list(word)
    if not word:
        raise ValueError("switching word must be nonempty")
    steps = len(word) if steps is None else int(steps)
    out = np.empty((steps + 1, sys.dimension))
    out[0] = x
    for t in range(steps):
        x = sys.matrix(word[t % len(word)]) @ x
        out[t + 1] = x
    return out
