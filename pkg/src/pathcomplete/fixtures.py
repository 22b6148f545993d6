"""Bundled graphs, systems and pieces used by the case studies and tests."""
from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .graph import LabeledGraph
from .lyapunov import Pieces
from .systems import SwitchedLinearSystem

__all__ = ["available", "load_graph", "load_system", "load_pieces", "netcon_plant", "read_document"]

_PACKAGE = "pathcomplete.data"


def available() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files(_PACKAGE).iterdir() if p.name.endswith(".json"))


def read_document(name: str) -> dict:
    with resources.files(_PACKAGE).joinpath(f"{name}.json").open() as fh:
        return json.load(fh)


def load_graph(name: str) -> LabeledGraph:
    return LabeledGraph.from_dict(read_document(name))


def load_system(name: str) -> SwitchedLinearSystem:
    return SwitchedLinearSystem.from_dict(read_document(name))


def load_pieces(name: str) -> Pieces:
    return Pieces.from_dict(read_document(name))


def netcon_plant() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(A, B, K)`` of the networked-control case study."""
    doc = read_document("netcon_plant")
    return tuple(np.array(doc[k], dtype=float) for k in ("A", "B", "K"))
