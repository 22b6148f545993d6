"""Switched linear systems ``x(t+1) = A_{sigma(t)} x(t)``."""
from __future__ import annotations

import json
from typing import Iterable, Sequence

import numpy as np

__all__ = ["SwitchedLinearSystem", "SystemDataError"]


class SystemDataError(ValueError):
    """Malformed system data."""


class SwitchedLinearSystem:
    """Ordered modes ``A_1..A_M``; mode ``s`` is ``self.modes[s - 1]``."""

    def __init__(self, modes: Iterable):
        mats = [np.array(a, dtype=float) for a in modes]
        if not mats:
            raise SystemDataError("a switched system needs at least one mode")
        n = mats[0].shape[0] if mats[0].ndim == 2 else -1
        for a in mats:
            if a.ndim != 2 or a.shape != (n, n):
                raise SystemDataError("all modes must be square matrices of one common dimension")
        for a in mats:
            a.setflags(write=False)
        self.modes: tuple[np.ndarray, ...] = tuple(mats)

    @property
    def dimension(self) -> int:
        return self.modes[0].shape[0]

    @property
    def num_modes(self) -> int:
        return len(self.modes)

    def __len__(self) -> int:
        return len(self.modes)

    def matrix(self, mode: int) -> np.ndarray:
        if not 1 <= mode <= len(self.modes):
            raise SystemDataError(f"mode {mode} outside 1..{len(self.modes)}")
        return self.modes[mode - 1]

    def word_matrix(self, word: Sequence[int]) -> np.ndarray:
        """Matrix of ``f_w = f_{s_k} o ... o f_{s_1}``, i.e. ``A_{s_k} ... A_{s_1}``."""
        out = np.eye(self.dimension)
        for s in word:
            out = self.matrix(s) @ out
        return out

    def scaled(self, gamma: float) -> "SwitchedLinearSystem":
        return SwitchedLinearSystem([gamma * a for a in self.modes])

    def spectral_radii(self) -> list[float]:
        return [float(max(abs(np.linalg.eigvals(a)))) for a in self.modes]

    def __repr__(self) -> str:
        return f"SwitchedLinearSystem(dimension={self.dimension}, modes={len(self.modes)})"

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "modes": [a.tolist() for a in self.modes]}

    @classmethod
    def from_dict(cls, data: dict) -> "SwitchedLinearSystem":
        try:
            sys = cls(data["modes"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SystemDataError(f"malformed system document: {exc}") from exc
        if "dimension" in data and int(data["dimension"]) != sys.dimension:
            raise SystemDataError("declared dimension does not match the mode matrices")
        return sys

    @classmethod
    def load(cls, path) -> "SwitchedLinearSystem":
        with open(path) as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise SystemDataError(f"invalid JSON: {exc}") from exc

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")
