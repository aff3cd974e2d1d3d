"""Deterministic JSON helpers shared by the family and channel file formats."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def dumps(obj: dict) -> str:
    """Serialize a plain dict deterministically (fixed key order, fixed layout)."""
    return json.dumps(obj, indent=2) + "\n"


def dump_path(obj: dict, path) -> None:
    Path(path).write_text(dumps(obj))


def load_path(path) -> dict:
    return json.loads(Path(path).read_text())


def complex_matrix_to_pairs(m: np.ndarray) -> list:
    """Flatten a complex matrix row-major into [re, im] pairs."""
    flat = np.asarray(m, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def pairs_to_complex_matrix(pairs, n: int) -> np.ndarray:
    a = np.asarray(pairs, dtype=float)
    if a.shape != (n * n, 2):
        raise ValueError(f"expected {n * n} [re, im] pairs, got shape {a.shape}")
    return (a[:, 0] + 1j * a[:, 1]).reshape(n, n)
