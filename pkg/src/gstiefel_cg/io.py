"""Matrix Market loading and instance bundles.

A bundle is a directory holding the instance matrices in Matrix Market
format next to a small ``manifest.json`` describing how the instance
was produced (problem, sizes, seed, weights).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .problems import CcaInstance, GevpInstance

__all__ = [
    "load_matrix",
    "save_matrix",
    "save_gevp_bundle",
    "load_gevp_bundle",
    "save_cca_bundle",
    "load_cca_bundle",
]

MANIFEST_NAME = "manifest.json"


def load_matrix(path) -> np.ndarray:
    """Read a Matrix Market file (coordinate or array format) as a dense array."""
    mat = scipy.io.mmread(str(path))
    if scipy.sparse.issparse(mat):
        mat = mat.toarray()
    return np.asarray(mat, dtype=float)


def save_matrix(path, A: np.ndarray) -> None:
    scipy.io.mmwrite(str(path), np.asarray(A, dtype=float))


def _write_manifest(directory: Path, manifest: dict) -> None:
    (directory / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _read_manifest(directory: Path) -> dict:
    return json.loads((directory / MANIFEST_NAME).read_text())


def save_gevp_bundle(directory, inst: GevpInstance, **meta) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_matrix(directory / "a.mtx", inst.A)
    save_matrix(directory / "m.mtx", inst.M)
    _write_manifest(directory, {"problem": "gevp", "n": inst.A.shape[0], "p": inst.p, **meta})


def load_gevp_bundle(directory) -> tuple[GevpInstance, dict]:
    directory = Path(directory)
    manifest = _read_manifest(directory)
    if manifest.get("problem") != "gevp":
        raise ValueError(f"{directory} does not hold a gevp bundle")
    inst = GevpInstance(
        A=load_matrix(directory / "a.mtx"),
        M=load_matrix(directory / "m.mtx"),
        p=int(manifest["p"]),
    )
    return inst, manifest


def save_cca_bundle(directory, inst: CcaInstance, **meta) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_matrix(directory / "cx.mtx", inst.Cx)
    save_matrix(directory / "cy.mtx", inst.Cy)
    save_matrix(directory / "cxy.mtx", inst.Cxy)
    _write_manifest(
        directory,
        {
            "problem": "cca",
            "m": inst.m,
            "n": inst.n,
            "p": inst.p,
            "weights": [float(w) for w in inst.weights],
            **meta,
        },
    )


def load_cca_bundle(directory) -> tuple[CcaInstance, dict]:
    directory = Path(directory)
    manifest = _read_manifest(directory)
    if manifest.get("problem") != "cca":
        raise ValueError(f"{directory} does not hold a cca bundle")
    inst = CcaInstance(
        Cx=load_matrix(directory / "cx.mtx"),
        Cy=load_matrix(directory / "cy.mtx"),
        Cxy=load_matrix(directory / "cxy.mtx"),
        weights=np.asarray(manifest["weights"], dtype=float),
    )
    return inst, manifest
