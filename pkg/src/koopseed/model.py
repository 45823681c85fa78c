"""Koopman model container and its portable on-disk matrix format."""

import json
from dataclasses import dataclass, field

import numpy as np

from .dictionary import Dictionary, build_dictionary


@dataclass
class KoopmanModel:
    """A dictionary plus a square real matrix K with Psi(x_next) ~= K Psi(x)."""

    dictionary: Dictionary
    matrix: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        n = len(self.dictionary)
        if self.matrix.shape != (n, n):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match dictionary size {n}"
            )


def save_matrix_csv(path, model: KoopmanModel, extra_meta: dict | None = None) -> None:
    """Write a model as dense CSV rows under a one-line JSON metadata header.

    The header records var_count/max_degree, from which the dictionary is
    reconstructed exactly (ordering is deterministic). Entries use 17
    significant digits so the round trip is bit-exact.
    """
    meta = {
        "var_count": model.dictionary.var_count,
        "max_degree": model.dictionary.max_degree,
        "size": len(model.dictionary),
    }
    if extra_meta:
        meta.update(extra_meta)
    with open(path, "w", newline="\n") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        for row in model.matrix:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def load_matrix_csv(path) -> KoopmanModel:
    """Read a model written by save_matrix_csv."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing metadata header line")
        meta = json.loads(header.lstrip("#").strip())
        matrix = np.loadtxt(fh, delimiter=",", ndmin=2)
    dictionary = build_dictionary(int(meta["var_count"]), int(meta["max_degree"]))
    model = KoopmanModel(dictionary, matrix)
    model.diagnostics.update({k: v for k, v in meta.items() if k not in ("var_count", "max_degree", "size")})
    return model
