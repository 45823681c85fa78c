"""Monomial dictionaries over multi-indices.

A multi-index is a plain tuple of non-negative integer exponents, one per
state variable; the monomial it names is ``x_1**e_1 * ... * x_D**e_D``.
A Dictionary is the ordered set of all multi-indices up to a total-degree
bound, which is the observable basis every other module works in.
"""

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb

import numpy as np


def _graded_lex_entries(var_count, max_degree):
    # Degree ascending; within a degree, descending lexicographic on the
    # exponent tuple, so x_1 precedes x_2 and x_1^2 precedes x_1*x_2.
    # This puts the constant at index 0 and the monomial x_i at index i.
    entries = []
    for degree in range(max_degree + 1):
        block = []
        for combo in combinations_with_replacement(range(var_count), degree):
            exps = [0] * var_count
            for v in combo:
                exps[v] += 1
            block.append(tuple(exps))
        block.sort(key=lambda m: tuple(-e for e in m))
        entries.extend(block)
    return tuple(entries)


class Dictionary:
    """Ordered monomial basis: all exponent tuples with total degree <= max_degree.

    The ordering is graded lexicographic and deterministic across runs, so a
    (var_count, max_degree) pair always reconstructs the identical basis.
    Instances are immutable after construction and safe to share.
    """

    def __init__(self, var_count: int, max_degree: int):
        if var_count < 1:
            raise ValueError("var_count must be >= 1")
        if max_degree < 1:
            raise ValueError("max_degree must be >= 1")
        self.var_count = int(var_count)
        self.max_degree = int(max_degree)
        self.entries = _graded_lex_entries(self.var_count, self.max_degree)
        self._index = {m: i for i, m in enumerate(self.entries)}
        self._exponents = np.array(self.entries, dtype=np.int64)
        assert len(self.entries) == comb(var_count + max_degree, max_degree)

    def __len__(self):
        return len(self.entries)

    def __repr__(self):
        return f"Dictionary(var_count={self.var_count}, max_degree={self.max_degree}, size={len(self)})"

    def __eq__(self, other):
        return (
            isinstance(other, Dictionary)
            and other.var_count == self.var_count
            and other.max_degree == self.max_degree
        )

    def __hash__(self):
        return hash((self.var_count, self.max_degree))

    @property
    def exponents(self) -> np.ndarray:
        """Exponent matrix of shape (size, var_count), row k = entry k."""
        return self._exponents

    def index_of(self, multi_index) -> int:
        """Position of a multi-index in the basis; KeyError if absent."""
        return self._index[tuple(multi_index)]

    def __contains__(self, multi_index):
        return tuple(multi_index) in self._index

    def state_indices(self) -> np.ndarray:
        """Indices of the degree-1 monomials x_1 .. x_D, in variable order."""
        eye = np.eye(self.var_count, dtype=np.int64)
        return np.array([self.index_of(tuple(row)) for row in eye])

    def evaluate(self, x) -> np.ndarray:
        """Evaluate every monomial at a state (or a batch of states).

        Parameters
        ----------
        x : array-like, shape (var_count,) or (..., var_count)

        Returns
        -------
        ndarray of shape (size,) or (..., size); component k is
        prod_i x_i**exponents_k[i], so the constant slot is always 1.
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.var_count:
            raise ValueError(
                f"state has {x.shape[-1]} variables, dictionary expects {self.var_count}"
            )
        if not np.isfinite(x).all():
            raise ValueError("non-finite state passed to Dictionary.evaluate")
        out = np.ones(x.shape[:-1] + (len(self),))
        for d in range(self.var_count):
            out *= x[..., d, None] ** self._exponents[:, d]
        return out


def build_dictionary(var_count: int, max_degree: int) -> Dictionary:
    """Construct the graded-lexicographic monomial dictionary.

    Size is C(var_count + max_degree, max_degree); entry 0 is the constant.
    """
    return Dictionary(var_count, max_degree)


@dataclass(frozen=True)
class VariableLayout:
    """How the global state vector splits into per-subsystem blocks."""

    subsystem_dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.subsystem_dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError("subsystem dimensions must be positive")
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def offsets(self) -> tuple:
        """Prefix sums: offsets[i] is where subsystem i starts; last entry is D."""
        out = [0]
        for d in self.subsystem_dims:
            out.append(out[-1] + d)
        return tuple(out)

    @property
    def total_vars(self) -> int:
        return sum(self.subsystem_dims)

    @property
    def subsystem_count(self) -> int:
        return len(self.subsystem_dims)

    def variables_of(self, subsystem: int) -> range:
        off = self.offsets
        return range(off[subsystem], off[subsystem + 1])


def embed_indices(
    local: Dictionary,
    layout: VariableLayout,
    subsystem: int,
    global_dict: Dictionary,
) -> np.ndarray:
    """Map local dictionary indices into the global dictionary.

    Each local multi-index is zero-padded into the subsystem's variable slots
    and located in the global basis. Returns an int array ``g`` with
    ``g[local_index] = global_index``; the map is injective and sends the
    local constant to the global constant (index 0).
    """
    if not 0 <= subsystem < layout.subsystem_count:
        raise ValueError(f"subsystem index {subsystem} out of range")
    if local.var_count != layout.subsystem_dims[subsystem]:
        raise ValueError(
            f"local dictionary has {local.var_count} variables, "
            f"subsystem {subsystem} has {layout.subsystem_dims[subsystem]}"
        )
    if global_dict.var_count != layout.total_vars:
        raise ValueError("global dictionary does not cover the full layout")
    if local.max_degree > global_dict.max_degree:
        raise ValueError("local max_degree exceeds the global max_degree")

    offset = layout.offsets[subsystem]
    mapping = np.empty(len(local), dtype=np.int64)
    for li, m in enumerate(local.entries):
        padded = [0] * layout.total_vars
        padded[offset : offset + local.var_count] = m
        padded = tuple(padded)
        if padded not in global_dict:
            raise ValueError(f"padded multi-index {padded} absent from global dictionary")
        mapping[li] = global_dict.index_of(padded)
    return mapping
