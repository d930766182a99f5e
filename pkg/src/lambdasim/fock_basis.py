"""Truncated composite basis |n, k, m> and density-matrix containers.

Basis states are ordered row-major with the electronic level outermost,
then the field-1 Fock number ``k``, then the field-2 Fock number ``m``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

LEVELS = (1, 2, 3)


@dataclass(frozen=True)
class Truncation:
    """Maximum Fock numbers (inclusive) kept for the two field modes."""

    k_max: int
    m_max: int

    def __post_init__(self):
        if int(self.k_max) != self.k_max or int(self.m_max) != self.m_max:
            raise TypeError("truncation limits must be integers")
        if self.k_max < 0 or self.m_max < 0:
            raise ValueError(f"truncation limits must be >= 0, got {self}")

    @property
    def dim(self) -> int:
        return 3 * (self.k_max + 1) * (self.m_max + 1)

    @property
    def tensor_shape(self) -> tuple[int, int, int]:
        return (3, self.k_max + 1, self.m_max + 1)


class CompositeIndex(NamedTuple):
    n: int
    k: int
    m: int


def flatten(idx, trunc: Truncation) -> int:
    n, k, m = idx
    if n not in LEVELS:
        raise IndexError(f"electronic level {n} not in {{1, 2, 3}}")
    if not 0 <= k <= trunc.k_max:
        raise IndexError(f"k={k} outside [0, {trunc.k_max}]")
    if not 0 <= m <= trunc.m_max:
        raise IndexError(f"m={m} outside [0, {trunc.m_max}]")
    return ((n - 1) * (trunc.k_max + 1) + k) * (trunc.m_max + 1) + m


def unflatten(i: int, trunc: Truncation) -> CompositeIndex:
    if not 0 <= i < trunc.dim:
        raise IndexError(f"flat index {i} outside [0, {trunc.dim})")
    rest, m = divmod(int(i), trunc.m_max + 1)
    n0, k = divmod(rest, trunc.k_max + 1)
    return CompositeIndex(n0 + 1, k, m)


@lru_cache(maxsize=64)
def basis_labels(trunc: Truncation) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Arrays ``(n, k, m)`` over all flat indices (``n`` is 1-based)."""
    n, k, m = np.indices(trunc.tensor_shape).reshape(3, -1)
    n = n + 1
    for arr in (n, k, m):
        arr.flags.writeable = False
    return n, k, m


@lru_cache(maxsize=64)
def excitation_number(trunc: Truncation) -> np.ndarray:
    """Conserved excitation count ``k + m + [n == 3]`` per basis state."""
    n, k, m = basis_labels(trunc)
    out = k + m + (n == 3)
    out.flags.writeable = False
    return out


def _check_square(data: np.ndarray, trunc: Truncation) -> None:
    if data.shape != (trunc.dim, trunc.dim):
        raise ValueError(
            f"matrix shape {data.shape} does not match truncation dim {trunc.dim}"
        )


@dataclass
class EnvelopeDensityMatrix:
    """Slowly varying envelope ``p`` stored as a dense D x D complex matrix."""

    truncation: Truncation
    data: np.ndarray
    time: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        _check_square(self.data, self.truncation)

    @classmethod
    def zeros(cls, trunc: Truncation, time: float = 0.0) -> "EnvelopeDensityMatrix":
        return cls(trunc, np.zeros((trunc.dim, trunc.dim), dtype=complex), time)

    @property
    def dim(self) -> int:
        return self.truncation.dim

    def __getitem__(self, key):
        a, b = key
        return self.data[self._index(a), self._index(b)]

    def __setitem__(self, key, value):
        a, b = key
        self.data[self._index(a), self._index(b)] = value

    def _index(self, idx) -> int:
        if isinstance(idx, (int, np.integer)):
            return int(idx)
        return flatten(idx, self.truncation)

    def entries(self, rows, cols) -> np.ndarray:
        return self.data[rows, cols]

    def as_tensor(self) -> np.ndarray:
        """View with shape (3, K, M, 3, K, M)."""
        return self.data.reshape(self.truncation.tensor_shape * 2)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def purity(self) -> float:
        # Tr[p^2] = sum |p_ab|^2 for Hermitian p
        return float(np.vdot(self.data, self.data).real)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T), initial=0.0))

    def copy(self) -> "EnvelopeDensityMatrix":
        return EnvelopeDensityMatrix(
            self.truncation, self.data.copy(), self.time, dict(self.metadata)
        )


@lru_cache(maxsize=64)
def parity_labels(trunc: Truncation) -> tuple[np.ndarray, np.ndarray]:
    """Mode parities (-1)^(k + [n != 1]) and (-1)^(m + [n == 2]) per basis state.

    Both the couplings and every loss channel either keep or flip the parity
    of bra and ket together, so the relative parity of an element is conserved.
    """
    n, k, m = basis_labels(trunc)
    p1 = np.where((k + (n != 1)) % 2 == 0, 1, -1).astype(np.int8)
    p2 = np.where((m + (n == 2)) % 2 == 0, 1, -1).astype(np.int8)
    for arr in (p1, p2):
        arr.flags.writeable = False
    return p1, p2


def element_classes(trunc: Truncation, rows, cols) -> np.ndarray:
    """Class code per element: 2*(N_a - N_b) plus 1 for odd relative parity.

    The generator never mixes classes, so each class evolves on its own and a
    class that is empty at t = 0 stays exactly zero.
    """
    N = excitation_number(trunc)
    p1, _ = parity_labels(trunc)
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    return 2 * (N[rows] - N[cols]) + (p1[rows] != p1[cols])


def occupied_classes(p: "EnvelopeDensityMatrix") -> frozenset:
    """Classes holding at least one exactly nonzero element of ``p``."""
    rows, cols = np.nonzero(p.data)
    return frozenset(int(c) for c in np.unique(element_classes(p.truncation, rows, cols)))


def class_order(code: int) -> int:
    return abs(code - (code & 1)) // 2


@lru_cache(maxsize=16)
def all_classes(trunc: Truncation) -> frozenset:
    """Every class code that occurs on this truncation."""
    N = excitation_number(trunc)
    p1, _ = parity_labels(trunc)
    groups = set(zip(N.tolist(), p1.tolist()))
    return frozenset(2 * (na - nb) + (pa != pb) for na, pa in groups for nb, pb in groups)


def reduce_support(trunc: Truncation, order: int | None, support: frozenset | None):
    """None when ``support`` already covers every class inside the band.

    Classes beyond ``order`` stay in the support: they mark which untracked
    elements are unknown rather than exactly zero.
    """
    if support is None:
        return None
    wanted = frozenset(c for c in all_classes(trunc) if order is None or class_order(c) <= order)
    return None if wanted <= support else frozenset(support)


@dataclass(frozen=True, eq=False)
class ElementSet:
    """Tracked elements: |N_a - N_b| <= order, optionally only some classes.

    ``support`` lists the classes that may be nonzero (None: all of them);
    elements of classes outside it are exactly zero. ``pos`` maps a flat
    element index a * D + b to its slot, -1 if untracked.
    """

    order: int | None
    support: frozenset | None
    rows: np.ndarray
    cols: np.ndarray
    pos: np.ndarray

    @property
    def size(self) -> int:
        return int(self.rows.shape[0])

    def position(self, a, b, dim: int) -> np.ndarray:
        return self.pos[np.asarray(a, dtype=np.int64) * dim + np.asarray(b, dtype=np.int64)]

    def known_zero(self, trunc: Truncation, a, b) -> np.ndarray:
        """True where the element lies in a class that is identically zero."""
        if self.support is None:
            return np.zeros(np.shape(a), dtype=bool)
        codes = element_classes(trunc, a, b)
        return ~np.isin(codes, np.fromiter(self.support, dtype=np.int64, count=len(self.support)))


@lru_cache(maxsize=8)
def element_set(trunc: Truncation, order: int | None, support: frozenset | None = None) -> ElementSet:
    """Element layout for a band of excitation difference ``order``.

    ``order=None`` with ``support=None`` is the full row-major matrix.
    """
    D = trunc.dim
    if order is not None and order < 0:
        raise ValueError("coherence order must be >= 0")
    if order is None and support is None:
        rows = np.repeat(np.arange(D, dtype=np.int64), D)
        cols = np.tile(np.arange(D, dtype=np.int64), D)
    else:
        N = excitation_number(trunc)
        mask = np.ones((D, D), dtype=bool)
        if order is not None:
            mask &= np.abs(N[:, None] - N[None, :]) <= order
        if support is not None:
            p1, _ = parity_labels(trunc)
            codes = 2 * (N[:, None] - N[None, :]) + (p1[:, None] != p1[None, :])
            mask &= np.isin(codes, np.fromiter(support, dtype=np.int64, count=len(support)))
        rows, cols = np.nonzero(mask)
        rows = rows.astype(np.int64)
        cols = cols.astype(np.int64)
    dtype = np.int32 if D * D < 2**31 else np.int64
    pos = np.full(D * D, -1, dtype=dtype)
    pos[rows * D + cols] = np.arange(rows.shape[0], dtype=dtype)
    for arr in (rows, cols, pos):
        arr.flags.writeable = False
    return ElementSet(order, support, rows, cols, pos)


class BandedDensityMatrix:
    """Envelope restricted to a closed set of elements.

    The equations of motion never couple elements with different excitation
    difference N_a - N_b or different relative parity, so any union of such
    classes evolves exactly on its own. Elements beyond ``order`` are unknown
    (NaN); elements of classes outside ``support`` are exactly zero.
    """

    def __init__(self, truncation: Truncation, order: int | None, values=None,
                 time: float = 0.0, support: frozenset | None = None):
        self.truncation = truncation
        self.order = order
        self.layout = element_set(truncation, order, support)
        self.rows, self.cols = self.layout.rows, self.layout.cols
        if values is None:
            values = np.zeros(self.rows.shape[0], dtype=complex)
        values = np.asarray(values, dtype=complex)
        if values.shape != self.rows.shape:
            raise ValueError("values do not match the element set")
        self.values = values
        self.time = time
        self.metadata: dict = {}

    @classmethod
    def from_dense(cls, p: EnvelopeDensityMatrix, order: int | None,
                   restrict: bool = False) -> "BandedDensityMatrix":
        """Band of ``p``; with ``restrict`` only classes occupied in ``p`` are kept."""
        support = None
        if restrict:
            support = reduce_support(p.truncation, order, occupied_classes(p))
        out = cls(p.truncation, order, time=p.time, support=support)
        out.values = p.data[out.rows, out.cols].astype(complex)
        out.metadata = dict(p.metadata)
        return out

    @property
    def support(self):
        return self.layout.support

    @property
    def dim(self) -> int:
        return self.truncation.dim

    @property
    def is_full(self) -> bool:
        return self.order is None

    def entries(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        where = self.layout.position(rows, cols, self.dim)
        out = self.values[where]
        missing = where < 0
        if np.any(missing):
            zero = self.layout.known_zero(self.truncation, rows, cols)
            out = np.where(missing, np.where(zero, 0.0, np.nan), out)
        return out

    def trace(self) -> complex:
        d = np.arange(self.dim)
        return complex(self.entries(d, d).sum())

    def purity(self) -> float:
        if not self.is_full:
            return float("nan")
        return float(np.vdot(self.values, self.values).real)

    def band_norm(self) -> float:
        """Squared Frobenius norm of the tracked elements."""
        return float(np.vdot(self.values, self.values).real)

    def hermiticity_error(self) -> float:
        partner = self.entries(self.cols, self.rows)
        return float(np.max(np.abs(self.values - partner.conj()), initial=0.0))

    def to_dense(self, fill=np.nan) -> EnvelopeDensityMatrix:
        data = np.full((self.dim, self.dim), fill, dtype=complex)
        if self.support is not None:
            a, b = np.indices((self.dim, self.dim)).reshape(2, -1)
            zero = self.layout.known_zero(self.truncation, a, b).reshape(self.dim, self.dim)
            data[zero] = 0.0
        data[self.rows, self.cols] = self.values
        return EnvelopeDensityMatrix(self.truncation, data, self.time, dict(self.metadata))

    def copy(self) -> "BandedDensityMatrix":
        out = BandedDensityMatrix.__new__(BandedDensityMatrix)
        out.truncation, out.order = self.truncation, self.order
        out.layout, out.rows, out.cols = self.layout, self.rows, self.cols
        out.values = self.values.copy()
        out.time = self.time
        out.metadata = dict(self.metadata)
        return out
