"""Quantities extracted from an envelope snapshot.

Every function accepts any state exposing ``truncation`` and
``entries(rows, cols)``: a dense :class:`EnvelopeDensityMatrix` or a
:class:`BandedDensityMatrix`. Polarizations are envelope values unless a
phase reconstruction is requested explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .fock_basis import Truncation, excitation_number

PAIRS = ((3, 1), (3, 2), (2, 1))

# minimal coherence order each probe needs when propagating a band
PROBE_ORDER = {
    "populations": 0,
    "photon_statistics": 0,
    "means": 0,
    "quantum_polarization": 0,
    "bipartite": 0,
    "manifolds": 0,
    "classical_polarization": 1,
    "reduced": 1,
    "schmidt": 1,
}
DEFAULT_PROBES = ("populations", "photon_statistics", "means", "classical_polarization",
                  "quantum_polarization", "reduced", "schmidt")


def _diag(p) -> np.ndarray:
    d = np.arange(p.truncation.dim)
    return p.entries(d, d).real.reshape(p.truncation.tensor_shape)


def populations(p) -> tuple[float, float, float]:
    o = _diag(p).sum(axis=(1, 2))
    return float(o[0]), float(o[1]), float(o[2])


def photon_statistics(p, field: int = 1) -> np.ndarray:
    d = _diag(p)
    if field == 1:
        return d.sum(axis=(0, 2))
    if field == 2:
        return d.sum(axis=(0, 1))
    raise ValueError(f"field must be 1 or 2, got {field}")


def mean_photon_numbers(p) -> tuple[float, float]:
    w1 = photon_statistics(p, 1)
    w2 = photon_statistics(p, 2)
    return float(np.dot(np.arange(w1.size), w1)), float(np.dot(np.arange(w2.size), w2))


def manifold_populations(p) -> np.ndarray:
    """Probability in each excitation manifold N = k + m + [n == 3]."""
    N = excitation_number(p.truncation)
    return np.bincount(N, weights=_diag(p).ravel())


@lru_cache(maxsize=64)
def _coherence_indices(trunc: Truncation, i: int, j: int, dk: int, dm: int):
    # rows (i, k, m), cols (j, k + dk, m + dm) with both in range
    K1, M1 = trunc.k_max + 1, trunc.m_max + 1
    k, m = np.meshgrid(np.arange(K1 - dk), np.arange(M1 - dm), indexing="ij")
    k, m = k.ravel(), m.ravel()
    rows = ((i - 1) * K1 + k) * M1 + m
    cols = ((j - 1) * K1 + k + dk) * M1 + m + dm
    return rows, cols


def _pair(pair) -> tuple[int, int]:
    pair = tuple(int(x) for x in pair)
    if pair not in PAIRS:
        raise ValueError(f"polarization pair must be one of {PAIRS}, got {pair}")
    return pair


def classical_polarization(p, pair=(3, 1), t: float = 0.0, sys=None,
                           envelope: bool = True) -> complex:
    """Field-diagonal coherence sum over (i,k,m | j,k,m).

    With ``envelope=False`` the fast phase exp(-i omega_ij t) is restored,
    using the transition frequencies in ``sys``.
    """
    i, j = _pair(pair)
    rows, cols = _coherence_indices(p.truncation, i, j, 0, 0)
    value = complex(p.entries(rows, cols).sum())
    if not envelope:
        if sys is None:
            raise ValueError("phase reconstruction needs a SystemConfig")
        value *= np.exp(-1j * sys.transition_frequency((i, j)) * t)
    return value


def quantum_polarization(p, pair=(3, 1)) -> complex:
    """Coherence sum between states differing by one photon of the driving field."""
    pair = tuple(pair)
    if pair == (3, 1):
        rows, cols = _coherence_indices(p.truncation, 3, 1, 1, 0)
    elif pair == (3, 2):
        rows, cols = _coherence_indices(p.truncation, 3, 2, 0, 1)
    else:
        raise ValueError(f"quantum polarization defined for (3,1) and (3,2), got {pair}")
    return complex(p.entries(rows, cols).sum())


def reduced_electronic(p, t: float = 0.0, sys=None, envelope: bool = True) -> np.ndarray:
    """3x3 electronic matrix traced over both fields."""
    rho = np.zeros((3, 3), dtype=complex)
    pops = populations(p)
    for n in range(3):
        rho[n, n] = pops[n]
    for i, j in PAIRS:
        c = classical_polarization(p, (i, j), t=t, sys=sys, envelope=envelope)
        rho[i - 1, j - 1] = c
        rho[j - 1, i - 1] = np.conj(c)
    return rho


def schmidt_number(reduced: np.ndarray, tol: float = 1e-3) -> float:
    reduced = np.asarray(reduced, dtype=complex)
    tr = np.trace(reduced).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"reduced matrix has trace {tr:.6g}; normalize before computing K")
    return float(1.0 / np.vdot(reduced, reduced).real)


def bipartite_distribution(p) -> np.ndarray:
    """Joint photon-number grid of both fields with the electron in level 3."""
    return _diag(p)[2].copy()


def normalize_max(grid: np.ndarray) -> np.ndarray:
    peak = np.max(grid)
    return grid / peak if peak > 0 else grid.copy()


def product_test_residual(W: np.ndarray) -> float:
    """L1 distance between a joint distribution and the product of its marginals."""
    W = np.asarray(W, dtype=float)
    total = W.sum()
    if not total > 0:
        raise ValueError("distribution has no mass")
    J = W / total
    return float(np.abs(J - np.outer(J.sum(axis=1), J.sum(axis=0))).sum())


def l1_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = max(a.size, b.size)
    return float(np.abs(np.pad(a, (0, n - a.size)) - np.pad(b, (0, n - b.size))).sum())


SCALAR_COLUMNS = {
    "populations": ("O1", "O2", "O3"),
    "means": ("N_P", "N_C"),
    "classical_polarization": ("PC31_re", "PC31_im", "PC32_re", "PC32_im", "PC21_re", "PC21_im"),
    "quantum_polarization": ("PQ31_re", "PQ31_im", "PQ32_re", "PQ32_im"),
    "schmidt": ("K",),
}


def required_order(probes) -> int:
    unknown = set(probes) - set(PROBE_ORDER)
    if unknown:
        raise ValueError(f"unknown observables: {sorted(unknown)}")
    return max((PROBE_ORDER[name] for name in probes), default=0)


def measure(p, probes, t: float = 0.0) -> dict:
    """Evaluate the requested probes; scalars keyed by their CSV column names."""
    out: dict = {"t": t, "trace": p.trace().real}
    if "populations" in probes:
        out.update(zip(("O1", "O2", "O3"), populations(p)))
    if "means" in probes:
        out.update(zip(("N_P", "N_C"), mean_photon_numbers(p)))
    if "classical_polarization" in probes:
        for i, j in PAIRS:
            c = classical_polarization(p, (i, j))
            out[f"PC{i}{j}_re"], out[f"PC{i}{j}_im"] = c.real, c.imag
    if "quantum_polarization" in probes:
        for i, j in ((3, 1), (3, 2)):
            c = quantum_polarization(p, (i, j))
            out[f"PQ{i}{j}_re"], out[f"PQ{i}{j}_im"] = c.real, c.imag
    if "reduced" in probes or "schmidt" in probes:
        red = reduced_electronic(p)
        if "reduced" in probes:
            out["reduced"] = red
        if "schmidt" in probes:
            tr = np.trace(red).real
            out["K"] = schmidt_number(red / tr) if tr > 0 else float("nan")
    if "photon_statistics" in probes:
        out["W"] = photon_statistics(p, 1)
        out["W_tilde"] = photon_statistics(p, 2)
    if "manifolds" in probes:
        out["manifolds"] = manifold_populations(p)
    if "bipartite" in probes:
        out["W_km"] = bipartite_distribution(p)
    return out


@dataclass
class ObservableSeries:
    """Time-stamped observable records from one run."""

    probes: tuple
    times: list = field(default_factory=list)
    scalars: dict = field(default_factory=dict)
    arrays: dict = field(default_factory=dict)
    snapshots: dict = field(default_factory=dict)

    def append(self, record: dict) -> None:
        self.times.append(float(record["t"]))
        for key, value in record.items():
            if key == "t":
                continue
            if np.ndim(value) == 0:
                self.scalars.setdefault(key, []).append(float(value))
            else:
                self.arrays.setdefault(key, []).append(np.asarray(value))

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, key) -> np.ndarray:
        if key == "t":
            return np.asarray(self.times)
        if key in self.scalars:
            return np.asarray(self.scalars[key])
        if key in self.arrays:
            return np.stack(self.arrays[key])
        raise KeyError(key)

    def __contains__(self, key) -> bool:
        return key == "t" or key in self.scalars or key in self.arrays

    def complex(self, name: str) -> np.ndarray:
        """Complex column from its ``_re``/``_im`` pair, e.g. ``PC21``."""
        return self[f"{name}_re"] + 1j * self[f"{name}_im"]

    def scalar_names(self) -> list:
        return list(self.scalars)

    def last(self, key):
        return self[key][-1]

    def at(self, key, t: float):
        """Value of ``key`` at the recorded time closest to ``t``."""
        idx = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return self[key][idx]

    def window(self, t_start: float, t_end: float) -> np.ndarray:
        times = np.asarray(self.times)
        return (times >= t_start - 1e-12) & (times <= t_end + 1e-12)
