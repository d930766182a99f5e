"""Envelope equations of motion for the Lambda system with losses.

Units: hbar = 1, frequencies and rates in units of Omega_1, times in 1/Omega_1.
The generator acts on the envelope ``p`` (free phases factored out), so the
only explicit time dependence is through the detuning phases exp(+-i Delta t).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernel
from .fock_basis import (BandedDensityMatrix, EnvelopeDensityMatrix, Truncation,
                         basis_labels, element_set)

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class SystemConfig:
    omega1: float = 1.0
    omega2: float = 1.0
    delta_p: float = 0.0
    delta_c: float = 0.0
    omega31: float = 100.0
    omega21: float = 0.0

    def __post_init__(self):
        if not self.omega1 > 0:
            raise ValueError("omega1 must be > 0")
        if self.omega2 < 0:
            raise ValueError("omega2 must be >= 0")
        if not self.omega31 > max(abs(self.delta_p), abs(self.delta_c)):
            raise ValueError("omega31 must exceed every detuning")

    @property
    def omega32(self) -> float:
        return self.omega31 - self.omega21

    def transition_frequency(self, pair) -> float:
        return {(3, 1): self.omega31, (3, 2): self.omega32, (2, 1): self.omega21}[tuple(pair)]


@dataclass(frozen=True)
class LossConfig:
    kappa1: float = 0.0
    kappa2: float = 0.0
    r13: float = 0.0
    r23: float = 0.0
    r12: float = 0.0
    g31: float = 0.0
    g32: float = 0.0
    g21: float = 0.0

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"loss rate {name} must be finite and >= 0, got {value}")

    @classmethod
    def cavity(cls, kappa: float):
        return cls(kappa1=kappa, kappa2=kappa)

    def as_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in
                ("kappa1", "kappa2", "r13", "r23", "r12", "g31", "g32", "g21")}

    def dephasing_matrix(self) -> np.ndarray:
        """Symmetric 3x3 matrix of gamma_{n,n'} with zero diagonal."""
        g = np.zeros((3, 3))
        g[2, 0] = g[0, 2] = self.g31
        g[2, 1] = g[1, 2] = self.g32
        g[1, 0] = g[0, 1] = self.g21
        return g

    @property
    def is_lossless(self) -> bool:
        return not any(self.as_dict().values())


def _decay_factor(n, k, m, n2, k2, m2, loss: LossConfig):
    """Coefficient multiplying p itself (all diagonal loss terms)."""
    gamma = loss.dephasing_matrix()
    r3 = 0.5 * (loss.r13 + loss.r23)
    return -(
        0.5 * loss.kappa1 * (k + k2)
        + 0.5 * loss.kappa2 * (m + m2)
        + gamma[n - 1, n2 - 1]
        + r3 * ((n == 3).astype(float) + (n2 == 3))
        + 0.5 * loss.r12 * ((n == 2).astype(float) + (n2 == 2))
    )


def derivative(p, t: float, sys: SystemConfig, loss: LossConfig) -> np.ndarray:
    """Dense time derivative of the envelope matrix, term by term.

    Accepts an :class:`EnvelopeDensityMatrix` or a bare (D, D) array together
    with ``p.truncation``; returns a (D, D) complex array.
    """
    trunc = p.truncation
    data = np.asarray(p.data, dtype=complex)
    K1, M1 = trunc.k_max + 1, trunc.m_max + 1
    T = data.reshape(3, K1, M1, 3, K1, M1)
    out = np.zeros_like(T)

    sk = np.sqrt(np.arange(K1, dtype=float))
    sm = np.sqrt(np.arange(M1, dtype=float))
    c1 = 1j * sys.omega1 / SQRT2
    c2 = 1j * sys.omega2 / SQRT2
    eP = np.exp(1j * sys.delta_p * t)
    eC = np.exp(1j * sys.delta_c * t)
    # sqrt factors shaped for the left (k or m of the row) and right indices
    skL = sk[1:].reshape(-1, 1, 1, 1, 1)
    smL = sm[1:].reshape(-1, 1, 1, 1)
    skR = sk[1:].reshape(-1, 1)
    smR = sm[1:]

    # Omega_1: 1 <-> 3 with one photon of field 1
    out[0, 1:] += c1 * eP * skL * T[2, :-1]
    out[2, :-1] += c1 * np.conj(eP) * skL * T[0, 1:]
    out[..., 0, 1:, :] -= c1 * np.conj(eP) * skR * T[..., 2, :-1, :]
    out[..., 2, :-1, :] -= c1 * eP * skR * T[..., 0, 1:, :]

    # Omega_2: 2 <-> 3 with one photon of field 2; no direct 1 <-> 2 coupling
    out[1, :, 1:] += c2 * eC * smL * T[2, :, :-1]
    out[2, :, :-1] += c2 * np.conj(eC) * smL * T[1, :, 1:]
    out[..., 1, :, 1:] -= c2 * np.conj(eC) * smR * T[..., 2, :, :-1]
    out[..., 2, :, :-1] -= c2 * eC * smR * T[..., 1, :, 1:]

    # cavity feed from (k+1, k'+1) and (m+1, m'+1)
    if loss.kappa1:
        f = np.multiply.outer(sk[1:], sk[1:]).reshape(1, K1 - 1, 1, 1, K1 - 1, 1)
        out[:, :-1, :, :, :-1, :] += loss.kappa1 * f * T[:, 1:, :, :, 1:, :]
    if loss.kappa2:
        f = np.multiply.outer(sm[1:], sm[1:]).reshape(1, 1, M1 - 1, 1, 1, M1 - 1)
        out[:, :, :-1, :, :, :-1] += loss.kappa2 * f * T[:, :, 1:, :, :, 1:]

    # radiative feed into the lower-level diagonal blocks
    if loss.r13:
        out[0, :, :, 0] += loss.r13 * T[2, :, :, 2]
    if loss.r23:
        out[1, :, :, 1] += loss.r23 * T[2, :, :, 2]
    if loss.r12:
        out[0, :, :, 0] += loss.r12 * T[1, :, :, 1]

    n, k, m = (x.reshape(3, K1, M1) for x in basis_labels(trunc))
    decay = _decay_factor(
        n[:, :, :, None, None, None], k[:, :, :, None, None, None], m[:, :, :, None, None, None],
        n[None, None, None], k[None, None, None], m[None, None, None], loss,
    )
    out += decay * T
    return out.reshape(data.shape)


class CompiledGenerator:
    """Fast evaluation of the same equations on a tracked element set.

    ``order=None`` tracks every element and works on (D, D) arrays; an integer
    keeps only elements whose excitation difference |N_a - N_b| is at most
    ``order`` and works on flat vectors. Each element set is closed under the
    generator, so the restricted evolution is exact.
    """

    def __init__(self, trunc: Truncation, sys: SystemConfig, loss: LossConfig,
                 order: int | None = None, support: frozenset | None = None):
        self.truncation = trunc
        self.sys = sys
        self.loss = loss
        self.order = order
        self.support = support
        self.full = order is None and support is None
        n, k, m = basis_labels(trunc)
        self._lev = (n - 1).astype(np.int64)
        self._k = k.astype(np.int64)
        self._m = m.astype(np.int64)
        self._sqrt = np.sqrt(np.arange(max(trunc.k_max, trunc.m_max) + 2, dtype=float))
        if self.full:
            self.layout = self.rows = self.cols = None
            self.shape = (trunc.dim, trunc.dim)
            self._dec = _decay_factor(n[:, None], k[:, None], m[:, None],
                                      n[None], k[None], m[None], loss).astype(float)
        else:
            self.layout = element_set(trunc, order, support)
            self.rows, self.cols = self.layout.rows, self.layout.cols
            self.shape = self.rows.shape
            r, c = self.rows, self.cols
            self._dec = _decay_factor(n[r], k[r], m[r], n[c], k[c], m[c], loss).astype(float)
        self._buffers = None

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def _coefficients(self, t: float) -> tuple:
        sys, loss = self.sys, self.loss
        c1 = 1j * sys.omega1 / SQRT2
        c2 = 1j * sys.omega2 / SQRT2
        eP = np.exp(1j * sys.delta_p * t)
        eC = np.exp(1j * sys.delta_c * t)
        return (c1 * eP, c1 * np.conj(eP), c2 * eC, c2 * np.conj(eC),
                loss.kappa1, loss.kappa2, loss.r13, loss.r23, loss.r12, self._dec)

    def _labels(self) -> tuple:
        trunc = self.truncation
        return (self._lev, self._k, self._m, trunc.k_max + 1, trunc.m_max + 1, self._sqrt)

    def __call__(self, values: np.ndarray, t: float, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty_like(values)
        self._stage(values, values, out, values, 0.0, 0.0, 0, t)
        return out

    def _stage(self, inp, base, out, nxt, w, c, mode, t):
        if self.full:
            _kernel.dense_stage(inp, base, out, nxt, w, c, mode,
                                *self._labels(), *self._coefficients(t))
        else:
            lay = self.layout
            _kernel.band_stage(inp, base, out, nxt, w, c, mode, lay.rows, lay.cols, lay.pos,
                               *self._labels(), *self._coefficients(t))

    def rk4_step(self, values: np.ndarray, t: float, h: float) -> np.ndarray:
        """Advance ``values`` by one classical RK4 step; returns a new array."""
        if self._buffers is None or self._buffers[0].shape != values.shape:
            self._buffers = tuple(np.empty_like(values) for _ in range(3))
        acc, A, B = self._buffers
        self._stage(values, values, acc, A, h / 6, h / 2, 1, t)
        self._stage(A, values, acc, B, h / 3, h / 2, 2, t + h / 2)
        self._stage(B, values, acc, A, h / 3, h, 2, t + h / 2)
        self._stage(A, values, acc, B, h / 6, 0.0, 2, t + h)
        return acc.copy()

    def gather(self, p) -> np.ndarray:
        """Values of a dense state in this generator's layout (a copy)."""
        data = np.asarray(p.data, dtype=complex)
        if self.full:
            return data.copy()
        return np.ascontiguousarray(data[self.rows, self.cols])

    def apply(self, p, t: float) -> np.ndarray:
        """Derivative of a dense or banded state, in this generator's layout."""
        if isinstance(p, BandedDensityMatrix):
            if p.layout is not self.layout and not self.full:
                raise ValueError("state and generator track different element sets")
            values = p.values.reshape(self.shape) if self.full else p.values
            return self(values, t)
        return self(self.gather(p), t)


@dataclass
class ValidationReport:
    max_deviation: float
    tolerance: float
    channels: str
    dephasing: str

    @property
    def ok(self) -> bool:
        return self.max_deviation <= self.tolerance


class GeneratorValidationError(RuntimeError):
    pass


def apply_generator_validation(p, sys: SystemConfig, loss: LossConfig, t: float = 0.0,
                               dephasing: str = "exclude", tolerance: float = 1e-10,
                               raise_on_failure: bool = True) -> ValidationReport:
    """Compare :func:`derivative` with the generic Lindblad superoperator.

    ``dephasing='exclude'`` drops the dephasing channel from both sides; any
    other value is passed to the oracle as its dephasing convention.
    """
    from . import oracle

    trunc = p.truncation
    if trunc.dim > oracle.MAX_DIM:
        raise ValueError(f"validation needs D <= {oracle.MAX_DIM}, got {trunc.dim}")
    if dephasing == "exclude":
        loss_k = LossConfig(**{**loss.as_dict(), "g31": 0.0, "g32": 0.0, "g21": 0.0})
        spec = oracle.build_generic(sys, loss_k, trunc)
    else:
        loss_k = loss
        spec = oracle.build_generic(sys, loss, trunc, dephasing=dephasing)
    ours = derivative(p, t, sys, loss_k)
    theirs = oracle.envelope_derivative(spec, np.asarray(p.data), t)
    dev = float(np.max(np.abs(ours - theirs)))
    active = [name for name, v in loss_k.as_dict().items() if v]
    report = ValidationReport(dev, tolerance, ",".join(active) or "lossless", dephasing)
    if raise_on_failure and not report.ok:
        raise GeneratorValidationError(
            f"generator deviates from oracle by {dev:.3e} (> {tolerance:.1e}); channels: {report.channels}"
        )
    return report
