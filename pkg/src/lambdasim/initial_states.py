"""Initial product states: electron amplitudes times two field states."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, xlogy

from .fock_basis import EnvelopeDensityMatrix, Truncation

# tail mass above which truncation is reported
TAIL_TOLERANCE = 1e-6

FIELD_KINDS = ("vacuum", "fock", "coherent", "squeezed", "custom")


class ConfigurationError(ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FieldSpec:
    kind: str = "vacuum"
    mean: float = 0.0
    phase: float = 0.0
    n: int = 0
    amplitudes: tuple = ()
    cutoff: int | None = None

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ConfigurationError(f"unknown field kind {self.kind!r}")
        if self.mean < 0 or not np.isfinite(self.mean):
            raise ConfigurationError(f"mean photon number must be >= 0, got {self.mean}")
        if self.kind == "fock" and self.n < 0:
            raise ConfigurationError("Fock number must be >= 0")
        if self.kind == "custom" and len(self.amplitudes) == 0:
            raise ConfigurationError("custom field needs amplitudes")

    @classmethod
    def vacuum(cls):
        return cls("vacuum")

    @classmethod
    def fock(cls, n: int):
        return cls("fock", n=int(n))

    @classmethod
    def coherent(cls, mean: float, phase: float = 0.0):
        return cls("coherent", mean=float(mean), phase=float(phase))

    @classmethod
    def squeezed(cls, mean: float):
        return cls("squeezed", mean=float(mean))

    @classmethod
    def custom(cls, amplitudes):
        return cls("custom", amplitudes=tuple(complex(a) for a in amplitudes))

    @property
    def photon_mean(self) -> float:
        if self.kind in ("coherent", "squeezed"):
            return self.mean
        if self.kind == "fock":
            return float(self.n)
        if self.kind == "custom":
            p = np.abs(np.asarray(self.amplitudes)) ** 2
            return float(np.dot(np.arange(p.size), p) / p.sum())
        return 0.0


@dataclass(frozen=True)
class ElectronicSpec:
    c1: complex = 1.0
    c2: complex = 0.0
    c3: complex = 0.0

    def __post_init__(self):
        norm = abs(self.c1) ** 2 + abs(self.c2) ** 2 + abs(self.c3) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ConfigurationError(f"electronic amplitudes not normalized (sum |c|^2 = {norm})")

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3], dtype=complex)


@dataclass
class FieldState:
    """Normalized amplitudes on [0, cutoff] and the mass discarded by truncation."""

    amplitudes: np.ndarray
    tail_mass: float
    spec: FieldSpec | None = None
    warnings: list = field(default_factory=list)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _coherent_log(mean: float, j: np.ndarray) -> np.ndarray:
    # log |c_j|^2 of a Poisson distribution
    return -mean + j * np.log(mean) - gammaln(j + 1)


def squeezed_beta(mean: float) -> float:
    """Positive root beta > 1 of (beta - 1/beta)^2 / 4 = mean."""
    if mean < 0:
        raise ValueError("mean must be >= 0")
    return float(np.sqrt(mean) + np.sqrt(mean + 1.0))


def _squeezed_log(mean: float, j: np.ndarray):
    """log |c_2j| and sign of c_2j.

    Written with the squeezing parameter r = asinh(sqrt(mean)), so that
    2 beta / (1 + beta^2) = 1 / cosh r and (1 - beta^2) / (1 + beta^2) = -tanh r
    without cancellation at small means.
    """
    r = np.arcsinh(np.sqrt(mean))
    log_amp = (
        -0.5 * np.log(np.cosh(r))
        + 0.5 * gammaln(2 * j + 1)
        - j * np.log(2.0)
        - gammaln(j + 1)
        + xlogy(j, np.tanh(r))
    )
    # (-1)^j (-tanh r)^j = tanh^j r: every even amplitude is non-negative
    sign = np.ones(j.shape)
    return log_amp, sign


def _raw_amplitudes(spec: FieldSpec, cutoff: int) -> np.ndarray:
    c = np.zeros(cutoff + 1, dtype=complex)
    if spec.kind == "vacuum" or (spec.kind in ("coherent", "squeezed") and spec.mean == 0):
        c[0] = 1.0
    elif spec.kind == "fock":
        if spec.n > cutoff:
            raise ConfigurationError(f"Fock state |{spec.n}> exceeds cutoff {cutoff}")
        c[spec.n] = 1.0
    elif spec.kind == "coherent":
        j = np.arange(cutoff + 1)
        c[:] = np.exp(0.5 * _coherent_log(spec.mean, j) + 1j * spec.phase * j)
    elif spec.kind == "squeezed":
        j = np.arange(cutoff // 2 + 1)
        log_amp, sign = _squeezed_log(spec.mean, j)
        c[0::2] = sign * np.exp(log_amp)
    else:
        amps = np.asarray(spec.amplitudes, dtype=complex)
        if amps.size > cutoff + 1 and np.any(amps[cutoff + 1:] != 0):
            raise ConfigurationError(
                f"custom amplitudes have {amps.size} entries, cutoff allows {cutoff + 1}"
            )
        amps = amps[: cutoff + 1]
        norm = np.sum(np.abs(amps) ** 2)
        if norm == 0:
            raise ConfigurationError("custom amplitudes are all zero")
        c[: amps.size] = amps / np.sqrt(norm)
    return c


def field_state(spec: FieldSpec, cutoff: int) -> FieldState:
    """Amplitudes of ``spec`` truncated to ``cutoff`` and renormalized."""
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    raw = _raw_amplitudes(spec, cutoff)
    kept = float(np.sum(np.abs(raw) ** 2))
    tail = max(0.0, 1.0 - kept)
    notes = []
    if tail > TAIL_TOLERANCE:
        msg = (f"{spec.kind} field (mean {spec.mean}) truncated at {cutoff}: "
               f"discarded tail mass {tail:.3g}")
        warnings.warn(msg, TruncationWarning, stacklevel=3)
        notes.append(msg)
    return FieldState(raw / np.sqrt(kept), tail, spec, notes)


def coherent_amplitudes(mean: float, phase: float = 0.0, cutoff: int = 0) -> np.ndarray:
    return field_state(FieldSpec.coherent(mean, phase), cutoff).amplitudes


def squeezed_amplitudes(mean: float, cutoff: int = 0) -> np.ndarray:
    return field_state(FieldSpec.squeezed(mean), cutoff).amplitudes


def suggest_cutoff(spec: FieldSpec, tol: float = TAIL_TOLERANCE, limit: int = 20000) -> int:
    """Smallest cutoff whose discarded tail mass is at most ``tol``."""
    if spec.kind == "vacuum" or (spec.kind in ("coherent", "squeezed") and spec.mean == 0):
        return 0
    if spec.kind == "fock":
        return spec.n
    if spec.kind == "custom":
        amps = np.abs(np.asarray(spec.amplitudes))
        return int(np.nonzero(amps)[0].max())
    if spec.kind == "coherent":
        j = np.arange(limit + 1)
        probs = np.exp(_coherent_log(spec.mean, j))
    else:
        j = np.arange(limit // 2 + 1)
        log_amp, _ = _squeezed_log(spec.mean, j)
        probs = np.zeros(limit + 1)
        probs[0::2] = np.exp(2 * log_amp)
    tail = 1.0 - np.cumsum(probs)
    hits = np.nonzero(tail <= tol)[0]
    if hits.size == 0:
        raise ConfigurationError(f"no cutoff below {limit} reaches tail mass {tol}")
    return int(hits[0])


def build_initial(e: ElectronicSpec, f1: FieldSpec, f2: FieldSpec,
                  trunc: Truncation) -> EnvelopeDensityMatrix:
    """Pure product state |M> x |P> x |C> as an envelope density matrix."""
    for spec, limit, name in ((f1, trunc.k_max, "field 1"), (f2, trunc.m_max, "field 2")):
        if spec.cutoff is not None and spec.cutoff > limit:
            raise ConfigurationError(
                f"{name} cutoff {spec.cutoff} exceeds truncation limit {limit}"
            )
    s1 = field_state(f1, f1.cutoff if f1.cutoff is not None else trunc.k_max)
    s2 = field_state(f2, f2.cutoff if f2.cutoff is not None else trunc.m_max)
    c1 = np.zeros(trunc.k_max + 1, dtype=complex)
    c2 = np.zeros(trunc.m_max + 1, dtype=complex)
    c1[: s1.amplitudes.size] = s1.amplitudes
    c2[: s2.amplitudes.size] = s2.amplitudes
    psi = np.einsum("n,k,m->nkm", e.amplitudes, c1, c2).ravel()
    p = EnvelopeDensityMatrix(trunc, np.outer(psi, psi.conj()), 0.0)
    p.metadata["tail_mass"] = (s1.tail_mass, s2.tail_mass)
    p.metadata["warnings"] = s1.warnings + s2.warnings
    return p
