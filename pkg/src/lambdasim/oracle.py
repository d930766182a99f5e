"""Independent reference propagators for small spaces.

Everything here is built from operators: a lab-frame RWA Hamiltonian,
explicit jump operators and the textbook Lindblad dissipator. Nothing is
shared with the term-by-term envelope equations, so agreement between the
two is a genuine check.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .fock_basis import Truncation

MAX_DIM = 48
DEPHASING_CONVENTIONS = ("halved", "literal", "matched")

# bandgap used for lab-frame propagation; the envelope equations do not depend
# on it, and a small value keeps the lab-frame RK4 accurate at dt = 1e-3
ORACLE_OMEGA31 = 3.0

# channel name -> (probe detuning, loss rates, dephasing convention of the oracle)
STANDARD_CHANNELS = {
    "lossless": (0.0, {}, "matched"),
    "detuned": (2.0, {}, "matched"),
    "cavity": (0.0, {"kappa1": 0.1, "kappa2": 0.1}, "matched"),
    "radiative": (0.0, {"r13": 0.1, "r23": 0.1, "r12": 0.02}, "matched"),
    "dephasing_matched": (0.0, {"g31": 0.01, "g32": 0.01, "g21": 0.002}, "matched"),
    "dephasing_halved": (0.0, {"g31": 0.01, "g32": 0.01, "g21": 0.002}, "halved"),
    "dephasing_literal": (0.0, {"g31": 0.01, "g32": 0.01, "g21": 0.002}, "literal"),
}


@dataclass
class GenericLindbladSpec:
    """Lab-frame H plus jump operators; ``energies`` is the diagonal of H0."""

    truncation: Truncation
    hamiltonian: np.ndarray
    energies: np.ndarray
    jump_ops: list = field(default_factory=list)  # (name, rate, operator)

    def __post_init__(self):
        H = self.hamiltonian
        if np.max(np.abs(H - H.conj().T), initial=0.0) > 1e-12:
            raise ValueError("Hamiltonian is not Hermitian")
        for name, rate, _ in self.jump_ops:
            if rate < 0:
                raise ValueError(f"negative rate for {name}")

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def scaled_jumps(self) -> list:
        return [np.sqrt(rate) * L for _, rate, L in self.jump_ops if rate > 0]


def _mode_ops(trunc: Truncation):
    """Projectors |n><n'| and ladder operators on the n (x) k (x) m space."""
    K1, M1 = trunc.k_max + 1, trunc.m_max + 1
    a = np.diag(np.sqrt(np.arange(1, K1)), 1)
    b = np.diag(np.sqrt(np.arange(1, M1)), 1)
    Ik, Im, Ie = np.eye(K1), np.eye(M1), np.eye(3)

    def sigma(i, j):
        s = np.zeros((3, 3))
        s[i - 1, j - 1] = 1.0
        return s

    def kron3(e, f1, f2):
        return np.kron(np.kron(e, f1), f2)

    return sigma, kron3, a, b, Ie, Ik, Im


def lab_energies(sys, trunc: Truncation, omega31: float | None = None) -> np.ndarray:
    """Free energies E_n + k w1 + m w2 realizing the requested detunings.

    The photon frequencies are w1 = w31 + delta_p and w2 = w32 + delta_c,
    which reproduces the sign of the detuning phases in the envelope equations.
    """
    w31 = sys.omega31 if omega31 is None else omega31
    w21 = sys.omega21
    w32 = w31 - w21
    w1 = w31 + sys.delta_p
    w2 = w32 + sys.delta_c
    En = np.array([0.0, w21, w31])
    n, k, m = np.indices(trunc.tensor_shape).reshape(3, -1)
    return En[n] + k * w1 + m * w2


def _dephasing_ops(loss, convention: str, trunc: Truncation, sigma, kron3, Ik, Im) -> list:
    gam = {(3, 1): loss.g31, (3, 2): loss.g32, (2, 1): loss.g21}
    proj = [kron3(sigma(n, n), Ik, Im) for n in (1, 2, 3)]
    if convention in ("literal", "halved"):
        scale = 1.0 if convention == "literal" else 0.5
        return [(f"g{i}{j}", scale * g, proj[i - 1] - proj[j - 1])
                for (i, j), g in gam.items() if g > 0]
    if convention == "matched":
        # diagonal jumps sum_a l_a(n)|n><n| damp rho_nn' at
        # 0.5 sum_a (l_a(n) - l_a(n'))^2; choose l by classical MDS of 2*gamma
        d = np.zeros((3, 3))
        for (i, j), g in gam.items():
            d[i - 1, j - 1] = d[j - 1, i - 1] = 2.0 * g
        J = np.eye(3) - 1.0 / 3.0
        G = -0.5 * J @ d @ J
        w, U = np.linalg.eigh(G)
        if w.min() < -1e-12 * max(1.0, w.max()):
            raise ValueError("dephasing rates admit no diagonal Lindblad realization "
                             "(sqrt of rates violates the triangle inequality)")
        ops = []
        for lam, u in zip(w, U.T):
            if lam > 1e-15:
                L = sum(u[n] * proj[n] for n in range(3))
                ops.append((f"dephasing_mode{len(ops)}", float(lam), L))
        return ops
    raise ValueError(f"unknown dephasing convention {convention!r}")


def build_generic(sys, loss, trunc: Truncation, dephasing: str = "halved",
                  omega31: float | None = None) -> GenericLindbladSpec:
    """Dense H and jump operators on the full composite basis.

    ``dephasing`` selects how the dephasing rates map to jump operators:
    ``literal`` uses sqrt(g)(|i><i| - |j><j|), ``halved`` the same with g/2,
    ``matched`` diagonal operators reproducing -g_nn' p on every coherence.
    """
    if trunc.dim > MAX_DIM:
        raise ValueError(f"oracle limited to D <= {MAX_DIM}, got {trunc.dim}")
    sigma, kron3, a, b, Ie, Ik, Im = _mode_ops(trunc)
    E = lab_energies(sys, trunc, omega31)
    g1 = sys.omega1 / np.sqrt(2.0)
    g2 = sys.omega2 / np.sqrt(2.0)
    # RWA coupling: absorbing a photon lifts 1 -> 3 or 2 -> 3
    V = -g1 * kron3(sigma(3, 1), a, Im) - g2 * kron3(sigma(3, 2), Ik, b)
    H = np.diag(E).astype(complex) + V + V.conj().T

    jumps = []
    if loss.kappa1 > 0:
        jumps.append(("kappa1", loss.kappa1, kron3(Ie, a, Im)))
    if loss.kappa2 > 0:
        jumps.append(("kappa2", loss.kappa2, kron3(Ie, Ik, b)))
    for name, (i, j) in (("r13", (1, 3)), ("r23", (2, 3)), ("r12", (1, 2))):
        rate = getattr(loss, name)
        if rate > 0:
            jumps.append((name, rate, kron3(sigma(i, j), Ik, Im)))
    jumps += _dephasing_ops(loss, dephasing, trunc, sigma, kron3, Ik, Im)
    jumps = [(name, float(rate), L.astype(complex)) for name, rate, L in jumps]
    return GenericLindbladSpec(trunc, H, E, jumps)


def lindblad_rhs(spec: GenericLindbladSpec, rho: np.ndarray) -> np.ndarray:
    """-i[H, rho] + sum_L (L rho L^+ - {L^+ L, rho}/2)."""
    jumps = spec.scaled_jumps()
    # anticommutator folded into H_eff = H - (i/2) sum L^+ L
    Heff = spec.hamiltonian - 0.5j * sum((L.conj().T @ L for L in jumps),
                                         np.zeros_like(spec.hamiltonian))
    return _rhs(Heff, jumps, rho)


def _rhs(Heff, jumps, rho):
    out = -1j * (Heff @ rho) + 1j * (rho @ Heff.conj().T)
    for L in jumps:
        out += L @ rho @ L.conj().T
    return out


def liouvillian(spec: GenericLindbladSpec) -> np.ndarray:
    """Superoperator acting on row-major vec(rho)."""
    D = spec.dim
    I = np.eye(D)
    H = spec.hamiltonian
    # vec(A X B) = kron(A, B^T) vec(X) for row-major flattening
    S = -1j * (np.kron(H, I) - np.kron(I, H.T))
    for L in spec.scaled_jumps():
        LdL = L.conj().T @ L
        S += np.kron(L, L.conj()) - 0.5 * (np.kron(LdL, I) + np.kron(I, LdL.T))
    return S


def frame_transform(rho_lab: np.ndarray, t: float, energies: np.ndarray) -> np.ndarray:
    """Envelope p[a, b] = rho[a, b] exp(+i (E_a - E_b) t)."""
    # phases from energy differences keep the diagonal exactly unchanged
    return rho_lab * np.exp(1j * (energies[:, None] - energies[None, :]) * t)


def to_lab(p: np.ndarray, t: float, energies: np.ndarray) -> np.ndarray:
    return frame_transform(p, -t, energies)


def envelope_derivative(spec: GenericLindbladSpec, p: np.ndarray, t: float) -> np.ndarray:
    """d p / dt obtained through the lab frame."""
    E = spec.energies
    rho = to_lab(p, t, E)
    drho = lindblad_rhs(spec, rho)
    # p = rho e^{i w t}  =>  dp = (drho + i w rho) e^{i w t}
    return frame_transform(drho + 1j * (E[:, None] - E[None, :]) * rho, t, E)


def evolve_generic(spec: GenericLindbladSpec, rho0: np.ndarray, t_end: float, dt: float,
                   record_every: int = 1, method: str = "rk4"):
    """Lab-frame propagation; returns (times, stack of rho at record steps)."""
    nsteps = int(round(t_end / dt))
    if abs(nsteps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError("t_end must be an integer multiple of dt")
    rho = np.array(rho0, dtype=complex)
    times, states = [0.0], [rho.copy()]
    if method == "expm":
        D = spec.dim
        P = expm(liouvillian(spec) * dt)
        vec = rho.ravel()
        for i in range(1, nsteps + 1):
            vec = P @ vec
            if i % record_every == 0:
                times.append(i * dt)
                states.append(vec.reshape(D, D).copy())
    elif method == "rk4":
        jumps = spec.scaled_jumps()
        Heff = spec.hamiltonian - 0.5j * sum((L.conj().T @ L for L in jumps),
                                             np.zeros_like(spec.hamiltonian))
        f = lambda r: _rhs(Heff, jumps, r)
        for i in range(1, nsteps + 1):
            k1 = f(rho)
            k2 = f(rho + 0.5 * dt * k1)
            k3 = f(rho + 0.5 * dt * k2)
            k4 = f(rho + dt * k3)
            rho = rho + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if i % record_every == 0:
                times.append(i * dt)
                states.append(rho.copy())
    else:
        raise ValueError(f"unknown method {method!r}")
    return np.array(times), np.stack(states)


def three_state_rabi(t, omega1: float = 1.0, omega2: float = 1.0):
    """Populations (O1, O2, O3) starting from |1,1,0>, lossless and resonant.

    The state stays in span{|1,1,0>, |3,0,0>, |2,0,1>}; with couplings
    g_i = Omega_i / sqrt2 the dark combination g2|1,1,0> - g1|2,0,1> is frozen
    and the bright one oscillates at G = sqrt(g1^2 + g2^2).
    """
    t = np.asarray(t, dtype=float)
    g1 = omega1 / np.sqrt(2.0)
    g2 = omega2 / np.sqrt(2.0)
    G = np.hypot(g1, g2)
    c = np.cos(G * t)
    a1 = (g2**2 + g1**2 * c) / G**2
    a2 = g1 * g2 * (c - 1.0) / G**2
    a3 = g1 * np.sin(G * t) / G
    return a1**2, a2**2, a3**2


def fock_decay_occupation(t, kappa: float):
    """Probability of still holding the photon of a decaying single-photon state."""
    return np.exp(-kappa * np.asarray(t, dtype=float))
