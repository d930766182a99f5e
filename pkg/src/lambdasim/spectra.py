"""Detuning sweeps, time-averaged absorption and polarization, analytic estimates."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import find_peaks

from .evolution import TimeGrid, evolve
from .fock_basis import Truncation
from .initial_states import ElectronicSpec, FieldSpec, build_initial, field_state, suggest_cutoff
from .master_equation import LossConfig, SystemConfig

WORKERS_ENV = "LAMBDASIM_WORKERS"
SWEEP_PROBES = ("populations", "quantum_polarization")
# tail mass accepted when an analytic formula needs a finite amplitude vector
ANALYTIC_TAIL = 1e-14


def default_delta_grid(inner: float = 5.0, outer: float = 10.0, fine: float = 0.1,
                       coarse: float = 1.0) -> np.ndarray:
    """Fine steps inside [-inner, inner], coarse steps out to +-outer."""
    n_fine = int(round(2 * inner / fine))
    core = np.linspace(-inner, inner, n_fine + 1)
    n_wing = int(round((outer - inner) / coarse))
    wing = inner + coarse * np.arange(1, n_wing + 1)
    grid = np.concatenate([-wing[::-1], core, wing])
    return np.round(grid, 12)


@dataclass(frozen=True)
class SweepConfig:
    """One evolve() per probe detuning; every other setting is shared."""

    delta_list: tuple
    system: SystemConfig
    losses: LossConfig
    electronic: ElectronicSpec
    probe: FieldSpec
    coupling: FieldSpec
    truncation: Truncation
    grid: TimeGrid = TimeGrid(100.0, 0.01)
    averaging_window: tuple = (0.0, 100.0)
    coherence_order: object = 0

    def __post_init__(self):
        object.__setattr__(self, "delta_list", tuple(float(d) for d in self.delta_list))
        t0, t1 = self.averaging_window
        if not 0.0 <= t0 < t1 <= self.grid.t_end + 1e-9:
            raise ValueError(f"averaging window {self.averaging_window} outside the run "
                             f"[0, {self.grid.t_end}]")
        if len(self.delta_list) == 0:
            raise ValueError("empty detuning list")


@dataclass
class Spectrum:
    delta: np.ndarray
    absorption: np.ndarray
    qpol_re: np.ndarray
    qpol_im: np.ndarray
    reliable: np.ndarray
    reasons: list = field(default_factory=list)

    def __post_init__(self):
        n = len(self.delta)
        for name in ("absorption", "qpol_re", "qpol_im", "reliable"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"spectrum column {name} has the wrong length")

    def rows(self):
        for d, a, re, im, ok in zip(self.delta, self.absorption, self.qpol_re,
                                    self.qpol_im, self.reliable):
            yield float(d), float(a), float(re), float(im), bool(ok)

    def value_at(self, delta: float) -> float:
        idx = int(np.argmin(np.abs(self.delta - delta)))
        if abs(self.delta[idx] - delta) > 1e-9:
            raise KeyError(f"detuning {delta} not on the sweep grid")
        return float(self.absorption[idx])


def sweep_point(cfg: SweepConfig, delta: float):
    """Time-averaged (O3, Re PQ31, Im PQ31) and reliability for one detuning."""
    sys = replace(cfg.system, delta_p=float(delta))
    p0 = build_initial(cfg.electronic, cfg.probe, cfg.coupling, cfg.truncation)
    series, _, diag = evolve(p0, sys, cfg.losses, cfg.grid, SWEEP_PROBES,
                             coherence_order=cfg.coherence_order)
    # rectangle rule over every recorded sample in the window
    mask = series.window(*cfg.averaging_window)
    o3 = float(np.mean(series["O3"][mask]))
    re = float(np.mean(series["PQ31_re"][mask]))
    im = float(np.mean(series["PQ31_im"][mask]))
    return o3, re, im, not diag.unreliable, list(diag.reasons)


def _sweep_task(args):
    cfg, delta = args
    return sweep_point(cfg, delta)


def worker_count(n_tasks: int, workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    return max(1, min(workers, n_tasks))


def eit_sweep(cfg: SweepConfig, workers: int | None = None, progress=None) -> Spectrum:
    """Absorption spectrum as the time-averaged level-3 population.

    Points run in a process pool bounded by ``workers`` (default: the
    LAMBDASIM_WORKERS environment variable, else the CPU count). Results keep
    the order of ``cfg.delta_list``.
    """
    tasks = [(cfg, d) for d in cfg.delta_list]
    n = worker_count(len(tasks), workers)
    if n == 1:
        results = []
        for i, task in enumerate(tasks):
            results.append(_sweep_task(task))
            if progress is not None:
                progress(i + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_sweep_task, tasks))
    o3, re, im, ok, why = zip(*results)
    reasons = [f"delta={d}: {'; '.join(r)}" for d, r in zip(cfg.delta_list, why) if r]
    return Spectrum(np.array(cfg.delta_list), np.array(o3), np.array(re), np.array(im),
                    np.array(ok, dtype=bool), reasons)


def absorption_maxima(spectrum: Spectrum, count: int = 2) -> np.ndarray:
    """Detunings of the ``count`` highest local maxima, sorted ascending."""
    peaks, props = find_peaks(spectrum.absorption, height=0.0)
    order = np.argsort(props["peak_heights"])[::-1][:count]
    return np.sort(spectrum.delta[peaks[order]])


def _field_probabilities(spec: FieldSpec) -> np.ndarray:
    cutoff = spec.cutoff if spec.cutoff is not None else suggest_cutoff(spec, ANALYTIC_TAIL)
    return field_state(spec, cutoff).probabilities


def splitting_estimate(coupling: FieldSpec, omega1: float = 1.0) -> float:
    """Dressed-state splitting (omega1 / sqrt2) * sum_m |c_m|^2 sqrt(m), positive branch."""
    probs = _field_probabilities(coupling)
    return float(omega1 / np.sqrt(2.0) * np.dot(probs, np.sqrt(np.arange(probs.size))))


def analytic_qpol(delta_p: float, probe: FieldSpec, coupling: FieldSpec, omega1: float = 1.0,
                  omega2: float = 1.0, r13_tilde: float = 0.0) -> complex:
    """Weak-probe quantum polarization from a sum over probe and coupling photon numbers.

    ``r13_tilde`` is a phenomenological coherence decay; it belongs to this
    formula only and is not derived from the simulation's loss rates.
    """
    if r13_tilde < 0:
        raise ValueError("r13_tilde must be >= 0")
    if delta_p == 0:
        return 0j
    wp = _field_probabilities(probe)
    wc = _field_probabilities(coupling)
    k = np.arange(wp.size - 1)
    m = np.arange(wc.size)
    num = omega1 * delta_p * np.sqrt((k + 1) / 2.0) * wp[1:]
    den = omega2 ** 2 * (m + 1) / 2.0 - delta_p ** 2 - 1j * delta_p * r13_tilde
    # only terms with weight on both sides can hit a pole
    weight = np.outer(num != 0, wc != 0)
    if np.any(weight & (np.abs(den)[None, :] == 0)):
        raise ZeroDivisionError(f"delta_p={delta_p} sits on a pole; use r13_tilde > 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(weight, np.outer(num, wc) / den[None, :], 0.0)
    return complex(terms.sum())
