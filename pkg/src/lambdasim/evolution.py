"""Fixed-step RK4 propagation of the envelope with observable recording."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .fock_basis import (BandedDensityMatrix, EnvelopeDensityMatrix, basis_labels,
                         element_set, occupied_classes, reduce_support)
from .master_equation import CompiledGenerator, LossConfig, SystemConfig, derivative
from .observables import DEFAULT_PROBES, ObservableSeries, measure, required_order

TRACE_LIMIT = 1e-3
BOUNDARY_LIMIT = 1e-2
EIGEN_DIM_LIMIT = 300
DENSE_FRACTION = 0.6


@dataclass(frozen=True)
class TimeGrid:
    t_end: float
    dt: float = 0.01
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be an integer >= 1")
        n = self.t_end / self.dt
        if abs(n - round(n)) > 1e-6:
            raise ValueError(f"t_end={self.t_end} is not a whole number of steps dt={self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def record_times(self) -> np.ndarray:
        idx = np.arange(0, self.n_steps + 1, self.record_every)
        return idx * self.dt


@dataclass
class RunDiagnostics:
    max_trace_error: float = 0.0
    max_hermiticity_error: float = 0.0
    min_eigenvalue_estimate: float = np.inf
    boundary_population: float = 0.0
    reasons: list = field(default_factory=list)

    @property
    def unreliable(self) -> bool:
        return bool(self.reasons)

    def finalize(self) -> "RunDiagnostics":
        self.reasons = []
        if not np.isfinite(self.max_trace_error) or self.max_trace_error > TRACE_LIMIT:
            self.reasons.append(f"trace error {self.max_trace_error:.3g} > {TRACE_LIMIT}")
        if self.boundary_population > BOUNDARY_LIMIT:
            self.reasons.append(
                f"population on truncation boundary {self.boundary_population:.3g} > {BOUNDARY_LIMIT}")
        return self

    def as_dict(self) -> dict:
        out = asdict(self)
        out["unreliable"] = self.unreliable
        return out


def step(p: EnvelopeDensityMatrix, t: float, sys: SystemConfig, loss: LossConfig,
         dt: float) -> EnvelopeDensityMatrix:
    """One classical RK4 step of the dense equations (reference speed)."""
    def f(data, tt):
        return derivative(EnvelopeDensityMatrix(p.truncation, data), tt, sys, loss)

    x = p.data
    k1 = f(x, t)
    k2 = f(x + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = f(x + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = f(x + dt * k3, t + dt)
    new = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return EnvelopeDensityMatrix(p.truncation, new, t + dt, dict(p.metadata))


class Propagator:
    """Holds the state in the generator's layout and advances it in place.

    With ``restrict_support`` only the element classes occupied at t = 0 are
    propagated; the others are exactly zero for all times.
    """

    def __init__(self, p0, sys: SystemConfig, loss: LossConfig, order: int | None = None,
                 restrict_support: bool = True):
        self.truncation = trunc = p0.truncation
        if isinstance(p0, BandedDensityMatrix):
            if order is not None and p0.order != order:
                raise ValueError("banded initial state tracks a different element set")
            order, support = p0.order, p0.support
        else:
            support = occupied_classes(p0) if restrict_support else None
        support = reduce_support(trunc, order, support)
        if order is None and support is not None:
            # the dense kernel is faster once most elements are tracked anyway
            if element_set(trunc, None, support).size > DENSE_FRACTION * trunc.dim ** 2:
                support = None
        self.generator = CompiledGenerator(trunc, sys, loss, order, support)
        self.order = order
        self.support = support
        self.metadata = dict(p0.metadata)
        self.t = float(p0.time)
        if isinstance(p0, BandedDensityMatrix):
            if p0.support != support:
                p0 = p0.to_dense(fill=0.0)
            else:
                vals = p0.values.reshape(self.generator.shape)
                self.values = np.ascontiguousarray(vals, dtype=complex).copy()
        if not isinstance(p0, BandedDensityMatrix):
            self.values = self.generator.gather(p0)

    @property
    def size(self) -> int:
        return self.generator.size

    def advance(self, dt: float, n: int = 1) -> None:
        for _ in range(n):
            self.values = self.generator.rk4_step(self.values, self.t, dt)
            self.t += dt

    def state(self):
        """Current state; dense when every element is tracked (a copy)."""
        if self.generator.full:
            return EnvelopeDensityMatrix(self.truncation, self.values.copy(), self.t,
                                         dict(self.metadata))
        out = BandedDensityMatrix(self.truncation, self.order, self.values.copy(), self.t,
                                  self.support)
        out.metadata = dict(self.metadata)
        return out


def _boundary_mask(trunc) -> np.ndarray:
    _, k, m = basis_labels(trunc)
    return (k == trunc.k_max) | (m == trunc.m_max)


def _update_diagnostics(diag: RunDiagnostics, p, trace0: float, boundary: np.ndarray) -> None:
    d = np.arange(p.truncation.dim)
    diag_vals = p.entries(d, d)
    diag.max_trace_error = max(diag.max_trace_error, abs(diag_vals.sum().real - trace0))
    diag.max_hermiticity_error = max(diag.max_hermiticity_error, p.hermiticity_error())
    diag.boundary_population = max(diag.boundary_population,
                                   float(diag_vals.real[boundary].sum()))
    if isinstance(p, EnvelopeDensityMatrix) and p.dim <= EIGEN_DIM_LIMIT:
        h = 0.5 * (p.data + p.data.conj().T)
        low = float(np.linalg.eigvalsh(h)[0])
    else:
        low = float(diag_vals.real.min())
    diag.min_eigenvalue_estimate = min(diag.min_eigenvalue_estimate, low)


def resolve_order(coherence_order, probes):
    """Map 'auto' to the smallest band the probes need; None means every element."""
    if coherence_order == "auto":
        return required_order(probes)
    if coherence_order in (None, "full"):
        return None
    order = int(coherence_order)
    if order < 0:
        raise ValueError("coherence order must be >= 0")
    return order


def evolve(p0, sys: SystemConfig, loss: LossConfig, grid: TimeGrid,
           probes=DEFAULT_PROBES, coherence_order="auto", snapshot_times=(),
           restrict_support=True, progress=None):
    """Integrate from ``p0`` over ``grid``; returns (series, final state, diagnostics).

    ``coherence_order`` picks the tracked element set: ``'auto'`` uses the
    smallest band the probes need, ``None`` tracks every element, an integer
    keeps |N_a - N_b| <= order. ``restrict_support`` additionally skips element
    classes that are empty at t = 0 (they stay exactly zero). Snapshots of the state are stored in
    ``series.snapshots`` at the steps nearest to ``snapshot_times``.
    """
    probes = tuple(probes)
    order = resolve_order(coherence_order, probes)
    if order is not None and order < required_order(probes):
        raise ValueError(f"probes {probes} need coherence order >= {required_order(probes)}")
    prop = Propagator(p0, sys, loss, order, restrict_support)
    series = ObservableSeries(probes)
    diag = RunDiagnostics()
    boundary = _boundary_mask(p0.truncation)
    trace0 = float(np.real(p0.trace()))
    snap_steps = {}
    for ts in snapshot_times:
        idx = int(round((ts - prop.t) / grid.dt))
        if not 0 <= idx <= grid.n_steps:
            raise ValueError(f"snapshot time {ts} outside the run")
        snap_steps.setdefault(idx, []).append(float(ts))

    def observe(i):
        state = prop.state()
        if i % grid.record_every == 0 or i == grid.n_steps:
            series.append(measure(state, probes, prop.t))
            _update_diagnostics(diag, state, trace0, boundary)
        for ts in snap_steps.get(i, ()):
            series.snapshots[ts] = state

    t0 = prop.t
    observe(0)
    for i in range(1, grid.n_steps + 1):
        prop.advance(grid.dt)
        prop.t = t0 + i * grid.dt  # no accumulated rounding in recorded times
        if i % grid.record_every == 0 or i in snap_steps or i == grid.n_steps:
            observe(i)
        if progress is not None:
            progress(i, grid.n_steps)
    return series, prop.state(), diag.finalize()


def find_plateau(series: ObservableSeries, keys=None, window: float = 50.0,
                 tol: float = 1e-4):
    """First recorded time after which every observable stays within ``tol``
    over a span of ``window`` time units; None when no such span exists."""
    times = series["t"]
    keys = list(keys) if keys is not None else [k for k in series.scalar_names() if k != "trace"]
    if len(times) < 2 or times[-1] - times[0] < window:
        return None
    data = np.stack([series[k] for k in keys])
    end = np.searchsorted(times, times + window - 1e-9, side="left")
    for i, j in enumerate(end):
        if j >= len(times):
            break
        seg = data[:, i:j + 1]
        if np.all(seg.max(axis=1) - seg.min(axis=1) < tol):
            return float(times[i])
    return None


def oracle_deviation(p0, sys: SystemConfig, loss: LossConfig, t_end: float, dt: float,
                     dephasing: str = "matched", checkpoints: int = 10) -> float:
    """Largest elementwise gap between the envelope propagator and the generic
    lab-frame oracle (transformed back to the envelope) at ``checkpoints``
    evenly spaced times up to ``t_end``."""
    from . import oracle

    grid = TimeGrid(t_end, dt)
    if grid.n_steps % checkpoints:
        raise ValueError("checkpoints must divide the number of steps")
    every = grid.n_steps // checkpoints
    p0 = p0.to_dense(fill=0.0) if isinstance(p0, BandedDensityMatrix) else p0
    spec = oracle.build_generic(sys, loss, p0.truncation, dephasing=dephasing,
                                omega31=oracle.ORACLE_OMEGA31)
    times, rhos = oracle.evolve_generic(spec, oracle.to_lab(p0.data, p0.time, spec.energies),
                                        t_end, dt, record_every=every)
    prop = Propagator(p0, sys, loss, None, restrict_support=False)
    worst = 0.0
    for i, t in enumerate(times):
        if i > 0:
            prop.advance(dt, every)
        ref = oracle.frame_transform(rhos[i], t + p0.time, spec.energies)
        worst = max(worst, float(np.abs(prop.values - ref).max()))
    return worst
