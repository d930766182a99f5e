import warnings

import numpy as np
import pytest

from lambdasim.evolution import (Propagator, TimeGrid, evolve, find_plateau, oracle_deviation,
                                 step)
from lambdasim.fock_basis import EnvelopeDensityMatrix, Truncation, flatten
from lambdasim.initial_states import ElectronicSpec, FieldSpec, build_initial
from lambdasim.master_equation import LossConfig, SystemConfig, derivative
from lambdasim.observables import ObservableSeries

from conftest import random_density


def fock_state(trunc, idx):
    p = EnvelopeDensityMatrix.zeros(trunc)
    p[idx, idx] = 1.0
    return p


def test_time_grid():
    g = TimeGrid(1.0, 0.1, 2)
    assert g.n_steps == 10
    np.testing.assert_allclose(g.record_times(), [0, 0.2, 0.4, 0.6, 0.8, 1.0])
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0.3)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0.0)


def test_ground_state_stationary():
    t = Truncation(2, 2)
    p0 = fock_state(t, (1, 0, 0))
    series, final, diag = evolve(p0, SystemConfig(), LossConfig(0.1, 0.1, 0.1, 0.1, 0.1),
                                 TimeGrid(2.0, 0.01, 10), ["populations"])
    assert np.all(series["O1"] == 1.0)
    assert not diag.unreliable


def test_rabi_populations():
    t = Truncation(2, 2)
    series, _, _ = evolve(fock_state(t, (1, 1, 0)), SystemConfig(), LossConfig(),
                          TimeGrid(10.0, 0.01, 10), ["populations"])
    ts = series["t"]
    np.testing.assert_allclose(series["O3"], 0.5 * np.sin(ts) ** 2, atol=1e-8)
    np.testing.assert_allclose(series["O2"], 0.25 * (1 - np.cos(ts)) ** 2, atol=1e-8)
    np.testing.assert_allclose(series["O1"], 0.25 * (1 + np.cos(ts)) ** 2, atol=1e-8)


def test_cavity_decay_of_single_photon():
    # level 2 with no field-2 photon cannot absorb: pure amplitude damping
    t = Truncation(1, 1)
    p0 = fock_state(t, (2, 1, 0))
    series, _, _ = evolve(p0, SystemConfig(omega2=0.0), LossConfig(kappa1=0.3),
                          TimeGrid(5.0, 0.01, 50), ["photon_statistics"])
    np.testing.assert_allclose(series["W"][:, 1], np.exp(-0.3 * series["t"]), atol=1e-10)


def test_step_consistency_and_stationary():
    t = Truncation(2, 1)
    p = random_density(t, 1)
    sys, loss = SystemConfig(delta_p=0.3), LossConfig(r13=0.1, kappa1=0.05)
    d = derivative(p, 0.2, sys, loss)
    for h in (1e-3, 1e-4):
        approx = (step(p, 0.2, sys, loss, h).data - p.data) / h
        assert np.max(np.abs(approx - d)) < 50 * h
    g = fock_state(t, (1, 0, 0))
    assert np.array_equal(step(g, 0.0, sys, loss, 0.1).data, g.data)


def test_richardson_local_error():
    t = Truncation(1, 1)
    p = random_density(t, 2)
    sys, loss = SystemConfig(delta_p=0.5), LossConfig(r13=0.1)
    errs = []
    for h in (0.2, 0.1):
        one = step(p, 0.0, sys, loss, h).data
        two = step(step(p, 0.0, sys, loss, h / 2), h / 2, sys, loss, h / 2).data
        errs.append(np.max(np.abs(one - two)))
    # local error O(h^5): halving h shrinks the gap ~32x
    assert 20 < errs[0] / errs[1] < 45


def test_fourth_order_convergence():
    t = Truncation(2, 2)
    p0 = build_initial(ElectronicSpec(), FieldSpec.fock(2), FieldSpec.vacuum(), t)
    sys, loss, T = SystemConfig(), LossConfig(), 4.0

    def final(dt):
        prop = Propagator(p0, sys, loss)
        prop.advance(dt, int(round(T / dt)))
        return prop.values

    ref = final(0.0125)
    e1 = np.max(np.abs(final(0.2) - ref))
    e2 = np.max(np.abs(final(0.1) - ref))
    assert 12 < e1 / e2 < 20


def test_lossless_purity():
    t = Truncation(3, 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p0 = build_initial(ElectronicSpec(), FieldSpec.coherent(1.0), FieldSpec.coherent(0.5), t)
    prop = Propagator(p0, SystemConfig(), LossConfig(), None, restrict_support=False)
    prop.advance(0.01, 10000)
    assert abs(prop.state().purity() - 1) < 1e-6


def test_cavity_losses_return_to_ground():
    t = Truncation(3, 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p0 = build_initial(ElectronicSpec(), FieldSpec.coherent(1.0), FieldSpec.coherent(1.0), t)
    series, _, _ = evolve(p0, SystemConfig(), LossConfig(kappa1=0.5, kappa2=0.5, r12=0.2), TimeGrid(40.0, 0.01, 100),
                          ["populations"], coherence_order=0)
    o1 = series["O1"]
    assert o1[-1] > 0.999
    # after the initial excitation the upper envelope only rises
    env = [o1[i:i + 20].max() for i in range(20, len(o1) - 20, 20)]
    assert all(b >= a - 1e-9 for a, b in zip(env, env[1:]))


@pytest.mark.parametrize("f1", [FieldSpec.coherent(1.5), FieldSpec.squeezed(1.5)])
@pytest.mark.parametrize("order", [None, 0, 1])
def test_restricted_support_is_exact(f1, order):
    t = Truncation(8, 4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p0 = build_initial(ElectronicSpec(), f1, FieldSpec.coherent(1.0), t)
    loss = LossConfig(0.02, 0.01, 0.05, 0.04, 0.01)
    a = Propagator(p0, SystemConfig(delta_p=0.3), loss, order, restrict_support=True)
    b = Propagator(p0, SystemConfig(delta_p=0.3), loss, order, restrict_support=False)
    a.advance(0.02, 100)
    b.advance(0.02, 100)
    rows, cols = np.indices((t.dim, t.dim)).reshape(2, -1)
    x, y = a.state().entries(rows, cols), b.state().entries(rows, cols)
    # the restricted run may know more exact zeros, never fewer values
    assert not np.any(np.isnan(x) & ~np.isnan(y))
    both = ~np.isnan(y)
    assert np.max(np.abs(x[both] - y[both])) <= 1e-15


def test_order_too_small_rejected():
    t = Truncation(1, 1)
    with pytest.raises(ValueError):
        evolve(fock_state(t, (1, 0, 0)), SystemConfig(), LossConfig(), TimeGrid(0.1),
               ["schmidt"], coherence_order=0)


def test_boundary_population_flags_run():
    t = Truncation(2, 2)
    p0 = fock_state(t, (1, 2, 0))
    _, _, diag = evolve(p0, SystemConfig(), LossConfig(), TimeGrid(0.1, 0.01), ["populations"])
    assert diag.unreliable and "boundary" in diag.reasons[0]


def test_snapshots():
    t = Truncation(1, 1)
    series, _, _ = evolve(fock_state(t, (1, 1, 0)), SystemConfig(), LossConfig(),
                          TimeGrid(1.0, 0.01, 50), ["populations"], snapshot_times=[0.37])
    snap = series.snapshots[0.37]
    assert snap.time == pytest.approx(0.37)


def test_find_plateau():
    s = ObservableSeries(("populations",))
    for t in np.arange(0, 200, 1.0):
        s.append({"t": t, "O1": 1 - np.exp(-t / 5)})
    t0 = find_plateau(s, window=50, tol=1e-4)
    assert t0 is not None and 40 < t0 < 50
    s2 = ObservableSeries(("populations",))
    for t in np.arange(0, 200, 1.0):
        s2.append({"t": t, "O1": np.sin(t)})
    assert find_plateau(s2) is None


def test_oracle_deviation_small_case():
    t = Truncation(1, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p0 = build_initial(ElectronicSpec(0.6, 0, 0.8), FieldSpec.coherent(0.5),
                           FieldSpec.coherent(0.5), t)
    dev = oracle_deviation(p0, SystemConfig(delta_p=1.0), LossConfig(r13=0.1, kappa1=0.1), 1.0, 1e-3)
    assert dev < 1e-8
