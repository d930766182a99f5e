import numpy as np
import pytest

from lambdasim.evolution import TimeGrid
from lambdasim.fock_basis import Truncation
from lambdasim.initial_states import ElectronicSpec, FieldSpec
from lambdasim.master_equation import LossConfig, SystemConfig
from lambdasim.spectra import (Spectrum, SweepConfig, absorption_maxima, analytic_qpol,
                               default_delta_grid, eit_sweep, splitting_estimate, sweep_point)


@pytest.mark.parametrize("spec, value", [(FieldSpec.coherent(100), 7.06), (FieldSpec.coherent(50), 4.99),
                                         (FieldSpec.squeezed(100), 5.58), (FieldSpec.squeezed(50), 3.91)])
def test_splitting_values(spec, value):
    assert abs(splitting_estimate(spec, 1.0) - value) <= 0.01


def test_splitting_vacuum_and_scaling():
    assert splitting_estimate(FieldSpec.vacuum()) == 0.0
    assert splitting_estimate(FieldSpec.fock(4), 2.0) == pytest.approx(2.0 / np.sqrt(2) * 2)


def test_analytic_examples():
    assert analytic_qpol(0.0, FieldSpec.coherent(2), FieldSpec.coherent(5), 1, 1, 0.5) == 0
    for d in (-2.0, 0.3, 1.7):
        assert analytic_qpol(d, FieldSpec.vacuum(), FieldSpec.coherent(5), 1, 1, 0.5) == 0
    assert analytic_qpol(1.0, FieldSpec.fock(1), FieldSpec.fock(1), 1.0, 1.0, 1.0) == \
        pytest.approx(1j / np.sqrt(2), abs=1e-15)


def test_analytic_pole():
    with pytest.raises(ZeroDivisionError):
        analytic_qpol(1.0, FieldSpec.fock(1), FieldSpec.fock(1), 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        analytic_qpol(1.0, FieldSpec.fock(1), FieldSpec.fock(1), 1.0, 1.0, -1.0)


def test_analytic_symmetry():
    grid = np.linspace(-10, 10, 41)
    probe, coupling = FieldSpec.coherent(3), FieldSpec.squeezed(5)
    vals = np.array([analytic_qpol(d, probe, coupling, 1.0, 1.0, 0.7) for d in grid])
    np.testing.assert_allclose(vals.real, -vals.real[::-1], atol=1e-14)
    np.testing.assert_allclose(vals.imag, vals.imag[::-1], atol=1e-14)


def test_default_grid():
    g = default_delta_grid()
    assert g[0] == -10 and g[-1] == 10 and 0.0 in g
    assert len(g) == 101 + 10
    np.testing.assert_allclose(np.diff(g[5:-5]), 0.1)


def small_cfg(probe, coupling=FieldSpec.vacuum(), deltas=(0.0,), trunc=Truncation(6, 6), t_end=20.0):
    return SweepConfig(deltas, SystemConfig(), LossConfig(), ElectronicSpec(), probe, coupling, trunc,
                       TimeGrid(t_end, 0.02), (0.0, t_end))


def test_vacuum_probe_absorbs_nothing(quiet):
    spec = eit_sweep(small_cfg(FieldSpec.vacuum(), FieldSpec.coherent(1.0), (-2.0, 0.0, 1.5)), workers=1)
    assert np.all(spec.absorption == 0)


def test_squeezed_probe_absorbs_less_without_coupling(quiet):
    # with field 2 empty and no losses at most one photon reaches field 2
    coh = sweep_point(small_cfg(FieldSpec.coherent(2.0), trunc=Truncation(14, 2), t_end=100.0), 0.0)
    sq = sweep_point(small_cfg(FieldSpec.squeezed(2.0), trunc=Truncation(30, 2), t_end=100.0), 0.0)
    assert sq[0] < coh[0]


def test_pool_preserves_order(quiet):
    cfg = small_cfg(FieldSpec.coherent(1.0), FieldSpec.coherent(1.0), (2.0, -1.0, 0.0, 0.5),
                    Truncation(4, 4), 4.0)
    serial = eit_sweep(cfg, workers=1)
    pooled = eit_sweep(cfg, workers=2)
    np.testing.assert_array_equal(serial.delta, [2.0, -1.0, 0.0, 0.5])
    np.testing.assert_array_equal(serial.absorption, pooled.absorption)
    assert np.all((serial.absorption >= 0) & (serial.absorption <= 1))


def test_unreliable_points_flagged(quiet):
    cfg = small_cfg(FieldSpec.coherent(3.0), FieldSpec.coherent(1.0), (0.0,), Truncation(2, 2), 2.0)
    spec = eit_sweep(cfg, workers=1)
    assert not spec.reliable[0] and spec.reasons


def test_window_validation():
    with pytest.raises(ValueError):
        SweepConfig((0.0,), SystemConfig(), LossConfig(), ElectronicSpec(), FieldSpec.vacuum(),
                    FieldSpec.vacuum(), Truncation(1, 1), TimeGrid(10.0), (0.0, 20.0))


def test_absorption_maxima():
    d = np.linspace(-5, 5, 41)
    a = np.exp(-(d - 3) ** 2) + np.exp(-(d + 3) ** 2) + 0.1 * np.exp(-d ** 2)
    spec = Spectrum(d, a, 0 * d, 0 * d, np.ones(d.size, bool))
    np.testing.assert_allclose(absorption_maxima(spec), [-3.0, 3.0])
