import warnings

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from lambdasim.fock_basis import Truncation, flatten
from lambdasim.initial_states import (ConfigurationError, ElectronicSpec, FieldSpec,
                                      TruncationWarning, build_initial, coherent_amplitudes,
                                      field_state, squeezed_amplitudes, squeezed_beta,
                                      suggest_cutoff)

# frozen from a 30-digit mpmath evaluation of the closed forms
COHERENT_MEAN1 = (0.60653065971263342, 0.60653065971263342, 0.4288819424803534)
SQUEEZED_MEAN2_EVEN = (0.75983568565159255, 0.43869133765083082, 0.31020161970069987)
BETA_MEAN10 = 6.4789024505237792


def test_coherent_vacuum_limit():
    np.testing.assert_allclose(coherent_amplitudes(0.0, cutoff=3), [1, 0, 0, 0])


def test_coherent_mean1_values():
    c = coherent_amplitudes(1.0, 0.0, cutoff=30)
    np.testing.assert_allclose(c[:3].real, COHERENT_MEAN1, rtol=1e-12)


def test_coherent_mean10_moment():
    c = coherent_amplitudes(10.0, cutoff=40)
    p = np.abs(c) ** 2
    assert abs(np.dot(np.arange(p.size), p) - 10.0) < 1e-4


def test_coherent_phase():
    c = coherent_amplitudes(2.0, np.pi / 3, cutoff=20)
    np.testing.assert_allclose(np.angle(c[1]), np.pi / 3)


def test_coherent_large_mean_no_overflow():
    c = coherent_amplitudes(400.0, cutoff=600)
    assert np.all(np.isfinite(c)) and abs(np.sum(np.abs(c) ** 2) - 1) < 1e-12


def test_squeezed_beta():
    assert squeezed_beta(0.0) == 1.0
    assert squeezed_beta(10.0) == pytest.approx(BETA_MEAN10, rel=1e-14)


def test_squeezed_values_and_odd_zero():
    c = squeezed_amplitudes(2.0, cutoff=200)
    np.testing.assert_allclose(c[0:6:2].real, SQUEEZED_MEAN2_EVEN, rtol=1e-10)
    assert np.all(c[1::2] == 0)


def test_squeezed_vacuum_limit():
    np.testing.assert_allclose(squeezed_amplitudes(0.0, cutoff=4), [1, 0, 0, 0, 0])


def test_squeezed_mean10_moment_at_cutoff_200():
    # stated tolerance 1e-3; the renormalized truncated mean is 9.99752
    p = np.abs(squeezed_amplitudes(10.0, cutoff=200)) ** 2
    assert abs(np.dot(np.arange(p.size), p) - 10.0) < 1e-3


def test_squeezed_mean10_moment_converges():
    p = np.abs(squeezed_amplitudes(10.0, cutoff=400)) ** 2
    assert abs(np.dot(np.arange(p.size), p) - 10.0) < 1e-6


def test_truncation_warning_and_tail_record():
    with pytest.warns(TruncationWarning):
        s = field_state(FieldSpec.coherent(5.0), 5)
    assert s.tail_mass > 1e-6
    assert abs(np.sum(s.probabilities) - 1) < 1e-12
    assert s.warnings


def test_suggest_cutoff():
    spec = FieldSpec.coherent(4.0)
    n = suggest_cutoff(spec, 1e-4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert field_state(spec, n).tail_mass <= 1e-4
        assert field_state(spec, n - 1).tail_mass > 1e-4


def test_electronic_normalization():
    with pytest.raises(ConfigurationError):
        ElectronicSpec(1.0, 1.0, 0.0)


def test_build_ground_vacuum():
    t = Truncation(2, 2)
    p = build_initial(ElectronicSpec(), FieldSpec.vacuum(), FieldSpec.vacuum(), t)
    assert np.count_nonzero(p.data) == 1 and p.data[0, 0] == 1


def test_build_fock():
    t = Truncation(2, 2)
    p = build_initial(ElectronicSpec(), FieldSpec.fock(1), FieldSpec.vacuum(), t)
    i = flatten((1, 1, 0), t)
    assert np.count_nonzero(p.data) == 1 and p.data[i, i] == 1


def test_build_coherent_coherence():
    t = Truncation(30, 0)
    p = build_initial(ElectronicSpec(), FieldSpec.coherent(1.0), FieldSpec.vacuum(), t)
    val = p[(1, 0, 0), (1, 1, 0)]
    assert val == pytest.approx(np.exp(-1.0), rel=1e-12)


def test_field_cutoff_beyond_truncation():
    spec = FieldSpec("coherent", mean=1.0, cutoff=5)
    with pytest.raises(ConfigurationError):
        build_initial(ElectronicSpec(), spec, FieldSpec.vacuum(), Truncation(3, 0))


def test_squeezed_tiny_mean():
    # the squeezing ratio underflows to zero; amplitudes must stay finite
    c = squeezed_amplitudes(1e-300, cutoff=10)
    assert c[0] == 1.0 and np.all(np.isfinite(c))


def test_squeezed_no_adjacent_products():
    t = Truncation(12, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = field_state(FieldSpec.squeezed(2.0), 12).amplitudes
    assert np.all(c[1:] * np.conj(c[:-1]) == 0)


@settings(max_examples=25, deadline=None)
@example("coherent", 0.0, "squeezed", 1.1754943508222875e-38, 0.0)
@given(st.sampled_from(["coherent", "squeezed", "fock"]), st.floats(0.0, 3.0),
       st.sampled_from(["coherent", "squeezed", "vacuum"]), st.floats(0.0, 2.0),
       st.floats(0, 2 * np.pi))
def test_build_is_pure_unit_trace(k1, m1, k2, m2, theta):
    f1 = FieldSpec.fock(int(m1)) if k1 == "fock" else FieldSpec(k1, mean=m1)
    f2 = FieldSpec(k2, mean=m2 if k2 != "vacuum" else 0.0)
    e = ElectronicSpec(np.cos(theta), 0.0, np.sin(theta) * 1j)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = build_initial(e, f1, f2, Truncation(6, 5))
    assert abs(p.trace() - 1) < 1e-9
    assert abs(p.purity() - 1) < 1e-8
    assert p.hermiticity_error() < 1e-15
