import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from roughfat.mesh import Plane
from roughfat.pffatigue import MaterialParams
from roughfat.pffatigue.constitutive import (DegenerateElementError, at1_w, degradation_g,
                                             degradation_g_prime, energy_split,
                                             fatigue_degradation_f2, fatigue_increment,
                                             isotropic_energy, principal_strains,
                                             shape_gradients, strain, tensile_energy,
                                             update_history)
from roughfat.pffatigue.material import (LoadSpec, MaterialError, alpha_T_estimate,
                                         basquin_slope, exponent_n, irwin_length,
                                         length_scale)

from oracles import uniaxial_tensile_fraction

MAT = MaterialParams.aisi4130()
MAT_PE = MaterialParams.aisi4130(Plane.PLANE_STRAIN)
strains = arrays(float, 3, elements=st.floats(-1e-2, 1e-2))


def test_material_preset_values():
    m = MAT
    assert m.Gc == pytest.approx(60.5**2 / 200e3 * 1000)
    assert m.E == 200e3 and m.sigma_c == 1121.0
    assert m.ell == pytest.approx(2.9)
    assert m.H_min == pytest.approx(3 * m.Gc / (16 * m.ell))
    assert m.alpha_e == pytest.approx(m.sigma_e**2 / (2 * m.E))
    assert m.n_exp == pytest.approx(exponent_n(m.basquin_b))
    assert m.model_strength == pytest.approx(math.sqrt(2 * m.E * m.H_min))
    d = m.to_dict()
    assert MaterialParams.from_dict(d) == m


def test_material_helpers():
    assert irwin_length(210e3, 18.3, 1121.0) == pytest.approx(210e3 * 18.3 / 1121**2)
    assert length_scale(210e3, 18.3, 1121.0) == pytest.approx(
        3 / 8 * irwin_length(210e3, 18.3, 1121.0))
    b = basquin_slope(485.9, 263.0)
    assert 485.9 * 1e6 ** (-b) == pytest.approx(263.0)
    assert b == pytest.approx(0.044432, rel=1e-4)
    assert exponent_n(b) == pytest.approx(11.1232, rel=1e-4)
    with pytest.raises(MaterialError):
        exponent_n(0.0)
    with pytest.raises(MaterialError):
        MAT.replace(nu=0.6)
    assert alpha_T_estimate(3000.0, 340.0, 1121.0, 11.0) > 0


def test_load_spec():
    ld = LoadSpec(300.0)
    assert ld.peak_stress == 300.0
    assert ld.with_amplitude(250.0).sigma_a == 250.0
    with pytest.raises(ValueError):
        LoadSpec(-1.0)


def test_shape_gradients_and_strain():
    xy = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    g, area = shape_gradients(xy)
    assert area == pytest.approx(1.0)
    assert np.allclose(g.sum(axis=0), 0.0)
    # u = (a x + b y, c x + d y)
    a, b, c, d = 1e-3, 2e-3, -1e-3, 4e-3
    u = np.column_stack([a * xy[:, 0] + b * xy[:, 1], c * xy[:, 0] + d * xy[:, 1]])
    e = strain(xy, u)
    assert np.allclose(e, [a, d, 0.5 * (b + c)])
    with pytest.raises(DegenerateElementError):
        shape_gradients(xy[[0, 2, 1]])


def test_uniaxial_plane_stress_fraction():
    sigma = 300.0
    e = np.array([sigma / MAT.E, -MAT.nu * sigma / MAT.E, 0.0])
    psi = tensile_energy(e, MAT)
    assert psi == pytest.approx(uniaxial_tensile_fraction(MAT.nu) * sigma**2 / (2 * MAT.E),
                                rel=1e-12)
    assert uniaxial_tensile_fraction(0.3) == pytest.approx(0.742857, rel=1e-5)


def test_pure_compression_has_no_tensile_energy():
    e = np.array([-1e-3, -2e-3, 0.0])
    assert tensile_energy(e, MAT_PE) == 0.0
    assert tensile_energy(np.array([1e-3, 2e-3, 0.0]), MAT_PE) == pytest.approx(
        isotropic_energy(principal_strains(np.array([1e-3, 2e-3, 0.0]), Plane.PLANE_STRAIN, 0.3),
                         MAT_PE.lame_lambda, MAT_PE.lame_mu))


def test_split_admits_zero_poisson():
    m0 = MaterialParams.aisi4130().replace(nu=0.0)
    e = np.array([1e-3, -1e-3, 0.0])
    p = principal_strains(e, m0.plane, 0.0)
    plus, minus = energy_split(p, m0)
    assert plus == pytest.approx(0.5 * m0.E * 1e-6)
    assert minus == pytest.approx(0.5 * m0.E * 1e-6)


@settings(max_examples=200, deadline=None)
@given(e=strains, plane_strain=st.booleans())
def test_split_partitions_energy(e, plane_strain):
    m = MAT_PE if plane_strain else MAT
    p = principal_strains(e, m.plane, m.nu)
    plus, minus = energy_split(p, m)
    full = isotropic_energy(p, m.lame_lambda, m.lame_mu)
    assert plus >= 0 and minus >= -1e-9 * max(full, 1.0)
    assert plus + minus == pytest.approx(full, rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(e=strains, d=arrays(float, 3, elements=st.floats(-1e-8, 1e-8)))
def test_split_is_continuous(e, d):
    m = MAT_PE
    a = tensile_energy(e, m)
    b = tensile_energy(e + d, m)
    scale = m.E * (np.abs(e).max() + 1e-8) * 1e-8 * 10
    assert abs(a - b) <= scale


@settings(max_examples=100, deadline=None)
@given(e=strains, k=st.floats(0.1, 10))
def test_split_is_quadratic(e, k):
    p = principal_strains(e, MAT.plane, MAT.nu)
    a, _ = energy_split(p, MAT)
    b, _ = energy_split(k * p, MAT)
    assert b == pytest.approx(k * k * a, rel=1e-9, abs=1e-15)


def test_degradation_functions():
    phi = np.array([0.0, 0.5, 1.0])
    assert np.allclose(degradation_g(phi), [1.0, 0.25, 0.0])
    assert np.allclose(degradation_g_prime(phi), [-2.0, -1.0, 0.0])
    assert np.allclose(at1_w(phi), phi)
    assert np.allclose(degradation_g([-0.1, 1.2]), [1.0, 0.0])  # clamped


def test_fatigue_f2():
    aT = 2.0
    assert np.allclose(fatigue_degradation_f2([0.0, 1.0, 2.0, 5.0], aT), [1.0, 0.25, 0.0, 0.0])


@settings(max_examples=100, deadline=None)
@given(a=st.floats(0, 10), b=st.floats(0, 10))
def test_f2_monotone_and_bounded(a, b):
    fa, fb = fatigue_degradation_f2(a, 4.0), fatigue_degradation_f2(b, 4.0)
    assert 0.0 <= fa <= 1.0
    if a <= b:
        assert fa >= fb


def test_fatigue_increment_gate_is_inclusive():
    an, ae, n = 0.5, 0.2, 3.0
    inc, hist = fatigue_increment(0.4, -1.0, an, ae, n)
    assert hist == pytest.approx(0.4)
    assert inc == pytest.approx((0.4 / an) ** n)
    inc, hist = fatigue_increment(0.2, -1.0, an, ae, n)
    assert inc == pytest.approx((0.2 / an) ** n)  # exactly at the gate
    inc, _ = fatigue_increment(0.19, -1.0, an, ae, n)
    assert inc == 0.0
    # the running maximum keeps the gate open
    inc, hist = fatigue_increment(0.1, -1.0, an, ae, n, delta_N=10, hist_max=0.4)
    assert hist == 0.4 and inc == pytest.approx(10 * (0.1 / an) ** n)


def test_fully_reversed_amplitude():
    inc, hist = fatigue_increment(1.0, -1.0, 1.0, 0.0, 1.0)
    assert hist == 1.0 and inc == 1.0
    inc, hist = fatigue_increment(1.0, 0.0, 1.0, 0.0, 1.0)
    assert hist == 0.5


@settings(max_examples=100, deadline=None)
@given(psi=arrays(float, 5, elements=st.floats(0, 10)),
       prev=arrays(float, 5, elements=st.floats(0, 10)))
def test_history_is_monotone_and_floored(psi, prev):
    h = update_history(psi, prev, MAT)
    assert np.all(h >= prev) and np.all(h >= psi) and np.all(h >= MAT.H_min)
