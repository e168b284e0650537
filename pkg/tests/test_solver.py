import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roughfat.mesh import Mesh, Tag, build_polished_mesh, strip_geometry, structured_strip_mesh
from roughfat.pffatigue import LoadSpec, MaterialParams
from roughfat.pffatigue.constitutive import fatigue_degradation_f2
from roughfat.pffatigue.solver import (ConvergenceError, Discretization, SimState, SolverError,
                                       Status, detect_failure, load_checkpoint, run_cycles,
                                       save_checkpoint, simulate, solve_damage,
                                       solve_displacement, staggered_step)

from oracles import scalar_fatigue_life, uniaxial_tensile_fraction

MAT = MaterialParams.aisi4130()


@pytest.fixture(scope="module")
def bar():
    m = structured_strip_mesh(2.0, 1.0, 8, 4)
    return m, Discretization(m, MAT)


def test_missing_supports_rejected():
    m = structured_strip_mesh(1.0, 1.0, 2, 2)
    tags = m.facet_tags.copy()
    tags[tags == int(Tag.LOAD)] = int(Tag.FREE)
    bad = Mesh(m.nodes, m.elements, m.facets, tags, m.facet_segments)
    with pytest.raises(SolverError):
        Discretization(bad, MAT)


def test_uniaxial_elastic_solution(bar):
    m, disc = bar
    sigma = 100.0
    u = solve_displacement(disc, np.zeros(m.n_nodes), sigma)
    ux, uy = u[0::2], u[1::2]
    x, y = m.nodes.T
    assert np.allclose(ux, sigma / MAT.E * x, atol=1e-12)
    # lateral contraction about the roller node
    slope = np.polyfit(y, uy, 1)[0]
    assert slope == pytest.approx(-MAT.nu * sigma / MAT.E, rel=1e-5)  # residual stiffness
    psi = disc.tensile_energy(u)
    assert np.allclose(psi, uniaxial_tensile_fraction(MAT.nu) * sigma**2 / (2 * MAT.E))
    assert disc.load_displacement(u) == pytest.approx(sigma / MAT.E * 2.0)


def test_cg_matches_direct(bar):
    m, disc = bar
    a = solve_displacement(disc, np.full(m.n_nodes, 0.3), 50.0, "direct")
    b = solve_displacement(disc, np.full(m.n_nodes, 0.3), 50.0, "cg")
    assert np.allclose(a, b, rtol=1e-7, atol=1e-14)


def test_homogeneous_damage_solution(bar):
    m, disc = bar
    H = np.full(m.n_elements, 4.0 * MAT.H_min)
    f = np.full(m.n_elements, 0.5)
    phi, clamped = solve_damage(disc, H, f)
    assert np.allclose(phi, 1.0 - 0.5 * MAT.H_min / H[0])
    assert clamped == 0
    # irreversibility: a higher lower bound wins
    lo = np.full(m.n_nodes, 0.95)
    phi2, clamped = solve_damage(disc, H, f, lo)
    assert np.all(phi2 >= 0.95) and clamped == m.n_nodes


@settings(max_examples=20, deadline=None)
@given(ratio=st.floats(1.0, 50.0), fval=st.floats(0.0, 1.0))
def test_damage_stays_in_unit_interval(ratio, fval):
    m = structured_strip_mesh(1.0, 1.0, 3, 3)
    disc = Discretization(m, MAT)
    rng = np.random.default_rng(int(ratio * 1000))
    H = MAT.H_min * (1 + (ratio - 1) * rng.random(m.n_elements))
    phi, _ = solve_damage(disc, H, np.full(m.n_elements, fval))
    assert np.all(phi >= 0) and np.all(phi <= 1)


def test_failure_detection_band_and_partial(bar):
    m, disc = bar
    x = m.nodes[:, 0]
    band = np.where(np.abs(x - 1.0) < 0.3, 1.0, 0.0)
    assert detect_failure(disc, band).trigger == "spanning_band"
    y = m.nodes[:, 1]
    partial = np.where((np.abs(x - 1.0) < 0.3) & (y < 0.6), 1.0, 0.0)
    assert not detect_failure(disc, partial).failed
    u = solve_displacement(disc, np.zeros(m.n_nodes), 100.0)
    ref = disc.load_displacement(u) / 20
    assert detect_failure(disc, np.zeros(m.n_nodes), u, ref).trigger == "displacement"


def test_staggered_nonconvergence_reported(bar):
    m, disc = bar
    with pytest.raises(ConvergenceError):
        staggered_step(disc, SimState.fresh(m, MAT), 900.0, max_iters=1)


@pytest.mark.parametrize("sigma,expected", [(340.0, 3177), (393.0, 131)])
def test_per_cycle_life_matches_scalar_oracle(sigma, expected):
    nf, _ = scalar_fatigue_life(sigma, MAT.E, MAT.nu, MAT.Gc, MAT.ell, MAT.alpha_T, MAT.n_exp,
                                MAT.sigma_e)
    assert nf == expected  # frozen oracle value
    out = simulate(structured_strip_mesh(1.0, 1.0, 1, 1), MAT, LoadSpec(sigma, cycle_jump=1),
                   adaptive=False)
    assert out.status is Status.FAILED
    assert out.n_cycles == nf


def test_below_endurance_survives_quickly():
    out = simulate(structured_strip_mesh(1.0, 1.0, 2, 2), MAT, LoadSpec(0.9 * MAT.sigma_e))
    assert out.status is Status.SURVIVED_CAP
    assert out.n_cycles == 10**6
    assert out.blocks == 1


def test_high_load_ratio_keeps_gate_closed():
    # R = 0.9: the amplitude is a twentieth of the peak energy, below endurance
    out = simulate(structured_strip_mesh(1.0, 1.0, 1, 1), MAT, LoadSpec(400.0, R=0.9))
    assert out.status is Status.SURVIVED_CAP


def test_history_is_monotone_over_a_run():
    m = structured_strip_mesh(1.0, 1.0, 1, 1)
    disc = Discretization(m, MAT)
    st_ = SimState.fresh(m, MAT)
    out = run_cycles(disc, st_, LoadSpec(360.0), record_history=True)
    cyc = [h[0] for h in out.history]
    phimax = [h[1] for h in out.history]
    abar = [h[3] for h in out.history]
    assert np.all(np.diff(cyc) > 0)
    assert np.all(np.diff(phimax) >= -1e-15)
    assert np.all(np.diff(abar) >= 0)


def test_checkpoint_resume_is_exact(tmp_path):
    m = structured_strip_mesh(1.0, 1.0, 2, 1)
    disc = Discretization(m, MAT)
    ref = run_cycles(disc, SimState.fresh(m, MAT), LoadSpec(360.0))
    st_ = SimState.fresh(m, MAT)
    cp = tmp_path / "state.npz"
    part = run_cycles(disc, st_, LoadSpec(360.0, cycle_cap=300))
    assert part.status is Status.SURVIVED_CAP
    save_checkpoint(st_, cp)
    back = load_checkpoint(cp, m)
    assert back.cycle == 300 and np.array_equal(back.alpha_bar, st_.alpha_bar)
    # continuing with the full cap reproduces the uninterrupted run
    rest = run_cycles(disc, back, LoadSpec(360.0))
    assert rest.n_cycles == ref.n_cycles
    with pytest.raises(SolverError):
        load_checkpoint(cp, structured_strip_mesh(1.0, 1.0, 3, 1))


def test_unstructured_homogeneous_life_matches_structured():
    coarse = structured_strip_mesh(1.0, 0.5, 1, 1)
    fine = build_polished_mesh(strip_geometry(1.0, 0.5, "none"), 0.1, 0.2)
    a = simulate(coarse, MAT, LoadSpec(360.0)).n_cycles
    b = simulate(fine, MAT, LoadSpec(360.0)).n_cycles
    assert abs(a - b) <= 0.01 * a


def test_fatigue_degradation_zeroes_at_threshold():
    assert fatigue_degradation_f2(MAT.alpha_T, MAT.alpha_T) == 0.0
