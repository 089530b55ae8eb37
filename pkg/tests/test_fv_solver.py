import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sswme.fv_solver import (
    FAST_PARAMS,
    SMOOTH_PARAMS,
    CFLError,
    InstabilityError,
    SimConfig,
    StateField,
    initial_condition_fast,
    initial_condition_smooth,
    initial_height,
    max_speed,
    moments_of_state,
    reconstruct_profile,
    rel_l1_error,
    simulate,
    step,
)
from sswme.hyperbolicity import find_witness
from sswme.model import PhysicalParams, build_model, conservative, system_matrix


def _uniform(model, nx, h, um, s):
    cfg = SimConfig(nx=nx)
    U = np.tile(conservative(h, um, np.asarray(s, dtype=float)), (nx, 1))
    return cfg, StateField(U, 0.0, cfg.x)


def test_initial_height_extremes():
    assert initial_height(-0.5) == pytest.approx(1 + math.exp(-1), abs=1e-15)
    assert initial_height(0.5) == pytest.approx(1 + math.exp(-7), abs=1e-15)


def test_smooth_ic_L1_coefficient():
    cfg = SimConfig(nx=8)
    f = initial_condition_smooth(cfg, build_model("L1"))
    assert np.allclose(f.U[:, 2] / f.U[:, 0], 0.125)
    assert np.allclose(f.U[:, 1] / f.U[:, 0], 0.25)


@pytest.mark.parametrize("name", ["L2", "Q3", "Leg2"])
def test_smooth_ic_moments(name):
    m = build_model(name)
    f = initial_condition_smooth(SimConfig(nx=8), m)
    h, um, a1, a2 = moments_of_state(m, f)
    assert np.allclose(um, 0.25) and np.allclose(a1, 0.25) and np.allclose(a2, 0, atol=1e-14)


def test_fast_ic_q4_mean():
    m = build_model("Q4")
    f = initial_condition_fast(SimConfig(nx=8), m)
    assert np.allclose(f.U[:, 1] / f.U[:, 0], 0.5)


def test_config_validation():
    for kw in ({"x_min": 1, "x_max": 0}, {"nx": 3}, {"cfl": 0}, {"cfl": 1.5}, {"t_end": -1}):
        with pytest.raises(ValueError):
            SimConfig(**kw)
    assert SimConfig(t_end=1, output_times=(0.5, 3.0)).outputs() == [0.5, 1]


def test_statefield_requires_positive_depth():
    with pytest.raises(ValueError):
        StateField(np.array([[1.0, 0, 0], [0.0, 0, 0]]), 0.0, np.arange(2.0))


def test_max_speed_examples():
    one = build_model("L1", PhysicalParams(g=1.0))
    assert max_speed(one, conservative(1.0, 0.0, np.array([0.0]))) == pytest.approx(1.0)
    assert max_speed(one, conservative(1.0, 0.25, np.array([0.25]))) == pytest.approx(0.25 + math.sqrt(1.25))
    with pytest.raises(ValueError):
        max_speed(one, np.zeros((0, 3)))


def test_max_speed_guards_complex_spectrum():
    m = build_model("L2", PhysicalParams(g=1.0))
    sbar, _ = find_witness(m, 1.5)
    U = conservative(1.0, 0.0, sbar)
    ev = np.linalg.eigvals(system_matrix(m, U))
    assert np.max(np.abs(ev.imag)) > 0
    assert max_speed(m, U) >= np.max(np.abs(ev.real))


@pytest.mark.parametrize("name", ["L1", "L3", "Q2", "Leg2"])
@pytest.mark.parametrize("reg", [False, True])
def test_rest_state_is_steady(name, reg):
    m = build_model(name, SMOOTH_PARAMS, regularized=reg)
    cfg, f = _uniform(m, 10, 1.3, 0.0, np.zeros(m.N))
    out = step(m, f, 0.01)
    assert np.array_equal(out.U, f.U)


@pytest.mark.parametrize("name", ["L2", "Q3"])
def test_uniform_advection_is_steady(name):
    m = build_model(name, PhysicalParams(g=1.0, nu=0.0))
    cfg, f = _uniform(m, 10, 1.0, 0.4, np.zeros(m.N))
    out = step(m, f, 0.02)
    assert np.allclose(out.U, f.U, rtol=0, atol=1e-15)


@pytest.mark.parametrize("reg", [False, True])
def test_one_step_conserves_mass(reg):
    m = build_model("Q3", SMOOTH_PARAMS, regularized=reg)
    cfg = SimConfig()
    f = initial_condition_smooth(cfg, m)
    dt = cfg.cfl * cfg.dx / max_speed(m, f)
    out = step(m, f, dt)
    assert abs(out.U[:, 0].sum() - f.U[:, 0].sum()) * cfg.dx <= 1e-14 * f.U[:, 0].sum() * cfg.dx


def test_cfl_violation():
    m = build_model("L1", SMOOTH_PARAMS)
    cfg = SimConfig(nx=20)
    f = initial_condition_smooth(cfg, m)
    with pytest.raises(CFLError):
        step(m, f, 2 * cfg.dx / max_speed(m, f))


def test_friction_decays_shear_without_transport():
    m = build_model("L1", PhysicalParams(g=1.0, nu=0.1, lam=0.1))
    cfg, f = _uniform(m, 6, 1.0, 0.3, [0.2])
    out = step(m, f, 0.01)
    assert np.all(out.U[:, 1] < f.U[:, 1])
    assert np.all(np.abs(out.U[:, 2]) < 0.2)
    assert np.allclose(out.U[:, 0], 1.0)


def test_bottom_slope_accelerates():
    m = build_model("L1", PhysicalParams(g=1.0, nu=0.0, bottom_slope=0.1))
    cfg, f = _uniform(m, 6, 2.0, 0.0, [0.0])
    out = step(m, f, 0.01)
    assert np.allclose(out.U[:, 1], 0.01 * 1.0 * 2.0 * 0.1)


def test_t_end_zero_returns_initial():
    m = build_model("L2", SMOOTH_PARAMS)
    cfg = SimConfig(nx=20, t_end=0.0)
    f = initial_condition_smooth(cfg, m)
    tr = simulate(m, cfg, f)
    assert tr.times == [0.0]
    assert np.array_equal(tr.final.U, f.U)
    assert tr.dts == []


def test_output_times_are_hit_exactly():
    m = build_model("L1", SMOOTH_PARAMS)
    cfg = SimConfig(nx=40, t_end=0.3, output_times=(0.1, 0.25))
    tr = simulate(m, cfg, initial_condition_smooth(cfg, m))
    assert tr.times == [0.1, 0.25, 0.3]
    assert [f.t for f in tr.fields] == [0.1, 0.25, 0.3]
    assert sum(tr.dts) == pytest.approx(0.3, abs=1e-14)


def test_dt_sequence_replay_is_bitwise():
    m = build_model("Q2", SMOOTH_PARAMS)
    cfg = SimConfig(nx=40, t_end=0.2)
    ic = initial_condition_smooth(cfg, m)
    a = simulate(m, cfg, ic)
    b = simulate(m, cfg, ic, dt_sequence=a.dts)
    assert np.array_equal(a.final.U, b.final.U)


def test_step_limit_reports_instability():
    m = build_model("L1", SMOOTH_PARAMS)
    cfg = SimConfig(nx=20, t_end=0.5, max_steps=3)
    with pytest.raises(InstabilityError) as exc:
        simulate(m, cfg, initial_condition_smooth(cfg, m))
    assert exc.value.time > 0


def test_smooth_L1_run_bounded():
    m = build_model("L1", SMOOTH_PARAMS)
    cfg = SimConfig()
    tr = simulate(m, cfg, initial_condition_smooth(cfg, m))
    h = tr.final.U[:, 0]
    assert 1 <= h.min() and h.max() <= 1.5
    assert tr.min_h >= 1
    assert abs(tr.mass[-1] - tr.mass[0]) <= 1e-12 * tr.mass[0]


def test_fast_Q4_run_completes():
    m = build_model("Q4", FAST_PARAMS)
    cfg = SimConfig(t_end=0.5)
    tr = simulate(m, cfg, initial_condition_fast(cfg, m))
    assert tr.min_h >= 1
    assert np.all(np.isfinite(tr.final.U))


@pytest.mark.parametrize(
    "v,ref,expected",
    [([1.0, 2.0], [1.0, 2.0], 0.0), ([2.0, 4.0], [1.0, 2.0], 1.0), ([0.0, 0.0], [1.0, -1.0], 1.0)],
)
def test_rel_l1_error_cases(v, ref, expected):
    assert rel_l1_error(v, ref) == pytest.approx(expected)


def test_rel_l1_error_zero_reference_and_interpolation():
    with pytest.raises(ZeroDivisionError):
        rel_l1_error([1.0], [0.0])
    xr = np.linspace(0, 1, 11)
    x = np.linspace(0.05, 0.95, 4)
    assert rel_l1_error(2 * x + 1, 2 * xr + 1, x, xr) == pytest.approx(0.0, abs=1e-15)


@given(st.floats(-1, 1, allow_nan=False), st.floats(0.5, 2))
@settings(max_examples=20)
def test_moments_of_state_L1(s, h):
    m = build_model("L1")
    _, um, a1, a2 = moments_of_state(m, conservative(h, 0.1, np.array([s])))
    assert a1 == pytest.approx(2 * s, abs=1e-14)
    assert a2 == pytest.approx(0.0, abs=1e-14)


def test_moments_of_state_Q2_symmetric_and_zero():
    m = build_model("Q2")
    _, _, a1, a2 = moments_of_state(m, conservative(1.0, 0.0, np.array([0.3, 0.3])))
    assert a1 == pytest.approx(3 * 0.3, rel=1e-12)
    assert a2 == pytest.approx(0.0, abs=1e-14)
    _, _, a1, a2 = moments_of_state(m, conservative(1.0, 0.0, np.zeros(2)))
    assert a1 == 0 and a2 == 0


def test_reconstruct_profile_linear():
    m = build_model("L3")
    U = conservative(1.0, 0.2, 0.5 * m.transform.linear_profile)
    z = np.linspace(0, 1, 7)
    assert np.allclose(reconstruct_profile(m, U, z), 0.2 + 0.5 * (1 - 2 * z))
