from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

import closed_forms as cf
from sswme.model import (
    DryStateError,
    PhysicalParams,
    alpha1,
    build_model,
    conservative,
    flux,
    flux_jacobian,
    friction_operator,
    friction_source,
    nonconservative_matrix,
    primitive,
    regularize_state,
    regularized_system_matrix,
    system_matrix,
    transport_parts,
)
from sswme.moment_tensors import tensors_for

BASES = ["L1", "L2", "L3", "Q2", "Q3", "Q4", "Leg3"]

coef = st.floats(-0.6, 0.6, allow_nan=False)
depth = st.floats(0.3, 3.0, allow_nan=False)


def _state(data, N):
    h = data.draw(depth)
    um = data.draw(coef)
    s = np.array([data.draw(coef) for _ in range(N)])
    return conservative(h, um, s)


def _fd_jacobian(fun, U, eps=1e-6):
    J = np.empty((len(U), len(U)))
    for k in range(len(U)):
        e = np.zeros(len(U))
        e[k] = eps
        J[:, k] = (fun(U + e) - fun(U - e)) / (2 * eps)
    return J


@pytest.mark.parametrize("name", BASES)
@given(data=st.data())
def test_flux_jacobian_matches_finite_differences(name, data):
    m = build_model(name, PhysicalParams(g=9.81))
    U = _state(data, m.N)
    J = _fd_jacobian(lambda V: flux(m, V), U)
    assert np.allclose(flux_jacobian(m, U), J, atol=1e-6 * max(1, np.abs(J).max()))
    assert np.allclose(system_matrix(m, U), J - nonconservative_matrix(m, U), atol=1e-6 * max(1, np.abs(J).max()))


@pytest.mark.parametrize("name", BASES)
@given(data=st.data())
def test_eigenvalues_scale_with_gravity_wave_speed(name, data):
    g = 9.81
    m = build_model(name, PhysicalParams(g=g))
    h = data.draw(depth)
    um = data.draw(coef)
    sbar = np.array([data.draw(st.floats(-0.2, 0.2)) for _ in range(m.N)])
    c = np.sqrt(g * h)
    ev = np.sort_complex(np.linalg.eigvals(system_matrix(m, conservative(h, um, c * sbar))))
    ref = np.sort_complex(um + c * np.linalg.eigvals(system_matrix(m.with_params(g=1.0), conservative(1.0, 0.0, sbar))))
    assert np.allclose(ev, ref, atol=1e-8 * c)


@pytest.mark.parametrize("name", BASES)
@given(h=depth, um=coef, a=coef)
def test_momentum_flux_depends_only_on_profile(name, h, um, a):
    m = build_model(name, PhysicalParams(g=2.0))
    U = conservative(h, um, a * m.transform.linear_profile)
    F = flux(m, U)
    assert F[0] == pytest.approx(h * um)
    assert F[1] == pytest.approx(h**2 + h * um**2 + h * a**2 / 3)


@pytest.mark.parametrize("name", BASES)
@given(data=st.data())
def test_regularization_keeps_alpha1_and_is_idempotent(name, data):
    m = build_model(name)
    U = _state(data, m.N)
    R = regularize_state(m, U)
    assert alpha1(m, R) == pytest.approx(alpha1(m, U), abs=1e-12)
    assert np.allclose(regularize_state(m, R), R, atol=1e-12)
    assert np.allclose(R[:2], U[:2])


@pytest.mark.parametrize("name", ["L2", "L3", "Q2", "Q3", "L6"])
@given(h=depth, um=coef, a=coef)
def test_regularized_matrix_is_hyperbolic_on_any_state(name, h, um, a):
    m = build_model(name, regularized=True)
    rng = np.random.default_rng(int(1e6 * abs(a)))
    U = conservative(h, um, a * m.transform.linear_profile + 0.3 * rng.normal(size=m.N))
    ev = np.linalg.eigvals(regularized_system_matrix(m, U))
    assert np.max(np.abs(ev.imag)) < 1e-7


@pytest.mark.parametrize("name", BASES)
@given(data=st.data())
def test_friction_operator_matches_source(name, data):
    m = build_model(name, PhysicalParams(nu=0.37, lam=0.21))
    U = _state(data, m.N)
    L = friction_operator(m, U[0])
    assert np.allclose(-L @ U[1:], friction_source(m, U)[1:], atol=1e-10)
    assert friction_source(m, U)[0] == 0


@pytest.mark.parametrize("name", BASES)
def test_friction_dissipates_kinetic_energy(name):
    # the Gram-weighted friction operator is positive semi-definite
    m = build_model(name, PhysicalParams(nu=0.5, lam=0.2))
    t = tensors_for(m.basis)
    W = np.zeros((m.N + 1, m.N + 1))
    W[0, 0] = 1.0
    W[1:, 1:] = t.M
    L = friction_operator(m, 1.3)
    S = W @ L
    assert np.allclose(S, S.T, atol=1e-10)
    assert np.min(np.linalg.eigvalsh(0.5 * (S + S.T))) > -1e-10


def test_rest_state_flux_and_sources():
    m = build_model("Q3")
    U = conservative(2.0, 0.0, np.zeros(3))
    assert np.allclose(flux(m, U), [0, m.params.g * 2.0, 0, 0, 0])
    assert np.allclose(friction_source(m, U), 0)
    assert np.allclose(nonconservative_matrix(m, U), 0)


def test_raw_flux_is_gram_times_normalized():
    m = build_model("L3")
    U = conservative(1.2, 0.3, np.array([0.1, -0.2, 0.05]))
    raw = flux(m, U, normalized=False)
    nrm = flux(m, U)
    assert np.allclose(raw[:2], nrm[:2])
    assert np.allclose(raw[2:], tensors_for(m.basis).M @ nrm[2:])


def test_batched_evaluation_matches_single():
    m = build_model("Q2", regularized=True)
    rng = np.random.default_rng(3)
    U = conservative(1 + rng.random(5), rng.normal(size=5) * 0.2, rng.normal(size=(5, 2)) * 0.2)
    F, Q = transport_parts(m, U)
    for k in range(5):
        Fk, Qk = transport_parts(m, U[k])
        assert np.allclose(F[k], Fk) and np.allclose(Q[k], Qk)


def test_exact_mode_l1():
    g = Fraction(1)
    m = build_model("L1").with_params(g=g)
    h, um, s = Fraction(1), Fraction(1, 4), Fraction(1, 4)
    U = np.array([h, h * um, h * s], dtype=object)
    F = flux(m, U)
    assert list(F) == cf.flux("L1", h, um, [s], g)
    # g h^2/2 + h um^2 + h s^2 M_11
    assert F[1] == Fraction(1, 2) + Fraction(1, 16) + Fraction(4, 3) / 16


def test_primitive_roundtrip_and_dry_state():
    U = conservative(2.0, 0.5, np.array([0.1, 0.2]))
    h, um, s = primitive(U)
    assert h == 2.0 and um == 0.5 and np.allclose(s, [0.1, 0.2])
    with pytest.raises(DryStateError):
        primitive(np.array([0.0, 0.0, 0.0]))
    with pytest.raises(DryStateError):
        flux(build_model("L1"), np.array([-1.0, 0.0, 0.0]))


@pytest.mark.parametrize("kw", [{"g": 0}, {"nu": -1}, {"lam": 0}])
def test_param_validation(kw):
    with pytest.raises(ValueError):
        PhysicalParams(**kw)


def test_names():
    assert build_model("L2").name.endswith("L2")
    assert build_model("L2", regularized=True).name.startswith("H")
