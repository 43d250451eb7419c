import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import field_bytes, random_field
from nlsefd import (
    BoundaryKind,
    ComplexField,
    DivergenceError,
    GridSpec,
    IntegratorState,
    SchemeKind,
    SimParams,
    SolitonParams,
    StabilityError,
    dark_soliton,
    f_rhs,
    integrate_chunk,
    rk4_step,
    soliton_error,
    soliton_init,
    stability_bounds,
)
from nlsefd.field import make_uniform

SCHEMES = list(SchemeKind)
BCS = list(BoundaryKind)
SP = SolitonParams()


def params_for(grid, scheme, bc="msd", precision="double", frac=0.9, **kw):
    k = frac * stability_bounds(grid.dim, kw.get("a", 1.0), grid.h, scheme).k_recommended
    return SimParams(k_dt=k, scheme=scheme, bc=bc, precision=precision, **kw)


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("bc", [BoundaryKind.MSD, BoundaryKind.L0])
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_f_uniform_examples(scheme, bc, dim):
    g = GridSpec.centered(dim, 5, 0.5)
    out = ComplexField.zeros(g)
    f_rhs(make_uniform(g, 1.0, 0.0), SimParams(a=2.3, s=-1.0, scheme=scheme, bc=bc), out)
    np.testing.assert_array_equal(out.re, 0.0)
    np.testing.assert_array_equal(out.im, -1.0)
    f_rhs(make_uniform(g, 0.0, 1.0), SimParams(s=0.0, potential=2.0, scheme=scheme, bc=bc), out)
    np.testing.assert_array_equal(out.re, 2.0)
    np.testing.assert_array_equal(out.im, 0.0)


def test_f_dirichlet_boundary_is_zero():
    g = GridSpec.centered(2, 5, 0.5)
    out = ComplexField.zeros(g)
    f_rhs(make_uniform(g, 1.0, 0.0), SimParams(bc="dirichlet"), out)
    assert out.im[2, 2] == -1.0
    assert not out.im[0].any() and not out.im[:, -1].any()


@pytest.mark.parametrize("scheme,p", [(SchemeKind.CD, 2), (SchemeKind.SHOC2, 4)])
@pytest.mark.parametrize("h", [0.1, 0.05])
def test_f_matches_time_derivative_of_soliton(scheme, p, h):
    g = GridSpec.centered(1, int(round(50 / h)) + 1, h)
    out = ComplexField.zeros(g)
    f_rhs(soliton_init(g, SP, 1.0, -1.0), SimParams(scheme=scheme), out)
    x, delta = g.axis_coords(0), 1e-4
    ref = (dark_soliton(x, delta, SP, 1.0, -1.0) - dark_soliton(x, -delta, SP, 1.0, -1.0)) / (2 * delta)
    assert np.abs(out.to_complex() - ref).max() <= 0.2 * h**p + 1e-7


@pytest.mark.parametrize("bc", [BoundaryKind.MSD, BoundaryKind.L0])
@pytest.mark.parametrize("v0,k", [(1.0, 0.01), (3.0, 0.05), (-2.0, 0.1)])
def test_one_step_reproduces_taylor_polynomial(bc, v0, k):
    g = GridSpec.centered(2, 5, 1.0)
    psi0 = 0.6 - 0.8j
    p = SimParams(s=0.0, potential=v0, k_dt=k, bc=bc, force_dt=True)
    st_ = IntegratorState.create(make_uniform(g, psi0.real, psi0.imag), p)
    rk4_step(st_, p)
    z = -1j * v0 * k
    taylor = psi0 * sum(z**n / math.factorial(n) for n in range(5))
    got = st_.psi.to_complex()
    np.testing.assert_allclose(got, taylor, rtol=1e-14, atol=1e-15)
    exact = psi0 * np.exp(z)
    assert np.abs(got - exact).max() / abs(exact) <= abs(v0 * k) ** 5 / 120 * 1.0001


def test_zero_step_is_identity():
    g = GridSpec.centered(1, 21, 0.2)
    psi = random_field(g)
    p = SimParams(k_dt=0.0)
    st_ = IntegratorState.create(psi, p)
    rk4_step(st_, p)
    assert field_bytes(st_.psi) == field_bytes(psi)
    st2 = IntegratorState.create(psi, SimParams(k_dt=0.001))
    integrate_chunk(st2, SimParams(k_dt=0.001), 0)
    assert field_bytes(st2.psi) == field_bytes(psi)


@pytest.mark.parametrize("scheme,p", [(SchemeKind.CD, 2), (SchemeKind.SHOC2, 4)])
@pytest.mark.parametrize("h", [0.1, 0.05])
def test_one_soliton_step_error(scheme, p, h):
    g = GridSpec.centered(1, int(round(50 / h)) + 1, h)
    k = stability_bounds(1, 1.0, h, scheme).k_recommended
    par = SimParams(k_dt=k, scheme=scheme)
    st_ = IntegratorState.create(soliton_init(g, SP, 1.0, -1.0), par)
    rk4_step(st_, par)
    assert st_.time == k
    assert soliton_error(st_.psi, k, SP, 1.0, -1.0)["max_abs"] <= 0.2 * k * h**p


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("bc", BCS)
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_schedules_bit_identical(scheme, bc, dim):
    g = GridSpec.centered(dim, {1: 17, 2: 9, 3: 6}[dim], 0.6)
    p = params_for(g, scheme, bc, potential=0.2)
    a = IntegratorState.create(random_field(g, seed=dim), p)
    b = IntegratorState.create(random_field(g, seed=dim), p)
    integrate_chunk(a, p, 25)
    integrate_chunk(b, p, 25, schedule="classic")
    assert field_bytes(a.psi) == field_bytes(b.psi)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(0, 12), min_size=1, max_size=5))
def test_chunk_partition_invariance(parts):
    g = GridSpec.centered(1, 31, 0.3)
    p = params_for(g, SchemeKind.SHOC2, "msd")
    whole = IntegratorState.create(random_field(g), p)
    integrate_chunk(whole, p, sum(parts))
    pieces = IntegratorState.create(random_field(g), p)
    for n in parts:
        integrate_chunk(pieces, p, n)
    assert field_bytes(whole.psi) == field_bytes(pieces.psi)
    assert pieces.step_count == sum(parts)
    assert pieces.time == sum(parts) * p.k_dt


def test_determinism():
    g = GridSpec.centered(2, 8, 0.5)
    p = params_for(g, SchemeKind.SHOC2, "msd")
    runs = []
    for _ in range(2):
        s_ = IntegratorState.create(random_field(g), p)
        integrate_chunk(s_, p, 10)
        runs.append(field_bytes(s_.psi))
    assert runs[0] == runs[1]


def test_dirichlet_boundary_frozen():
    g = GridSpec.centered(2, 9, 0.5)
    p = params_for(g, SchemeKind.SHOC2, "dirichlet")
    psi = random_field(g, amp=0.2)
    s_ = IntegratorState.create(psi, p)
    integrate_chunk(s_, p, 30)
    for sl in ((0, slice(None)), (-1, slice(None)), (slice(None), 0), (slice(None), -1)):
        assert s_.psi.re[sl].tobytes() == psi.re[sl].tobytes()
        assert s_.psi.im[sl].tobytes() == psi.im[sl].tobytes()


def test_single_precision_runs_in_single():
    g = GridSpec.centered(1, 21, 0.3)
    p = params_for(g, SchemeKind.CD, precision="single")
    s_ = IntegratorState.create(random_field(g), p)
    integrate_chunk(s_, p, 5)
    for f in (s_.psi, s_.k_tot, s_.psi_tmp, s_.psi_out, s_.k_stage):
        assert f.dtype == np.float32


def test_divergence_reports_step():
    g = GridSpec.centered(1, 21, 0.1)
    p = SimParams(k_dt=0.05, force_dt=True, bc="dirichlet", s=0.0)
    s_ = IntegratorState.create(random_field(g, amp=0.3), p)
    with pytest.raises(DivergenceError) as err:
        integrate_chunk(s_, p, 10_000)
    assert err.value.step == s_.step_count
    assert err.value.step < 10_000
    assert err.value.time == pytest.approx(err.value.step * 0.05)


def test_stability_guard_and_override():
    g = GridSpec.centered(1, 21, 0.1)
    k_rec = stability_bounds(1, 1.0, 0.1).k_recommended
    with pytest.raises(StabilityError, match="k_recommended"):
        IntegratorState.create(random_field(g), SimParams(k_dt=1.01 * k_rec))
    IntegratorState.create(random_field(g), SimParams(k_dt=1.01 * k_rec, force_dt=True))


def test_non_finite_initial_field_rejected():
    g = GridSpec.centered(1, 5, 0.1)
    psi = random_field(g)
    psi.re[2] = np.inf
    with pytest.raises(ValueError, match="non-finite"):
        IntegratorState.create(psi, SimParams(k_dt=0.001))


@pytest.mark.parametrize(
    "kw",
    [dict(a=0.0), dict(a=-1.0), dict(k_dt=-0.1), dict(scheme="4th"), dict(bc="periodic"),
     dict(precision="half"), dict(s=float("nan")), dict(msd_eps=0.0)],
)
def test_sim_params_validation(kw):
    with pytest.raises((ValueError, TypeError)):
        SimParams(**kw)


def test_potential_shape_checked():
    g = GridSpec.centered(2, 5, 0.5)
    with pytest.raises(ValueError, match="shape"):
        SimParams(potential=np.zeros((4, 4))).potential_array(g)
    with pytest.raises(ValueError, match="real"):
        SimParams(potential=np.zeros(g.shape, complex)).potential_array(g)


def test_msd_floor_counter_accumulates():
    g = GridSpec.centered(1, 9, 0.5)
    psi = ComplexField.zeros(g)
    p = SimParams(k_dt=0.01)
    s_ = IntegratorState.create(psi, p)
    rk4_step(s_, p)
    assert s_.diagnostics["msd_floor_hits"] == 4 * 2
