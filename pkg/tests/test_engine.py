import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import field_bytes, random_field
from nlsefd import (
    BoundaryKind,
    DivergenceError,
    GridSpec,
    IntegratorState,
    SchemeKind,
    SimParams,
    TiledEngine,
    integrate_chunk,
    integrate_chunk_parallel,
    plan_tiles,
    stability_bounds,
)
from nlsefd.engine import DEFAULT_TILE, phase_schedule


def params_for(grid, scheme, bc, precision="double"):
    k = 0.9 * stability_bounds(grid.dim, 1.0, grid.h, scheme).k_recommended
    return SimParams(k_dt=k, scheme=scheme, bc=bc, precision=precision, potential=0.1)


def serial(psi, p, n):
    s = IntegratorState.create(psi, p)
    integrate_chunk(s, p, n)
    return s


def parallel(psi, p, n, plan, **kw):
    s = IntegratorState.create(psi, p)
    integrate_chunk_parallel(s, p, n, plan, **kw)
    return s


def test_cover_1d():
    plan = plan_tiles(GridSpec(1, 1000), (512,))
    assert [t.extent for t in plan.tiles] == [(512,), (488,)]
    assert plan.tile_counts == (2,)


def test_cover_2d():
    plan = plan_tiles(GridSpec(2, 100, 100), (16, 16))
    assert plan.tile_counts == (7, 7)
    assert len(plan.tiles) == 49
    widths = sorted({t.extent[0] for t in plan.tiles})
    assert widths == [4, 16]


def test_defaults():
    assert plan_tiles(GridSpec(3, 20, 20, 20)).tile_shape == (8, 8, 8)
    assert DEFAULT_TILE[1] == (512,) and DEFAULT_TILE[2] == (16, 16)


@pytest.mark.parametrize("shape", [(1,), (2, 1), (0, 4)])
def test_tile_of_one_rejected(shape):
    g = GridSpec(len(shape), *([9] * len(shape)))
    with pytest.raises((ValueError, TypeError)):
        plan_tiles(g, shape)


def test_tile_shape_length_checked():
    with pytest.raises(ValueError):
        plan_tiles(GridSpec(2, 9, 9), (4, 4, 4))


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_tiles_partition_grid(data):
    dim = data.draw(st.sampled_from([1, 2, 3]))
    counts = [data.draw(st.integers(3, 12)) for _ in range(dim)]
    tile = [data.draw(st.integers(2, 7)) for _ in range(dim)]
    g = GridSpec(dim, *counts)
    plan = plan_tiles(g, tile, data.draw(st.integers(1, 5)))
    owned = np.zeros(g.shape, int)
    for t in plan.tiles:
        owned[t.owned] += 1
        for ax, (o, b) in enumerate(zip(t.owned, t.box)):
            assert b.start == max(o.start - 1, 0) and b.stop == min(o.stop + 1, g.shape[ax])
    assert (owned == 1).all()
    flat = np.concatenate([t.points.flat for t in plan.tiles])
    assert sorted(flat.tolist()) == sorted(set(flat.tolist()))
    n_bd = g.size - int(np.prod([c - 2 for c in counts]))
    assert len(flat) == n_bd
    per_worker = [len(plan.worker_tiles(w)) for w in range(plan.worker_count)]
    assert sum(per_worker) == len(plan.tiles)
    assert max(per_worker) - min(per_worker) <= 1


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_single_tile_equals_serial(dim):
    g = GridSpec.centered(dim, {1: 15, 2: 9, 3: 6}[dim], 0.6)
    p = params_for(g, SchemeKind.SHOC2, BoundaryKind.MSD)
    psi = random_field(g)
    plan = plan_tiles(g, g.counts, 1)
    assert len(plan.tiles) == 1
    assert field_bytes(parallel(psi, p, 10, plan).psi) == field_bytes(serial(psi, p, 10).psi)


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_any_tiling_bit_identical(data):
    dim = data.draw(st.sampled_from([1, 2, 3]))
    counts = [data.draw(st.integers(3, {1: 30, 2: 10, 3: 6}[dim])) for _ in range(dim)]
    tile = [data.draw(st.integers(2, 6)) for _ in range(dim)]
    scheme = data.draw(st.sampled_from(list(SchemeKind)))
    bc = data.draw(st.sampled_from(list(BoundaryKind)))
    prec = data.draw(st.sampled_from(["single", "double"]))
    g = GridSpec(dim, *counts, h=0.7)
    p = params_for(g, scheme, bc, prec)
    psi = random_field(g, seed=data.draw(st.integers(0, 1000)))
    plan = plan_tiles(g, tile, data.draw(st.integers(1, 4)))
    ref = serial(psi, p, 6)
    got = parallel(psi, p, 6, plan, copy_halo=data.draw(st.booleans()))
    assert field_bytes(got.psi) == field_bytes(ref.psi)
    assert got.step_count == ref.step_count and got.time == ref.time
    assert got.diagnostics == ref.diagnostics


@pytest.mark.parametrize("workers", [1, 8])
def test_worker_count_invariance(workers):
    g = GridSpec.centered(2, 14, 0.5)
    p = params_for(g, SchemeKind.CD, BoundaryKind.MSD)
    psi = random_field(g)
    a = parallel(psi, p, 8, plan_tiles(g, (4, 3), workers))
    assert field_bytes(a.psi) == field_bytes(serial(psi, p, 8).psi)


@pytest.mark.parametrize("scheme,f_count", [(SchemeKind.CD, 5), (SchemeKind.SHOC2, 7)])
def test_scratch_accounting(scheme, f_count):
    g = GridSpec.centered(2, 12, 0.5)
    p = params_for(g, scheme, BoundaryKind.MSD)
    with TiledEngine(plan_tiles(g, (5, 5), 2)) as eng:
        eng.integrate_chunk(IntegratorState.create(random_field(g), p), p, 1)
        assert eng.scratch_counts["F"] == f_count
        if scheme is SchemeKind.SHOC2:
            assert eng.scratch_counts["D"] == 2
        else:
            assert "D" not in eng.scratch_counts


def _overlap(r1, r2):
    return "all" in (r1, r2) or r1 == r2


@pytest.mark.parametrize("scheme", list(SchemeKind))
def test_access_audit(scheme):
    """No sub-phase writes a region of a field that another tile reads in the same sub-phase."""
    phases = phase_schedule(scheme)
    assert len(phases) == (8 if scheme is SchemeKind.SHOC2 else 4)
    assert [ph.kind for ph in phases].count("F") == 4
    for ph in phases:
        acc = ph.accesses(scheme)
        for sub in ("interior", "boundary"):
            for wf, wr in acc[sub]["writes"]:
                for rf, rr in acc[sub]["remote_reads"]:
                    assert not (wf == rf and _overlap(wr, rr)), (ph, sub, wf, rf)
        if ph.kind == "F":
            assert ph.source != ph.target
    srcs = [(ph.source, ph.target) for ph in phases if ph.kind == "F"]
    assert srcs == [("psi", "psi_tmp"), ("psi_tmp", "psi_out"), ("psi_out", "psi_tmp"), ("psi_tmp", "psi")]


def _mutant(psi, p, n, plan):
    s = IntegratorState.create(psi, p)
    with TiledEngine(plan) as eng:
        eng._boundary_first = True
        eng.integrate_chunk(s, p, n)
    return s


@pytest.mark.parametrize("dim", [1, 2])
def test_msd_ordering_sentinel(dim):
    g = GridSpec.centered(dim, {1: 20, 2: 9}[dim], 0.6)
    psi = random_field(g, amp=0.1)
    plan = plan_tiles(g, (4,) * dim, 2)
    msd = params_for(g, SchemeKind.CD, BoundaryKind.MSD)
    assert field_bytes(_mutant(psi, msd, 3, plan).psi) != field_bytes(serial(psi, msd, 3).psi)
    for bc in (BoundaryKind.L0, BoundaryKind.DIRICHLET):
        p = params_for(g, SchemeKind.CD, bc)
        assert field_bytes(_mutant(psi, p, 3, plan).psi) == field_bytes(serial(psi, p, 3).psi)


def test_parallel_chunk_split_invariance():
    g = GridSpec.centered(1, 40, 0.3)
    p = params_for(g, SchemeKind.SHOC2, BoundaryKind.MSD)
    plan = plan_tiles(g, (7,), 3)
    whole = parallel(random_field(g), p, 12, plan)
    s = IntegratorState.create(random_field(g), p)
    with TiledEngine(plan) as eng:
        for n in (5, 0, 7):
            eng.integrate_chunk(s, p, n)
    assert field_bytes(s.psi) == field_bytes(whole.psi)


def test_parallel_divergence_propagates():
    g = GridSpec.centered(1, 30, 0.1)
    p = SimParams(k_dt=0.05, force_dt=True, s=0.0, bc="dirichlet")
    with pytest.raises(DivergenceError):
        parallel(random_field(g, amp=0.3), p, 5000, plan_tiles(g, (8,), 2))


def test_grid_mismatch_rejected():
    g = GridSpec.centered(1, 30, 0.1)
    p = SimParams(k_dt=0.001)
    with TiledEngine(plan_tiles(GridSpec.centered(1, 31, 0.1))) as eng:
        with pytest.raises(ValueError, match="grid"):
            eng.integrate_chunk(IntegratorState.create(random_field(g), p), p, 1)
