import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlsefd import ComplexField, GridSpec, Precision
from nlsefd.field import Workspace, axpy, linear_index, make_uniform


def test_linear_index_examples():
    g = (4, 3, 2)
    assert linear_index(g, 0, 0, 0) == 0
    assert linear_index(g, 3, 2, 1) == 23
    assert linear_index(g, 1, 2, 0) == 9


@given(st.integers(3, 6), st.integers(3, 5), st.integers(3, 4))
def test_linear_index_is_bijection_matching_array_layout(nx, ny, nz):
    g = GridSpec(3, nx, ny, nz)
    seen = [linear_index(g, i, j, k) for k in range(nz) for j in range(ny) for i in range(nx)]
    assert seen == list(range(g.size))
    arr = np.arange(g.size).reshape(g.shape)
    assert arr[1, 2, 0] == linear_index(g, 0, 2, 1)


def test_linear_index_out_of_range():
    g = GridSpec(2, 4, 3)
    with pytest.raises(IndexError):
        linear_index(g, 4, 0)
    with pytest.raises(IndexError):
        linear_index(g, 0, 0, 1)


@pytest.mark.parametrize(
    "kw",
    [
        dict(dim=1, nx=2),
        dict(dim=2, nx=5, ny=1),
        dict(dim=1, nx=5, ny=3),
        dict(dim=4, nx=5),
        dict(dim=1, nx=5, h=0.0),
        dict(dim=1, nx=5, h=-1.0),
    ],
)
def test_grid_rejects_invalid(kw):
    with pytest.raises((ValueError, TypeError)):
        GridSpec(**kw)


def test_grid_shape_and_coords():
    g = GridSpec.centered(2, (5, 3), 0.5)
    assert g.counts == (5, 3)
    assert g.shape == (3, 5)
    x, y = g.coords()
    assert x.shape == g.shape
    assert x[0, 0] == -1.0 and x[0, -1] == 1.0
    assert y[0, 0] == -0.5 and y[-1, 0] == 0.5


def test_make_uniform_examples():
    g = GridSpec(1, 10)
    ones = make_uniform(g, 1.0, 0.0)
    assert np.all(ones.re == 1.0) and np.all(ones.im == 0.0)
    zero = make_uniform(g, 0.0, 0.0)
    assert not zero.re.any() and not zero.im.any()
    half = make_uniform(g, 0.5, -0.5)
    assert np.all(half.modulus_squared() == 0.5)


@pytest.mark.parametrize("prec", list(Precision))
def test_precision_is_preserved(prec):
    g = GridSpec(2, 4, 4)
    f = ComplexField.from_complex(g, np.ones(g.shape) * (1 + 2j), prec)
    assert f.dtype == prec.dtype
    assert f.precision is prec
    assert f.copy().dtype == prec.dtype


def test_field_rejects_mismatched_arrays():
    g = GridSpec(1, 5)
    with pytest.raises(ValueError):
        ComplexField(g, np.zeros(4), np.zeros(4))
    with pytest.raises(ValueError):
        ComplexField(g, np.zeros(5), np.zeros(5, np.float32))


def test_l2_norm_and_finiteness():
    g = GridSpec(2, 4, 5, h=0.5)
    f = make_uniform(g, 0.6, 0.8)
    assert f.l2_norm() == pytest.approx(np.sqrt(20 * 0.25))
    assert f.is_finite()
    f.re[1, 1] = np.nan
    assert not f.is_finite()


@given(st.floats(-4, 4), st.integers(0, 2**16))
def test_axpy_is_elementwise(alpha, seed):
    g = GridSpec(2, 4, 3)
    rng = np.random.default_rng(seed)
    x = ComplexField.from_complex(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    y = ComplexField.from_complex(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    out = ComplexField.zeros(g)
    axpy(out, x, alpha, y)
    assert out.re.shape == g.shape
    np.testing.assert_array_equal(out.re, x.re + alpha * y.re)
    np.testing.assert_array_equal(out.im, x.im + alpha * y.im)


def test_workspace_reuses_buffers():
    w = Workspace((3, 4), np.float32)
    a = w["a"]
    assert a.shape == (3, 4) and a.dtype == np.float32
    assert w["a"] is a
    assert len(w) == 1
