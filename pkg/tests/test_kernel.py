import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonlocdiff import BadSpacing, Kernel, Stencil, kernel_eval, kernel_l1_norm, validate_kernel
from nonlocdiff.kernel import horizon_cells

SHAPES = ["const_ball", "quartic_bump", "cosine_bump"]


def test_const_ball_value_inside():
    assert kernel_eval(Kernel.normalized("const_ball", 1, 1.0), 0.5) == 0.5


def test_quartic_peak():
    assert kernel_eval(Kernel.normalized("quartic_bump", 1, 1.0), 0.0) == pytest.approx(15 / 16, rel=1e-15)


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("dim", [1, 2])
def test_zero_on_support_boundary(shape, dim):
    k = Kernel.normalized(shape, dim)
    z = 1.0 if dim == 1 else [0.6, 0.8]
    assert kernel_eval(k, z) == 0.0
    assert kernel_eval(k, 0.0 if dim == 1 else [0.0, 0.0]) > 0


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("dim", [1, 2])
def test_closed_form_norms_against_scipy(shape, dim):
    from scipy.integrate import quad

    k = Kernel.normalized(shape, dim, 2.5)
    if dim == 1:
        val, _ = quad(lambda r: 2 * k.radial(r), 0, 1)
    else:
        val, _ = quad(lambda r: 2 * math.pi * r * k.radial(r), 0, 1)
    assert k.l1_norm == pytest.approx(2.5, rel=1e-14)
    assert val == pytest.approx(2.5, rel=1e-10)


@given(st.sampled_from(SHAPES), st.floats(-2, 2), st.floats(-2, 2))
def test_radial_symmetry(shape, a, b):
    k1, k2 = Kernel.normalized(shape, 1), Kernel.normalized(shape, 2)
    assert kernel_eval(k1, a) == kernel_eval(k1, -a)
    assert kernel_eval(k2, [a, b]) == kernel_eval(k2, [-a, -b])


def test_quadrature_accuracy():
    h = 0.01
    closed, quad = kernel_l1_norm(Kernel.normalized("const_ball"), Kernel.normalized("const_ball").stencil(h))
    assert closed == 1.0
    assert abs(quad - 1.0) <= 0.02
    k = Kernel.normalized("quartic_bump")
    assert abs(kernel_l1_norm(k, k.stencil(h))[1] - 1.0) <= 1e-3


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("dim", [1, 2])
def test_quadrature_converges_first_order(shape, dim):
    k = Kernel.normalized(shape, dim)
    errs = [abs(k.stencil(h).weight_sum - 1.0) for h in (0.1, 0.05, 0.025)]
    for coarse, fine in zip(errs, errs[1:]):
        assert fine <= coarse / 2 * 1.05 or fine < 1e-12


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("dim", [1, 2])
def test_stencil_weights_positive_exactly_inside(shape, dim):
    h = 0.125
    st_ = Kernel.normalized(shape, dim).stencil(h)
    r = np.sqrt((st_.offsets**2).sum(axis=1)) * h
    assert np.all(r < 1) and np.all(st_.weights > 0)
    # the full offset box minus the stencil are exactly the points at distance >= 1
    box = (2 * 8 + 1) ** dim
    inside = sum(1 for d in np.ndindex(*(17,) * dim) if sum((i - 8) ** 2 for i in d) < 64)
    assert len(st_) == inside <= box
    assert validate_kernel(Kernel.normalized(shape, dim), st_) == []


def test_const_ball_excludes_edge_offset():
    st_ = Kernel.normalized("const_ball").stencil(0.25)
    assert sorted(st_.offsets[:, 0].tolist()) == [-3, -2, -1, 0, 1, 2, 3]


def test_validate_negative_amplitude():
    k = Kernel("const_ball", 1, -1.0)
    assert validate_kernel(k, k.stencil(0.25)) == ["NegativeWeight"]


def test_validate_support_violation():
    k = Kernel.normalized("const_ball")
    bad = Stencil([[0], [4]], [0.1, 0.1], 0.25, k)
    assert validate_kernel(k, bad) == ["SupportViolation"]


@pytest.mark.parametrize("h", [0.3, 0.0, -0.5, float("nan"), 0.15])
def test_bad_spacing(h):
    with pytest.raises(BadSpacing):
        horizon_cells(h)


def test_stencil_is_read_only():
    st_ = Kernel.normalized("const_ball").stencil(0.25)
    with pytest.raises(ValueError):
        st_.weights[0] = 3.0
