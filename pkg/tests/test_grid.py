import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonlocdiff import BadSpacing, DomainGrid, Field, Kernel, NonFiniteValue, extrema, make_field
from nonlocdiff.errors import ConfigError
from nonlocdiff.grid import read_snapshot, read_trace, write_snapshot, write_trace
from nonlocdiff.profiles import Pattern, evaluate_profile, sign_pattern


def _dist_to_box(p, extent):
    return math.hypot(*(max(0.0, -x, x - L) for x, L in zip(p, extent)))


def test_counts_1d():
    g = DomainGrid((2.0,), 0.5)
    assert (g.n_interior, g.n_collar) == (4, 4)
    assert sorted(g.collar_coords[:, 0].tolist()) == [-0.75, -0.25, 2.25, 2.75]


def test_counts_2d():
    assert DomainGrid((1.0, 1.0), 0.25).n_interior == 16


@pytest.mark.parametrize("extent,h", [((1.0,), 0.3), ((1.0,), 0.25 + 1e-6), ((0.3,), 0.25)])
def test_bad_spacing(extent, h):
    with pytest.raises(BadSpacing):
        DomainGrid(extent, h)


@pytest.mark.parametrize("extent,h", [((1.0,), 0.125), ((0.5, 1.0), 0.125), ((1.0, 1.0), 0.25)])
def test_collar_is_exactly_the_one_horizon_shell(extent, h):
    g = DomainGrid(extent, h)
    d = np.array([_dist_to_box(p, extent) for p in g.coords])
    assert np.all(d[: g.n_interior] == 0)
    assert np.all((d[g.n_interior :] > 0) & (d[g.n_interior :] < 1))
    # every lattice point of the padded box at distance < 1 is represented
    M = g.M
    total = sum(
        1 for idx in np.ndindex(*g.shape)
        if _dist_to_box([(i - M + 0.5) * h for i in idx], extent) < 1 - 1e-12
    )
    assert total == g.n_nodes


@pytest.mark.parametrize("shape", ["const_ball", "quartic_bump"])
@pytest.mark.parametrize("extent,h", [((1.0,), 1 / 16), ((1.0, 0.5), 0.125)])
def test_horizon_closure(shape, extent, h):
    g = DomainGrid(extent, h)
    st_ = Kernel.normalized(shape, g.dimension).stencil(h)
    table, _ = g.neighbor_table(st_)
    assert table.shape == (g.n_interior, len(st_) - 1)
    assert table.min() >= 0


def test_neighbor_table_geometry():
    g = DomainGrid((1.0,), 0.25)
    table, w = g.neighbor_table(Kernel.normalized("const_ball").stencil(0.25))
    x = g.coords[:, 0]
    offsets = x[table] - x[: g.n_interior, None]
    assert np.allclose(offsets, np.array([-3, -2, -1, 1, 2, 3]) * 0.25)
    assert np.all(w == 0.125)


def test_collar_node_neighbors_may_leave_the_region():
    g = DomainGrid((1.0,), 0.25)
    table, _ = g.neighbor_table(Kernel.normalized("const_ball").stencil(0.25), nodes=[g.n_interior])
    assert (table == -1).any()


def test_make_field_and_warning():
    g = DomainGrid((1.0,), 0.25)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        f = make_field(g, 1.0, 0.0)
    assert np.all(f.interior_values == 1) and np.all(f.collar_values == 0)
    with pytest.warns(UserWarning, match="collar"):
        f = make_field(g, lambda x: 1 + 0 * x, 0.0)
    assert np.all(f.collar_values == 0)


def test_make_field_sgn_sin_inv():
    g = DomainGrid((1.0,), 1 / 64)
    a = sign_pattern("sgn_sin_inv", g)
    f = make_field(g, a, a)
    assert set(f.values.tolist()) == {-1.0, 1.0}


def test_non_finite():
    g = DomainGrid((1.0,), 0.25)
    with pytest.raises(NonFiniteValue):
        make_field(g, lambda x: np.where(x > 0.5, np.nan, 0.0), 0.0)
    with pytest.raises(NonFiniteValue):
        Field(g, np.full(g.n_nodes, np.inf))


def test_field_read_only():
    g = DomainGrid((1.0,), 0.25)
    f = make_field(g, 1.0, 0.0)
    with pytest.raises(ValueError):
        f.values[0] = 2.0


def test_extrema_examples():
    g = DomainGrid((1.0,), 1 / 3)
    f = Field(g, [1, 2, 3] + [0] * g.n_collar)
    r = extrema(f, 0.5)
    assert (r.t, r.U_plus, r.u_plus, r.u_minus) == (0.5, 3, 3, 0)
    g1 = DomainGrid((1.0,), 1.0)
    r = extrema(Field(g1, [-5.0, 2.0, 2.0]))
    assert r.u_inf == 5
    r = extrema(Field(g, [1.5] * g.n_nodes))
    assert {r.u_plus, r.u_minus, r.U_plus, r.U_minus, r.psi_plus, r.psi_minus, r.u_inf} == {1.5}


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=12, max_size=12))
def test_extrema_identities(vals):
    g = DomainGrid((1.0,), 0.25)
    r = extrema(Field(g, vals))
    assert r.u_plus == max(r.U_plus, r.psi_plus)
    assert r.u_minus == min(r.U_minus, r.psi_minus)
    assert r.u_inf == max(abs(v) for v in vals)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1e300, 1e300, allow_nan=False), min_size=12, max_size=12))
def test_csv_round_trip_is_exact(tmp_path_factory, vals):
    d = tmp_path_factory.mktemp("csv")
    g = DomainGrid((1.0,), 0.25)
    f = Field(g, vals)
    write_snapshot(d / "s.csv", f)
    back = read_snapshot(d / "s.csv", g)
    assert np.array_equal(back.values, f.values)
    write_trace(d / "t.csv", [extrema(f, 0.1)])
    assert read_trace(d / "t.csv") == [extrema(back, 0.1)]


def test_snapshot_columns_2d(tmp_path):
    g = DomainGrid((1.0, 1.0), 0.5)
    write_snapshot(tmp_path / "s.csv", make_field(g, 1.0, 0.0))
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "node_index,x1,x2,region,value"
    assert lines[1].endswith("interior,1")
    assert len(lines) == g.n_nodes + 1


def test_patterns():
    g = DomainGrid((1.0,), 0.25)
    assert sign_pattern(Pattern.SGN_X, g).tolist() == [-1, -1, 1, 1, -1, -1, -1, -1, 1, 1, 1, 1]
    assert set(sign_pattern("checkerboard", g).tolist()) == {-1.0, 1.0}
    a = sign_pattern("seeded_random", g, seed=4)
    assert np.array_equal(a, sign_pattern("seeded_random", g, seed=4))


def test_profiles():
    g = DomainGrid((1.0,), 0.125)
    assert np.all(evaluate_profile(2.5, g) == 2.5)
    bump = evaluate_profile({"profile": "bump"}, g)
    assert bump.max() <= 1 and bump.min() == 0
    r = evaluate_profile({"profile": "random", "seed": 1, "low": -1, "high": 1}, g)
    assert -1 <= r.min() and r.max() < 1
    ramp = evaluate_profile({"profile": "linear_ramp", "slope": 2}, g)
    assert np.allclose(ramp, 2 * g.coords[:, 0])
    with pytest.raises(ConfigError):
        evaluate_profile({"profile": "wave"}, g)
    with pytest.raises(ConfigError):
        evaluate_profile({"profile": "bump", "width": 3}, g)
