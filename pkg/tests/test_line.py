import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from kltcyl import params as P
from kltcyl.errors import FormatError
from kltcyl.grids import Grid1D
from kltcyl.line import (SampledPotential1D, default_line_grid, ground_state_1d, keller_gap, load_potential_1d,
                         lq_norm_1d, optimal_samples, sample_potential, save_potential_1d, scale_potential)

GRID = Grid1D.symmetric(25.0, 1500)


def bumps(params, grid=GRID):
    s = grid.points
    v = np.zeros_like(s)
    for a, c, w in params:
        v += a * np.exp(-((s - c) / w) ** 2)
    return SampledPotential1D(grid=grid, values=v)


bump = st.tuples(st.floats(0.05, 3.0), st.floats(-6.0, 6.0), st.floats(0.3, 2.0))


@pytest.mark.parametrize("q", [2.0, 3.0])
def test_equality_case(q):
    pr = P.make_params(2, q)
    V = sample_potential(P.optimal_potential(P.mu_one(pr), pr), Grid1D.symmetric(20.0, 4000))
    res = ground_state_1d(V)
    assert res.lambda1 == pytest.approx((q - 1) ** 2, abs=1e-5)
    assert res.extrapolated and res.residual < 1e-8
    assert np.all(res.eigenfunction > 0)
    assert GRID.integrate(np.zeros(GRID.n)) == 0


def test_eigenfunction_matches_closed_form(p22):
    mu = P.mu_one(p22)
    V = optimal_samples(mu, p22, grid=default_line_grid(mu, p22, n=1500))
    res = ground_state_1d(V)
    phi = P.optimal_eigenfunction(mu, p22)(res.grid.points)
    phi /= math.sqrt(res.grid.h * phi @ phi)
    assert np.max(np.abs(res.eigenfunction - phi)) < 1e-4


def test_second_order_convergence(p22):
    """Raw eigenvalue errors fall by ~4 per halving of h; Richardson removes that term."""
    mu = P.mu_one(p22)
    errs = []
    for n in (399, 799, 1599):
        V = optimal_samples(mu, p22, grid=Grid1D.symmetric(20.0, n))
        errs.append(abs(ground_state_1d(V, richardson=False).lambda1 - 1.0))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.02)
    V = optimal_samples(mu, p22, grid=Grid1D.symmetric(20.0, 799))
    assert abs(ground_state_1d(V).lambda1 - 1.0) < errs[2] / 20


def test_samples_only_uses_coarse_subgrid(p22):
    V = optimal_samples(P.mu_one(p22), p22, grid=Grid1D.symmetric(20.0, 1999))
    bare = SampledPotential1D(grid=V.grid, values=V.values)
    res = ground_state_1d(bare)
    assert res.grid == V.grid
    assert res.lambda1 == pytest.approx(1.0, abs=1e-5)


def test_no_bound_state_for_zero_potential(p22):
    V = SampledPotential1D(grid=GRID, values=np.zeros(GRID.n))
    assert keller_gap(V, p22) == 0.0


def test_boundary_warning():
    V = SampledPotential1D(grid=GRID, values=np.ones(GRID.n))
    with pytest.warns(RuntimeWarning, match="truncation"):
        ground_state_1d(V, richardson=False)


@pytest.mark.parametrize("nu", [0.5, 2.0, 4.0])
def test_scaling(p22, nu):
    V = optimal_samples(P.mu_one(p22), p22, grid=Grid1D.symmetric(20.0, 2000))
    Vn = scale_potential(V, nu)
    assert ground_state_1d(Vn).lambda1 / nu**2 == pytest.approx(ground_state_1d(V).lambda1, rel=1e-9)
    assert lq_norm_1d(Vn, 2.0) / lq_norm_1d(V, 2.0) == pytest.approx(nu ** 1.5, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.lists(bump, min_size=1, max_size=3), st.sampled_from([1.5, 2.0, 3.0]))
def test_keller_inequality(bs, q):
    assert keller_gap(bumps(bs), P.make_params(2, q)) >= -1e-6


@settings(max_examples=20, deadline=None)
@given(st.lists(bump, min_size=1, max_size=3), st.floats(1.05, 2.0))
def test_monotone_in_potential(bs, factor):
    V = bumps(bs)
    W = SampledPotential1D(grid=V.grid, values=factor * V.values)
    assert ground_state_1d(W).lambda1 >= ground_state_1d(V).lambda1 - 1e-10


WIDE = Grid1D.symmetric(60.0, 2999)


@settings(max_examples=15, deadline=None)
@given(st.lists(bump, min_size=1, max_size=2), st.integers(-40, 40))
def test_translation_invariance(bs, k):
    """Shifts by whole grid steps; the box is wide enough that truncation is invisible."""
    shift = k * WIDE.h
    V = bumps(bs, WIDE)
    e = ground_state_1d(V).lambda1
    assume(e > 0.1)
    W = bumps([(a, c + shift, w) for a, c, w in bs], WIDE)
    assert ground_state_1d(W).lambda1 == pytest.approx(e, abs=1e-9)


@pytest.mark.parametrize("q", [2.0, 3.0])
@pytest.mark.parametrize("f", [0.3, 1.0, 3.0])
def test_equality_family_gap(q, f):
    pr = P.make_params(2, q)
    assert abs(keller_gap(optimal_samples(f * P.mu_one(pr), pr), pr)) <= 1e-4


def test_potential_file_roundtrip(tmp_path, p22):
    V = optimal_samples(P.mu_one(p22), p22, grid=Grid1D.symmetric(20.0, 800))
    path = tmp_path / "v.txt"
    save_potential_1d(V, path)
    W = load_potential_1d(path)
    assert W.grid.n == V.grid.n
    assert W.grid.h == pytest.approx(V.grid.h, rel=1e-12)
    assert np.array_equal(W.values, V.values)
    assert ground_state_1d(W).lambda1 == pytest.approx(ground_state_1d(V.__class__(V.grid, V.values)).lambda1,
                                                       rel=1e-12)


def test_nonuniform_file_rejected(tmp_path):
    s = np.linspace(-5, 5, 40)
    s[10] += 0.01
    path = tmp_path / "v.txt"
    np.savetxt(path, np.column_stack([s, np.exp(-s**2)]))
    with pytest.raises(FormatError, match="uniform"):
        load_potential_1d(path)


@pytest.mark.parametrize("text", ["1 2 3\n" * 20, "a b\n" * 20, "0 1\n1 2\n"])
def test_malformed_potential_file(tmp_path, text):
    path = tmp_path / "v.txt"
    path.write_text(text)
    with pytest.raises(FormatError):
        load_potential_1d(path)


def test_sampled_potential_validation():
    with pytest.raises(ValueError):
        SampledPotential1D(grid=GRID, values=np.zeros(3))
    with pytest.raises(ValueError):
        SampledPotential1D(grid=GRID, values=np.full(GRID.n, np.nan))
