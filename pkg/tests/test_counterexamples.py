import math

import numpy as np
import pytest

from dlab.counterexamples import (
    build_counterexample,
    counterexample_sweep,
    cubic,
    cubic_hs_norm,
    matching_phase,
    picard_lower_bound,
    threshold_table,
    verify_stationarity,
)
from dlab.errors import PhaseMismatch
from dlab.phase import PhaseFunction
from dlab.spectral import sobolev_norm
from oracles import cubic_direct, sobolev_from_modes


def test_build_2d_examples():
    d = build_counterexample("hyperbolic_2d", 1)
    c = d.state.coefficients
    assert np.count_nonzero(c) == 3
    np.testing.assert_array_equal(c[[0, 1, 2], [2, 1, 0]], [1, 1, 1])
    d = build_counterexample("hyperbolic_2d", 4)
    nz = d.state.coefficients[d.state.support()]
    assert len(nz) == 9 and np.all(nz == 0.5)
    f = d.state.freqs()[d.state.support()]
    assert np.all(f[:, 0] == -f[:, 1])


def test_build_4d_example():
    d = build_counterexample("hyperbolic_4d", 2)
    nz = d.state.coefficients[d.state.support()]
    assert len(nz) == 25 and np.all(nz == 0.5)


def test_bad_variant():
    with pytest.raises(ValueError):
        build_counterexample("elliptic", 4)
    with pytest.raises(ValueError):
        build_counterexample("hyperbolic_2d", 0)


@pytest.mark.parametrize("variant,N", [("hyperbolic_2d", 8), ("hyperbolic_4d", 4)])
def test_stationary(variant, N):
    assert verify_stationarity(build_counterexample(variant, N), matching_phase(variant)) == 0.0


def test_phase_mismatch():
    d = build_counterexample("hyperbolic_2d", 4)
    with pytest.raises(PhaseMismatch):
        verify_stationarity(d, PhaseFunction.quadratic(1, 1))
    with pytest.raises(PhaseMismatch):
        verify_stationarity(d, PhaseFunction.quadratic(1, -1, 1, -1))


@pytest.mark.parametrize("variant,N", [("hyperbolic_2d", 1), ("hyperbolic_2d", 2),
                                       ("hyperbolic_4d", 1), ("hyperbolic_4d", 2)])
def test_cubic_against_triple_sum(variant, N):
    s = build_counterexample(variant, N).state
    w = cubic(s)
    ref = cubic_direct(s)
    for z, v in ref.items():
        assert w.coefficient(z) == pytest.approx(v, abs=1e-12)
    assert sobolev_norm(w, 0) == pytest.approx(sobolev_from_modes(ref, 0, s.n), rel=1e-12)


def test_cubic_random_state_against_triple_sum(rstate):
    s = rstate(2, 2, 11, density=0.5)
    w, ref = cubic(s), cubic_direct(s)
    assert sobolev_norm(w, 1) == pytest.approx(sobolev_from_modes(ref, 1, 2), rel=1e-12)


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("s", [0.0, 0.5, 1.0])
def test_factorized_4d_matches_full_grid(N, s):
    d = build_counterexample("hyperbolic_4d", N)
    assert cubic_hs_norm(d, s) == pytest.approx(cubic_hs_norm(d, s, factorized=False), rel=1e-10)


@pytest.mark.parametrize("N", [2, 5, 16, 40])
def test_2d_cubic_l2_by_convolution_count(N):
    # the cubic's coefficient at (z, -z) is N^(-3/2) times the number of
    # (a, b, c) in [-N, N]^3 with a - b + c = z
    ones = np.ones(2 * N + 1)
    counts = np.convolve(np.convolve(ones, ones), ones)
    expect = 2 * math.pi * N**-1.5 * math.sqrt(float(np.sum(counts**2)))
    d = build_counterexample("hyperbolic_2d", N)
    assert cubic_hs_norm(d, 0) == pytest.approx(expect, rel=1e-10)


@pytest.mark.parametrize("variant", ["hyperbolic_2d", "hyperbolic_4d"])
@pytest.mark.parametrize("s", [0.0, 0.5, 1.0])
def test_data_hs_scales_like_N_to_s(variant, s):
    for N in (4, 8, 16, 32, 64):
        d = build_counterexample(variant, N)
        w = (1.0 + np.sum(d.points**2, axis=1)) ** s * np.abs(d.values) ** 2
        r = math.sqrt((2 * math.pi) ** d.n * float(np.sum(w))) / N**s
        assert 0.25 <= r / (2 * math.pi) ** (d.n / 2) <= 4


def test_sparse_hs_matches_dense():
    d = build_counterexample("hyperbolic_4d", 3)
    w = (1.0 + np.sum(d.points**2, axis=1)) ** 0.7 * np.abs(d.values) ** 2
    assert math.sqrt((2 * math.pi) ** 4 * float(np.sum(w))) == pytest.approx(
        sobolev_norm(d.state, 0.7), rel=1e-13)


def test_sweep_rows_and_hs_column():
    rows, fit = counterexample_sweep("hyperbolic_2d", 0.5, [16, 32, 64, 128])
    assert [r.N for r in rows] == [16, 32, 64, 128]
    for r in rows:
        d = build_counterexample("hyperbolic_2d", r.N)
        assert r.hs_norm == pytest.approx(sobolev_norm(d.state, 0.5), rel=1e-12)
        assert r.ratio == pytest.approx(r.cubic_hs_norm / r.N**1.5, rel=1e-12)
    assert abs(fit.slope - 1.5) <= 0.1


def test_picard_scales_with_T():
    d = build_counterexample("hyperbolic_2d", 8)
    phi = matching_phase("hyperbolic_2d")
    a, ra = picard_lower_bound(d, phi, 0.5, 1.0)
    b, rb = picard_lower_bound(d, phi, 0.5, 0.25)
    assert b == pytest.approx(a / 4, rel=1e-14) and ra == pytest.approx(rb, rel=1e-14)


def test_threshold_table():
    assert threshold_table("hyperbolic_2d") == 0.5
    assert threshold_table("hyperbolic_4d") == 1.0
    assert threshold_table(0) == 0.0
