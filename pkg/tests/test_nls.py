import math

import numpy as np
import pytest
import scipy.fft as sfft

from dlab.counterexamples import build_counterexample, matching_phase
from dlab.errors import Overflow
from dlab.nls import SplitStepConfig, _Stepper, solve, step_strang, wellposedness_probe
from dlab.phase import PhaseFunction
from dlab.spectral import SpectralState, propagate

FRAC = PhaseFunction.fractional(1.5)
HYP = PhaseFunction.quadratic(1, -1)


def h1_data(R=8, seed=0):
    rng = np.random.default_rng(seed)
    k = np.arange(-R, R + 1)
    c = (rng.standard_normal(2 * R + 1) + 1j * rng.standard_normal(2 * R + 1)) / (1 + k**2)
    return SpectralState(1, R, c)


def test_config_validation():
    with pytest.raises(ValueError):
        SplitStepConfig(FRAC, 2, 1e-3, 1, 4)
    with pytest.raises(ValueError):
        SplitStepConfig(FRAC, 1, 0.0, 1, 4)
    with pytest.raises(ValueError):
        SplitStepConfig(FRAC, 1, 1e-8, 1, 4)
    with pytest.raises(ValueError):
        SplitStepConfig(FRAC, 1, 1e-3, 1, 4, dealias="none")
    cfg = SplitStepConfig(FRAC, 1, 1e-3, 1, 4)
    assert cfg.M >= 25 and cfg.M % 2 == 1 and cfg.steps == 1000


@pytest.mark.parametrize("sign", [1, -1])
def test_single_mode_is_phase_rotation(sign):
    c = 0.8 - 0.3j
    u0 = SpectralState.from_modes(1, 5, {5: c})
    cfg = SplitStepConfig(FRAC, sign, 1e-2, 0.5, 5)
    tr = solve(u0, cfg, snapshot_every=10)
    for t, s in tr.snapshots:
        assert abs(abs(s.coefficient(5)) - abs(c)) < 1e-13
        expect = c * np.exp(1j * t * (5**1.5 - sign * abs(c) ** 2))
        assert abs(s.coefficient(5) - expect) < 1e-12


def test_linear_limit_single_step():
    u0 = SpectralState.from_modes(1, 3, {3: 0.6j})
    cfg = SplitStepConfig(FRAC, 1, 1e-3, 1e-3, 3)
    one = step_strang(u0, cfg).resized(3)
    lin = propagate(u0, FRAC, 1e-3)
    assert np.max(np.abs(np.abs(one.coefficients) - np.abs(lin.coefficients))) < 1e-8


def test_linear_flow_when_sign_zero():
    u0 = h1_data()
    tr = solve(u0, SplitStepConfig(FRAC, 0, 1e-3, 0.2, 8))
    ref = propagate(u0.resized(tr.final.box_radius), FRAC, 0.2)
    assert np.max(np.abs(tr.final.coefficients - ref.coefficients)) < 1e-8


def test_wang_mass_conservation():
    u0 = build_counterexample("hyperbolic_2d", 4).state
    tr = solve(u0, SplitStepConfig(HYP, 1, 1e-3, 0.1, 4))
    m = np.array([v for _, v in tr.mass_ledger])
    assert len(m) == 101
    assert np.max(np.abs(m - m[0])) / m[0] < 1e-10


@pytest.mark.parametrize("dealias", ["alias_free_cubic", "two_thirds"])
def test_mass_drift_random_data(dealias):
    u0 = h1_data(6, 3)
    tr = solve(u0, SplitStepConfig(FRAC, -1, 2e-3, 0.5, 6, dealias), snapshot_every=25)
    m = np.array([v for _, v in tr.mass_ledger])
    if dealias == "alias_free_cubic":
        assert np.max(np.abs(m - m[0])) / m[0] <= 1e-8
    else:
        assert np.all(np.diff(m) <= 1e-12 * m[0])


def test_zero_data_stays_zero():
    tr = solve(SpectralState.zeros(2, 3), SplitStepConfig(HYP, 1, 1e-2, 0.1, 3))
    assert all(not s.coefficients.any() for _, s in tr.snapshots)


def test_conjugation_symmetry():
    phi = PhaseFunction.fractional(1.5, n=2)
    rng = np.random.default_rng(5)
    c = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
    u0 = SpectralState(2, 3, 0.3 * c)
    a = solve(u0, SplitStepConfig(phi, 1, 5e-3, 0.15, 3), snapshot_every=10)
    b = solve(u0.conj(), SplitStepConfig(phi.negated(), -1, 5e-3, 0.15, 3), snapshot_every=10)
    assert len(a.snapshots) == 4
    for (ta, sa), (tb, sb) in list(zip(a.snapshots, b.snapshots))[1:]:
        assert ta == tb
        np.testing.assert_allclose(sb.coefficients, sa.conj().coefficients, rtol=0, atol=1e-10)


def _final(u0, dt, T=0.1):
    return solve(u0, SplitStepConfig(FRAC, 1, dt, T, u0.box_radius), snapshot_every=10**9).final


def test_strang_self_convergence():
    u0 = h1_data(8, 1)
    a, b, c = (_final(u0, dt).coefficients for dt in (1e-2, 5e-3, 2.5e-3))
    e1, e2 = np.linalg.norm(a - b), np.linalg.norm(b - c)
    assert 3 <= e1 / e2 <= 5
    assert 1.8 <= math.log2(e1 / e2) <= 2.2


def test_time_reversibility():
    u0 = h1_data(8, 2).scaled(3.0)
    fwd = solve(u0, SplitStepConfig(FRAC, 1, 1e-3, 0.1, 8), snapshot_every=10**9).final
    # same grid on the way back: the config is sized from the original radius
    back = solve(fwd, SplitStepConfig(FRAC, 1, -1e-3, 0.1, 8), snapshot_every=10**9).final
    ref = u0.resized(back.box_radius).coefficients
    assert np.linalg.norm(back.coefficients - ref) / np.linalg.norm(ref) < 1e-6


@pytest.mark.parametrize("N", [2, 4, 8])
def test_wang_equals_pointwise_ode(N):
    u0 = build_counterexample("hyperbolic_2d", N).state
    cfg = SplitStepConfig(matching_phase("hyperbolic_2d"), 1, 1e-3, 0.01, N)
    tr = solve(u0, cfg, snapshot_every=10**9)
    st = _Stepper(cfg, 2)
    u = sfft.ifftn(st.to_grid(u0), norm="forward")
    ode = np.exp(-1j * np.abs(u) ** 2 * 0.01) * u
    v = sfft.ifftn(st.to_grid(tr.final), norm="forward")
    assert np.max(np.abs(v - ode)) < 1e-6


def test_overflow_guard():
    u0 = SpectralState.from_modes(1, 1, {1: 2e12})
    tr = solve(u0, SplitStepConfig(FRAC, 1, 1e-3, 0.01, 1))
    assert tr.overflow and tr.halt_time == pytest.approx(1e-3)
    assert len(tr.snapshots) == 1
    cfg = SplitStepConfig(FRAC, 1, 1e-3, 0.01, 1)
    st = _Stepper(cfg, 1)
    with pytest.raises(Overflow) as ei:
        st.step(st.to_grid(u0), 0.5)
    assert ei.value.t == 0.5


def test_sobolev_ledger():
    u0 = h1_data(4)
    tr = solve(u0, SplitStepConfig(FRAC, 0, 1e-2, 0.1, 4), snapshot_every=5, hs=(0.0, 1.0))
    for s in (0.0, 1.0):
        vals = [v for _, v in tr.hs_ledger[s]]
        assert len(vals) == 3
        np.testing.assert_allclose(vals, vals[0], rtol=1e-12)
    assert tr.hs_ledger[0.0][0][1] == pytest.approx(tr.mass_ledger[0][1], rel=1e-12)


def test_probe_linear_modulus_is_one():
    rows = wellposedness_probe(HYP, 0.5, [4, 8], 0.01, 0.2, sign=0)
    for r in rows:
        assert r.modulus == pytest.approx(1.0, abs=1e-10) and not r.overflow_flag


def test_probe_below_threshold_grows():
    rows = wellposedness_probe(HYP, 0.25, [4, 8, 16], 0.01, 1.0)
    m = [r.modulus for r in rows]
    assert m[0] < m[1] < m[2]


def test_probe_above_threshold_bounded():
    rows = wellposedness_probe(HYP, 0.75, [4, 8, 16], 0.01, 1.0)
    m = [r.modulus for r in rows]
    assert max(m) / min(m) <= 4


def test_probe_validation():
    with pytest.raises(ValueError):
        wellposedness_probe(HYP, -0.1, [4], 0.01, 0.1)
    with pytest.raises(ValueError):
        wellposedness_probe(HYP, 0.5, [4], 0.6, 0.1)
    with pytest.raises(ValueError):
        wellposedness_probe(FRAC, 0.5, [4], 0.01, 0.1)
