"""Strang split-step integrator for ``i u_t + phi(D) u = sign |u|^2 u`` on T^n.

The solution lives on an odd ``M^n`` grid whose Fourier box is the
computational state.  The linear substep is the exact multiplier
``exp(i dt/2 phi)``; the nonlinear substep is the exact pointwise rotation
``u -> exp(-i sign |u|^2 dt) u``.  Both are unitary on the grid, so mass is
conserved up to rounding unless the 2/3 filter is switched on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import Overflow
from .phase import PhaseFunction
from .spectral import TWO_PI, SpectralState, fast_len, lattice, sobolev_norm

BLOWUP = 1e12


@dataclass(frozen=True)
class SplitStepConfig:
    """``box_radius`` is the radius of the data; the grid is sized from it."""

    phi: PhaseFunction
    sign: int
    dt: float
    T: float
    box_radius: int
    dealias: str = "alias_free_cubic"
    workers: int | None = None

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be +1, -1 or 0 (linear)")
        if self.dt == 0:
            raise ValueError("dt must be nonzero")
        if self.dealias not in ("alias_free_cubic", "two_thirds"):
            raise ValueError(f"unknown dealiasing {self.dealias!r}")
        if abs(self.T / self.dt) > 1e7:
            raise ValueError("T/dt exceeds 1e7 steps")

    @property
    def M(self):
        if self.dealias == "alias_free_cubic":
            return fast_len(3 * (2 * self.box_radius) + 1, odd=True)
        return fast_len(2 * self.box_radius + 1, odd=True)

    @property
    def grid_radius(self):
        return (self.M - 1) // 2

    @property
    def steps(self):
        return int(round(abs(self.T / self.dt)))


class _Stepper:
    def __init__(self, cfg: SplitStepConfig, n):
        self.cfg, self.n = cfg, n
        M = cfg.M
        self.M, self.Rg = M, (M - 1) // 2
        k = np.rint(sfft.fftfreq(M, 1.0 / M))
        ks = np.stack(np.meshgrid(*([k] * n), indexing="ij"), axis=-1)
        ph = np.asarray(cfg.phi(ks), dtype=float)
        self.half = np.exp(0.5j * cfg.dt * ph)
        if cfg.dealias == "two_thirds":
            cut = M / 3.0
            self.filter = np.all(np.abs(ks) <= cut, axis=-1)
        else:
            self.filter = None
        self.idx = tuple(lattice(n, self.Rg)[..., i].astype(int) % M for i in range(n))

    def to_grid(self, state: SpectralState):
        if state.box_radius > self.Rg:
            raise ValueError(f"state radius {state.box_radius} exceeds grid radius {self.Rg}")
        st = state.resized(self.Rg)
        A = np.zeros((self.M,) * self.n, dtype=complex)
        A[self.idx] = st.coefficients
        return A

    def to_state(self, A):
        return SpectralState(self.n, self.Rg, A[self.idx])

    def step(self, A, t=None):
        cfg = self.cfg
        A = A * self.half
        if cfg.sign != 0:
            u = sfft.ifftn(A, norm="forward", workers=cfg.workers)
            a2 = u.real**2 + u.imag**2
            peak = float(a2.max())
            if not math.isfinite(peak) or peak > BLOWUP**2:
                raise Overflow(f"field magnitude exceeded {BLOWUP:g}", t)
            u *= np.exp(-1j * cfg.sign * cfg.dt * a2)
            A = sfft.fftn(u, norm="forward", workers=cfg.workers)
        A = A * self.half
        if self.filter is not None:
            A = np.where(self.filter, A, 0)
        return A


def step_strang(state: SpectralState, cfg: SplitStepConfig) -> SpectralState:
    """One Strang step; the result lives on the computational box."""
    st = _Stepper(cfg, state.n)
    return st.to_state(st.step(st.to_grid(state)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    snapshots: tuple
    mass_ledger: tuple
    hs_ledger: dict = field(default_factory=dict)
    overflow: bool = False
    halt_time: float | None = None

    @property
    def final(self):
        return self.snapshots[-1][1]


def solve(u0: SpectralState, cfg: SplitStepConfig, snapshot_every=1, hs=(), observer=None):
    """Iterate Strang steps from ``u0`` to time ``T``.

    ``hs`` lists Sobolev exponents to track.  ``observer(t, A_grid)`` is called
    after every step.  On Overflow the partial trajectory is returned with
    ``overflow=True``.
    """
    st = _Stepper(cfg, u0.n)
    A = st.to_grid(u0)
    first = st.to_state(A)
    snaps = [(0.0, first)]
    mass = [(0.0, math.sqrt(TWO_PI**u0.n * float(np.sum(np.abs(A) ** 2))))]
    hs_led = {float(s): [(0.0, sobolev_norm(first, s))] for s in hs}
    overflow, halt = False, None
    steps = cfg.steps
    for j in range(1, steps + 1):
        t = j * cfg.dt
        try:
            A = st.step(A, t)
        except Overflow:
            overflow, halt = True, t
            break
        if observer is not None:
            observer(t, A)
        if j % snapshot_every == 0 or j == steps:
            state = st.to_state(A)
            snaps.append((t, state))
            mass.append((t, math.sqrt(TWO_PI**u0.n * float(np.sum(np.abs(A) ** 2)))))
            for s in hs_led:
                hs_led[s].append((t, sobolev_norm(state, s)))
    return Trajectory(tuple(snaps), tuple(mass), {s: tuple(v) for s, v in hs_led.items()},
                      overflow, halt)


@dataclass(frozen=True)
class ProbeRow:
    N: int
    s: float
    family: str
    epsilon: float
    modulus: float
    overflow_flag: bool


def _probe_data(phi, family, N):
    from .counterexamples import build_counterexample
    from .exponents import build_family_data

    if family == "wang":
        variant = {2: "hyperbolic_2d", 4: "hyperbolic_4d"}.get(phi.n)
        if variant is None:
            raise ValueError("wang family needs n = 2 or n = 4")
        return build_counterexample(variant, N).state
    return build_family_data(phi, N, family)


def wellposedness_probe(phi: PhaseFunction, s, N_list, epsilon, T, family="wang", sign=1,
                        dt=None, dealias="alias_free_cubic", workers=None):
    """Continuity-modulus proxy across frequency scales.

    Data ``u0`` is normalized to ``||u0||_{H^s} = 1`` and perturbed along
    itself, ``u0 + epsilon u0``.  The reported modulus is
    ``sup_t ||u(t) - U(t)||_{H^s} / epsilon``; for the linear flow it is 1.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    if not (0.0 < epsilon < 0.5):
        raise ValueError("epsilon must lie in (0, 0.5)")
    dt = float(dt) if dt is not None else min(1e-2, T / 100.0)
    rows = []
    for N in N_list:
        raw = _probe_data(phi, family, int(N))
        u0 = raw.scaled(1.0 / sobolev_norm(raw, s))
        v0 = u0.scaled(1.0 + epsilon)
        cfg = SplitStepConfig(phi, sign, dt, T, u0.box_radius, dealias, workers)
        st = _Stepper(cfg, u0.n)
        weights = np.zeros((cfg.M,) * u0.n)
        r2 = np.sum(lattice(u0.n, st.Rg) ** 2, axis=-1)
        weights[st.idx] = (1.0 + r2) ** s
        A, B = st.to_grid(u0), st.to_grid(v0)

        def dist(A, B):
            return math.sqrt(TWO_PI**u0.n * float(np.sum(weights * np.abs(A - B) ** 2)))

        worst = dist(A, B)
        overflow = False
        for j in range(1, cfg.steps + 1):
            try:
                A, B = st.step(A, j * dt), st.step(B, j * dt)
            except Overflow:
                overflow = True
                break
            worst = max(worst, dist(A, B))
        rows.append(ProbeRow(int(N), float(s), family, float(epsilon), worst / epsilon, overflow))
    return rows
