"""Frequency-truncated data on the torus and the exact linear flow.

Convention: ``u(x) = sum_xi c(xi) exp(i xi.x)`` on ``(R / 2 pi Z)^n`` so that
``||u||_{L^2}^2 = (2 pi)^n sum |c(xi)|^2``.  Coefficients are stored densely
on the box ``[-R, R]^n``; index ``xi + R`` along each axis.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import DimensionMismatch, GridTooCoarse, SingularPoint
from .phase import PhaseFunction, gradients, hessians

TWO_PI = 2.0 * np.pi


@lru_cache(maxsize=32)
def lattice(n, R):
    """Integer frequencies of the box ``[-R, R]^n``, shape ``(2R+1,)*n + (n,)``."""
    g = np.arange(-R, R + 1, dtype=float)
    pts = np.stack(np.meshgrid(*([g] * n), indexing="ij"), axis=-1)
    pts.setflags(write=False)
    return pts


@lru_cache(maxsize=32)
def _lattice_abs(n, R):
    r = np.linalg.norm(lattice(n, R), axis=-1)
    r.setflags(write=False)
    return r


@lru_cache(maxsize=64)
def _phase_table(phi, n, R):
    vals = np.asarray(phi(lattice(n, R)), dtype=float)
    vals.setflags(write=False)
    return vals


def fast_len(target, odd=False):
    """Smallest FFT-friendly length >= target (odd lengths use factors 3, 5, 7)."""
    target = int(target)
    if not odd:
        return sfft.next_fast_len(target)
    m = target if target % 2 else target + 1
    while True:
        k = m
        for f in (3, 5, 7):
            while k % f == 0:
                k //= f
        if k == 1:
            return m
        m += 2


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Finitely supported Fourier coefficients on ``[-R, R]^n``."""

    n: int
    box_radius: int
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex)
        shape = (2 * self.box_radius + 1,) * self.n
        if c.shape != shape:
            raise DimensionMismatch(f"coefficients have shape {c.shape}, expected {shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zeros(cls, n, R):
        return cls(n, R, np.zeros((2 * R + 1,) * n, dtype=complex))

    @classmethod
    def from_modes(cls, n, R, modes):
        """Build from a mapping ``{xi: coefficient}`` with integer tuples ``xi``."""
        c = np.zeros((2 * R + 1,) * n, dtype=complex)
        for xi, v in modes.items():
            xi = (xi,) if np.isscalar(xi) else tuple(xi)
            if len(xi) != n:
                raise DimensionMismatch(f"mode {xi} is not {n}-dimensional")
            if max(abs(int(k)) for k in xi) > R:
                raise ValueError(f"mode {xi} lies outside the box of radius {R}")
            c[tuple(int(k) + R for k in xi)] = v
        return cls(n, R, c)

    def freqs(self):
        return lattice(self.n, self.box_radius)

    def coefficient(self, xi):
        xi = (xi,) if np.isscalar(xi) else tuple(xi)
        if max(abs(int(k)) for k in xi) > self.box_radius:
            return 0j
        return complex(self.coefficients[tuple(int(k) + self.box_radius for k in xi)])

    def support(self):
        """Boolean mask of nonzero coefficients."""
        return self.coefficients != 0

    def support_radius(self):
        """Max-norm radius of the support (0 for the zero state)."""
        mask = self.support()
        if not mask.any():
            return 0
        return int(np.max(np.abs(self.freqs()[mask])))

    def l2(self):
        """The l^2 norm of the coefficient array (not the L^2 norm of u)."""
        return float(np.sqrt(np.sum(np.abs(self.coefficients) ** 2)))

    def with_coefficients(self, c):
        return SpectralState(self.n, self.box_radius, c)

    def scaled(self, factor):
        return self.with_coefficients(self.coefficients * factor)

    def resized(self, R):
        """Embed into (or truncate to) the box of radius ``R``."""
        R = int(R)
        out = np.zeros((2 * R + 1,) * self.n, dtype=complex)
        m = min(R, self.box_radius)
        src = tuple(slice(self.box_radius - m, self.box_radius + m + 1) for _ in range(self.n))
        dst = tuple(slice(R - m, R + m + 1) for _ in range(self.n))
        out[dst] = self.coefficients[src]
        return SpectralState(self.n, R, out)

    def conj(self):
        """Coefficients of the complex conjugate function."""
        return self.with_coefficients(np.conj(self.coefficients[(slice(None, None, -1),) * self.n]))

    def to_dict(self):
        flat = self.coefficients.ravel()
        return {
            "n": self.n,
            "box_radius": self.box_radius,
            "coefficients": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_dict(cls, d):
        n, R = int(d["n"]), int(d["box_radius"])
        arr = np.array(d["coefficients"], dtype=float).reshape(-1, 2)
        c = (arr[:, 0] + 1j * arr[:, 1]).reshape((2 * R + 1,) * n)
        return cls(n, R, c)

    def to_json(self):
        # repr of a Python float is the shortest exact round-trip decimal
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FrequencyBand:
    """Dyadic shell ``N <= |xi| < 2N`` (ball ``|xi| < 1`` for N = 0) or a cube
    ``max_i |xi_i - center_i| <= side / 2``."""

    kind: str
    N: int = 0
    center: tuple = ()
    side: int = 0

    @classmethod
    def dyadic(cls, N):
        N = int(N)
        if N < 0 or (N > 0 and N & (N - 1)):
            raise ValueError("dyadic scale must be 0 or a power of two")
        return cls("dyadic", N=N)

    @classmethod
    def cube(cls, center, side):
        center = (int(center),) if np.isscalar(center) else tuple(int(c) for c in center)
        if int(side) < 0:
            raise ValueError("side length must be nonnegative")
        return cls("cube", center=center, side=int(side))

    def mask(self, n, R):
        if self.kind == "dyadic":
            r = _lattice_abs(n, R)
            if self.N == 0:
                return r < 1
            return (r >= self.N) & (r < 2 * self.N)
        if len(self.center) != n:
            raise DimensionMismatch("cube center has wrong dimension")
        d = np.abs(lattice(n, R) - np.asarray(self.center, dtype=float))
        return np.all(d <= self.side / 2.0, axis=-1)

    def radius(self):
        """Smallest box radius containing the band."""
        if self.kind == "dyadic":
            return max(0, 2 * self.N - 1)
        return int(max(abs(c) for c in self.center) + self.side // 2)


def project(state: SpectralState, band: FrequencyBand) -> SpectralState:
    return state.with_coefficients(np.where(band.mask(state.n, state.box_radius),
                                            state.coefficients, 0))


def propagate(state: SpectralState, phi: PhaseFunction, t) -> SpectralState:
    """Exact linear flow: multiply each coefficient by ``exp(i t phi(xi))``."""
    if phi.n != state.n:
        raise DimensionMismatch("phase and state dimensions differ")
    vals = _phase_table(phi, state.n, state.box_radius)
    return state.with_coefficients(state.coefficients * np.exp(1j * float(t) * vals))


def sobolev_norm(state: SpectralState, s) -> float:
    """``((2 pi)^n sum <xi>^(2s) |c(xi)|^2)^(1/2)`` with ``<xi> = (1+|xi|^2)^(1/2)``."""
    r2 = _lattice_abs(state.n, state.box_radius) ** 2
    w = (1.0 + r2) ** float(s)
    return float(np.sqrt(TWO_PI**state.n * np.sum(w * np.abs(state.coefficients) ** 2)))


def evaluate_direct(state: SpectralState, phi: PhaseFunction, t, x):
    """Direct summation of ``sum c(xi) exp(i(x.xi + t phi(xi)))`` at points ``x``
    of shape ``(..., n)``.  Slow; used for checks."""
    x = np.asarray(x, dtype=float)
    mask = state.support()
    xi = state.freqs()[mask]
    c = state.coefficients[mask] * np.exp(1j * float(t) * np.asarray(phi(xi)))
    return np.exp(1j * (x @ xi.T)) @ c


class FieldSampler:
    """Samples ``exp(i s t phi)`` evolutions of a fixed coefficient set on an
    ``M^n`` grid, optionally after a frequency shift that leaves ``|u|``
    unchanged (``center=True``).

    This is the workhorse shared by synthesis, norm quadrature and the
    extremizer's adjoint.
    """

    def __init__(self, state: SpectralState, phi: PhaseFunction, M=None, sign=1,
                 center=False, coeffs=None, workers=None):
        if phi.n != state.n:
            raise DimensionMismatch("phase and state dimensions differ")
        self.n = state.n
        mask = state.support() if coeffs is None else np.ones(state.coefficients.shape, bool)
        self.mask = mask
        self.xi = state.freqs()[mask]
        self.coeffs = (state.coefficients if coeffs is None else coeffs)[mask]
        self.phases = float(sign) * _phase_table(phi, state.n, state.box_radius)[mask]
        if len(self.xi):
            lo, hi = self.xi.min(axis=0), self.xi.max(axis=0)
        else:
            lo = hi = np.zeros(self.n)
        self.shift = np.round((lo + hi) / 2.0) if center else np.zeros(self.n)
        shifted = (self.xi - self.shift).astype(int)
        self.half_width = int(np.max(np.abs(shifted))) if len(shifted) else 0
        self.M = int(M) if M is not None else fast_len(2 * self.half_width + 1)
        if self.M < 2 * self.half_width + 1:
            raise GridTooCoarse(f"M={self.M} < 2R+1={2 * self.half_width + 1}")
        self.index = tuple(shifted[:, i] % self.M for i in range(self.n))
        self.workers = workers

    @property
    def phase_range(self):
        if len(self.phases) == 0:
            return 0.0
        return float(self.phases.max() - self.phases.min())

    def spectra(self, times, coeffs=None):
        c = self.coeffs if coeffs is None else coeffs
        times = np.atleast_1d(np.asarray(times, dtype=float))
        A = np.zeros((len(times),) + (self.M,) * self.n, dtype=complex)
        A[(slice(None),) + self.index] = c[None, :] * np.exp(1j * times[:, None] * self.phases[None, :])
        return A

    def fields(self, times, coeffs=None):
        """Field values, shape ``(len(times), M, ..., M)``."""
        A = self.spectra(times, coeffs)
        axes = tuple(range(1, self.n + 1))
        return sfft.ifftn(A, axes=axes, norm="forward", overwrite_x=True, workers=self.workers)

    def pair(self, times, fields):
        """Coefficients of ``fields`` at the support frequencies, with the
        time phase removed: ``mean_x f(t,x) exp(-i(x.xi + t phi(xi)))``."""
        axes = tuple(range(1, self.n + 1))
        F = sfft.fftn(fields, axes=axes, norm="forward", workers=self.workers)
        vals = F[(slice(None),) + self.index]
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return vals * np.exp(-1j * times[:, None] * self.phases[None, :])


@dataclass(frozen=True)
class SpaceTimeGrid:
    spatial_points_per_dim: int
    time_nodes: tuple

    @property
    def M(self):
        return self.spatial_points_per_dim

    def oversampling(self, R):
        return self.M / (2 * R + 1)


def synthesize(state: SpectralState, grid: SpaceTimeGrid, phi: PhaseFunction):
    """Evaluate the evolution at ``x_j = 2 pi j / M`` for every time node.

    Returns an array of shape ``(len(time_nodes), M, ..., M)``.
    """
    R = state.support_radius()
    if grid.M < 2 * R + 1:
        raise GridTooCoarse(f"grid M={grid.M} cannot hold support radius {R}")
    sampler = FieldSampler(state, phi, M=grid.M)
    return sampler.fields(np.asarray(grid.time_nodes, dtype=float))


@dataclass(frozen=True, eq=False)
class RecenteredState:
    base: SpectralState
    center: tuple
    shift_velocity: np.ndarray
    recentered_phase: PhaseFunction


def recentered_phase(phi: PhaseFunction, xi0) -> PhaseFunction:
    """``psi(xi') = phi(xi0 + xi') - phi(xi0) - xi'.grad phi(xi0)`` with exact jets."""
    xi0 = np.asarray(xi0, dtype=float).reshape(phi.n)
    try:
        g0 = gradients(phi, xi0)
    except SingularPoint as e:
        raise SingularPoint(f"gradient unavailable at cube center {tuple(xi0)}") from e
    p0 = float(phi(xi0))

    def psi(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(phi(xi0 + x)) - p0 - x @ g0

    def dpsi(x):
        return gradients(phi, xi0 + np.asarray(x, dtype=float)) - g0

    def d2psi(x):
        return hessians(phi, xi0 + np.asarray(x, dtype=float))

    return PhaseFunction.custom(psi, phi.n, dpsi, d2psi,
                                label=f"recentered({phi.kind}@{tuple(int(v) for v in xi0)})")


def recenter(state: SpectralState, phi: PhaseFunction, band: FrequencyBand) -> RecenteredState:
    """Rewrite the cube-localized evolution as a low-frequency one.

    ``u(t, x) = exp(i(x.xi0 + t phi(xi0))) w(t, x + t grad phi(xi0))`` where
    ``w`` evolves under the recentered phase from ``w0(xi') = u0(xi0 + xi')``.
    """
    if band.kind != "cube":
        raise ValueError("recentering needs a cube band")
    n = state.n
    xi0 = np.asarray(band.center, dtype=float)
    psi = recentered_phase(phi, xi0)
    r = band.side // 2
    local = lattice(n, r) + xi0
    src = np.rint(local).astype(int) + state.box_radius
    inside = np.all((src >= 0) & (src <= 2 * state.box_radius), axis=-1)
    w = np.zeros((2 * r + 1,) * n, dtype=complex)
    idx = tuple(np.clip(src[..., i], 0, 2 * state.box_radius) for i in range(n))
    w[inside] = state.coefficients[idx][inside]
    velocity = gradients(phi, xi0)
    return RecenteredState(SpectralState(n, r, w), tuple(int(v) for v in xi0), velocity, psi)
