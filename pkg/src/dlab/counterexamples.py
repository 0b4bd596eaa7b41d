"""Stationary hyperbolic data and first-Picard-iterate growth."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import PhaseMismatch
from .fitting import loglog_fit
from .phase import PhaseFunction
from .spectral import SpectralState, fast_len, lattice, sobolev_norm

VARIANTS = {"hyperbolic_2d": 1, "hyperbolic_4d": 2}
STATIONARITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CounterexampleData:
    """Data on the null cone, stored as its ``(2N+1)^d`` modes; the dense
    box array is built on first access to ``state``."""

    variant: str
    N: int
    points: np.ndarray
    values: np.ndarray

    @property
    def n(self):
        return self.points.shape[1]

    @property
    def growth_exponent(self):
        """Number of free summation indices; the cubic grows like N^(d+s)."""
        return VARIANTS[self.variant]

    @cached_property
    def state(self) -> SpectralState:
        N = self.N
        c = np.zeros((2 * N + 1,) * self.n, dtype=complex)
        c[tuple((self.points + N).T)] = self.values
        return SpectralState(self.n, N, c)


def matching_phase(variant) -> PhaseFunction:
    if variant == "hyperbolic_2d":
        return PhaseFunction.quadratic(1, -1)
    if variant == "hyperbolic_4d":
        return PhaseFunction.quadratic(1, -1, 1, -1)
    raise ValueError(f"unknown variant {variant!r}")


def build_counterexample(variant, N) -> CounterexampleData:
    """``N^(-1/2) sum_{|k|<=N} e^{ik(x1-x2)}`` (2d) or its product analogue
    ``N^(-1) sum e^{ik1(x1-x2)} e^{ik2(x3-x4)}`` (4d), in the box of radius N."""
    N = int(N)
    if N < 1:
        raise ValueError("N must be positive")
    k = np.arange(-N, N + 1)
    if variant == "hyperbolic_2d":
        pts = np.stack([k, -k], axis=1)
        return CounterexampleData(variant, N, pts, np.full(len(k), N ** -0.5, dtype=complex))
    if variant == "hyperbolic_4d":
        K1, K2 = (a.ravel() for a in np.meshgrid(k, k, indexing="ij"))
        pts = np.stack([K1, -K1, K2, -K2], axis=1)
        return CounterexampleData(variant, N, pts, np.full(len(K1), 1.0 / N, dtype=complex))
    raise ValueError(f"unknown variant {variant!r}")


def verify_stationarity(data: CounterexampleData, phi: PhaseFunction, samples=16):
    """Max l^2 distance between propagated and original data over ``samples``
    times in ``[0, 1]``.  Raises PhaseMismatch if phi is nonzero on the support."""
    if phi.n != data.n:
        raise PhaseMismatch(f"phase dimension {phi.n} does not match data dimension {data.n}")
    vals = np.asarray(phi(data.points.astype(float)), dtype=float)
    worst = float(np.max(np.abs(vals)))
    if worst > STATIONARITY_TOL:
        raise PhaseMismatch(f"phase reaches {worst:g} on the data support")
    amp = np.abs(data.values)
    dev = 0.0
    for t in np.linspace(0.0, 1.0, samples):
        drift = amp * np.abs(np.exp(1j * t * vals) - 1.0)
        dev = max(dev, float(np.sqrt(np.sum(drift**2))))
    return dev


def cubic(state: SpectralState) -> SpectralState:
    """Coefficients of ``|u|^2 u`` on the box of radius ``3R``, computed on an
    alias-free odd grid of size ``>= 3(2R) + 1``."""
    n, R = state.n, state.box_radius
    M = fast_len(6 * R + 1, odd=True)
    A = np.zeros((M,) * n, dtype=complex)
    idx = tuple((lattice(n, R)[..., i].astype(int) % M) for i in range(n))
    A[idx] = state.coefficients
    u = sfft.ifftn(A, norm="forward")
    w = sfft.fftn(np.abs(u) ** 2 * u, norm="forward")
    R3 = 3 * R
    idx3 = tuple((lattice(n, R3)[..., i].astype(int) % M) for i in range(n))
    return SpectralState(n, R3, w[idx3])


def _tensor_hs(w: SpectralState, s):
    """H^s norm of ``w(x1, x2) w(x3, x4)`` without forming the 4d array."""
    mask = np.abs(w.coefficients) > 1e-14 * np.abs(w.coefficients).max()
    sq = np.sum(w.freqs()[mask] ** 2, axis=-1)
    amp = np.abs(w.coefficients[mask]) ** 2
    weights = (1.0 + sq[:, None] + sq[None, :]) ** float(s)
    return math.sqrt((2 * math.pi) ** 4 * float(amp @ weights @ amp))


def cubic_hs_norm(data: CounterexampleData, s, factorized=True):
    """``||(|u|^2 u)||_{H^s}`` for counterexample data.

    The 4d data is the product of two copies of the 2d data in ``(x1, x2)``
    and ``(x3, x4)``, so its cubic is the product of the 2d cubics.  With
    ``factorized=False`` the full 4d grid is used instead.
    """
    if data.variant == "hyperbolic_4d" and factorized:
        return _tensor_hs(cubic(build_counterexample("hyperbolic_2d", data.N).state), s)
    return sobolev_norm(cubic(data.state), s)


def picard_lower_bound(data: CounterexampleData, phi: PhaseFunction, s, T=1.0):
    """``T ||(|u|^2 u)||_{H^s}`` for stationary data and its ratio to
    ``T N^(d+s)`` with ``d`` the variant's growth exponent."""
    verify_stationarity(data, phi)
    hs = float(T) * cubic_hs_norm(data, s)
    return hs, hs / (float(T) * data.N ** (data.growth_exponent + float(s)))


def threshold_table(variant):
    """Regularity at which ``T N^(d+s)`` stops beating ``N^(3s)``: ``s = d/2``.

    Accepts a variant name or a growth exponent ``d`` directly.
    """
    d = VARIANTS[variant] if isinstance(variant, str) else variant
    return d / 2


@dataclass(frozen=True)
class CounterexampleRow:
    variant: str
    N: int
    s: float
    hs_norm: float
    cubic_hs_norm: float
    ratio: float


def counterexample_sweep(variant, s, N_list, T=1.0):
    """Rows for each N plus the fitted exponent of the cubic's H^s norm."""
    phi = matching_phase(variant)
    rows = []
    for N in N_list:
        data = build_counterexample(variant, N)
        hs, ratio = picard_lower_bound(data, phi, s, T)
        hs0 = math.sqrt((2 * math.pi) ** data.n * float(np.sum(
            (1.0 + np.sum(data.points**2, axis=1)) ** float(s) * np.abs(data.values) ** 2)))
        rows.append(CounterexampleRow(variant, int(N), float(s), hs0, hs, ratio))
    fit = loglog_fit([(math.log(r.N), math.log(r.cubic_hs_norm)) for r in rows])
    return rows, fit
