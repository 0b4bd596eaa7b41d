"""Dyadic sweeps, exponent fits and extremizer search."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EmptyShell, NoAscent
from .fitting import FitResult, loglog_fit
from .norms import (
    NormSpec,
    QuadratureResult,
    _CHUNK_ELEMS,
    bilinear_l2_norm,
    spacetime_lp_norm,
)
from .phase import PhaseFunction, fit_curvature_scale, theoretical_exponent
from .spectral import TWO_PI, FieldSampler, FrequencyBand, SpectralState, lattice

__all__ = [
    "SweepConfig", "SweepRow", "SweepResult", "ExtremizerOptions", "ExtremizerResult",
    "LpObjective", "FitResult", "loglog_fit", "build_family_data", "linear_strichartz_sweep",
    "bilinear_sweep", "extremizer_search", "predicted_linear_exponent",
    "predicted_bilinear_exponents", "FAMILIES",
]

FAMILIES = ("flat_annulus", "random_phase", "random_sparse", "null_cone", "extremized")


@dataclass(frozen=True)
class SweepConfig:
    phi: PhaseFunction
    p: float
    interval: tuple
    N_list: tuple
    data_family: str = "flat_annulus"
    seed: int = 0
    density: float = 0.5
    K: Optional[int] = None
    K_list: Optional[tuple] = None
    signs: tuple = ("+", "+")
    rel_tol: float = 1e-6
    extremizer_restarts: int = 2

    def __post_init__(self):
        object.__setattr__(self, "N_list", tuple(int(N) for N in self.N_list))
        object.__setattr__(self, "interval", tuple(float(t) for t in self.interval))
        if self.K_list is not None:
            object.__setattr__(self, "K_list", tuple(int(K) for K in self.K_list))
        Ns = self.N_list
        if any(b <= a for a, b in zip(Ns, Ns[1:])):
            raise ValueError("N_list must be strictly increasing")
        if any(N < 1 or N & (N - 1) for N in Ns):
            raise ValueError("N_list entries must be powers of two")
        if self.data_family not in FAMILIES:
            raise ValueError(f"unknown data family {self.data_family!r}")
        if not (0.0 < self.density <= 1.0):
            raise ValueError("density must lie in (0, 1]")


@dataclass(frozen=True)
class SweepRow:
    family: str
    N: int
    K: Optional[int]
    p: float
    norm: float
    data_l2: float
    log_N: float
    log_normalized: float
    est_rel_error: float
    time_nodes: int
    spatial_M: int


@dataclass(frozen=True)
class SweepResult:
    fit: FitResult
    rows: tuple
    family: str
    variable: str = "N"

    @property
    def slope(self):
        return self.fit.slope


def _annulus_mask(n, N):
    band = FrequencyBand.dyadic(N)
    R = band.radius()
    return band.mask(n, R), R


def build_family_data(phi: PhaseFunction, N, family="flat_annulus", seed=0, density=0.5,
                      p=4, interval=(0.0, 1.0), restarts=2):
    """Data supported in the dyadic shell at ``N`` for the named family."""
    n = phi.n
    mask, R = _annulus_mask(n, N)
    if not mask.any():
        raise EmptyShell(f"dyadic shell N={N} is empty")
    rng = np.random.default_rng([int(seed), int(N)])
    c = np.zeros(mask.shape, dtype=complex)
    if family == "flat_annulus":
        c[mask] = 1.0
    elif family == "random_phase":
        c[mask] = np.exp(1j * rng.uniform(0.0, TWO_PI, size=int(mask.sum())))
    elif family == "random_sparse":
        keep = rng.random(int(mask.sum())) < density
        if not keep.any():
            keep[rng.integers(len(keep))] = True
        vals = np.zeros(len(keep), dtype=complex)
        vals[keep] = 1.0
        c[mask] = vals
    elif family == "null_cone":
        vals = np.abs(np.asarray(phi(lattice(n, R))))
        scale = max(1.0, float(vals[mask].max()))
        cone = mask & (vals <= 1e-9 * scale)
        if not cone.any():
            raise EmptyShell(f"symbol has no zeros in the shell N={N}")
        c[cone] = 1.0
    elif family == "extremized":
        res = extremizer_search(phi, p, FrequencyBand.dyadic(N), interval,
                                ExtremizerOptions(restarts=restarts, seed=seed))
        return res.data
    else:
        raise ValueError(f"unknown data family {family!r}")
    return SpectralState(n, R, c)


def _map(fn, items, pool):
    if pool is None:
        return [fn(x) for x in items]
    return list(pool.map(fn, items))


def linear_strichartz_sweep(cfg: SweepConfig, pool=None) -> SweepResult:
    """Measure ``||exp(i t phi) P_N u0||_{L^p} / ||u0||_{l^2}`` over ``N`` and
    fit its log-log slope."""
    if cfg.K is not None or cfg.K_list is not None:
        raise ValueError("linear sweeps take no K")
    if len(cfg.N_list) < 4:
        raise ValueError("linear sweeps need at least 4 dyadic scales")
    spec = NormSpec(cfg.p, cfg.interval, "exact_even_p" if cfg.p in (2, 4, 6, 8) else "adaptive",
                    rel_tol=cfg.rel_tol)

    def one(N):
        data = build_family_data(cfg.phi, N, cfg.data_family, cfg.seed, cfg.density,
                                 cfg.p, cfg.interval, cfg.extremizer_restarts)
        q = spacetime_lp_norm(data, cfg.phi, spec)
        return _row(cfg.data_family, N, None, cfg.p, q, data.l2())

    rows = _map(one, cfg.N_list, pool)
    fit = loglog_fit([(r.log_N, r.log_normalized) for r in rows])
    return SweepResult(fit, tuple(rows), cfg.data_family)


def _row(family, N, K, p, q: QuadratureResult, l2, var_scale=None):
    x = var_scale if var_scale is not None else N
    return SweepRow(family=family, N=int(N), K=None if K is None else int(K), p=float(p),
                    norm=q.value, data_l2=l2, log_N=math.log(x),
                    log_normalized=math.log(q.value / l2), est_rel_error=q.est_rel_error,
                    time_nodes=q.time_nodes_used, spatial_M=q.spatial_M)


def bilinear_sweep(cfg: SweepConfig, pool=None):
    """Bilinear ``P_N u * P_K v`` sweeps.

    With ``cfg.K`` set and at least three ``N`` values, ``N`` is swept at
    fixed ``K``.  With ``cfg.K_list`` set, ``K`` is swept at ``N = max(N_list)``.
    Returns ``(fit_in_N, fit_in_K)``; either may be None.
    """
    if cfg.K is None and cfg.K_list is None:
        raise ValueError("bilinear sweeps need K or K_list")
    Nmax = max(cfg.N_list)
    pairs_N = [(N, cfg.K) for N in cfg.N_list] if cfg.K is not None and len(cfg.N_list) >= 3 else []
    pairs_K = [(Nmax, K) for K in cfg.K_list] if cfg.K_list is not None else []
    for N, K in pairs_N + pairs_K:
        if 4 * K > N:
            raise ValueError(f"need K <= N/4, got K={K}, N={N}")

    def data(M):
        return build_family_data(cfg.phi, M, cfg.data_family, cfg.seed, cfg.density,
                                 4, cfg.interval, cfg.extremizer_restarts)

    def one(pair):
        N, K = pair
        u, v = data(N), data(K)
        q = bilinear_l2_norm(u, v, cfg.phi, cfg.signs, cfg.interval, cfg.rel_tol)
        return q, u.l2() * v.l2()

    results = _map(one, pairs_N + pairs_K, pool)
    fit_N = fit_K = None
    if pairs_N:
        rows = [_row(cfg.data_family, N, K, 2, q, l2)
                for (N, K), (q, l2) in zip(pairs_N, results[:len(pairs_N)])]
        fit_N = SweepResult(loglog_fit([(r.log_N, r.log_normalized) for r in rows]),
                            tuple(rows), cfg.data_family, "N")
    if pairs_K:
        rows = [_row(cfg.data_family, N, K, 2, q, l2, var_scale=K)
                for (N, K), (q, l2) in zip(pairs_K, results[len(pairs_N):])]
        fit_K = SweepResult(loglog_fit([(r.log_N, r.log_normalized) for r in rows]),
                            tuple(rows), cfg.data_family, "K")
    return fit_N, fit_K


def predicted_linear_exponent(phi: PhaseFunction, p, N_list=(4, 8, 16, 32)):
    """ExponentBudget for ``phi`` at ``p``, measuring curvature for custom symbols."""
    beta = phi.curvature_exponent()
    k = phi.signature_defect()
    if beta is None or k is None:
        prof = fit_curvature_scale(phi, N_list)
        beta = prof.beta if beta is None else beta
        k = prof.sigma if k is None else k
    return theoretical_exponent(phi.n, k, p, min(0.0, beta))


def predicted_bilinear_exponents(phi: PhaseFunction):
    """Predicted ``(exponent in N, exponent in K)``; entries may be None."""
    if phi.kind == "quadratic":
        k = phi.signature_defect()
        return 0.0, 2.0 * theoretical_exponent(phi.n, k, 4, 0.0).total
    if phi.kind == "fractional" and phi.n == 1:
        return 0.0, (1.0 - phi.a) / 2.0 if phi.a < 1 else 0.0
    return 0.0, None


# -- extremizer -----------------------------------------------------------------------------

@dataclass
class ExtremizerOptions:
    restarts: int = 5
    max_iter: int = 500
    tol: float = 1e-6
    seed: int = 0
    initial: Optional[np.ndarray] = None
    quad_rel_tol: float = 1e-10
    workers: Optional[int] = None


class LpObjective:
    """``F(c) = ||exp(i t phi) u_c||_{L^p(I x T^n)}^p`` for coefficients ``c``
    on the points of ``band``, with a time rule fixed at construction.

    ``gradient`` returns the Wirtinger derivative ``dF/d conj(c)``: ``p/2``
    times the space-time pairing of ``|u|^(p-2) u`` with the plane waves.  The
    directional derivative along ``v`` is ``2 Re <gradient, v>``.
    """

    def __init__(self, phi: PhaseFunction, p, band: FrequencyBand, interval, box_radius=None,
                 quad_rel_tol=1e-10, workers=None):
        if p not in (2, 4, 6, 8):
            raise ValueError("extremizer search needs even p in {2, 4, 6, 8}")
        self.phi, self.p, self.interval = phi, int(p), tuple(float(t) for t in interval)
        n = phi.n
        R = band.radius() if box_radius is None else int(box_radius)
        self.mask = band.mask(n, R)
        if not self.mask.any():
            raise EmptyShell("band contains no lattice points")
        self.n, self.R = n, R
        flat = SpectralState(n, R, self.mask.astype(complex))
        self.flat_state = flat
        res, rule = spacetime_lp_norm(flat, phi, NormSpec(p, interval, rel_tol=quad_rel_tol),
                                      workers=workers, return_rule=True)
        self.nodes, self.weights, self.rule = rule.nodes, rule.weights, rule.rule
        self.sampler = FieldSampler(flat, phi, M=res.spatial_M, center=True, workers=workers)
        self.size = int(self.mask.sum())
        self._per = max(1, _CHUNK_ELEMS // (res.spatial_M ** n))
        self._axes = tuple(range(1, n + 1))

    def state(self, c):
        out = np.zeros(self.mask.shape, dtype=complex)
        out[self.mask] = c
        return SpectralState(self.n, self.R, out)

    def value(self, c):
        total = []
        for i in range(0, len(self.nodes), self._per):
            t = self.nodes[i:i + self._per]
            a = np.abs(self.sampler.fields(t, coeffs=c))
            total.append(self.weights[i:i + self._per] * np.mean(a**self.p, axis=self._axes))
        return TWO_PI**self.n * float(np.sum(np.concatenate(total)))

    def value_and_gradient(self, c):
        vals, grad = [], np.zeros(self.size, dtype=complex)
        for i in range(0, len(self.nodes), self._per):
            t = self.nodes[i:i + self._per]
            w = self.weights[i:i + self._per]
            u = self.sampler.fields(t, coeffs=c)
            a2 = u.real**2 + u.imag**2
            k = a2 ** (self.p // 2 - 1)
            vals.append(w * np.mean(k * a2, axis=self._axes))
            paired = self.sampler.pair(t, k * u)
            grad += np.sum(w[:, None] * paired, axis=0)
        vol = TWO_PI**self.n
        return vol * float(np.sum(np.concatenate(vals))), vol * 0.5 * self.p * grad


@dataclass(frozen=True, eq=False)
class ExtremizerResult:
    data: SpectralState
    quotient: float
    iterations: int
    converged: bool
    restarts_used: int
    history: tuple
    flat_quotient: float
    flagged: bool


def _unit(c):
    return c / np.linalg.norm(c)


def _ascend(obj: LpObjective, c, max_iter, tol):
    """Projected gradient ascent on the unit sphere with backtracking.

    Returns ``(c, F, iterations, converged, stalled_at_first, history)``.
    """
    c = _unit(c)
    F, g = obj.value_and_gradient(c)
    history = [F]
    step = None
    for it in range(1, max_iter + 1):
        G = 2.0 * g
        Gt = G - np.real(np.vdot(c, G)) * c
        gnorm = np.linalg.norm(Gt)
        if gnorm <= 1e-12 * max(np.linalg.norm(G), np.finfo(float).tiny):
            return c, F, it, True, False, history
        if step is None:
            step = 0.25 / gnorm
        else:
            step *= 2.0
        while True:
            c_new = _unit(c + step * Gt)
            F_new = obj.value(c_new)
            if F_new > F:
                break
            step *= 0.5
            if step * gnorm < 1e-15:
                return c, F, it, it > 1, it == 1, history
        rel = (F_new - F) / abs(F)
        c, F = c_new, F_new
        history.append(F)
        if rel < tol:
            return c, F, it, True, False, history
        F, g = obj.value_and_gradient(c)
    return c, F, max_iter, False, False, history


def extremizer_search(phi: PhaseFunction, p, band: FrequencyBand, interval, opts=None):
    """Maximize ``||exp(i t phi) u||_{L^p(I x T^n)}`` over unit-l^2 data in ``band``."""
    opts = opts or ExtremizerOptions()
    obj = LpObjective(phi, p, band, interval, quad_rel_tol=opts.quad_rel_tol,
                      workers=opts.workers)
    flat_q = obj.value(_unit(np.ones(obj.size, dtype=complex))) ** (1.0 / obj.p)
    best = None
    stalls = 0
    for r in range(max(1, opts.restarts)):
        if r == 0 and opts.initial is not None:
            c0 = np.asarray(opts.initial, dtype=complex)
            if c0.shape == obj.mask.shape:
                c0 = c0[obj.mask]
        else:
            rng = np.random.default_rng([int(opts.seed), r])
            c0 = rng.standard_normal(obj.size) + 1j * rng.standard_normal(obj.size)
        c, F, its, conv, stalled, hist = _ascend(obj, c0, opts.max_iter, opts.tol)
        stalls += stalled
        if best is None or F > best[1]:
            best = (c, F, its, conv, hist)
    if stalls == max(1, opts.restarts):
        raise NoAscent("every restart stalled at the first iteration")
    c, F, its, conv, hist = best
    q = F ** (1.0 / obj.p)
    return ExtremizerResult(data=obj.state(c), quotient=q, iterations=its, converged=conv,
                            restarts_used=max(1, opts.restarts), history=tuple(hist),
                            flat_quotient=flat_q, flagged=q < flat_q * (1.0 - 1e-9))
