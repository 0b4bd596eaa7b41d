"""Space-time L^p norms of linear evolutions and L^2 norms of bilinear products.

Spatial integrals are discrete means over an alias-free grid (exact for
trigonometric polynomials).  Time integrals use composite Gauss-Legendre
panels with doubling, or the uniform rule when the integrand is a
trigonometric polynomial in ``t`` sampled over whole periods.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import QuadratureStalled
from .phase import PhaseFunction
from .spectral import TWO_PI, FieldSampler, SpectralState, fast_len

GL_ORDER = 20
_GL_X, _GL_W = leggauss(GL_ORDER)
_CHUNK_ELEMS = 1 << 21
EVEN_P = (2, 4, 6, 8)


@dataclass(frozen=True)
class NormSpec:
    p: float
    interval: tuple
    quadrature: str = "exact_even_p"
    rel_tol: float = 1e-6
    spatial_M: Optional[int] = None
    max_nodes: int = 2**20

    def __post_init__(self):
        object.__setattr__(self, "interval", tuple(float(v) for v in self.interval))
        if self.p < 2:
            raise ValueError("p must be at least 2")
        t0, t1 = self.interval
        if not t1 > t0:
            raise ValueError("interval must satisfy t1 > t0")
        if self.quadrature not in ("exact_even_p", "adaptive"):
            raise ValueError(f"unknown quadrature {self.quadrature!r}")
        if self.quadrature == "exact_even_p" and self.p not in EVEN_P:
            raise ValueError("exact_even_p quadrature needs p in {2, 4, 6, 8}")


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    est_rel_error: float
    time_nodes_used: int
    spatial_M: int
    rule: str = "gauss-legendre"

    def to_dict(self):
        return dict(vars(self))


@dataclass(frozen=True, eq=False)
class TimeRule:
    nodes: np.ndarray
    weights: np.ndarray
    rule: str


def _integer_valued(vals):
    vals = np.asarray(vals)
    return bool(np.all(np.abs(vals - np.rint(vals)) <= 1e-9 * np.maximum(1.0, np.abs(vals))))


def _whole_periods(length):
    m = length / TWO_PI
    k = round(m)
    return k if k >= 1 and abs(m - k) <= 1e-12 * max(1.0, m) else 0


def _gl_rule(t0, t1, panels):
    edges = np.linspace(t0, t1, panels + 1)
    h = (t1 - t0) / panels
    nodes = (edges[:-1, None] + 0.5 * h * (_GL_X[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * h * _GL_W, panels)
    return nodes, weights


def integrate_in_time(g, interval, bandwidth, rel_tol=1e-6, max_nodes=2**20, periodic=False):
    """Integrate ``g(t)`` over ``interval``.

    ``bandwidth`` bounds the angular frequencies present in ``g``.  With
    ``periodic=True`` the caller asserts ``g`` is a trigonometric polynomial
    with integer frequencies, so whole periods are integrated exactly by the
    uniform rule.  Returns ``(value, est_rel_error, nodes_used, TimeRule)``.
    """
    t0, t1 = (float(v) for v in interval)
    length = t1 - t0
    periods = _whole_periods(length) if periodic else 0
    if periods:
        K = int(math.ceil(bandwidth - 1e-9)) + 1
        if K > max_nodes:
            raise QuadratureStalled(f"exact periodic rule needs {K} nodes > cap {max_nodes}")
        nodes = t0 + TWO_PI * np.arange(K) / K
        weights = np.full(K, TWO_PI * periods / K)
        value = float(np.sum(weights * g(nodes)))
        return value, 0.0, K, TimeRule(nodes, weights, "periodic-uniform")

    panels = max(1, int(math.ceil(length * bandwidth / GL_ORDER)))
    used = 0

    def level(P):
        nodes, weights = _gl_rule(t0, t1, P)
        return float(np.sum(weights * g(nodes))), TimeRule(nodes, weights, "gauss-legendre")

    prev, _ = level(panels)
    used += panels * GL_ORDER
    while True:
        panels *= 2
        used += panels * GL_ORDER
        if used > max_nodes:
            raise QuadratureStalled(
                f"time quadrature did not reach rel_tol={rel_tol:g} within {max_nodes} nodes")
        cur, rule = level(panels)
        scale = max(abs(cur), np.finfo(float).tiny)
        rel = abs(cur - prev) / scale
        if rel < rel_tol:
            return cur, rel, used, rule
        prev = cur


def _chunked(sampler_fn, M, n):
    per = max(1, _CHUNK_ELEMS // (M**n))

    def g(times):
        times = np.asarray(times, dtype=float)
        out = np.empty(len(times))
        for i in range(0, len(times), per):
            out[i:i + per] = sampler_fn(times[i:i + per])
        return out

    return g


def _lp_integrand(sampler: FieldSampler, p):
    n = sampler.n
    axes = tuple(range(1, n + 1))
    vol = TWO_PI**n

    def f(times):
        u = sampler.fields(times)
        a = np.abs(u)
        if p == 2:
            v = a * a
        elif p == 4:
            v = a * a
            v *= v
        else:
            v = a**p
        return vol * np.mean(v, axis=axes)

    return _chunked(f, sampler.M, n)


def spacetime_lp_norm(state: SpectralState, phi: PhaseFunction, spec: NormSpec,
                      workers=None, return_rule=False):
    """``(int_I int_{T^n} |exp(i t phi) u|^p dx dt)^(1/p)``."""
    if not state.support().any():
        raise ValueError("state must be nonzero")
    p = float(spec.p)
    probe = FieldSampler(state, phi, center=True)
    R = probe.half_width
    periodic = _integer_valued(probe.phases) and p in EVEN_P
    bandwidth = 0.5 * p * probe.phase_range

    def at(M):
        s = FieldSampler(state, phi, M=M, center=True, workers=workers)
        return integrate_in_time(_lp_integrand(s, p), spec.interval, bandwidth,
                                 spec.rel_tol, spec.max_nodes, periodic)

    if spec.quadrature == "exact_even_p":
        M = spec.spatial_M or fast_len(int(p) * R + 1)
        val, est, used, rule = at(M)
    else:
        M = spec.spatial_M or fast_len(max(2 * R + 1, int(math.ceil(p)) * R + 1))
        val, est, used, rule = at(M)
        while True:
            M2 = fast_len(2 * M)
            v2, est2, used2, rule2 = at(M2)
            used += used2
            rel = abs(v2 - val) / max(abs(v2), np.finfo(float).tiny)
            if used > spec.max_nodes:
                raise QuadratureStalled("spatial refinement exceeded the node cap")
            M, val, rule = M2, v2, rule2
            if rel < spec.rel_tol:
                est = max(est2, rel)
                break
    res = QuadratureResult(val ** (1.0 / p), est / p, used, M, rule.rule)
    return (res, rule) if return_rule else res


def _sign(s):
    if s in ("+", 1, +1):
        return 1
    if s in ("-", -1):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {s!r}")


def bilinear_l2_norm(stateA: SpectralState, stateB: SpectralState, phi: PhaseFunction,
                     signs=("+", "+"), interval=(0.0, 1.0), rel_tol=1e-6,
                     max_nodes=2**20, workers=None):
    """``|| exp(+-i t phi) u0 * exp(+-i t phi) v0 ||_{L^2(I x T^n)}``."""
    if not (stateA.support().any() and stateB.support().any()):
        raise ValueError("both states must be nonzero")
    sa, sb = _sign(signs[0]), _sign(signs[1])
    pa = FieldSampler(stateA, phi, sign=sa, center=True)
    pb = FieldSampler(stateB, phi, sign=sb, center=True)
    M = fast_len(2 * (pa.half_width + pb.half_width) + 1)
    A = FieldSampler(stateA, phi, M=M, sign=sa, center=True, workers=workers)
    B = FieldSampler(stateB, phi, M=M, sign=sb, center=True, workers=workers)
    n = stateA.n
    axes = tuple(range(1, n + 1))
    vol = TWO_PI**n

    def f(times):
        F = A.fields(times) * B.fields(times)
        return vol * np.mean(F.real**2 + F.imag**2, axis=axes)

    periodic = _integer_valued(A.phases) and _integer_valued(B.phases)
    bandwidth = A.phase_range + B.phase_range
    val, est, used, rule = integrate_in_time(_chunked(f, M, n), interval, bandwidth,
                                             rel_tol, max_nodes, periodic)
    return QuadratureResult(math.sqrt(val), est / 2.0, used, M, rule.rule)


@dataclass(frozen=True)
class PartitionCheck:
    lhs: float
    rhs: float
    max_rel_dev: float
    parts: tuple


def interval_partition_check(stateA, stateB, phi, interval, parts=2, signs=("+", "+"),
                             rel_tol=1e-10, max_nodes=2**20):
    """Compare ``||F||^2_{L^2(I)}`` with ``sum_j ||F||^2_{L^2(I_j)}`` for the
    bilinear product ``F``.  ``parts`` is a count of equal pieces or a list of
    fractions of ``|I|`` summing to one."""
    t0, t1 = (float(v) for v in interval)
    if isinstance(parts, int):
        if parts < 2:
            raise ValueError("need at least two parts")
        fracs = [1.0 / parts] * parts
    else:
        fracs = [float(f) for f in parts]
        if len(fracs) < 2 or abs(sum(fracs) - 1.0) > 1e-12 or min(fracs) <= 0:
            raise ValueError("fractions must be positive and sum to one")
    cuts = t0 + (t1 - t0) * np.concatenate([[0.0], np.cumsum(fracs)])
    cuts[-1] = t1
    whole = bilinear_l2_norm(stateA, stateB, phi, signs, (t0, t1), rel_tol, max_nodes).value ** 2
    pieces = [bilinear_l2_norm(stateA, stateB, phi, signs, (a, b), rel_tol, max_nodes).value ** 2
              for a, b in zip(cuts[:-1], cuts[1:])]
    rhs = math.fsum(pieces)
    return PartitionCheck(whole, rhs, abs(whole - rhs) / whole, tuple(fracs))
