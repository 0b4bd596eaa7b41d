"""Independent reference computations used by the tests.

None of these share code paths with the package: they sum exponentials
directly, count frequency coincidences, or evaluate time integrals in
closed form.
"""
import itertools
import math
from collections import defaultdict

import numpy as np


def modes(state):
    """(frequencies as int tuples, coefficients) of the nonzero entries."""
    R = state.box_radius
    idx = np.argwhere(state.coefficients != 0)
    return [tuple(int(v) - R for v in i) for i in idx], [complex(state.coefficients[tuple(i)]) for i in idx]


def field_direct(freqs, coeffs, phase_vals, t, x):
    """sum_j c_j exp(i(x.xi_j + t phi_j)) at points x of shape (P, n)."""
    xi = np.array(freqs, dtype=float)
    c = np.array(coeffs) * np.exp(1j * t * np.array(phase_vals))
    return np.exp(1j * x @ xi.T) @ c


def riemann_lp(state, phi, p, interval, M, time_nodes):
    """Midpoint rule in time, M^n equispaced points in space, direct sums."""
    freqs, coeffs = modes(state)
    n = state.n
    ph = [float(phi(np.array(f, dtype=float))) for f in freqs]
    g = 2 * math.pi * np.arange(M) / M
    x = np.stack(np.meshgrid(*([g] * n), indexing="ij"), -1).reshape(-1, n)
    t0, t1 = interval
    h = (t1 - t0) / time_nodes
    total = 0.0
    for j in range(time_nodes):
        u = field_direct(freqs, coeffs, ph, t0 + (j + 0.5) * h, x)
        total += h * (2 * math.pi) ** n * np.mean(np.abs(u) ** p)
    return total ** (1.0 / p)


def _interval_integral(delta, t0, t1):
    """int_{t0}^{t1} exp(i t delta) dt, elementwise."""
    delta = np.asarray(delta, dtype=float)
    out = np.empty(delta.shape, dtype=complex)
    small = np.abs(delta) < 1e-12
    out[small] = t1 - t0
    d = delta[~small]
    out[~small] = (np.exp(1j * t1 * d) - np.exp(1j * t0 * d)) / (1j * d)
    return out


def bilinear_exact(stateA, stateB, phi, signs, interval):
    """||exp(+-it phi)u exp(+-it phi)v||_{L^2(I x T^n)} with the time integral in
    closed form: group products by output frequency, integrate the Gram matrix."""
    sa = 1 if signs[0] == "+" else -1
    sb = 1 if signs[1] == "+" else -1
    fa, ca = modes(stateA)
    fb, cb = modes(stateB)
    groups = defaultdict(list)
    for xa, a in zip(fa, ca):
        pa = sa * float(phi(np.array(xa, dtype=float)))
        for xb, b in zip(fb, cb):
            pb = sb * float(phi(np.array(xb, dtype=float)))
            groups[tuple(i + j for i, j in zip(xa, xb))].append((a * b, pa + pb))
    t0, t1 = interval
    total = 0.0
    for items in groups.values():
        w = np.array([c for c, _ in items])
        om = np.array([o for _, o in items])
        G = _interval_integral(om[:, None] - om[None, :], t0, t1)
        total += float(np.real(w @ G @ np.conj(w)))
    return math.sqrt((2 * math.pi) ** stateA.n * total)


def l4_by_counting(freqs, coeffs, phase_vals):
    """L^4 norm over [0, 2 pi] x T^n for integer phases: Parseval in (x, t)
    over the sums of pairs of modes."""
    acc = defaultdict(complex)
    for (x1, c1, p1), (x2, c2, p2) in itertools.product(zip(freqs, coeffs, phase_vals), repeat=2):
        key = tuple(a + b for a, b in zip(x1, x2)) + (int(round(p1 + p2)),)
        acc[key] += c1 * c2
    n = len(freqs[0])
    s = sum(abs(v) ** 2 for v in acc.values())
    return ((2 * math.pi) ** (n + 1) * s) ** 0.25


def l4_counting_vectorized(points, weights, phase_vals, n):
    """Same as l4_by_counting for large supports (real weights allowed)."""
    pts = np.asarray(points, dtype=np.int64)
    ph = np.rint(np.asarray(phase_vals)).astype(np.int64)
    w = np.asarray(weights, dtype=complex)
    S = pts[:, None, :] + pts[None, :, :]
    P = ph[:, None] + ph[None, :]
    keys = np.concatenate([S.reshape(-1, n), P.reshape(-1, 1)], axis=1)
    prod = (w[:, None] * w[None, :]).ravel()
    _, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    acc = np.zeros(inv.max() + 1, dtype=complex)
    np.add.at(acc, inv, prod)
    return ((2 * math.pi) ** (n + 1) * float(np.sum(np.abs(acc) ** 2))) ** 0.25


def cubic_direct(state):
    """Coefficients of |u|^2 u by triple summation: w(z) = sum_{a - b + c = z} c_a conj(c_b) c_c."""
    freqs, coeffs = modes(state)
    out = defaultdict(complex)
    for (xa, ca), (xb, cb), (xc, cc) in itertools.product(zip(freqs, coeffs), repeat=3):
        z = tuple(a - b + c for a, b, c in zip(xa, xb, xc))
        out[z] += ca * np.conj(cb) * cc
    return dict(out)


def sobolev_from_modes(dct, s, n):
    tot = sum((1 + sum(k * k for k in z)) ** s * abs(v) ** 2 for z, v in dct.items())
    return math.sqrt((2 * math.pi) ** n * tot)
