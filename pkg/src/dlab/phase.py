"""Phase functions and measurements of their curvature and transversality.

A phase function is the real symbol ``phi`` of a dispersive operator on the
torus; the linear flow multiplies the Fourier coefficient at ``xi`` by
``exp(i t phi(xi))``.  Built-in kinds carry closed-form jets; custom symbols
fall back to central finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    DimensionUnsupported,
    EmptyShell,
    InvalidSignature,
    SingularPoint,
)
from .fitting import loglog_fit

ZERO_EIG_REL = 1e-10
DEFAULT_RATIO_CAP = 100.0


@dataclass(frozen=True)
class PhaseFunction:
    """Immutable description of a symbol ``phi: R^n -> R``.

    Use the :meth:`quadratic`, :meth:`fractional` and :meth:`custom`
    constructors.  Custom symbols must accept arrays of shape ``(..., n)``.
    """

    kind: str
    n: int
    alphas: tuple = ()
    a: Optional[float] = None
    symbol: Optional[Callable] = None
    grad_fn: Optional[Callable] = None
    hess_fn: Optional[Callable] = None
    label: str = ""

    @classmethod
    def quadratic(cls, *alphas):
        if len(alphas) == 1 and np.ndim(alphas[0]) == 1:
            alphas = tuple(alphas[0])
        alphas = tuple(float(x) for x in alphas)
        if not alphas or any(x == 0.0 or not np.isfinite(x) for x in alphas):
            raise ValueError("quadratic coefficients must be finite and nonzero")
        return cls("quadratic", len(alphas), alphas=alphas)

    @classmethod
    def fractional(cls, a, n=1):
        a = float(a)
        if not (0.0 < a < 2.0) or a == 1.0:
            raise ValueError("fractional exponent must satisfy 0 < a < 2, a != 1")
        if int(n) < 1:
            raise ValueError("dimension must be positive")
        return cls("fractional", int(n), a=a)

    @classmethod
    def custom(cls, symbol, n, gradient=None, hessian=None, label="custom"):
        if int(n) < 1:
            raise ValueError("dimension must be positive")
        return cls("custom", int(n), symbol=symbol, grad_fn=gradient,
                   hess_fn=hessian, label=label)

    @classmethod
    def from_config(cls, spec):
        kind = spec.get("kind")
        if kind == "quadratic":
            return cls.quadratic(*spec["alphas"])
        if kind == "fractional":
            return cls.fractional(spec["a"], spec.get("n", 1))
        raise ValueError(f"unknown phase kind {kind!r}")

    def to_config(self):
        if self.kind == "quadratic":
            return {"kind": "quadratic", "alphas": list(self.alphas)}
        if self.kind == "fractional":
            return {"kind": "fractional", "a": self.a, "n": self.n}
        return {"kind": "custom", "n": self.n, "label": self.label}

    def __call__(self, xi):
        """Vectorized symbol value over arrays of shape ``(..., n)``."""
        xi = _as_points(xi, self.n)
        if self.kind == "quadratic":
            return np.sum(np.asarray(self.alphas) * xi**2, axis=-1)
        if self.kind == "fractional":
            return np.linalg.norm(xi, axis=-1) ** self.a
        return np.asarray(self.symbol(xi), dtype=float)

    def negated(self):
        """The symbol ``-phi``, same kind where possible."""
        if self.kind == "quadratic":
            return PhaseFunction.quadratic(*(-x for x in self.alphas))
        base = self
        grad = None if base.kind == "custom" and base.grad_fn is None else (
            lambda xi: -gradients(base, xi))
        hess = None if base.kind == "custom" and base.hess_fn is None else (
            lambda xi: -hessians(base, xi))
        return PhaseFunction.custom(lambda xi: -base(xi), base.n, grad, hess,
                                    label=f"-({base.label or base.kind})")

    def curvature_exponent(self):
        """Closed-form exponent ``beta`` with eigenvalue scale ``N**beta``.

        None for custom symbols, which must be measured.
        """
        if self.kind == "quadratic":
            return 0.0
        if self.kind == "fractional":
            return self.a - 2.0
        return None

    def signature_defect(self):
        """Closed-form sigma for quadratic forms; None otherwise."""
        if self.kind == "quadratic":
            neg = sum(1 for x in self.alphas if x < 0)
            return min(neg, self.n - neg)
        if self.kind == "fractional":
            return 0 if self.a > 1 or self.n == 1 else min(1, self.n - 1)
        return None


def _as_points(xi, n):
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        xi = xi.reshape(1)
    if xi.shape[-1] != n:
        raise DimensionMismatch(f"expected points of dimension {n}, got shape {xi.shape}")
    return xi


def _fd_gradient(f, xi):
    n = xi.shape[-1]
    h = np.maximum(1e-5, 1e-7 * np.linalg.norm(xi, axis=-1))[..., None]
    out = np.empty(xi.shape)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        out[..., i] = (f(xi + h * e) - f(xi - h * e)) / (2 * h[..., 0])
    return out


def _fd_hessian(f, xi):
    # Second differences are rounding-dominated at the gradient step; use a
    # larger one (truncation is O(h^2) either way).
    n = xi.shape[-1]
    h = np.maximum(1e-4, 1e-4 * np.linalg.norm(xi, axis=-1))
    f0 = f(xi)
    out = np.empty(xi.shape + (n,))
    eye = np.eye(n)
    for i in range(n):
        ei = h[..., None] * eye[i]
        out[..., i, i] = (f(xi + ei) - 2 * f0 + f(xi - ei)) / h**2
        for j in range(i + 1, n):
            ej = h[..., None] * eye[j]
            v = (f(xi + ei + ej) - f(xi + ei - ej) - f(xi - ei + ej)
                 + f(xi - ei - ej)) / (4 * h**2)
            out[..., i, j] = v
            out[..., j, i] = v
    return out


def gradients(phi: PhaseFunction, xi):
    """Vectorized gradient, shape ``(..., n)``."""
    xi = _as_points(xi, phi.n)
    if phi.kind == "quadratic":
        return 2.0 * np.asarray(phi.alphas) * xi
    if phi.kind == "fractional":
        r = np.linalg.norm(xi, axis=-1)
        if np.any(r == 0):
            raise SingularPoint("gradient of |xi|^a is singular at xi = 0")
        return phi.a * (r ** (phi.a - 2.0))[..., None] * xi
    if phi.grad_fn is not None:
        return np.asarray(phi.grad_fn(xi), dtype=float).reshape(xi.shape)
    return _fd_gradient(phi, xi)


def hessians(phi: PhaseFunction, xi):
    """Vectorized Hessian, shape ``(..., n, n)``, symmetrized."""
    xi = _as_points(xi, phi.n)
    n = phi.n
    if phi.kind == "quadratic":
        H = np.diag(2.0 * np.asarray(phi.alphas))
        return np.broadcast_to(H, xi.shape[:-1] + (n, n)).copy()
    if phi.kind == "fractional":
        r = np.linalg.norm(xi, axis=-1)
        if np.any(r == 0):
            raise SingularPoint("Hessian of |xi|^a is singular at xi = 0")
        a = phi.a
        u = xi / r[..., None]
        scale = (a * r ** (a - 2.0))[..., None, None]
        H = scale * (np.eye(n) + (a - 2.0) * u[..., :, None] * u[..., None, :])
    elif phi.hess_fn is not None:
        H = np.asarray(phi.hess_fn(xi), dtype=float).reshape(xi.shape + (n,))
    else:
        H = _fd_hessian(phi, xi)
    return 0.5 * (H + np.swapaxes(H, -1, -2))


def evaluate_jets(phi: PhaseFunction, xi, order=2):
    """Return ``(value, gradient, hessian)`` at a single point.

    Entries above ``order`` are None.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    x = _as_points(xi, phi.n)
    if x.ndim != 1:
        raise DimensionMismatch("evaluate_jets takes a single point")
    value = float(phi(x))
    grad = gradients(phi, x) if order >= 1 else None
    hess = hessians(phi, x) if order >= 2 else None
    return value, grad, hess


def _sigma(eigs):
    eigs = np.asarray(eigs)
    thr = ZERO_EIG_REL * np.max(np.abs(eigs), axis=-1, keepdims=True)
    neg = np.sum(eigs < -thr, axis=-1)
    pos = np.sum(eigs > thr, axis=-1)
    return np.minimum(neg, pos)


def hessian_spectrum(phi: PhaseFunction, xi):
    """Ascending Hessian eigenvalues and the signature defect sigma."""
    eigs = np.linalg.eigvalsh(hessians(phi, _as_points(xi, phi.n)))
    return eigs, int(_sigma(eigs))


# -- annulus sampling ---------------------------------------------------------

_ENUM_LIMIT = 4_000_000


@lru_cache(maxsize=64)
def _annulus_points(n, N):
    """All lattice points with N <= |xi| < 2N (|xi| < 1 when N = 0)."""
    if N == 0:
        return np.zeros((1, n))
    R = 2 * N - 1
    if (2 * R + 1) ** n > _ENUM_LIMIT:
        return None
    g = np.arange(-R, R + 1)
    pts = np.stack(np.meshgrid(*([g] * n), indexing="ij"), axis=-1).reshape(-1, n)
    r2 = np.sum(pts**2, axis=1)
    keep = (r2 >= N * N) & (r2 < 4 * N * N)
    out = pts[keep].astype(float)
    out.setflags(write=False)
    return out


def sample_annulus(n, N, count, seed=0):
    """Deterministic sample of lattice points in the dyadic shell at ``N``.

    Enumerable shells are stratified by radius (one seeded draw per stratum);
    when the shell has at most ``count`` points all of them are returned.
    """
    pts = _annulus_points(n, N)
    rng = np.random.default_rng([int(seed), int(N), int(n)])
    if pts is not None:
        if len(pts) == 0:
            raise EmptyShell(f"no lattice points with {N} <= |xi| < {2 * N}")
        if len(pts) <= count:
            return np.array(pts)
        # one seeded draw per equal-size stratum of the radius ordering
        order = np.argsort(np.sum(pts**2, axis=1), kind="stable")
        edges = np.linspace(0, len(pts), count + 1).astype(int)
        idx = edges[:-1] + (rng.random(count) * np.diff(edges)).astype(int)
        return np.array(pts[np.sort(order[idx])])
    # Rejection sampling for shells too large to enumerate.
    R = 2 * N - 1
    found = {}
    while len(found) < count:
        cand = rng.integers(-R, R + 1, size=(4 * count, n))
        r2 = np.sum(cand.astype(float) ** 2, axis=1)
        for c in cand[(r2 >= N * N) & (r2 < 4 * N * N)]:
            found.setdefault(tuple(int(v) for v in c), None)
            if len(found) == count:
                break
    return np.array(sorted(found), dtype=float)


# -- curvature profile ---------------------------------------------------------

@dataclass(frozen=True)
class ShellCurvature:
    N: int
    min_abs_eig: float
    max_abs_eig: float
    sigma: int
    sigma_uniform: bool
    geo_mean_abs_eig: float
    samples: int


@dataclass(frozen=True)
class CurvatureProfile:
    per_shell: tuple
    beta: float
    ratio_bound: float
    uniform_constant: Optional[float]
    sigma: Optional[int]
    status: str
    violations: tuple
    fit: object

    def to_dict(self):
        return {
            "per_shell": [vars(s) for s in self.per_shell],
            "psi_fit": {"beta": self.beta, "ratio_bound": self.ratio_bound},
            "uniform_constant": self.uniform_constant,
            "sigma": self.sigma,
            "status": self.status,
            "violations": list(self.violations),
        }


def fit_curvature_scale(phi: PhaseFunction, N_list, samples_per_shell=64, seed=0,
                        ratio_cap=DEFAULT_RATIO_CAP, uniform_tol=0.02):
    """Measure the eigenvalue scale ``psi(N) ~ N**beta`` over dyadic shells.

    ``beta`` is the OLS slope of the log geometric mean of all sampled
    ``|eigenvalue|`` against ``log N``.  The condition is reported VIOLATED
    when sigma is not constant over all samples or when some sample has
    ``max|eig| / min|eig|`` above ``ratio_cap``.
    """
    N_list = [int(N) for N in N_list]
    if len(N_list) < 3:
        raise ValueError("need at least 3 dyadic scales")
    shells = []
    sigmas = set()
    ratio_bound = 1.0
    gmin, gmax = np.inf, 0.0
    for N in N_list:
        xi = sample_annulus(phi.n, N, samples_per_shell, seed)
        eigs = np.linalg.eigvalsh(hessians(phi, xi))
        absd = np.abs(eigs)
        sig = _sigma(eigs)
        smin = absd.min(axis=1)
        smax = absd.max(axis=1)
        with np.errstate(divide="ignore"):
            ratios = np.where(smin > 0, smax / np.where(smin > 0, smin, 1.0), np.inf)
        ratio_bound = max(ratio_bound, float(ratios.max()))
        vals, counts = np.unique(sig, return_counts=True)
        sigmas.update(int(v) for v in vals)
        with np.errstate(divide="ignore"):
            geo = float(np.exp(np.mean(np.log(absd))))
        gmin = min(gmin, float(absd.min()))
        gmax = max(gmax, float(absd.max()))
        shells.append(ShellCurvature(
            N=N, min_abs_eig=float(absd.min()), max_abs_eig=float(absd.max()),
            sigma=int(vals[np.argmax(counts)]), sigma_uniform=len(vals) == 1,
            geo_mean_abs_eig=geo, samples=len(xi)))
    violations = []
    if len(sigmas) > 1:
        violations.append(f"sigma varies across samples: {sorted(sigmas)}")
    if ratio_bound > ratio_cap:
        violations.append(f"ratio bound {ratio_bound:g} exceeds cap {ratio_cap:g}")
    if gmin == 0.0:
        violations.append("degenerate Hessian (zero eigenvalue) sampled")
        beta = float("nan")
        fit = None
    else:
        fit = loglog_fit([(np.log(s.N), np.log(s.geo_mean_abs_eig)) for s in shells])
        beta = fit.slope
    uniform = None
    if fit is not None and abs(beta) <= uniform_tol:
        uniform = float(np.sqrt(gmin * gmax))
    return CurvatureProfile(
        per_shell=tuple(shells), beta=beta, ratio_bound=ratio_bound,
        uniform_constant=uniform,
        sigma=next(iter(sigmas)) if len(sigmas) == 1 else None,
        status="VIOLATED" if violations else "SATISFIED",
        violations=tuple(violations), fit=fit)


# -- transversality ---------------------------------------------------------------

@dataclass(frozen=True)
class TransversalityBlock:
    K: int
    N: int
    min_gap: float
    max_gap: float
    geo_mean_gap: float
    worst_ratio: float


@dataclass(frozen=True)
class TransversalityReport:
    alpha: float
    sign: str
    samples: tuple
    fit: object

    def to_dict(self):
        return {"alpha": self.alpha, "sign": self.sign,
                "samples": [vars(b) for b in self.samples]}


def _shell_1d(N):
    a = np.arange(N, 2 * N, dtype=float)
    return np.concatenate([-a[::-1], a])


def gradient_gaps(phi: PhaseFunction, K, N, sign="-"):
    """All pairs ``(xi1, xi2)`` with ``|xi1| ~ K``, ``|xi2| ~ N`` and the gap
    ``|phi'(xi2) + s phi'(xi1)|`` with ``s = +1`` or ``-1`` per ``sign``."""
    if phi.n != 1:
        raise DimensionUnsupported("transversality is measured in one dimension only")
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    x1 = _shell_1d(int(K))
    x2 = _shell_1d(int(N))
    g1 = gradients(phi, x1[:, None])[:, 0]
    g2 = gradients(phi, x2[:, None])[:, 0]
    s = 1.0 if sign == "+" else -1.0
    gaps = np.abs(g2[None, :] + s * g1[:, None])
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    return X1.ravel(), X2.ravel(), gaps.ravel()


def check_transversality(phi: PhaseFunction, K_list, N_list, sign="-"):
    """Fit the exponent alpha in ``|phi'(xi1) +- phi'(xi2)| ~ N**alpha``.

    For each ``N`` the statistic is the geometric mean of the gap over all
    sampled pairs and all ``K``; ``alpha`` is its OLS slope in ``log N``.
    Per-block minima, maxima and max/min ratios are reported alongside.
    """
    if phi.n != 1:
        raise DimensionUnsupported("transversality is measured in one dimension only")
    K_list = [int(K) for K in K_list]
    N_list = [int(N) for N in N_list]
    for K in K_list:
        for N in N_list:
            if 4 * K > N:
                raise ValueError(f"need K <= N/4, got K={K}, N={N}")
    blocks = []
    pts = []
    for N in N_list:
        logs = []
        for K in K_list:
            _, _, gaps = gradient_gaps(phi, K, N, sign)
            lo, hi = float(gaps.min()), float(gaps.max())
            with np.errstate(divide="ignore"):
                lg = float(np.mean(np.log(gaps)))
            logs.append(lg)
            blocks.append(TransversalityBlock(
                K=K, N=N, min_gap=lo, max_gap=hi, geo_mean_gap=float(np.exp(lg)),
                worst_ratio=hi / lo if lo > 0 else float("inf")))
        pts.append((np.log(N), float(np.mean(logs))))
    fit = loglog_fit(pts)
    return TransversalityReport(alpha=fit.slope, sign=sign, samples=tuple(blocks), fit=fit)


# -- exponent budget ------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentBudget:
    n: int
    k: int
    p: float
    beta: float
    critical_p: float
    base_exponent: float
    curvature_loss: float
    total: float
    interpolated: bool

    def to_dict(self):
        return dict(vars(self))


def critical_exponent(n, k):
    if k >= n:
        raise InvalidSignature(f"critical exponent undefined for k={k} >= n={n}")
    return 2.0 * (n + 2 - k) / (n - k)


def theoretical_exponent(n, k, p, beta=0.0):
    """Predicted derivative loss of the frequency-localized L^p estimate.

    At and above the critical exponent the loss is ``n/2 - (n+2)/p`` plus
    ``-beta/p`` from vanishing curvature (``beta < 0``).  Below it the value
    is interpolated between zero at ``p = 2`` and the critical value.
    """
    n, k, p, beta = int(n), int(k), float(p), float(beta)
    if k < 0 or k >= n or 2 * k > n:
        raise InvalidSignature(f"invalid signature defect k={k} for n={n}")
    if not (2.0 <= p < np.inf):
        raise ValueError("need 2 <= p < inf")
    pc = critical_exponent(n, k)
    base = n / 2.0 - (n + 2.0) / p
    loss = max(0.0, -beta) / p
    if p >= pc:
        total = base + loss
        interp = False
    else:
        total_c = (n / 2.0 - (n + 2.0) / pc) + max(0.0, -beta) / pc
        theta = (0.5 - 1.0 / p) / (0.5 - 1.0 / pc)
        total = theta * total_c
        interp = True
    return ExponentBudget(n=n, k=k, p=p, beta=beta, critical_p=pc, base_exponent=base,
                          curvature_loss=loss, total=total, interpolated=interp)
