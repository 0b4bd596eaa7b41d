"""Ordinary least-squares fits of log-log data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePoints


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    stderr: float
    r_squared: float
    points: tuple[tuple[float, float], ...]

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "r_squared": self.r_squared,
            "points": [list(p) for p in self.points],
        }


def loglog_fit(points) -> FitResult:
    """Fit ``y = slope * x + intercept`` to already-logged ``(x, y)`` pairs.

    ``stderr`` is the standard error of the slope (zero for an exact line).
    Raises DegeneratePoints for fewer than three points or repeated abscissae.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise DegeneratePoints(f"need at least 3 points, got {len(pts)}")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if len(np.unique(x)) != len(x):
        raise DegeneratePoints("abscissae must be distinct")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DegeneratePoints("non-finite coordinates")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    dof = len(x) - 2
    stderr = float(np.sqrt(ss_res / dof / sxx)) if dof > 0 else 0.0
    return FitResult(slope, intercept, stderr, float(r_squared), tuple(pts))
