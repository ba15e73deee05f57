"""Homogeneous norms, balls and a bracketing Carnot-Caratheodory estimator.

The working metric for tiles, covers and capacities is the Koranyi gauge
rho = ((x^2+y^2)^2 + 16 t^2)^(1/4), which satisfies an exact triangle
inequality on the Heisenberg group and is exactly dilation-homogeneous.
cc_distance returns a certified interval only: the upper bound is the exact
length of an explicitly constructed horizontal path, the lower bound combines
the horizontal-projection and isoperimetric-closure estimates with a
gauge-equivalence floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import calibration as cal
from .groups import check_points, hdilate, hinv, hmul
from .qmc import halton

__all__ = [
    "GaugeNorm",
    "gauge_norm",
    "Ball",
    "ball_volume",
    "sample_gauge_sphere",
    "norm_equivalence",
    "cc_lower_bound",
    "cc_distance",
    "CCBudget",
    "CCBracket",
]

GAUGE_KINDS = ("koranyi", "gamma_gauge", "box")


class MetricsError(ValueError):
    pass


def gauge_norm(p, kind: str = "koranyi") -> np.ndarray:
    """Symmetric homogeneous norm of Heisenberg points."""
    p = check_points(p)
    x, y, t = p[..., 0], p[..., 1], p[..., 2]
    if kind == "koranyi":
        r2 = x * x + y * y
        return (r2 * r2 + 16.0 * t * t) ** 0.25
    if kind == "gamma_gauge":
        # Gamma(p)^(1/(2-Q)) with Gamma = c rho^-2: proportional to rho
        r2 = x * x + y * y
        return (r2 * r2 + 16.0 * t * t) ** 0.25 / np.sqrt(cal.GAMMA_CONSTANT)
    if kind == "box":
        return np.maximum(np.maximum(np.abs(x), np.abs(y)), np.sqrt(np.abs(t)))
    raise MetricsError(f"unknown gauge kind {kind!r}")


@dataclass(frozen=True)
class GaugeNorm:
    """A named homogeneous norm; callable on point arrays."""

    kind: str = "koranyi"

    def __post_init__(self):
        if self.kind not in GAUGE_KINDS:
            raise MetricsError(f"unknown gauge kind {self.kind!r}")

    def __call__(self, p) -> np.ndarray:
        return gauge_norm(p, self.kind)

    def distance(self, p, q) -> np.ndarray:
        return gauge_norm(hmul(hinv(p), q), self.kind)


def _unit_ball_volume(kind: str) -> float:
    if kind == "koranyi":
        return cal.V1_KORANYI
    if kind == "gamma_gauge":
        # unit ball is the Koranyi ball of radius sqrt(c)
        return cal.V1_KORANYI * cal.GAMMA_CONSTANT ** 2
    if kind == "box":
        return 8.0  # |x|,|y| <= 1, |t| <= 1
    raise MetricsError(f"unknown gauge kind {kind!r}")


def ball_volume(r: float, kind: str = "koranyi") -> float:
    """Haar volume of any gauge ball of radius r: r^Q times the unit volume."""
    if r <= 0:
        raise MetricsError("radius must be positive")
    return _unit_ball_volume(kind) * float(r) ** 4


@dataclass(frozen=True)
class Ball:
    """A gauge ball; sampling is uniform via rejection and left translation."""

    center: np.ndarray
    radius: float
    kind: str = "koranyi"

    def __post_init__(self):
        if self.radius <= 0:
            raise MetricsError("radius must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    @property
    def volume(self) -> float:
        return ball_volume(self.radius, self.kind)

    def contains(self, pts) -> np.ndarray:
        return gauge_norm(hmul(hinv(self.center), pts), self.kind) < self.radius

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        """n uniform points; rejection from the bounding box at the origin."""
        rng = np.random.default_rng(seed)
        out = np.empty((n, 3))
        filled = 0
        r = self.radius
        while filled < n:
            m = max(64, int(1.8 * (n - filled)))
            cand = rng.uniform(-1.0, 1.0, size=(m, 3))
            cand[:, 0] *= r
            cand[:, 1] *= r
            cand[:, 2] *= r * r if self.kind == "box" else 0.25 * r * r
            keep = cand[gauge_norm(cand, self.kind) < r]
            take = min(len(keep), n - filled)
            out[filled: filled + take] = keep[:take]
            filled += take
        return hmul(self.center, out)


def sample_gauge_sphere(n: int, kind: str = "koranyi", seed: int = 0) -> np.ndarray:
    """Points with unit gauge norm, spread by dilating random directions."""
    rng = np.random.default_rng(seed)
    out = np.empty((n, 3))
    filled = 0
    while filled < n:
        cand = rng.normal(size=(n - filled, 3))
        norms = gauge_norm(cand, kind)
        good = norms > 1e-9
        cand = hdilate(1.0 / norms[good], cand[good])
        take = len(cand)
        out[filled: filled + take] = cand
        filled += take
    return out


def norm_equivalence(norm_a: str, norm_b: str, samples: int = 2048,
                     margin: float = 0.05, seed: int = 0):
    """Empirical (c_low, c_high) with c_low <= |p|_b <= c_high on |p|_a = 1.

    The sampled min/max are widened by the safety margin.  All homogeneous
    norms are equivalent, so the constants certify two-sided bounds up to
    sampling coverage.
    """
    if samples < 1000:
        raise MetricsError("need at least 1000 sphere samples")
    pts = sample_gauge_sphere(samples, kind=norm_a, seed=seed)
    vals = gauge_norm(pts, norm_b)
    if not np.all(np.isfinite(vals)) or np.min(vals) <= 0:
        raise MetricsError("degenerate sampling for norm equivalence")
    return float(np.min(vals)) * (1.0 - margin), float(np.max(vals)) * (1.0 + margin)


# -- Carnot-Caratheodory bracket ------------------------------------------------


@dataclass(frozen=True)
class CCBudget:
    """Effort knobs for the cc upper-bound optimizer."""

    max_doublings: int = 3
    tol: float = 1e-4
    target_ratio: float = 1.5
    descent_rounds: int = 60


@dataclass(frozen=True)
class CCBracket:
    lower: float
    upper: float
    converged: bool

    @property
    def ratio(self) -> float:
        if self.lower == 0.0:
            return 1.0 if self.upper == 0.0 else np.inf
        return self.upper / self.lower


def cc_lower_bound(g, use_gauge: bool = True) -> float:
    """Certified lower bound for d_cc(0, g).

    Horizontal speed of subunit paths is at most 1, so the planar projection
    length bounds from below; closing the path with the straight chord back
    to the origin encloses signed area equal to the t-coordinate, and the
    planar isoperimetric inequality gives 2 sqrt(pi |t|) - |z|.
    """
    g = np.asarray(g, dtype=float)
    z = float(np.hypot(g[0], g[1]))
    t = float(g[2])
    bound = max(z, 2.0 * np.sqrt(np.pi * abs(t)) - z)
    if use_gauge:
        bound = max(bound, cal.CC_GAUGE_LOWER * float(gauge_norm(g)))
    return bound


def _closure_cost(endpoint, target):
    """Length of the exact closing maneuver: chord then area-matching circle."""
    gap = hmul(hinv(endpoint), target)
    seg = float(np.hypot(gap[0], gap[1]))
    mid = hmul(endpoint, np.array([gap[0], gap[1], 0.0]))
    tau_rest = float(target[2] - mid[2])
    return seg + 2.0 * np.sqrt(np.pi * abs(tau_rest))


def _path_cost(segments, target):
    e = np.zeros(3)
    length = 0.0
    for v in segments:
        length += float(np.hypot(v[0], v[1]))
        e = hmul(e, np.array([v[0], v[1], 0.0]))
    return length + _closure_cost(e, target)


def _coordinate_descent(segments, target, rounds, tol):
    segs = [np.array(v, dtype=float) for v in segments]
    best = _path_cost(segs, target)
    scale = max(1.0, float(np.max(np.abs(target))))
    step = 0.25 * scale
    for _ in range(rounds):
        improved = False
        for i in range(len(segs)):
            for axis in range(2):
                for sign in (1.0, -1.0):
                    trial = [s.copy() for s in segs]
                    trial[i][axis] += sign * step
                    c = _path_cost(trial, target)
                    if c < best - 1e-15:
                        best, segs, improved = c, trial, True
        if not improved:
            step *= 0.5
            if step < tol * scale:
                break
    return segs, best


def cc_distance(p, q, budget: CCBudget | None = None) -> CCBracket:
    """Bracketing interval for the cc distance between two points.

    The interval always contains the distance; `converged` reports whether
    the upper/lower ratio reached the budget's target before exhaustion.
    """
    budget = budget or CCBudget()
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    g = hmul(hinv(p), q)
    if float(gauge_norm(g)) == 0.0:
        return CCBracket(0.0, 0.0, True)
    lower = cc_lower_bound(g)
    segments = [np.array([g[0], g[1]])]
    upper = _path_cost(segments, g)
    for _ in range(budget.max_doublings + 1):
        segments, cost = _coordinate_descent(
            segments, g, budget.descent_rounds, budget.tol)
        improved = upper - cost
        upper = min(upper, cost)
        if lower > 0 and upper / lower <= budget.target_ratio:
            break
        if improved < budget.tol * (1.0 + upper):
            if len(segments) > 1:
                break
        segments = [s for v in segments for s in (v / 2.0, v / 2.0)]
    converged = lower > 0 and upper / lower <= budget.target_ratio
    return CCBracket(lower, min(upper, upper), converged)
