"""Search for separating perturbations between pairs of unit vectors.

Given distinct unit vectors x, y and delta > 0, a *witness* is a vector z
with ||z|| < delta such that one of x + z, y + z lies strictly outside the
unit ball and the other strictly inside.  Finding none is evidence only; the
one case with a checkable impossibility proof is a pair on a common facet of
the l_inf ball (:func:`certify_no_witness_linf`).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .norms import (
    TAU_GAUGE,
    NormSpec,
    boundary_scale,
    edge_point,
    norm_eval,
    sample_unit_sphere,
    surface_height,
)

TAU_SEP = 1e-10

STRATEGIES = ("segment", "tangent", "random")

# magnitudes tried are delta * 0.999 * 0.5**k
_LADDER = 0.999 * 0.5 ** np.arange(40)


@dataclass
class Witness:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    delta: float
    norm_x_after: float
    norm_y_after: float
    strategy: str
    found = True

    @property
    def x_out(self) -> bool:
        """True when ``x + z`` is the vector pushed outside the ball."""
        return self.norm_x_after > 1.0

    @property
    def separation(self) -> float:
        return min(abs(self.norm_x_after - 1.0), abs(self.norm_y_after - 1.0))

    def to_dict(self) -> dict:
        return {
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "z": self.z.tolist(),
            "delta": self.delta,
            "norm_x_after": self.norm_x_after,
            "norm_y_after": self.norm_y_after,
            "strategy": self.strategy,
        }


@dataclass
class NotFound:
    attempts: int
    best_separation: float
    strategies: tuple
    found = False


def check_witness(spec: NormSpec, x, y, z, delta: float, tau_sep: float = TAU_SEP) -> bool:
    """Re-evaluate a claimed witness from scratch."""
    if not norm_eval(spec, z) < delta:
        return False
    nx = norm_eval(spec, np.asarray(x) + z)
    ny = norm_eval(spec, np.asarray(y) + z)
    return (nx > 1 + tau_sep and ny < 1 - tau_sep) or (nx < 1 - tau_sep and ny > 1 + tau_sep)


def _separations(spec, x, y, zs):
    nx = norm_eval(spec, x + zs)
    ny = norm_eval(spec, y + zs)
    split = (nx - 1.0) * (ny - 1.0) < 0
    sep = np.where(split, np.minimum(np.abs(nx - 1.0), np.abs(ny - 1.0)), 0.0)
    return nx, ny, sep


class _Search:
    """Bookkeeping shared by the strategies of one :func:`find_witness` call."""

    def __init__(self, spec, x, y, delta, tau_sep, budget):
        self.spec, self.x, self.y, self.delta = spec, x, y, delta
        self.tau_sep = tau_sep
        self.budget = budget
        self.attempts = 0
        self.best = 0.0

    @property
    def exhausted(self):
        return self.attempts >= self.budget

    def try_batch(self, zs: np.ndarray, strategy: str) -> Optional[Witness]:
        """Evaluate candidates in order; return the first acceptable one."""
        zs = zs[: max(0, self.budget - self.attempts)]
        if len(zs) == 0:
            return None
        self.attempts += len(zs)
        small = norm_eval(self.spec, zs) < self.delta
        nx, ny, sep = _separations(self.spec, self.x, self.y, zs)
        self.best = max(self.best, float(sep.max()))
        good = np.flatnonzero(small & (sep >= self.tau_sep))
        if good.size == 0:
            return None
        i = good[0]
        w = Witness(self.x.copy(), self.y.copy(), zs[i].copy(), self.delta,
                    float(nx[i]), float(ny[i]), strategy)
        # the recorded values must survive an independent re-check
        if not check_witness(self.spec, w.x, w.y, w.z, self.delta, self.tau_sep):
            return None
        return w


def _ladder(direction: np.ndarray, spec: NormSpec, delta: float) -> np.ndarray:
    unit = direction / norm_eval(spec, direction)
    return (delta * _LADDER)[:, None] * unit[None, :]


def _segment(search: _Search) -> Optional[Witness]:
    # x + t(y - x)/|y - x| walks into the chord: inside for strictly convex norms
    w = search.y - search.x
    zs = _ladder(w, search.spec, search.delta)
    both = np.empty((2 * len(zs), len(w)))
    both[0::2] = zs
    both[1::2] = -zs
    return search.try_batch(both, "segment")


def _equator_edge(p: np.ndarray, tol: float = 1e-9):
    """(edge, parameter) pairs of the equator edges containing ``p``."""
    if abs(p[2]) > tol or abs(max(abs(p[0]), abs(p[1])) - 1.0) > tol:
        return []
    found = []
    if abs(p[1] - 1) <= tol:
        found.append((1, p[0]))
    if abs(p[0] - 1) <= tol:
        found.append((2, -p[1]))
    if abs(p[1] + 1) <= tol:
        found.append((3, -p[0]))
    if abs(p[0] + 1) <= tol:
        found.append((4, p[1]))
    return found


_INWARD = {1: (0.0, -1.0), 2: (-1.0, 0.0), 3: (0.0, 1.0), 4: (1.0, 0.0)}


def _surface_slope(params, p, direction, upper=True, eps=1e-5) -> float:
    """One-sided slope of the boundary surface leaving the equator at ``p``.

    Richardson-extrapolated forward differences; the surface is zero on the
    equator, so only the displaced heights are needed.
    """
    def diff(h):
        q = p[:2] + h * direction
        if not upper:
            q = -q
        return float(surface_height(params, q[0], q[1])) / h

    return 2.0 * diff(eps / 2) - diff(eps)


def _tangent(search: _Search) -> Optional[Witness]:
    spec = search.spec
    if spec.kind != "custom3d":
        return None
    ex = dict(_equator_edge(search.x))
    ey = dict(_equator_edge(search.y))
    shared = sorted(set(ex) & set(ey))
    if not shared:
        return None
    edge = shared[0]
    params = spec.params
    pts = (search.x, search.y)
    inward = np.array(_INWARD[edge])

    candidates = []
    for upper in (True, False):
        # ray tangents xi(s): inward along the ray, rising at the ray slope
        ray_slopes = []
        for p in pts:
            ray = -p[:2] / math.hypot(p[0], p[1])
            ray_slopes.append((ray, _surface_slope(params, p, ray, upper)))
        steep = int(ray_slopes[1][1] > ray_slopes[0][1])
        ray, slope = ray_slopes[steep]
        gap = abs(ray_slopes[1][1] - ray_slopes[0][1])
        if gap > 1e-6:
            # tilt xi of the steeper point slightly inward so it enters the ball
            vertical = slope - 0.5 * gap
            candidates.append(np.array([ray[0], ray[1], vertical if upper else -vertical]))
        # perpendicular slopes decide the first-order outcome of a common shift
        perp = [_surface_slope(params, p, inward, upper) for p in pts]
        if abs(perp[0] - perp[1]) > 1e-6:
            vertical = 0.5 * (perp[0] + perp[1])
            candidates.append(np.array([inward[0], inward[1], vertical if upper else -vertical]))
    for direction in candidates:
        w = search.try_batch(_ladder(direction, spec, search.delta), "tangent")
        if w is not None:
            return w
    return None


def _random(search: _Search, rng: np.random.Generator) -> Optional[Witness]:
    spec = search.spec
    per_direction = len(_LADDER)
    while not search.exhausted:
        batch = max(1, min(64, (search.budget - search.attempts) // per_direction))
        dirs = sample_unit_sphere(spec, rng, batch)
        zs = (search.delta * _LADDER)[None, :, None] * dirs[:, None, :]
        w = search.try_batch(zs.reshape(-1, spec.dim), "random")
        if w is not None:
            return w
    return None


def find_witness(spec: NormSpec, x, y, delta: float, strategies: Sequence[str] = STRATEGIES,
                 budget: int = 20000, rng: Optional[np.random.Generator] = None,
                 tau_sep: float = TAU_SEP):
    """Search for z with ||z|| < delta separating unit vectors ``x`` and ``y``.

    Strategies run in the given order:

    ``segment``  z along the chord direction +-(y - x), shrinking magnitudes.
    ``tangent``  custom norm only, both points on one equator edge: z along the
                 ray tangent of the steeper point, tilted inward, then z across
                 the edge rising at the mean perpendicular slope.
    ``random``   random directions, magnitudes on a geometric ladder.

    Returns a :class:`Witness`, or :class:`NotFound` with the best separation
    seen (which proves nothing).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not delta > 0:
        raise ValueError("delta must be positive")
    if np.array_equal(x, y):
        raise ValueError("x and y must differ")
    for name, v in (("x", x), ("y", y)):
        if abs(norm_eval(spec, v) - 1.0) > 1e3 * TAU_GAUGE:
            raise ValueError(f"{name} is not a unit vector")
    unknown = set(strategies) - set(STRATEGIES)
    if unknown:
        raise ValueError(f"unknown strategies {sorted(unknown)}")
    rng = rng if rng is not None else np.random.default_rng(0)
    search = _Search(spec, x, y, float(delta), tau_sep, budget)
    for name in strategies:
        if search.exhausted:
            break
        if name == "segment":
            w = _segment(search)
        elif name == "tangent":
            w = _tangent(search)
        else:
            w = _random(search, rng)
        if w is not None:
            return w
    return NotFound(search.attempts, search.best, tuple(strategies))


# ---------------------------------------------------------------------------


@dataclass
class ImpossibilityCertificate:
    """No witness of size <= ``bound`` exists for a pair on an l_inf facet.

    With every off-axis coordinate kept inside (-1, 1), the norm of x + z or
    y + z exceeds 1 exactly when ``sign * z[axis] > 0``, for both at once.
    """

    axis: int
    sign: int
    bound: float
    found = False

    def covers(self, delta: float) -> bool:
        return delta <= self.bound


@dataclass
class NotApplicable:
    reason: str


def certify_no_witness_linf(x, y, delta: Optional[float] = None):
    """Certificate for a pair on a common facet of the l_inf unit ball.

    Returns :class:`NotApplicable` when the pair shares no facet, when some
    off-axis coordinate has modulus 1, or when ``delta`` exceeds the bound.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be vectors of equal dimension")
    if max(np.abs(x).max(), np.abs(y).max()) != 1.0:
        return NotApplicable("not unit vectors of the l_inf norm")
    axes = [j for j in range(len(x)) if abs(x[j]) == 1.0 and x[j] == y[j]]
    if len(axes) != 1:
        return NotApplicable("pair does not share exactly one facet")
    j = axes[0]
    others = [i for i in range(len(x)) if i != j]
    if any(abs(x[i]) >= 1.0 or abs(y[i]) >= 1.0 for i in others):
        return NotApplicable("an off-axis coordinate has modulus 1")
    bound = float(min((1.0 - max(abs(x[i]), abs(y[i])) for i in others), default=math.inf))
    cert = ImpossibilityCertificate(j, int(x[j]), bound)
    if delta is not None and not cert.covers(delta):
        return NotApplicable(f"delta={delta} exceeds the facet bound {bound}")
    return cert


def grid_witness_count(spec: NormSpec, x, y, half_width: float, step: float,
                       tau_sep: float = 0.0) -> int:
    """Exhaustive count of grid points z in [-w, w]^d that separate x and y."""
    k = int(round(half_width / step))
    axis = np.arange(-k, k + 1) * step
    grid = np.stack(np.meshgrid(*[axis] * len(x), indexing="ij"), axis=-1).reshape(-1, len(x))
    nx = norm_eval(spec, np.asarray(x) + grid)
    ny = norm_eval(spec, np.asarray(y) + grid)
    split = ((nx > 1 + tau_sep) & (ny < 1 - tau_sep)) | ((nx < 1 - tau_sep) & (ny > 1 + tau_sep))
    return int(split.sum())


# ---------------------------------------------------------------------------


@dataclass
class ScanReport:
    total: int = 0
    witnessed: int = 0
    not_found: int = 0
    certified_impossible: int = 0
    strategies: dict = field(default_factory=lambda: {name: 0 for name in STRATEGIES})
    orientation: dict = field(default_factory=lambda: {"x_out": 0, "y_out": 0})
    witnesses: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "witnessed": self.witnessed,
            "not_found": self.not_found,
            "certified_impossible": self.certified_impossible,
            "strategies": dict(self.strategies),
            "orientation": dict(self.orientation),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def random_unit_pairs(spec: NormSpec, count: int, rng: np.random.Generator):
    if count <= 0:
        return []
    xs = sample_unit_sphere(spec, rng, count)
    ys = sample_unit_sphere(spec, rng, count)
    return list(zip(xs, ys))


def linf_facet_pairs(dim: int, count: int, rng: np.random.Generator, spread: float = 0.5,
                     axis: Optional[int] = None):
    """Pairs on one facet of the l_inf ball, off-axis coordinates in [-spread, spread]."""
    if not 0 <= spread < 1:
        raise ValueError("spread must lie in [0, 1)")
    pairs = []
    for _ in range(count):
        j = int(rng.integers(dim)) if axis is None else axis
        sign = 1.0 if rng.random() < 0.5 else -1.0
        xy = rng.uniform(-spread, spread, size=(2, dim))
        xy[:, j] = sign
        pairs.append((xy[0], xy[1]))
    return pairs


def equator_pair(spec: NormSpec, s1: float, s2: float, edge: int = 1):
    """Two points of one equator edge of the custom ball, gauge-normalised."""
    x = edge_point(edge, s1)
    y = edge_point(edge, s2)
    return x * boundary_scale(spec, x), y * boundary_scale(spec, y)


def sprime_scan(spec: NormSpec, pairs: Iterable, delta: float, budget: int = 20000,
                seed: int = 0, strategies: Sequence[str] = STRATEGIES,
                tau_sep: float = TAU_SEP) -> ScanReport:
    """Survey witnesses over ``pairs``.

    l_inf pairs on a common facet are certified (when ``delta`` is within the
    facet bound) instead of searched.  Each pair gets its own RNG stream
    spawned from ``seed``, so results do not depend on evaluation order.
    """
    pairs = list(pairs)
    report = ScanReport()
    streams = np.random.SeedSequence(seed).spawn(len(pairs))
    for (x, y), stream in zip(pairs, streams):
        report.total += 1
        if spec.kind == "linf":
            cert = certify_no_witness_linf(x, y, delta)
            if isinstance(cert, ImpossibilityCertificate):
                report.certified_impossible += 1
                continue
        result = find_witness(spec, x, y, delta, strategies, budget,
                              np.random.default_rng(stream), tau_sep)
        if result.found:
            report.witnessed += 1
            report.strategies[result.strategy] += 1
            report.orientation["x_out" if result.x_out else "y_out"] += 1
            report.witnesses.append(result)
        else:
            report.not_found += 1
    return report


@dataclass
class ConvexityProbe:
    trials: int
    flagged: int
    convexity_violations: int
    max_midpoint_norm: float
    flagged_pairs: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "flagged": self.flagged,
            "convexity_violations": self.convexity_violations,
            "max_midpoint_norm": self.max_midpoint_norm,
        }


def strict_convexity_probe(spec: NormSpec, trials: int = 1000,
                           rng: Optional[np.random.Generator] = None,
                           pairs=None, tol: float = TAU_GAUGE) -> ConvexityProbe:
    """Look for distinct unit pairs whose midpoint has norm >= 1 - tol.

    Such a pair spans a flat piece of the sphere.  A midpoint norm above
    ``1 + tol`` is counted separately: it means the ball is not even convex.
    Explicit ``pairs`` replace random sampling.
    """
    if pairs is None:
        if trials < 1:
            raise ValueError("trials must be >= 1")
        rng = rng if rng is not None else np.random.default_rng(0)
        xs = sample_unit_sphere(spec, rng, trials)
        ys = sample_unit_sphere(spec, rng, trials)
    else:
        pairs = list(pairs)
        xs = np.array([p[0] for p in pairs], dtype=float)
        ys = np.array([p[1] for p in pairs], dtype=float)
    distinct = np.any(xs != ys, axis=1)
    mid = norm_eval(spec, 0.5 * (xs + ys))
    flag = distinct & (mid >= 1.0 - tol)
    return ConvexityProbe(
        trials=len(xs),
        flagged=int(flag.sum()),
        convexity_violations=int((distinct & (mid > 1.0 + tol)).sum()),
        max_midpoint_norm=float(mid[distinct].max()) if distinct.any() else 0.0,
        flagged_pairs=[(xs[i], ys[i]) for i in np.flatnonzero(flag)],
    )
