"""Balls that contain exactly n points of a point window.

Two finders are provided.  :func:`find_ball_sorted` sorts distances from a
(perturbed) center and puts the radius halfway between the n-th and the
(n+1)-th.  :func:`find_ball_growth` follows the grow-and-split construction:
start from an empty ball, inflate it until points reach the boundary, and
when too many arrive at once, nudge the center by a separating perturbation
so that only some of them enter.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import BudgetExhausted, HorizonError, WitnessSearchExhausted
from .norms import NormSpec, norm_eval
from .pointset import (
    IndexedPointSet,
    PointSet,
    certified_radius,
    check_horizon,
    sorted_distances,
)
from .sprime import STRATEGIES, TAU_SEP, find_witness

log = logging.getLogger(__name__)


@dataclass
class SearchConfig:
    """Tolerances and budgets for the ball finders.

    ``delta_witness`` bounds witness size on the unit sphere, so a split
    moves the center by less than ``delta_witness * r``.
    """

    tau_shell: float = 1e-9
    tau_tie: float = 1e-9
    delta_witness: float = 0.05
    shrink: float = 0.5
    shrink_rounds: int = 20
    max_iterations: int = 64
    max_perturbations: int = 200
    perturb_scale: float = 1e-3
    witness_budget: int = 4000
    witness_strategies: tuple = STRATEGIES
    tau_sep: float = TAU_SEP
    fallback_to_sorted: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("tau_shell", "tau_tie", "delta_witness", "perturb_scale", "tau_sep"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        for name in ("shrink_rounds", "max_iterations", "max_perturbations", "witness_budget"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        self.witness_strategies = tuple(self.witness_strategies)


@dataclass
class SearchStep:
    """One change of the ball during a search.

    ``scale`` is the radius relative to the initial empty ball.
    """

    action: str
    center: list
    radius: float
    scale: float
    count: int
    shell_ids: list = field(default_factory=list)
    witness: Optional[dict] = None


@dataclass
class BallCertificate:
    center: np.ndarray
    radius: float
    n: int
    inside_ids: list
    margin_in: float
    margin_out: float
    method: str
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "center": [float(c) for c in self.center],
            "radius": float(self.radius),
            "n": int(self.n),
            "inside_ids": [int(i) for i in self.inside_ids],
            "margin_in": float(self.margin_in),
            "margin_out": float(self.margin_out),
            "method": self.method,
            "trace": [asdict(s) for s in self.trace],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "BallCertificate":
        return cls(
            center=np.asarray(data["center"], dtype=float),
            radius=float(data["radius"]),
            n=int(data["n"]),
            inside_ids=[int(i) for i in data["inside_ids"]],
            margin_in=float(data["margin_in"]),
            margin_out=float(data["margin_out"]),
            method=data["method"],
            trace=[SearchStep(**s) for s in data.get("trace", [])],
        )


class CertificateCheck(NamedTuple):
    ok: bool
    count: int
    margin_in: float
    margin_out: float
    missing_ids: list
    extra_ids: list
    problems: list


def _points(ps_or_index) -> PointSet:
    return ps_or_index.points if isinstance(ps_or_index, IndexedPointSet) else ps_or_index


def validate_certificate(cert: BallCertificate, points, spec: Optional[NormSpec] = None) -> CertificateCheck:
    """Recount a certificate by linear scan and recompute its margins.

    ``missing_ids`` are claimed points that are not strictly inside;
    ``extra_ids`` are strictly inside points the certificate omits.
    """
    ps = _points(points)
    spec = spec or ps.horizon_norm
    problems = []
    center = np.asarray(cert.center, dtype=float)
    try:
        check_horizon(ps, center, cert.radius, spec)
    except HorizonError as exc:
        problems.append(str(exc))
    d = ps.distances(center, spec)
    hit = d < cert.radius
    inside = np.flatnonzero(hit)
    claimed = np.asarray(sorted(cert.inside_ids), dtype=np.int64)
    missing = sorted(set(claimed.tolist()) - set(inside.tolist()))
    extra = sorted(set(inside.tolist()) - set(claimed.tolist()))
    margin_in = float(cert.radius - d[hit].max()) if hit.any() else float(cert.radius)
    margin_out = float(d[~hit].min() - cert.radius) if (~hit).any() else float("inf")
    if len(claimed) != cert.n:
        problems.append(f"{len(claimed)} ids listed for n={cert.n}")
    if inside.size != cert.n:
        problems.append(f"ball holds {inside.size} points, expected {cert.n}")
    if missing or extra:
        problems.append(f"id mismatch: missing {missing[:10]}, extra {extra[:10]}")
    if not margin_in > 0:
        problems.append(f"inner margin {margin_in:.3g} is not positive")
    if not margin_out > 0:
        problems.append(f"outer margin {margin_out:.3g} is not positive")
    return CertificateCheck(not problems, int(inside.size), margin_in, margin_out, missing, extra, problems)


def _certificate(ps, spec, center, radius, n, method, trace) -> BallCertificate:
    d = ps.distances(center, spec)
    hit = d < radius
    return BallCertificate(
        center=np.array(center, dtype=float),
        radius=float(radius),
        n=n,
        inside_ids=np.flatnonzero(hit).tolist(),
        margin_in=float(radius - d[hit].max()) if hit.any() else float(radius),
        margin_out=float(d[~hit].min() - radius) if (~hit).any() else float("inf"),
        method=method,
        trace=list(trace),
    )


# ---------------------------------------------------------------------------
# sorted-distance finder


def find_ball_sorted(ips: IndexedPointSet, spec: Optional[NormSpec], seed_center, n: int,
                     cfg: Optional[SearchConfig] = None, trace=None) -> BallCertificate:
    """Ball with exactly ``n`` points, radius between the n-th and (n+1)-th distances.

    If those two distances are closer than ``2 * tau_tie`` (relative), the
    seed is perturbed with the config's RNG and the search repeats.
    """
    cfg = cfg or SearchConfig()
    ps = ips.points
    spec = spec or ps.horizon_norm
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    seed_center = np.asarray(seed_center, dtype=float)
    rng = np.random.default_rng(cfg.seed)
    center = seed_center
    for _ in range(cfg.max_perturbations):
        d, ids = sorted_distances(ips, center, spec, n + 1)
        gap = d[n] - d[n - 1]
        if gap > 2 * cfg.tau_tie * max(1.0, d[n]):
            radius = 0.5 * (d[n - 1] + d[n])
            cert = _certificate(ps, spec, center, radius, n, "sorted", trace or [])
            check = validate_certificate(cert, ps, spec)
            if check.ok:
                return cert
            log.debug("sorted candidate failed validation: %s", check.problems)
        step = cfg.perturb_scale * max(d[n], ips.cell_size)
        center = seed_center + step * rng.standard_normal(ps.dim)
    raise BudgetExhausted(
        f"no tie-free center found after {cfg.max_perturbations} perturbations", trace
    )


# ---------------------------------------------------------------------------
# grow-and-split finder


class CriticalScale(NamedTuple):
    """Where a ball about ``center`` first meets new points as it inflates.

    ``shell_ids`` sit within ``tau_shell`` (relative) of ``shell_radius``;
    ``inside_ids`` lie strictly within the band; ``next_radius`` is the
    first distance beyond the shell (or the certified limit).
    """

    scale: float
    shell_ids: np.ndarray
    inside_ids: np.ndarray
    shell_radius: float
    inner_radius: float
    next_radius: float


def _within(ips: IndexedPointSet, center, spec, rho):
    ps = ips.points
    cand = ips.candidates(center, rho * spec.outer_box)
    d = ps.distances(center, spec, cand)
    keep = d <= rho
    return d[keep], cand[keep]


def critical_scale(ips: IndexedPointSet, spec: Optional[NormSpec], center, r0: float,
                   cfg: Optional[SearchConfig] = None) -> CriticalScale:
    """Smallest scale ``s`` at which the ball ``B(center, r0 * s)`` meets new points."""
    cfg = cfg or SearchConfig()
    ps = ips.points
    spec = spec or ps.horizon_norm
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    center = np.asarray(center, dtype=float)
    tau = cfg.tau_shell
    limit = certified_radius(ps, center, spec)
    if r0 * (1 + tau) >= limit:
        raise HorizonError("no certified points beyond r0")
    rho = min(limit, max(2 * r0, 2 * ips.cell_size))
    while True:
        d, ids = _within(ips, center, spec, rho)
        beyond = d > r0 * (1 + tau)
        if beyond.any():
            d_next = float(d[beyond].min())
            after = d > d_next * (1 + tau)
            if after.any() or rho >= limit:
                break
        elif rho >= limit:
            raise HorizonError(f"no points within the horizon beyond radius {r0:.6g}")
        rho = min(limit, 2 * rho)
    inside = d < d_next * (1 - tau)
    shell = ~inside & ~after
    return CriticalScale(
        scale=d_next / r0,
        shell_ids=np.sort(ids[shell]),
        inside_ids=np.sort(ids[inside]),
        shell_radius=d_next,
        inner_radius=float(d[inside].max()) if inside.any() else 0.0,
        next_radius=float(d[after].min()) if after.any() else limit,
    )


WitnessFinder = Callable[[NormSpec, np.ndarray, np.ndarray, float], object]


class Split(NamedTuple):
    center: np.ndarray
    radius: float
    inside_ids: np.ndarray
    witness: dict


def split_shell(ips: IndexedPointSet, spec: Optional[NormSpec], center, r: float, shell_ids,
                witness_finder: Optional[WitnessFinder] = None,
                cfg: Optional[SearchConfig] = None, max_shift: Optional[float] = None,
                rng: Optional[np.random.Generator] = None) -> Split:
    """Move the center so that some, but not all, shell points enter the ball.

    Two shell points b1, b2 are normalised to unit vectors u_j = (b_j - c)/|b_j - c|.
    A witness z separates them; the new center is ``c - r * z`` and the
    radius stays ``r``, so b_j - c' is about ``r * (u_j + z)``.  The witness
    size is capped so that points strictly inside stay inside and points
    beyond the shell stay outside, and further by ``max_shift / r``.
    """
    cfg = cfg or SearchConfig()
    ps = ips.points
    spec = spec or ps.horizon_norm
    center = np.asarray(center, dtype=float)
    shell_ids = np.asarray(shell_ids, dtype=np.int64)
    if len(shell_ids) < 2:
        raise ValueError("splitting needs at least two shell points")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    if witness_finder is None:
        def witness_finder(spec, x, y, delta):
            return find_witness(spec, x, y, delta, cfg.witness_strategies,
                                cfg.witness_budget, rng, cfg.tau_sep)

    limit = certified_radius(ps, center, spec)
    d, ids = _within(ips, center, spec, min(limit, 2 * r))
    tau = cfg.tau_shell
    in_shell = np.isin(ids, shell_ids)
    inner = d[~in_shell & (d < r)]
    outer = d[~in_shell & (d > r)]
    inner_gap = r - inner.max() if inner.size else r
    outer_gap = (outer.min() if outer.size else limit) - r
    safety = 0.5 * min(inner_gap, outer_gap) / r
    delta = min(cfg.delta_witness, safety)
    if max_shift is not None:
        delta = min(delta, max_shift / r)
    base = int(inner.size)
    k = len(shell_ids)

    units = {}
    for i in shell_ids:
        v = ps.coords[i] - center
        units[int(i)] = v / norm_eval(spec, v)

    attempts, best = 0, 0.0
    pairs = [(int(a), int(b)) for j, a in enumerate(shell_ids) for b in shell_ids[j + 1:]]
    for _ in range(cfg.shrink_rounds):
        for a, b in pairs:
            result = witness_finder(spec, units[a], units[b], delta)
            attempts += getattr(result, "attempts", 1)
            if not result.found:
                best = max(best, result.best_separation)
                continue
            new_center = center - r * result.z
            nd, nids = _within(ips, new_center, spec, min(certified_radius(ps, new_center, spec), 2 * r))
            hit = nd < r
            m_new = int(hit.sum())
            margin_in = r - nd[hit].max() if hit.any() else r
            margin_out = nd[~hit].min() - r if (~hit).any() else np.inf
            prior = np.isin(ids[~in_shell & (d < r)], nids[hit]).all()
            if (base < m_new < base + k and prior
                    and margin_in > 2 * tau * r and margin_out > 2 * tau * r):
                witness = {"pair": [a, b], "delta": delta, **result.to_dict()}
                return Split(new_center, r, np.sort(nids[hit]), witness)
            log.debug("witness for %s gave count %d, margins %.3g/%.3g", (a, b), m_new,
                      margin_in, margin_out)
        delta *= cfg.shrink
    raise WitnessSearchExhausted(
        f"no separating perturbation for a shell of {k} points", attempts, best
    )


def find_ball_growth(ips: IndexedPointSet, spec: Optional[NormSpec], x0, n: int,
                     cfg: Optional[SearchConfig] = None,
                     witness_finder: Optional[WitnessFinder] = None) -> BallCertificate:
    """Ball with exactly ``n`` points by growing an empty ball about ``x0``.

    The empty starting ball U has radius half the nearest-point distance.
    Every split moves the center by at most ``r_U / 2**(i+1)``, so the final
    center stays inside U.  If a split fails and ``cfg.fallback_to_sorted``
    is set, the sorted finder takes over from the current center.
    """
    cfg = cfg or SearchConfig()
    ps = ips.points
    spec = spec or ps.horizon_norm
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    rng = np.random.default_rng(cfg.seed)
    center = np.asarray(x0, dtype=float).copy()

    d0, _ = sorted_distances(ips, center, spec, 1)
    if d0[0] == 0:
        # x0 is a point of the set: pick an empty ball right next to it
        d1, _ = sorted_distances(ips, center, spec, 2)
        center = center + 0.25 * d1[1] * rng.standard_normal(ps.dim) / np.sqrt(ps.dim)
        d0, _ = sorted_distances(ips, center, spec, 1)
    r_u = 0.5 * float(d0[0])
    radius = r_u
    count = 0
    trace = [SearchStep("start", center.tolist(), radius, 1.0, 0)]
    splits = 0

    def done(method="growth"):
        nd = ps.distances(center, spec)
        hit = nd < radius
        # re-centre the radius in the gap around the boundary
        r_final = 0.5 * (nd[hit].max() + nd[~hit].min())
        cert = _certificate(ps, spec, center, r_final, n, method, trace)
        check = validate_certificate(cert, ps, spec)
        if not check.ok:
            raise BudgetExhausted(f"final ball failed validation: {check.problems}", trace)
        return cert

    while True:
        cs = critical_scale(ips, spec, center, radius, cfg)
        base = len(cs.inside_ids)
        k = len(cs.shell_ids)
        if base + k <= n:
            radius = 0.5 * (cs.shell_radius * (1 + cfg.tau_shell) + cs.next_radius)
            count = base + k
            trace.append(SearchStep("grow", center.tolist(), radius, radius / r_u, count,
                                    cs.shell_ids.tolist()))
            if count == n:
                return done()
            continue
        if splits >= cfg.max_iterations:
            raise BudgetExhausted(f"split budget of {cfg.max_iterations} exhausted", trace)
        try:
            split = split_shell(ips, spec, center, cs.shell_radius, cs.shell_ids,
                                witness_finder, cfg, max_shift=r_u * 0.5 ** (splits + 1), rng=rng)
        except WitnessSearchExhausted as exc:
            if not cfg.fallback_to_sorted:
                raise BudgetExhausted(str(exc), trace) from exc
            log.info("split failed (%s); falling back to sorted distances", exc)
            trace.append(SearchStep("fallback", center.tolist(), radius, radius / r_u, count,
                                    cs.shell_ids.tolist()))
            return find_ball_sorted(ips, spec, center, n, cfg, trace)
        splits += 1
        center = split.center
        radius, settled = _settle(ips, spec, center, split.radius, n, base, cfg)
        action = "split" if settled > count else "recenter"
        count = settled
        trace.append(SearchStep(action, center.tolist(), radius, radius / r_u, count,
                                cs.shell_ids.tolist(), split.witness))
        if count == n:
            return done()


def _settle(ips, spec, center, r, n, base, cfg):
    """Largest count in [base, n] realisable by a radius with a clear gap.

    After a split the shell points sit at distinct-ish distances from the new
    center; this picks the radius that takes in as many as allowed.
    """
    ps = ips.points
    reach = min(certified_radius(ps, center, spec), 2 * r)
    d, _ = _within(ips, center, spec, reach)
    d = np.sort(d)
    tau = cfg.tau_shell
    for j in range(min(n, len(d)), base - 1, -1):
        nxt = d[j] if j < len(d) else reach
        if j == 0 or nxt - d[j - 1] > 4 * tau * nxt:
            lo = d[j - 1] if j else 0.0
            return 0.5 * (lo + nxt), j
    raise BudgetExhausted("split left no usable radius gap")
