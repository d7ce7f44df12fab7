"""Finite windows of quasi-finite point sets, with exact ball counting.

A :class:`PointSet` lists every point of some (conceptually infinite)
locally finite set whose horizon norm is at most ``horizon``.  Any ball that
fits inside the horizon can therefore be counted exactly.  Point ids are the
row indices ``0..N-1``.
"""
from __future__ import annotations

import functools
import math
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import HorizonError, PointFileError, WindowTooLarge
from .norms import NormSpec, box_corner_bound, convex_gauge, norm_columns, norm_eval, parse_norm

DEFAULT_POINT_CAP = 10**8

# candidate boxes are padded by this fraction of r; see BallQueryResult
GAP_PAD = 1e-3

_HORIZON_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class PointSet:
    coords: np.ndarray
    horizon: float
    horizon_norm: NormSpec

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float, ndmin=2, copy=True)
        if coords.size == 0:
            coords = coords.reshape(0, self.horizon_norm.dim)
        if coords.shape[1] != self.horizon_norm.dim:
            raise ValueError(
                f"points have dimension {coords.shape[1]}, horizon norm has {self.horizon_norm.dim}"
            )
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("non-finite coordinates")
        if len(coords):
            norms = norm_eval(self.horizon_norm, coords)
            far = np.flatnonzero(norms > self.horizon * (1 + _HORIZON_SLACK))
            if far.size:
                raise HorizonError(f"{far.size} points lie beyond the horizon, first id {far[0]}")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def dim(self) -> int:
        return self.horizon_norm.dim

    @functools.cached_property
    def columns(self) -> tuple[np.ndarray, ...]:
        """Contiguous per-axis copies of the coordinates."""
        return tuple(np.ascontiguousarray(self.coords[:, j]) for j in range(self.dim))

    def distances(self, center, spec: NormSpec, ids=None) -> np.ndarray:
        """``spec``-distances from ``center`` to the points ``ids`` (all by default)."""
        if ids is None:
            cols = [col - c for col, c in zip(self.columns, center)]
        else:
            cols = [col[ids] - c for col, c in zip(self.columns, center)]
        if len(cols[0]) == 0:
            return np.empty(0)
        return norm_columns(spec, cols)

    def __len__(self):
        return len(self.coords)

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return (
            self.horizon == other.horizon
            and self.horizon_norm == other.horizon_norm
            and np.array_equal(self.coords, other.coords)
        )

    __hash__ = None


def lattice_window(dim: int, horizon: float, horizon_norm: Optional[NormSpec] = None,
                   cap: int = DEFAULT_POINT_CAP) -> PointSet:
    """All integer vectors of norm at most ``horizon``, in lexicographic order."""
    horizon_norm = horizon_norm or NormSpec.lp(2, dim)
    if horizon_norm.dim != dim:
        raise ValueError("horizon norm dimension does not match")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    reach = np.floor(horizon * horizon_norm.outer_box + 1e-9).astype(np.int64)
    box_count = int(np.prod(2 * reach + 1, dtype=float))
    if box_count > cap:
        raise WindowTooLarge(f"window box holds {box_count} lattice points, cap is {cap}")

    # enumerate slab by slab along the first axis to keep memory flat
    rest = [np.arange(-m, m + 1) for m in reach[1:]]
    if rest:
        tail = np.stack(np.meshgrid(*rest, indexing="ij"), axis=-1).reshape(-1, dim - 1)
    else:
        tail = np.zeros((1, 0), dtype=np.int64)
    chunks = []
    limit = horizon * (1 + _HORIZON_SLACK)
    for first in range(-reach[0], reach[0] + 1):
        slab = np.empty((len(tail), dim))
        slab[:, 0] = first
        slab[:, 1:] = tail
        chunks.append(slab[norm_eval(horizon_norm, slab) <= limit])
    coords = np.concatenate(chunks) if chunks else np.empty((0, dim))
    return PointSet(coords, horizon, horizon_norm)


# ---------------------------------------------------------------------------
# point files


def _fmt(x: float) -> str:
    return format(x, ".17g")


def save_points(ps: PointSet, path) -> None:
    """Write ``ps`` in the point-file format, atomically."""
    lines = [f"# dim={ps.dim} horizon={_fmt(ps.horizon)} norm={ps.horizon_norm.name}"]
    lines.extend(" ".join(_fmt(c) for c in row) for row in ps.coords.tolist())
    atomic_write_text(path, "\n".join(lines) + "\n")


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_header(line: str) -> dict:
    fields = {}
    for token in line.lstrip("#").split():
        if "=" in token:
            key, _, value = token.partition("=")
            fields[key] = value
    return fields


def load_points(path) -> PointSet:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise PointFileError(f"{path}: missing '# dim=.. horizon=.. norm=..' header")
    header = _parse_header(lines[0])
    missing = {"dim", "horizon", "norm"} - header.keys()
    if missing:
        raise PointFileError(f"{path}: header lacks {sorted(missing)}")
    try:
        dim = int(header["dim"])
        horizon = float(header["horizon"])
        norm = parse_norm(header["norm"], dim)
    except ValueError as exc:
        raise PointFileError(f"{path}: bad header: {exc}") from None

    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split(" ")
        if len(parts) != dim:
            raise PointFileError(f"{path}:{lineno}: expected {dim} coordinates, got {len(parts)}")
        rows.append(parts)
    try:
        coords = np.array(rows, dtype=float).reshape(-1, dim)
    except ValueError:
        bad = next(i for i, r in enumerate(rows) if not _all_float(r))
        raise PointFileError(f"{path}: malformed coordinate in data row {bad + 1}") from None
    return PointSet(coords, horizon, norm)


def _all_float(parts) -> bool:
    try:
        [float(p) for p in parts]
    except ValueError:
        return False
    return True


# ---------------------------------------------------------------------------
# counting


class BallQueryResult(NamedTuple):
    """Result of a ball count.

    ``boundary_gap`` is ``min |d(a, c) - r|`` over all points, capped at
    ``GAP_PAD * r``.  A small gap means the count is sensitive to rounding.
    """

    count: int
    ids: np.ndarray
    boundary_gap: float


class IndexedPointSet:
    """A :class:`PointSet` bucketed into a uniform grid.

    Points are sorted by flattened cell key, so the cells of one row along
    the last axis form a contiguous run that a pair of binary searches finds.
    """

    def __init__(self, points: PointSet, cell_size: Optional[float] = None):
        n, d = points.coords.shape
        if cell_size is None:
            cell_size = points.horizon / max(1.0, n ** (1.0 / d))
        if not cell_size > 0:
            raise ValueError("cell_size must be positive")
        self.points = points
        self.cell_size = float(cell_size)
        coords = points.coords
        if n:
            self.origin = coords.min(axis=0)
            self.shape = tuple(
                int(v) + 1 for v in np.floor((coords.max(axis=0) - self.origin) / self.cell_size)
            )
        else:
            self.origin = np.zeros(d)
            self.shape = (1,) * d
        if float(np.prod(self.shape, dtype=float)) >= 2.0**62:
            raise ValueError("grid too fine for 64-bit cell keys")
        keys = self._keys(coords)
        self.order = np.argsort(keys, kind="stable")
        self.sorted_keys = keys[self.order]

    @property
    def dim(self) -> int:
        return self.points.dim

    def __len__(self):
        return len(self.points)

    def _cells(self, coords) -> np.ndarray:
        cells = np.floor((coords - self.origin) / self.cell_size).astype(np.int64)
        return np.clip(cells, 0, np.array(self.shape) - 1)

    def _keys(self, coords) -> np.ndarray:
        if len(coords) == 0:
            return np.empty(0, dtype=np.int64)
        return np.ravel_multi_index(self._cells(coords).T, self.shape)

    def candidates(self, center, half_widths) -> np.ndarray:
        """Ids of all points in cells overlapping the box ``center +- half_widths``."""
        center = np.asarray(center, dtype=float)
        lo = np.floor((center - half_widths - self.origin) / self.cell_size).astype(np.int64)
        hi = np.floor((center + half_widths - self.origin) / self.cell_size).astype(np.int64)
        lo = np.maximum(lo, 0)
        hi = np.minimum(hi, np.array(self.shape) - 1)
        if np.any(lo > hi) or len(self.sorted_keys) == 0:
            return np.empty(0, dtype=np.int64)
        strides = np.array([int(np.prod(self.shape[j + 1:])) for j in range(self.dim)], dtype=np.int64)
        base = np.zeros(1, dtype=np.int64)
        for j in range(self.dim - 1):
            steps = np.arange(lo[j], hi[j] + 1, dtype=np.int64) * strides[j]
            base = (base[:, None] + steps[None, :]).ravel()
        starts = np.searchsorted(self.sorted_keys, base + lo[-1], side="left")
        ends = np.searchsorted(self.sorted_keys, base + hi[-1], side="right")
        lengths = ends - starts
        total = int(lengths.sum())
        if total == 0:
            return np.empty(0, dtype=np.int64)
        # concatenate the runs [starts[i], ends[i]) without a Python loop
        offsets = np.repeat(starts - np.concatenate(([0], np.cumsum(lengths)[:-1])), lengths)
        return self.order[np.arange(total) + offsets]


def build_index(ps: PointSet, cell_size: Optional[float] = None) -> IndexedPointSet:
    return IndexedPointSet(ps, cell_size)


def _as_center(ps: PointSet, center) -> np.ndarray:
    c = np.asarray(center, dtype=float)
    if c.shape != (ps.dim,):
        raise ValueError(f"center must have dimension {ps.dim}")
    if not np.all(np.isfinite(c)):
        raise ValueError("center has non-finite coordinates")
    return c


def certified_radius(ps: PointSet, center, spec: NormSpec) -> float:
    """A radius up to which ``spec``-balls about ``center`` stay inside the horizon.

    Exact (the largest such radius) for convex horizon norms; for the
    custom gauge a convex gauge above it is used, which is conservative.
    """
    reach = ps.horizon - float(convex_gauge(ps.horizon_norm, _as_center(ps, center)))
    return reach / box_corner_bound(spec, ps.horizon_norm)


def check_horizon(ps: PointSet, center, r: float, spec: NormSpec) -> None:
    limit = certified_radius(ps, center, spec)
    if r > limit * (1 + _HORIZON_SLACK) + 1e-300:
        raise HorizonError(
            f"ball of radius {r:.6g} at {np.asarray(center).tolist()} reaches past the horizon "
            f"(certified up to {limit:.6g})"
        )


def _count(ps: PointSet, ids, center, r, spec, mode) -> BallQueryResult:
    """Count over the points ``ids``; ``ids=None`` means every point."""
    d = ps.distances(center, spec, ids)
    if ids is None:
        ids = np.arange(len(ps))
    if len(d) == 0:
        return BallQueryResult(0, np.empty(0, dtype=np.int64), GAP_PAD * r)
    hit = d < r if mode == "open" else d <= r
    gap = min(float(np.min(np.abs(d - r))), GAP_PAD * r)
    return BallQueryResult(int(hit.sum()), np.sort(ids[hit]), gap)


def _check_query(ps, center, r, spec, mode):
    if mode not in ("open", "closed"):
        raise ValueError(f"mode must be 'open' or 'closed', got {mode!r}")
    if spec.dim != ps.dim:
        raise ValueError("norm dimension does not match the point set")
    if not (r >= 0 and math.isfinite(r)):
        raise ValueError(f"radius must be a finite non-negative number, got {r}")
    check_horizon(ps, center, r, spec)


def count_in_ball(ips: IndexedPointSet, center, r: float, spec: Optional[NormSpec] = None,
                  mode: str = "open") -> BallQueryResult:
    """Exact count of points in the ``spec``-ball of radius ``r`` about ``center``.

    ``mode="open"`` counts ``d < r``; ``"closed"`` counts ``d <= r``.
    """
    ps = ips.points
    spec = spec or ps.horizon_norm
    center = _as_center(ps, center)
    _check_query(ps, center, r, spec, mode)
    half = r * (1 + GAP_PAD) * spec.outer_box
    cand = ips.candidates(center, half)
    return _count(ps, cand, center, r, spec, mode)


def count_in_ball_scan(ps: PointSet, center, r: float, spec: Optional[NormSpec] = None,
                       mode: str = "open") -> BallQueryResult:
    """Linear-scan twin of :func:`count_in_ball`, used as its oracle."""
    spec = spec or ps.horizon_norm
    center = _as_center(ps, center)
    _check_query(ps, center, r, spec, mode)
    return _count(ps, None, center, r, spec, mode)


def sorted_distances(ips: IndexedPointSet, center, spec: Optional[NormSpec] = None,
                     k: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """The ``k`` nearest points as ``(distances, ids)``, ties broken by id.

    Raises :class:`HorizonError` if the k-th distance is not certified, i.e.
    lies beyond the radius where the window is known to be complete.
    """
    ps = ips.points
    spec = spec or ps.horizon_norm
    center = _as_center(ps, center)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(ps):
        raise HorizonError(f"k={k} exceeds the {len(ps)} listed points")
    limit = certified_radius(ps, center, spec)
    if limit < 0:
        raise HorizonError("center lies beyond the horizon")
    # expected radius for k points at the window's mean density, then grow
    volume = float(np.prod(2 * ps.horizon * ps.horizon_norm.outer_box))
    rho = min(limit, max(ips.cell_size, (k * volume / max(len(ps), 1)) ** (1.0 / ps.dim)))
    while True:
        cand = ips.candidates(center, rho * spec.outer_box)
        d = ps.distances(center, spec, cand)
        keep = d <= rho
        if keep.sum() >= k:
            d, cand = d[keep], cand[keep]
            order = np.lexsort((cand, d))[:k]
            return d[order], cand[order]
        if rho >= limit:
            raise HorizonError(
                f"only {int(keep.sum())} points are certified within {limit:.6g} of the center, k={k}"
            )
        rho = min(limit, 2 * rho)


def sorted_distances_scan(ps: PointSet, center, spec: Optional[NormSpec] = None,
                          k: int = 1) -> tuple[np.ndarray, np.ndarray]:
    spec = spec or ps.horizon_norm
    center = _as_center(ps, center)
    d = ps.distances(center, spec)
    ids = np.arange(len(ps))
    order = np.lexsort((ids, d))[:k]
    return d[order], ids[order]


# ---------------------------------------------------------------------------
# exact comparisons for centers with coordinates in Q(sqrt 2)


class Surd(NamedTuple):
    """The number ``rational + root2 * sqrt(2)`` with exact rational parts."""

    rational: Fraction
    root2: Fraction

    def __sub__(self, other):
        return Surd(self.rational - other.rational, self.root2 - other.root2)

    def sign(self) -> int:
        a, b = self.rational, self.root2
        sa = (a > 0) - (a < 0)
        sb = (b > 0) - (b < 0)
        if sa == sb or sb == 0:
            return sa
        if sa == 0:
            return sb
        # opposite signs: compare a^2 with 2 b^2
        lhs, rhs = a * a, 2 * b * b
        return sa if lhs > rhs else (sb if lhs < rhs else 0)

    def __float__(self):
        return float(self.rational) + float(self.root2) * math.sqrt(2.0)


def surd_sq_distance(point: Sequence[int], center: Sequence[Surd]) -> Surd:
    """Exact squared Euclidean distance from an integer point to a Q(sqrt 2) center."""
    rational = Fraction(0)
    root2 = Fraction(0)
    for p, c in zip(point, center):
        u = Fraction(p) - c.rational
        rational += u * u + 2 * c.root2 * c.root2
        root2 -= 2 * c.root2 * u
    return Surd(rational, root2)


def exact_distance_order(points, center: Sequence[Surd]) -> list[tuple[Surd, int]]:
    """Integer points sorted by exact Euclidean distance to ``center``."""
    import functools

    keyed = [(surd_sq_distance([int(round(c)) for c in p], center), i) for i, p in enumerate(points)]

    def cmp(a, b):
        s = (a[0] - b[0]).sign()
        return s if s else (a[1] > b[1]) - (a[1] < b[1])

    return sorted(keyed, key=functools.cmp_to_key(cmp))


def has_distinct_distances(points, center: Sequence[Surd]) -> bool:
    """True when no two of ``points`` are equidistant from ``center`` (exactly)."""
    ordered = exact_distance_order(points, center)
    return all((b[0] - a[0]).sign() != 0 for a, b in zip(ordered, ordered[1:]))
