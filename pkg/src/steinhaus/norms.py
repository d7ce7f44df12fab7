"""Norms on R^d: the l_p family, l_inf, and a custom 3-D gauge norm.

The custom norm is the Minkowski functional of a centrally symmetric body
whose equator is the square with vertices (+-1, +-1, 0).  Above each edge of
the square the boundary is swept by curves

    z = 1 - (t / sqrt(e^2 + 1)) ** alpha(e),    alpha(e) = beta(e) * sqrt(e^2 + 1)

running from the edge point with edge parameter ``e`` up to the apex
(0, 0, 1); ``t`` is the planar distance from the axis.  The lower half is the
reflection of the upper half through the origin.

All evaluators accept a single vector of shape ``(d,)`` or a batch of shape
``(N, d)``.  Batched evaluation is row-wise: the value computed for a row
never depends on the other rows in the batch.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

#: relative tolerance of the custom gauge (bisection stops below this width)
TAU_GAUGE = 1e-12

DEFAULT_BETA = (1.25, 1.75, 2.25, 1.75)

# corners of the equator square, clockwise from (-1, 1)
_CORNERS = ((-1.0, 1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, -1.0))


@dataclass(frozen=True)
class Custom3DParams:
    """Corner values of the edge-slope profile ``beta``.

    ``beta`` is linear in the edge parameter along each edge of the equator
    square.  Edges are numbered clockwise starting with the top edge
    (y = 1); edge ``k`` runs from corner ``k`` to corner ``k + 1`` and its
    parameter goes from -1 to 1.
    """

    beta: tuple[float, float, float, float] = DEFAULT_BETA

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        if len(beta) != 4:
            raise ValueError("need exactly four beta corner values")
        if not all(math.isfinite(b) and b > 1.0 for b in beta):
            # 1/sqrt(e^2+1) <= 1, so corners > 1 keep beta above it everywhere
            raise ValueError(f"beta corner values must be finite and > 1, got {beta}")
        for k in range(4):
            if beta[k] == beta[(k + 1) % 4]:
                raise ValueError(f"beta must be strictly monotone on edge {k + 1}")
        object.__setattr__(self, "beta", beta)

    def edge_beta(self, edge: int, s):
        """Linear interpolant of beta on ``edge`` (1..4) at parameter ``s``."""
        lo = self.beta[edge - 1]
        hi = self.beta[edge % 4]
        return lo + (hi - lo) * (np.asarray(s, dtype=float) + 1.0) / 2.0


@dataclass(frozen=True)
class NormSpec:
    """An immutable norm description.

    Use the constructors :meth:`lp`, :meth:`linf` and :meth:`custom3d`, or
    :func:`parse_norm` for the textual names used by files and the CLI.
    """

    kind: str
    dim: int
    p: Optional[float] = None
    params: Optional[Custom3DParams] = field(default=None)

    def __post_init__(self):
        if self.kind not in ("lp", "linf", "custom3d"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        if self.kind == "lp":
            if self.p is None or not math.isfinite(self.p) or self.p < 1:
                raise ValueError(f"l_p norms need a finite p >= 1, got {self.p}")
        if self.kind == "custom3d":
            if self.dim != 3:
                raise ValueError("the custom norm lives in dimension 3")
            if self.params is None:
                object.__setattr__(self, "params", Custom3DParams())

    @classmethod
    def lp(cls, p: float, dim: int) -> "NormSpec":
        return cls("lp", dim, p=float(p))

    @classmethod
    def linf(cls, dim: int) -> "NormSpec":
        return cls("linf", dim)

    @classmethod
    def custom3d(cls, params: Optional[Custom3DParams] = None) -> "NormSpec":
        return cls("custom3d", 3, params=params or Custom3DParams())

    @property
    def name(self) -> str:
        if self.kind == "lp":
            return f"l{self.p:g}"
        if self.kind == "linf":
            return "linf"
        if self.params.beta == DEFAULT_BETA:
            return "custom3d"
        return "custom3d:" + ",".join(repr(b) for b in self.params.beta)

    @property
    def outer_box(self) -> np.ndarray:
        """Half-widths b_j with the unit ball inside prod [-b_j, b_j]."""
        return np.ones(self.dim)

    @property
    def is_strictly_convex(self) -> bool:
        return self.kind == "lp" and self.p > 1

    def __call__(self, v):
        return norm_eval(self, v)


def parse_norm(name: str, dim: Optional[int] = None, beta=None) -> NormSpec:
    """Build a :class:`NormSpec` from ``l<p>``, ``linf`` or ``custom3d``.

    ``custom3d:b1,b2,b3,b4`` carries its own beta corners; ``beta`` overrides.
    """
    text = name.strip().lower()
    if text.startswith("custom3d"):
        if dim not in (None, 3):
            raise ValueError("custom3d is three-dimensional")
        corners = beta
        if corners is None and ":" in text:
            corners = [float(c) for c in text.split(":", 1)[1].split(",")]
        params = Custom3DParams(tuple(corners)) if corners is not None else Custom3DParams()
        return NormSpec.custom3d(params)
    if dim is None:
        raise ValueError(f"norm {name!r} needs a dimension")
    if text in ("linf", "l_inf", "inf"):
        return NormSpec.linf(dim)
    if text.startswith("l"):
        try:
            p = float(text[1:])
        except ValueError:
            raise ValueError(f"cannot parse norm name {name!r}") from None
        if math.isinf(p):
            return NormSpec.linf(dim)
        return NormSpec.lp(p, dim)
    raise ValueError(f"cannot parse norm name {name!r}")


def _as_vectors(spec: NormSpec, v) -> tuple[np.ndarray, bool]:
    arr = np.asarray(v, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != spec.dim:
        raise ValueError(f"expected vectors of dimension {spec.dim}, got shape {np.shape(v)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite coordinates")
    return arr, single


def _lp_cols(cols, p: float) -> np.ndarray:
    # per-axis accumulation: each row's value is independent of the batch
    if p == 2:
        acc = cols[0] * cols[0]
        for c in cols[1:]:
            acc += c * c
        return np.sqrt(acc)
    if p == 1:
        acc = np.abs(cols[0])
        for c in cols[1:]:
            acc += np.abs(c)
        return acc
    scale = _linf_cols(cols)
    safe = np.where(scale > 0, scale, 1.0)
    acc = (np.abs(cols[0]) / safe) ** p
    for c in cols[1:]:
        acc += (np.abs(c) / safe) ** p
    return scale * acc ** (1.0 / p)


def _linf_cols(cols) -> np.ndarray:
    acc = np.abs(cols[0])
    for c in cols[1:]:
        np.maximum(acc, np.abs(c), out=acc)
    return acc


def norm_columns(spec: NormSpec, cols) -> np.ndarray:
    """Norms of the vectors whose j-th coordinates are ``cols[j]``.

    No validation; this is the hot path behind ball counting.
    """
    if spec.kind == "linf":
        return _linf_cols(cols)
    if spec.kind == "lp":
        return _lp_cols(cols, spec.p)
    return _custom_norm_rows(spec.params, np.stack(cols, axis=1))


def norm_eval(spec: NormSpec, v):
    """The norm of ``v`` (a float for one vector, an array for a batch)."""
    arr, single = _as_vectors(spec, v)
    out = norm_columns(spec, list(arr.T))
    return float(out[0]) if single else out


def boundary_scale(spec: NormSpec, v):
    """The scalar ``lam > 0`` with ``||lam * v|| = 1``."""
    arr, single = _as_vectors(spec, v)
    if np.any(~arr.any(axis=1)):
        raise ValueError("the zero vector has no boundary scale")
    if spec.kind == "custom3d":
        out = _custom_scale_rows(spec.params, arr)
    else:
        out = 1.0 / norm_eval(spec, arr)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# custom 3-D surface


def _edge_coords(x: np.ndarray, y: np.ndarray):
    """Map planar points to (edge index, edge-frame abscissa, edge-frame height).

    The edge frame rotates the point so that its edge becomes the top edge
    y = 1 traversed left to right.  Points on the diagonals go to the lower
    edge index.
    """
    ax, ay = np.abs(x), np.abs(y)
    edge = np.where(
        y >= ax, 1, np.where(x >= ay, 2, np.where(-y >= ax, 3, 4))
    )
    s = np.select([edge == 1, edge == 2, edge == 3], [x, -y, -x], default=y)
    t = np.select([edge == 1, edge == 2, edge == 3], [y, x, -y], default=-x)
    return edge, s, t


def _edge_beta(params: Custom3DParams, edge: np.ndarray, e: np.ndarray) -> np.ndarray:
    b = np.asarray(params.beta)
    lo = b[edge - 1]
    hi = b[edge % 4]
    return lo + (hi - lo) * (e + 1.0) / 2.0


def _height(params: Custom3DParams, x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    edge, s, t = _edge_coords(x, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.where(t > 0, s / np.where(t > 0, t, 1.0), 0.0)
    e = np.clip(e, -1.0, 1.0)
    alpha = _edge_beta(params, edge, e) * np.sqrt(e * e + 1.0)
    return np.where(t > 0, 1.0 - t**alpha, 1.0)


def example_surface_height(x: float, y: float, params: Optional[Custom3DParams] = None) -> float:
    """Height of the upper boundary surface above ``(x, y)`` in [-1, 1]^2.

    Zero on the boundary of the square and one at the origin.
    """
    params = params or Custom3DParams()
    if not (math.isfinite(x) and math.isfinite(y)) or max(abs(x), abs(y)) > 1.0:
        raise ValueError(f"({x}, {y}) lies outside the square [-1, 1]^2")
    return float(_height(params, x, y))


def surface_height(params: Custom3DParams, x, y) -> np.ndarray:
    """Vectorised :func:`example_surface_height` without domain checks."""
    return _height(params, x, y)


def edge_tangent_slope(edge_index: int, s: float, params: Optional[Custom3DParams] = None) -> float:
    """Slope |z'| of the boundary curve where it leaves edge point ``s``.

    Along the ray through the edge point the curve has derivative
    ``-alpha / sqrt(s^2 + 1)``, whose modulus is ``beta(s)``.
    """
    params = params or Custom3DParams()
    if edge_index not in (1, 2, 3, 4):
        raise ValueError(f"edge index must be 1..4, got {edge_index}")
    if not -1.0 <= s <= 1.0:
        raise ValueError(f"edge parameter must lie in [-1, 1], got {s}")
    return float(params.edge_beta(edge_index, s))


def edge_point(edge_index: int, s: float) -> np.ndarray:
    """The equator point with parameter ``s`` on edge ``edge_index``."""
    (x0, y0), (x1, y1) = _CORNERS[edge_index - 1], _CORNERS[edge_index % 4]
    w = (s + 1.0) / 2.0
    return np.array([x0 + w * (x1 - x0), y0 + w * (y1 - y0), 0.0])


def _custom_scale_rows(params: Custom3DParams, arr: np.ndarray) -> np.ndarray:
    unit, m = _unit_scale_rows(params, arr)
    return unit / m


def _unit_scale_rows(params: Custom3DParams, arr: np.ndarray):
    """Boundary scales of the rows divided by their sup norms ``m``.

    Working at sup norm 1 keeps tiny and huge inputs from overflowing;
    returns ``(scales, m)``.
    """
    m = np.abs(arr).max(axis=1)
    arr = arr / m[:, None]
    # central symmetry: evaluate on the upper half
    flip = arr[:, 2] < 0
    v = np.where(flip[:, None], -arr, arr)
    x, y, z = v[:, 0], v[:, 1], v[:, 2]
    planar = np.maximum(np.abs(x), np.abs(y))
    # body sits between the octahedron conv{square, (0,0,+-1)} and the cube
    hi = 1.0 / np.maximum(planar, z)
    lo = 1.0 / (planar + z)
    on_axis = planar == 0
    out = np.empty(len(v))
    out[on_axis] = 1.0 / z[on_axis]
    idx = np.flatnonzero(~on_axis)
    if idx.size:
        out[idx] = _bisect_scale(params, x[idx], y[idx], z[idx], lo[idx], hi[idx])
    return out, m


def _bisect_scale(params, x, y, z, lo, hi):
    edge, s, t = _edge_coords(x, y)
    e = s / t
    alpha = _edge_beta(params, edge, e) * np.sqrt(e * e + 1.0)

    # lam * v is inside iff lam * z <= 1 - (lam * t) ** alpha
    def inside(lam):
        return lam * z + (lam * t) ** alpha <= 1.0

    lo = lo.copy()
    hi = hi.copy()
    # bracket endpoints can be off by rounding; widen until they straddle
    for _ in range(60):
        bad = ~inside(lo)
        if not bad.any():
            break
        lo[bad] *= 1.0 - 1e-9
    for _ in range(60):
        bad = inside(hi)
        if not bad.any():
            break
        hi[bad] *= 1.0 + 1e-9
    for _ in range(200):
        active = (hi - lo) > TAU_GAUGE * 0.25 * hi
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        ok = inside(mid)
        lo = np.where(active & ok, mid, lo)
        hi = np.where(active & ~ok, mid, hi)
    return 0.5 * (lo + hi)


def _custom_norm_rows(params: Custom3DParams, arr: np.ndarray) -> np.ndarray:
    out = np.zeros(len(arr))
    nz = arr.any(axis=1)
    if nz.any():
        unit, m = _unit_scale_rows(params, arr[nz])
        out[nz] = m / unit
    return out


def in_custom_body(params: Custom3DParams, points) -> np.ndarray:
    """Closed-body membership predicate for the custom unit ball."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    flip = p[:, 2] < 0
    p = np.where(flip[:, None], -p, p)
    in_square = np.maximum(np.abs(p[:, 0]), np.abs(p[:, 1])) <= 1.0
    xy = np.clip(p[:, :2], -1.0, 1.0)
    return in_square & (p[:, 2] <= _height(params, xy[:, 0], xy[:, 1]))


# ---------------------------------------------------------------------------


def sample_unit_sphere(spec: NormSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` random unit vectors (gauge-normalised Gaussian directions)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out = np.empty((count, spec.dim))
    filled = 0
    while filled < count:
        g = rng.standard_normal((count - filled, spec.dim))
        g = g[g.any(axis=1)]
        out[filled : filled + len(g)] = g
        filled += len(g)
    return out * boundary_scale(spec, out)[:, None]


def pyramid_gauge(v):
    """``max(|x|, |y|) + |z|``, the gauge of a double pyramid inside the custom ball.

    Heights on the custom surface are ``1 - t**alpha >= 1 - t`` with
    ``t = max(|x|, |y|)``, since ``alpha >= 1``.  The pyramid is convex, so
    this gauge dominates the custom one and obeys the triangle inequality.
    """
    v = np.asarray(v, dtype=float)
    return np.maximum(np.abs(v[..., 0]), np.abs(v[..., 1])) + np.abs(v[..., 2])


def convex_gauge(spec: NormSpec, v):
    """``spec`` itself when its ball is convex, else a convex gauge above it."""
    if spec.kind == "custom3d":
        return pyramid_gauge(v)
    return norm_eval(spec, v)


def box_corner_bound(inner: NormSpec, outer: NormSpec) -> float:
    """A constant K with ``convex_gauge(outer, v) <= K * inner(v)`` for every v.

    The inner unit ball lies in the inner outer-box, whose corners bound
    the convex gauge on it.
    """
    if inner == outer and outer.kind != "custom3d":
        return 1.0
    b = inner.outer_box
    corners = np.array(list(itertools.product(*[(-bj, bj) for bj in b])))
    return float(np.max(convex_gauge(outer, corners)))
