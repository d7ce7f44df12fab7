"""Meshes of unit spheres and their plain-text renderings (CSV, SVG)."""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .norms import Custom3DParams, NormSpec, boundary_scale, norm_eval, surface_height

# edge frame -> plane: (s, t) |-> s * ALONG[k] + t * OUT[k]
_ALONG = {1: (1.0, 0.0), 2: (0.0, -1.0), 3: (-1.0, 0.0), 4: (0.0, 1.0)}
_OUT = {1: (0.0, 1.0), 2: (1.0, 0.0), 3: (0.0, -1.0), 4: (-1.0, 0.0)}


def triangle_mesh(params: Custom3DParams, triangles: Sequence[int], grid: int):
    """Upper boundary surface over the chosen triangles of the square.

    Triangle k is the cone over edge k.  Row i of its grid holds i + 1
    vertices at height t = i / grid, spread evenly across the cone.
    Returns ``(vertices, faces)``; vertices are deduplicated per triangle
    only, so seams appear twice.
    """
    if grid < 1:
        raise ValueError("grid must be >= 1")
    verts = []
    faces = []
    for k in triangles:
        if k not in _ALONG:
            raise ValueError(f"triangle index must be 1..4, got {k}")
        along, out = np.array(_ALONG[k]), np.array(_OUT[k])
        offset = len(verts)
        index = {}
        for i in range(grid + 1):
            t = i / grid
            for j in range(i + 1):
                e = -1.0 + 2.0 * j / i if i else 0.0
                xy = t * (e * along + out)
                index[i, j] = len(verts) - offset
                verts.append(xy)
        for i in range(grid):
            for j in range(i + 1):
                faces.append((offset + index[i, j], offset + index[i + 1, j], offset + index[i + 1, j + 1]))
                if j < i:
                    faces.append((offset + index[i, j], offset + index[i + 1, j + 1], offset + index[i, j + 1]))
    xy = np.array(verts)
    z = surface_height(params, xy[:, 0], xy[:, 1])
    return np.column_stack([xy, z]), np.array(faces, dtype=np.int64)


def sphere_polyline(spec: NormSpec, samples: int = 256) -> np.ndarray:
    """Closed polyline through the unit circle of a planar norm."""
    if spec.dim != 2:
        raise ValueError("sphere polylines are drawn for planar norms only")
    if spec.kind == "linf":
        return np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [1.0, 1.0]])
    theta = 2 * np.pi * np.arange(samples) / samples
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    pts = dirs * boundary_scale(spec, dirs)[:, None]
    return np.vstack([pts, pts[:1]])


def gauge_errors(spec: NormSpec, points) -> np.ndarray:
    return np.abs(norm_eval(spec, np.asarray(points)) - 1.0)


def _num(x: float) -> str:
    return format(float(x), ".17g")


def mesh_csv(vertices: np.ndarray, faces: np.ndarray) -> str:
    """Three consecutive ``x,y,z`` rows per triangle."""
    lines = ["x,y,z"]
    for face in faces:
        for v in face:
            lines.append(",".join(_num(c) for c in vertices[v]))
    return "\n".join(lines) + "\n"


def polyline_csv(points: np.ndarray) -> str:
    header = ",".join("xyz"[: points.shape[1]])
    return header + "\n" + "\n".join(",".join(_num(c) for c in p) for p in points) + "\n"


def _project(points: np.ndarray, azimuth: float, elevation: float) -> np.ndarray:
    a, e = math.radians(azimuth), math.radians(elevation)
    right = np.array([math.cos(a), math.sin(a), 0.0])
    up = np.array([-math.sin(e) * math.sin(a), math.sin(e) * math.cos(a), math.cos(e)])
    return np.column_stack([points @ right, points @ up])


def _svg(paths: Iterable[np.ndarray], size: int = 600, pad: float = 0.05) -> str:
    paths = list(paths)
    allpts = np.vstack(paths)
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    scale = size * (1 - 2 * pad) / span

    def xy(p):
        x = size * pad + (p[0] - lo[0]) * scale
        y = size * (1 - pad) - (p[1] - lo[1]) * scale
        return f"{x:.3f},{y:.3f}"

    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        '<g fill="none" stroke="black" stroke-width="0.5">',
    ]
    for path in paths:
        body.append(f'<polyline points="{" ".join(xy(p) for p in path)}"/>')
    body.append("</g>")
    body.append("</svg>")
    return "\n".join(body) + "\n"


def mesh_svg(vertices: np.ndarray, faces: np.ndarray, azimuth: float = -35.0,
             elevation: float = 60.0, size: int = 600) -> str:
    """Orthographic wireframe of a triangle mesh."""
    flat = _project(vertices, azimuth, elevation)
    return _svg((flat[list(f) + [f[0]]] for f in faces), size)


def polyline_svg(points: np.ndarray, size: int = 600) -> str:
    return _svg([points], size)
