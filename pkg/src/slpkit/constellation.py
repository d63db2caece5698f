"""2-D constellations and their decision-region geometry.

A constellation is an ordered set of points in the real plane with unit
average power.  This module generates the standard families (PSK, QAM,
PAM), loads user-supplied sets from JSON, and computes the geometric
objects everything downstream depends on: Voronoi (ML decision) regions
as halfspace systems and the convex-hull classification of the points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Tolerances shared across the geometry code.
DISTINCT_TOL = 1e-9      # minimum pairwise distance between points
POWER_TOL = 1e-9         # unit-average-power check
HULL_TOL = 1e-9          # inclusive hull-membership tolerance
FACET_TOL = 1e-9         # Voronoi facets shorter than this are not facets
COLLINEAR_TOL = 1e-9


class ConstellationError(ValueError):
    """Raised for malformed constellation definitions or files."""


@dataclass(frozen=True)
class Constellation:
    """Ordered set of 2-D points with unit average power."""

    points: np.ndarray   # shape (M, 2)
    name: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ConstellationError(f"points must be (M, 2), got {pts.shape}")
        if pts.shape[0] < 2:
            raise ConstellationError("a constellation needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ConstellationError("constellation points must be finite")
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        np.fill_diagonal(dist, np.inf)
        if dist.min() <= DISTINCT_TOL:
            raise ConstellationError("constellation points must be distinct")
        avg_power = float(np.mean(np.sum(pts**2, axis=1)))
        if abs(avg_power - 1.0) > POWER_TOL:
            raise ConstellationError(
                f"average power must be 1, got {avg_power:.12g}"
            )
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def complex_points(self) -> np.ndarray:
        return self.points[:, 0] + 1j * self.points[:, 1]

    @property
    def is_one_dimensional(self) -> bool:
        """True when all points are collinear (PAM-like sets)."""
        pts = self.points - self.points.mean(axis=0)
        # second singular value ~ 0 for collinear sets
        s = np.linalg.svd(pts, compute_uv=False)
        return bool(s[1] <= COLLINEAR_TOL * max(1.0, s[0]))

    def nearest_index(self, x) -> int:
        """Index of the closest point; ties go to the lowest index."""
        x = np.asarray(x, dtype=float)
        d2 = np.sum((self.points - x) ** 2, axis=1)
        return int(np.argmin(d2))


@dataclass(frozen=True)
class VoronoiRegion:
    """Halfspace system A x >= b of one point's ML decision region.

    Row j is a_{i,j} = x_i - x_j for the j-th neighbor, never rescaled,
    with offset b_{i,j} = a_{i,j}^T (x_i + x_j) / 2.
    """

    owner: int
    neighbor_indices: tuple
    A: np.ndarray        # (M_i, 2)
    b: np.ndarray        # (M_i,)
    unbounded: bool

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.A @ x >= self.b - tol))


@dataclass(frozen=True)
class HullClassification:
    boundary_indices: frozenset
    interior_indices: frozenset
    contains_origin: bool
    is_one_dimensional: bool = False


def make_standard(kind: str, order: int, name: str | None = None) -> Constellation:
    """Build a standard PSK / QAM / PAM constellation with unit average power.

    PSK points run counterclockwise starting from angle 0 (QPSK uses the
    conventional pi/4 offset so its points sit at (+-1, +-1)/sqrt(2)).
    QAM points are listed row-major from the top-left of the grid, PAM in
    ascending order on the real axis.
    """
    if order < 2:
        raise ConstellationError(f"order must be >= 2, got {order}")
    kind = kind.lower()
    if kind == "psk":
        offset = np.pi / 4 if order == 4 else 0.0
        angles = 2 * np.pi * np.arange(order) / order + offset
        pts = np.column_stack([np.cos(angles), np.sin(angles)])
    elif kind == "qam":
        m = int(round(np.sqrt(order)))
        if m * m != order:
            raise ConstellationError(f"QAM order must be a perfect square, got {order}")
        levels = np.arange(-(m - 1), m, 2, dtype=float)
        scale = np.sqrt(2.0 * (order - 1) / 3.0)
        rows = []
        for im in levels[::-1]:
            for re in levels:
                rows.append((re / scale, im / scale))
        pts = np.array(rows)
    elif kind == "pam":
        levels = np.arange(-(order - 1), order, 2, dtype=float)
        scale = np.sqrt((order**2 - 1) / 3.0)
        pts = np.column_stack([levels / scale, np.zeros(order)])
    else:
        raise ConstellationError(f"unknown constellation kind {kind!r}")
    return Constellation(pts, name or f"{order}-{kind.upper()}")


def load_constellation(file) -> Constellation:
    """Load a constellation from the JSON schema
    ``{"name": str, "normalize": bool, "points": [[re, im], ...]}``.
    """
    path = Path(file)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConstellationError(f"cannot read constellation file {path}: {exc}") from exc
    if not isinstance(raw, dict) or "points" not in raw:
        raise ConstellationError(f"{path}: missing 'points' field")
    pts = np.asarray(raw["points"], dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ConstellationError(f"{path}: points must be a list of [re, im] pairs, M >= 2")
    if raw.get("normalize", False):
        avg = np.mean(np.sum(pts**2, axis=1))
        if avg <= 0:
            raise ConstellationError(f"{path}: cannot normalize all-zero points")
        pts = pts / np.sqrt(avg)
    return Constellation(pts, str(raw.get("name", path.stem)))


def save_constellation(c: Constellation, file, normalize: bool = False) -> None:
    payload = {
        "name": c.name,
        "normalize": bool(normalize),
        "points": [[float(p[0]), float(p[1])] for p in c.points],
    }
    Path(file).write_text(json.dumps(payload, indent=2), encoding="utf-8")


def bundled_constellation(name: str) -> Constellation:
    """Load a constellation shipped with the package (e.g. ``opt8``)."""
    path = Path(__file__).parent / "data" / f"{name}.json"
    if not path.exists():
        raise ConstellationError(f"no bundled constellation named {name!r}")
    return load_constellation(path)


def _facet_interval(pts: np.ndarray, i: int, j: int):
    """Parameter interval of the Voronoi facet between points i and j.

    The facet lives on the bisector, parameterized as p0 + s*t with p0 the
    midpoint and t a unit vector along the bisector.  Every other point k
    clips the interval through its own bisector halfspace.  Returns
    (lo, hi); an empty or degenerate facet has hi - lo <= 0.
    """
    xi, xj = pts[i], pts[j]
    a = xi - xj
    p0 = (xi + xj) / 2.0
    t = np.array([-a[1], a[0]])
    t = t / np.linalg.norm(t)
    lo, hi = -np.inf, np.inf
    for k in range(len(pts)):
        if k == i or k == j:
            continue
        ak = xi - pts[k]
        bk = ak @ (xi + pts[k]) / 2.0
        coef = ak @ t
        rhs = bk - ak @ p0
        if abs(coef) <= 1e-14:
            if rhs > 0:
                return 0.0, 0.0   # halfspace excludes the whole bisector
            continue
        bound = rhs / coef
        if coef > 0:
            lo = max(lo, bound)
        else:
            hi = min(hi, bound)
    return lo, hi


def voronoi_region(c: Constellation, i: int) -> VoronoiRegion:
    """Voronoi region of point i as the halfspace system over its true
    neighbors (points sharing a facet of positive length)."""
    pts = c.points
    if not 0 <= i < c.size:
        raise IndexError(f"point index {i} out of range for M={c.size}")
    neighbors = []
    unbounded = False
    for j in range(c.size):
        if j == i:
            continue
        lo, hi = _facet_interval(pts, i, j)
        if hi - lo > FACET_TOL:
            neighbors.append(j)
            if np.isinf(hi) or np.isinf(lo):
                unbounded = True
    A = pts[i] - pts[neighbors]
    b = np.einsum("nd,nd->n", A, (pts[i] + pts[neighbors]) / 2.0)
    return VoronoiRegion(
        owner=i,
        neighbor_indices=tuple(neighbors),
        A=A,
        b=b,
        unbounded=unbounded,
    )


def classify_hull(c: Constellation) -> HullClassification:
    """Split indices into hull-boundary and interior sets and test whether
    the convex hull contains the origin (inclusive within HULL_TOL)."""
    pts = c.points
    if c.is_one_dimensional:
        # Hull degenerates to a segment; every point lies on it.
        centered = pts - pts.mean(axis=0)
        _, _, vt = np.linalg.svd(centered)
        d, n = vt[0], vt[1]
        proj = pts @ d
        lo, hi = proj.min(), proj.max()
        # Origin is on the segment iff its perpendicular distance to the
        # supporting line is ~0 and its projection falls inside the range.
        perp = abs(pts[0] @ n)
        on_segment = perp <= HULL_TOL and lo - HULL_TOL <= 0.0 <= hi + HULL_TOL
        return HullClassification(
            boundary_indices=frozenset(range(c.size)),
            interior_indices=frozenset(),
            contains_origin=bool(on_segment),
            is_one_dimensional=True,
        )

    from scipy.spatial import ConvexHull

    hull = ConvexHull(pts)
    # equations rows are (normal, offset) with normal.x + offset <= 0 inside
    normals = hull.equations[:, :2]
    offsets = hull.equations[:, 2]
    margins = pts @ normals.T + offsets       # (M, n_facets), <= 0 inside
    on_boundary = np.max(margins, axis=1) >= -HULL_TOL
    boundary = frozenset(int(k) for k in np.nonzero(on_boundary)[0])
    interior = frozenset(range(c.size)) - boundary
    contains_origin = bool(np.max(offsets) <= HULL_TOL)
    return HullClassification(
        boundary_indices=boundary,
        interior_indices=interior,
        contains_origin=contains_origin,
        is_one_dimensional=False,
    )
