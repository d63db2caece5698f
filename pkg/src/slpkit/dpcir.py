"""Distance-preserving constructive interference regions (DPCIRs).

Each constellation point's DPCIR is its Voronoi halfspace system shifted
inward so that any admitted received signal keeps at least the original
distance to every other constellation point.  Boundary points get an
unbounded region spanned by at most two nonnegative displacement
parameters along the infinite Voronoi edges; interior points collapse to
the point itself.  ``reduce_dpcir`` removes redundant hyperplanes and
produces the invertible 2x2 parameterization used by the precoders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import Constellation, classify_hull, voronoi_region

SINGLETON = "singleton"
POLYHEDRAL_ANGLE = "polyhedral_angle"
HALF_LINE = "half_line"
PAM_LINE = "pam_line"

# Per-row sign constraint on the displacement coordinate.
NONNEG = "nonneg"   # delta >= 0, spans the region
ZERO = "zero"       # delta pinned to 0
FREE = "free"       # delta unconstrained (PAM virtual rows)

_PARALLEL_TOL = 1e-9
_DET_TOL = 1e-12


@dataclass(frozen=True)
class Dpcir:
    """Full halfspace system A x >= b + c of one point's DPCIR."""

    owner: int
    neighbor_indices: tuple
    A: np.ndarray      # (M_i, 2)
    b: np.ndarray      # (M_i,)
    c: np.ndarray      # (M_i,), c_j = d_{i,j}^2 / 2 since rows are never rescaled
    kind: str
    vertex: np.ndarray  # x_i

    def contains(self, x, scale: float = 1.0, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.A @ x >= scale * (self.b + self.c) - tol))


@dataclass(frozen=True)
class ReducedDpcir:
    """Two-row form A2 x = scale*offset + delta with invertible A2.

    ``row_constraints`` gives the sign rule for each delta coordinate and
    ``virtual_row`` marks the synthetic hyperplane added for half-line and
    PAM regions (None when both rows are real Voronoi-derived rows).
    """

    owner: int
    A2: np.ndarray          # (2, 2), invertible
    offset: np.ndarray      # (2,), rows of b + c (virtual rows: a_v . x_i)
    kind: str
    row_constraints: tuple  # pair of NONNEG / ZERO / FREE
    virtual_row: int | None
    vertex: np.ndarray
    source_rows: tuple      # indices into the Dpcir rows (-1 for virtual)

    def contains(self, x, scale: float = 1.0, tol: float = 1e-9) -> bool:
        """Membership in the region the two rows describe, honoring each
        row's sign constraint (FREE rows impose nothing)."""
        delta = delta_of_point(self, x, scale)
        for d, rule in zip(delta, self.row_constraints):
            if rule == NONNEG and d < -tol:
                return False
            if rule == ZERO and abs(d) > tol:
                return False
        return True

    @property
    def spanning_rows(self) -> tuple:
        """Indices (0/1) of rows whose delta actually spans the region."""
        return tuple(r for r, rule in enumerate(self.row_constraints)
                     if rule != ZERO)


def point_of_delta(r: ReducedDpcir, delta, scale: float = 1.0) -> np.ndarray:
    """Map displacement coordinates to the plane: A2^{-1}(scale*offset + delta)."""
    delta = np.asarray(delta, dtype=float)
    return np.linalg.solve(r.A2, scale * r.offset + delta)


def delta_of_point(r: ReducedDpcir, x, scale: float = 1.0) -> np.ndarray:
    """Inverse of :func:`point_of_delta`; negative components are returned
    as-is, the caller decides on membership."""
    x = np.asarray(x, dtype=float)
    return r.A2 @ x - scale * r.offset


def build_dpcir(c: Constellation, i: int) -> Dpcir:
    """Shift each Voronoi halfspace of point i inward by the
    distance-preserving margin and classify the region's shape."""
    region = voronoi_region(c, i)
    xi = c.points[i]
    A, b = region.A, region.b
    # c_{i,j} = d_{i,j} ||a_{i,j}|| / 2 = d^2/2 because a = x_i - x_j exactly
    cvec = 0.5 * np.sum(A**2, axis=1)
    if not region.unbounded:
        kind = SINGLETON
    elif c.is_one_dimensional:
        kind = PAM_LINE
    elif _has_antiparallel_pair(A):
        kind = HALF_LINE
    else:
        kind = POLYHEDRAL_ANGLE
    return Dpcir(
        owner=i,
        neighbor_indices=region.neighbor_indices,
        A=A,
        b=b,
        c=cvec,
        kind=kind,
        vertex=xi.copy(),
    )


def _has_antiparallel_pair(A: np.ndarray) -> bool:
    for j in range(len(A)):
        for k in range(j + 1, len(A)):
            cross = A[j, 0] * A[k, 1] - A[j, 1] * A[k, 0]
            norms = np.linalg.norm(A[j]) * np.linalg.norm(A[k])
            if abs(cross) < _PARALLEL_TOL * norms and A[j] @ A[k] < 0:
                return True
    return False


def _antiparallel_pair(A: np.ndarray):
    for j in range(len(A)):
        for k in range(j + 1, len(A)):
            cross = A[j, 0] * A[k, 1] - A[j, 1] * A[k, 0]
            norms = np.linalg.norm(A[j]) * np.linalg.norm(A[k])
            if abs(cross) < _PARALLEL_TOL * norms and A[j] @ A[k] < 0:
                return j, k
    raise ValueError("no antiparallel row pair")


def _cone_facet_rows(A: np.ndarray) -> list:
    """Rows of the cone {v : A v >= 0} that carry a facet of positive length.

    All DPCIR hyperplanes pass through the vertex, so redundancy reduces to
    a sign analysis along each row's tangent direction.
    """
    kept = []
    for r in range(len(A)):
        t = np.array([-A[r, 1], A[r, 0]])
        t = t / np.linalg.norm(t)
        lo, hi = -np.inf, np.inf
        feasible = True
        for k in range(len(A)):
            if k == r:
                continue
            coef = A[k] @ t
            if abs(coef) <= _PARALLEL_TOL * np.linalg.norm(A[k]):
                continue
            if coef > 0:
                lo = max(lo, 0.0)
            else:
                hi = min(hi, 0.0)
            if lo > hi:
                feasible = False
                break
        if feasible and hi - lo > 0:
            kept.append(r)
    return kept


def _unit_perp(a: np.ndarray) -> np.ndarray:
    v = np.array([-a[1], a[0]]) / np.linalg.norm(a)
    # deterministic sign: make the largest-magnitude component positive
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


def reduce_dpcir(d: Dpcir) -> ReducedDpcir:
    """Reduce a DPCIR to the two-parameter form of an invertible 2x2 system."""
    offset_full = d.b + d.c
    if d.kind == SINGLETON:
        # pick the best-conditioned row pair; both deltas pinned to 0
        best, best_cross = None, 0.0
        for j in range(len(d.A)):
            for k in range(j + 1, len(d.A)):
                cross = abs(d.A[j, 0] * d.A[k, 1] - d.A[j, 1] * d.A[k, 0])
                if cross > best_cross:
                    best, best_cross = (j, k), cross
        if best is None or best_cross <= _DET_TOL:
            raise ValueError("degenerate singleton region")
        j, k = best
        return ReducedDpcir(
            owner=d.owner,
            A2=d.A[[j, k]].copy(),
            offset=offset_full[[j, k]].copy(),
            kind=SINGLETON,
            row_constraints=(ZERO, ZERO),
            virtual_row=None,
            vertex=d.vertex,
            source_rows=(j, k),
        )

    if d.kind == POLYHEDRAL_ANGLE:
        kept = _cone_facet_rows(d.A)
        if len(kept) != 2:
            raise ValueError(
                f"expected 2 facet rows for a polyhedral angle, got {len(kept)}"
            )
        j, k = kept
        A2 = d.A[[j, k]]
        if abs(np.linalg.det(A2)) <= _DET_TOL:
            raise ValueError("polyhedral angle rows are degenerate")
        return ReducedDpcir(
            owner=d.owner,
            A2=A2.copy(),
            offset=offset_full[[j, k]].copy(),
            kind=POLYHEDRAL_ANGLE,
            row_constraints=(NONNEG, NONNEG),
            virtual_row=None,
            vertex=d.vertex,
            source_rows=(j, k),
        )

    if d.kind == HALF_LINE:
        j, k = _antiparallel_pair(d.A)
        pinned = d.A[j]
        # recession direction of the half-line: perpendicular to the pinned
        # normal, pointing where every halfspace is satisfied
        v = _unit_perp(pinned)
        if not np.all(d.A @ v >= -1e-9):
            v = -v
        if not np.all(d.A @ v >= -1e-9):
            raise ValueError("half-line region has no recession direction")
        A2 = np.vstack([pinned, v])
        return ReducedDpcir(
            owner=d.owner,
            A2=A2,
            offset=np.array([offset_full[j], v @ d.vertex]),
            kind=HALF_LINE,
            row_constraints=(ZERO, NONNEG),
            virtual_row=1,
            vertex=d.vertex,
            source_rows=(j, -1),
        )

    if d.kind == PAM_LINE:
        if len(d.A) == 1:
            # outer symbol: one real spanning row plus a free virtual row
            a = d.A[0]
            v = _unit_perp(a)
            A2 = np.vstack([a, v])
            return ReducedDpcir(
                owner=d.owner,
                A2=A2,
                offset=np.array([offset_full[0], v @ d.vertex]),
                kind=PAM_LINE,
                row_constraints=(NONNEG, FREE),
                virtual_row=1,
                vertex=d.vertex,
                source_rows=(0, -1),
            )
        # inner symbol: opposing rows pin the real axis; the free virtual
        # coordinate spans the line
        a = d.A[0]
        v = _unit_perp(a)
        A2 = np.vstack([a, v])
        return ReducedDpcir(
            owner=d.owner,
            A2=A2,
            offset=np.array([offset_full[0], v @ d.vertex]),
            kind=PAM_LINE,
            row_constraints=(ZERO, FREE),
            virtual_row=1,
            vertex=d.vertex,
            source_rows=(0, -1),
        )

    raise ValueError(f"unknown DPCIR kind {d.kind!r}")


def build_reduced(c: Constellation, i: int) -> ReducedDpcir:
    """Convenience: build and reduce in one step."""
    return reduce_dpcir(build_dpcir(c, i))


def all_dpcirs(c: Constellation) -> list:
    return [build_dpcir(c, i) for i in range(c.size)]


def region_summary(c: Constellation, i: int) -> dict:
    """JSON-ready description of a point's DPCIR and its reduced form."""
    d = build_dpcir(c, i)
    r = reduce_dpcir(d)
    hull = classify_hull(c)
    return {
        "owner": i,
        "kind": d.kind,
        "on_hull_boundary": i in hull.boundary_indices,
        "rows": [
            {"a": [float(a) for a in d.A[j]], "b": float(d.b[j]), "c": float(d.c[j])}
            for j in range(len(d.A))
        ],
        "reduced": {
            "A2": [[float(v) for v in row] for row in r.A2],
            "offset": [float(v) for v in r.offset],
            "row_constraints": list(r.row_constraints),
            "virtual_row": r.virtual_row,
        },
    }
