"""Walk through the region geometry for a few constellations.

Builds the distance-preserving regions of 8-PSK and a shifted variant,
prints their halfspace systems, and demonstrates the norm property: with
the origin inside the convex hull every region point is at least as far
from the origin as its constellation point; shift the constellation so the
origin falls outside and the property breaks.
"""
import numpy as np

from slpkit import (
    Constellation,
    build_dpcir,
    classify_hull,
    make_standard,
    point_of_delta,
    reduce_dpcir,
    region_summary,
)


def show(c):
    hull = classify_hull(c)
    print(f"\n=== {c.name}: {c.size} points, origin in hull: "
          f"{hull.contains_origin} ===")
    for i in range(c.size):
        d = build_dpcir(c, i)
        r = reduce_dpcir(d)
        print(f"point {i} {np.round(c.points[i], 3)}: {d.kind}, "
              f"{len(d.b)} halfspaces, {sum(s >= 0 for s in r.source_rows)} kept")
    # sample each boundary point's region along its two slacks and track
    # how much closer to the origin a region point can get than its owner
    rng = np.random.default_rng(0)
    worst, where = np.inf, None
    for i in sorted(hull.boundary_indices):
        r = reduce_dpcir(build_dpcir(c, i))
        for _ in range(2000):
            x = point_of_delta(r, rng.uniform(0.0, 3.0, size=2))
            gap = np.linalg.norm(x) - np.linalg.norm(c.points[i])
            if gap < worst:
                worst, where = gap, i
    print(f"min over sampled regions of (|x| - |x_i|) = {worst:.4f} "
          f"(at point {where})")


psk = make_standard("psk", 8)
show(psk)
print("\nregion 0 as JSON-ready summary:")
print(region_summary(psk, 0))

shifted = psk.points + np.array([2.0, 0.0])
shifted = Constellation(
    shifted / np.sqrt(np.mean(np.sum(shifted**2, axis=1))), "shifted-8psk")
show(shifted)
print("\nnegative minimum above = some region points are closer to the "
      "origin than their constellation point: the norm guarantee needs the "
      "origin inside the hull.")
