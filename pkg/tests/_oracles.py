"""Closed-form and geometric oracles shared by the test modules.

Everything here is derived independently of the library code so the tests
compare two implementations that cannot share a bug: the double-integrator
minimum-time formula comes from the bang-bang two-arc solution, and the
set-distance helpers are plain numpy.
"""

from functools import lru_cache

import numpy as np


# -- double integrator minimum time -------------------------------------------
#
# x1' = x2, x2' = u, |u| <= u_max.  The time-optimal transfer between two
# states uses at most one switch.  Accelerating first through switch
# velocity vs:
#   vs^2 = u_max*(z1 - x1) + (x2^2 + z2^2)/2,   T = (2 vs - x2 - z2)/u_max
# where vs is the smallest root (either sign) with vs >= max(x2, z2);
# decelerating first is the mirror image: vs the largest root with
# vs <= min(x2, z2) and T = (x2 + z2 - 2 vs)/u_max.  The negative-root
# branch covers single-arc approaches (both velocities on the same side).

def di_min_time(x1, x2, z1, z2, u_max=1.0):
    """Minimum transfer time from (x1, x2) to (z1, z2); broadcasts."""
    x1, x2, z1, z2 = np.broadcast_arrays(
        np.asarray(x1, dtype=float), np.asarray(x2, dtype=float),
        np.asarray(z1, dtype=float), np.asarray(z2, dtype=float))
    half = 0.5 * (x2 * x2 + z2 * z2)
    delta = z1 - x1
    ra = u_max * delta + half
    rb = -u_max * delta + half
    top = np.maximum(x2, z2)
    bot = np.minimum(x2, z2)
    tol = 1e-9
    va = np.sqrt(np.maximum(ra, 0.0))
    vs_a = np.where(-va >= top - tol, -va, va)
    ta = np.where((ra >= -1e-12) & (vs_a >= top - tol),
                  (2.0 * vs_a - x2 - z2) / u_max, np.inf)
    vb = np.sqrt(np.maximum(rb, 0.0))
    vs_b = np.where(vb <= bot + tol, vb, -vb)
    tb = np.where((rb >= -1e-12) & (vs_b <= bot + tol),
                  (x2 + z2 - 2.0 * vs_b) / u_max, np.inf)
    return np.maximum(np.minimum(ta, tb), 0.0)


def box_boundary_samples(center, half_widths, per_edge=600):
    """Points on the edge of an axis-aligned box, (4*per_edge, 2)."""
    cx, cy = float(center[0]), float(center[1])
    hx, hy = float(half_widths[0]), float(half_widths[1])
    t = np.linspace(-1.0, 1.0, per_edge, endpoint=False)
    edges = [
        np.column_stack([cx + hx * t, np.full(per_edge, cy + hy)]),
        np.column_stack([cx + hx * t, np.full(per_edge, cy - hy)]),
        np.column_stack([np.full(per_edge, cx + hx), cy + hy * t]),
        np.column_stack([np.full(per_edge, cx - hx), cy + hy * t]),
    ]
    return np.vstack(edges)


def di_min_time_to_points(points, targets, u_max=1.0, chunk=512):
    """Min over target points of the transfer time, for each query point."""
    points = np.asarray(points, dtype=float)
    targets = np.asarray(targets, dtype=float)
    out = np.empty(len(points))
    for lo in range(0, len(points), chunk):
        sl = slice(lo, lo + chunk)
        t = di_min_time(points[sl, 0, None], points[sl, 1, None],
                        targets[None, :, 0], targets[None, :, 1], u_max)
        out[sl] = t.min(axis=1)
    return out


def di_min_time_to_box(grid_axes, center, half_widths, u_max=1.0, per_edge=600):
    """Minimum time from every grid node to an axis-aligned box target.

    Nodes already inside the box get time 0.  Returns an array shaped like
    the grid (len(x1_axis), len(x2_axis)).
    """
    x1, x2 = grid_axes
    x1g, x2g = np.meshgrid(x1, x2, indexing="ij")
    pts = np.column_stack([x1g.ravel(), x2g.ravel()])
    boundary = box_boundary_samples(center, half_widths, per_edge)
    times = di_min_time_to_points(pts, boundary, u_max).reshape(x1g.shape)
    inside = ((np.abs(x1g - center[0]) <= half_widths[0])
              & (np.abs(x2g - center[1]) <= half_widths[1]))
    return np.where(inside, 0.0, times)


@lru_cache(maxsize=4)
def di_box_brs_reference(horizon_time, half_width=0.5, extent=2.0, n=401, per_edge=300):
    """High-resolution analytic BRS boundary for the square-target double
    integrator: the {min-time == horizon_time} contour, cached per session."""
    axes = (np.linspace(-extent, extent, n), np.linspace(-extent, extent, n))
    mt = di_min_time_to_box(axes, (0.0, 0.0), (half_width, half_width),
                            per_edge=per_edge)
    return contour_points(axes, mt, level=horizon_time)


# -- boolean-mask geometry -----------------------------------------------------

def flip_band(mask):
    """Nodes adjacent (4-neighborhood) to a node with the opposite value."""
    band = np.zeros(mask.shape, dtype=bool)
    d0 = mask[1:, :] != mask[:-1, :]
    band[1:, :] |= d0
    band[:-1, :] |= d0
    d1 = mask[:, 1:] != mask[:, :-1]
    band[:, 1:] |= d1
    band[:, :-1] |= d1
    return band


def dilate(mask, iterations=1):
    """Grow a boolean mask by one node in all 8 directions, `iterations` times."""
    m = mask.copy()
    for _ in range(iterations):
        grown = m.copy()
        grown[1:, :] |= m[:-1, :]
        grown[:-1, :] |= m[1:, :]
        grown[:, 1:] |= m[:, :-1]
        grown[:, :-1] |= m[:, 1:]
        grown[1:, 1:] |= m[:-1, :-1]
        grown[1:, :-1] |= m[:-1, 1:]
        grown[:-1, 1:] |= m[1:, :-1]
        grown[:-1, :-1] |= m[1:, 1:]
        m = grown
    return m


def contour_points(grid_axes, values, level=0.0):
    """Zero-crossing points of `values - level` along grid edges, (k, 2).

    Linear interpolation along each axis-aligned edge whose endpoints
    straddle the level; sub-cell accurate for smooth fields.
    """
    x1, x2 = np.asarray(grid_axes[0], dtype=float), np.asarray(grid_axes[1], dtype=float)
    v = np.asarray(values, dtype=float) - level
    pieces = []
    cross = v[:-1, :] * v[1:, :] < 0.0
    i, j = np.nonzero(cross)
    if i.size:
        frac = v[i, j] / (v[i, j] - v[i + 1, j])
        pieces.append(np.column_stack([x1[i] + frac * (x1[i + 1] - x1[i]), x2[j]]))
    cross = v[:, :-1] * v[:, 1:] < 0.0
    i, j = np.nonzero(cross)
    if i.size:
        frac = v[i, j] / (v[i, j] - v[i, j + 1])
        pieces.append(np.column_stack([x1[i], x2[j] + frac * (x2[j + 1] - x2[j])]))
    i, j = np.nonzero(v == 0.0)
    if i.size:
        pieces.append(np.column_stack([x1[i], x2[j]]))
    if not pieces:
        return np.empty((0, 2))
    return np.vstack(pieces)


def hausdorff(a, b, chunk=1024):
    """Symmetric Hausdorff distance between two (k, 2) point sets."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("hausdorff needs nonempty point sets")

    def directed(p, q):
        worst = 0.0
        for lo in range(0, len(p), chunk):
            d = np.hypot(p[lo:lo + chunk, None, 0] - q[None, :, 0],
                         p[lo:lo + chunk, None, 1] - q[None, :, 1])
            worst = max(worst, float(d.min(axis=1).max()))
        return worst

    return max(directed(a, b), directed(b, a))
