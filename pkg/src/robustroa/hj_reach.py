"""Hamilton-Jacobi reachability on 2-D grids.

Sets are carried implicitly: a target T = {x : l(x) <= 0} with l a signed
distance (box) or quadratic gap (ellipse), and a value function V whose
zero sublevel set is the computed set.  Starting from V(x, 0) = l(x) the
solver integrates

    dV/dt + H*(x, grad V) = 0,
    H* = min-player over u, max-player over w of  grad V . f(x, u, w)

backward from t = 0 with a Lax-Friedrichs monotone scheme (central
gradients plus dissipation alpha_i * (D+_i - D-_i) / 2 per axis, one-sided
linear extrapolation at the grid edge) and two-stage TVD Runge-Kutta in
time.  Which player extremizes which way is a mode switch; the default
has the control shrinking V (reaching / staying) and the disturbance
opposing it.

Two set-propagation flavours, selected by `freeze`:

* "reach": after every step V <- min(V_new, V_old).  {V <= 0} at time t0
  is the backward reach set: states that can hit T at some time in
  [t0, 0] despite the disturbance.
* "stay": after every step V <- max(V_new, l).  As the horizon grows
  {V <= 0} shrinks to the largest subset of T the control can render
  invariant despite the disturbance - the safe set used to size
  certified regions of attraction.

Dynamics must be affine in each control / disturbance channel, with box
bounds per channel, so every pointwise extremum is bang-bang.  An
additional scalar uncertainty that enters non-affinely (such as an
unknown added mass) is handled by evaluating the Hamiltonian at the
interval endpoints and giving the extremum to the disturbance player;
this is exact when the dependence is monotone, which holds for a
1/(m + dm) factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class CflViolation(Exception):
    """Requested time step exceeds the Lax-Friedrichs stability bound."""


class TargetOutsideGrid(Exception):
    """No interior grid node lies inside the target set."""


class GridMismatch(Exception):
    """Two gridded quantities live on different grids."""


class QuantifierOrder(Enum):
    """Which player drives the value down.

    CONTROL_MIN: control minimizes V (works toward the target / stays
    inside), disturbance maximizes.  This is the usual robust-reachability
    order and the default everywhere.
    CONTROL_MAX: the roles swapped.
    """

    CONTROL_MIN = "control_min"
    CONTROL_MAX = "control_max"


@dataclass(frozen=True)
class Grid2:
    """Uniform rectangular grid, axis 0 = first state, axis 1 = second."""

    mins: tuple
    maxs: tuple
    shape: tuple

    def __post_init__(self):
        object.__setattr__(self, "mins", tuple(float(v) for v in self.mins))
        object.__setattr__(self, "maxs", tuple(float(v) for v in self.maxs))
        object.__setattr__(self, "shape", tuple(int(v) for v in self.shape))
        if len(self.mins) != 2 or len(self.maxs) != 2 or len(self.shape) != 2:
            raise ValueError("Grid2 is strictly two dimensional")
        if any(n < 3 for n in self.shape):
            raise ValueError("need at least 3 nodes per axis")
        if any(hi <= lo for lo, hi in zip(self.mins, self.maxs)):
            raise ValueError("maxs must exceed mins")

    @property
    def dx(self):
        return tuple((hi - lo) / (n - 1) for lo, hi, n in zip(self.mins, self.maxs, self.shape))

    def axes(self):
        return tuple(np.linspace(lo, hi, n) for lo, hi, n in zip(self.mins, self.maxs, self.shape))

    def mesh(self):
        ax1, ax2 = self.axes()
        return np.meshgrid(ax1, ax2, indexing="ij")

    @property
    def cell_diagonal(self):
        dx1, dx2 = self.dx
        return float(np.hypot(dx1, dx2))


@dataclass
class TargetSet:
    """Implicit target {x : l(x) <= 0}.

    kind "box":     l = exact signed distance to an axis-aligned box,
    kind "ellipse": l = (x-c)' shape (x-c) - level.
    """

    kind: str
    center: np.ndarray
    half_widths: np.ndarray | None = None
    shape_matrix: np.ndarray | None = None
    level: float | None = None

    @staticmethod
    def box(center, half_widths):
        hw = np.asarray(half_widths, dtype=float).ravel()
        if hw.shape != (2,) or np.any(hw <= 0.0):
            raise ValueError("box needs two positive half widths")
        return TargetSet(kind="box", center=np.asarray(center, dtype=float).ravel(), half_widths=hw)

    @staticmethod
    def ellipse(center, shape_matrix, level):
        sm = np.asarray(shape_matrix, dtype=float)
        if sm.shape != (2, 2):
            raise ValueError("shape_matrix must be 2 x 2")
        if level <= 0.0:
            raise ValueError("level must be positive")
        return TargetSet(kind="ellipse", center=np.asarray(center, dtype=float).ravel(),
                         shape_matrix=0.5 * (sm + sm.T), level=float(level))

    def l(self, x1, x2):
        """Evaluate the implicit function on arrays (broadcasting)."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        d1 = x1 - self.center[0]
        d2 = x2 - self.center[1]
        if self.kind == "box":
            q1 = np.abs(d1) - self.half_widths[0]
            q2 = np.abs(d2) - self.half_widths[1]
            outside = np.hypot(np.maximum(q1, 0.0), np.maximum(q2, 0.0))
            inside = np.minimum(np.maximum(q1, q2), 0.0)
            return outside + inside
        if self.kind == "ellipse":
            s = self.shape_matrix
            return s[0, 0] * d1 * d1 + 2.0 * s[0, 1] * d1 * d2 + s[1, 1] * d2 * d2 - self.level
        raise ValueError(f"unknown target kind {self.kind!r}")

    def bounding_half_widths(self):
        """Half widths of the tightest axis-aligned bounding box."""
        if self.kind == "box":
            return self.half_widths.copy()
        pinv = np.linalg.inv(self.shape_matrix)
        return np.sqrt(self.level * np.diag(pinv))


@dataclass
class ValueGrid:
    """A value function sampled on a Grid2, tagged with its time."""

    grid: Grid2
    v: np.ndarray
    time: float = 0.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        if self.v.shape != self.grid.shape:
            raise GridMismatch(f"values shaped {self.v.shape} on grid {self.grid.shape}")

    def to_csv(self, path):
        """Write `x1,x2,v` rows, one per node, row-major."""
        x1g, x2g = self.grid.mesh()
        with open(path, "w") as fh:
            fh.write("x1,x2,v\n")
            for a, b, c in zip(x1g.ravel(), x2g.ravel(), self.v.ravel()):
                fh.write(f"{float(a)!r},{float(b)!r},{float(c)!r}\n")


@dataclass
class AffineDynamics2:
    """Planar dynamics affine in each control / disturbance channel.

    drift:              (x1, x2, param) -> (f1, f2)
    control_terms:      sequence of ((x1, x2, param) -> (g1, g2), (lo, hi))
    disturbance_terms:  same shape, for the adversarial channels
    uncertain_params:   scalar values the Hamiltonian is evaluated at
                        (endpoints of a monotone uncertainty interval);
                        (None,) when there is none.

    All callables must broadcast over numpy arrays.
    """

    drift: object
    control_terms: tuple = ()
    disturbance_terms: tuple = ()
    uncertain_params: tuple = (None,)


# -- pointwise Hamiltonian ----------------------------------------------------

def _channel_extreme(coef, lo, hi, minimize):
    """Extremum of coef*u over u in [lo, hi] (arrays ok)."""
    if minimize:
        return np.where(coef >= 0.0, lo * coef, hi * coef)
    return np.where(coef >= 0.0, hi * coef, lo * coef)


def hamiltonian(v_grad, x, dyn: AffineDynamics2, mode=QuantifierOrder.CONTROL_MIN):
    """Optimized H = grad V . f at one state, with bang-bang players."""
    p1, p2 = float(v_grad[0]), float(v_grad[1])
    x1, x2 = float(x[0]), float(x[1])
    ctrl_min = mode == QuantifierOrder.CONTROL_MIN
    branches = []
    for par in dyn.uncertain_params:
        f1, f2 = dyn.drift(x1, x2, par)
        h = p1 * float(f1) + p2 * float(f2)
        for fn, (lo, hi) in dyn.control_terms:
            g1, g2 = fn(x1, x2, par)
            h += float(_channel_extreme(p1 * float(g1) + p2 * float(g2), lo, hi, ctrl_min))
        for fn, (lo, hi) in dyn.disturbance_terms:
            g1, g2 = fn(x1, x2, par)
            h += float(_channel_extreme(p1 * float(g1) + p2 * float(g2), lo, hi, not ctrl_min))
        branches.append(h)
    return max(branches) if ctrl_min else min(branches)


# -- gridded machinery --------------------------------------------------------

class _GridTerms:
    """Dynamics terms evaluated once per solve on the whole grid."""

    def __init__(self, grid: Grid2, dyn: AffineDynamics2):
        x1g, x2g = grid.mesh()
        ones = np.ones(grid.shape)
        self.branches = []
        for par in dyn.uncertain_params:
            f1, f2 = dyn.drift(x1g, x2g, par)
            drift = (np.asarray(f1, dtype=float) * ones, np.asarray(f2, dtype=float) * ones)
            ctrl = []
            for fn, (lo, hi) in dyn.control_terms:
                g1, g2 = fn(x1g, x2g, par)
                ctrl.append((np.asarray(g1, dtype=float) * ones,
                             np.asarray(g2, dtype=float) * ones, float(lo), float(hi)))
            dist = []
            for fn, (lo, hi) in dyn.disturbance_terms:
                g1, g2 = fn(x1g, x2g, par)
                dist.append((np.asarray(g1, dtype=float) * ones,
                             np.asarray(g2, dtype=float) * ones, float(lo), float(hi)))
            self.branches.append((drift, ctrl, dist))
        # Per-axis wave speed bounds max |dH/dp_i| over grid, players, branches.
        a1 = np.zeros(grid.shape)
        a2 = np.zeros(grid.shape)
        for (f1, f2), ctrl, dist in self.branches:
            b1 = np.abs(f1)
            b2 = np.abs(f2)
            for g1, g2, lo, hi in ctrl + dist:
                span = max(abs(lo), abs(hi))
                b1 = b1 + np.abs(g1) * span
                b2 = b2 + np.abs(g2) * span
            a1 = np.maximum(a1, b1)
            a2 = np.maximum(a2, b2)
        self.alpha = (float(a1.max()), float(a2.max()))

    def hamiltonian(self, p1, p2, ctrl_min):
        out = None
        for (f1, f2), ctrl, dist in self.branches:
            h = p1 * f1 + p2 * f2
            for g1, g2, lo, hi in ctrl:
                h = h + _channel_extreme(p1 * g1 + p2 * g2, lo, hi, ctrl_min)
            for g1, g2, lo, hi in dist:
                h = h + _channel_extreme(p1 * g1 + p2 * g2, lo, hi, not ctrl_min)
            if out is None:
                out = h
            else:
                out = np.maximum(out, h) if ctrl_min else np.minimum(out, h)
        return out


def _pad_linear(v):
    """Add a one-node ring extrapolated linearly (one-sided edge stencils)."""
    p = np.empty((v.shape[0] + 2, v.shape[1] + 2))
    p[1:-1, 1:-1] = v
    p[0, 1:-1] = 2.0 * v[0] - v[1]
    p[-1, 1:-1] = 2.0 * v[-1] - v[-2]
    p[:, 0] = 2.0 * p[:, 1] - p[:, 2]
    p[:, -1] = 2.0 * p[:, -2] - p[:, -3]
    return p


def _lf_update(v, grid, terms, dt, ctrl_min):
    """One forward-time Euler step of V_t + H = 0 (dt may be negative to
    integrate backward); dissipation always acts forward in its own time."""
    dx1, dx2 = grid.dx
    a1, a2 = terms.alpha
    if abs(dt) * (a1 / dx1 + a2 / dx2) > 0.9 + 1e-12:
        raise CflViolation(
            f"|dt| = {abs(dt):.3e} exceeds CFL bound {0.9 / (a1 / dx1 + a2 / dx2 + 1e-300):.3e}")
    p = _pad_linear(v)
    dplus1 = (p[2:, 1:-1] - p[1:-1, 1:-1]) / dx1
    dminus1 = (p[1:-1, 1:-1] - p[:-2, 1:-1]) / dx1
    dplus2 = (p[1:-1, 2:] - p[1:-1, 1:-1]) / dx2
    dminus2 = (p[1:-1, 1:-1] - p[1:-1, :-2]) / dx2
    h = terms.hamiltonian(0.5 * (dplus1 + dminus1), 0.5 * (dplus2 + dminus2), ctrl_min)
    diss = 0.5 * a1 * (dplus1 - dminus1) + 0.5 * a2 * (dplus2 - dminus2)
    return v - dt * h + abs(dt) * diss


def lf_step(vg: ValueGrid, dyn: AffineDynamics2, dt, mode=QuantifierOrder.CONTROL_MIN):
    """Single explicit Lax-Friedrichs Euler step.

    Positive dt advances the PDE time variable (a pure drift aligned with
    grad V lowers V); the reachability driver below passes negative dt to
    march from 0 toward t0 < 0.  Raises CflViolation when
    |dt| * (a1/dx1 + a2/dx2) > 0.9.
    """
    terms = _GridTerms(vg.grid, dyn)
    v = _lf_update(vg.v, vg.grid, terms, float(dt), mode == QuantifierOrder.CONTROL_MIN)
    return ValueGrid(grid=vg.grid, v=v, time=vg.time + float(dt))


def signed_target(grid: Grid2, target: TargetSet):
    """Sample l on the grid; V(x, 0) = l(x).  Raises TargetOutsideGrid when
    no interior node is inside the target."""
    x1g, x2g = grid.mesh()
    l = np.asarray(target.l(x1g, x2g), dtype=float)
    if np.min(l[1:-1, 1:-1]) > 0.0:
        raise TargetOutsideGrid("target has no interior grid node")
    return ValueGrid(grid=grid, v=l, time=0.0)


def solve_brs(grid: Grid2, target: TargetSet, dyn: AffineDynamics2, horizon,
              mode=QuantifierOrder.CONTROL_MIN, freeze="reach",
              cfl=0.5, conv_tol=1e-4, max_converge_time=10.0):
    """Integrate the HJ PDE backward from 0 and return the final ValueGrid.

    horizon: a negative time t0, or the string "converge" to run until the
    largest per-unit-time change drops below conv_tol (capped at
    max_converge_time; `info["converged"]` records whether the cap hit
    first).  freeze selects the set flavour ("reach" or "stay", see module
    docstring).  The step size is cfl / (a1/dx1 + a2/dx2).
    """
    if freeze not in ("reach", "stay"):
        raise ValueError(f"freeze must be 'reach' or 'stay', got {freeze!r}")
    if not 0.0 < cfl <= 0.9:
        raise ValueError("cfl must lie in (0, 0.9]")
    converge = isinstance(horizon, str)
    if converge:
        if horizon != "converge":
            raise ValueError(f"horizon must be a negative time or 'converge', got {horizon!r}")
        t_stop = -float(max_converge_time)
    else:
        t_stop = float(horizon)
        if t_stop >= 0.0:
            raise ValueError("horizon must be negative (backward in time)")
    vg0 = signed_target(grid, target)
    l = vg0.v
    terms = _GridTerms(grid, dyn)
    ctrl_min = mode == QuantifierOrder.CONTROL_MIN
    a1, a2 = terms.alpha
    dx1, dx2 = grid.dx
    wavesum = a1 / dx1 + a2 / dx2

    def clip(vnew):
        return np.minimum(vnew, l) if freeze == "reach" else np.maximum(vnew, l)

    v = l.copy()
    t = 0.0
    steps = 0
    rate = np.inf
    converged = True
    if wavesum <= 0.0:
        # Static dynamics: H vanishes identically, nothing evolves.
        v = clip(v)
        t = t_stop
        h_nom = abs(t_stop)
    else:
        h_nom = cfl / wavesum
        while t > t_stop + 1e-12:
            h = min(h_nom, t - t_stop)
            v1 = clip(_lf_update(v, grid, terms, -h, ctrl_min))
            v2 = clip(_lf_update(v1, grid, terms, -h, ctrl_min))
            vnew = clip(0.5 * (v + v2))
            rate = float(np.max(np.abs(vnew - v))) / h
            v = vnew
            t -= h
            steps += 1
            if converge and rate < conv_tol:
                break
        else:
            converged = not converge  # fixed-horizon runs always "converge"
    info = {"steps": steps, "dt": h_nom, "converged": converged,
            "change_rate": rate if steps else 0.0, "freeze": freeze}
    return ValueGrid(grid=grid, v=v, time=t, info=info)


def safe_set(brs: ValueGrid, target):
    """Boolean mask {V <= 0} & {l <= 0} on the BRS grid.

    target may be a TargetSet (sampled here) or a ValueGrid of l values;
    in the latter case the grids must match exactly.
    """
    if isinstance(target, ValueGrid):
        if target.grid != brs.grid:
            raise GridMismatch("target and value function live on different grids")
        l = target.v
    else:
        x1g, x2g = brs.grid.mesh()
        l = np.asarray(target.l(x1g, x2g), dtype=float)
    return (brs.v <= 0.0) & (l <= 0.0)


def interp2(grid: Grid2, values, points):
    """Bilinear interpolation of gridded values at (k, 2) query points.

    Raises ValueError when any query point falls outside the grid.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise GridMismatch(f"values shaped {values.shape} on grid {grid.shape}")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dx1, dx2 = grid.dx
    s1 = (pts[:, 0] - grid.mins[0]) / dx1
    s2 = (pts[:, 1] - grid.mins[1]) / dx2
    eps = 1e-9
    if (np.any(s1 < -eps) or np.any(s1 > grid.shape[0] - 1 + eps)
            or np.any(s2 < -eps) or np.any(s2 > grid.shape[1] - 1 + eps)):
        raise ValueError("interpolation point outside grid")
    i1 = np.clip(np.floor(s1).astype(int), 0, grid.shape[0] - 2)
    i2 = np.clip(np.floor(s2).astype(int), 0, grid.shape[1] - 2)
    f1 = np.clip(s1 - i1, 0.0, 1.0)
    f2 = np.clip(s2 - i2, 0.0, 1.0)
    v00 = values[i1, i2]
    v10 = values[i1 + 1, i2]
    v01 = values[i1, i2 + 1]
    v11 = values[i1 + 1, i2 + 1]
    return (v00 * (1 - f1) * (1 - f2) + v10 * f1 * (1 - f2)
            + v01 * (1 - f1) * f2 + v11 * f1 * f2)


def grid_around(target: TargetSet, factor=4.0, n=101):
    """Default computation grid: a box `factor` times the target's bounding
    half-widths, n x n nodes."""
    hw = target.bounding_half_widths() * float(factor)
    c = target.center
    return Grid2(mins=(c[0] - hw[0], c[1] - hw[1]),
                 maxs=(c[0] + hw[0], c[1] + hw[1]),
                 shape=(int(n), int(n)))
