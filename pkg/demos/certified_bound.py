"""Certify a disturbance bound for the quadruped height subsystem.

Chain demonstrated here, for the vertical error axis of the trotting
quadruped: synthesize the ancillary gain, solve the robust stay-inside PDE
over the payload uncertainty, then bisect for the largest disturbance
bound whose invariant ellipse still fits inside the safe set.  A second
pass shrinks the force ceiling so lift margin, not the target band, is
what limits the bound; there the certified w_max visibly drops as the
unknown payload grows.
"""

from pathlib import Path

import numpy as np

from robustroa import plants
from robustroa.clf_synth import ClfParams, synthesize
from robustroa.harness import svgplot
from robustroa.hj_reach import Grid2, TargetSet, solve_brs
from robustroa.roa_bridge import find_wmax

OUT = Path(__file__).resolve().parent / "out"


def certify(cert, plant_params, u_hi, delta_m, target_hw=(0.076, 0.8)):
    grid = Grid2(mins=(-0.2, -1.6), maxs=(0.2, 1.6), shape=(101, 101))
    target = TargetSet.box(center=(0.0, 0.0), half_widths=target_hw)
    dyn = plants.subsystem_error_dynamics("z", plant_params, u_lo=0.0, u_hi=u_hi,
                                          delta_m_interval=delta_m)
    vg = solve_brs(grid, target, dyn, -2.0, freeze="stay")
    return find_wmax(cert, vg, target), vg, target


def ellipse_points(p, level, n=360):
    theta = np.linspace(0.0, 2.0 * np.pi, n)
    circ = np.sqrt(level) * np.vstack([np.cos(theta), np.sin(theta)])
    chol = np.linalg.cholesky(p)
    return np.linalg.solve(chol.T, circ).T


def safe_boundary(vg):
    x1, x2 = vg.grid.axes()
    pts = []
    for j in range(vg.v.shape[1]):
        col = vg.v[:, j]
        for i in np.nonzero(col[:-1] * col[1:] < 0.0)[0]:
            frac = col[i] / (col[i] - col[i + 1])
            pts.append((x1[i] + frac * (x1[i + 1] - x1[i]), x2[j]))
    for i in range(vg.v.shape[0]):
        row = vg.v[i, :]
        for j in np.nonzero(row[:-1] * row[1:] < 0.0)[0]:
            frac = row[j] / (row[j] - row[j + 1])
            pts.append((x1[i], x2[j] + frac * (x2[j + 1] - x2[j])))
    pts = np.array(pts)
    order = np.argsort(np.arctan2(pts[:, 1], pts[:, 0]))
    loop = pts[order]
    return np.vstack([loop, loop[:1]])


def main():
    OUT.mkdir(exist_ok=True)
    params = plants.QuadrupedParams()
    model = plants.quadruped_axis_linear(params)
    weights = ClfParams(q=np.array([1000.0, 1.0]), r=np.array([0.01]),
                        decay_rate=0.8, dist_weight=90.0)
    cert, sol = synthesize(model, weights)
    print(f"synthesis: {sol.status.value}, objective {sol.objective_value:.6f}")
    print(f"K = {np.array_str(cert.k, precision=3)}")

    res, vg, target = certify(cert, params, u_hi=300.0, delta_m=(0.0, 5.0))
    print(f"ample force (u <= 300 N): w_max = {res.w_max:.6f} m/s^2, "
          f"level = {res.level:.6f}, {res.iterations} bisection steps")

    ell = ellipse_points(cert.p, res.level)
    hw = target.half_widths
    box = np.array([[hw[0], hw[1]], [hw[0], -hw[1]], [-hw[0], -hw[1]],
                    [-hw[0], hw[1]], [hw[0], hw[1]]])
    safe = safe_boundary(vg)
    path = OUT / "certified_bound_z.svg"
    svgplot.line_plot(path, [
        svgplot.Series("stay band", box[:, 0], box[:, 1],
                       color="#888888", dash="3,3"),
        svgplot.Series("robust safe set", safe[:, 0], safe[:, 1],
                       color="#2ca02c"),
        svgplot.Series("invariant ellipse", ell[:, 0], ell[:, 1],
                       color="#d62728"),
    ], title="height error: invariant ellipse inside the safe set",
        xlabel="height error [m]", ylabel="vertical rate error [m/s]")
    print(f"wrote {path}")

    # scarce lift: the stand force is ~171 N at 5 kg payload, so a 240 N
    # ceiling leaves little up-authority and the payload range starts to bite
    print("force ceiling 240 N:")
    for dm in (0.0, 5.0):
        res, _, _ = certify(cert, params, u_hi=240.0, delta_m=(dm, dm))
        print(f"  payload {dm:.0f} kg: w_max = {res.w_max:.6f} m/s^2, "
              f"level = {res.level:.6f}")


if __name__ == "__main__":
    main()
