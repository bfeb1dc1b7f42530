"""Vehicle models, references, disturbance policies, closed-loop simulation.

Two plants share the state layout x = [y, z, phi, ydot, zdot, phidot]
(lateral position, height, pitch, and their rates):

* planar quadcopter: controls are total thrust u_s and thrust difference
  u_d; bounded accelerations (w1, w2) push the lateral / vertical axes,
* planar quadruped stand-in: a trotting point mass with rotational
  inertia, controls are the ground-reaction forces of the front and rear
  stance feet (fx_f, fx_r, fz_f, fz_r); the "disturbances" are an unknown
  added mass and an optional horizontal drag force (pushing a box), which
  act through the plant parameters rather than an additive channel.

The simulator runs classical RK4 at a fixed dt with a zero-order-hold
tracking controller (MPC feedforward recomputed on its own slower period,
certificate feedback every step) while recording the certificate energy
E = e' P e against its invariant level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import matrixkit as mk
from .clf_synth import ClfCertificate, LinearModel
from .hj_reach import AffineDynamics2
from .mpc import MpcConfig, mpc_step


class ContactViolation(Exception):
    """A stance foot was asked to pull on the ground (negative normal force)."""


class NonFinite(Exception):
    """Integration produced NaN or infinity."""


class OutOfRange(ValueError):
    """Reference queried outside its time domain."""


# -- quadcopter ---------------------------------------------------------------

@dataclass
class QuadcopterParams:
    mass: float = 1.0
    arm_length: float = 0.2
    inertia_xx: float = 0.1
    gravity: float = 9.81


def quadcopter_f(x, u, w, p: QuadcopterParams):
    """Planar quadcopter dynamics.

    ydot'   = -u_s sin(phi) / m + w1
    zdot'   =  u_s cos(phi) / m - g + w2
    phidot' =  (l / 2) u_d / I_xx
    """
    x = np.asarray(x, dtype=float).ravel()
    u = np.asarray(u, dtype=float).ravel()
    w = np.zeros(2) if w is None else np.asarray(w, dtype=float).ravel()
    return np.array([
        x[3],
        x[4],
        x[5],
        -u[0] * math.sin(x[2]) / p.mass + w[0],
        u[0] * math.cos(x[2]) / p.mass - p.gravity + w[1],
        0.5 * p.arm_length * u[1] / p.inertia_xx,
    ])


def quadcopter_linearize(p: QuadcopterParams):
    """LinearModel about hover (phi = 0, u_s = m g); control is the total
    (u_s, u_d), so gravity stays as the affine term."""
    a = np.zeros((6, 6))
    a[0, 3] = a[1, 4] = a[2, 5] = 1.0
    a[3, 2] = -p.gravity
    b = np.zeros((6, 2))
    b[4, 0] = 1.0 / p.mass
    b[5, 1] = 0.5 * p.arm_length / p.inertia_xx
    b_w = np.zeros((6, 2))
    b_w[3, 0] = 1.0
    b_w[4, 1] = 1.0
    g = np.zeros(6)
    g[4] = -p.gravity
    return LinearModel(a=a, b=b, b_w=b_w, g=g)


@dataclass
class Figure8Ref:
    """Figure-eight with a quintic time warp: rest-to-rest in [0, t_end].

    tau(t) = t_end * (10 s^3 - 15 s^4 + 6 s^5), s = t / t_end, so velocity
    and acceleration vanish at both ends; the path is
    y = amp_y sin(2 tau), z = amp_z cos(tau).
    """

    t_end: float = 5.0
    amp_y: float = 0.5
    amp_z: float = 0.5

    def warp(self, t):
        """(tau, taudot, tauddot) at time t; raises OutOfRange off [0, t_end]."""
        if t < -1e-9 or t > self.t_end + 1e-9:
            raise OutOfRange(f"t = {t} outside [0, {self.t_end}]")
        s = min(max(t / self.t_end, 0.0), 1.0)
        tau = self.t_end * (10 * s**3 - 15 * s**4 + 6 * s**5)
        taudot = 30 * s**2 - 60 * s**3 + 30 * s**4
        tauddot = (60 * s - 180 * s**2 + 120 * s**3) / self.t_end
        return tau, taudot, tauddot

    def point(self, t):
        """Positions, velocities, accelerations: ((y, z), (yd, zd), (ydd, zdd))."""
        tau, td, tdd = self.warp(t)
        y = self.amp_y * math.sin(2 * tau)
        z = self.amp_z * math.cos(tau)
        yd = 2 * self.amp_y * math.cos(2 * tau) * td
        zd = -self.amp_z * math.sin(tau) * td
        ydd = -4 * self.amp_y * math.sin(2 * tau) * td**2 + 2 * self.amp_y * math.cos(2 * tau) * tdd
        zdd = -self.amp_z * math.cos(tau) * td**2 - self.amp_z * math.sin(tau) * tdd
        return (y, z), (yd, zd), (ydd, zdd)

    def state(self, t):
        """Six-state reference [y, z, 0, ydot, zdot, 0]."""
        (y, z), (yd, zd), _ = self.point(t)
        return np.array([y, z, 0.0, yd, zd, 0.0])

    def clamped_state(self, t):
        return self.state(min(max(t, 0.0), self.t_end))


def figure8_ref(t, ref: Figure8Ref | None = None):
    """Convenience: positions/velocities/accelerations of the figure eight."""
    return (ref or Figure8Ref()).point(t)


# -- quadruped stand-in -------------------------------------------------------

@dataclass
class QuadrupedParams:
    mass: float = 12.454
    inertia_xx: float = 0.0565
    gravity: float = 9.81
    leg_length: float = 0.2
    friction_coeff: float = 0.6
    z_ref: float = 0.32
    v_ref: float = 0.45
    step_time: float = 0.25
    step_offset: float = 0.15


@dataclass
class StanceState:
    """Which diagonal pair is down and where its feet are (world frame)."""

    pair: str
    foot_front: np.ndarray
    foot_rear: np.ndarray


def _cross2(r, f):
    return r[0] * f[1] - r[1] * f[0]


def quadruped_f(x, u, stance: StanceState, p: QuadrupedParams,
                delta_m=0.0, drag_force=0.0):
    """Trotting point-mass dynamics under ground-reaction forces.

    u = [fx_front, fx_rear, fz_front, fz_rear].  The true mass is
    p.mass + delta_m (the controller plans with p.mass); drag_force is a
    constant resistive force on the COM along -y (pushing a load).
    Raises ContactViolation when a commanded normal force is negative.
    """
    x = np.asarray(x, dtype=float).ravel()
    u = np.asarray(u, dtype=float).ravel()
    if u[2] < -1e-9 or u[3] < -1e-9:
        raise ContactViolation(f"negative normal force: fz_front={u[2]:.3f}, fz_rear={u[3]:.3f}")
    m_true = p.mass + delta_m
    f_front = np.array([u[0], u[2]])
    f_rear = np.array([u[1], u[3]])
    com = np.array([x[0], x[1]])
    r_front = com - stance.foot_front
    r_rear = com - stance.foot_rear
    return np.array([
        x[3],
        x[4],
        x[5],
        (u[0] + u[1] - drag_force) / m_true,
        (u[2] + u[3]) / m_true - p.gravity,
        (_cross2(r_front, f_front) + _cross2(r_rear, f_rear)) / p.inertia_xx,
    ])


def quadruped_linear_subsystems(p: QuadrupedParams, horizontal_bias="mu"):
    """Decoupled double-integrator models for the y and z axes.

    Each has state (position, velocity) and two force inputs (front/rear
    share the axis): A = [[0,1],[0,0]], B = [[0,0],[1/m,1/m]], one
    disturbance channel on the velocity row.  The constant term is -g for
    z; for y it is the selected horizontal bias: "mu" (the bare friction
    coefficient, kept as written in the source model), "mu_g"
    (friction_coeff * g), "none"/0, or any float (an acceleration).
    """
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    b = np.array([[0.0, 0.0], [1.0 / p.mass, 1.0 / p.mass]])
    b_w = np.array([[0.0], [1.0]])
    if horizontal_bias == "mu":
        bias = -p.friction_coeff
    elif horizontal_bias == "mu_g":
        bias = -p.friction_coeff * p.gravity
    elif horizontal_bias in ("none", None):
        bias = 0.0
    else:
        bias = float(horizontal_bias)
    model_y = LinearModel(a=a, b=b, b_w=b_w, g=np.array([0.0, bias]))
    model_z = LinearModel(a=a, b=b, b_w=b_w, g=np.array([0.0, -p.gravity]))
    return model_y, model_z


def quadruped_axis_linear(p: QuadrupedParams):
    """Single-input double integrator for one axis.

    The control is the total stance force along the axis (front + rear
    combined), matching the reachability channel; one disturbance enters
    on the velocity row.  Both axes share this model (mass is all that
    enters), so callers reuse one instance for y and z.
    """
    return LinearModel(a=np.array([[0.0, 1.0], [0.0, 0.0]]),
                       b=np.array([[0.0], [1.0 / p.mass]]),
                       b_w=np.array([[0.0], [1.0]]))


def split_axis_gain(k_total):
    """Distribute a total-force gain row evenly over the two stance feet."""
    k_total = np.atleast_2d(np.asarray(k_total, dtype=float))
    return 0.5 * np.vstack([k_total, k_total])


def subsystem_error_dynamics(axis, p: QuadrupedParams, u_lo, u_hi,
                             delta_m_interval=(0.0, 5.0), drag_force=0.0):
    """Error-coordinate dynamics of one axis for reachability.

    e = (tracking error, its rate); the control is the total axis force
    (both stance feet combined) in [u_lo, u_hi]; the added mass spans
    delta_m_interval and enters every force term through 1/(m + dm), so
    endpoint evaluation of the Hamiltonian is exact.

    axis "z": e2' = u/(m+dm) - g     (u is total normal force)
    axis "y": e2' = (u - drag)/(m+dm)
    """
    if axis not in ("y", "z"):
        raise ValueError("axis must be 'y' or 'z'")
    m0 = p.mass
    grav = p.gravity

    if axis == "z":
        def drift(x1, x2, dm):
            return x2, -grav * np.ones_like(np.asarray(x1, dtype=float))
    else:
        def drift(x1, x2, dm):
            return x2, (-drag_force / (m0 + dm)) * np.ones_like(np.asarray(x1, dtype=float))

    def gain(x1, x2, dm):
        one = np.ones_like(np.asarray(x1, dtype=float))
        return 0.0 * one, one / (m0 + dm)

    return AffineDynamics2(
        drift=drift,
        control_terms=((gain, (float(u_lo), float(u_hi))),),
        disturbance_terms=(),
        uncertain_params=tuple(float(d) for d in delta_m_interval),
    )


# -- feedback helpers ---------------------------------------------------------

def robust_control(u_bar, x, x_bar, k):
    """Certified tracking law u = u_bar + K (x - x_bar)."""
    x = np.asarray(x, dtype=float).ravel()
    x_bar = np.asarray(x_bar, dtype=float).ravel()
    return np.asarray(u_bar, dtype=float).ravel() + np.asarray(k, dtype=float) @ (x - x_bar)


def stance_allocation(x, stance: StanceState):
    """Min-norm map from a desired body wrench to the four stance forces.

    Columns order [fx_front, fx_rear, fz_front, fz_rear]; the wrench is
    (lateral force, lift force, pitch torque about the COM).  Rank is full
    whenever the feet straddle the COM, so a pure-lift request produces a
    torque-free force split even with unequal moment arms.
    """
    x = np.asarray(x, dtype=float).ravel()
    com = np.array([x[0], x[1]])
    rf = com - stance.foot_front
    rr = com - stance.foot_rear
    a = np.array([
        [1.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 1.0],
        [-rf[1], -rr[1], rf[0], rr[0]],
    ])
    return np.linalg.pinv(a)


def worst_constant_disturbance(cert: ClfCertificate, model: LinearModel, w_max):
    """Constant w with ||w||_2 = w_max maximizing the steady-state energy.

    For e' = (A + BK) e + B_w w the steady state is -(A+BK)^-1 B_w w, so
    the worst direction is the top eigenvector of X' P X with
    X = (A+BK)^-1 B_w.
    """
    acl = model.a + model.b @ cert.k
    x_map = mk.solve(acl, model.b_w)
    quad = mk.symmetrize(x_map.T @ cert.p @ x_map)
    r = mk.sym_eig(quad)
    direction = r.vectors[:, -1]
    return float(w_max) * direction / np.linalg.norm(direction)


def rk4_step(f, x, u, w, dt):
    """Classical fourth-order Runge-Kutta step of x' = f(x, u, w)."""
    x = np.asarray(x, dtype=float).ravel()
    k1 = np.asarray(f(x, u, w), dtype=float)
    k2 = np.asarray(f(x + 0.5 * dt * k1, u, w), dtype=float)
    k3 = np.asarray(f(x + 0.5 * dt * k2, u, w), dtype=float)
    k4 = np.asarray(f(x + dt * k3, u, w), dtype=float)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFinite("integration step produced non-finite state")
    return out


# -- plants as simulation objects ---------------------------------------------

class QuadcopterPlant:
    """Quadcopter with additive acceleration disturbances."""

    n_states = 6
    n_controls = 2
    n_dist = 2

    def __init__(self, params: QuadcopterParams | None = None):
        self.params = params or QuadcopterParams()

    def f(self, t, x, u, w):
        return quadcopter_f(x, u, w, self.params)

    def nominal_f(self, t):
        """Disturbance-free dynamics for the controller's model."""
        return lambda x, u: quadcopter_f(x, u, None, self.params)

    def sanitize(self, t, x, u):
        return u, 0

    def advance(self, t, x):
        pass

    def hover_input(self):
        return np.array([self.params.mass * self.params.gravity, 0.0])


class QuadrupedPlant:
    """Trotting quadruped stand-in with optional added mass and drag.

    Feet of the active diagonal pair sit at +/- step_offset around the
    predicted mid-step COM (current position plus half a step of travel at
    the commanded speed, so the arms stay balanced while the body moves)
    and are re-placed every step_time (instantaneous swap, double support
    throughout).  sanitize() projects commanded forces into the friction
    cone fz >= 0, |fx| <= friction_coeff * fz, counting clamps.
    """

    n_states = 6
    n_controls = 4
    n_dist = 0

    def __init__(self, params: QuadrupedParams | None = None,
                 delta_m=0.0, drag_force=0.0, y0=0.0):
        self.params = params or QuadrupedParams()
        self.delta_m = float(delta_m)
        self.drag_force = float(drag_force)
        self.stance = self._place(y0, "A")
        self._next_switch = self.params.step_time

    def _place(self, y, pair):
        off = self.params.step_offset
        mid = y + 0.5 * self.params.v_ref * self.params.step_time
        return StanceState(pair=pair,
                           foot_front=np.array([mid + off, 0.0]),
                           foot_rear=np.array([mid - off, 0.0]))

    def advance(self, t, x):
        if t >= self._next_switch - 1e-12:
            pair = "B" if self.stance.pair == "A" else "A"
            self.stance = self._place(float(x[0]), pair)
            self._next_switch += self.params.step_time

    def f(self, t, x, u, w):
        return quadruped_f(x, u, self.stance, self.params,
                           delta_m=self.delta_m, drag_force=self.drag_force)

    def nominal_f(self, t):
        """Controller model: nominal mass, no drag, current stance."""
        stance = self.stance
        return lambda x, u: quadruped_f(x, u, stance, self.params)

    def sanitize(self, t, x, u):
        u = np.asarray(u, dtype=float).copy()
        mu = self.params.friction_coeff
        clamps = 0
        for fz_i, fx_i in ((2, 0), (3, 1)):
            if u[fz_i] < 0.0:
                u[fz_i] = 0.0
                clamps += 1
            lim = mu * u[fz_i]
            if abs(u[fx_i]) > lim:
                u[fx_i] = math.copysign(lim, u[fx_i])
                clamps += 1
        return u, clamps

    def static_input(self):
        """Even weight split of the nominal mass, no shear."""
        half = 0.5 * self.params.mass * self.params.gravity
        return np.array([0.0, 0.0, half, half])


@dataclass
class TrotRef:
    """Constant height and forward speed: [y0 + v t, z_ref, 0, v, 0, 0]."""

    y0: float = 0.0
    z_ref: float = 0.32
    v_ref: float = 0.45
    t_end: float = math.inf

    def state(self, t):
        return np.array([self.y0 + self.v_ref * t, self.z_ref, 0.0, self.v_ref, 0.0, 0.0])

    def clamped_state(self, t):
        return self.state(max(t, 0.0))


# -- disturbance policies -----------------------------------------------------

class ConstantDisturbance:
    def __init__(self, w):
        self.w = np.asarray(w, dtype=float).ravel()

    def __call__(self, t):
        return self.w


class SinusoidalDisturbance:
    """w(t) = w_max * (sin, cos)(2 pi freq t): full amplitude at all times."""

    def __init__(self, w_max, freq=0.5):
        self.w_max = float(w_max)
        self.freq = float(freq)

    def __call__(self, t):
        ang = 2.0 * math.pi * self.freq * t
        return self.w_max * np.array([math.sin(ang), math.cos(ang)])


class RandomDisturbance:
    """Piecewise-constant w, redrawn every hold_time uniformly from the
    Euclidean ball of radius w_max (seeded, reproducible)."""

    def __init__(self, w_max, seed=0, hold_time=0.05):
        self.w_max = float(w_max)
        self.hold_time = float(hold_time)
        self.rng = np.random.default_rng(seed)
        self._next_draw = 0.0
        self._w = np.zeros(2)

    def __call__(self, t):
        if t >= self._next_draw - 1e-12:
            ang = self.rng.uniform(0.0, 2.0 * math.pi)
            rad = self.w_max * math.sqrt(self.rng.uniform())
            self._w = rad * np.array([math.cos(ang), math.sin(ang)])
            self._next_draw = t + self.hold_time
        return self._w


# -- tracking controller ------------------------------------------------------

class TrackingController:
    """MPC feedforward on a slow tick + certificate feedback every call.

    plant      : provides nominal_f(t) for the controller's model
    reference  : object with clamped_state(t)
    cfg        : MpcConfig (its dt is the MPC period)
    u_lin      : linearization input for the MPC stages
    gains      : ancillary terms; each entry is either a tuple
                 (K, state_idx, ctrl_idx) adding K @ e[state_idx] onto
                 u[ctrl_idx], or a callable (t, x, e) -> full-length
                 control correction (for allocation-style wiring).
                 Empty sequence = nominal (MPC-only) controller.
    """

    def __init__(self, plant, reference, cfg: MpcConfig, u_lin, gains=()):
        self.plant = plant
        self.reference = reference
        self.cfg = cfg
        self.u_lin = np.asarray(u_lin, dtype=float).ravel()
        self.gains = [
            g if callable(g)
            else (np.asarray(g[0], dtype=float), np.asarray(g[1], dtype=int),
                  np.asarray(g[2], dtype=int))
            for g in gains
        ]
        self._next_tick = -math.inf
        self._u_bar = self.u_lin.copy()
        self.mpc_calls = 0

    def control(self, t, x):
        if t >= self._next_tick - 1e-12:
            refs = np.stack([self.reference.clamped_state(t + i * self.cfg.dt)
                             for i in range(self.cfg.horizon + 1)])
            res = mpc_step(self.plant.nominal_f(t), x, refs, self.cfg, u_lin=self.u_lin)
            self._u_bar = res.u0
            self._next_tick = t + self.cfg.dt
            self.mpc_calls += 1
        u = self._u_bar.copy()
        if self.gains:
            e = np.asarray(x, dtype=float) - self.reference.clamped_state(t)
            for entry in self.gains:
                if callable(entry):
                    u = u + np.asarray(entry(t, x, e), dtype=float).ravel()
                else:
                    k, state_idx, ctrl_idx = entry
                    u[ctrl_idx] += k @ e[state_idx]
        if self.cfg.u_lo is not None:
            u = np.maximum(u, self.cfg.u_lo)
        if self.cfg.u_hi is not None:
            u = np.minimum(u, self.cfg.u_hi)
        return u


@dataclass
class LyapunovMonitor:
    """Tracks E = e[idx]' P e[idx] against the invariant level."""

    name: str
    p: np.ndarray
    level: float
    state_idx: np.ndarray = field(default_factory=lambda: np.arange(6))

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.state_idx = np.asarray(self.state_idx, dtype=int)

    def energy(self, e):
        sub = np.asarray(e, dtype=float)[self.state_idx]
        return float(sub @ self.p @ sub)


# -- closed-loop simulation ---------------------------------------------------

@dataclass
class Trajectory:
    """Uniformly sampled closed-loop run plus certificate bookkeeping."""

    t: np.ndarray
    x: np.ndarray
    x_ref: np.ndarray
    u: np.ndarray
    w: np.ndarray
    e_lyap: np.ndarray
    monitor_names: tuple
    levels: tuple
    diverged: bool
    invariant_exits: tuple
    clamp_events: int

    def to_csv(self, path):
        """One row per sample; header `t,x...,xref...,u...,w...,E,roa_level`
        (E / roa_level columns suffixed by monitor name when several)."""
        nx = self.x.shape[1]
        nu = self.u.shape[1]
        nw = self.w.shape[1]
        cols = (["t"]
                + [f"x{i + 1}" for i in range(nx)]
                + [f"xref{i + 1}" for i in range(nx)]
                + [f"u{i + 1}" for i in range(nu)]
                + [f"w{i + 1}" for i in range(nw)])
        if len(self.monitor_names) == 1:
            cols += ["E", "roa_level"]
        else:
            for name in self.monitor_names:
                cols += [f"E_{name}", f"roa_level_{name}"]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for i in range(len(self.t)):
                row = [self.t[i], *self.x[i], *self.x_ref[i], *self.u[i], *self.w[i]]
                for j, lev in enumerate(self.levels):
                    row += [self.e_lyap[i, j], lev]
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def simulate_closed_loop(plant, controller, reference, disturbance, duration, dt,
                         monitors=(), x0=None, blowup=1e4):
    """Fixed-step RK4 closed loop; returns a Trajectory.

    disturbance: callable t -> w vector, or None.  Monitors are
    LyapunovMonitor objects evaluated on e = x - x_ref(t); a sample counts
    as an invariant exit when E > level * (1 + 1e-6).  Integration stops
    early (diverged=True) if the state norm passes blowup or goes
    non-finite.
    """
    monitors = list(monitors)
    n_steps = int(round(duration / dt))
    x = (reference.clamped_state(0.0) if x0 is None else np.asarray(x0, dtype=float)).copy()
    nw = max(getattr(plant, "n_dist", 0), 1)
    ts, xs, xrefs, us, ws, energies = [], [], [], [], [], []
    clamp_events = 0
    diverged = False
    for i in range(n_steps + 1):
        t = i * dt
        plant.advance(t, x)
        x_ref = reference.clamped_state(t)
        u_cmd = controller.control(t, x)
        u, clamps = plant.sanitize(t, x, u_cmd)
        clamp_events += clamps
        w = np.zeros(nw) if disturbance is None else np.asarray(disturbance(t), dtype=float)
        e = x - x_ref
        ts.append(t)
        xs.append(x.copy())
        xrefs.append(x_ref)
        us.append(np.asarray(u, dtype=float).copy())
        ws.append(w.copy())
        energies.append([mon.energy(e) for mon in monitors])
        if i == n_steps:
            break
        try:
            x = rk4_step(lambda xx, uu, ww: plant.f(t, xx, uu, ww), x, u, w, dt)
        except NonFinite:
            diverged = True
            break
        if float(np.max(np.abs(x))) > blowup:
            diverged = True
            break
    e_lyap = np.array(energies) if monitors else np.zeros((len(ts), 0))
    levels = tuple(mon.level for mon in monitors)
    exits = tuple(
        int(np.sum(e_lyap[:, j] > lev * (1.0 + 1e-6)))
        for j, lev in enumerate(levels)
    )
    return Trajectory(
        t=np.array(ts),
        x=np.array(xs),
        x_ref=np.array(xrefs),
        u=np.array(us),
        w=np.array(ws),
        e_lyap=e_lyap,
        monitor_names=tuple(mon.name for mon in monitors),
        levels=levels,
        diverged=diverged,
        invariant_exits=exits,
        clamp_events=clamp_events,
    )
