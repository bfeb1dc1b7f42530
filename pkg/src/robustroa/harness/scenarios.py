"""Scenario configs: flat key = value sections, one file per experiment.

A scenario bundles everything one pipeline run needs: the plant and its
physical constants, supply-rate weights for the ancillary-gain synthesis
(one block for the quadcopter, one per axis for the quadruped), the MPC
weights, the reference, the disturbance policy, reachability settings per
subsystem, and the simulation clock.  Parsing is strict: unknown plants,
missing sections, and malformed numbers all raise ConfigError, which the
CLI maps to exit code 4.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from ..clf_synth import ClfParams
from ..mpc import MpcConfig
from ..plants import Figure8Ref, QuadcopterParams, QuadrupedParams, TrotRef


class ConfigError(Exception):
    """The scenario file is missing, incomplete, or malformed."""


def _floats(text):
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"expected numbers, got {text!r}") from exc


@dataclass
class ClfBlock:
    """One synthesis problem: weights plus (optionally) a fixed w_max."""

    axis: str  # "main" for the quadcopter, "y"/"z" for the quadruped
    params: ClfParams
    w_max: float | None = None


@dataclass
class HjBlock:
    """Reachability settings for one error subsystem."""

    axis: str
    target_half_widths: tuple
    grid_half_widths: tuple
    n: int
    horizon: object  # negative float or "converge"
    freeze: str
    u_lo: float
    u_hi: float
    delta_m: tuple
    drag_force: float = 0.0


@dataclass
class DisturbancePolicy:
    kind: str  # none | constant | sinusoidal | random | worst_constant
    w: tuple = ()
    w_max: float = 0.0
    freq: float = 0.5
    hold_time: float = 0.05


@dataclass
class Scenario:
    name: str
    plant_kind: str  # quadcopter | quadruped
    mode: str  # nominal | robust
    seed: int
    quadcopter: QuadcopterParams | None
    quadruped: QuadrupedParams | None
    delta_m: float
    drag_force: float
    clf_blocks: dict
    mpc: MpcConfig
    reference_kind: str
    reference_args: dict
    disturbance: DisturbancePolicy
    hj_blocks: dict = field(default_factory=dict)
    duration: float = 5.0
    sim_dt: float = 0.001
    out_dir: str | None = None

    def reference(self):
        if self.reference_kind == "figure8":
            return Figure8Ref(**self.reference_args)
        return TrotRef(**self.reference_args)

    def with_mode(self, mode):
        import copy

        scn = copy.copy(self)
        scn.mode = mode
        return scn


def _section(cp, name):
    if not cp.has_section(name):
        raise ConfigError(f"missing [{name}] section")
    return cp[name]


def _get(sec, key, cast=str):
    if key not in sec:
        raise ConfigError(f"missing key {key!r} in [{sec.name}]")
    raw = sec[key]
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r} in [{sec.name}]: {raw!r}") from exc


def _clf_block(sec, axis):
    try:
        params = ClfParams(
            q=np.array(_floats(_get(sec, "q"))),
            r=np.array(_floats(_get(sec, "r"))),
            decay_rate=_get(sec, "decay_rate", float),
            dist_weight=_get(sec, "dist_weight", float),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    w_max = float(sec["w_max"]) if "w_max" in sec else None
    return ClfBlock(axis=axis, params=params, w_max=w_max)


def _hj_block(sec, axis):
    thw = _floats(_get(sec, "target_half_widths"))
    ghw = _floats(_get(sec, "grid_half_widths"))
    if len(thw) != 2 or len(ghw) != 2:
        raise ConfigError(f"[{sec.name}] half widths need two entries each")
    horizon_raw = _get(sec, "horizon")
    horizon = "converge" if horizon_raw == "converge" else float(horizon_raw)
    return HjBlock(
        axis=axis,
        target_half_widths=tuple(thw),
        grid_half_widths=tuple(ghw),
        n=_get(sec, "n", int),
        horizon=horizon,
        freeze=sec.get("freeze", "stay"),
        u_lo=_get(sec, "u_lo", float),
        u_hi=_get(sec, "u_hi", float),
        delta_m=(float(sec.get("delta_m_lo", 0.0)), float(sec.get("delta_m_hi", 0.0))),
        drag_force=float(sec.get("drag_force", 0.0)),
    )


def _disturbance(sec):
    kind = _get(sec, "kind")
    if kind not in ("none", "constant", "sinusoidal", "random", "worst_constant"):
        raise ConfigError(f"unknown disturbance kind {kind!r}")
    pol = DisturbancePolicy(kind=kind)
    if kind == "constant":
        pol.w = tuple(_floats(_get(sec, "w")))
    elif kind in ("sinusoidal", "random", "worst_constant"):
        pol.w_max = _get(sec, "w_max", float)
        pol.freq = float(sec.get("freq", 0.5))
        pol.hold_time = float(sec.get("hold_time", 0.05))
    return pol


def load_scenario(path):
    """Parse a scenario config file into a Scenario."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = cp.read(str(path))
    if not read:
        raise ConfigError(f"cannot read config file {path}")

    top = _section(cp, "scenario")
    plant_kind = _get(top, "plant")
    mode = top.get("mode", "robust")
    if plant_kind not in ("quadcopter", "quadruped"):
        raise ConfigError(f"unknown plant {plant_kind!r}")
    if mode not in ("nominal", "robust"):
        raise ConfigError(f"unknown mode {mode!r}")

    quadcopter = quadruped = None
    delta_m = drag = 0.0
    if plant_kind == "quadcopter":
        ps = _section(cp, "quadcopter")
        quadcopter = QuadcopterParams(
            mass=_get(ps, "mass", float),
            arm_length=_get(ps, "arm_length", float),
            inertia_xx=_get(ps, "inertia_xx", float),
            gravity=_get(ps, "gravity", float),
        )
        clf_blocks = {"main": _clf_block(_section(cp, "clf"), "main")}
    else:
        ps = _section(cp, "quadruped")
        quadruped = QuadrupedParams(
            mass=_get(ps, "mass", float),
            inertia_xx=_get(ps, "inertia_xx", float),
            gravity=_get(ps, "gravity", float),
            leg_length=float(ps.get("leg_length", 0.2)),
            friction_coeff=_get(ps, "friction_coeff", float),
            z_ref=_get(ps, "z_ref", float),
            v_ref=_get(ps, "v_ref", float),
            step_time=_get(ps, "step_time", float),
            step_offset=_get(ps, "step_offset", float),
        )
        delta_m = float(ps.get("delta_m", 0.0))
        drag = float(ps.get("drag_force", 0.0))
        clf_blocks = {
            "y": _clf_block(_section(cp, "clf_y"), "y"),
            "z": _clf_block(_section(cp, "clf_z"), "z"),
        }

    ms = _section(cp, "mpc")
    try:
        mpc_cfg = MpcConfig(
            q=np.array(_floats(_get(ms, "q"))),
            r=np.array(_floats(_get(ms, "r"))),
            dt=_get(ms, "dt", float),
            horizon=_get(ms, "horizon", int),
            u_lo=np.array(_floats(ms["u_lo"])) if "u_lo" in ms else None,
            u_hi=np.array(_floats(ms["u_hi"])) if "u_hi" in ms else None,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    rs = _section(cp, "reference")
    ref_kind = _get(rs, "kind")
    if ref_kind == "figure8":
        ref_args = {
            "t_end": float(rs.get("t_end", 5.0)),
            "amp_y": float(rs.get("amp_y", 0.5)),
            "amp_z": float(rs.get("amp_z", 0.5)),
        }
    elif ref_kind == "trot":
        if quadruped is None:
            raise ConfigError("trot reference needs the quadruped plant")
        ref_args = {
            "y0": float(rs.get("y0", 0.0)),
            "z_ref": quadruped.z_ref,
            "v_ref": quadruped.v_ref,
        }
    else:
        raise ConfigError(f"unknown reference kind {ref_kind!r}")

    hj_blocks = {}
    for axis in ("y", "z"):
        sec_name = f"hj_{axis}"
        if cp.has_section(sec_name):
            hj_blocks[axis] = _hj_block(cp[sec_name], axis)

    sim = _section(cp, "simulate")
    return Scenario(
        name=_get(top, "name"),
        plant_kind=plant_kind,
        mode=mode,
        seed=int(top.get("seed", 0)),
        quadcopter=quadcopter,
        quadruped=quadruped,
        delta_m=delta_m,
        drag_force=drag,
        clf_blocks=clf_blocks,
        mpc=mpc_cfg,
        reference_kind=ref_kind,
        reference_args=ref_args,
        disturbance=_disturbance(_section(cp, "disturbance")),
        hj_blocks=hj_blocks,
        duration=_get(sim, "duration", float),
        sim_dt=_get(sim, "dt", float),
        out_dir=top.get("out_dir", None),
    )
