"""2D arena simulation: differential-drive kinematics, ray-cast light and
proximity sensing with multiplicative noise, and bump handling.

Both task arenas live in the unit square [-1, 1]^2.  The robot is a disc;
collision handling slides oblique motion along walls and never lets the body
penetrate.  Light readings combine cosine angular sensitivity with
inverse-square falloff and hard occlusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .config import DEFAULT_SETTINGS, Settings
from .neuro import Action


@dataclass
class RobotPose:
    x: float
    y: float
    heading: float  # radians, north (+y) is pi/2
    st: int = 0     # cumulative robot-step counter including penalties


@dataclass(frozen=True)
class RobotSpec:
    body_radius: float = 0.03
    axle_length: float = 0.05
    v_full: float = 0.005
    ir_range: float = 0.2
    light_half_dist: float = 0.5
    ir_noise: float = 0.02
    light_noise: float = 0.1
    bump_reverse: float = 0.05
    bump_penalty: int = 10

    @classmethod
    def from_settings(cls, settings: Settings) -> "RobotSpec":
        return cls(body_radius=settings.body_radius,
                   axle_length=settings.axle_length,
                   v_full=settings.v_full,
                   ir_range=settings.ir_range,
                   light_half_dist=settings.light_half_dist,
                   ir_noise=settings.ir_noise,
                   light_noise=settings.light_noise,
                   bump_reverse=settings.bump_reverse,
                   bump_penalty=settings.bump_penalty)


@dataclass(frozen=True)
class Zone:
    """Either a half-plane x + y > threshold or an axis-aligned rectangle."""

    kind: int  # 0 half-plane, 1 rectangle
    params: tuple[float, float, float, float]

    def contains(self, x: float, y: float) -> bool:
        z0, z1, z2, z3 = self.params
        return bool(_kernels.in_zone(self.kind, z0, z1, z2, z3, x, y))


@dataclass(frozen=True)
class ArenaSpec:
    name: str
    segments: np.ndarray          # (n, 4) rows of (ax, ay, bx, by)
    bulb: tuple[float, float]
    start_box: tuple[float, float, float, float, float]  # xlo,xhi,ylo,yhi,summax
    zones: dict[str, Zone] = field(default_factory=dict)


def _square(lo: float, hi: float) -> list[tuple[float, float, float, float]]:
    return [(lo, lo, hi, lo), (hi, lo, hi, hi),
            (hi, hi, lo, hi), (lo, hi, lo, lo)]


def build_arena(task: str, settings: Settings = DEFAULT_SETTINGS) -> ArenaSpec:
    """Construct the wall set, light, start region, and zones for a task."""
    r = settings.body_radius
    if task == "phototaxis":
        segs = _square(-1.0, 1.0) + _square(-0.4, 0.4)
        return ArenaSpec(
            name="phototaxis",
            segments=np.array(segs, dtype=np.float64),
            bulb=(1.0, 1.0),
            start_box=(-1.0 + r, -0.5 - r, -1.0 + r, -0.5 - r, -1.5),
            zones={"goal": Zone(0, (settings.goal_sum, 0.0, 0.0, 0.0))},
        )
    if task == "tmaze":
        # T shape: stem |x| <= 0.4 below y = 0.2, crossbar spanning the top;
        # built as the outer square plus two filled corner blocks
        left_block = [(-1.0, -1.0, -0.4, -1.0), (-0.4, -1.0, -0.4, 0.2),
                      (-0.4, 0.2, -1.0, 0.2), (-1.0, 0.2, -1.0, -1.0)]
        right_block = [(0.4, -1.0, 1.0, -1.0), (1.0, -1.0, 1.0, 0.2),
                       (1.0, 0.2, 0.4, 0.2), (0.4, 0.2, 0.4, -1.0)]
        segs = _square(-1.0, 1.0) + left_block + right_block
        inf = math.inf
        return ArenaSpec(
            name="tmaze",
            segments=np.array(segs, dtype=np.float64),
            bulb=(0.5, 1.0),
            start_box=(-0.4 + r, 0.4 - r, -1.0 + r, -0.4, inf),
            zones={"r1": Zone(1, (-inf, -0.8, 0.2, inf)),
                   "r2": Zone(1, (0.8, inf, 0.2, inf))},
        )
    raise ValueError(f"unknown task {task!r}")


def raycast(origin, direction, arena: ArenaSpec) -> float:
    """Distance from origin along a unit direction to the nearest segment;
    inf when nothing is hit."""
    ox, oy = origin
    dx, dy = direction
    return float(_kernels.raycast_all(arena.segments, ox, oy, dx, dy))


def kinematics_step(pose: RobotPose, action: Action, spec: RobotSpec,
                    arena: ArenaSpec | None = None) -> RobotPose:
    """One robot step of differential-drive motion.

    Forward drives both wheels fully; turns halve the inner wheel.  When an
    arena is given, the resulting position is slide-or-stop resolved against
    its walls.  The pose's step counter advances by one.
    """
    if arena is None:
        segments = np.zeros((0, 4), dtype=np.float64)
    else:
        segments = arena.segments
    x, y, h = _kernels.move_pose(segments, pose.x, pose.y, pose.heading,
                                 int(action), spec.v_full, spec.axle_length,
                                 spec.body_radius)
    return RobotPose(x=float(x), y=float(y), heading=float(h), st=pose.st + 1)


def sense(pose: RobotPose, arena: ArenaSpec, rng: np.random.Generator | None,
          spec: RobotSpec | None = None) -> np.ndarray:
    """Six sensor readings in [0, 1]: light then IR for the mounts at
    +45, -45, and 180 degrees.  Pass ``rng=None`` for noiseless values."""
    if spec is None:
        spec = RobotSpec()
    out = np.zeros(6, dtype=np.float64)
    _kernels.sense_raw(arena.segments, arena.bulb[0], arena.bulb[1],
                       pose.x, pose.y, pose.heading, spec.body_radius,
                       spec.ir_range, spec.light_half_dist, out)
    if rng is not None:
        out[:3] *= 1.0 + rng.uniform(-spec.light_noise, spec.light_noise, 3)
        out[3:] *= 1.0 + rng.uniform(-spec.ir_noise, spec.ir_noise, 3)
        np.clip(out, 0.0, 1.0, out=out)
    return out


def check_bump(pose: RobotPose, arena: ArenaSpec,
               spec: RobotSpec) -> tuple[RobotPose, bool]:
    """Reverse out of front-arc contact.

    Contact anywhere within 90 degrees of the heading triggers a reversal
    along the heading (stopping early at obstructions) and charges the bump
    penalty to the step counter.  Returns (pose, reversed?).
    """
    if not _kernels.front_contact(arena.segments, pose.x, pose.y,
                                  pose.heading, spec.body_radius):
        return pose, False
    x, y = _kernels.reverse_pose(arena.segments, pose.x, pose.y, pose.heading,
                                 spec.body_radius, spec.bump_reverse,
                                 spec.v_full)
    return RobotPose(x=float(x), y=float(y), heading=pose.heading,
                     st=pose.st + spec.bump_penalty), True


def penetration(pose: RobotPose, arena: ArenaSpec, spec: RobotSpec) -> float:
    """Overlap depth of the body into the nearest wall (<= 0 when clear)."""
    return float(_kernels.penetration_depth(arena.segments, pose.x, pose.y,
                                            spec.body_radius))
