"""Trial protocols and fitness functions for the two navigation tasks.

Phototaxis: reach the bright corner of a walled arena around a central box.
The per-step score rewards proximity to the goal line x + y = 1.6 (with the
denominator floored near the goal) minus elapsed steps; a trial keeps the
best step score and adds a flat bonus when the goal is actually reached.

T-maze: two phases of at most 4000 robot steps each.  Phase 1 targets the
left arm end (R1); success is retested five times from fresh start poses.
Phase 2 switches the target to the right arm (R2) without resetting any
network state, then retests again.  Fitness is the total steps needed
(lower is better), with fixed ceilings for failing either phase, and a trial
counts as solved only when every attempt succeeded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .config import DEFAULT_SETTINGS, Settings
from .neuro import Action, NetworkInstance
from .sim import ArenaSpec, RobotPose, RobotSpec, build_arena

OBJECTIVES = {"phototaxis": "maximize", "tmaze": "minimize"}


@dataclass(frozen=True)
class TrialConfig:
    max_steps: int = 8000
    phase_steps: int = 4000
    retests: int = 5
    goal_bonus: float = 2500.0
    goal_sum: float = 1.6
    fitness_floor: float = 0.1
    tmaze_max_fitness: float = 8000.0

    @classmethod
    def from_settings(cls, settings: Settings) -> "TrialConfig":
        return cls(max_steps=settings.max_steps,
                   phase_steps=settings.phase_steps,
                   retests=settings.retests,
                   goal_bonus=settings.goal_bonus,
                   goal_sum=settings.goal_sum,
                   fitness_floor=settings.fitness_floor,
                   tmaze_max_fitness=settings.tmaze_max_fitness)


@dataclass
class AttemptOutcome:
    phase: int
    attempt: int  # 0 is the scored run, 1..retests are stability retests
    reached: bool
    steps: int


@dataclass
class TrialResult:
    f: float
    st: int
    solved: bool
    phase1_steps: int | None = None
    phase2_steps: int | None = None
    retest_outcomes: list[AttemptOutcome] = field(default_factory=list)
    phase1_end_digest: str | None = None
    phase2_start_digest: str | None = None


def phototaxis_step_fitness(x: float, y: float, st: int,
                            cfg: TrialConfig = TrialConfig()) -> float:
    """Score of one robot step: proximity term minus steps taken."""
    denom = max(cfg.fitness_floor, cfg.goal_sum - (x + y))
    return 1000.0 / denom - st


def phototaxis_trial_fitness(best_step_fitness: float, reached_goal: bool,
                             cfg: TrialConfig = TrialConfig()) -> float:
    """Trial fitness: best per-step score, plus the goal bonus if reached."""
    return best_step_fitness + (cfg.goal_bonus if reached_goal else 0.0)


def tmaze_trial_fitness(phase1_steps: int | None, phase2_steps: int | None,
                        cfg: TrialConfig = TrialConfig()) -> float:
    """Total-steps fitness with fixed ceilings for failed phases.

    Never finding the first zone scores the maximum; finding it but failing
    the second phase charges the full second-phase budget on top.
    """
    if phase1_steps is None:
        return cfg.tmaze_max_fitness
    if phase2_steps is None:
        return cfg.phase_steps + phase1_steps
    return float(phase1_steps + phase2_steps)


def scale_inputs(reading: np.ndarray) -> np.ndarray:
    """Map sensor readings onto input-neuron drives.

    Sensors already produce values in [0, 1], so this is the identity; the
    order is fixed as light sensors on input neurons 0-2 and IR on 3-5.
    """
    reading = np.asarray(reading, dtype=np.float64)
    if reading.shape != (6,):
        raise ValueError("expected six sensor readings")
    return reading


def _leg_args(net: NetworkInstance, settings: Settings):
    s = settings
    return dict(
        m=net.m, sign=net.sign, ls=net.ls, syn_pre=net.syn_pre,
        syn_post=net.syn_post, syn_delay=net.syn_delay, syn_w=net.syn_w,
        syn_sc=net.syn_sc, syn_lrs=net.syn_lrs,
        syn_switches=net.syn_switches, acc=net.acc, kind=int(net.kind),
        a=s.a, b=s.b, c=s.c, m_theta=s.m_theta, theta_ls=s.theta_ls,
        s_n=s.s_n, delta_w=s.delta_w, w_lrs=s.w_lrs, w_hrs=s.w_hrs,
        w_min=s.w_min, w_max=s.w_max, processing_steps=s.processing_steps,
        v_full=s.v_full, radius=s.body_radius, axle=s.axle_length,
        ir_range=s.ir_range, light_half=s.light_half_dist,
        light_noise=s.light_noise, ir_noise=s.ir_noise,
        bump_reverse=s.bump_reverse, bump_penalty=s.bump_penalty,
    )


class _TraceBuffers:
    def __init__(self, capacity: int):
        self.x = np.zeros(capacity, dtype=np.float64)
        self.y = np.zeros(capacity, dtype=np.float64)
        self.h = np.zeros(capacity, dtype=np.float64)
        self.act = np.zeros(capacity, dtype=np.int64)
        self.f = np.zeros(capacity, dtype=np.float64)
        self.w = np.zeros(capacity, dtype=np.float64)
        self.sw = np.zeros(capacity, dtype=np.int64)
        self.rows: list[tuple] = []

    def collect(self, n: int) -> None:
        base = len(self.rows)
        for i in range(n):
            self.rows.append((base + i + 1, float(self.x[i]), float(self.y[i]),
                              float(self.h[i]), int(self.act[i]),
                              float(self.f[i]), float(self.w[i]),
                              int(self.sw[i])))


def _run_leg(net: NetworkInstance, arena: ArenaSpec, zone_name: str | None,
             budget: int, fitness_mode: int, settings: Settings,
             trace: _TraceBuffers | None):
    if zone_name is None:
        zone = arena.zones["goal"]
    else:
        zone = arena.zones[zone_name]
    xlo, xhi, ylo, yhi, summax = arena.start_box
    if trace is None:
        dummy_f = np.zeros(1, dtype=np.float64)
        dummy_i = np.zeros(1, dtype=np.int64)
        tx, ty, th, tf, tw = dummy_f, dummy_f, dummy_f, dummy_f, dummy_f
        ta, tsw = dummy_i, dummy_i
        trace_on = False
    else:
        tx, ty, th, ta = trace.x, trace.y, trace.h, trace.act
        tf, tw, tsw = trace.f, trace.w, trace.sw
        trace_on = True
    args = _leg_args(net, settings)
    reached, st, best_f, t, x, y, h, rows = _kernels.run_leg(
        args["m"], args["sign"], args["ls"], args["syn_pre"],
        args["syn_post"], args["syn_delay"], args["syn_w"], args["syn_sc"],
        args["syn_lrs"], args["syn_switches"], args["acc"], net.t,
        args["kind"], args["a"], args["b"], args["c"], args["m_theta"],
        args["theta_ls"], args["s_n"], args["delta_w"], args["w_lrs"],
        args["w_hrs"], args["w_min"], args["w_max"],
        args["processing_steps"], arena.segments, arena.bulb[0],
        arena.bulb[1], xlo, xhi, ylo, yhi, summax, zone.kind,
        zone.params[0], zone.params[1], zone.params[2], zone.params[3],
        args["v_full"], args["radius"], args["axle"], args["ir_range"],
        args["light_half"], args["light_noise"], args["ir_noise"],
        args["bump_reverse"], args["bump_penalty"], budget, fitness_mode,
        settings.goal_sum, settings.fitness_floor,
        trace_on, tx, ty, th, ta, tf, tw, tsw)
    net.t = t
    if trace is not None:
        trace.collect(rows)
    return bool(reached), int(st), float(best_f)


def run_phototaxis_trial(genome, seed: int,
                         settings: Settings = DEFAULT_SETTINGS,
                         arena: ArenaSpec | None = None,
                         trace: _TraceBuffers | None = None) -> TrialResult:
    """Evaluate one genome on phototaxis; deterministic in (genome, seed)."""
    if arena is None:
        arena = build_arena("phototaxis", settings)
    net = NetworkInstance.from_genome(genome, settings)
    _kernels.seed_trial_rng(seed & 0xFFFFFFFF)
    reached, st, best_f = _run_leg(net, arena, "goal", settings.max_steps,
                                   1, settings, trace)
    cfg = TrialConfig.from_settings(settings)
    return TrialResult(f=phototaxis_trial_fitness(best_f, reached, cfg),
                       st=st, solved=reached)


def run_tmaze_trial(genome, seed: int,
                    settings: Settings = DEFAULT_SETTINGS,
                    arena: ArenaSpec | None = None,
                    trace: _TraceBuffers | None = None) -> TrialResult:
    """Evaluate one genome on the two-phase T-maze.

    Start poses are re-randomised per attempt, but membrane potentials,
    spike queues, and device states are never reset, including across the
    phase switch.  A phase fails when its scored run or any retest misses
    the zone within the budget; any failure caps the fitness.
    """
    if arena is None:
        arena = build_arena("tmaze", settings)
    net = NetworkInstance.from_genome(genome, settings)
    _kernels.seed_trial_rng(seed & 0xFFFFFFFF)
    outcomes: list[AttemptOutcome] = []
    phase_steps: list[int | None] = [None, None]
    digests = [None, None]

    for phase, zone_name in ((1, "r1"), (2, "r2")):
        if phase == 2:
            digests[1] = net.state_digest()
        worst = 0
        ok = True
        for attempt in range(settings.retests + 1):
            reached, st, _ = _run_leg(net, arena, zone_name,
                                      settings.phase_steps, 0, settings,
                                      trace)
            outcomes.append(AttemptOutcome(phase=phase, attempt=attempt,
                                           reached=reached, steps=st))
            worst = max(worst, st)
            if not reached:
                ok = False
                break
        if phase == 1:
            digests[0] = net.state_digest()
        if not ok:
            break
        phase_steps[phase - 1] = worst

    cfg = TrialConfig.from_settings(settings)
    f = tmaze_trial_fitness(phase_steps[0], phase_steps[1], cfg)
    solved = phase_steps[0] is not None and phase_steps[1] is not None
    return TrialResult(f=float(f), st=int(f), solved=solved,
                       phase1_steps=phase_steps[0],
                       phase2_steps=phase_steps[1],
                       retest_outcomes=outcomes,
                       phase1_end_digest=digests[0],
                       phase2_start_digest=digests[1])


def run_trial(task: str, genome, seed: int,
              settings: Settings = DEFAULT_SETTINGS,
              arena: ArenaSpec | None = None,
              trace: _TraceBuffers | None = None) -> TrialResult:
    if task == "phototaxis":
        return run_phototaxis_trial(genome, seed, settings, arena, trace)
    if task == "tmaze":
        return run_tmaze_trial(genome, seed, settings, arena, trace)
    raise ValueError(f"unknown task {task!r}")


def make_evaluator(task: str, settings: Settings, seed_source):
    """Bind a task to a per-genome evaluator drawing trial seeds from
    `seed_source` (a numpy Generator)."""
    arena = build_arena(task, settings)

    def evaluate(genome) -> TrialResult:
        seed = int(seed_source.integers(0, 2**32 - 1))
        return run_trial(task, genome, seed, settings, arena)

    return evaluate


def replay_trial(genome, task: str, seed: int,
                 settings: Settings = DEFAULT_SETTINGS):
    """Re-run one genome with per-robot-step tracing.

    Returns (TrialResult, rows) where each row is (robot_step, x, y,
    heading, action, f, avg_weight, total_switches).
    """
    capacity = settings.max_steps + settings.phase_steps  # headroom for legs
    trace = _TraceBuffers(capacity)
    result = run_trial(task, genome, seed, settings, trace=trace)
    return result, trace.rows


# ---------------------------------------------------------------------------
# policy-driven trials (scripted controllers, verification)


def run_policy_trial(policy, task: str, seed: int,
                     settings: Settings = DEFAULT_SETTINGS,
                     record_path: bool = False):
    """Run a phototaxis-style trial with an arbitrary policy.

    The policy is called with the six sensor readings each robot step and
    must return an Action.  Uses the same kernels and noise stream as the
    network trials.  Only the phototaxis protocol is supported; the policy
    interface exists for scripted baselines and calibration checks.
    """
    if task != "phototaxis":
        raise ValueError("policy trials support only phototaxis")
    arena = build_arena(task, settings)
    spec = RobotSpec.from_settings(settings)
    cfg = TrialConfig.from_settings(settings)
    _kernels.seed_trial_rng(seed & 0xFFFFFFFF)
    xlo, xhi, ylo, yhi, summax = arena.start_box
    x, y = _kernels.sample_start_pose(xlo, xhi, ylo, yhi, summax)
    pose = RobotPose(x=float(x), y=float(y), heading=0.5 * np.pi)
    goal = arena.zones["goal"]
    best = -np.inf
    reached = False
    path = []
    reading = np.zeros(6, dtype=np.float64)
    while pose.st < cfg.max_steps:
        _kernels.sense_noisy(arena.segments, arena.bulb[0], arena.bulb[1],
                             pose.x, pose.y, pose.heading, spec.body_radius,
                             spec.ir_range, spec.light_half_dist,
                             spec.light_noise, spec.ir_noise, reading)
        action = policy(scale_inputs(reading))
        nx, ny, nh = _kernels.move_pose(arena.segments, pose.x, pose.y,
                                        pose.heading, int(action),
                                        spec.v_full, spec.axle_length,
                                        spec.body_radius)
        pose = RobotPose(x=float(nx), y=float(ny), heading=float(nh),
                         st=pose.st + 1)
        if _kernels.front_contact(arena.segments, pose.x, pose.y,
                                  pose.heading, spec.body_radius):
            bx, by = _kernels.reverse_pose(arena.segments, pose.x, pose.y,
                                           pose.heading, spec.body_radius,
                                           spec.bump_reverse, spec.v_full)
            pose = RobotPose(x=float(bx), y=float(by), heading=pose.heading,
                             st=pose.st + spec.bump_penalty)
        overflowed = pose.st > cfg.max_steps
        if overflowed:
            pose.st = cfg.max_steps
        best = max(best, phototaxis_step_fitness(pose.x, pose.y, pose.st,
                                                 cfg))
        if record_path:
            path.append((pose.st, pose.x, pose.y, pose.heading, int(action)))
        if not overflowed and goal.contains(pose.x, pose.y):
            reached = True
            break
        if pose.st >= cfg.max_steps:
            break
    result = TrialResult(f=phototaxis_trial_fitness(best, reached, cfg),
                         st=pose.st, solved=reached)
    return (result, path) if record_path else result
