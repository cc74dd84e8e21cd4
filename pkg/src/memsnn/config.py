"""Numeric constants shared by the network, devices, simulator, and GA.

Every value here is overridable from the CLI (``--override key=value``), so
experiments can deviate from the defaults without code edits.  Unknown keys
are rejected by :meth:`Settings.with_overrides`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Settings:
    # neuron dynamics
    a: float = 0.3          # per-step excitation added to every neuron
    b: float = 0.05         # leak fraction of the membrane potential
    c: float = 0.0          # post-spike reset potential
    m_theta: float = 0.6    # firing threshold
    ls_on_spike: int = 3    # last-spike counter value set when a neuron fires

    # synapse devices
    theta_ls: int = 4       # coincidence threshold on summed last-spike counters
    s_n: int = 4            # unipolar sensitivity (consecutive events per flip)
    delta_w: float = 0.001  # bipolar increment per event
    w_lrs: float = 0.9
    w_hrs: float = 0.1
    w_bipolar_init: float = 0.5
    w_min: float = 0.0
    w_max: float = 1.0

    # network shape / timing
    processing_steps: int = 21  # processing steps per robot step
    hidden_init: int = 9

    # robot body and sensors
    v_full: float = 0.005       # full wheel displacement per robot step
    body_radius: float = 0.03
    axle_length: float = 0.05
    ir_range: float = 0.2       # IR sensors saturate to 0 beyond this distance
    light_half_dist: float = 0.5
    ir_noise: float = 0.02
    light_noise: float = 0.1
    bump_reverse: float = 0.05  # reversal distance after a front bump
    bump_penalty: int = 10      # robot steps charged per bump

    # trial protocol
    max_steps: int = 8000
    phase_steps: int = 4000     # per T-maze phase (and per retest)
    retests: int = 5
    goal_bonus: float = 2500.0
    goal_sum: float = 1.6       # phototaxis goal line x + y > goal_sum
    fitness_floor: float = 0.1  # denominator floor in the phototaxis formula
    tmaze_max_fitness: float = 8000.0

    # genetic algorithm
    pop_size: int = 100
    init_connect_p: float = 0.5
    excitatory_p: float = 0.5
    rate_seed_max: float = 0.5  # self-adaptive rates start uniform in [0, this]
    rate_floor: float = 0.001
    rate_ceil: float = 1.0
    weight_step: float = 0.1    # constant-synapse weight mutation is U(-this, this)

    def with_overrides(self, overrides: dict[str, float]) -> "Settings":
        """Return a copy with the given fields replaced.

        Raises KeyError naming the first unknown key.
        """
        valid = {f.name: f.type for f in dataclasses.fields(self)}
        coerced = {}
        for key, value in overrides.items():
            if key not in valid:
                raise KeyError(key)
            current = getattr(self, key)
            coerced[key] = type(current)(value)
        return dataclasses.replace(self, **coerced)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


DEFAULT_SETTINGS = Settings()

OVERRIDABLE_KEYS = tuple(f.name for f in dataclasses.fields(Settings))
