"""Discrete-time leaky integrate-and-fire controller network.

Networks have 6 input neurons (3 light + 3 IR sensors), a variable hidden
layer, and 2 output neurons.  Spikes between hidden neurons arrive after a
delay equal to their index distance (floored at one step); all other links
have a one-step delay.  Every neuron receives a constant excitation each
step, so an unconnected neuron fires tonically with a period of three steps.

A robot step runs the network for a fixed number of processing steps with
the sensor inputs held, then thresholds the two output spike counts into one
of three actions.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import _kernels
from .config import DEFAULT_SETTINGS, Settings
from .synapse import SynapseKind

N_INPUTS = 6
N_OUTPUTS = 2


class Action(IntEnum):
    FORWARD = _kernels.FORWARD
    LEFT = _kernels.LEFT
    RIGHT = _kernels.RIGHT


class Layer(IntEnum):
    INPUT = 0
    HIDDEN = 1
    OUTPUT = 2


# a connection site is (pre_layer, pre_index, post_layer, post_index)
Site = tuple[int, int, int, int]


@dataclass(frozen=True)
class NeuronParams:
    a: float = 0.3       # per-step excitation
    b: float = 0.05      # leak fraction
    c: float = 0.0       # reset potential
    m_theta: float = 0.6 # firing threshold

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0 or self.m_theta <= 0:
            raise ValueError("a, b and m_theta must be positive")
        if self.c < 0:
            raise ValueError("reset potential must be non-negative")
        if not self.m_theta > self.c:
            raise ValueError("threshold must exceed the reset potential")


DEFAULT_NEURON_PARAMS = NeuronParams()


def neuron_step(m: float, drive: float,
                params: NeuronParams = DEFAULT_NEURON_PARAMS) -> tuple[float, bool]:
    """One integrate-and-fire update; returns (new potential, spiked)."""
    m_new, fired = _kernels.neuron_update(m, drive, params.a, params.b,
                                          params.c, params.m_theta)
    return float(m_new), bool(fired)


def connection_delay(pre: tuple[int, int], post: tuple[int, int]) -> int:
    """Transmission delay in processing steps for a connection site.

    Hidden-to-hidden spikes travel one step per index of separation
    (minimum one); links crossing layers always take one step.
    """
    pre_layer, pre_idx = pre
    post_layer, post_idx = post
    if pre_layer == Layer.HIDDEN and post_layer == Layer.HIDDEN:
        return max(1, abs(pre_idx - post_idx))
    return 1


def decode_action(count_a: int, count_b: int,
                  processing_steps: int = 21) -> Action:
    """Threshold the two output spike counts into an action.

    A count above half the processing steps is "high".  High/high and
    low/low both map to Forward; a single high output turns toward its side.
    """
    need = processing_steps // 2 + 1
    high_a = count_a >= need
    high_b = count_b >= need
    if high_a and not high_b:
        return Action.LEFT
    if high_b and not high_a:
        return Action.RIGHT
    return Action.FORWARD


class NetworkInstance:
    """Mutable runtime state of one controller during one trial.

    Built from a genome's topology; membrane potentials, last-spike
    counters, in-flight spikes, and device states all live in flat arrays so
    the compiled kernels can run the trial without boxing.
    """

    def __init__(self, kind: SynapseKind, hidden_signs: list[int],
                 connections: list[tuple[Site, float]],
                 settings: Settings = DEFAULT_SETTINGS):
        self.kind = SynapseKind(kind)
        self.settings = settings
        self.n_hidden = len(hidden_signs)
        n = N_INPUTS + self.n_hidden + N_OUTPUTS
        self.n_neurons = n

        sign = np.ones(n, dtype=np.float64)
        for j, s in enumerate(hidden_signs):
            if s not in (-1, 1):
                raise ValueError("hidden neuron sign must be +1 or -1")
            sign[N_INPUTS + j] = s
        self.sign = sign

        order = sorted(connections, key=lambda cw: cw[0])
        n_syn = len(order)
        pre = np.zeros(n_syn, dtype=np.int64)
        post = np.zeros(n_syn, dtype=np.int64)
        delay = np.zeros(n_syn, dtype=np.int64)
        w = np.zeros(n_syn, dtype=np.float64)
        self.sites: list[Site] = []
        for s, (site, weight) in enumerate(order):
            pre_layer, pre_idx, post_layer, post_idx = site
            pre[s] = self._global_index(pre_layer, pre_idx)
            post[s] = self._global_index(post_layer, post_idx)
            delay[s] = connection_delay((pre_layer, pre_idx),
                                        (post_layer, post_idx))
            if self.kind == SynapseKind.UNIPOLAR:
                w[s] = settings.w_lrs
            elif self.kind == SynapseKind.BIPOLAR:
                w[s] = settings.w_bipolar_init
            else:
                w[s] = weight
            self.sites.append(site)
        # arrays sorted by presynaptic index keep spike fan-out cache friendly
        by_pre = np.argsort(pre, kind="stable")
        self.syn_pre = pre[by_pre]
        self.syn_post = post[by_pre]
        self.syn_delay = delay[by_pre]
        self.syn_w = w[by_pre]
        self.sites = [self.sites[i] for i in by_pre]
        self.syn_sc = np.zeros(n_syn, dtype=np.int64)
        self.syn_lrs = np.ones(n_syn, dtype=np.bool_)
        self.syn_switches = np.zeros(n_syn, dtype=np.int64)

        depth = int(self.syn_delay.max()) + 1 if n_syn else 2
        self.acc = np.zeros((depth, n), dtype=np.float64)
        self.m = np.zeros(n, dtype=np.float64)
        self.ls = np.zeros(n, dtype=np.int64)
        self.t = 0
        self._spiked = np.zeros(n, dtype=np.bool_)
        self._outcomes = np.zeros(n_syn, dtype=np.int64)

    def _global_index(self, layer: int, idx: int) -> int:
        if layer == Layer.INPUT:
            if not 0 <= idx < N_INPUTS:
                raise ValueError(f"input index {idx} out of range")
            return idx
        if layer == Layer.HIDDEN:
            if not 0 <= idx < self.n_hidden:
                raise ValueError(f"hidden index {idx} out of range")
            return N_INPUTS + idx
        if layer == Layer.OUTPUT:
            if not 0 <= idx < N_OUTPUTS:
                raise ValueError(f"output index {idx} out of range")
            return N_INPUTS + self.n_hidden + idx
        raise ValueError(f"unknown layer {layer}")

    @classmethod
    def from_genome(cls, genome, settings: Settings = DEFAULT_SETTINGS
                    ) -> "NetworkInstance":
        return cls(genome.kind, list(genome.hidden_signs),
                   sorted(genome.connections.items()), settings)

    @property
    def n_synapses(self) -> int:
        return len(self.syn_pre)

    def _consts(self):
        s = self.settings
        return (int(self.kind), s.a, s.b, s.c, s.m_theta, s.theta_ls, s.s_n,
                s.delta_w, s.w_lrs, s.w_hrs, s.w_min, s.w_max)

    def processing_step(self, inputs) -> tuple[np.ndarray, np.ndarray]:
        """Advance one processing step.

        `inputs` are the six scaled sensor values driving the input layer.
        Returns (output spike flags, per-synapse coincidence outcome codes).
        """
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.shape != (N_INPUTS,):
            raise ValueError("expected six input values")
        kind, a, b, c, m_theta, theta_ls, s_n, dw, wl, wh, wmin, wmax = self._consts()
        self.t = _kernels.step_network(
            self.m, self.sign, self.ls, self.syn_pre, self.syn_post,
            self.syn_delay, self.syn_w, self.syn_sc, self.syn_lrs,
            self.syn_switches, self.acc, self.t, inputs, kind,
            a, b, c, m_theta, theta_ls, s_n, dw, wl, wh, wmin, wmax,
            self._spiked, self._outcomes)
        return self._spiked[-N_OUTPUTS:].copy(), self._outcomes.copy()

    def robot_step(self, inputs) -> Action:
        """Run one robot step's processing block and decode the action."""
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.shape != (N_INPUTS,):
            raise ValueError("expected six input values")
        kind, a, b, c, m_theta, theta_ls, s_n, dw, wl, wh, wmin, wmax = self._consts()
        self.t, action = _kernels.snn_act(
            self.m, self.sign, self.ls, self.syn_pre, self.syn_post,
            self.syn_delay, self.syn_w, self.syn_sc, self.syn_lrs,
            self.syn_switches, self.acc, self.t, inputs, kind,
            a, b, c, m_theta, theta_ls, s_n, dw, wl, wh, wmin, wmax,
            self.settings.processing_steps, self._spiked, self._outcomes)
        return Action(action)

    def copy(self) -> "NetworkInstance":
        dup = object.__new__(NetworkInstance)
        dup.kind = self.kind
        dup.settings = self.settings
        dup.n_hidden = self.n_hidden
        dup.n_neurons = self.n_neurons
        dup.sites = list(self.sites)
        for name in ("sign", "syn_pre", "syn_post", "syn_delay", "syn_w",
                     "syn_sc", "syn_lrs", "syn_switches", "acc", "m", "ls",
                     "_spiked", "_outcomes"):
            setattr(dup, name, getattr(self, name).copy())
        dup.t = self.t
        return dup

    def state_digest(self) -> str:
        """Hash of the full dynamic state (ring buffer in logical order)."""
        depth = self.acc.shape[0]
        logical = np.concatenate(
            [self.acc[(self.t + k) % depth] for k in range(depth)])
        blob = hashlib.sha256()
        for arr in (self.m, self.ls.astype(np.int64), logical, self.syn_w,
                    self.syn_sc, self.syn_lrs.astype(np.uint8),
                    self.syn_switches):
            blob.update(np.ascontiguousarray(arr).tobytes())
        return blob.hexdigest()
