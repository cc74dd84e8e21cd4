"""Behavioural synapse models: bistable unipolar, incremental bipolar,
and the fixed resistor baseline.

Plasticity is driven by coincidence detection on the neurons' last-spike
counters: each counter is set to 3 when its neuron fires and decays by 1 per
processing step, so the summed pre+post value measures how close in time the
two sides fired.  A sum above ``theta_ls`` is a coincidence event.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import IntEnum

from . import _kernels


class SynapseKind(IntEnum):
    UNIPOLAR = _kernels.UNIPOLAR
    BIPOLAR = _kernels.BIPOLAR
    CONSTANT = _kernels.CONSTANT


class Coincidence(IntEnum):
    """Outcome of one synapse's coincidence check for one processing step."""

    NONE = _kernels.COINC_NONE
    PRE_RECENT = _kernels.COINC_PRE_RECENT    # pre fired more recently (post fired first)
    POST_RECENT = _kernels.COINC_POST_RECENT  # post fired more recently (pre fired first)
    SIMULTANEOUS = _kernels.COINC_SIMULTANEOUS


@dataclass(frozen=True)
class SynapseParams:
    theta_ls: int = 4
    s_n: int = 4            # consecutive coincidences needed for a unipolar flip
    delta_w: float = 0.001  # bipolar weight change per event
    w_lrs: float = 0.9
    w_hrs: float = 0.1
    w_bipolar_init: float = 0.5
    w_min: float = 0.0
    w_max: float = 1.0

    def __post_init__(self):
        if not self.w_hrs < self.w_lrs:
            raise ValueError("w_hrs must be below w_lrs")
        if not (0.0 <= self.w_min < self.w_max <= 1.0):
            raise ValueError("weight range must satisfy 0 <= w_min < w_max <= 1")
        if self.s_n < 1:
            raise ValueError("s_n must be at least 1")


DEFAULT_SYNAPSE_PARAMS = SynapseParams()


@dataclass(frozen=True)
class SynapseState:
    """Per-device state; `s_c` and `lrs` are only meaningful for unipolar."""

    kind: SynapseKind
    w: float
    s_c: int = 0
    lrs: bool = True
    switch_count: int = 0


def detect_coincidence(ls_pre: int, ls_post: int,
                       theta_ls: int = 4) -> Coincidence:
    """Classify one processing step's pre/post last-spike counters.

    Counters decay over time, so the side with the higher value fired more
    recently; equal values mean the two neurons fired on the same step.
    """
    return Coincidence(_kernels.coincidence_code(ls_pre, ls_post, theta_ls))


def unipolar_update(state: SynapseState, outcome: Coincidence,
                    params: SynapseParams = DEFAULT_SYNAPSE_PARAMS) -> SynapseState:
    """Advance the consecutive-coincidence counter and flip on saturation.

    Any coincidence (regardless of firing order) increments the counter; a
    quiet step decrements it, floored at zero.  Reaching ``s_n`` toggles
    LRS/HRS and resets the counter.
    """
    w, s_c, lrs, flipped = _kernels.unipolar_step(
        state.w, state.s_c, state.lrs, int(outcome),
        params.s_n, params.w_lrs, params.w_hrs)
    return dataclasses.replace(
        state, w=w, s_c=s_c, lrs=bool(lrs),
        switch_count=state.switch_count + (1 if flipped else 0))


def bipolar_update(state: SynapseState, outcome: Coincidence,
                   params: SynapseParams = DEFAULT_SYNAPSE_PARAMS) -> SynapseState:
    """Potentiate when the post side fired last, depress when the pre side
    did, and leave same-step firing unchanged.  Weight clamps to the device
    range."""
    w, changed = _kernels.bipolar_step(
        state.w, int(outcome), params.delta_w, params.w_min, params.w_max)
    return dataclasses.replace(
        state, w=w, switch_count=state.switch_count + (1 if changed else 0))


def constant_update(state: SynapseState, outcome: Coincidence,
                    params: SynapseParams = DEFAULT_SYNAPSE_PARAMS) -> SynapseState:
    """Non-plastic baseline: identity."""
    return state


_UPDATERS = {
    SynapseKind.UNIPOLAR: unipolar_update,
    SynapseKind.BIPOLAR: bipolar_update,
    SynapseKind.CONSTANT: constant_update,
}


def apply_update(state: SynapseState, outcome: Coincidence,
                 params: SynapseParams = DEFAULT_SYNAPSE_PARAMS) -> SynapseState:
    return _UPDATERS[state.kind](state, outcome, params)


def initial_state(kind: SynapseKind, constant_w: float = 0.5,
                  params: SynapseParams = DEFAULT_SYNAPSE_PARAMS) -> SynapseState:
    """Device state at trial start for the given kind."""
    if kind == SynapseKind.UNIPOLAR:
        return SynapseState(kind=kind, w=params.w_lrs, lrs=True)
    if kind == SynapseKind.BIPOLAR:
        return SynapseState(kind=kind, w=params.w_bipolar_init)
    return SynapseState(kind=kind, w=constant_w)
