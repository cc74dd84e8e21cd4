"""Hand-scripted controllers used to validate arena calibration.

These act directly on sensor readings, independently of the evolved
networks and their decoding path.
"""

from memsnn.neuro import Action


class LightSeeker:
    """Phototaxis baseline: back off from close walls toward the open side,
    otherwise steer toward the brighter front light sensor."""

    def __init__(self, ir_caution=0.4, light_eps=1e-4, ratio=1.1):
        self.ir_caution = ir_caution
        self.light_eps = light_eps
        self.ratio = ratio

    def __call__(self, reading):
        l_left, l_right, l_rear = reading[0], reading[1], reading[2]
        ir_left, ir_right = reading[3], reading[4]
        if ir_left > self.ir_caution or ir_right > self.ir_caution:
            return Action.RIGHT if ir_left >= ir_right else Action.LEFT
        if l_left > self.light_eps or l_right > self.light_eps:
            if l_left > l_right * self.ratio:
                return Action.LEFT
            if l_right > l_left * self.ratio:
                return Action.RIGHT
            return Action.FORWARD
        if l_rear > self.light_eps:
            return Action.RIGHT  # light behind: swing around
        return Action.FORWARD


class AlwaysForward:
    def __call__(self, reading):
        return Action.FORWARD
