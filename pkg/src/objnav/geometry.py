"""Poses and the discrete action set."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi
FORWARD_STEP_M = 0.25
TURN_ANGLE = math.radians(30.0)


def normalize_heading(theta: float) -> float:
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    if theta >= TWO_PI:
        theta -= TWO_PI
    return theta


@dataclass(frozen=True)
class Pose:
    """Planar pose: position in meters, heading in radians CCW from +x."""

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_heading(float(self.heading)))

    def to_list(self):
        return [self.x, self.y, self.heading]

    @classmethod
    def from_list(cls, values):
        x, y, heading = values
        return cls(float(x), float(y), float(heading))


class Action(str, enum.Enum):
    FORWARD = "forward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    STOP = "stop"
