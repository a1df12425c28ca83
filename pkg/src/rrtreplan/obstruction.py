"""Is a visible moving obstacle in the way?

The robot compares the bearing to the obstacle with its own heading, then its
heading with the obstacle's observed heading, all as wrapped degree
differences.
"""
from __future__ import annotations

import enum
import math

from .dynamics import MovingObstacle, RobotState, estimate_velocity
from .geometry import Point, Segment, Vector, distance, normalize_angle, segment_intersects_disk
from .world import World


class MotionClass(enum.Enum):
    SAME_DIRECTION = "SameDirection"
    HEAD_ON = "HeadOn"
    CROSSING = "Crossing"
    NOT_TOWARD = "NotTowardObstacle"

    def __str__(self):
        return self.value


def direction_angle(robot: Point, obs: Point) -> float:
    if robot.x == obs.x and robot.y == obs.y:
        raise ValueError("robot and obstacle positions coincide")
    return normalize_angle(math.degrees(math.atan2(obs.y - robot.y, obs.x - robot.x)))


def velocity_angle(v: Vector) -> float:
    if v.vi == 0.0 and v.vj == 0.0:
        raise ValueError("zero velocity has no direction")
    return normalize_angle(math.degrees(math.atan2(v.vj, v.vi)))


def classify(robot_pos: Point, robot_vel: Vector, obs_pos: Point, obs_vel: Vector,
             angle_thresh: float) -> MotionClass:
    robot_heading = velocity_angle(robot_vel)
    toward = abs(normalize_angle(direction_angle(robot_pos, obs_pos) - robot_heading))
    if toward >= angle_thresh:
        return MotionClass.NOT_TOWARD
    diff = abs(normalize_angle(robot_heading - velocity_angle(obs_vel)))
    if diff < angle_thresh:
        return MotionClass.SAME_DIRECTION
    if diff > 180.0 - angle_thresh:
        return MotionClass.HEAD_ON
    return MotionClass.CROSSING


def assess(robot: RobotState, obs: MovingObstacle, world: World) -> tuple[bool, MotionClass | None]:
    """Blocked verdict and motion class (None when a velocity is zero).

    Head-on always blocks. Same-direction blocks only once the obstacle disk,
    grown by the robot radius, overlaps the robot's current leg; otherwise the
    robot just follows. Anything visible closer than ``proximity_alarm``
    blocks. A stationary obstacle is judged by the leg-overlap test alone.
    """
    v_obs = estimate_velocity(obs)
    if v_obs is None:
        raise ValueError(f"obstacle {obs.id} has no observed velocity yet")
    p = world.params
    close = distance(robot.position, obs.position) < p.proximity_alarm
    dest = robot.destination if robot.destination is not None else robot.position
    on_leg = segment_intersects_disk(Segment(robot.position, dest), obs.position,
                                     obs.radius + p.robot_radius)
    moving = not (v_obs.vi == 0.0 and v_obs.vj == 0.0)
    heading = not (robot.velocity.vi == 0.0 and robot.velocity.vj == 0.0)
    if not (moving and heading) or robot.position == obs.position:
        return close or on_leg, None
    cls = classify(robot.position, robot.velocity, obs.position, v_obs, p.angle_thresh)
    if cls is MotionClass.HEAD_ON:
        return True, cls
    if cls is MotionClass.SAME_DIRECTION:
        return close or on_leg, cls
    return close, cls


def is_path_blocked(robot: RobotState, obs: MovingObstacle, world: World) -> bool:
    return assess(robot, obs, world)[0]
