"""IMU propagation (dead reckoning)"""

import math

from ..sensors.imu import ImuSample
from .state import AgentState


def propagate(state: AgentState, imu: ImuSample, dt_s: float) -> AgentState:
    """
    Advance the state by dt_s under a constant IMU reading

    The body acceleration is rotated into the world frame with the heading at
    the start of the interval; position integrates v*dt + a*dt^2/2.

    Args:
        state: state at the start of the interval
        imu: reading held over the interval
        dt_s: interval length in seconds

    Returns:
        State at state.t_ns + dt
    """
    if not dt_s > 0:
        raise ValueError(f"dt must be positive, got {dt_s}")
    dt_ns = int(round(dt_s * 1e9))
    if imu.t_ns > state.t_ns + dt_ns:
        raise ValueError(f"IMU sample at {imu.t_ns} ns lies after the interval end {state.t_ns + dt_ns} ns")
    c, s = math.cos(state.heading), math.sin(state.heading)
    awx = c * imu.ax - s * imu.ay
    awy = s * imu.ax + c * imu.ay
    return AgentState(
        t_ns=state.t_ns + dt_ns,
        x=state.x + state.vx * dt_s + 0.5 * awx * dt_s * dt_s,
        y=state.y + state.vy * dt_s + 0.5 * awy * dt_s * dt_s,
        vx=state.vx + awx * dt_s,
        vy=state.vy + awy * dt_s,
        heading=state.heading + imu.gyro_z * dt_s,
    )


def propagate_to(state: AgentState, imu: ImuSample, t_ns: int) -> AgentState:
    """Propagate up to an absolute time; returns the state unchanged when already there"""
    if t_ns == state.t_ns:
        return state
    return propagate(state, imu, (t_ns - state.t_ns) * 1e-9)
