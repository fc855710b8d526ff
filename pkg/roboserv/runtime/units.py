"""Navigation, reaction and command units plus the chassis command sink"""

import logging
import math
import re
import socket
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Deque, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..sensors.trajectory import wrap_angle
from ..speech.commands import Command
from ..vision.network import Label

logger = logging.getLogger(__name__)

TURN_ANGLE_RAD = math.pi / 2.0


@dataclass(frozen=True)
class ChassisCommand:
    t_ns: int
    linear: float  # m/s
    angular: float  # rad/s

    @property
    def is_zero(self) -> bool:
        return self.linear == 0.0 and self.angular == 0.0

    def to_line(self) -> str:
        return f"{self.t_ns},{self.linear:.6f},{self.angular:.6f}"


@dataclass(frozen=True)
class NavigationParams:
    """Proportional go-to-goal gains and limits"""
    k_linear: float = 0.8
    k_angular: float = 2.0
    max_linear: float = 1.0  # m/s
    max_angular: float = 1.0  # rad/s
    goal_tolerance: float = 0.05  # m
    rate_hz: float = 20.0

    def __post_init__(self):
        for name in ("k_linear", "k_angular", "max_linear", "max_angular", "goal_tolerance", "rate_hz"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    def to_dict(self) -> dict:
        return {"k_linear": self.k_linear, "k_angular": self.k_angular, "max_linear": self.max_linear,
                "max_angular": self.max_angular, "goal_tolerance": self.goal_tolerance, "rate_hz": self.rate_hz}


def navigation_step(pose, goal: Tuple[float, float], params: NavigationParams = NavigationParams(),
                    t_ns: Optional[int] = None) -> ChassisCommand:
    """
    One step of the go-to-goal controller

    Args:
        pose: anything with x, y, heading (and t_ns unless given)
        goal: target position in the world frame
        params: gains and limits

    Returns:
        Forward speed scaled by the heading alignment (never backwards) and
        an angular rate proportional to the bearing error; zero at the goal
    """
    t = pose.t_ns if t_ns is None else t_ns
    dx, dy = goal[0] - pose.x, goal[1] - pose.y
    distance = math.hypot(dx, dy)
    if distance <= params.goal_tolerance:
        return ChassisCommand(t, 0.0, 0.0)
    bearing_error = float(wrap_angle(math.atan2(dy, dx) - pose.heading))
    linear = min(params.k_linear * distance, params.max_linear) * max(math.cos(bearing_error), 0.0)
    angular = max(-params.max_angular, min(params.max_angular, params.k_angular * bearing_error))
    return ChassisCommand(t, linear, angular)


@dataclass(frozen=True)
class ReactionRule:
    label: str
    action: str
    min_score: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.min_score <= 1.0:
            raise ValueError(f"rule {self.label!r}: min_score must be in [0, 1], got {self.min_score}")

    def to_dict(self) -> dict:
        return {"label": self.label, "action": self.action, "min_score": self.min_score}


def react_to_labels(labels: Sequence[Label], rules: Sequence[ReactionRule]) -> Optional[str]:
    """Action of the first rule matching the top label at or above its threshold"""
    if not labels:
        return None
    top = labels[0]
    for rule in rules:
        if rule.label == top.name and top.score >= rule.min_score:
            return rule.action
    return None


@dataclass(frozen=True)
class ActionRecord:
    t_ns: int
    source: str  # "speech", "vision" or "navigation"
    action: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {"t_ns": self.t_ns, "source": self.source, "action": self.action, "detail": self.detail}


class Navigator:
    """
    Decision unit owning the goal queue and the chassis output

    A stop pauses navigation and cancels queued turns; go resumes the active
    goal. Turns run in place at the angular limit for a quarter revolution
    and take precedence over goal following.
    """

    def __init__(self, goals: Sequence[Tuple[float, float]] = (), params: NavigationParams = NavigationParams()):
        self.params = params
        self.goals: Deque[Tuple[float, float]] = deque((float(x), float(y)) for x, y in goals)
        self.stopped = False
        self.turns: Deque[float] = deque()  # +1 left, -1 right
        self._turn_end_ns: Optional[int] = None
        self._turn_sign = 0.0
        self.actions: List[ActionRecord] = []

    @property
    def goal(self) -> Optional[Tuple[float, float]]:
        return self.goals[0] if self.goals else None

    @property
    def active(self) -> bool:
        return not self.stopped and (self.goal is not None or bool(self.turns) or self._turn_end_ns is not None)

    def _log(self, t_ns: int, source: str, action: str, detail: str = "") -> ActionRecord:
        record = ActionRecord(t_ns, source, action, detail)
        self.actions.append(record)
        logger.info("t=%.3f s %s -> %s %s", t_ns * 1e-9, source, action, detail)
        return record

    def handle_command(self, command: Command, t_ns: int) -> ActionRecord:
        if command is Command.STOP:
            if not self.active:
                return self._log(t_ns, "speech", "stop", "already idle")
            self.stopped = True
            self.turns.clear()
            self._turn_end_ns = None
            return self._log(t_ns, "speech", "stop", "navigation paused")
        if command is Command.GO:
            if self.goal is None:
                return self._log(t_ns, "speech", "go", "no goal set")
            self.stopped = False
            return self._log(t_ns, "speech", "go", f"resume towards {self.goal}")
        self.stopped = False
        self.turns.append(1.0 if command is Command.LEFT else -1.0)
        return self._log(t_ns, "speech", command.value, "turn queued")

    def react(self, action: str, t_ns: int, detail: str = "") -> ActionRecord:
        return self._log(t_ns, "vision", action, detail)

    def step(self, pose, t_ns: int) -> ChassisCommand:
        """Chassis command for the current pose"""
        if self.stopped:
            return ChassisCommand(t_ns, 0.0, 0.0)
        if self._turn_end_ns is not None and t_ns >= self._turn_end_ns:
            self._turn_end_ns = None
        if self._turn_end_ns is None and self.turns:
            self._turn_sign = self.turns.popleft()
            self._turn_end_ns = t_ns + int(round(TURN_ANGLE_RAD / self.params.max_angular * 1e9))
        if self._turn_end_ns is not None:
            return ChassisCommand(t_ns, 0.0, self._turn_sign * self.params.max_angular)
        while self.goal is not None:
            command = navigation_step(pose, self.goal, self.params, t_ns)
            if not command.is_zero:
                return command
            reached = self.goals.popleft()
            self._log(t_ns, "navigation", "goal-reached", f"{reached}")
        return ChassisCommand(t_ns, 0.0, 0.0)


_ADDRESS = re.compile(r"^([A-Za-z0-9.\-]+):(\d+)$")


class ChassisLink:
    """
    Newline-delimited `t_ns,linear,angular` sink standing in for the serial link

    The target is either a file path or a `host:port` TCP address.
    """

    def __init__(self, target: Union[str, Path, None]):
        self.target = target
        self._file = None
        self._sock: Optional[socket.socket] = None
        match = _ADDRESS.match(str(target)) if target is not None else None
        if match and not Path(str(target)).exists():
            self._sock = socket.create_connection((match.group(1), int(match.group(2))), timeout=2.0)
        elif target is not None:
            self._file = open(target, "w", encoding="ascii")

    def send(self, command: ChassisCommand) -> None:
        line = command.to_line() + "\n"
        if self._file is not None:
            self._file.write(line)
        elif self._sock is not None:
            self._sock.sendall(line.encode("ascii"))

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass(frozen=True)
class EndpointerParams:
    threshold_rms: float = 1000.0  # LSB
    hangover_chunks: int = 1

    def __post_init__(self):
        if not self.threshold_rms > 0:
            raise ValueError(f"threshold_rms must be positive, got {self.threshold_rms}")
        if self.hangover_chunks < 1:
            raise ValueError(f"hangover_chunks must be >= 1, got {self.hangover_chunks}")

    def to_dict(self) -> dict:
        return {"threshold_rms": self.threshold_rms, "hangover_chunks": self.hangover_chunks}


class Endpointer:
    """
    Cuts the microphone chunk stream into utterances by chunk RMS energy

    An utterance starts at the first loud chunk (with the preceding quiet
    chunk as lead-in) and closes after `hangover_chunks` quiet chunks.
    """

    def __init__(self, params: EndpointerParams = EndpointerParams()):
        self.params = params
        self._active: List = []
        self._quiet = 0
        self._lead_in = None

    @staticmethod
    def rms(chunk) -> float:
        samples = np.asarray(chunk.samples, dtype=np.float64)
        return float(np.sqrt(np.mean(samples * samples))) if len(samples) else 0.0

    def push(self, chunk) -> Optional[List]:
        """Feed one chunk; returns the chunks of a completed utterance, if any"""
        loud = self.rms(chunk) >= self.params.threshold_rms
        if loud:
            if not self._active and self._lead_in is not None:
                self._active.append(self._lead_in)
            self._active.append(chunk)
            self._quiet = 0
            return None
        self._lead_in = chunk
        if not self._active:
            return None
        self._active.append(chunk)
        self._quiet += 1
        if self._quiet < self.params.hangover_chunks:
            return None
        utterance, self._active, self._quiet = self._active, [], 0
        return utterance


@dataclass(frozen=True)
class NavigationConfig:
    """Controller gains, the goal list (defaults to the trajectory waypoints) and the vision reaction rules"""
    params: NavigationParams = NavigationParams()
    goals: Tuple[Tuple[float, float], ...] = ()
    rules: Tuple[ReactionRule, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "goals", tuple((float(x), float(y)) for x, y in self.goals))
        object.__setattr__(self, "rules", tuple(self.rules))

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "goals": [list(g) for g in self.goals],
                "rules": [r.to_dict() for r in self.rules]}
