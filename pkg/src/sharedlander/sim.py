"""Planar lunar-lander dynamics with a fixed 50 Hz timestep.

The craft is a rigid body in a vertical plane: a main thruster pushes along
the body axis, a side-thruster pair applies torque plus a small lateral body
force, and gravity pulls straight down.  Integration is semi-implicit Euler
(velocities first, then positions), which keeps the discrete map exactly
affine in (state, input) for a frozen heading angle and is deterministic to
the bit for identical inputs.

State convention: ``theta = 0`` is upright, counterclockwise positive, so the
main thruster accelerates the craft along ``[-sin(theta), cos(theta)]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "LanderState",
    "ControlInput",
    "ZERO_INPUT",
    "WorldParams",
    "TrialOutcome",
    "RUNNING",
    "step",
    "clamp_input",
    "sample_initial",
    "judge",
    "wrap_angle",
]


@dataclass(frozen=True)
class LanderState:
    """Position, heading and their rates: ``[x, y, theta, vx, vy, omega]``."""

    x: float
    y: float
    theta: float
    vx: float
    vy: float
    omega: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta, self.vx, self.vy, self.omega])

    @staticmethod
    def from_array(a) -> "LanderState":
        x, y, theta, vx, vy, omega = (float(v) for v in a)
        return LanderState(x, y, theta, vx, vy, omega)

    def is_finite(self) -> bool:
        return all(
            math.isfinite(v)
            for v in (self.x, self.y, self.theta, self.vx, self.vy, self.omega)
        )


@dataclass(frozen=True)
class ControlInput:
    """Throttle pair: ``u_main`` (main engine) and ``u_rot`` (side engines).

    The valid actuator range is ``u_main in [0, 1]`` and ``u_rot in [-1, 1]``;
    raw commands outside it are normalized by :func:`clamp_input`.
    """

    u_main: float
    u_rot: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u_main, self.u_rot])

    def is_finite(self) -> bool:
        return math.isfinite(self.u_main) and math.isfinite(self.u_rot)


ZERO_INPUT = ControlInput(0.0, 0.0)


@dataclass(frozen=True)
class WorldParams:
    """Physical constants, domain geometry and the success criteria.

    Defaults give a hover-capable craft (thrust/weight = 2.47) over a
    20 x 13.33 m domain, starting near (10, 10) with the goal at (10, 6).
    """

    L1: float = 20.0
    L2: float = 13.33
    g: float = 1.62
    mass: float = 1.0
    inertia: float = 0.25
    T_main: float = 4.0
    T_side: float = 0.4
    arm: float = 0.5
    dt: float = 0.02
    start: tuple[float, float] = (10.0, 10.0)
    init_pos_std: float = 0.2
    goal: tuple[float, float] = (10.0, 6.0)
    goal_radius: float = 0.5
    tol_v: float = 0.1
    tol_omega: float = 0.1
    tol_theta: float = 0.1
    max_steps: int = 1500

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        for name in ("L1", "L2", "g", "mass", "inertia", "T_main", "T_side", "arm"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        gx, gy = self.goal
        if not (0.0 < gx < self.L1 and 0.0 < gy < self.L2):
            raise ConfigError("goal must lie strictly inside the domain")
        if self.T_main / (self.mass * self.g) <= 1.0:
            raise ConfigError("lander cannot hover: T_main/(mass*g) must exceed 1")

    @property
    def hover_throttle(self) -> float:
        """Main-engine setting that exactly cancels gravity."""
        return self.mass * self.g / self.T_main

    def in_bounds(self, state: LanderState) -> bool:
        return 0.0 <= state.x <= self.L1 and 0.0 < state.y <= self.L2


@dataclass(frozen=True)
class TrialOutcome:
    """Terminal verdict of one trial."""

    status: str  # success | crash | out_of_bounds | timeout
    steps: int
    wall_time: float  # simulated elapsed time, steps * dt

    STATUSES = ("success", "crash", "out_of_bounds", "timeout")

    def __post_init__(self):
        if self.status not in self.STATUSES:
            raise ConfigError(f"unknown trial status {self.status!r}")


#: Sentinel returned by :func:`judge` while no terminal condition holds.
RUNNING = None


def clamp_input(raw: ControlInput) -> ControlInput:
    """Clamp a raw command into the actuator range.

    The main engine only pushes (negative commands become zero); the side
    engines saturate at full deflection either way.
    """
    if not raw.is_finite():
        raise ValueError(f"non-finite control input: {raw}")
    return ControlInput(
        min(max(raw.u_main, 0.0), 1.0),
        min(max(raw.u_rot, -1.0), 1.0),
    )


def step(state: LanderState, inp: ControlInput, params: WorldParams) -> LanderState:
    """Advance the craft one timestep under a clamped input.

    Semi-implicit Euler: accelerations from the current heading update the
    velocities, and the *updated* velocities move the positions.
    """
    if not state.is_finite():
        raise ValueError(f"non-finite state: {state}")
    if not inp.is_finite():
        raise ValueError(f"non-finite control input: {inp}")

    sin_t = math.sin(state.theta)
    cos_t = math.cos(state.theta)
    f_main = params.T_main * inp.u_main / params.mass
    f_side = params.T_side * inp.u_rot / params.mass

    ax = -f_main * sin_t + f_side * cos_t
    ay = f_main * cos_t + f_side * sin_t - params.g
    alpha = params.arm * params.T_side * inp.u_rot / params.inertia

    vx = state.vx + ax * params.dt
    vy = state.vy + ay * params.dt
    omega = state.omega + alpha * params.dt
    return LanderState(
        x=state.x + vx * params.dt,
        y=state.y + vy * params.dt,
        theta=state.theta + omega * params.dt,
        vx=vx,
        vy=vy,
        omega=omega,
    )


def sample_initial(rng_seed, params: WorldParams) -> LanderState:
    """Draw a randomized start state, reproducible from the seed.

    Position gets zero-mean Gaussian noise (std ``init_pos_std`` per axis)
    around the nominal start; linear velocities are uniform in [-1, 1] m/s and
    the spin rate uniform in [-0.5, 0.5] rad/s; the craft starts upright.
    """
    rng = np.random.default_rng(rng_seed)
    x0, y0 = params.start
    x = x0 + params.init_pos_std * rng.standard_normal()
    y = y0 + params.init_pos_std * rng.standard_normal()
    vx = rng.uniform(-1.0, 1.0)
    vy = rng.uniform(-1.0, 1.0)
    omega = rng.uniform(-0.5, 0.5)
    return LanderState(float(x), float(y), 0.0, float(vx), float(vy), float(omega))


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(theta, 2.0 * math.pi)
    if wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    elif wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def judge(state: LanderState, steps: int, params: WorldParams):
    """Return the trial verdict for a post-step state, or RUNNING.

    Precedence: crash, then out-of-bounds, then success, then timeout.  The
    checks are mutually exclusive by construction so exactly one verdict (or
    RUNNING) applies to any state.
    """
    dt = params.dt
    if state.y <= 0.0:
        return TrialOutcome("crash", steps, steps * dt)
    if state.x < 0.0 or state.x > params.L1 or state.y > params.L2:
        return TrialOutcome("out_of_bounds", steps, steps * dt)
    gx, gy = params.goal
    at_goal = math.hypot(state.x - gx, state.y - gy) <= params.goal_radius
    settled = (
        abs(state.vx) <= params.tol_v
        and abs(state.vy) <= params.tol_v
        and abs(state.omega) <= params.tol_omega
        and abs(wrap_angle(state.theta)) <= params.tol_theta
    )
    if at_goal and settled:
        return TrialOutcome("success", steps, steps * dt)
    if steps >= params.max_steps:
        return TrialOutcome("timeout", steps, steps * dt)
    return RUNNING
