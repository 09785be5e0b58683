"""Synthetic pilots that stand in for human participants.

Every pilot runs the same control structure: a hand-designed linear feedback
around hover plus the hover feedforward, corrupted by Gaussian input noise
and, for novices, a zero-order hold that models reaction delay.  Skill moves
three knobs monotonically: feedback gain scale ``0.3 + 0.7*skill``, noise std
``0.3*(1 - skill)``, and hold length ``round(10*(1 - skill))`` ticks.

The feedback gains come from the nominal model (small angles, near hover):

    x_dd     = -(T_main*u_hover/mass)*theta + (T_side/mass)*u_rot
    y_dd     =  (T_main/mass)*u_main - g
    theta_dd =  (arm*T_side/inertia)*u_rot

Vertical and attitude loops are PD designs on their single-axis dynamics; the
horizontal loop commands a desired lean angle through the attitude loop
(the small lateral body force of the side engines is treated as a
disturbance).  Composed, they give one 2x6 gain matrix on the goal error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .sim import ControlInput, LanderState, WorldParams, clamp_input

__all__ = ["PilotSpec", "Pilot", "nominal_gains"]

EXPERT_NOISE_STD = 0.02

# Loop shaping for the nominal cascade: natural frequency (rad/s) and damping.
_VERT_WN, _VERT_ZETA = 3.0, 1.4
_ATT_WN, _ATT_ZETA = 1.9, 0.5
_HORIZ_WN, _HORIZ_ZETA = 0.4, 0.6


@dataclass(frozen=True)
class PilotSpec:
    """Parameters of one synthetic pilot."""

    kind: str  # "expert" | "novice"
    seed: int
    skill: float | None = None  # novice only, in [0, 1]
    reaction_delay: int = 0  # ticks the computed input is held
    noise_std: float = 0.0  # per-dimension Gaussian input noise

    def __post_init__(self):
        if self.kind not in ("expert", "novice"):
            raise ConfigError(f"unknown pilot kind {self.kind!r}")
        if self.kind == "novice":
            if self.skill is None or not 0.0 <= self.skill <= 1.0:
                raise ConfigError("novice skill must lie in [0, 1]")
        if self.reaction_delay < 0 or self.noise_std < 0:
            raise ConfigError("reaction_delay and noise_std must be non-negative")

    @staticmethod
    def expert(seed: int, noise_std: float = EXPERT_NOISE_STD) -> "PilotSpec":
        return PilotSpec(kind="expert", seed=seed, noise_std=noise_std)

    @staticmethod
    def novice(skill: float, seed: int) -> "PilotSpec":
        return PilotSpec(
            kind="novice",
            seed=seed,
            skill=skill,
            reaction_delay=round(10.0 * (1.0 - skill)),
            noise_std=0.3 * (1.0 - skill),
        )

    @property
    def gain_scale(self) -> float:
        if self.kind == "expert":
            return 1.0
        return 0.3 + 0.7 * self.skill


def nominal_gains(params: WorldParams) -> tuple[np.ndarray, np.ndarray]:
    """Feedback matrix and feedforward of the nominal hover cascade.

    Returns ``(K_nom, u_ff_nom)`` for the law
    ``u = u_ff_nom + K_nom (goal_state - state)``.
    """
    k_vert = params.T_main / params.mass  # y_dd per unit u_main
    k_att = params.arm * params.T_side / params.inertia  # theta_dd per unit u_rot
    k_lean = params.g  # x_dd per unit (-theta) at hover thrust

    kp_y = _VERT_WN**2 / k_vert
    kd_y = 2.0 * _VERT_ZETA * _VERT_WN / k_vert
    kp_t = _ATT_WN**2 / k_att
    kd_t = 2.0 * _ATT_ZETA * _ATT_WN / k_att
    kp_x = _HORIZ_WN**2
    kd_x = 2.0 * _HORIZ_ZETA * _HORIZ_WN

    # Row 1: u_main from (e_y, e_vy).  Row 2: u_rot from the lean-angle
    # command -(kp_x e_x + kd_x e_vx)/k_lean fed through the attitude PD.
    K = np.array(
        [
            [0.0, kp_y, 0.0, 0.0, kd_y, 0.0],
            [-kp_t * kp_x / k_lean, 0.0, kp_t, -kp_t * kd_x / k_lean, 0.0, kd_t],
        ]
    )
    u_ff = np.array([params.hover_throttle, 0.0])
    return K, u_ff


class Pilot:
    """Stateful pilot instance: owns its RNG and its hold buffer.

    Deterministic for a fixed spec (seed included) and state sequence.
    """

    def __init__(self, spec: PilotSpec, params: WorldParams):
        self.spec = spec
        self.params = params
        self._rng = np.random.default_rng(spec.seed)
        self._K, self._u_ff = nominal_gains(params)
        gx, gy = params.goal
        self._goal = np.array([gx, gy, 0.0, 0.0, 0.0, 0.0])
        self._held: ControlInput | None = None
        self._ticks_since_update = 0

    def command(self, state: LanderState) -> ControlInput:
        """Raw command for the current state; may exceed actuator bounds.

        The deterministic part is clamped before noise is added, mimicking a
        stick pushed against its stops plus hand tremor.
        """
        hold = max(1, self.spec.reaction_delay)
        if self._held is not None and self._ticks_since_update < hold:
            self._ticks_since_update += 1
            return self._held

        err = self._goal - state.as_array()
        u = self._u_ff + self.spec.gain_scale * (self._K @ err)
        clean = clamp_input(ControlInput(float(u[0]), float(u[1])))
        noise = self._rng.normal(0.0, self.spec.noise_std, size=2)
        out = ControlInput(clean.u_main + float(noise[0]), clean.u_rot + float(noise[1]))
        self._held = out
        self._ticks_since_update = 1
        return out

    def reset(self) -> None:
        """Clear the hold buffer (the RNG keeps advancing)."""
        self._held = None
        self._ticks_since_update = 0
