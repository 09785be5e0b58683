"""LQR on the learned affine model and the half-plane input filter.

The infinite-horizon regulator comes from the discrete algebraic Riccati
equation, solved by fixed-point iteration from ``P0 = Q``:

    P <- A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A + Q

The solution certifies itself: the residual of that equation and the
closed-loop spectral radius are computed after convergence and stored on the
returned solution.  The affine drift ``c`` is handled by a feedforward input
that makes the goal an equilibrium, ``u_ff = pinv(B) ((I - A) x_goal - c)``,
so the policy evaluated at any state is

    u* = clamp( u_ff - gain (x - x_goal) ).

Shared control then passes each pilot input dimension through unchanged iff
it does not oppose the sign of the optimal input, and zeroes it otherwise;
magnitudes are never altered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CostSpecError, NonStabilizableError
from .koopman import AffineLinearModel
from .sim import ControlInput, LanderState, WorldParams, clamp_input, step

__all__ = [
    "CostSpec",
    "LqrSolution",
    "default_cost",
    "solve_dare",
    "dare_fixed_point",
    "optimal_input",
    "optimal_input_raw",
    "half_plane_filter",
    "shared_step",
    "running_cost",
    "finite_horizon_lqr",
]

DEFAULT_Q_DIAG = (4.0, 6.0, 50.0, 2.0, 4.0, 5.0)
DEFAULT_R_DIAG = (1.0, 20.0)


@dataclass(frozen=True)
class CostSpec:
    """Quadratic running cost ``(x - x_g)^T Q (x - x_g) + u^T R u``."""

    Q: np.ndarray
    R: np.ndarray
    goal_state: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        goal = np.atleast_1d(np.asarray(self.goal_state, dtype=float))
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise CostSpecError("Q must be symmetric")
        if not np.allclose(R, R.T, atol=1e-12):
            raise CostSpecError("R must be symmetric")
        if np.linalg.eigvalsh(R).min() <= 0:
            raise CostSpecError("R must be positive definite")
        if np.linalg.eigvalsh(Q).min() < -1e-12:
            raise CostSpecError("Q must be positive semi-definite")
        if goal.shape[0] != Q.shape[0]:
            raise CostSpecError("goal_state length must match Q")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "goal_state", goal)


def default_cost(params: WorldParams) -> CostSpec:
    """Default weights: heading penalized hardest, inputs cheap."""
    gx, gy = params.goal
    return CostSpec(
        Q=np.diag(DEFAULT_Q_DIAG),
        R=np.diag(DEFAULT_R_DIAG),
        goal_state=np.array([gx, gy, 0.0, 0.0, 0.0, 0.0]),
    )


@dataclass(frozen=True)
class LqrSolution:
    """Converged Riccati solution plus its self-certification numbers."""

    P: np.ndarray
    gain: np.ndarray
    u_ff: np.ndarray
    residual: float  # inf-norm of the DARE residual at P
    closed_loop_radius: float  # spectral radius of A - B gain
    eq_residual: float  # norm of (I - A) x_goal - c - B u_ff


def dare_fixed_point(
    A: np.ndarray,
    B: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Iterate the Riccati map to a fixed point; dimension-generic core.

    Returns ``(P, gain, residual)``.  Divergence or non-convergence within
    ``max_iter`` is treated as evidence the pair is not stabilizable.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if np.linalg.eigvalsh(R).min() <= 0:
        raise CostSpecError("R must be positive definite")

    def riccati_map(P):
        BtP = B.T @ P
        gain = np.linalg.solve(R + BtP @ B, BtP @ A)
        return A.T @ P @ (A - B @ gain) + Q, gain

    P = Q.copy()
    residual = np.inf
    # divergence shows up as overflow first; that path is expected, not noisy
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_iter):
            P_next, gain = riccati_map(P)
            P_next = 0.5 * (P_next + P_next.T)  # keep symmetry against roundoff
            residual = float(np.max(np.abs(P_next - P)))
            P = P_next
            if residual < tol:
                break
            if not np.all(np.isfinite(P)):
                raise NonStabilizableError(
                    "Riccati iteration diverged; (A, B) appears unstabilizable"
                )
        else:
            raise NonStabilizableError(
                f"Riccati iteration did not converge in {max_iter} steps "
                f"(last residual {residual:.3e})"
            )
    _, gain = riccati_map(P)
    return P, gain, residual


def solve_dare(
    model: AffineLinearModel,
    cost: CostSpec,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> LqrSolution:
    """Solve the LQR problem on an affine model and certify the result."""
    P, gain, residual = dare_fixed_point(model.A, model.B, cost.Q, cost.R, tol, max_iter)
    rho = float(np.max(np.abs(np.linalg.eigvals(model.A - model.B @ gain))))
    rhs = (np.eye(model.A.shape[0]) - model.A) @ cost.goal_state - model.c
    u_ff, *_ = np.linalg.lstsq(model.B, rhs, rcond=None)
    eq_residual = float(np.linalg.norm(rhs - model.B @ u_ff))
    return LqrSolution(
        P=P,
        gain=gain,
        u_ff=u_ff,
        residual=residual,
        closed_loop_radius=rho,
        eq_residual=eq_residual,
    )


def optimal_input_raw(sol: LqrSolution, cost: CostSpec, state: LanderState) -> np.ndarray:
    """Unclamped LQR policy value at a state."""
    return sol.u_ff - sol.gain @ (state.as_array() - cost.goal_state)


def optimal_input(sol: LqrSolution, cost: CostSpec, state: LanderState) -> ControlInput:
    """Optimal input at a state, clamped into the actuator range."""
    u = optimal_input_raw(sol, cost, state)
    return clamp_input(ControlInput(float(u[0]), float(u[1])))


def half_plane_filter(user: ControlInput, optimal: ControlInput) -> ControlInput:
    """Zero each user dimension whose sign opposes the optimal input.

    A zero product counts as agreement, so a zero on either side always lets
    the user value through; passed dimensions are never rescaled.
    """

    def keep(u, o):
        return u if u * o >= 0.0 else 0.0

    return ControlInput(
        keep(user.u_main, optimal.u_main),
        keep(user.u_rot, optimal.u_rot),
    )


def shared_step(
    state: LanderState,
    user_input: ControlInput,
    sol: LqrSolution,
    cost: CostSpec,
    params: WorldParams,
) -> tuple[ControlInput, ControlInput, LanderState]:
    """One tick of shared control: filter the pilot, then step the simulator.

    The optimal input is recomputed from the current state on every call, so
    the fixed LQR policy is evaluated recedingly along the actual trajectory.
    """
    optimal = optimal_input(sol, cost, state)
    applied = half_plane_filter(clamp_input(user_input), optimal)
    return applied, optimal, step(state, applied, params)


def running_cost(state: LanderState, inp: ControlInput, cost: CostSpec) -> float:
    """Instantaneous quadratic cost of a state/input pair."""
    d = state.as_array() - cost.goal_state
    u = inp.as_array()
    return float(d @ cost.Q @ d + u @ cost.R @ u)


def finite_horizon_lqr(
    model: AffineLinearModel, cost: CostSpec, horizon: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Backward Riccati recursion with terminal weight Q.

    Returns ``[(gain_0, u_ff_0), ..., (gain_{H-1}, u_ff_{H-1})]`` for the
    time-varying policy ``u_t = u_ff_t - gain_t (x_t - x_goal)``.  The affine
    drift enters through the linear value term, so the feedforward here is the
    horizon-optimal one rather than the equilibrium-holding feedforward of
    :func:`solve_dare`; ``gain_0`` converges to the DARE gain as the horizon
    grows.
    """
    if horizon < 1:
        raise CostSpecError("horizon must be at least 1")
    A, B, c = model.A, model.B, model.c
    Q, R = cost.Q, cost.R
    # Work in error coordinates e = x - x_goal: e' = A e + B u + c_tilde.
    c_tilde = c - (np.eye(A.shape[0]) - A) @ cost.goal_state

    P = Q.copy()
    q = np.zeros(A.shape[0])
    schedule: list[tuple[np.ndarray, np.ndarray]] = []
    for _ in range(horizon):
        BtP = B.T @ P
        H = R + BtP @ B
        gain = np.linalg.solve(H, BtP @ A)
        k = np.linalg.solve(H, B.T @ (P @ c_tilde + q))
        schedule.append((gain, -k))
        A_cl = A - B @ gain
        q = A_cl.T @ (P @ c_tilde + q)
        P = A.T @ P @ A_cl + Q
        P = 0.5 * (P + P.T)
    schedule.reverse()
    return schedule
