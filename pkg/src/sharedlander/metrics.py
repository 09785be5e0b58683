"""Trial logs and every quantity the evaluation reports.

A :class:`TrialLog` stores one trial as flat arrays: timestamps, pre-step
states, the pilot's raw commands, the optimal commands (shared paradigms
only) and what was actually applied, plus the terminal outcome.  Logs
round-trip losslessly through a versioned JSON schema.

Metrics computed here: per-trial time / path length / accumulated running
cost, pilot-vs-optimal agreement, cross-model similarity of the learned
dynamics, spatial occupancy heatmaps, and a spectral ergodicity score.

The ergodicity score compares a trajectory's empirical spatial distribution
against a goal-centered Gaussian on the domain ``[0,L1] x [0,L2]`` through
cosine-basis coefficients:

    F_k(x, y) = cos(k1 pi x / L1) cos(k2 pi y / L2) / h_k,

with ``h_k`` chosen so each basis function has unit L2 norm on the domain.
Trajectory coefficients are sample averages of ``F_k``; target coefficients
integrate ``F_k`` against the truncated, renormalized Gaussian by midpoint
quadrature.  The score is the Sobolev-weighted squared distance

    eps = sum_k (1 + |k|^2)^(-s) (c_k - phi_k)^2 ,

which is zero iff every retained coefficient matches, and depends only on the
multiset of visited positions, not their ordering in time.
"""

from __future__ import annotations

import functools
import json
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .controller import CostSpec, half_plane_filter
from .errors import ConfigError, DataError, LogFormatError
from .koopman import AffineLinearModel
from .sim import ControlInput, TrialOutcome, clamp_input

__all__ = [
    "PARADIGMS",
    "SHARED_PARADIGMS",
    "TrialLog",
    "TrialMetrics",
    "ErgodicSpec",
    "trial_metrics",
    "agreement",
    "model_similarity",
    "heatmap",
    "heatmap_counts",
    "heatmap_csv",
    "ergodicity",
    "filter_identity_holds",
    "save_log",
    "load_log",
]

PARADIGMS = ("user_only", "shared_individual", "shared_general", "shared_expert")
SHARED_PARADIGMS = PARADIGMS[1:]

LOG_VERSION = 1

_LOG_KEYS = {"version", "paradigm", "pilot_id", "seed", "dt", "outcome", "samples"}
_OUTCOME_KEYS = {"status", "steps"}
_SAMPLE_KEYS = {"t", "state", "u_user", "u_opt", "u_applied"}


@dataclass
class TrialLog:
    """One recorded trial: arrays over ticks plus the terminal outcome."""

    paradigm: str
    pilot_id: str
    seed: int
    dt: float
    t: np.ndarray  # (n,)
    states: np.ndarray  # (n, 6)
    u_user: np.ndarray  # (n, 2) pilot commands after actuator clamping
    u_opt: np.ndarray | None  # (n, 2), absent under user_only
    u_applied: np.ndarray  # (n, 2)
    outcome: TrialOutcome

    def __post_init__(self):
        self.validate()

    @property
    def n_samples(self) -> int:
        return self.states.shape[0]

    def positions(self) -> np.ndarray:
        return self.states[:, 0:2]

    def validate(self) -> None:
        if self.paradigm not in PARADIGMS:
            raise LogFormatError(f"unknown paradigm {self.paradigm!r}")
        n = self.states.shape[0]
        shapes = {
            "t": (self.t, (n,)),
            "states": (self.states, (n, 6)),
            "u_user": (self.u_user, (n, 2)),
            "u_applied": (self.u_applied, (n, 2)),
        }
        for name, (arr, shape) in shapes.items():
            if arr.shape != shape:
                raise LogFormatError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise LogFormatError(f"{name} contains non-finite values")
        if (self.u_opt is None) != (self.paradigm == "user_only"):
            raise LogFormatError("u_opt must be present exactly for shared paradigms")
        if self.u_opt is not None:
            if self.u_opt.shape != (n, 2) or not np.all(np.isfinite(self.u_opt)):
                raise LogFormatError("u_opt malformed")
        if self.outcome.steps != n:
            raise LogFormatError(
                f"sample count {n} does not match outcome.steps {self.outcome.steps}"
            )
        if n and np.max(np.abs(self.t - self.dt * np.arange(n))) > 1e-9:
            raise LogFormatError("timestamps are not uniformly spaced by dt")

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrialLog):
            return NotImplemented
        same_opt = (
            (self.u_opt is None and other.u_opt is None)
            or (
                self.u_opt is not None
                and other.u_opt is not None
                and np.array_equal(self.u_opt, other.u_opt)
            )
        )
        return (
            self.paradigm == other.paradigm
            and self.pilot_id == other.pilot_id
            and self.seed == other.seed
            and self.dt == other.dt
            and self.outcome == other.outcome
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.u_user, other.u_user)
            and np.array_equal(self.u_applied, other.u_applied)
            and same_opt
        )

    def to_dict(self) -> dict:
        samples = []
        for i in range(self.n_samples):
            row = {
                "t": float(self.t[i]),
                "state": [float(v) for v in self.states[i]],
                "u_user": [float(v) for v in self.u_user[i]],
            }
            if self.u_opt is not None:
                row["u_opt"] = [float(v) for v in self.u_opt[i]]
            row["u_applied"] = [float(v) for v in self.u_applied[i]]
            samples.append(row)
        return {
            "version": LOG_VERSION,
            "paradigm": self.paradigm,
            "pilot_id": self.pilot_id,
            "seed": self.seed,
            "dt": self.dt,
            "outcome": {"status": self.outcome.status, "steps": self.outcome.steps},
            "samples": samples,
        }

    @staticmethod
    def from_dict(doc: dict) -> "TrialLog":
        if not isinstance(doc, dict):
            raise LogFormatError("trial log must be a JSON object")
        unknown = set(doc) - _LOG_KEYS
        if unknown:
            raise LogFormatError(f"unknown trial log keys: {sorted(unknown)}")
        try:
            if doc["version"] != LOG_VERSION:
                raise LogFormatError(f"unsupported log version {doc['version']!r}")
            outcome_doc = doc["outcome"]
            if set(outcome_doc) - _OUTCOME_KEYS:
                raise LogFormatError("unknown keys in outcome")
            paradigm = doc["paradigm"]
            dt = float(doc["dt"])
            samples = doc["samples"]
            n = len(samples)
            t = np.empty(n)
            states = np.empty((n, 6))
            u_user = np.empty((n, 2))
            u_applied = np.empty((n, 2))
            shared = paradigm != "user_only"
            u_opt = np.empty((n, 2)) if shared else None
            for i, row in enumerate(samples):
                if set(row) - _SAMPLE_KEYS:
                    raise LogFormatError(f"unknown keys in sample {i}")
                t[i] = float(row["t"])
                states[i] = row["state"]
                u_user[i] = row["u_user"]
                u_applied[i] = row["u_applied"]
                if shared:
                    u_opt[i] = row["u_opt"]
                elif "u_opt" in row:
                    raise LogFormatError("user_only samples must not carry u_opt")
            steps = int(outcome_doc["steps"])
            outcome = TrialOutcome(str(outcome_doc["status"]), steps, steps * dt)
            return TrialLog(
                paradigm=paradigm,
                pilot_id=str(doc["pilot_id"]),
                seed=int(doc["seed"]),
                dt=dt,
                t=t,
                states=states,
                u_user=u_user,
                u_opt=u_opt,
                u_applied=u_applied,
                outcome=outcome,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise LogFormatError(f"malformed trial log: {exc}") from exc


def save_log(log: TrialLog, path: str | os.PathLike) -> None:
    # compact separators: a default experiment writes 800 of these
    with open(path, "w") as fh:
        json.dump(log.to_dict(), fh, separators=(",", ":"))
        fh.write("\n")


def load_log(path: str | os.PathLike) -> TrialLog:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"{path} is not valid JSON: {exc}") from exc
    return TrialLog.from_dict(doc)


@dataclass(frozen=True)
class TrialMetrics:
    time_s: float
    path_length_m: float
    total_cost: float
    success: bool


def trial_metrics(log: TrialLog, cost: CostSpec) -> TrialMetrics:
    """Duration, path length, accumulated running cost and the success flag."""
    deltas = np.diff(log.positions(), axis=0)
    path_length = float(np.sum(np.hypot(deltas[:, 0], deltas[:, 1]))) if log.n_samples > 1 else 0.0
    d = log.states - cost.goal_state
    total = float(np.sum(np.einsum("ni,ij,nj->n", d, cost.Q, d)))
    total += float(np.sum(np.einsum("ni,ij,nj->n", log.u_applied, cost.R, log.u_applied)))
    return TrialMetrics(
        time_s=log.outcome.steps * log.dt,
        path_length_m=path_length,
        total_cost=total,
        success=log.outcome.status == "success",
    )


def agreement(log: TrialLog) -> float:
    """Fraction of (tick, dimension) pairs where pilot and optimum share a half-plane."""
    if log.u_opt is None:
        raise DataError("agreement is undefined for user_only logs")
    agree = (log.u_user * log.u_opt) >= 0.0
    return float(np.mean(agree))


def filter_identity_holds(log: TrialLog) -> bool:
    """Check that every applied input equals the filtered, clamped user input."""
    if log.u_opt is None:
        return bool(np.all(np.abs(log.u_applied[:, 0] - np.clip(log.u_user[:, 0], 0, 1)) == 0)
                    and np.all(np.abs(log.u_applied[:, 1] - np.clip(log.u_user[:, 1], -1, 1)) == 0))
    for i in range(log.n_samples):
        user = clamp_input(ControlInput(*log.u_user[i]))
        opt = ControlInput(*log.u_opt[i])
        expect = half_plane_filter(user, opt)
        if (expect.u_main, expect.u_rot) != (log.u_applied[i, 0], log.u_applied[i, 1]):
            return False
    return True


def model_similarity(models: Sequence[AffineLinearModel]) -> tuple[float, float]:
    """Average entrywise std as a percentage of the entry mean, for A and B.

    Entries whose mean magnitude is below 1e-6 are excluded; the std is the
    population standard deviation across models.
    """
    if len(models) < 2:
        raise DataError("model similarity needs at least two models")

    def stdpct(stack: np.ndarray) -> float:
        mean = np.mean(stack, axis=0)
        std = np.std(stack, axis=0)  # population (ddof=0)
        keep = np.abs(mean) >= 1e-6
        if not np.any(keep):
            raise DataError("all entries have near-zero mean; similarity undefined")
        return float(np.mean(std[keep] / np.abs(mean[keep])) * 100.0)

    return (
        stdpct(np.stack([m.A for m in models])),
        stdpct(np.stack([m.B for m in models])),
    )


def heatmap_counts(
    points: np.ndarray, grid: tuple[int, int], bounds: tuple[float, float]
) -> np.ndarray:
    """Raw visit counts of an (n, 2) position array over an nx-by-ny grid.

    Out-of-domain samples clamp to the edge cells, so no mass is dropped.
    Accumulate counts across logs and normalize at the end for a streaming
    heatmap.
    """
    nx, ny = grid
    L1, L2 = bounds
    counts = np.zeros((nx, ny))
    points = np.asarray(points, dtype=float)
    if points.shape[0]:
        ix = np.clip(np.floor(points[:, 0] / L1 * nx).astype(int), 0, nx - 1)
        iy = np.clip(np.floor(points[:, 1] / L2 * ny).astype(int), 0, ny - 1)
        np.add.at(counts, (ix, iy), 1)
    return counts


def heatmap(
    logs: Sequence[TrialLog],
    grid: tuple[int, int] = (60, 40),
    bounds: tuple[float, float] = (20.0, 13.33),
) -> np.ndarray:
    """Occupancy fractions of every visited (x, y) over an nx-by-ny grid."""
    if not logs:
        raise DataError("heatmap needs at least one log")
    counts = np.zeros(grid)
    for log in logs:
        counts += heatmap_counts(log.positions(), grid, bounds)
    total = counts.sum()
    if total == 0:
        raise DataError("heatmap needs at least one sample")
    return counts / total


def heatmap_csv(grid_values: np.ndarray, bounds: tuple[float, float]) -> str:
    """Render an occupancy grid as CSV with cell centers, one row per cell."""
    nx, ny = grid_values.shape
    L1, L2 = bounds
    lines = ["ix,iy,x_center,y_center,fraction"]
    for ix in range(nx):
        for iy in range(ny):
            xc = (ix + 0.5) * L1 / nx
            yc = (iy + 0.5) * L2 / ny
            lines.append(f"{ix},{iy},{xc!r},{yc!r},{float(grid_values[ix, iy])!r}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ErgodicSpec:
    """Defines the ergodicity score: domain, modes, goal Gaussian, weights."""

    bounds: tuple[float, float] = (20.0, 13.33)
    K_max: int = 10
    goal: tuple[float, float] = (10.0, 6.0)
    sigma_goal: float = 1.0
    weight_exponent: float = 1.5  # (d + 1) / 2 for d = 2
    quad_points: int = 200  # midpoint cells per axis

    def __post_init__(self):
        if self.K_max < 1:
            raise ConfigError("K_max must be at least 1")
        if self.sigma_goal <= 0 or self.weight_exponent <= 0:
            raise ConfigError("sigma_goal and weight_exponent must be positive")
        if self.quad_points < 2:
            raise ConfigError("quad_points must be at least 2")


def _norms(spec: ErgodicSpec) -> np.ndarray:
    """Normalizers h_k, shape (K_max+1, K_max+1); 1/h_k makes each mode unit-L2."""
    L1, L2 = spec.bounds

    def ell(L: float) -> np.ndarray:
        e = np.full(spec.K_max + 1, L / 2.0)
        e[0] = L
        return e

    return np.sqrt(np.outer(ell(L1), ell(L2)))


def _cosines(k_count: int, coords: np.ndarray, L: float) -> np.ndarray:
    """cos(k pi x / L) for k = 0..k_count-1, shape (k_count, len(coords))."""
    k = np.arange(k_count)[:, None]
    return np.cos(k * np.pi * coords[None, :] / L)


@functools.lru_cache(maxsize=32)
def _target_coefficients(spec: ErgodicSpec) -> np.ndarray:
    """Coefficients of the goal Gaussian, truncated to the domain.

    Midpoint quadrature on a quad_points^2 grid; the Gaussian is renormalized
    to unit mass over the domain, which pins the DC coefficient to 1/h_00
    exactly, so it is written out analytically.
    """
    L1, L2 = spec.bounds
    gx, gy = spec.goal
    nq = spec.quad_points
    xs = (np.arange(nq) + 0.5) * L1 / nq
    ys = (np.arange(nq) + 0.5) * L2 / nq
    cell = (L1 / nq) * (L2 / nq)
    gauss = np.exp(
        -((xs[:, None] - gx) ** 2 + (ys[None, :] - gy) ** 2) / (2.0 * spec.sigma_goal**2)
    )
    gauss /= gauss.sum() * cell

    Cx = _cosines(spec.K_max + 1, xs, L1)
    Cy = _cosines(spec.K_max + 1, ys, L2)
    phi = (Cx @ gauss @ Cy.T) * cell / _norms(spec)
    phi[0, 0] = 1.0 / math.sqrt(L1 * L2)
    phi.setflags(write=False)
    return phi


def _mode_weights(spec: ErgodicSpec) -> np.ndarray:
    k = np.arange(spec.K_max + 1)
    k_sq = k[:, None] ** 2 + k[None, :] ** 2
    return (1.0 + k_sq) ** (-spec.weight_exponent)


def ergodicity(log: TrialLog, spec: ErgodicSpec) -> float:
    """Ergodicity score of one trajectory; smaller means closer to the target."""
    if log.n_samples == 0:
        raise DataError("ergodicity needs at least one sample")
    return ergodicity_of_points(log.positions(), spec)


def ergodicity_of_points(points: np.ndarray, spec: ErgodicSpec) -> float:
    """Ergodicity score of a bare (n, 2) position multiset."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2 or points.shape[0] == 0:
        raise DataError("expected a non-empty (n, 2) array of positions")
    L1, L2 = spec.bounds
    Cx = _cosines(spec.K_max + 1, points[:, 0], L1)
    Cy = _cosines(spec.K_max + 1, points[:, 1], L2)
    c = (Cx @ Cy.T) / points.shape[0] / _norms(spec)
    diff = c - _target_coefficients(spec)
    return float(np.sum(_mode_weights(spec) * diff**2))
