"""EDMD approximation of the joint pilot+lander dynamics.

The pilot's commands are folded into the state, giving an 8D joint vector
``[x, y, theta, vx, vy, omega, u_main, u_rot]``.  A basis lifts each joint
sample to a feature vector ``z``; stacking consecutive lifted samples from
recorded trajectories as columns of ``Zx`` (time t) and ``Zy`` (time t+1),
the finite Koopman matrix is the ridge-regularized least-squares minimizer

    min_K  sum_t || K^T z_t - z_{t+1} ||^2  +  ridge * ||K||_F^2
        =>  K = (Zx Zx^T + ridge*I)^{-1} Zx Zy^T.

With the linear-with-bias basis the one-step model is exactly affine, and the
controller-facing matrices are read straight out of ``K^T``:

    x_{t+1} = A x_t + B u_t + c

where ``A`` and ``B`` are the state-row blocks over the state and control
columns and ``c`` is the state-row slice of the bias column (gravity and any
other constant drift accumulate there).  Pairs never span trajectory
boundaries; the fit is deterministic for fixed inputs.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import ConfigError, InsufficientDataError, LogFormatError, SingularDataError
from .sim import ControlInput, LanderState

__all__ = [
    "JointSample",
    "BasisSpec",
    "KoopmanModel",
    "AffineLinearModel",
    "lift",
    "lift_many",
    "fit_koopman",
    "extract_linear",
    "predict",
    "save_model",
    "load_model",
    "load_model_audit",
]

STATE_DIM = 6
CONTROL_DIM = 2
DEFAULT_RIDGE = 1e-6


@dataclass(frozen=True)
class JointSample:
    """One snapshot of the joint system: lander state, pilot command, time."""

    state: LanderState
    input: ControlInput
    t: float

    def joint_vector(self) -> np.ndarray:
        return np.concatenate([self.state.as_array(), self.input.as_array()])


@dataclass(frozen=True)
class BasisSpec:
    """Describes the lifting map.

    ``linear-with-bias`` lifts the joint vector to
    ``[1, x, y, theta, vx, vy, omega, u_main, u_rot]``: index 0 is the bias,
    1..6 the state block, 7..8 the control block.
    """

    kind: str = "linear-with-bias"
    lifted_dim: int = 9

    def __post_init__(self):
        if self.kind != "linear-with-bias":
            raise ConfigError(f"unsupported basis kind {self.kind!r}")
        if self.lifted_dim != 1 + STATE_DIM + CONTROL_DIM:
            raise ConfigError(
                f"linear-with-bias basis has dimension {1 + STATE_DIM + CONTROL_DIM}, "
                f"got {self.lifted_dim}"
            )

    @property
    def bias_index(self) -> int:
        return 0

    @property
    def state_slice(self) -> slice:
        return slice(1, 1 + STATE_DIM)

    @property
    def control_slice(self) -> slice:
        return slice(1 + STATE_DIM, 1 + STATE_DIM + CONTROL_DIM)


@dataclass(frozen=True)
class KoopmanModel:
    """Finite Koopman matrix over a lifted basis."""

    K: np.ndarray
    basis: BasisSpec
    ridge: float
    n_samples: int  # snapshot pairs used by the fit

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        object.__setattr__(self, "K", K)
        N = self.basis.lifted_dim
        if K.shape != (N, N):
            raise ConfigError(f"Koopman matrix must be {N}x{N}, got {K.shape}")
        if not np.all(np.isfinite(K)):
            raise ConfigError("Koopman matrix contains non-finite entries")


@dataclass(frozen=True)
class AffineLinearModel:
    """One-step affine model ``x' = A x + B u + c`` consumed by the controller."""

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ConfigError(f"A must be square, got {A.shape}")
        if B.shape[0] != n or c.shape != (n,):
            raise ConfigError("B rows and c length must match the state dimension")
        for name, m in (("A", A), ("B", B), ("c", c)):
            if not np.all(np.isfinite(m)):
                raise ConfigError(f"{name} contains non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "c", c)

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.A @ x + self.B @ u + self.c


def lift(sample: JointSample, basis: BasisSpec) -> np.ndarray:
    """Lift one joint sample through the basis."""
    z = np.empty(basis.lifted_dim)
    z[basis.bias_index] = 1.0
    z[basis.state_slice] = sample.state.as_array()
    z[basis.control_slice] = sample.input.as_array()
    return z


def lift_many(samples: Sequence[JointSample], basis: BasisSpec) -> np.ndarray:
    """Lift a trajectory; returns columns of lifted vectors, shape (N, len)."""
    cols = np.empty((basis.lifted_dim, len(samples)))
    for j, s in enumerate(samples):
        cols[:, j] = lift(s, basis)
    return cols


def fit_koopman(
    trajectories: Iterable[Sequence[JointSample]],
    basis: BasisSpec | None = None,
    ridge: float = DEFAULT_RIDGE,
) -> KoopmanModel:
    """Fit the Koopman matrix from recorded trajectories.

    Snapshot pairs are consecutive samples within a single trajectory; the
    last sample of each trajectory has no successor and is dropped.  The
    normal equations are solved by Cholesky factorization when ridge > 0; a
    zero ridge falls back to the pseudo-inverse after an explicit rank check.
    """
    basis = basis or BasisSpec()
    if ridge < 0:
        raise ConfigError("ridge must be non-negative")
    N = basis.lifted_dim

    xs, ys = [], []
    for traj in trajectories:
        if len(traj) < 2:
            raise InsufficientDataError(
                f"trajectory with {len(traj)} sample(s) cannot form a snapshot pair"
            )
        cols = lift_many(traj, basis)
        xs.append(cols[:, :-1])
        ys.append(cols[:, 1:])
    if not xs:
        raise InsufficientDataError("no trajectories given")
    Zx = np.hstack(xs)
    Zy = np.hstack(ys)
    n_pairs = Zx.shape[1]
    if n_pairs < N:
        raise InsufficientDataError(
            f"need at least {N} snapshot pairs to fit a {N}x{N} operator, got {n_pairs}"
        )

    G = Zx @ Zx.T  # normal matrix, N x N
    C = Zx @ Zy.T
    if ridge > 0:
        cho = scipy.linalg.cho_factor(G + ridge * np.eye(N), lower=True)
        K = scipy.linalg.cho_solve(cho, C)
    else:
        if np.linalg.matrix_rank(G) < N:
            raise SingularDataError(
                "normal matrix is rank deficient; pass ridge > 0 to regularize"
            )
        K = np.linalg.pinv(G) @ C
    return KoopmanModel(K=K, basis=basis, ridge=ridge, n_samples=n_pairs)


def extract_linear(model: KoopmanModel) -> AffineLinearModel:
    """Pull the affine control model out of the fitted operator.

    ``K^T`` advances lifted vectors, so its state rows over the state /
    control / bias columns are exactly ``A``, ``B`` and ``c``.
    """
    basis = model.basis
    M = model.K.T
    s, u = basis.state_slice, basis.control_slice
    return AffineLinearModel(
        A=M[s, s].copy(),
        B=M[s, u].copy(),
        c=M[s, basis.bias_index].copy(),
    )


def predict(model: KoopmanModel, sample: JointSample) -> LanderState:
    """One-step state prediction: project ``K^T z`` back onto the state block."""
    z_next = model.K.T @ lift(sample, model.basis)
    return LanderState.from_array(z_next[model.basis.state_slice])


def model_to_dict(model: KoopmanModel, audit: dict | None = None) -> dict:
    doc = {
        "basis": {"kind": model.basis.kind, "lifted_dim": model.basis.lifted_dim},
        "ridge": model.ridge,
        "n_samples": model.n_samples,
        "K": [float(v) for v in model.K.reshape(-1)],
    }
    if audit is not None:
        doc["audit"] = audit
    return doc


def model_from_dict(doc: dict) -> KoopmanModel:
    try:
        basis = BasisSpec(kind=doc["basis"]["kind"], lifted_dim=int(doc["basis"]["lifted_dim"]))
        ridge = float(doc["ridge"])
        n_samples = int(doc["n_samples"])
        flat = [float(v) for v in doc["K"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise LogFormatError(f"malformed model document: {exc}") from exc
    if "audit" in doc and not isinstance(doc["audit"], dict):
        raise LogFormatError("model audit block must be an object")
    N = basis.lifted_dim
    if len(flat) != N * N:
        raise LogFormatError(f"K must hold {N * N} entries, got {len(flat)}")
    if not all(math.isfinite(v) for v in flat):
        raise LogFormatError("K contains non-finite entries")
    K = np.array(flat).reshape(N, N)
    return KoopmanModel(K=K, basis=basis, ridge=ridge, n_samples=n_samples)


def save_model(model: KoopmanModel, path: str | os.PathLike, audit: dict | None = None) -> None:
    # audit: free-form provenance block (controller certificate etc.), stored
    # alongside the operator but not part of the model proper
    with open(path, "w") as fh:
        json.dump(model_to_dict(model, audit=audit), fh, indent=2)
        fh.write("\n")


def load_model_audit(path: str | os.PathLike) -> dict | None:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"model file {path} is not valid JSON: {exc}") from exc
    model_from_dict(doc)  # validate the rest while we are here
    return doc.get("audit")


def load_model(path: str | os.PathLike) -> KoopmanModel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(doc)
