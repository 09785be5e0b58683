import numpy as np
import pytest

from sharedlander.errors import InsufficientDataError, SingularDataError
from sharedlander.koopman import (
    BasisSpec,
    JointSample,
    fit_koopman,
    extract_linear,
    lift,
    load_model,
    load_model_audit,
    predict,
    save_model,
)
from sharedlander.sim import ControlInput, LanderState, WorldParams, step

from conftest import hover_truth_model

P = WorldParams()
BASIS = BasisSpec()


def make_sample(state_vec, input_vec, t=0.0):
    return JointSample(
        LanderState.from_array(np.asarray(state_vec, dtype=float)),
        ControlInput(float(input_vec[0]), float(input_vec[1])),
        t,
    )


# ---------------------------------------------------------------- data makers


def truth_advance_map(rng):
    """Lifted advance map M = K_true^T: affine craft block over a mild
    input dynamic, so full trajectories (inputs included) follow z' = M z."""
    lin = hover_truth_model(P)
    M = np.zeros((9, 9))
    M[0, 0] = 1.0
    M[1:7, 0] = lin.c
    M[1:7, 1:7] = lin.A
    M[1:7, 7:9] = lin.B
    # input rows: decaying rotation plus a weak state coupling keeps the
    # inputs exciting without blowing up over 500 steps
    ang = 0.3
    M[7:9, 7:9] = 0.97 * np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    M[7:9, 1:7] = 1e-3 * rng.standard_normal((2, 6))
    return M


def lifted_trajectories(M, rng, n_traj=10, n_steps=500):
    trajs = []
    for _ in range(n_traj):
        z = np.concatenate([[1.0], rng.normal(0, 1, 6), rng.uniform(-1, 1, 2)])
        traj = []
        for k in range(n_steps):
            traj.append(make_sample(z[1:7], z[7:9], k * P.dt))
            z = M @ z
        trajs.append(traj)
    return trajs


def sim_trajectory(seed, n_steps=500):
    """Random-walk throttle flight of the real craft.

    The torque channel gets a weak spin-damping term so the craft stays in
    the small-angle regime over the full 10 s; open-loop torque noise would
    integrate into a tumble and put the data outside the model class.
    """
    rng = np.random.default_rng(seed)
    s = LanderState(
        10.0 + rng.uniform(-4, 4), 10.0 + rng.uniform(-2, 2),
        rng.uniform(-0.1, 0.1), rng.uniform(-1, 1), rng.uniform(-1, 1),
        rng.uniform(-0.05, 0.05),
    )
    um, ur = P.hover_throttle, 0.0
    traj = []
    for k in range(n_steps):
        um = float(np.clip(P.hover_throttle + 0.5 * (um - P.hover_throttle) + rng.normal(0, 0.06), 0, 1))
        ur = float(np.clip(0.5 * ur - 0.4 * s.omega + rng.normal(0, 0.02), -1, 1))
        ci = ControlInput(um, ur)
        traj.append(JointSample(s, ci, k * P.dt))
        s = step(s, ci, P)
    return traj


@pytest.fixture(scope="module")
def lander_fit():
    return fit_koopman([sim_trajectory(i) for i in range(10)], ridge=1e-8)


# ----------------------------------------------------------------------- lift


def test_lift_zero_keeps_bias():
    z = lift(make_sample(np.zeros(6), (0.0, 0.0)), BASIS)
    np.testing.assert_array_equal(z, [1, 0, 0, 0, 0, 0, 0, 0, 0])


def test_lift_identity_embedding():
    z = lift(make_sample([1, 2, 3, 4, 5, 6], (0.5, -0.5)), BASIS)
    np.testing.assert_array_equal(z, [1, 1, 2, 3, 4, 5, 6, 0.5, -0.5])


def test_lift_linearity_modulo_bias():
    rng = np.random.default_rng(3)
    for _ in range(50):
        w = rng.normal(0, 2, 8)
        a = float(rng.uniform(-3, 3))
        z0 = lift(make_sample(np.zeros(6), (0, 0)), BASIS)
        z1 = lift(make_sample(w[:6], w[6:]), BASIS)
        z2 = lift(make_sample(a * w[:6], a * w[6:]), BASIS)
        np.testing.assert_allclose(z2 - z0, a * (z1 - z0), atol=1e-12)


def test_basis_rejects_unknown_kind():
    from sharedlander.errors import ConfigError

    with pytest.raises(ConfigError):
        BasisSpec(kind="rbf")


# ------------------------------------------------------------------------ fit


def test_fit_recovers_known_operator():
    rng = np.random.default_rng(11)
    M = truth_advance_map(rng)
    model = fit_koopman(lifted_trajectories(M, rng), ridge=1e-12)
    assert np.abs(model.K - M.T).max() < 1e-6


def test_fit_constant_trajectories_fixed_point():
    states = [np.array([2.0, 5.0, 0.1, 0.0, 0.0, 0.0]) * k for k in range(1, 6)]
    trajs = [[make_sample(s, (0.0, 0.0), k * P.dt) for k in range(4)] for s in states]
    model = fit_koopman(trajs, ridge=1e-6)
    # K is non-unique here; the fit must still reproduce the training set
    for traj in trajs:
        for s in traj[:-1]:
            err = np.abs(model.K.T @ lift(s, BASIS) - lift(s, BASIS)).max()
            assert err < 1e-6


def test_fit_holdout_prediction(lander_fit):
    holdout = sim_trajectory(99)
    # per-axis normalization: positions by the domain, angle by pi,
    # rates by their flight envelope
    scale = np.array([P.L1, P.L2, np.pi, 5.0, 5.0, 2.0])
    sq = []
    for s in holdout[:-1]:
        pred = predict(lander_fit, s).as_array()
        truth = step(s.state, s.input, P).as_array()
        sq.append(((pred - truth) / scale) ** 2)
    assert np.sqrt(np.mean(sq)) < 5e-3


def test_fit_insufficient_data():
    with pytest.raises(InsufficientDataError):
        fit_koopman([[make_sample(np.zeros(6), (0, 0))]])
    pair = [make_sample(np.zeros(6), (0, 0), 0.0), make_sample(np.ones(6), (0, 0), P.dt)]
    with pytest.raises(InsufficientDataError):
        fit_koopman([pair])  # 1 pair < 9 needed


def test_fit_singular_without_ridge():
    # all snapshots identical: rank-1 data, zero ridge must refuse
    traj = [make_sample(np.ones(6), (0.2, 0.1), k * P.dt) for k in range(20)]
    with pytest.raises(SingularDataError):
        fit_koopman([traj], ridge=0.0)


def test_fit_ridge_monotone_shrinkage():
    rng = np.random.default_rng(5)
    M = truth_advance_map(rng)
    trajs = lifted_trajectories(M, rng, n_traj=3, n_steps=80)
    norms = [np.linalg.norm(fit_koopman(trajs, ridge=lam).K) for lam in (1e-10, 1e-4, 1e-1, 10.0)]
    assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))


def test_fit_first_order_optimality(lander_fit):
    # perturbing any single entry must not decrease the ridge objective
    trajs = [sim_trajectory(i) for i in range(10)]
    from sharedlander.koopman import lift_many

    Zx = np.hstack([lift_many(t, BASIS)[:, :-1] for t in trajs])
    Zy = np.hstack([lift_many(t, BASIS)[:, 1:] for t in trajs])
    lam = lander_fit.ridge

    def objective(K):
        return np.sum((K.T @ Zx - Zy) ** 2) + lam * np.sum(K**2)

    base = objective(lander_fit.K)
    rng = np.random.default_rng(17)
    for _ in range(20):
        i, j = rng.integers(0, 9, 2)
        for eps in (1e-4, -1e-4):
            K = lander_fit.K.copy()
            K[i, j] += eps
            assert objective(K) >= base - 1e-9


# -------------------------------------------------------------- extract/predict


def test_extract_identity_operator():
    from sharedlander.koopman import KoopmanModel

    m = KoopmanModel(K=np.eye(9), basis=BASIS, ridge=0.0, n_samples=9)
    lin = extract_linear(m)
    np.testing.assert_array_equal(lin.A, np.eye(6))
    np.testing.assert_array_equal(lin.B, np.zeros((6, 2)))
    np.testing.assert_array_equal(lin.c, np.zeros(6))


def test_extract_roundtrip_known_affine():
    rng = np.random.default_rng(23)
    M = truth_advance_map(rng)
    truth = hover_truth_model(P)
    model = fit_koopman(lifted_trajectories(M, rng), ridge=1e-12)
    lin = extract_linear(model)
    assert np.abs(lin.A - truth.A).max() < 1e-6
    assert np.abs(lin.B - truth.B).max() < 1e-6
    assert np.abs(lin.c - truth.c).max() < 1e-6


def test_extract_gravity_drift(lander_fit):
    lin = extract_linear(lander_fit)
    assert lin.c[4] == pytest.approx(-P.g * P.dt, rel=0.10)


def test_predict_identity_returns_state():
    from sharedlander.koopman import KoopmanModel

    m = KoopmanModel(K=np.eye(9), basis=BASIS, ridge=0.0, n_samples=9)
    s = make_sample([1, 2, 3, 4, 5, 6], (0.9, -0.2))
    assert predict(m, s) == s.state


def test_predict_matches_extracted_model(lander_fit):
    lin = extract_linear(lander_fit)
    rng = np.random.default_rng(31)
    for _ in range(50):
        x = rng.normal(0, 3, 6)
        u = rng.uniform(-1, 1, 2)
        via_predict = predict(lander_fit, make_sample(x, u)).as_array()
        via_linear = lin.A @ x + lin.B @ u + lin.c
        np.testing.assert_allclose(via_predict, via_linear, atol=1e-12)


# ---------------------------------------------------------------- persistence


def test_model_save_load_roundtrip(tmp_path, lander_fit):
    path = tmp_path / "m.json"
    save_model(lander_fit, path, audit={"residual": 1e-12})
    back = load_model(path)
    np.testing.assert_array_equal(back.K, lander_fit.K)
    assert back.ridge == lander_fit.ridge
    assert back.n_samples == lander_fit.n_samples
    assert load_model_audit(path) == {"residual": 1e-12}
