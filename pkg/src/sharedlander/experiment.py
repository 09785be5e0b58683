"""End-to-end evaluation protocol with deterministic seeding.

The full pipeline: every pilot flies unassisted demonstration trials, three
linear models are fitted from the demonstrations (per-pilot individual, a
pooled general model from held-out pilots, and an expert model), then each
evaluated pilot flies every control paradigm and the logs are reduced to a
metrics + statistics report.

Determinism is load-bearing: every trial's RNG streams derive from
(master_seed, pilot_id, paradigm, trial_index) through SHA-256, so execution
order, parallelism and paradigm ordering cannot change a single byte of any
log or of the report.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .controller import (
    CostSpec,
    LqrSolution,
    default_cost,
    half_plane_filter,
    optimal_input,
    solve_dare,
)
from .errors import ConfigError, DataError, ModelError
from .koopman import (
    DEFAULT_RIDGE,
    JointSample,
    KoopmanModel,
    extract_linear,
    fit_koopman,
    load_model,
    save_model,
)
from .metrics import (
    PARADIGMS,
    SHARED_PARADIGMS,
    ErgodicSpec,
    TrialLog,
    agreement,
    ergodicity,
    heatmap_counts,
    heatmap_csv,
    load_log,
    model_similarity,
    save_log,
    trial_metrics,
)
from .pilots import Pilot, PilotSpec
from .sim import (
    RUNNING,
    ControlInput,
    LanderState,
    TrialOutcome,
    WorldParams,
    ZERO_INPUT,
    clamp_input,
    judge,
    sample_initial,
    step,
)

__all__ = [
    "derive_seed",
    "ExperimentConfig",
    "default_config",
    "config_to_dict",
    "config_from_dict",
    "load_config",
    "save_config",
    "TrialSession",
    "TickRecord",
    "run_trial",
    "logs_to_trajectories",
    "fit_model_from_logs",
    "run_demos",
    "run_experiment",
    "build_report",
    "evaluate_directory",
]

TRAIN_LABEL = "train"
HEATMAP_GRID = (60, 40)
STATS_ALPHA = 0.05
REPORT_VERSION = 1


def derive_seed(*parts) -> int:
    """Collision-resistant 63-bit seed from an ordered tuple of labels."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


# --------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class ExperimentConfig:
    world: WorldParams
    cost: CostSpec
    ergodic: ErgodicSpec
    pilots: tuple[PilotSpec, ...]  # full roster; general_pool indexes into it
    general_pool: tuple[int, ...]
    expert: PilotSpec
    trials_train: int = 10
    trials_eval: int = 10
    master_seed: int = 12
    output_dir: str = "experiment_out"

    def __post_init__(self):
        if not self.pilots:
            raise ConfigError("at least one pilot is required")
        if self.trials_train < 1:
            raise ConfigError("trials_train must be at least 1")
        if self.trials_eval < 0:
            raise ConfigError("trials_eval must be non-negative")
        pool = self.general_pool
        if len(set(pool)) != len(pool):
            raise ConfigError("general_pool indices must be distinct")
        for i in pool:
            if not 0 <= i < len(self.pilots):
                raise ConfigError(f"general_pool index {i} out of range")
        if not self.evaluated_indices:
            raise ConfigError("general_pool leaves no pilots to evaluate")
        if self.expert.kind != "expert":
            raise ConfigError("expert slot must hold an expert pilot spec")
        if self.ergodic.bounds != (self.world.L1, self.world.L2):
            raise ConfigError("ergodic bounds must match the world domain")
        if self.ergodic.goal != self.world.goal:
            raise ConfigError("ergodic goal must match the world goal")

    @property
    def evaluated_indices(self) -> tuple[int, ...]:
        pool = set(self.general_pool)
        return tuple(i for i in range(len(self.pilots)) if i not in pool)

    @staticmethod
    def pilot_id(index: int) -> str:
        return f"pilot_{index:02d}"


def default_config(
    master_seed: int = 12,
    output_dir: str = "experiment_out",
    n_evaluated: int = 16,
    n_pool: int = 3,
    trials_train: int = 10,
    trials_eval: int = 10,
) -> ExperimentConfig:
    """The stock cohort: seeded novice roster + held-out pool + one expert."""
    world = WorldParams()
    rng = np.random.default_rng(derive_seed(master_seed, "skills"))
    skills = 0.2 + 0.4 * rng.random(n_evaluated + n_pool)
    pilots = tuple(
        PilotSpec.novice(float(skills[i]), seed=derive_seed(master_seed, "pilot", i))
        for i in range(n_evaluated + n_pool)
    )
    return ExperimentConfig(
        world=world,
        cost=default_cost(world),
        ergodic=ErgodicSpec(bounds=(world.L1, world.L2), goal=world.goal),
        pilots=pilots,
        general_pool=tuple(range(n_evaluated, n_evaluated + n_pool)),
        expert=PilotSpec.expert(seed=derive_seed(master_seed, "expert")),
        trials_train=trials_train,
        trials_eval=trials_eval,
        master_seed=master_seed,
        output_dir=output_dir,
    )


def _check_keys(doc: dict, allowed: set, where: str, optional: set = frozenset()) -> None:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = allowed - set(doc) - optional
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")


def _world_to_dict(w: WorldParams) -> dict:
    doc = dataclasses.asdict(w)
    doc["start"] = list(w.start)
    doc["goal"] = list(w.goal)
    return doc


def _world_from_dict(doc: dict) -> WorldParams:
    names = {f.name for f in dataclasses.fields(WorldParams)}
    _check_keys(doc, names, "world")
    kwargs = dict(doc)
    kwargs["start"] = tuple(float(v) for v in doc["start"])
    kwargs["goal"] = tuple(float(v) for v in doc["goal"])
    kwargs["max_steps"] = int(doc["max_steps"])
    for name in names - {"start", "goal", "max_steps"}:
        kwargs[name] = float(doc[name])
    return WorldParams(**kwargs)


def _cost_to_dict(c: CostSpec) -> dict:
    return {
        "Q": [[float(v) for v in row] for row in c.Q],
        "R": [[float(v) for v in row] for row in c.R],
        "goal_state": [float(v) for v in c.goal_state],
    }


def _cost_from_dict(doc: dict) -> CostSpec:
    _check_keys(doc, {"Q", "R", "goal_state"}, "cost")
    try:
        return CostSpec(
            Q=np.array(doc["Q"], dtype=float),
            R=np.array(doc["R"], dtype=float),
            goal_state=np.array(doc["goal_state"], dtype=float),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed cost block: {exc}") from exc


def _ergodic_to_dict(e: ErgodicSpec) -> dict:
    return {
        "bounds": list(e.bounds),
        "K_max": e.K_max,
        "goal": list(e.goal),
        "sigma_goal": e.sigma_goal,
        "weight_exponent": e.weight_exponent,
        "quad_points": e.quad_points,
    }


def _ergodic_from_dict(doc: dict) -> ErgodicSpec:
    _check_keys(
        doc, {"bounds", "K_max", "goal", "sigma_goal", "weight_exponent", "quad_points"}, "ergodic"
    )
    return ErgodicSpec(
        bounds=tuple(float(v) for v in doc["bounds"]),
        K_max=int(doc["K_max"]),
        goal=tuple(float(v) for v in doc["goal"]),
        sigma_goal=float(doc["sigma_goal"]),
        weight_exponent=float(doc["weight_exponent"]),
        quad_points=int(doc["quad_points"]),
    )


def _pilot_to_dict(p: PilotSpec) -> dict:
    return {
        "kind": p.kind,
        "seed": p.seed,
        "skill": p.skill,
        "reaction_delay": p.reaction_delay,
        "noise_std": p.noise_std,
    }


def _pilot_from_dict(doc: dict, where: str) -> PilotSpec:
    _check_keys(doc, {"kind", "seed", "skill", "reaction_delay", "noise_std"}, where)
    skill = doc["skill"]
    return PilotSpec(
        kind=str(doc["kind"]),
        seed=int(doc["seed"]),
        skill=None if skill is None else float(skill),
        reaction_delay=int(doc["reaction_delay"]),
        noise_std=float(doc["noise_std"]),
    )


_CONFIG_KEYS = {
    "master_seed",
    "output_dir",
    "trials_train",
    "trials_eval",
    "world",
    "cost",
    "ergodic",
    "pilots",
    "general_pool",
    "expert",
}


def config_to_dict(config: ExperimentConfig, include_output_dir: bool = True) -> dict:
    doc = {
        "master_seed": config.master_seed,
        "output_dir": config.output_dir,
        "trials_train": config.trials_train,
        "trials_eval": config.trials_eval,
        "world": _world_to_dict(config.world),
        "cost": _cost_to_dict(config.cost),
        "ergodic": _ergodic_to_dict(config.ergodic),
        "pilots": [_pilot_to_dict(p) for p in config.pilots],
        "general_pool": list(config.general_pool),
        "expert": _pilot_to_dict(config.expert),
    }
    if not include_output_dir:
        del doc["output_dir"]
    return doc


def config_from_dict(doc: dict, output_dir: str | None = None) -> ExperimentConfig:
    # output_dir may be supplied out-of-band (reports omit it so two runs of
    # the same cohort into different directories stay byte-identical)
    allowed = set(_CONFIG_KEYS)
    if output_dir is not None:
        allowed.discard("output_dir")
        if "output_dir" in doc:
            raise ConfigError("output_dir given both in the document and as an argument")
    _check_keys(doc, allowed, "config", optional={"output_dir"})
    pilots = doc["pilots"]
    if not isinstance(pilots, list):
        raise ConfigError("pilots must be a list")
    return ExperimentConfig(
        world=_world_from_dict(doc["world"]),
        cost=_cost_from_dict(doc["cost"]),
        ergodic=_ergodic_from_dict(doc["ergodic"]),
        pilots=tuple(_pilot_from_dict(p, f"pilots[{i}]") for i, p in enumerate(pilots)),
        general_pool=tuple(int(i) for i in doc["general_pool"]),
        expert=_pilot_from_dict(doc["expert"], "expert"),
        trials_train=int(doc["trials_train"]),
        trials_eval=int(doc["trials_eval"]),
        master_seed=int(doc["master_seed"]),
        output_dir=(
            output_dir
            if output_dir is not None
            else str(doc.get("output_dir", "experiment_out"))
        ),
    )


def save_config(config: ExperimentConfig, path: str | os.PathLike) -> None:
    # the stored document describes the cohort, not where it lives; omitting
    # output_dir keeps two runs of the same cohort byte-identical
    with open(path, "w") as fh:
        json.dump(config_to_dict(config, include_output_dir=False), fh, indent=2)
        fh.write("\n")


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


# --------------------------------------------------------------------------
# Single-trial engine


@dataclass(frozen=True)
class TickRecord:
    """What one tick recorded: the pre-step sample plus post-step status."""

    t: float
    state: LanderState
    u_user: ControlInput
    u_opt: ControlInput | None
    u_applied: ControlInput
    status: str  # "running" or a terminal status
    agreement_so_far: float


class TrialSession:
    """Tick-stepped trial: feed one raw command per tick, collect the log.

    The cockpit service and the offline runner both drive their trials
    through this class, which is what makes a live session with a scripted
    input sequence reproduce the offline runner's log byte for byte.
    """

    def __init__(
        self,
        params: WorldParams,
        cost: CostSpec,
        paradigm: str,
        seed: int,
        pilot_id: str,
        solution: LqrSolution | None = None,
    ):
        if paradigm not in PARADIGMS:
            raise ConfigError(f"unknown paradigm {paradigm!r}")
        self.shared = paradigm != "user_only"
        if self.shared and solution is None:
            raise ModelError(f"paradigm {paradigm} requires a solved model")
        self.params = params
        self.cost = cost
        self.paradigm = paradigm
        self.seed = seed
        self.pilot_id = pilot_id
        self.solution = solution
        self.state = sample_initial(derive_seed(seed, "init"), params)
        self.steps = 0
        self.outcome: TrialOutcome | None = None
        self._t: list[float] = []
        self._states: list[np.ndarray] = []
        self._u_user: list[tuple[float, float]] = []
        self._u_opt: list[tuple[float, float]] = []
        self._u_applied: list[tuple[float, float]] = []
        self._agree_pairs = 0

    @property
    def running(self) -> bool:
        return self.outcome is None

    @property
    def agreement_so_far(self) -> float:
        # user_only trials apply every (clamped) command, so report full
        # agreement rather than an undefined value
        if not self.shared:
            return 1.0
        if self.steps == 0:
            return 1.0
        return self._agree_pairs / (2.0 * self.steps)

    def tick(self, raw: ControlInput) -> TickRecord:
        if not self.running:
            raise DataError("trial already ended")
        # the log stores the clamped stick position: that is what the filter
        # compares against, so replaying filter(u_user, u_opt) reproduces
        # u_applied exactly
        user = clamp_input(raw)
        if self.shared:
            opt = optimal_input(self.solution, self.cost, self.state)
            applied = half_plane_filter(user, opt)
            self._agree_pairs += int(user.u_main * opt.u_main >= 0.0)
            self._agree_pairs += int(user.u_rot * opt.u_rot >= 0.0)
            self._u_opt.append((opt.u_main, opt.u_rot))
        else:
            opt = None
            applied = user
        t = self.steps * self.params.dt
        self._t.append(t)
        self._states.append(self.state.as_array())
        self._u_user.append((user.u_main, user.u_rot))
        self._u_applied.append((applied.u_main, applied.u_rot))

        self.state = step(self.state, applied, self.params)
        self.steps += 1
        verdict = judge(self.state, self.steps, self.params)
        if verdict is not RUNNING:
            self.outcome = verdict
        return TickRecord(
            t=t,
            state=LanderState.from_array(self._states[-1]),
            u_user=user,
            u_opt=opt,
            u_applied=applied,
            status="running" if self.running else self.outcome.status,
            agreement_so_far=self.agreement_so_far,
        )

    def abort(self) -> TrialOutcome:
        """End the trial early; recorded as a timeout at the current step."""
        if self.running:
            self.outcome = TrialOutcome("timeout", self.steps, self.steps * self.params.dt)
        return self.outcome

    def finish(self) -> TrialLog:
        if self.running:
            raise DataError("trial still running")
        n = self.steps
        return TrialLog(
            paradigm=self.paradigm,
            pilot_id=self.pilot_id,
            seed=self.seed,
            dt=self.params.dt,
            t=np.array(self._t),
            states=np.vstack(self._states) if n else np.zeros((0, 6)),
            u_user=np.array(self._u_user).reshape(n, 2),
            u_opt=np.array(self._u_opt).reshape(n, 2) if self.shared else None,
            u_applied=np.array(self._u_applied).reshape(n, 2),
            outcome=self.outcome,
        )


def run_trial(
    params: WorldParams,
    cost: CostSpec,
    paradigm: str,
    seed: int,
    pilot_id: str,
    pilot_spec: PilotSpec | None = None,
    solution: LqrSolution | None = None,
    inputs: Sequence[ControlInput] | None = None,
) -> TrialLog:
    """Run one trial to its verdict and return the log.

    The command source is, in order of precedence: an explicit per-tick
    ``inputs`` script (padded with zeros), a synthetic pilot built from
    ``pilot_spec`` with a trial-derived RNG, or, for shared paradigms with
    neither, the optimal controller itself (pure autopilot).  user_only with
    no source free-falls under zero input.
    """
    session = TrialSession(params, cost, paradigm, seed, pilot_id, solution)
    pilot = None
    if inputs is None and pilot_spec is not None:
        per_trial = dataclasses.replace(pilot_spec, seed=derive_seed(seed, "pilot"))
        pilot = Pilot(per_trial, params)
    autopilot = inputs is None and pilot is None and session.shared
    while session.running:
        if inputs is not None:
            raw = inputs[session.steps] if session.steps < len(inputs) else ZERO_INPUT
        elif pilot is not None:
            raw = pilot.command(session.state)
        elif autopilot:
            raw = optimal_input(solution, cost, session.state)
        else:
            raw = ZERO_INPUT
        session.tick(raw)
    return session.finish()


# --------------------------------------------------------------------------
# Model fitting from logs


def logs_to_trajectories(logs: Sequence[TrialLog]) -> list[list[JointSample]]:
    """Each log becomes one trajectory of (state, applied input) samples."""
    out = []
    for log in logs:
        traj = [
            JointSample(
                state=LanderState.from_array(log.states[i]),
                input=ControlInput(float(log.u_applied[i, 0]), float(log.u_applied[i, 1])),
                t=float(log.t[i]),
            )
            for i in range(log.n_samples)
        ]
        out.append(traj)
    return out


def fit_model_from_logs(logs: Sequence[TrialLog], ridge: float = DEFAULT_RIDGE) -> KoopmanModel:
    if not logs:
        raise DataError("no logs to fit from")
    return fit_koopman(logs_to_trajectories(logs), ridge=ridge)


# --------------------------------------------------------------------------
# Experiment pipeline

_MODEL_FILES = {"general": "general.json", "expert": "expert.json"}


def _individual_model_file(pilot_id: str) -> str:
    return f"individual_{pilot_id}.json"


def _model_key_for(paradigm: str, pilot_id: str) -> str:
    if paradigm == "shared_individual":
        return f"individual_{pilot_id}"
    if paradigm == "shared_general":
        return "general"
    if paradigm == "shared_expert":
        return "expert"
    raise ConfigError(f"paradigm {paradigm} has no model")


@dataclass
class _WorkerContext:
    config: ExperimentConfig
    solutions: dict[str, LqrSolution]


_CTX: _WorkerContext | None = None


def _init_worker(config: ExperimentConfig, solutions: dict[str, LqrSolution]) -> None:
    global _CTX
    _CTX = _WorkerContext(config=config, solutions=solutions)


def _trial_task(task: tuple[str, PilotSpec, str, int]) -> str:
    """Run one (pilot, label, index) trial and write its log file."""
    pilot_id, spec, label, trial_idx = task
    cfg = _CTX.config
    paradigm = "user_only" if label == TRAIN_LABEL else label
    solution = None
    if paradigm != "user_only":
        solution = _CTX.solutions[_model_key_for(paradigm, pilot_id)]
    seed = derive_seed(cfg.master_seed, pilot_id, label, trial_idx)
    log = run_trial(
        params=cfg.world,
        cost=cfg.cost,
        paradigm=paradigm,
        seed=seed,
        pilot_id=pilot_id,
        pilot_spec=spec,
        solution=solution,
    )
    rel = os.path.join(pilot_id, label, f"trial_{trial_idx:02d}.json")
    path = Path(cfg.output_dir) / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    save_log(log, path)
    return rel


def _run_tasks(tasks, config, solutions, jobs: int) -> list[str]:
    if jobs <= 1:
        _init_worker(config, solutions)
        return [_trial_task(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * jobs))
    with ProcessPoolExecutor(
        max_workers=jobs, initializer=_init_worker, initargs=(config, solutions)
    ) as pool:
        return list(pool.map(_trial_task, tasks, chunksize=chunk))


def _roster(config: ExperimentConfig) -> list[tuple[str, PilotSpec]]:
    ids = [(ExperimentConfig.pilot_id(i), spec) for i, spec in enumerate(config.pilots)]
    ids.append(("expert", config.expert))
    return ids


def run_demos(
    config: ExperimentConfig,
    jobs: int = 1,
    log: Callable[[str], None] | None = None,
) -> int:
    """Collect the unassisted demonstration trials for the whole roster.

    Writes config.json plus one log per (pilot, trial) under
    output_dir/<pilot>/train/ and returns the number of logs written.
    """
    say = log or (lambda msg: None)
    root = Path(config.output_dir)
    try:
        root.mkdir(parents=True, exist_ok=True)
        probe = root / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise DataError(f"output directory {root} is not writable: {exc}") from exc
    save_config(config, root / "config.json")
    say(f"demonstrations: {len(_roster(config))} pilots x {config.trials_train} trials")
    demo_tasks = [
        (pid, spec, TRAIN_LABEL, k)
        for pid, spec in _roster(config)
        for k in range(config.trials_train)
    ]
    _run_tasks(demo_tasks, config, {}, jobs)
    return len(demo_tasks)


def run_experiment(
    config: ExperimentConfig,
    jobs: int = 1,
    log: Callable[[str], None] | None = None,
) -> dict:
    """Run the whole protocol and write logs, models, report and CSVs.

    Returns the report document.  A pilot whose model cannot be fitted or
    stabilized is skipped and recorded in the report; failure of the general
    or expert model aborts, since three of the four paradigms depend on them.
    """
    say = log or (lambda msg: None)
    root = Path(config.output_dir)
    run_demos(config, jobs=jobs, log=log)

    def train_logs(pid: str) -> list[TrialLog]:
        d = root / pid / TRAIN_LABEL
        return [load_log(p) for p in sorted(d.glob("trial_*.json"))]

    say("fitting models")
    models_dir = root / "models"
    models_dir.mkdir(exist_ok=True)
    solutions: dict[str, LqrSolution] = {}
    skipped: list[dict] = []

    def fit_and_solve(key: str, file_name: str, logs: list[TrialLog]) -> None:
        model = fit_model_from_logs(logs)
        sol = solve_dare(extract_linear(model), config.cost)
        audit = {
            "residual": sol.residual,
            "closed_loop_radius": sol.closed_loop_radius,
            "gain": [[float(v) for v in row] for row in sol.gain],
            "u_ff": [float(v) for v in sol.u_ff],
        }
        save_model(model, models_dir / file_name, audit=audit)
        solutions[key] = sol

    evaluated: list[int] = []
    for i in config.evaluated_indices:
        pid = ExperimentConfig.pilot_id(i)
        try:
            fit_and_solve(f"individual_{pid}", _individual_model_file(pid), train_logs(pid))
            evaluated.append(i)
        except (DataError, ModelError) as exc:
            skipped.append({"pilot_id": pid, "reason": str(exc)})
            say(f"skipping {pid}: {exc}")

    pool_logs = [
        log_ for i in config.general_pool for log_ in train_logs(ExperimentConfig.pilot_id(i))
    ]
    fit_and_solve("general", _MODEL_FILES["general"], pool_logs)
    fit_and_solve("expert", _MODEL_FILES["expert"], train_logs("expert"))

    say(
        f"evaluation: {len(evaluated)} pilots x {len(PARADIGMS)} paradigms "
        f"x {config.trials_eval} trials"
    )
    eval_tasks = [
        (ExperimentConfig.pilot_id(i), config.pilots[i], paradigm, k)
        for i in evaluated
        for paradigm in PARADIGMS
        for k in range(config.trials_eval)
    ]
    _run_tasks(eval_tasks, config, solutions, jobs)

    say("building report")
    report, side_files = build_report(config, root, skipped_pilots=skipped)
    with open(root / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    for name, text in side_files.items():
        (root / name).write_text(text)
    say(f"report written to {root / 'report.json'}")
    return report


# --------------------------------------------------------------------------
# Report construction (pure function of config + log directory)


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _stats_block(groups: dict[str, list[float]], min_per_group: int = 2) -> dict:
    """Omnibus + pairwise table for one metric; degeneracies become messages."""
    from . import stats as st

    labels = [k for k in groups]
    block: dict = {"groups": {k: len(v) for k, v in groups.items()}}
    usable = all(len(groups[k]) >= min_per_group for k in labels) and len(labels) >= 2
    if not usable:
        block["anova"] = None
        block["pairwise"] = None
        block["error"] = "not enough observations in every group"
        return block
    try:
        block["anova"] = st.anova_oneway([groups[k] for k in labels]).to_dict()
    except (st.InsufficientDataError, st.DegenerateDataError) as exc:
        block["anova"] = None
        block["error"] = str(exc)
    pairs = [(labels[i], labels[j]) for i in range(len(labels)) for j in range(i + 1, len(labels))]
    rows = []
    try:
        for a, b in pairs:
            res = st.t_test_two_sample(groups[a], groups[b])
            rows.append({"a": a, "b": b, **res.to_dict()})
        decisions = st.holm_bonferroni([r["p_value"] for r in rows], STATS_ALPHA)
        for row, reject in zip(rows, decisions):
            row["reject"] = reject
        block["pairwise"] = rows
    except (st.InsufficientDataError, st.DegenerateDataError) as exc:
        block["pairwise"] = None
        block["error"] = str(exc)
    return block


def build_report(
    config: ExperimentConfig,
    root: str | os.PathLike,
    skipped_pilots: list[dict] | None = None,
) -> tuple[dict, dict[str, str]]:
    """Reduce the log directory to (report document, CSV side-files).

    Everything is recomputed from the stored logs and models, so running this
    over an existing directory reproduces the original report's metrics and
    stats sections exactly.
    """
    root = Path(root)
    bounds = (config.world.L1, config.world.L2)

    per_trial: list[dict] = []
    by_metric: dict[str, dict[str, list[float]]] = {
        "time_s": {p: [] for p in PARADIGMS},
        "path_length_m": {p: [] for p in PARADIGMS},
        "total_cost": {p: [] for p in PARADIGMS},
        "ergodicity": {p: [] for p in PARADIGMS},
    }
    agreement_groups: dict[str, list[float]] = {p: [] for p in SHARED_PARADIGMS}
    success_by_pilot: dict[str, dict[str, list[float]]] = {p: {} for p in PARADIGMS}
    heat_counts = {p: {k: np.zeros(HEATMAP_GRID) for k in ("all", "success", "failure")}
                   for p in PARADIGMS}

    n_eval_logs = 0
    for i in config.evaluated_indices:
        pid = ExperimentConfig.pilot_id(i)
        for paradigm in PARADIGMS:
            folder = root / pid / paradigm
            for path in sorted(folder.glob("trial_*.json")):
                log = load_log(path)
                n_eval_logs += 1
                tm = trial_metrics(log, config.cost)
                eps = ergodicity(log, config.ergodic)
                agr = agreement(log) if log.u_opt is not None else None
                per_trial.append(
                    {
                        "pilot_id": pid,
                        "paradigm": paradigm,
                        "trial": int(path.stem.split("_")[1]),
                        "seed": log.seed,
                        "status": log.outcome.status,
                        "success": tm.success,
                        "steps": log.outcome.steps,
                        "time_s": tm.time_s,
                        "path_length_m": tm.path_length_m,
                        "total_cost": tm.total_cost,
                        "ergodicity": eps,
                        "agreement": agr,
                    }
                )
                if tm.success:
                    by_metric["time_s"][paradigm].append(tm.time_s)
                    by_metric["path_length_m"][paradigm].append(tm.path_length_m)
                    by_metric["total_cost"][paradigm].append(tm.total_cost)
                by_metric["ergodicity"][paradigm].append(eps)
                if agr is not None:
                    agreement_groups[paradigm].append(agr)
                success_by_pilot[paradigm].setdefault(pid, []).append(1.0 if tm.success else 0.0)
                counts = heatmap_counts(log.positions(), HEATMAP_GRID, bounds)
                heat_counts[paradigm]["all"] += counts
                heat_counts[paradigm]["success" if tm.success else "failure"] += counts

    aggregates = {}
    for paradigm in PARADIGMS:
        rows = [r for r in per_trial if r["paradigm"] == paradigm]
        n_success = sum(1 for r in rows if r["success"])
        aggregates[paradigm] = {
            "n_trials": len(rows),
            "n_success": n_success,
            "success_rate": (n_success / len(rows)) if rows else None,
            "mean_time_s": _mean(by_metric["time_s"][paradigm]),
            "mean_path_length_m": _mean(by_metric["path_length_m"][paradigm]),
            "mean_total_cost": _mean(by_metric["total_cost"][paradigm]),
            "mean_ergodicity": _mean(by_metric["ergodicity"][paradigm]),
            "mean_agreement": _mean(agreement_groups.get(paradigm, [])),
        }

    success_groups = {
        p: [_mean(success_by_pilot[p][pid]) for pid in sorted(success_by_pilot[p])]
        for p in PARADIGMS
    }
    stats_doc = {"alpha": STATS_ALPHA}
    if config.trials_eval > 0 and n_eval_logs:
        for metric in ("time_s", "path_length_m", "total_cost", "ergodicity"):
            stats_doc[metric] = _stats_block(by_metric[metric])
        stats_doc["success_rate"] = _stats_block(success_groups)
        stats_doc["agreement"] = _stats_block(agreement_groups)

    train_count = 0
    for pid, _spec in _roster(config):
        train_count += len(list((root / pid / TRAIN_LABEL).glob("trial_*.json")))

    models_dir = root / "models"
    individual_models = []
    for i in config.evaluated_indices:
        p = models_dir / _individual_model_file(ExperimentConfig.pilot_id(i))
        if p.exists():
            individual_models.append(extract_linear(load_model(p)))
    similarity = None
    if len(individual_models) >= 2:
        a_pct, b_pct = model_similarity(individual_models)
        similarity = {
            "stdpct_A": a_pct,
            "stdpct_B": b_pct,
            "n_models": len(individual_models),
        }

    report = {
        "version": REPORT_VERSION,
        "config": config_to_dict(config, include_output_dir=False),
        "counts": {
            "train_logs": train_count,
            "eval_logs": n_eval_logs,
            "individual_models": len(individual_models),
            "general_model": (models_dir / _MODEL_FILES["general"]).exists(),
            "expert_model": (models_dir / _MODEL_FILES["expert"]).exists(),
        },
        "skipped_pilots": skipped_pilots or [],
        "metrics": {
            "ergodic_spec": _ergodic_to_dict(config.ergodic),
            "model_similarity": similarity,
            "aggregates": aggregates,
            "per_trial": per_trial,
        },
        "stats": stats_doc,
    }

    side_files = {"per_trial_metrics.csv": _per_trial_csv(per_trial)}
    for paradigm in PARADIGMS:
        for split, counts in heat_counts[paradigm].items():
            total = counts.sum()
            if total == 0:
                continue
            name = f"heatmap_{paradigm}.csv" if split == "all" else f"heatmap_{paradigm}_{split}.csv"
            side_files[name] = heatmap_csv(counts / total, bounds)
    return report, side_files


_CSV_COLUMNS = (
    "pilot_id",
    "paradigm",
    "trial",
    "seed",
    "status",
    "success",
    "steps",
    "time_s",
    "path_length_m",
    "total_cost",
    "ergodicity",
    "agreement",
)


def _per_trial_csv(rows: list[dict]) -> str:
    def cell(v) -> str:
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = [",".join(_CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(cell(row[c]) for c in _CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def evaluate_directory(
    root: str | os.PathLike, config: ExperimentConfig | None = None
) -> tuple[dict, dict[str, str]]:
    """Recompute the report for an existing experiment directory."""
    root = Path(root)
    if config is None:
        cfg_path = root / "config.json"
        if not cfg_path.exists():
            raise DataError(f"no config.json in {root}; pass a config explicitly")
        config = load_config(cfg_path)
    report, side_files = build_report(config, root)
    if report["counts"]["eval_logs"] == 0 and report["counts"]["train_logs"] == 0:
        raise DataError(f"no trial logs found under {root}")
    return report, side_files
