"""Command-line front end.

Subcommands: demo (demonstrations only), train (fit a model from logs),
run (one trial), eval (report over a log directory), serve (cockpit
service), experiment (full protocol).  Exit codes: 0 success, 1 usage error,
2 data or model error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .controller import default_cost, solve_dare
from .errors import NonStabilizableError, SharedLanderError
from .experiment import (
    ExperimentConfig,
    default_config,
    fit_model_from_logs,
    evaluate_directory,
    load_config,
    run_demos,
    run_experiment,
    run_trial,
)
from .koopman import extract_linear, load_model, save_model
from .metrics import PARADIGMS, load_log, save_log
from .pilots import PilotSpec
from .sim import ControlInput


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; our contract reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_or_default_config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        config = load_config(args.config)
        updates = {}
        if getattr(args, "seed", None) is not None:
            updates["master_seed"] = args.seed
        if getattr(args, "out", None):
            updates["output_dir"] = args.out
        return dataclasses.replace(config, **updates) if updates else config
    return default_config(
        master_seed=args.seed if getattr(args, "seed", None) is not None else 12,
        output_dir=getattr(args, "out", None) or "experiment_out",
    )


def _parse_pilot(text: str, parser: _Parser) -> PilotSpec:
    if text == "expert":
        return PilotSpec.expert(seed=0)
    if text.startswith("novice:"):
        try:
            skill = float(text.split(":", 1)[1])
        except ValueError:
            parser.error(f"bad pilot spec {text!r}")
        return PilotSpec.novice(skill, seed=0)
    parser.error(f"bad pilot spec {text!r}; use 'expert' or 'novice:SKILL'")


def _cmd_demo(args, parser) -> int:
    config = _load_or_default_config(args)
    n = run_demos(config, jobs=args.jobs, log=print)
    print(f"wrote {n} demonstration logs to {config.output_dir}")
    return 0


def _cmd_train(args, parser) -> int:
    logs = []
    for name in args.logs:
        p = Path(name)
        if p.is_dir():
            found = sorted(p.glob("trial_*.json"))
            if not found:
                parser.error(f"{p} contains no trial_*.json files")
            logs.extend(load_log(f) for f in found)
        else:
            logs.append(load_log(p))
    model = fit_model_from_logs(logs)
    linear = extract_linear(model)
    audit = None
    note = ""
    try:
        sol = solve_dare(linear, default_cost_for(args))
        audit = {
            "residual": sol.residual,
            "closed_loop_radius": sol.closed_loop_radius,
            "gain": [[float(v) for v in row] for row in sol.gain],
            "u_ff": [float(v) for v in sol.u_ff],
        }
        note = f" (closed-loop radius {sol.closed_loop_radius:.4f})"
    except NonStabilizableError as exc:
        audit = {"stabilizable": False, "error": str(exc)}
        note = " (warning: not stabilizable under the default cost)"
    out = args.out or "model.json"
    save_model(model, out, audit=audit)
    print(f"fitted model from {len(logs)} logs, {model.n_samples} samples -> {out}{note}")
    return 0


def default_cost_for(args):
    if getattr(args, "config", None):
        return load_config(args.config).cost
    return default_cost(default_config().world)


def _cmd_run(args, parser) -> int:
    config = _load_or_default_config(args)
    solution = None
    if args.paradigm != "user_only":
        if not args.model:
            parser.error(f"--paradigm {args.paradigm} requires --model")
        solution = solve_dare(extract_linear(load_model(args.model)), config.cost)
    inputs = None
    if args.inputs:
        with open(args.inputs) as fh:
            doc = json.load(fh)
        inputs = [ControlInput(float(a), float(b)) for a, b in doc]
    pilot_spec = _parse_pilot(args.pilot, parser) if args.pilot else None
    log = run_trial(
        params=config.world,
        cost=config.cost,
        paradigm=args.paradigm,
        seed=args.seed if args.seed is not None else 0,
        pilot_id=pilot_spec.kind if pilot_spec else "scripted",
        pilot_spec=pilot_spec,
        solution=solution,
        inputs=inputs,
    )
    out = args.out or "trial_log.json"
    save_log(log, out)
    o = log.outcome
    print(f"{o.status} after {o.steps} steps ({o.wall_time:.2f} s) -> {out}")
    return 0


def _cmd_eval(args, parser) -> int:
    config = load_config(args.config) if args.config else None
    report, side_files = evaluate_directory(args.dir, config=config)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.json", "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
        for name, text in side_files.items():
            (out / name).write_text(text)
        print(f"report written to {out / 'report.json'}")
    else:
        json.dump(report, sys.stdout, indent=2)
        print()
    return 0


def _cmd_serve(args, parser) -> int:
    from .server import ServeSettings, serve

    config = _load_or_default_config(args) if args.config else None
    settings = ServeSettings(
        world=config.world if config else default_config().world,
        cost=config.cost if config else None,
        output_dir=args.out or "cockpit_out",
        static_dir=args.static,
    )
    serve(args.bind, settings)
    return 0


def _cmd_experiment(args, parser) -> int:
    config = _load_or_default_config(args)
    report = run_experiment(config, jobs=args.jobs, log=print)
    agg = report["metrics"]["aggregates"]
    for paradigm in PARADIGMS:
        a = agg[paradigm]
        rate = a["success_rate"]
        rate_text = f"{rate:.0%}" if rate is not None else "n/a"
        time_text = f"{a['mean_time_s']:.2f} s" if a["mean_time_s"] is not None else "n/a"
        print(f"  {paradigm:18s} success {rate_text:>5s}  mean time {time_text}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="sharedlander", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, out_help):
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", help=out_help)

    p = sub.add_parser("demo", help="collect demonstration trials only")
    common(p, "output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_demo)

    p = sub.add_parser("train", help="fit a model from recorded logs")
    p.add_argument("logs", nargs="+", help="log files or directories of trial_*.json")
    p.add_argument("--config", help="experiment config JSON (for the cost used in the audit)")
    p.add_argument("--out", help="model file to write (default model.json)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("run", help="run a single trial")
    common(p, "log file to write (default trial_log.json)")
    p.add_argument("--paradigm", choices=PARADIGMS, default="user_only")
    p.add_argument("--model", help="model file (required for shared paradigms)")
    p.add_argument("--pilot", help="'expert' or 'novice:SKILL' synthetic pilot")
    p.add_argument("--inputs", help="JSON file with one [u_main, u_rot] pair per tick")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("eval", help="recompute metrics and stats over a log directory")
    p.add_argument("dir", help="experiment output directory")
    p.add_argument("--config", help="config override (default: config.json in the directory)")
    p.add_argument("--out", help="write report.json and CSVs here instead of stdout")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="start the cockpit service")
    p.add_argument("--bind", default="127.0.0.1:8000", help="HOST:PORT")
    p.add_argument("--config", help="experiment config JSON for world/cost")
    p.add_argument("--out", help="service root, holds sessions/ and models/ (default cockpit_out)")
    p.add_argument("--static", help="directory with the browser cockpit build")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("experiment", help="run the full evaluation protocol")
    common(p, "output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    except SharedLanderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
