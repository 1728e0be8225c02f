"""Command-line entry point: ``sim <subcommand> [flags]``.

Subcommands: ``metrics`` (property suite), ``qkd`` (single protocol run),
``auth`` (hash-family sweep), ``compose`` (composition scenarios),
``lockdemo`` (information locking).  Exit status is 0 when every checked
bound holds, 2 when any bound is violated, and 1 on usage or config errors.
"""

from __future__ import annotations

import argparse
import sys

from . import tolerances as tol
from .harness import (
    ConfigError,
    ReportRow,
    RunConfig,
    emit_csv,
    parse_attack,
    parse_config,
    run_scenario,
)
from .metrics import property_suite
from .protocols import bb84, scenarios
from .protocols.auth import exhaustive_substitution_advantage
from .protocols.hashing import affine_family, verify_asu2


def _write(path, header, lines):
    text = header + "\n" + "".join(line + "\n" for line in lines)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read(), require_seed=args.seed is None)
    else:
        cfg = parse_config("", require_seed=False)
    if args.seed is not None:
        cfg = RunConfig(scenario=cfg.scenario, seed=args.seed, params=cfg.params,
                        attack=cfg.attack, out=cfg.out)
    return cfg


def cmd_metrics(args) -> int:
    cfg = _load_config(args)
    results = property_suite(cfg.seed, getattr(args, "trials", None)
                             or cfg.param("trials"))
    lines = [f"{r.name},{r.trials},{_fmt(r.max_violation)},"
             f"{'true' if r.passed else 'false'}" for r in results]
    _write(args.out, "property_name,trials,max_violation,pass", lines)
    return 0 if all(r.passed for r in results) else 2


def cmd_qkd(args) -> int:
    cfg = _load_config(args)
    params = bb84.default_params(
        n_qubits=cfg.param("n_qubits"), t=cfg.param("t"), q_tol=cfg.param("q_tol"),
        out_len=cfg.param("out_len"), h_rows=cfg.param("h_rows"), seed=cfg.seed)
    attack = parse_attack(args.attack or cfg.attack, params.n_qubits)
    run = bb84.qkd_run(params, attack)
    holds = run.advantage <= run.decomposition_bound + tol.METRIC_TOL
    line = (f"{params.n_qubits},{attack.name},{_fmt(run.p_abort)},"
            f"{_fmt(run.eps_cor)},{_fmt(run.eps_sec)},{_fmt(run.advantage)},"
            f"{'true' if holds else 'false'}")
    _write(args.out, "n,attack,p_abort,eps_cor,eps_sec,advantage,thm1_holds", [line])
    return 0 if holds else 2


def cmd_auth(args) -> int:
    fam = affine_family(args.b)
    worst_pair, bound, uniform = verify_asu2(fam)
    advantage = exhaustive_substitution_advantage(fam)
    rows = [
        ("asu2-pair-probability", worst_pair, bound, worst_pair <= bound + tol.EXACT_TOL),
        ("asu2-tag-uniformity", 0.0 if uniform else 1.0, 0.0, uniform),
        ("substitution-advantage", advantage, fam.epsilon,
         advantage <= fam.epsilon + tol.EXACT_TOL),
    ]
    lines = [f"{args.b},{name},{_fmt(m)},{_fmt(b)},{'true' if h else 'false'}"
             for name, m, b, h in rows]
    _write(args.out, "b,case,measured,bound,holds", lines)
    return 0 if all(h for *_, h in rows) else 2


def cmd_compose(args) -> int:
    cfg = _load_config(args)
    cfg = RunConfig(scenario=args.name, seed=cfg.seed, params=cfg.params,
                    attack=cfg.attack, out=cfg.out)
    rows = run_scenario(cfg)
    lines = [f"{r.scenario},{r.case},{_fmt(r.measured)},{_fmt(r.bound)},"
             f"{'true' if r.holds else 'false'}" for r in rows]
    _write(args.out, "scenario,attack_id,advantage,bound,holds", lines)
    return 0 if all(r.holds for r in rows) else 2


def cmd_lockdemo(args) -> int:
    report = scenarios.locking_demo(args.m)
    rows = [
        ReportRow("lockdemo", "post-reveal-bits", report.post_reveal_info,
                  float(args.m), abs(report.post_reveal_info - args.m) <= tol.METRIC_TOL),
        ReportRow("lockdemo", "pre-reveal-k2-bits", report.pre_reveal_k2_info,
                  float(args.m), report.pre_reveal_k2_info < args.m),
        ReportRow("lockdemo", "pre-reveal-key-bits", report.pre_reveal_key_info,
                  float(args.m), True),
        ReportRow("lockdemo", "locking-gap", report.gap, float(args.m), True),
    ]
    if args.out:
        emit_csv(rows, args.out)
    else:
        for r in rows:
            sys.stdout.write(f"{r.case}: {_fmt(r.measured)}\n")
    return 0 if all(r.holds for r in rows) else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim",
        description="exact desk-scale verification of composable QKD security")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="64-bit run seed")
        p.add_argument("--out", default=None, help="output CSV path (default stdout)")
        p.add_argument("--config", default=None, help="key = value config file")

    p_metrics = sub.add_parser("metrics", help="metric/coupling/entropy property suite")
    p_metrics.add_argument("action", choices=["check"])
    p_metrics.add_argument("--trials", type=int, default=None)
    common(p_metrics)
    p_metrics.set_defaults(func=cmd_metrics)

    p_qkd = sub.add_parser("qkd", help="evaluate one protocol run exactly")
    p_qkd.add_argument("action", choices=["run"])
    p_qkd.add_argument("--attack", default=None,
                       help="identity | intercept-resend:p | depolarize:q | "
                            "steal-replace | custom:FILE")
    common(p_qkd)
    p_qkd.set_defaults(func=cmd_qkd)

    p_auth = sub.add_parser("auth", help="authentication family checks")
    p_auth.add_argument("action", choices=["sweep"])
    p_auth.add_argument("--b", type=int, required=True, help="tag bits")
    common(p_auth)
    p_auth.set_defaults(func=cmd_auth)

    p_comp = sub.add_parser("compose", help="composition scenarios")
    p_comp.add_argument("action", choices=["scenario"])
    p_comp.add_argument("--name", required=True,
                        choices=["leaked-key", "qkd-otp", "parallel-qkd",
                                 "key-expansion", "metrics-suite"])
    common(p_comp)
    p_comp.set_defaults(func=cmd_compose)

    p_lock = sub.add_parser("lockdemo", help="information locking demo")
    p_lock.add_argument("--m", type=int, required=True, help="locked data bits (<= 3)")
    common(p_lock)
    p_lock.set_defaults(func=cmd_lockdemo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
