"""Command-line entry point.

Exit codes: 0 success / verdict pass, 1 computed but verdict fail, 2 could
not compute (bad input, invalid system, numerical failure).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import formats
from .errors import PhotonXferError
from .model import validate
from .pulses import TRUNC_EPS, pulse_for_target, separable_transfer_plan, zero_mode_pulse
from .scenarios import NAMES, ScenarioSpec, analyze, run_regression
from .simulate import CONS_TOL, FID_TOL, LEAK_TOL, Thresholds, assess, propagate
from .zeros import transmission_zeros

log = logging.getLogger("photonxfer")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class UsageError(PhotonXferError):
    pass


def _positive(kind):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
        return value

    return parse


def parse_coeffs(text: str) -> np.ndarray:
    """``"re,im;re,im;..."`` (a lone ``re`` is allowed) to a complex vector."""
    out = []
    for i, item in enumerate(t for t in text.split(";") if t.strip()):
        parts = [p.strip() for p in item.split(",")]
        try:
            if len(parts) == 1:
                out.append(complex(float(parts[0]), 0.0))
            elif len(parts) == 2:
                out.append(complex(float(parts[0]), float(parts[1])))
            else:
                raise ValueError
        except ValueError:
            raise UsageError(f"--coeffs entry {i + 1} ({item!r}): expected 're' or 're,im'") from None
    if not out:
        raise UsageError("--coeffs is empty")
    return np.array(out, dtype=np.complex128)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photonxfer", description="Zeros, pulse shaping and perfect single-photon transfer for passive linear quantum systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    def numeric(p):
        p.add_argument("--out", help="write the JSON result here instead of stdout")
        p.add_argument("--trunc-eps", type=_positive(float), default=TRUNC_EPS)

    def plan_opts(p):
        p.add_argument("--construction", default="separable", choices=["xi-row-combination", "zero-mode", "separable"])
        p.add_argument("--coeffs", help='coefficients "re,im;re,im;..." (target amplitudes or zero weights)')
        p.add_argument("--channel", type=int, help="input channel (1-based) for the separable route")

    def sim_opts(p):
        p.add_argument("--dt", type=_positive(float))
        p.add_argument("--fid-tol", type=_positive(float), default=FID_TOL)
        p.add_argument("--leak-tol", type=_positive(float), default=LEAK_TOL)
        p.add_argument("--cons-tol", type=_positive(float), default=CONS_TOL)
        p.add_argument("--dump-trajectory", metavar="PATH", help="CSV of psi and eta samples")

    p = sub.add_parser("validate", help="check structural conditions of a system file")
    p.add_argument("--system", required=True)
    p.add_argument("--out")

    p = sub.add_parser("zeros", help="list transmission zeros")
    p.add_argument("--system", required=True)
    p.add_argument("--out")

    p = sub.add_parser("pulse", help="synthesize an input pulse plan")
    p.add_argument("--system", required=True)
    numeric(p)
    plan_opts(p)
    p.add_argument("--samples-csv", metavar="PATH", help="dense sampling of the normalized pulse")
    p.add_argument("--samples", type=_positive(int), default=2001)

    p = sub.add_parser("simulate", help="drive the system with a plan and report the transfer")
    p.add_argument("--system", required=True)
    numeric(p)
    plan_opts(p)
    sim_opts(p)

    p = sub.add_parser("demo", help="run one of the canned two-cavity / ring-resonator scenarios")
    p.add_argument("scenario", choices=list(NAMES) + ["all"])
    p.add_argument("--config", help='scenario JSON {"name": ..., "parameters": {...}}')
    for flag in ("--alpha", "--beta", "--gamma1", "--gamma2"):
        p.add_argument(flag, type=float)
    p.add_argument("--coeffs")
    p.add_argument("--channel", type=int)
    p.add_argument("--simulate", action="store_true")
    p.add_argument("--workers", type=_positive(int), default=1)
    numeric(p)
    sim_opts(p)
    return parser


def _emit(payload, out: str | None) -> None:
    text = formats.dumps(payload)
    if out:
        formats.write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _channel(args):
    if args.channel is None:
        return None
    if args.channel < 1:
        raise UsageError(f"--channel is 1-based, got {args.channel}")
    return args.channel - 1


def _make_plan(system, args):
    if args.construction == "separable":
        if args.coeffs:
            raise UsageError("--coeffs has no effect with --construction separable")
        plan, why = separable_transfer_plan(system, channel=_channel(args), trunc_eps=args.trunc_eps)
        return plan, why
    if args.construction == "xi-row-combination":
        x = parse_coeffs(args.coeffs) if args.coeffs else np.eye(system.n, dtype=complex)[0]
        return pulse_for_target(system, x, trunc_eps=args.trunc_eps), "target coefficients " + np.array2string(x)
    records = transmission_zeros(system)
    x = parse_coeffs(args.coeffs) if args.coeffs else np.eye(len(records), dtype=complex)[0]
    if len(x) > len(records):
        raise UsageError(f"--coeffs has {len(x)} entries but the system has {len(records)} zeros")
    return zero_mode_pulse(records[: len(x)], x, trunc_eps=args.trunc_eps), f"weights on the first {len(x)} zeros"


def _thresholds(args) -> Thresholds:
    return Thresholds(args.fid_tol, args.leak_tol, args.cons_tol)


def cmd_validate(args) -> int:
    report = validate(formats.load_system(args.system))
    _emit(report, args.out)
    for msg in report.messages:
        log.warning(msg)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_zeros(args) -> int:
    records = transmission_zeros(formats.load_system(args.system))
    _emit(formats.zero_report(records), args.out)
    return EXIT_OK


def cmd_pulse(args) -> int:
    system = formats.load_system(args.system)
    plan, why = _make_plan(system, args)
    if plan is None:
        _emit({"plan": None, "normalized": None, "justification": why}, args.out)
        log.warning(why)
        return EXIT_FAIL
    norm = plan.normalized()
    _emit({"plan": formats.plan_to_dict(plan), "normalized": formats.plan_to_dict(norm), "justification": why}, args.out)
    if args.samples_csv:
        times, amps = norm.sample(args.samples)
        formats.write_atomic(args.samples_csv, formats.samples_csv(times, amps))
    return EXIT_OK


def cmd_simulate(args) -> int:
    system = formats.load_system(args.system)
    plan, why = _make_plan(system, args)
    if plan is None:
        log.error(why)
        _emit({"report": None, "justification": why}, args.out)
        return EXIT_FAIL
    plan = plan.normalized()
    traj = propagate(system, plan, args.dt)
    report = assess(traj, plan, _thresholds(args))
    if args.dump_trajectory:
        formats.write_atomic(args.dump_trajectory, formats.trajectory_csv(traj))
    _emit({"schema": formats.REPORT_SCHEMA, "report": report, "plan": formats.plan_to_dict(plan), "justification": why}, args.out)
    log.info("fidelity %.12f leakage %.3e verdict %s", report.fidelity, report.leakage, report.verdict)
    return EXIT_OK if report.passed else EXIT_FAIL


def _demo_spec(name: str, args) -> ScenarioSpec:
    params = {}
    if args.config:
        cname, params = formats.scenario_config_from_dict(formats.load_json(args.config))
        if args.scenario != "all" and cname != name:
            raise UsageError(f"--config is for {cname!r} but the command asked for {name!r}")
    for key in ("alpha", "beta", "gamma1", "gamma2"):
        if getattr(args, key) is not None:
            params[key] = getattr(args, key)
    if args.coeffs:
        params["x"] = list(parse_coeffs(args.coeffs))
    if args.channel is not None:
        params["channel"] = _channel(args)
    if name != "example4":
        params.pop("gamma1", None)
        params.pop("gamma2", None)
    return ScenarioSpec(name, params)


def _demo_one(name: str, args) -> tuple[dict, bool]:
    spec = _demo_spec(name, args)
    if args.simulate:
        res = run_regression(spec, dt=args.dt, thresholds=_thresholds(args), trunc_eps=args.trunc_eps)
        if args.dump_trajectory and args.scenario != "all":
            formats.write_atomic(args.dump_trajectory, formats.trajectory_csv(res.trajectory))
        payload = {
            "scenario": name,
            "parameters": spec.parameters,
            "passed": res.passed,
            "report": res.report,
            "comparison": res.table,
            "flags": res.flags,
            "plan": formats.plan_to_dict(res.plan),
        }
        return payload, res.passed
    an = analyze(spec, trunc_eps=args.trunc_eps)
    payload = {
        "scenario": name,
        "parameters": spec.parameters,
        "passed": an.passed,
        "zeros": formats.zero_report(an.records),
        "comparison": an.table,
        "flags": an.flags,
        "plan": formats.plan_to_dict(an.plan),
    }
    return payload, an.passed


def _demo_worker(name, args):
    payload, ok = _demo_one(name, args)
    # render in the worker so the parent only handles text
    return formats.to_jsonable(payload), ok


def cmd_demo(args) -> int:
    names = list(NAMES) if args.scenario == "all" else [args.scenario]
    if len(names) > 1 and args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_demo_worker, names, [args] * len(names)))
    else:
        results = [_demo_one(n, args) for n in names]
    payloads = [r[0] for r in results]
    ok = all(r[1] for r in results)
    for payload in payloads:
        report = payload.get("report")
        if report is not None:
            rep = formats.to_jsonable(report)
            log.info("%s: fidelity %s verdict %s", payload["scenario"], formats.dumps(rep["fidelity"]).strip(), rep["verdict"])
    _emit(payloads[0] if len(payloads) == 1 else payloads, args.out)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"validate": cmd_validate, "zeros": cmd_zeros, "pulse": cmd_pulse, "simulate": cmd_simulate, "demo": cmd_demo}


def _configure_logging() -> None:
    level = os.environ.get("PHOTONXFER_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(stream=sys.stderr, level=levels.get(level, logging.WARNING), format="photonxfer: %(levelname)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (PhotonXferError, ArithmeticError, ValueError) as exc:
        print(f"photonxfer: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
