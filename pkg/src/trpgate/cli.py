"""Command-line entry point: ``trpgate {resonances,simulate,sweep,cnot,translate}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
import warnings

from . import __version__
from .cnot import (
    CNOT_SETTINGS,
    SelectivityWarning,
    column_phases,
    gate_fidelity,
    ideal_cnot,
    level_structure,
    simulate_cnot,
)
from .config import COMMANDS, ConfigError, RunConfig, load_config
from .dynamics import FAULT_TOLERANCE_THRESHOLD, IntegrationError, evolve, write_trajectory_csv
from .profiles import resonance_times, translate
from .search import sweep_eta

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def format_resonances(times) -> str:
    count = len(times)
    label = "resonance" if count == 1 else "resonances"
    parts = ["0" if t == 0 else f"{t:+.4g}" for t in times]
    return f"{count} {label}: {', '.join(parts)}"


def _out_dir(cfg: RunConfig, args, default):
    if args.out is not None:
        return args.out
    return cfg.output.get("dir", default)


def _workers(cfg: RunConfig, args) -> int:
    w = args.workers if args.workers is not None else cfg.output.get("workers", 1)
    if isinstance(w, bool) or not isinstance(w, int) or w < 1:
        raise ConfigError(f"workers must be a positive integer, got {w!r}")
    return w


def cmd_resonances(cfg: RunConfig, args) -> int:
    p = cfg.profile
    if p is None:
        raise ConfigError("missing 'profile' block")
    if p.get("eta") is not None or p.get("lambda") is not None:
        profile = None
        if p.get("n") is None or p.get("eta") is None:
            raise ConfigError("profile block needs n and eta")
        n, eta = p["n"], p["eta"]
        if isinstance(n, bool) or not isinstance(n, int):
            raise ConfigError(f"profile.n must be an integer, got {n!r}")
        if isinstance(eta, bool) or not isinstance(eta, (int, float)):
            raise ConfigError(f"profile.eta must be a number, got {eta!r}")
    else:
        profile = cfg.build_profile()
        n, eta = profile.n, profile.eta
    rs = resonance_times(n, float(eta))
    print(format_resonances(rs.times))
    print(f"regime: {rs.regime.value}")
    out = _out_dir(cfg, args, None)
    if out is not None:
        atomic_write(os.path.join(out, "resonances.json"), _dump({
            "n": n, "eta": eta, "count": len(rs), "times": list(rs.times),
            "regime": rs.regime.name, "degenerate": rs.degenerate}))
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    profile = cfg.build_profile()
    settings = cfg.build_settings()
    traj = evolve(profile, settings)
    rs = profile.resonances()
    summary = {
        "final_P": traj.final_p,
        "norm_drift": traj.norm_drift,
        "resonance_times": list(rs.times),
        "regime": rs.regime.name,
        "fault_tolerant": traj.final_p < FAULT_TOLERANCE_THRESHOLD,
        "n": profile.n,
        "lambda": profile.lam,
        "eta": profile.eta,
        "tau0": profile.tau0,
        "n_points": len(traj),
        "steps": traj.n_steps,
    }
    out = _out_dir(cfg, args, ".")
    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    atomic_write(os.path.join(out, "trajectory.csv"), buf.getvalue())
    atomic_write(os.path.join(out, "summary.json"), _dump(summary))
    print(f"final P = {traj.final_p:.6g} (norm drift {traj.norm_drift:.2g}, "
          f"tau0 = {profile.tau0:g}); {format_resonances(rs.times)}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    spec = cfg.build_sweep()
    result = sweep_eta(spec, workers=_workers(cfg, args))
    timing = cfg.output.get("timing", False)
    if not isinstance(timing, bool):
        raise ConfigError(f"output.timing must be true or false, got {timing!r}")
    out = _out_dir(cfg, args, ".")
    buf = io.StringIO()
    result.write_csv(buf, timing=timing)
    atomic_write(os.path.join(out, "sweep.csv"), buf.getvalue())
    atomic_write(os.path.join(out, "sweep.meta.json"), _dump(result.metadata()))
    for r in result.rows:
        status = r.error if r.error else f"P = {r.P:.6g}"
        print(f"eta = {r.eta:.6g}: {status}")
    if result.failures:
        print(f"{len(result.failures)} row(s) failed", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_cnot(cfg: RunConfig, args) -> int:
    system = cfg.build_system()
    profile = cfg.build_profile()
    settings = cfg.build_settings(CNOT_SETTINGS)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SelectivityWarning)
        U = simulate_cnot(system, profile, settings, workers=_workers(cfg, args))
    notes = [str(w.message) for w in caught if issubclass(w.category, SelectivityWarning)]
    for note in notes:
        print(f"warning: {note}", file=sys.stderr)
    ref = ideal_cnot()
    levels = level_structure(system)
    fidelity = gate_fidelity(U, ref)
    report = U.to_dict()
    report.update({
        "transition_probabilities": U.transition_probabilities().tolist(),
        "fidelity_vs_cnot": fidelity,
        "column_phases": column_phases(U, ref).tolist(),
        "unitarity_error": U.unitarity_error(),
        "selectivity_warning": notes[0] if notes else None,
        "system": {"omega_c": system.omega_c, "omega_t": system.omega_t, "J": system.J},
        "levels": {"energies": list(levels.energies), "omega_plus": levels.omega_plus,
                   "omega_minus": levels.omega_minus},
    })
    out = _out_dir(cfg, args, ".")
    atomic_write(os.path.join(out, "gate.json"), _dump(report))
    print(f"fidelity vs CNOT = {fidelity:.10g}; unitarity error {U.unitarity_error():.2g}")
    return EXIT_OK


def cmd_translate(cfg: RunConfig, args) -> int:
    exp = cfg.build_experiment()
    p = cfg.profile or {}
    if p.get("n") is None or p.get("lambda") is None:
        raise ConfigError("translate needs profile.n and profile.lambda")
    n, lam, eta = p["n"], p["lambda"], p.get("eta")
    if isinstance(n, bool) or not isinstance(n, int):
        raise ConfigError(f"profile.n must be an integer, got {n!r}")
    table = translate(n, exp, float(lam), None if eta is None else float(eta))
    unit = "rad/s" if exp.angular else "Hz"
    print(f"n = {n}")
    print(f"theory:     lambda = {table['lambda']:.10g}  eta = {table['eta']:.10g}  "
          f"a = {table['a']:.10g}  b = {table['b']:.10g}  B = {table['B']:.10g}")
    print(f"experiment: A = {exp.A:.10g} Hz  delta = {exp.delta:.10g} Hz  "
          f"omega1 = {exp.omega1:.10g} Hz  B_exp = {table['B_exp']:.10g}  ({unit} reading)")
    if "T4_s" in table:
        print(f"T4 = {table['T4_s']:.10g} s = {1e3 * table['T4_s']:.4f} ms")
    out = _out_dir(cfg, args, None)
    if out is not None:
        atomic_write(os.path.join(out, "translate.json"), _dump(table))
    return EXIT_OK


HANDLERS = {
    "resonances": cmd_resonances,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "cnot": cmd_cnot,
    "translate": cmd_translate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--workers", type=int, metavar="N", help="parallel workers")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override a config value by dotted path, e.g. profile.eta=4e-3")
    parser = argparse.ArgumentParser(prog="trpgate",
                                     description="Twisted rapid passage qubit control.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "resonances": "list resonance times and their regime",
        "simulate": "integrate one sweep; write trajectory CSV and summary JSON",
        "sweep": "scan twist strength; write sweep CSV and metadata",
        "cnot": "simulate the two-qubit gate; write gate JSON",
        "translate": "convert between theory and experimental parameters",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        if args.workers is not None and args.workers < 1:
            raise ConfigError(f"--workers must be positive, got {args.workers}")
        return HANDLERS[args.command](cfg, args)
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
