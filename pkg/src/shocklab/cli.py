"""Command-line entry point.

    shocklab <simulate|profile|verify|poincare|accept> --config PATH [--config PATH ...]
             [--out DIR] [--threads N]

Every invocation writes one directory per config under ``--out`` named
``<UTC timestamp>_<mode>_<config hash>`` with a ``manifest.json`` that is
written even when the run fails.

Exit codes: 0 pass, 1 usage or config error, 2 numerical failure,
3 acceptance failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import os
import platform
import subprocess
import sys
import time
import traceback
from dataclasses import asdict
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from ._accel import USE_NUMBA, set_threads
from .config import ConfigError, ExperimentConfig, MODES, dump_config, load_config

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_ACCEPT = 0, 1, 2, 3

log = logging.getLogger("shocklab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="shocklab", description="Viscous shock stability experiments.")
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", action="append", required=True, metavar="PATH",
                   help="experiment config; repeat for a batch")
    p.add_argument("--out", default="runs", metavar="DIR", help="parent directory for run outputs")
    p.add_argument("--threads", type=int, default=None, metavar="N",
                   help="numba threads (default: $SHOCKLAB_THREADS)")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def code_version() -> str:
    here = Path(__file__).resolve().parent
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], cwd=here, capture_output=True,
                             text=True, timeout=5)
        if rev.returncode == 0 and rev.stdout.strip():
            return f"{__version__}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def make_run_dir(parent: Path, mode: str, digest: str) -> Path:
    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    parent.mkdir(parents=True, exist_ok=True)
    base = parent / f"{stamp}_{mode}_{digest}"
    path, k = base, 1
    while True:
        try:
            path.mkdir()
            return path
        except FileExistsError:
            k += 1
            path = Path(f"{base}-{k}")


class Manifest:
    def __init__(self, run_dir: Path, mode: str, config_path: str):
        self.path = run_dir / "manifest.json"
        self.data = {
            "mode": mode, "config_path": str(config_path), "version": code_version(),
            "python": platform.python_version(), "numpy": np.__version__, "numba_kernels": USE_NUMBA,
            "started": _dt.datetime.now(_dt.timezone.utc).isoformat(), "status": "running",
            "artifacts": [],
        }
        self._t0 = time.perf_counter()
        self.write()

    def update(self, **kw):
        self.data.update(kw)
        self.write()

    def artifact(self, name: str):
        self.data["artifacts"].append(name)

    def finish(self, status: str, exit_code: int, **kw):
        self.data.update(kw)
        self.data.update(status=status, exit_code=exit_code, wall_time_s=time.perf_counter() - self._t0,
                         finished=_dt.datetime.now(_dt.timezone.utc).isoformat())
        self.write()

    def write(self):
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.data, indent=2, sort_keys=True, default=_jsonable) + "\n")
        os.replace(tmp, self.path)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


# ---------------------------------------------------------------- modes


def _mode_profile(cfg: ExperimentConfig, run_dir: Path, man: Manifest) -> int:
    from .profile import decay_rate_fit, linearized_rates, ode_residual, solve_profile
    states, consts = cfg.shock()
    tab = solve_profile(states, consts, cfg.law(), cfg.visc())
    tab.to_csv(run_dir / "profile.csv")
    man.artifact("profile.csv")
    res = ode_residual(tab)
    fit, lin = decay_rate_fit(tab), linearized_rates(tab)
    ok = res <= 1e-10
    man.update(results={"ode_residual": res, "tail_rates_fit": fit, "tail_rates_linear": lin,
                        "sigma": consts.sigma, "sigma_star": consts.sigma_star, "delta": consts.delta,
                        "shift_gain": consts.shift_gain, "half_length": tab.half_length})
    log.info("profile: ode residual %.3e, tail rates %s vs %s", res, fit, lin)
    return EXIT_OK if ok else EXIT_ACCEPT


def _write_shift_csv(path, t, X, Xdot):
    import csv
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "X", "Xdot"])
        for row in zip(t, X, Xdot):
            wr.writerow([repr(float(x)) for x in row])


def _mode_simulate(cfg: ExperimentConfig, run_dir: Path, man: Manifest) -> int:
    from .diagnostics import decay_report, write_diagnostics_csv
    from .profile import solve_profile
    from .simulation import run_simulation
    from .solver import NumericalFailure

    states, consts = cfg.shock()
    tab = solve_profile(states, consts, cfg.law(), cfg.visc())
    snap_dir = None
    if cfg.time.snapshot_interval > 0:
        snap_dir = run_dir / "snapshots"
        snap_dir.mkdir()

    def progress(rec):
        log.info("t=%8.3f  X=% .6e  Xdot=% .3e  E=%.6e  sup=%.3e", rec.t, rec.X, rec.Xdot, rec.E_weighted,
                 rec.sup_norm)

    try:
        run = run_simulation(tab, cfg.grid3(), cfg.solver_config(), output_interval=cfg.time.output_interval,
                             snapshot_dir=snap_dir, snapshot_interval=cfg.time.snapshot_interval or None,
                             progress=progress)
    except NumericalFailure as exc:
        recs = getattr(exc, "records", [])
        if recs:
            write_diagnostics_csv(run_dir / "diagnostics.csv", recs)
            man.artifact("diagnostics.csv")
            _write_shift_csv(run_dir / "shift.csv", [r.t for r in recs], [r.X for r in recs],
                             [r.Xdot for r in recs])
            man.artifact("shift.csv")
        if snap_dir is not None and (snap_dir / "failure_snapshot.bin").exists():
            man.artifact("snapshots/failure_snapshot.bin")
        man.update(error=str(exc))
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    write_diagnostics_csv(run_dir / "diagnostics.csv", run.records)
    _write_shift_csv(run_dir / "shift.csv", run.shift_t, run.shift_X, run.shift_Xdot)
    man.artifact("diagnostics.csv")
    man.artifact("shift.csv")
    rep = decay_report(run.records)
    man.update(results={"decay_report": asdict(rep), "decay_passed": rep.passed, "dt": run.dt,
                        "steps": run.steps, "solver_wall_time_s": run.wall_time,
                        "mass_error_max": run.mass_error_max})
    log.info("decay report: %s", "pass" if rep.passed else "fail")
    return EXIT_OK


def _mode_verify(cfg: ExperimentConfig, run_dir: Path, man: Manifest) -> int:
    from .inequalities import verify_rows, write_report
    rows = verify_rows(cfg.law(), cfg.gas.v_minus, base_seed=20240601 + cfg.perturbation.seed)
    write_report(run_dir / "verify_report.csv", rows)
    man.artifact("verify_report.csv")
    failed = [r.name for r in rows if r.verdict not in ("pass", "hypothesis-violated")]
    man.update(results={"checks": len(rows), "failed": failed})
    log.info("verify: %d checks, %d failed", len(rows), len(failed))
    return EXIT_ACCEPT if failed else EXIT_OK


def _mode_poincare(cfg: ExperimentConfig, run_dir: Path, man: Manifest) -> int:
    from .inequalities import CheckRow, linear_witness, poincare_check, poincare_suite, write_report
    w = poincare_check(linear_witness())
    rows = [CheckRow("poincare:witness_y1", w.lhs, w.rhs, w.margin, "pass" if abs(w.margin) <= 1e-10 else "fail")]
    for seed, r in poincare_suite(500, 20240601 + cfg.perturbation.seed):
        rows.append(CheckRow("poincare:random", r.lhs, r.rhs, r.margin,
                             "pass" if r.verdict == "holds" else r.verdict, seed))
    write_report(run_dir / "poincare_report.csv", rows)
    man.artifact("poincare_report.csv")
    failed = sum(1 for r in rows if r.verdict == "fail" or r.verdict == "violated")
    man.update(results={"checks": len(rows), "failed": failed})
    return EXIT_ACCEPT if failed else EXIT_OK


def _mode_accept(cfg: ExperimentConfig, run_dir: Path, man: Manifest) -> int:
    import csv
    from .acceptance import run_all
    results = run_all(report=lambda r: log.info("%s", r.line()))
    with open(run_dir / "acceptance.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["criterion", "name", "passed", "runtime_s", "budget_s", "details"])
        for r in results:
            wr.writerow([r.number, r.name, r.passed, f"{r.runtime:.3f}", r.budget,
                         json.dumps(r.details, default=_jsonable)])
    man.artifact("acceptance.csv")
    man.update(results={str(r.number): {"name": r.name, "passed": r.passed, "runtime_s": r.runtime,
                                        "details": r.details} for r in results})
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPT


_MODES = {"profile": _mode_profile, "simulate": _mode_simulate, "verify": _mode_verify,
          "poincare": _mode_poincare, "accept": _mode_accept}

_STATUS = {EXIT_OK: "pass", EXIT_USAGE: "config-error", EXIT_NUMERICAL: "numerical-failure",
           EXIT_ACCEPT: "acceptance-failure"}


def run_one(mode: str, config_path: str, out: Path) -> int:
    try:
        cfg = load_config(config_path, mode=mode)
    except ConfigError as exc:
        raw = Path(config_path).read_bytes() if Path(config_path).is_file() else str(config_path).encode()
        run_dir = make_run_dir(out, mode, hashlib.sha256(raw).hexdigest()[:12])
        man = Manifest(run_dir, mode, config_path)
        man.finish("config-error", EXIT_USAGE, error=str(exc))
        print(f"shocklab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.mode != mode:
        cfg = ExperimentConfig(mode, cfg.gas, cfg.viscosity, cfg.grid, cfg.perturbation, cfg.time)
    run_dir = make_run_dir(out, mode, cfg.digest())
    (run_dir / "config.ini").write_text(dump_config(cfg))
    man = Manifest(run_dir, mode, config_path)
    man.update(config=cfg.to_dict(), config_hash=cfg.digest(), run_dir=str(run_dir))
    handler = logging.FileHandler(run_dir / "run.log")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    try:
        code = _MODES[mode](cfg, run_dir, man)
        man.finish(_STATUS[code], code)
    except (FloatingPointError, ArithmeticError) as exc:
        code = EXIT_NUMERICAL
        man.finish(_STATUS[code], code, error=f"{type(exc).__name__}: {exc}")
        log.error("numerical failure: %s", exc)
    except BaseException as exc:
        code = EXIT_NUMERICAL if not isinstance(exc, KeyboardInterrupt) else 130
        man.finish("crashed", code, error=f"{type(exc).__name__}: {exc}", traceback=traceback.format_exc())
        if isinstance(exc, KeyboardInterrupt):
            raise
        log.exception("run crashed")
    finally:
        log.removeHandler(handler)
        handler.close()
    print(run_dir)
    return code


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"shocklab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.threads is not None and args.threads < 1:
        print("shocklab: error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    set_threads(args.threads)
    codes = [run_one(args.mode, c, Path(args.out)) for c in args.config]
    # a batch reports its worst outcome
    return max(codes) if codes else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
