"""Command-line interface: config ingestion, scheme runs, sweeps, and CSV output.

Config files are flat ``key = value`` text. Powers accept a ``dbm`` suffix
(otherwise watts), the reference SNR accepts a ``db`` suffix (otherwise
linear), positions are comma-separated x,y,z triples in meters. Missing keys
fall back to the baseline scenario defaults. Every run writes a scenario
echo file with the resolved parameters; feeding it back reproduces the
identical configuration.

Verbs:
  run      --config FILE --scheme {jtpo|poft|ftp-inf} --out DIR
  sweep    --config FILE --param {T|L} --values V1,V2,... --out DIR
  validate --config FILE --trajectory CSV --power CSV

Numeric CSV fields are written with full round-trip precision so identical
configs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import driver, model
from .model import PowerProfile, ScenarioConfig, Trajectory

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_IO = 2
EXIT_USAGE = 64

_SCALAR_KEYS = ("T", "delta_t", "H", "V_max", "L", "eps_b", "eps_e", "tau")
_POWER_KEYS = ("P_max", "P_bar")
_VEC_KEYS = ("w_b", "w_e", "q_I", "q_F")
_ALL_KEYS = _SCALAR_KEYS + _POWER_KEYS + _VEC_KEYS + ("xi0", "max_iter")

ECHO_FILENAME = "scenario.txt"


def _parse_power(key: str, raw: str) -> float:
    text = raw.strip().lower()
    if text.endswith("dbm"):
        return model.dbm_to_watt(float(text[:-3].strip()))
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"{key}: expected watts or '<value> dbm', got {raw!r}")


def _parse_ratio(key: str, raw: str) -> float:
    text = raw.strip().lower()
    if text.endswith("db") and not text.endswith("dbm"):
        return model.db_to_linear(float(text[:-2].strip()))
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"{key}: expected a linear ratio or '<value> db', got {raw!r}")


def _parse_vec3(key: str, raw: str):
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 3:
        raise ValueError(f"{key}: expected three comma-separated values, got {raw!r}")
    return tuple(float(p) for p in parts)


def parse_config(path) -> ScenarioConfig:
    """Read a flat key-value config file; missing keys use baseline defaults.

    Raises ValueError naming the offending key or violated scenario invariant.
    """
    text = Path(path).read_text(encoding="utf-8")
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _ALL_KEYS:
            raise ValueError(f"line {lineno}: unknown configuration key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        if key in _POWER_KEYS:
            values[key] = _parse_power(key, raw)
        elif key == "xi0":
            values[key] = _parse_ratio(key, raw)
        elif key in _VEC_KEYS:
            values[key] = _parse_vec3(key, raw)
        elif key == "max_iter":
            values[key] = int(raw)
        else:
            values[key] = float(raw)
    return model.baseline_scenario(**values)


def _fmt(x: float) -> str:
    return repr(float(x))


def scenario_echo_text(cfg: ScenarioConfig) -> str:
    """Resolved parameters in the config format (canonical units)."""
    lines = ["# resolved scenario parameters (watts, meters, seconds, linear ratios)"]
    for key in ("T", "delta_t", "H", "V_max"):
        lines.append(f"{key} = {_fmt(getattr(cfg, key))}")
    lines.append(f"P_max = {_fmt(cfg.P_max)}")
    lines.append(f"P_bar = {_fmt(cfg.P_bar)}")
    lines.append(f"xi0 = {_fmt(cfg.xi0)}")
    for key in ("L", "eps_b", "eps_e", "tau"):
        lines.append(f"{key} = {_fmt(getattr(cfg, key))}")
    lines.append(f"max_iter = {cfg.max_iter}")
    for key in _VEC_KEYS:
        vec = getattr(cfg, key)
        lines.append(f"{key} = {_fmt(vec[0])},{_fmt(vec[1])},{_fmt(vec[2])}")
    return "\n".join(lines) + "\n"


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _trajectory_csv(traj: Trajectory, cfg: ScenarioConfig) -> str:
    speeds = traj.speeds(cfg.delta_t)
    rows = ["n,x_m,y_m,speed_mps"]
    for n in range(len(traj)):
        rows.append(
            f"{n + 1},{_fmt(traj.points[n, 0])},{_fmt(traj.points[n, 1])},{_fmt(speeds[n])}"
        )
    return "\n".join(rows) + "\n"


def _power_csv(pw: PowerProfile) -> str:
    rows = ["n,p_watt,p_dbm"]
    for n, p in enumerate(pw.p):
        rows.append(f"{n + 1},{_fmt(p)},{_fmt(model.watt_to_dbm(float(p)))}")
    return "\n".join(rows) + "\n"


def _iterations_csv(result) -> str:
    rows = ["iter,surrogate_bpcu,aesr_bpcu,frac_increase"]
    for rec in result.iterations:
        rows.append(
            f"{rec.index},{_fmt(rec.surrogate)},{_fmt(rec.aesr)},{_fmt(rec.frac_increase)}"
        )
    return "\n".join(rows) + "\n"


def _sweep_csv(entries) -> str:
    rows = ["scheme,param_name,param_value,aesr_bpcu,error"]
    for e in entries:
        err = "" if e.error is None else e.error.replace("\n", " ").replace(",", ";")
        rows.append(f"{e.scheme.value},{e.parameter},{_fmt(e.value)},{_fmt(e.aesr)},{err}")
    return "\n".join(rows) + "\n"


def _prepare_out_dir(out_dir) -> Optional[Path]:
    path = Path(out_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-probe.tmp"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError:
        return None
    return path


def _load_config(config_path, max_iter: Optional[int], tol: Optional[float]):
    cfg = parse_config(config_path)
    if max_iter is not None:
        cfg = replace(cfg, max_iter=max_iter)
    if tol is not None:
        cfg = replace(cfg, tau=tol)
    return cfg


def cmd_run(config_path, scheme_name, out_dir, max_iter=None, tol=None) -> int:
    try:
        cfg = _load_config(config_path, max_iter, tol)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        scheme = driver.SchemeId(scheme_name)
    except ValueError:
        print(f"error: unknown scheme {scheme_name!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = driver.run_scheme(cfg, scheme)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if result.failed:
        print("error: subproblem solver failed; no output written", file=sys.stderr)
        return EXIT_FAILURE
    out = _prepare_out_dir(out_dir)
    if out is None:
        print(f"error: cannot write to output directory {out_dir}", file=sys.stderr)
        return EXIT_IO
    bundle = {
        ECHO_FILENAME: scenario_echo_text(cfg),
        "trajectory.csv": _trajectory_csv(result.trajectory, cfg),
        "power.csv": _power_csv(result.power),
        "iterations.csv": _iterations_csv(result),
    }
    written = []
    try:
        for name, text in bundle.items():
            _atomic_write(out / name, text)
            written.append(out / name)
    except OSError as exc:
        for path in written:
            path.unlink(missing_ok=True)
        print(f"error: output write failed, partial files removed: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{result.aesr:.6f}")
    return EXIT_OK


def cmd_sweep(config_path, parameter, values, out_dir, max_iter=None, tol=None) -> int:
    if not values:
        print("error: sweep needs a non-empty --values list", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _load_config(config_path, max_iter, tol)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    entries = driver.sweep(cfg, parameter, values)
    out = _prepare_out_dir(out_dir)
    if out is None:
        print(f"error: cannot write to output directory {out_dir}", file=sys.stderr)
        return EXIT_IO
    _atomic_write(out / ECHO_FILENAME, scenario_echo_text(cfg))
    _atomic_write(out / "sweep.csv", _sweep_csv(entries))
    for e in entries:
        status = "ok" if e.error is None else f"error: {e.error}"
        print(f"{e.scheme.value} {e.parameter}={e.value:g} aesr={e.aesr:.6f} {status}")
    return EXIT_OK if any(e.error is None for e in entries) else EXIT_FAILURE


def _read_csv_column(path, column) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise ValueError(f"{path}: missing required column {column!r}")
        return np.array([float(row[column]) for row in reader])


def cmd_validate(config_path, trajectory_csv, power_csv) -> int:
    try:
        cfg = parse_config(config_path)
        x = _read_csv_column(trajectory_csv, "x_m")
        y = _read_csv_column(trajectory_csv, "y_m")
        p = _read_csv_column(power_csv, "p_watt")
        traj = Trajectory(points=np.column_stack([x, y]))
        pw = PowerProfile(p=p)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    violations = model.validate(traj, pw, cfg)
    for v in violations:
        print(v)
    if violations:
        print(f"{len(violations)} violation(s) found")
        return EXIT_FAILURE
    print("ok: all mobility and power constraints hold")
    return EXIT_OK


def _parse_values(raw: str):
    items = [s for s in (part.strip() for part in raw.split(",")) if s]
    return [float(s) for s in items]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavsec",
        description="UAV trajectory/power planning for secrecy under short-packet coding",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="run one scheme and write CSV outputs")
    run_p.add_argument("--config", required=True, help="flat key=value scenario file")
    run_p.add_argument("--scheme", required=True, choices=["jtpo", "poft", "ftp-inf"])
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--max-iter", type=int, default=None)
    run_p.add_argument("--tol", type=float, default=None)

    sweep_p = sub.add_parser("sweep", help="run all schemes over a parameter grid")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--param", required=True, choices=["T", "L"])
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.add_argument("--out", required=True)
    sweep_p.add_argument("--max-iter", type=int, default=None)
    sweep_p.add_argument("--tol", type=float, default=None)

    val_p = sub.add_parser("validate", help="check a trajectory/power CSV pair")
    val_p.add_argument("--config", required=True)
    val_p.add_argument("--trajectory", required=True, help="trajectory.csv path")
    val_p.add_argument("--power", required=True, help="power.csv path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "run":
        return cmd_run(args.config, args.scheme, args.out, args.max_iter, args.tol)
    if args.verb == "sweep":
        try:
            values = _parse_values(args.values)
        except ValueError:
            print(f"error: cannot parse --values {args.values!r}", file=sys.stderr)
            return EXIT_USAGE
        return cmd_sweep(args.config, args.param, values, args.out, args.max_iter, args.tol)
    if args.verb == "validate":
        return cmd_validate(args.config, args.trajectory, args.power)
    return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
