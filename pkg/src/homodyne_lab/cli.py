"""``homodyne-lab`` command line.

Subcommands::

    simulate --config CFG --out DIR [--seed N]
    analyze SIGNAL_CSV SHOT_CSV --config CFG [--out FILE] [--format json|csv]
    sweep --config CFG --frequencies F1,F2,... --out FILE [--format csv|json]
    invert MEASURED_DB ETA

Exit codes: 0 ok, 2 validation error, 3 I/O error. Omitting ``--config``
uses the bundled bench-default scenario.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    REPORT_KEYS,
    SWEEP_COLUMNS,
    analyze_traces,
    frequency_sweep,
    invert_db,
)
from .config import load_config
from .detector_model import total_eta
from .errors import ConfigurationError, DomainError, NoShotNoiseVisibility, UnphysicalMeasurementError
from .esa_sim import TRACE_KINDS, EsaTrace, derive_seed, simulate_trace_analytic

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 2, 3

TRACE_HEADER = ("t_s", "power_db_rel_shot")
TRACE_FILES = {
    "signal": "signal.csv",
    "shot_reference": "shot_ref.csv",
    "electronic_floor": "electronic.csv",
}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fmt(x) -> str:
    """Shortest round-trip repr; 'nan' for missing values."""
    if x is None:
        return "nan"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_to_csv(trace: EsaTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for t, p in zip(trace.t, trace.p_db):
        w.writerow((_fmt(t), _fmt(p)))
    return buf.getvalue()


def read_trace_csv(path: Path, esa, kind) -> EsaTrace:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None
    if not rows or tuple(rows[0]) != TRACE_HEADER:
        raise CliError(f"{path}: header must be {','.join(TRACE_HEADER)}", EXIT_VALIDATION)
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
    except ValueError as exc:
        raise CliError(f"{path}: malformed row ({exc})", EXIT_VALIDATION) from None
    if data.shape[0] < 2:
        raise CliError(f"{path}: trace needs at least two samples", EXIT_VALIDATION)
    try:
        return EsaTrace(
            meta=replace(esa, n_points=data.shape[0]),
            kind=kind,
            t=data[:, 0],
            p_db=data[:, 1],
        )
    except DomainError as exc:
        raise CliError(f"{path}: {exc}", EXIT_VALIDATION) from None


def cmd_simulate(config_path, out_dir, seed=None) -> int:
    model = load_config(config_path, seed=seed)
    sc = model.to_scenario()
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out}: {exc}", EXIT_IO) from None

    state = sc.state()
    traces_meta = {}
    for k, kind in enumerate(TRACE_KINDS):
        child = derive_seed(sc.seed, k)
        trace = simulate_trace_analytic(
            state, sc.budget, sc.detector, sc.sweep, sc.esa, child, kind=kind
        )
        name = TRACE_FILES[kind]
        _write(out / name, trace_to_csv(trace))
        traces_meta[name] = {
            "kind": kind,
            "seed": child,
            "f_center_hz": sc.esa.f_center,
            "rbw_hz": sc.esa.rbw,
            "vbw_hz": sc.esa.vbw,
            "duration_s": sc.esa.duration,
            "n_points": sc.esa.n_points,
            "non_detecting": trace.non_detecting,
        }
    manifest = {
        "artifact_version": __version__,
        "command": "simulate",
        "seed": sc.seed,
        "squeeze_parameter": sc.pump.squeeze_parameter(),
        "traces": traces_meta,
        "config": model.model_dump(mode="json"),
    }
    _write(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    return EXIT_OK


def _write(path: Path, text: str) -> None:
    try:
        write_atomic(path, text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def _eta_at(sc, f) -> float:
    try:
        return total_eta(sc.budget, f, sc.detector)
    except NoShotNoiseVisibility as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None


def cmd_analyze(signal_csv, shot_csv, config_path, seed=None):
    sc = load_config(config_path, seed=seed).to_scenario()
    signal = read_trace_csv(Path(signal_csv), sc.esa, "signal")
    shot = read_trace_csv(Path(shot_csv), sc.esa, "shot_reference")
    try:
        return analyze_traces(signal, shot, _eta_at(sc, sc.esa.f_center), sc.extrema)
    except (ConfigurationError, DomainError) as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None


def parse_frequencies(text: str) -> list[float]:
    try:
        freqs = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigurationError("expected comma-separated numbers in Hz", path="frequencies") from None
    if not freqs:
        raise ConfigurationError("frequency list is empty", path="frequencies")
    if any(not (math.isfinite(f) and f > 0) for f in freqs):
        raise ConfigurationError("frequencies must be finite and > 0", path="frequencies")
    return freqs


def cmd_sweep(config_path, frequencies, seed=None):
    sc = load_config(config_path, seed=seed).to_scenario()
    return frequency_sweep(sc, frequencies)


def sweep_to_csv(entries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for e in entries:
        row = e.row()
        w.writerow([_fmt(row[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()


def sweep_to_json(entries) -> str:
    rows = [dict(e.row(), note=e.note) for e in entries]
    return json.dumps(rows, indent=2) + "\n"


def report_to_csv(report) -> str:
    d = report.to_dict()
    return ",".join(REPORT_KEYS) + "\n" + ",".join(_fmt(d[k]) for k in REPORT_KEYS) + "\n"


def cmd_invert(measured_db: float, eta: float) -> str:
    try:
        value = invert_db(measured_db, eta)
    except (UnphysicalMeasurementError, DomainError) as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None
    return f"{round(value, 3) + 0.0:.3f}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homodyne-lab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="scenario JSON or run manifest (default: bundled bench defaults)")
        p.add_argument("--seed", type=int, help="override the scenario seed")

    p = sub.add_parser("simulate", help="write signal, shot-reference and electronic-floor traces")
    common(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("analyze", help="estimate squeezing from a signal and shot-reference trace")
    common(p)
    p.add_argument("signal_csv")
    p.add_argument("shot_csv")
    p.add_argument("--out", help="report file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("sweep", help="squeezing versus analysis frequency")
    common(p)
    p.add_argument("--frequencies", required=True, help="comma-separated analysis frequencies in Hz")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("invert", help="undo detection loss on a measured level in dB")
    p.add_argument("measured_db", type=float)
    p.add_argument("eta", type=float)
    return parser


def _emit(text: str, out) -> None:
    if out:
        _write(Path(out), text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        return cmd_simulate(args.config, args.out, seed=args.seed)
    if args.command == "analyze":
        report = cmd_analyze(args.signal_csv, args.shot_csv, args.config, seed=args.seed)
        text = report_to_csv(report) if args.format == "csv" else json.dumps(report.to_dict(), indent=2) + "\n"
        _emit(text, args.out)
        return EXIT_OK
    if args.command == "sweep":
        entries = cmd_sweep(args.config, parse_frequencies(args.frequencies), seed=args.seed)
        for e in entries:
            if e.note:
                print(f"{e.report.f_center:g} Hz: {e.note}", file=sys.stderr)
        _emit(sweep_to_csv(entries) if args.format == "csv" else sweep_to_json(entries), args.out)
        if all(e.failed for e in entries):
            return EXIT_VALIDATION
        return EXIT_OK
    print(cmd_invert(args.measured_db, args.eta))
    return EXIT_OK


def main(argv=None) -> int:
    try:
        code = run(argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = exc.code
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        code = EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
