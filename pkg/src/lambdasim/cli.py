"""Command line entry point: run configurations, list presets, validate the kernel."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, config, oracle, presets
from .evolution import evolve, find_plateau, oracle_deviation
from .initial_states import ConfigurationError, build_initial, field_state
from .master_equation import LossConfig
from .observables import SCALAR_COLUMNS, bipartite_distribution, l1_distance, photon_statistics
from .spectra import SweepConfig, absorption_maxima, eit_sweep, splitting_estimate

log = logging.getLogger("lambdasim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3


def _fmt(x) -> str:
    return repr(float(x))


def atomic_write(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def series_columns(series) -> list:
    """Scalar columns in a fixed order: time, trace, then probe columns."""
    cols = ["t", "trace"]
    for probe in series.probes:
        cols += [c for c in SCALAR_COLUMNS.get(probe, ()) if c in series]
    return cols


def series_csv(series) -> str:
    cols = series_columns(series)
    data = [series[c] for c in cols]
    return _csv_text(cols, ([_fmt(v) for v in row] for row in zip(*data)))


def grid_csv(grid: np.ndarray) -> str:
    """Rows are field-1 photon numbers k, columns field-2 photon numbers m."""
    header = ["k"] + [f"m{m}" for m in range(grid.shape[1])]
    return _csv_text(header, ([k] + [_fmt(v) for v in row] for k, row in enumerate(grid)))


class RunOutput:
    """Collects output files and writes them atomically into one directory."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.files = []

    def write(self, name: str, text: str) -> None:
        atomic_write(self.directory / name, text)
        self.files.append({"name": name, "bytes": len(text.encode()),
                           "sha256": hashlib.sha256(text.encode()).hexdigest()})


def _initial(cfg):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        p0 = build_initial(cfg.electronic, cfg.probe, cfg.coupling, cfg.truncation)
    return p0, [str(w.message) for w in caught]


def _run_evolve(cfg, out: RunOutput) -> tuple:
    p0, notes = _initial(cfg)
    series, final, diag = evolve(p0, cfg.system, cfg.losses, cfg.grid, cfg.probes,
                                 coherence_order=cfg.coherence_order,
                                 snapshot_times=cfg.snapshots, progress=_progress(cfg))
    out.write("series.csv", series_csv(series))
    for ts, state in sorted(series.snapshots.items()):
        out.write(f"wkm_t{ts:g}.csv", grid_csv(bipartite_distribution(state)))
    w1, w2 = photon_statistics(final, 1), photon_statistics(final, 2)
    n = max(w1.size, w2.size)
    out.write("statistics_final.csv", _csv_text(
        ["n", "W", "W_tilde"],
        ([i, _fmt(w1[i] if i < w1.size else 0.0), _fmt(w2[i] if i < w2.size else 0.0)]
         for i in range(n))))
    summary = {"final": {k: float(series.last(k)) for k in series_columns(series) if k != "t"}}
    plateau = find_plateau(series)
    summary["plateau_time"] = plateau
    if cfg.scenario == "transfer":
        initial = field_state(cfg.probe, cfg.truncation.k_max).probabilities
        summary["field1_vacuum_weight"] = float(w1[0])
        summary["transfer_l1_distance"] = l1_distance(w2, initial)
    return diag.as_dict(), diag.reasons, summary, notes


def _run_sweep(cfg, out: RunOutput) -> tuple:
    _, notes = _initial(cfg)
    sw = SweepConfig(cfg.sweep.deltas, cfg.system, cfg.losses, cfg.electronic, cfg.probe,
                     cfg.coupling, cfg.truncation, cfg.grid, cfg.sweep.window,
                     cfg.coherence_order if cfg.coherence_order != "auto" else 0)
    spec = eit_sweep(sw, progress=_progress(cfg))
    out.write("spectrum.csv", _csv_text(
        ["delta", "absorption", "qpol_re", "qpol_im", "reliable_flag"],
        ([_fmt(d), _fmt(a), _fmt(re), _fmt(im), int(ok)] for d, a, re, im, ok in spec.rows())))
    summary = {"absorption_maxima": [float(x) for x in absorption_maxima(spec)],
               "splitting_estimate": splitting_estimate(cfg.coupling, cfg.system.omega1)}
    diag = {"unreliable_points": int((~spec.reliable).sum()), "unreliable": bool((~spec.reliable).any())}
    return diag, spec.reasons, summary, notes


def _run_validate(cfg, out: RunOutput) -> tuple:
    p0, notes = _initial(cfg)
    v = cfg.validate
    rows, summary, failures = [], {}, []
    for name in v.channels:
        delta, rates, convention = oracle.STANDARD_CHANNELS[name]
        sys_ = replace(cfg.system, delta_p=delta)
        dev = oracle_deviation(p0, sys_, LossConfig(**rates), cfg.grid.t_end, cfg.grid.dt,
                               dephasing=convention, checkpoints=v.checkpoints)
        ok = dev <= v.tolerance
        rows.append([name, convention, _fmt(dev), _fmt(v.tolerance), int(ok)])
        summary[name] = dev
        if not ok:
            failures.append(f"{name}: deviation {dev:.3g} > {v.tolerance:g}")
        log.info("%-18s deviation %.3e %s", name, dev, "ok" if ok else "FAIL")
    out.write("validation.csv", _csv_text(["channel", "dephasing", "max_deviation", "tolerance",
                                           "passed"], rows))
    return {"failures": failures}, [], summary, notes


def _progress(cfg):
    if not log.isEnabledFor(logging.INFO):
        return None
    state = {"next": 0.0}

    def report(i, n):
        if i / n >= state["next"]:
            log.info("%s: %d / %d", cfg.name, i, n)
            state["next"] += 0.1
    return report


RUNNERS = {"evolve": _run_evolve, "transfer": _run_evolve, "sweep": _run_sweep,
           "validate": _run_validate}


def execute(cfg, outdir) -> dict:
    """Run one configuration, write its files and manifest; returns the manifest."""
    out = RunOutput(Path(outdir))
    start = time.perf_counter()
    diagnostics, reasons, summary, notes = RUNNERS[cfg.scenario](cfg, out)
    wall = time.perf_counter() - start
    failed = bool(diagnostics.get("failures"))
    unreliable = bool(reasons) or bool(diagnostics.get("unreliable"))
    status = "FAILED" if failed else ("UNRELIABLE" if unreliable else "OK")
    manifest = {
        "status": status,
        "unreliable": unreliable,
        "reasons": list(reasons),
        "version": __version__,
        "config": cfg.echo(),
        "diagnostics": diagnostics,
        "summary": summary,
        "warnings": notes,
        "wall_time_s": wall,
        "files": out.files,
    }
    atomic_write(out.directory / "manifest.json",
                 json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return manifest


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _finish(manifest: dict, outdir) -> int:
    print(f"{manifest['status']}: wrote {len(manifest['files'])} files and manifest.json to {outdir}")
    for reason in manifest["reasons"]:
        print(f"  UNRELIABLE: {reason}")
    for failure in manifest["diagnostics"].get("failures", []):
        print(f"  FAILED: {failure}")
    return EXIT_VALIDATION if manifest["status"] == "FAILED" else EXIT_OK


def cmd_run(args) -> int:
    if (args.config is None) == (args.preset is None):
        print("error: give a config file or --preset, not both", file=sys.stderr)
        return EXIT_CONFIG
    cfg = presets.load(args.preset) if args.preset else config.load(args.config)
    outdir = args.out or Path("runs") / cfg.name
    return _finish(execute(cfg, outdir), outdir)


def cmd_presets(args) -> int:
    if args.show:
        print(config.to_ini(presets.sections(args.show)), end="")
        return EXIT_OK
    rows = presets.table()
    width = max(len(r[0]) for r in rows)
    for name, fig, scenario, desc in rows:
        print(f"{name:<{width}}  {fig:<11} {scenario:<9} {desc}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = presets.load("validate_small")
    outdir = args.out or Path("runs") / cfg.name
    return _finish(execute(cfg, outdir), outdir)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lambdasim",
        description="Lambda three-level system driven by two quantized fields with losses.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a configuration file or a named preset")
    run.add_argument("config", nargs="?", type=Path, help="INI run configuration")
    run.add_argument("--preset", help="name of a preset (see `lambdasim presets`)")
    run.add_argument("-o", "--out", type=Path, help="output directory (default runs/<name>)")
    run.set_defaults(func=cmd_run)

    pre = sub.add_parser("presets", help="list presets or print one as INI")
    pre.add_argument("--show", metavar="NAME", help="print the preset as a config file")
    pre.set_defaults(func=cmd_presets)

    val = sub.add_parser("validate", help="check the propagator against the Lindblad oracle")
    val.add_argument("-o", "--out", type=Path, help="output directory (default runs/validate_small)")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
