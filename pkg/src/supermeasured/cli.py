"""Command-line driver: ``supermeasured run CONFIG [--seed S] [--samples N] [--output DIR]``.

Exit status is 0 on success, 2 when the configuration does not validate
(including an unwritable output directory) and 3 when the experiment fails
at runtime.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from . import ist, lorenz, sampling
from .errors import ConfigError
from .experiments import ExperimentConfig, ExperimentResult, load_config, run_experiment

log = logging.getLogger("supermeasured")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

RESULT_KEYS = ("experiment", "seed", "parameters", "metrics", "verdicts", "runtime_ms", "timestamp")


def _prepare_output(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {path} is not writable: {exc}") from exc
    return path


def emit_plot_data(result: ExperimentResult | None, output_dir) -> list[Path]:
    """Write the plot-ready CSV files of ``result``; returns the paths written."""
    out = Path(output_dir)
    data = {} if result is None else result.plot_data
    if not data:
        log.warning("no plot data to write")
        return []
    written: list[Path] = []

    def table(name: str, header: Sequence[str], rows) -> None:
        path = out / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        written.append(path)

    if "correlations" in data:
        table("correlations.csv", ("relative_angle", "e_sampled", "e_oracle"), data["correlations"])
    if "ensembles" in data:
        for pair, ens in sorted(data["ensembles"].items()):
            path = out / f"ensemble_{pair.k}{pair.l}.csv"
            ens.to_csv(path)
            written.append(path)
    if "atoms" in data:
        path = out / "atoms.csv"
        data["atoms"].to_csv(path)
        written.append(path)
    if "convergence" in data:
        path = out / "convergence.csv"
        sampling.write_convergence_csv(data["convergence"], path)
        written.append(path)
    if "niven" in data:
        table("niven_exceptional.csv", ("numerator", "denominator", "cos"),
              ((n, d, str(c)) for n, d, c in data["niven"]))
        path = out / "niven.txt"
        path.write_text("\n".join(ist.niven_report_lines(data["niven_lines"])) + "\n", encoding="utf-8")
        written.append(path)
    if "closure" in data:
        table("closure.csv", ("p", "trials", "failure_rate"), data["closure"])
    if "exclusivity_violations" in data:
        table("exclusivity_violations.csv", ("x0", "y0", "y1", "p"),
              ((str(r.x0), str(r.y0), str(r.y1), r.p) for r in data["exclusivity_violations"]))
    if "trajectory" in data:
        traj, stride = data["trajectory"]
        lorenz.Trajectory(traj.states[::stride], traj.dt * stride).to_csv(out / "trajectory.csv")
        written.append(out / "trajectory.csv")
    if "histogram" in data:
        lorenz.write_histogram_csv(data["histogram"], out / "histogram.csv")
        written.append(out / "histogram.csv")
    return written


def run(config: ExperimentConfig) -> tuple[int, dict[str, Any] | None]:
    """Run one experiment and write ``result.json`` plus its CSV files."""
    try:
        out = _prepare_output(Path(config.output_dir))
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG, None
    start = time.perf_counter()
    try:
        result = run_experiment(config)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG, None
    except Exception as exc:  # noqa: BLE001 - any failure maps to the runtime exit code
        log.error("experiment %s failed: %s", config.experiment, exc)
        return EXIT_RUNTIME, None
    result.runtime_ms = round((time.perf_counter() - start) * 1000.0, 3)
    doc = result.document(_dt.datetime.now(_dt.timezone.utc).isoformat())
    (out / "result.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    emit_plot_data(result, out)
    return EXIT_OK, doc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="supermeasured", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("config", type=Path)
    r.add_argument("--seed", type=int)
    r.add_argument("--samples", type=int)
    r.add_argument("--output", type=Path, dest="output_dir")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(
            args.config,
            {"seed": args.seed, "samples": args.samples, "output_dir": args.output_dir},
        )
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    code, doc = run(cfg)
    if doc is not None:
        log.info("wrote %s", Path(cfg.output_dir) / "result.json")
    return code


if __name__ == "__main__":
    sys.exit(main())
