"""Batch experiments behind the command-line driver.

A configuration is an INI-style file of ``key = value`` lines; section
headers may be used for grouping but are otherwise ignored, so every key
must be unique across the file. Recognised keys:

======================  =====================================================
experiment              chsh, sample-construct, niven, closure, exclusivity,
                        lorenz or si-test (required)
seed                    64-bit unsigned integer (default 0)
samples                 positive integer; per-setting N, atoms, trials or
                        integration steps depending on the experiment
p                       C_p resolution (default 256)
angles                  four angles X0, X1, Y0, Y1 in radians; ``pi`` allowed,
                        e.g. ``0, pi/2, -pi/4, pi/4``
angles_turns            four angles as exact fractions of a full turn
alpha                   test level (default 0.01)
output_dir              where artifacts go (default ``results``)
denominator_bound       niven / exclusivity scan bound
sizes                   sample-construct N grid (default 1e3,1e4,1e5,1e6)
sweep_steps             chsh correlation sweep points over [0, pi] (default 64)
sweep_samples           per-point ensemble size of the sweep (default 10000)
write_ensembles         chsh: also dump the four ensembles as CSV (default no)
dt, sigma, r, beta      lorenz integration (defaults 0.01, 10, 28, 8/3)
grid_bins               lorenz occupancy grid per axis (default 32)
perturbation            lorenz initial-condition half-width (default 20)
trajectory_stride       lorenz: keep every n-th sample in trajectory.csv
======================  =====================================================

Every random stream derives from ``seed`` (see ``supermeasured._rng``), so
the same file always produces the same numbers.
"""
from __future__ import annotations

import ast
import configparser
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import chsh, ist, lorenz, quantum, sampling
from .errors import ConfigError
from .measure import Measure, normalize

EXPERIMENTS = ("chsh", "sample-construct", "niven", "closure", "exclusivity", "lorenz", "si-test")

DEFAULT_SIZES = (10**3, 10**4, 10**5, 10**6)


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def parse_angle(text: str) -> float:
    """Evaluate a numeric expression over literals and ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError

    text = text.strip().replace("π", "pi")
    try:
        value = ev(ast.parse(text, mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse angle {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"angle {text!r} is not finite")
    return value


def _split(value: str) -> list[str]:
    return [v for v in (s.strip() for s in value.replace(";", ",").split(",")) if v]


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    samples: int | None = None
    p: int = ist.DEFAULT_P
    angles: tuple[float, ...] | None = None
    angles_turns: tuple[ist.RationalAngle, ...] | None = None
    alpha: float = 0.01
    output_dir: Path = Path("results")
    extra: dict[str, str] = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}"
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.samples is not None and self.samples < 1:
            raise ConfigError("samples must be a positive integer")
        if not 1 <= self.p <= ist.MAX_P:
            raise ConfigError(f"p must lie in [1, {ist.MAX_P}]")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        exp = self.experiment
        if exp in ("chsh", "si-test"):
            if self.angles is None and self.angles_turns is None:
                raise ConfigError(f"experiment {exp} requires the field 'angles' (or 'angles_turns')")
            if self.samples is None:
                raise ConfigError(f"experiment {exp} requires the field 'samples'")
        if exp == "exclusivity" and self.angles_turns is None:
            raise ConfigError("experiment exclusivity requires exact angles in the field 'angles_turns'")
        if exp == "closure" and self.samples is None and "trials" not in self.extra:
            raise ConfigError("experiment closure requires the field 'samples' (number of trials)")
        if exp == "niven" and "denominator_bound" not in self.extra:
            raise ConfigError("experiment niven requires the field 'denominator_bound'")
        if exp == "lorenz" and self.samples is None:
            raise ConfigError("experiment lorenz requires the field 'samples' (integration steps)")
        for name in ("angles", "angles_turns"):
            v = getattr(self, name)
            if v is not None and len(v) != 4:
                raise ConfigError(f"'{name}' needs four values (X0, X1, Y0, Y1), got {len(v)}")
        return self

    def radians(self) -> tuple[float, ...]:
        if self.angles is not None:
            return self.angles
        return tuple(a.radians() for a in self.angles_turns)

    def get(self, key: str, cast: Callable[[str], Any], default: Any = None) -> Any:
        if key not in self.extra:
            return default
        try:
            return cast(self.extra[key])
        except (ValueError, TypeError, ArithmeticError) as exc:
            raise ConfigError(f"invalid value for {key!r}: {self.extra[key]!r}") from exc

    def parameters(self) -> dict[str, Any]:
        out: dict[str, Any] = {"samples": self.samples, "alpha": self.alpha}
        if self.experiment in ("niven", "closure", "exclusivity"):
            out["p"] = self.p
        if self.angles is not None or self.angles_turns is not None:
            out["angles"] = list(self.radians())
        if self.angles_turns is not None:
            out["angles_turns"] = [str(a) for a in self.angles_turns]
        out.update(sorted(self.extra.items()))
        return out


def _int(text: str) -> int:
    v = float(text) if any(c in text for c in ".eE") else int(text)
    if isinstance(v, float):
        if not v.is_integer():
            raise ValueError(text)
        v = int(v)
    return v


def load_config(path, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """Read a config file; ``overrides`` (seed, samples, output_dir) take precedence."""
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not text.lstrip().startswith("["):
        text = "[config]\n" + text
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    flat: dict[str, str] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            key = key.strip().lower().replace("-", "_")
            if key in flat:
                raise ConfigError(f"key {key!r} defined more than once")
            flat[key] = value.strip()
    for key, value in (overrides or {}).items():
        if value is not None:
            flat[key] = str(value)
    return config_from_mapping(flat)


def config_from_mapping(flat: dict[str, str]) -> ExperimentConfig:
    flat = dict(flat)
    if "experiment" not in flat:
        raise ConfigError("missing required field 'experiment'")
    try:
        cfg = ExperimentConfig(experiment=flat.pop("experiment").strip())
        if "seed" in flat:
            cfg.seed = _int(flat.pop("seed"))
        if "samples" in flat:
            cfg.samples = _int(flat.pop("samples"))
        if "p" in flat:
            cfg.p = _int(flat.pop("p"))
        if "alpha" in flat:
            cfg.alpha = float(flat.pop("alpha"))
    except ValueError as exc:
        raise ConfigError(f"invalid numeric field: {exc}") from exc
    if "angles" in flat:
        cfg.angles = tuple(parse_angle(a) for a in _split(flat.pop("angles")))
    if "angles_turns" in flat:
        try:
            cfg.angles_turns = tuple(ist.RationalAngle.parse(a) for a in _split(flat.pop("angles_turns")))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if "output_dir" in flat:
        cfg.output_dir = Path(flat.pop("output_dir"))
    cfg.extra = flat
    return cfg.validate()


# experiment runners: each returns (metrics, verdicts, plot_data)


def _run_chsh(cfg: ExperimentConfig):
    run = chsh.run_chsh(cfg.radians(), cfg.samples, cfg.seed, alpha=cfg.alpha)
    doc = run.to_dict()
    oracle = quantum.chsh_value(quantum.TwoQubitState.singlet(), *cfg.radians())
    metrics = {
        "s": doc["s"],
        "abs_s": abs(doc["s"]),
        "oracle_s": oracle,
        "correlations": doc["correlations"],
        "ks": doc["ks"],
        "bell_si_tv": doc["bell_si_tv"],
        "bell_si_support_tv": chsh.bell_si_violation(run.model, support=True),
    }
    verdicts = {
        "chsh_violated": abs(doc["s"]) > 2.0,
        "physical_si": "consistent" if not run.physical_si.rejected else "violated",
        "bell_si": "violated" if doc["bell_si_tv"] > 0 else "not violated",
    }
    steps = cfg.get("sweep_steps", _int, 64)
    sweep_n = cfg.get("sweep_samples", _int, 10_000)
    rows = []
    singlet = quantum.TwoQubitState.singlet()
    for i, theta in enumerate(np.linspace(0.0, math.pi, steps)):
        model = chsh.build_model((0.0, 0.0, float(theta), float(theta)), singlet)
        ens = chsh.sample_ensemble(model, (0, 0), sweep_n, (cfg.seed + i) % 2**64)
        rows.append((float(theta), chsh.estimate_expectation(ens), quantum.correlation(singlet, 0.0, theta)))
    plot = {"correlations": rows}
    if cfg.get("write_ensembles", _bool, False):
        plot["ensembles"] = run.ensembles
    return metrics, verdicts, plot


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _run_sample_construct(cfg: ExperimentConfig):
    strength = cfg.get("strength", float, 0.8)
    rho = normalize(sampling.correlated_density(strength), Measure.uniform())
    sizes = cfg.get("sizes", lambda s: tuple(_int(v) for v in _split(s)), DEFAULT_SIZES)
    rows = sampling.convergence_study(rho, sizes, cfg.seed)
    n_atoms = cfg.samples or 10_000
    space = sampling.sample_space(rho, n_atoms, cfg.seed)
    audit = sampling.si_audit(space, cfg.alpha)
    metrics = {
        "convergence": [
            {"n": r.n, "max_abs_error": r.max_error, "bound": r.bound} for r in rows
        ],
        "atoms": space.n,
        "si_audit": audit.to_dict(),
    }
    verdicts = {
        "probabilities_preserved": all(r.within_bound for r in rows),
        "physical_si": "consistent" if not audit.physical.rejected else "violated",
        "bell_si": "violated" if audit.bell.rejected else "not detected",
    }
    return metrics, verdicts, {"atoms": space, "convergence": rows}


def _run_niven(cfg: ExperimentConfig):
    bound = cfg.get("denominator_bound", _int)
    if bound is None or bound < 1:
        raise ConfigError("denominator_bound must be a positive integer")
    exceptional = []
    count = 0
    for a in ist.reduced_fractions(bound):
        count += 1
        c = ist.niven_rational_cos(a)
        if c is not None:
            exceptional.append((a.numerator, a.denominator, c))
    dens = sorted({d for _, d, _ in exceptional})
    metrics = {
        "fractions_checked": count,
        "rational_count": len(exceptional),
        "rational_denominators": dens,
        "rational_values": sorted({str(c) for *_, c in exceptional}),
    }
    verdicts = {"niven_holds": set(dens) <= ist.NIVEN_DENOMINATORS}
    return metrics, verdicts, {"niven": exceptional, "niven_lines": bound}


def _run_closure(cfg: ExperimentConfig):
    trials = cfg.get("trials", _int, cfg.samples)
    p_values = cfg.get("p_values", lambda s: [_int(v) for v in _split(s)], [cfg.p])
    rows = []
    for p in p_values:
        if p < 4:
            rate = ist.closure_failure_rate(p, exhaustive=True)
            rows.append((p, "exhaustive", rate))
        else:
            rows.append((p, trials, ist.closure_failure_rate(p, trials, cfg.seed)))
    metrics = {"closure": [{"p": p, "trials": t, "failure_rate": r} for p, t, r in rows]}
    verdicts = {"closure_fails": all(r > 0 for *_, r in rows)}
    return metrics, verdicts, {"closure": rows}


def _run_exclusivity(cfg: ExperimentConfig):
    x0, _, y0, y1 = cfg.angles_turns
    report = ist.exclusivity_check(x0, y0, y1, cfg.p)
    metrics: dict[str, Any] = {"check": report.to_dict()}
    verdicts = {"exclusivity_holds": report.holds}
    plot: dict[str, Any] = {}
    bound = cfg.get("denominator_bound", _int)
    if bound:
        scan = ist.exclusivity_scan(bound, cfg.p, x0)
        metrics["scan"] = {
            "max_denominator": bound,
            "pairs_checked": scan.pairs_checked,
            "both_admissible": scan.both_admissible,
            "violations": len(scan.violations),
            "difference_denominators": sorted(scan.exceptional_denominators),
        }
        verdicts["scan_holds"] = scan.holds
        plot["exclusivity_violations"] = scan.violations
    return metrics, verdicts, plot


def _run_lorenz(cfg: ExperimentConfig):
    params = lorenz.LorenzParams(
        cfg.get("sigma", float, 10.0), cfg.get("r", float, 28.0), cfg.get("beta", parse_angle, 8 / 3)
    )
    dt = cfg.get("dt", float, 0.01)
    grid = lorenz.BoxGrid(bins=cfg.get("grid_bins", _int, 32))
    steps = cfg.samples
    witness = lorenz.off_attractor_witness(
        params, dt, steps, cfg.get("perturbation", float, 20.0), cfg.seed, grid
    )
    traj = lorenz.integrate(params, witness.initial_a, dt, steps)
    hist = lorenz.occupancy_measure(traj, grid)
    metrics = {
        "witness": witness.to_dict(),
        "half_split_tv": lorenz.half_split_tv(traj, grid),
        "max_norm": float(np.max(np.linalg.norm(traj.states, axis=1))),
        "occupied_cells": int(np.count_nonzero(hist)),
    }
    verdicts = {"invariant_measure_reached": witness.indistinguishable}
    stride = cfg.get("trajectory_stride", _int, 10)
    return metrics, verdicts, {"trajectory": (traj, stride), "histogram": hist}


def _run_si_test(cfg: ExperimentConfig):
    run = chsh.run_chsh(cfg.radians(), cfg.samples, cfg.seed, alpha=cfg.alpha)
    ens = [run.ensembles[p] for p in sorted(run.ensembles)]
    audit = sampling.si_audit(chsh.to_sampled_space(ens), cfg.alpha)
    metrics = {
        "u_marginal_ks": run.physical_si.to_dict(),
        "embedded_audit": audit.to_dict(),
        "bell_si_tv": run.tv,
    }
    verdicts = {
        "physical_si": "consistent" if not run.physical_si.rejected else "violated",
        "bell_si": "violated" if audit.bell.rejected else "not detected",
    }
    return metrics, verdicts, {}


RUNNERS = {
    "chsh": _run_chsh,
    "sample-construct": _run_sample_construct,
    "niven": _run_niven,
    "closure": _run_closure,
    "exclusivity": _run_exclusivity,
    "lorenz": _run_lorenz,
    "si-test": _run_si_test,
}


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    metrics: dict[str, Any]
    verdicts: dict[str, Any]
    plot_data: dict[str, Any]
    runtime_ms: float = 0.0

    def document(self, timestamp: str) -> dict[str, Any]:
        return {
            "experiment": self.config.experiment,
            "seed": self.config.seed,
            "parameters": self.config.parameters(),
            "metrics": self.metrics,
            "verdicts": self.verdicts,
            "runtime_ms": self.runtime_ms,
            "timestamp": timestamp,
        }


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    metrics, verdicts, plot = RUNNERS[cfg.experiment](cfg)
    return ExperimentResult(cfg, metrics, verdicts, plot)
