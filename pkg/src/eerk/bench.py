"""Benchmark drivers: convergence tables, energy runs, method analysis.

All drivers consume an :class:`ExperimentConfig` (key=value config file plus
overrides) and emit plain CSV with 17 significant digits, so identical
configurations produce bit-identical output files.

Default problem setup is the 1-D Cahn-Hilliard benchmark: interval
``(0, 2*pi)``, mesh spacing ``pi/320`` (639 interior points), interface
width 0.2, stabilization 2.  Initial profiles:

* ``sine``:  ``0.5 * sin(x)``
* ``bumps``: ``tanh(2 sin x)/3 - exp(-23.5 (x - pi/2)^2)
  + exp(-27 (x - 4.2)^2) + exp(-38 (x - 5.4)^2)``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from eerk.dissipation import (
    average_dissipation_rate,
    classify_method,
    default_z_grid,
    scan_method,
)
from eerk.integrator import RunReport, integrate
from eerk.spatial import CahnHilliard, Problem, build_laplacian_1d
from eerk.tableaux import MethodError, parse_method

__all__ = [
    "ConfigError",
    "BenchDivergence",
    "ExperimentConfig",
    "load_config",
    "initial_profile",
    "parse_z_grid",
    "ConvergenceRow",
    "run_convergence",
    "run_energy",
    "run_analysis",
    "run_rate",
    "write_csv",
]


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


class BenchDivergence(RuntimeError):
    """A run required by the experiment diverged."""


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return f"{value:.17g}"


def write_csv(path, header, rows) -> Path:
    """Write rows of numbers/strings as CSV with 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def _slug(label: str) -> str:
    out = label
    for ch in ":=,/":
        out = out.replace(ch, "-")
    return out


def initial_profile(name: str, x: np.ndarray) -> np.ndarray:
    if name == "sine":
        return 0.5 * np.sin(x)
    if name == "bumps":
        return (np.tanh(2.0 * np.sin(x)) / 3.0
                - np.exp(-23.5 * (x - np.pi / 2) ** 2)
                + np.exp(-27.0 * (x - 4.2) ** 2)
                + np.exp(-38.0 * (x - 5.4) ** 2))
    raise ConfigError(f"unknown initial profile {name!r} (known: sine, bumps)")


def parse_z_grid(spec: str) -> np.ndarray:
    """Grid specs: ``default``, ``lin:a:b:n``, ``log:min:max:n`` (log in
    |z|), and ``+``-joined unions thereof."""
    if spec == "default":
        return default_z_grid()
    parts = []
    for chunk in spec.split("+"):
        fields = chunk.split(":")
        try:
            kind, a, b, n = fields[0], float(fields[1]), float(fields[2]), int(fields[3])
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"malformed grid spec {chunk!r}") from exc
        if kind == "lin":
            parts.append(np.linspace(a, b, n))
        elif kind == "log":
            if a <= 0 or b <= 0:
                raise ConfigError("log grid bounds are magnitudes |z| > 0")
            parts.append(-np.logspace(math.log10(a), math.log10(b), n))
        else:
            raise ConfigError(f"unknown grid kind {kind!r}")
    grid = np.unique(np.concatenate(parts))
    if np.any(grid > 0):
        raise ConfigError("z grid must satisfy z <= 0")
    return grid


@dataclass
class ExperimentConfig:
    """Everything a driver needs; see :func:`load_config` for the file form."""

    methods: list = field(default_factory=list)
    eps: float = 0.2
    kappa: float = 2.0
    length: float = 2.0 * np.pi
    m: int = 639
    ic: str = "sine"
    taus: list = field(default_factory=lambda: [0.01, 0.005, 0.0025, 0.00125])
    t_final: float = 8.0
    grid: str = "default"
    out: Optional[Path] = None
    monitor: bool = False
    metric: Optional[str] = None
    ref_method: Optional[str] = None
    ref_tau: Optional[float] = None
    implicit: bool = False

    def tableaux(self) -> list:
        if not self.methods:
            raise ConfigError("no method specified")
        try:
            return [parse_method(spec) for spec in self.methods]
        except MethodError as exc:
            raise ConfigError(str(exc)) from exc

    def problem(self) -> Problem:
        return Problem(
            build_laplacian_1d(self.length, self.m),
            CahnHilliard(eps=self.eps, kappa=self.kappa),
            metric_override=self.metric,
        )

    def initial_state(self, problem: Problem) -> np.ndarray:
        return initial_profile(self.ic, problem.op.x)

    def z_grid(self) -> np.ndarray:
        return parse_z_grid(self.grid)

    def resolve_reference(self) -> tuple:
        """Reference method/step for convergence runs; defaults to the
        smallest admissible abscissa of the matching family at tau_0/32."""
        spec = self.ref_method
        if spec is None:
            first = self.methods[0].split(":")[0] if self.methods else ""
            spec = "eerk31:c2=4/9" if first.startswith("eerk3") else "eerk2w:c2=3/11"
        try:
            ref = parse_method(spec)
        except MethodError as exc:
            raise ConfigError(str(exc)) from exc
        tau = self.ref_tau if self.ref_tau is not None else self.taus[0] / 32.0
        return ref, float(tau)


_BOOL_KEYS = {"monitor", "implicit"}
_FLOAT_KEYS = {"eps", "kappa", "ref_tau"}
_INT_KEYS = {"m"}


def _parse_bool(value: str) -> bool:
    low = value.strip().lower()
    if low in ("1", "true", "on", "yes"):
        return True
    if low in ("0", "false", "off", "no"):
        return False
    raise ConfigError(f"cannot parse boolean {value!r}")


def load_config(path=None, overrides=None, defaults=None) -> ExperimentConfig:
    """Build a config from a key=value file plus override mapping.

    Recognized keys: ``method`` (comma-separated specs), ``eps``, ``kappa``,
    ``length``, ``m``, ``h``, ``ic``, ``tau`` (comma-separated), ``T``,
    ``grid``, ``out``, ``monitor``, ``metric``, ``ref_method``, ``ref_tau``,
    ``implicit``.  Precedence: ``defaults`` < file entries < ``overrides``.
    """
    raw = dict(defaults or {})
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            key, eq, value = stripped.partition("=")
            if not eq:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            raw[key.strip()] = value.strip()
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value

    cfg = ExperimentConfig()
    try:
        if "length" in raw:  # must precede a spacing-based mesh size
            cfg.length = float(raw.pop("length"))
        for key, value in raw.items():
            if key == "method":
                specs = value if isinstance(value, list) else [s for s in value.split(",") if s]
                # commas inside parameter lists: rejoin chunks lacking '='
                cfg.methods = _regroup_method_specs(specs)
            elif key == "tau":
                items = value if isinstance(value, list) else value.split(",")
                cfg.taus = [float(v) for v in items]
            elif key == "T":
                cfg.t_final = float(value)
            elif key == "h":
                spacing = float(value)
                cfg.m = int(round(cfg.length / spacing)) - 1
            elif key in _FLOAT_KEYS:
                setattr(cfg, key, float(value))
            elif key in _INT_KEYS:
                setattr(cfg, key, int(value))
            elif key in _BOOL_KEYS:
                setattr(cfg, key, value if isinstance(value, bool) else _parse_bool(value))
            elif key == "out":
                cfg.out = Path(value)
            elif key in ("ic", "grid", "metric", "ref_method"):
                setattr(cfg, key, value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    if cfg.metric not in (None, "l2", "hminus1"):
        raise ConfigError(f"unknown metric {cfg.metric!r}")
    if cfg.m < 2:
        raise ConfigError("mesh must have at least 2 interior points")
    return cfg


def _regroup_method_specs(chunks) -> list:
    """Reassemble comma-split method specs: a chunk without a name part
    belongs to the previous spec ("eerk32:c2=0.75,c3=0.6")."""
    specs = []
    for chunk in chunks:
        chunk = chunk.strip()
        if not chunk:
            continue
        if specs and "=" in chunk and ":" not in chunk:
            specs[-1] += "," + chunk
        else:
            specs.append(chunk)
    return specs


# --------------------------------------------------------------------------
# Drivers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    tau: float
    error: float
    order: Optional[float]


def run_convergence(cfg: ExperimentConfig, method_spec: Optional[str] = None):
    """Errors against a fine reference run over a halving tau schedule.

    The reference solution is computed once and sampled at every coarse
    time level; the error is ``max_n max_j |u^n_j - u*(t_n)_j|``.  Returns
    the rows and writes ``<label>_convergence.csv`` when an output directory
    is configured.
    """
    tableaux = cfg.tableaux() if method_spec is None else [parse_method(method_spec)]
    problem = cfg.problem()
    u0 = cfg.initial_state(problem)
    ref_tableau, ref_tau = cfg.resolve_reference()

    strides = []
    for tau in cfg.taus:
        ratio = tau / ref_tau
        stride = round(ratio)
        if stride < 1 or abs(ratio - stride) > 1e-9 * max(1.0, ratio):
            raise ConfigError(f"tau {tau} is not an integer multiple of ref_tau {ref_tau}")
        strides.append(stride)

    ref_steps = round(cfg.t_final / ref_tau)
    wanted = set()
    for tau, stride in zip(cfg.taus, strides):
        wanted.update(stride * n for n in range(1, round(cfg.t_final / tau) + 1))
    snapshots = {}
    ref_report = integrate(problem, ref_tableau, u0, ref_tau, cfg.t_final,
                           snapshot_steps=wanted, snapshots=snapshots)
    if ref_report.diverged:
        raise BenchDivergence(
            f"reference run {ref_tableau.label} at tau={ref_tau} diverged "
            f"at step {ref_report.diverged_step}")
    del ref_report

    results = {}
    for t in tableaux:
        rows = []
        prev_error = None
        for tau, stride in zip(cfg.taus, strides):
            n_steps = round(cfg.t_final / tau)
            states = {}
            report = integrate(problem, t, u0, tau, cfg.t_final,
                               snapshot_steps=set(range(1, n_steps + 1)), snapshots=states)
            if report.diverged:
                raise BenchDivergence(
                    f"{t.label} at tau={tau} diverged at step {report.diverged_step}")
            error = max(float(np.max(np.abs(states[n] - snapshots[n * stride])))
                        for n in range(1, n_steps + 1))
            order = None if prev_error is None else math.log2(prev_error / error)
            rows.append(ConvergenceRow(tau, error, order))
            prev_error = error
        results[t.label] = rows
        if cfg.out is not None:
            write_csv(cfg.out / f"{_slug(t.label)}_convergence.csv",
                      ["tau", "error", "order"],
                      [(r.tau, r.error, r.order) for r in rows])
    return results


def run_energy(cfg: ExperimentConfig):
    """Energy series (plus final state and optional stage margins) per
    method at the first configured tau."""
    tableaux = cfg.tableaux()
    problem = cfg.problem()
    u0 = cfg.initial_state(problem)
    tau = cfg.taus[0]
    reports = {}
    for t in tableaux:
        if cfg.t_final == 0.0:
            report = RunReport(method=t.label, tau=tau, times=np.zeros(1),
                               energies=np.array([problem.energy(u0)]),
                               sup_norms=np.array([float(np.max(np.abs(u0)))]),
                               final_state=u0.copy(), margins=None,
                               diverged=False, diverged_step=None, wall_time=0.0)
        else:
            report = integrate(problem, t, u0, tau, cfg.t_final, monitor=cfg.monitor)
        reports[t.label] = report
        if cfg.out is not None:
            slug = _slug(t.label)
            write_csv(cfg.out / f"{slug}_energy.csv", ["t", "energy"],
                      list(zip(report.times, report.energies)))
            write_csv(cfg.out / f"{slug}_final.csv", ["x", "u"],
                      list(zip(problem.op.x, report.final_state)))
            if report.margins is not None:
                header = ["t"] + [f"margin_{j}" for j in range(1, t.stages + 1)]
                rows = [(report.times[i + 1], *report.margins[i])
                        for i in range(len(report.margins))]
                write_csv(cfg.out / f"{slug}_margins.csv", header, rows)
    return reports


def run_analysis(cfg: ExperimentConfig):
    """Classify each method on the z grid and emit its minor curves."""
    tableaux = cfg.tableaux()
    grid = cfg.z_grid()
    variant = "implicit" if cfg.implicit else "standard"
    results = {}
    summary_rows = []
    for t in tableaux:
        verdict = classify_method(t, z_grid=None if cfg.grid == "default" else grid,
                                  variant=variant)
        results[t.label] = verdict
        w = verdict.witness
        summary_rows.append((t.label, verdict.verdict,
                             w.z if w else "", w.minor_index if w else "",
                             w.minor_value if w else ""))
        if cfg.out is not None:
            z, rate, minors = scan_method(t, z_grid=grid, variant=variant)
            header = ["z", "rate"] + [f"minor_{j}" for j in range(1, t.stages + 1)]
            rows = [(z[i], rate[i], *minors[i]) for i in range(len(z))]
            write_csv(cfg.out / f"{_slug(t.label)}_minors.csv", header, rows)
    if cfg.out is not None:
        write_csv(cfg.out / "classification.csv",
                  ["method", "verdict", "witness_z", "witness_minor", "witness_value"],
                  summary_rows)
    return results


def run_rate(cfg: ExperimentConfig):
    """Average dissipation rate curves per method (optionally the
    pure-implicit variant alongside)."""
    tableaux = cfg.tableaux()
    grid = cfg.z_grid()
    curves = {}
    for t in tableaux:
        rate = average_dissipation_rate(t, grid)
        data = {"rate": rate}
        if cfg.implicit:
            data["rate_implicit"] = average_dissipation_rate(t, grid, "implicit")
        curves[t.label] = data
        if cfg.out is not None:
            header = ["z", "rate"] + (["rate_implicit"] if cfg.implicit else [])
            rows = [(grid[i], *[data[k][i] for k in header[1:]]) for i in range(len(grid))]
            write_csv(cfg.out / f"{_slug(t.label)}_rate.csv", header, rows)
    return curves
