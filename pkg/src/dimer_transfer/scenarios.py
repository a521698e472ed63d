"""Scenario configuration, figure presets, runs and parameter sweeps."""

from __future__ import annotations

import json
import logging
import math
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .hamiltonian import DimerParams
from .master_equation import IntegrationFailed, Trajectory, evolve
from .observables import saturation_value
from .pulse import GaussianSegment, PulseTrain

log = logging.getLogger(__name__)

ROUTES = ("full", "reduced", "both")
OBSERVABLES = ("P", "eta_total", "concurrence")
REDUCERS = ("saturation_P", "saturation_eta", "peak_C")
DIAGNOSTICS = ("max_trace_error", "max_hermiticity_error", "min_eigenvalue")
CSV_HEADER = ("t", "p_ee", "p_eg", "p_ge", "p_gg", "P", "eta_total", "concurrence",
              "rho11", "rho22", "rho33", "rho44")
SCHEMA = "dimer-transfer/run/1"
SWEEP_SCHEMA = "dimer-transfer/sweep/1"


class ConfigError(ValueError):
    pass


class UnknownPreset(ConfigError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one trajectory.

    ``t_start``/``t_end`` left as ``None`` are resolved from the pulse train:
    the run starts five widths before the earliest pulse and ends at
    ``max(15/kappa, last center + 5 tau_p + 10/kappa)``.
    """

    params: DimerParams = field(default_factory=DimerParams)
    train: PulseTrain = field(default_factory=PulseTrain)
    t_start: float | None = None
    t_end: float | None = None
    dt: float = 1e-3
    route: str = "full"
    outputs: tuple[str, ...] = OBSERVABLES
    sample_interval: float = 0.05
    name: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(self.outputs))
        self.validate()

    def validate(self) -> None:
        if self.route not in ROUTES:
            raise ConfigError(f"route must be one of {ROUTES}, got {self.route!r}")
        bad = set(self.outputs) - set(OBSERVABLES)
        if bad:
            raise ConfigError(f"unknown outputs {sorted(bad)}")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.sample_interval < self.dt:
            raise ConfigError("sample_interval must be at least dt")
        t0, t1 = self.t_span
        if not t0 < t1:
            raise ConfigError(f"t_start ({t0}) must precede t_end ({t1})")

    @property
    def t_span(self) -> tuple[float, float]:
        t0 = self.train.start_time if self.t_start is None else self.t_start
        t1 = default_t_end(self.params, self.train) if self.t_end is None else self.t_end
        return float(t0), float(t1)

    def routes(self) -> tuple[str, ...]:
        return ("full", "reduced") if self.route == "both" else (self.route,)

    def to_dict(self) -> dict:
        t0, t1 = self.t_span
        return {
            "name": self.name,
            "params": asdict(self.params),
            "pulses": [asdict(s) for s in self.train],
            "t_start": t0,
            "t_end": t1,
            "dt": self.dt,
            "sample_interval": self.sample_interval,
            "route": self.route,
            "outputs": list(self.outputs),
        }


def default_t_end(p: DimerParams, train: PulseTrain) -> float:
    kappas = [k for k in (p.kappa1, p.kappa2) if k > 0]
    if not kappas:
        raise ConfigError("t_end must be given explicitly when both bath couplings are zero")
    relax = 1.0 / min(kappas)
    t_end = 15 * relax
    for seg in train:
        t_end = max(t_end, seg.t_center + 5 * seg.tau_p + 10 * relax)
    return t_end


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep, optionally repeated for each value of a group axis.

    Axis paths are ``params.<field>`` or ``pulse.<field>``; pulse fields apply
    to every segment, and ``pulse.tau_pJ`` sets ``tau_p`` in units of 1/J.
    """

    base: ScenarioConfig
    axis: str
    values: tuple[float, ...]
    reduce: tuple[str, ...] = ("saturation_P",)
    group_axis: str | None = None
    group_values: tuple[float, ...] = ()
    name: str = "sweep"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "reduce", tuple(self.reduce))
        object.__setattr__(self, "group_values", tuple(float(v) for v in self.group_values))
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if any(not v > 0 for v in self.values + self.group_values):
            raise ConfigError("sweep values must be positive")
        bad = set(self.reduce) - set(REDUCERS)
        if bad:
            raise ConfigError(f"unknown reducers {sorted(bad)}")
        check_axis(self.axis)
        if self.group_axis is not None:
            check_axis(self.group_axis)
            if not self.group_values:
                raise ConfigError("group_axis given without group_values")

    def points(self) -> list[tuple[float | None, float, ScenarioConfig]]:
        groups = self.group_values if self.group_axis else (None,)
        out = []
        for g in groups:
            cfg = self.base if g is None else apply_axis(self.base, self.group_axis, g)
            for v in self.values:
                out.append((g, v, apply_axis(cfg, self.axis, v)))
        return out


_PARAM_FIELDS = ("omega1", "omega2", "J", "kappa1", "kappa2", "T1", "T2")
_PULSE_FIELDS = ("E0", "tau_p", "tau_pJ", "t_center", "Omega")


def check_axis(path: str) -> None:
    section, _, key = path.partition(".")
    ok = (section == "params" and key in _PARAM_FIELDS) or (
        section == "pulse" and key in _PULSE_FIELDS)
    if not ok:
        raise ConfigError(f"unknown sweep axis {path!r}")


def apply_axis(cfg: ScenarioConfig, path: str, value: float) -> ScenarioConfig:
    """Copy of ``cfg`` with one parameter replaced."""
    check_axis(path)
    section, key = path.split(".", 1)
    if section == "params":
        try:
            return replace(cfg, params=replace(cfg.params, **{key: value}))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if key == "tau_pJ":
        if cfg.params.J <= 0:
            raise ConfigError("tau_pJ needs J > 0")
        key, value = "tau_p", value / cfg.params.J
    try:
        segs = [replace(s, **{key: value}) for s in cfg.train]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return replace(cfg, train=PulseTrain(segs))


def log_grid(lo: float, hi: float, count: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.geomspace(lo, hi, count))


def linear_grid(lo: float, hi: float, count: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.linspace(lo, hi, count))


# ---------------------------------------------------------------- presets

FIG_PARAMS = DimerParams(omega1=1.0, omega2=1.0, J=1.5, kappa1=0.1, kappa2=0.1, T1=0.1, T2=0.1)
FIG_E0 = 1.0  # E0 = omega1
FIG1_WIDTHS = (0.01, 0.1, 0.5, 1.0, 10.0)  # units of 1/J
FIG2_J = (1.0, 1.5, 2.0)
FIG2_POINTS = 40


def pulse_train(widths_J: float, centers, p: DimerParams = FIG_PARAMS,
                E0: float = FIG_E0) -> PulseTrain:
    tau = widths_J / p.J
    return PulseTrain([GaussianSegment(E0=E0, tau_p=tau, t_center=float(c)) for c in centers])


def _single(name, width_J):
    return ScenarioConfig(params=FIG_PARAMS, train=pulse_train(width_J, [0.0]), name=name)


def _sequence(name, width_J, centers):
    return ScenarioConfig(params=FIG_PARAMS, train=pulse_train(width_J, centers), name=name)


def preset(name: str) -> ScenarioConfig | SweepSpec:
    """Configuration reproducing one of the figure experiments."""
    single = _single(name, FIG1_WIDTHS[0])
    if name in ("fig1", "fig3"):
        reduce = ("saturation_P", "saturation_eta") if name == "fig1" else ("peak_C",)
        return SweepSpec(base=single, axis="pulse.tau_pJ", values=FIG1_WIDTHS,
                         reduce=reduce, name=name)
    if name == "fig2":
        return SweepSpec(base=single, axis="pulse.tau_pJ",
                         values=log_grid(0.01, 10.0, FIG2_POINTS),
                         reduce=("saturation_P", "saturation_eta"),
                         group_axis="params.J", group_values=FIG2_J, name=name)
    two = (0.0, 15.0)
    four = (0.0, 25.0, 35.0, 45.0)
    table = {
        "fig4a": (0.01, two),
        "fig4b": (0.1, two),
        "fig5a": (0.5, two),
        "fig5b": (1.0, two),
        "fig6a": (10.0, two),
        "fig6b": (10.0, four),
        "fig7a": (0.1, two),
        "fig7b": (10.0, four),
    }
    if name not in table:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {PRESETS}")
    width, centers = table[name]
    return _sequence(name, width, centers)


PRESETS = ("fig1", "fig2", "fig3", "fig4a", "fig4b", "fig5a", "fig5b",
           "fig6a", "fig6b", "fig7a", "fig7b")


# ---------------------------------------------------------------- running

def summarize(traj: Trajectory) -> dict:
    C = traj.concurrence
    k = int(np.argmax(C))
    return {
        "saturation_P": saturation_value(traj.times, traj.P),
        "saturation_eta": saturation_value(traj.times, traj.eta_total),
        "peak_C": float(C[k]),
        "peak_C_time": float(traj.times[k]),
    }


def reduce_trajectory(traj: Trajectory, reducers) -> dict:
    s = summarize(traj)
    return {r: s[r] for r in reducers}


def trajectory_rows(traj: Trajectory) -> np.ndarray:
    return np.column_stack([
        traj.times, traj.pops, traj.P, traj.eta_total, traj.concurrence, traj.eig_pops,
    ])


def write_csv(path: Path, header, rows: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return format(float(v), ".17g")


def version_string() -> str:
    from . import __version__

    try:
        desc = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                              cwd=Path(__file__).parent, capture_output=True, text=True,
                              timeout=5)
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{__version__}+{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def simulate(cfg: ScenarioConfig, route: str) -> Trajectory:
    return evolve(cfg.params, cfg.train, cfg.t_span, dt=cfg.dt, route=route,
                  sample_interval=cfg.sample_interval)


def run(cfg: ScenarioConfig, out_dir: str | Path | None = None) -> dict[str, Trajectory]:
    """Run every requested route; write ``<name>_<route>.csv`` and ``<name>.json``.

    If a route fails, its partial trajectory is still written, the sidecar is
    marked ``"status": "failed"`` and the :class:`IntegrationFailed` is re-raised.
    """
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    results: dict[str, Trajectory] = {}
    sidecar = {"schema": SCHEMA, "version": version_string(), "config": cfg.to_dict(),
               "routes": {}}
    failure = None
    for route in cfg.routes():
        try:
            traj = simulate(cfg, route)
        except IntegrationFailed as exc:
            failure = exc
            traj = exc.trajectory
        results[route] = traj
        entry = {"status": traj.status, "samples": len(traj)}
        if traj.status == "failed":
            entry["failure_time"] = traj.failure_time
        elif len(traj):
            entry["summary"] = {k: v for k, v in summarize(traj).items()
                                if _wanted(k, cfg.outputs)}
        sidecar["routes"][route] = entry
        if out is not None and traj is not None:
            write_csv(out / f"{cfg.name}_{route}.csv", CSV_HEADER, trajectory_rows(traj))
        if failure is not None:
            break
    if out is not None:
        _write_json(out / f"{cfg.name}.json", sidecar)
    if failure is not None:
        raise failure
    return results


def _wanted(key: str, outputs) -> bool:
    needs = {"saturation_P": "P", "saturation_eta": "eta_total",
             "peak_C": "concurrence", "peak_C_time": "concurrence"}
    return needs[key] in outputs


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[dict]

    def column(self, name: str, group: float | None = None) -> np.ndarray:
        return np.array([r[name] for r in self.rows if group is None or r["group"] == group],
                        dtype=float)

    def axis_values(self, group: float | None = None) -> np.ndarray:
        return self.column("value", group)


def _sweep_point(args):
    cfg, reducers = args
    route = "full" if cfg.route == "both" else cfg.route
    try:
        traj = simulate(cfg, route)
    except IntegrationFailed as exc:
        return {"status": "failed", "failure_time": exc.time}
    return {"status": "ok", **reduce_trajectory(traj, reducers), **diagnostics(traj)}


def diagnostics(traj: Trajectory) -> dict:
    """Worst-case trace, Hermiticity and positivity over all samples."""
    return {
        "max_trace_error": float(traj.trace_error().max()),
        "max_hermiticity_error": float(traj.hermiticity_error().max()),
        "min_eigenvalue": float(traj.min_eigenvalue().min()),
    }


def sweep(spec: SweepSpec, out_dir: str | Path | None = None, n_jobs: int = 1) -> SweepResult:
    """Run every sweep point independently and reduce each to scalars.

    Failed points are kept as rows with ``status == "failed"`` and empty values.
    """
    points = spec.points()
    jobs = [(cfg, spec.reduce) for _, _, cfg in points]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(_sweep_point, jobs))
    else:
        outcomes = [_sweep_point(j) for j in jobs]
    rows = []
    for (g, v, _), res in zip(points, outcomes):
        row = {"group": g, "value": v, "status": res["status"]}
        for r in spec.reduce + DIAGNOSTICS:
            row[r] = res.get(r, float("nan"))
        if res["status"] != "ok":
            row["failure_time"] = res["failure_time"]
            log.warning("sweep point %s=%g failed at t=%g", spec.axis, v, res["failure_time"])
        rows.append(row)
    result = SweepResult(spec, rows)
    if out_dir is not None:
        write_sweep(result, Path(out_dir))
    return result


def write_sweep(result: SweepResult, out: Path) -> None:
    spec = result.spec
    out.mkdir(parents=True, exist_ok=True)
    header = ([spec.group_axis] if spec.group_axis else []) + [spec.axis, *spec.reduce]
    rows = []
    for r in result.rows:
        vals = ([r["group"]] if spec.group_axis else []) + [r["value"]]
        vals += [r[k] if r["status"] == "ok" else None for k in spec.reduce]
        rows.append(vals)
    with open(out / f"{spec.name}.csv", "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for vals in rows:
            fh.write(",".join(_fmt(v) for v in vals) + "\n")
    payload = {
        "schema": SWEEP_SCHEMA,
        "version": version_string(),
        "axis": spec.axis,
        "values": list(spec.values),
        "group_axis": spec.group_axis,
        "group_values": list(spec.group_values),
        "reduce": list(spec.reduce),
        "base": spec.base.to_dict(),
        "points": [{k: (None if isinstance(v, float) and math.isnan(v) else v)
                    for k, v in r.items()} for r in result.rows],
    }
    _write_json(out / f"{spec.name}.json", payload)
