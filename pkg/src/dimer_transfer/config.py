"""Plain-text scenario files.

An INI-style file with dotted section names; every key is optional and
falls back to the figure defaults::

    [params]
    omega1 = 1.0
    omega2 = 1.0
    J = 1.5
    kappa1 = 0.1
    kappa2 = 0.1
    T1 = 0.1
    T2 = 0.1

    [pulse.1]            ; one section per segment, ordered by the suffix
    E0 = 1.0
    tau_pJ = 0.01        ; width in units of 1/J  (or tau_p = ... absolute)
    t_center = 0.0
    Omega = 0.0

    [run]
    name = my_run
    t_start = auto       ; or a number
    t_end = auto
    dt = 1e-3
    sample_interval = 0.05
    route = full         ; full | reduced | both
    outputs = P, eta_total, concurrence

    [sweep]              ; only read by the ``sweep`` command
    axis = pulse.tau_pJ
    values = log:0.01:10:40     ; or lin:a:b:n, or a comma list
    reduce = saturation_P, saturation_eta
    group_axis = params.J
    group_values = 1.0, 1.5, 2.0

Overrides use the same dotted names, e.g. ``params.J=2`` or ``pulse.1.E0=0.5``.
"""

from __future__ import annotations

import configparser
from dataclasses import fields
from pathlib import Path

from .hamiltonian import DimerParams
from .pulse import GaussianSegment, PulseTrain
from .scenarios import ConfigError, ScenarioConfig, SweepSpec, linear_grid, log_grid

_RUN_KEYS = {"name", "t_start", "t_end", "dt", "sample_interval", "route", "outputs"}
_PULSE_KEYS = {"E0", "tau_p", "tau_pJ", "t_center", "Omega"}
_SWEEP_KEYS = {"axis", "values", "reduce", "group_axis", "group_values", "name"}


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keys are case sensitive (J, T1, E0)
    return cp


def read_config(path: str | Path, overrides=()) -> configparser.ConfigParser:
    cp = _parser()
    path = Path(path)
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    apply_overrides(cp, overrides)
    return cp


def parse_text(text: str, overrides=()) -> configparser.ConfigParser:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    apply_overrides(cp, overrides)
    return cp


def apply_overrides(cp: configparser.ConfigParser, overrides) -> None:
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        section, option = key.strip().rsplit(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, option, value.strip())


def _float(section, key, raw) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None


def _check_keys(section, present, allowed):
    extra = set(present) - allowed
    if extra:
        raise ConfigError(f"[{section}] unknown keys: {', '.join(sorted(extra))}")


def _list(raw: str) -> list[str]:
    return [s.strip() for s in raw.split(",") if s.strip()]


def build_scenario(cp: configparser.ConfigParser) -> ScenarioConfig:
    known = {"params", "run", "sweep"}
    for section in cp.sections():
        if section not in known and not section.startswith("pulse."):
            raise ConfigError(f"unknown section [{section}]")

    pvals = {}
    if cp.has_section("params"):
        allowed = {f.name for f in fields(DimerParams)}
        _check_keys("params", cp["params"], allowed)
        pvals = {k: _float("params", k, v) for k, v in cp["params"].items()}
    try:
        params = DimerParams(**pvals)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    segments = []
    pulse_sections = [s for s in cp.sections() if s.startswith("pulse.")]

    def order(s):
        suffix = s.split(".", 1)[1]
        return (0, int(suffix), "") if suffix.isdigit() else (1, 0, suffix)

    for section in sorted(pulse_sections, key=order):
        sec = cp[section]
        _check_keys(section, sec, _PULSE_KEYS)
        vals = {k: _float(section, k, v) for k, v in sec.items()}
        if "tau_p" in vals and "tau_pJ" in vals:
            raise ConfigError(f"[{section}] give tau_p or tau_pJ, not both")
        if "tau_pJ" in vals:
            if params.J <= 0:
                raise ConfigError(f"[{section}] tau_pJ needs J > 0")
            vals["tau_p"] = vals.pop("tau_pJ") / params.J
        try:
            segments.append(GaussianSegment(**vals))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {exc}") from exc

    run = {}
    if cp.has_section("run"):
        sec = cp["run"]
        _check_keys("run", sec, _RUN_KEYS)
        for key in ("t_start", "t_end"):
            raw = sec.get(key, "auto")
            run[key] = None if raw.strip().lower() == "auto" else _float("run", key, raw)
        for key in ("dt", "sample_interval"):
            if key in sec:
                run[key] = _float("run", key, sec[key])
        if "route" in sec:
            run["route"] = sec["route"].strip()
        if "outputs" in sec:
            run["outputs"] = tuple(_list(sec["outputs"]))
        if "name" in sec:
            run["name"] = sec["name"].strip()
    return ScenarioConfig(params=params, train=PulseTrain(segments), **run)


def parse_values(raw: str) -> tuple[float, ...]:
    """``log:lo:hi:n``, ``lin:lo:hi:n`` or a comma-separated list."""
    raw = raw.strip()
    kind, sep, rest = raw.partition(":")
    if sep and kind in ("log", "lin"):
        parts = rest.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range must be {kind}:min:max:count, got {raw!r}")
        lo, hi = (_float("sweep", "values", x) for x in parts[:2])
        try:
            count = int(parts[2])
        except ValueError:
            raise ConfigError(f"bad point count in {raw!r}") from None
        if count < 1:
            raise ConfigError("point count must be positive")
        if kind == "log" and not (lo > 0 and hi > 0):
            raise ConfigError("log spacing needs positive bounds")
        return (log_grid if kind == "log" else linear_grid)(lo, hi, count)
    return tuple(_float("sweep", "values", v) for v in _list(raw))


def build_sweep(cp: configparser.ConfigParser, axis=None, values=None, reduce=None) -> SweepSpec:
    base = build_scenario(cp)
    sec = cp["sweep"] if cp.has_section("sweep") else {}
    if sec:
        _check_keys("sweep", sec, _SWEEP_KEYS)
    axis = axis or sec.get("axis")
    raw_values = values or sec.get("values")
    if not axis or not raw_values:
        raise ConfigError("a sweep needs an axis and values")
    reducers = reduce or _list(sec.get("reduce", "saturation_P"))
    group_axis = sec.get("group_axis") or None
    group_values = parse_values(sec["group_values"]) if sec.get("group_values") else ()
    return SweepSpec(base=base, axis=axis.strip(), values=parse_values(raw_values),
                     reduce=tuple(reducers), group_axis=group_axis,
                     group_values=group_values, name=sec.get("name", base.name))


def dump_scenario(cfg: ScenarioConfig) -> str:
    """Inverse of :func:`build_scenario` (absolute widths, resolved times)."""
    cp = _parser()
    cp["params"] = {f.name: repr(getattr(cfg.params, f.name)) for f in fields(DimerParams)}
    for i, seg in enumerate(cfg.train, start=1):
        cp[f"pulse.{i}"] = {f.name: repr(getattr(seg, f.name)) for f in fields(GaussianSegment)}
    t0, t1 = cfg.t_span
    cp["run"] = {
        "name": cfg.name, "t_start": repr(t0), "t_end": repr(t1), "dt": repr(cfg.dt),
        "sample_interval": repr(cfg.sample_interval), "route": cfg.route,
        "outputs": ", ".join(cfg.outputs),
    }
    from io import StringIO

    buf = StringIO()
    cp.write(buf)
    return buf.getvalue()
