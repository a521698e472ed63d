"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 integration failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config
from .master_equation import IntegrationFailed
from .scenarios import (
    PRESETS,
    REDUCERS,
    ROUTES,
    ConfigError,
    ScenarioConfig,
    run,
    preset,
    summarize,
    sweep,
)

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dimer-transfer",
                     description="Driven dissipative dimer: acceptor population, "
                                 "total efficiency and concurrence.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one scenario file")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--route", choices=ROUTES)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="SECTION.KEY=VALUE", help="override a config value")

    p = sub.add_parser("preset", help="run a figure preset")
    p.add_argument("name", choices=PRESETS)
    p.add_argument("--route", choices=ROUTES)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("sweep", help="sweep one parameter of a scenario file")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--axis")
    p.add_argument("--values", help="log:min:max:n, lin:min:max:n or a comma list")
    p.add_argument("--reduce", nargs="+", choices=REDUCERS)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="SECTION.KEY=VALUE")

    p = sub.add_parser("validate", help="parse and check a scenario file")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--sweep", action="store_true", help="also check the [sweep] section")
    return parser


def _report_run(cfg: ScenarioConfig, trajs) -> None:
    for route, traj in trajs.items():
        s = summarize(traj)
        print(f"{cfg.name} [{route}] saturation P={s['saturation_P']:.6g} "
              f"eta_total={s['saturation_eta']:.6g} peak C={s['peak_C']:.6g} "
              f"at t={s['peak_C_time']:.4g}")


def _report_sweep(result) -> None:
    spec = result.spec
    for row in result.rows:
        head = f"{spec.group_axis}={row['group']:g} " if spec.group_axis else ""
        vals = " ".join(f"{r}={row[r]:.6g}" for r in spec.reduce)
        print(f"{head}{spec.axis}={row['value']:.6g} {vals} [{row['status']}]")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            cp = config.read_config(args.config)
            cfg = config.build_sweep(cp) if args.sweep else config.build_scenario(cp)
            print(f"{args.config}: ok")
            if isinstance(cfg, ScenarioConfig):
                print(config.dump_scenario(cfg), end="")
            return EXIT_OK
        if args.command == "simulate":
            overrides = list(args.overrides)
            if args.route:
                overrides.append(f"run.route={args.route}")
            cfg = config.build_scenario(config.read_config(args.config, overrides))
            _report_run(cfg, run(cfg, args.out))
            return EXIT_OK
        if args.command == "preset":
            obj = preset(args.name)
            if isinstance(obj, ScenarioConfig):
                if args.route:
                    from dataclasses import replace

                    obj = replace(obj, route=args.route)
                _report_run(obj, run(obj, args.out))
            else:
                _report_sweep(sweep(obj, args.out, n_jobs=args.jobs))
            return EXIT_OK
        if args.command == "sweep":
            cp = config.read_config(args.config, args.overrides)
            spec = config.build_sweep(cp, axis=args.axis, values=args.values,
                                      reduce=args.reduce)
            _report_sweep(sweep(spec, args.out, n_jobs=args.jobs))
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationFailed as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
