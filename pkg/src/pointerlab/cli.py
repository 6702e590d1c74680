"""Command-line experiment runner.

Each subcommand runs one experiment and writes its report to stdout.
Settings come from the built-in defaults, then ``--config FILE`` (a JSON
object of :class:`~pointerlab.mc.ExperimentConfig` fields), then flags.

Exit status: 0 on success, 2 on a usage or config error, 1 on a runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .mc import ExperimentConfig, run_replicas
from .report import render
from .walks import ConfigError

# flag -> (config field, type, help)
FLAGS = {
    "stations": ("stations", int, "number of stations N"),
    "trials": ("trials", int, "number of independent trials"),
    "steps": ("steps", int, "number of walk steps"),
    "light": ("light", str, "light placement: antipodal | adjacent | grid:<odd g>"),
    "policy": ("policy", str, "guessing policy: pointer | heads | mixed:<s1,s2,...>"),
    "alpha": ("alpha", float, "significance level of the override test"),
    "min-samples": ("min_samples", int, "events a bin needs before it may be tested"),
    "bin": ("bin", str, "demon binning: current | destination"),
    "freeze-after": ("freeze_after", int, "stop adding overrides after this many events"),
    "start": ("start", str, "walk start: stationary | <station>"),
    "burn-in": ("burn_in", int, "steps discarded before scoring"),
    "small": ("small", float, "smaller envelope amount"),
    "large": ("large", float, "larger envelope amount"),
    "threshold": ("threshold", str, "threshold law: uniform:a,b | exp:rate | normal:mu,sigma | point:x"),
    "kind": ("kind", str, "table to enumerate: predict | postdict | line"),
    "override": ("override", str, "stations guessing heads in the policy value, e.g. 0,1"),
}

COMMON = ("seed", "replicas", "workers", "level", "format", "timing")

SUBCOMMANDS = {
    "envelope": ("Blackwell's bet on two envelopes", ("trials", "small", "large", "threshold")),
    "postdict": ("guess the side the train arrived from", ("stations", "trials", "light")),
    "predict": ("guess the next move before the coin is flipped", ("stations", "steps", "light", "policy", "start", "burn-in")),
    "demon": (
        "prediction with per-station records and heads overrides",
        ("stations", "steps", "light", "alpha", "min-samples", "bin", "freeze-after", "start", "burn-in"),
    ),
    "line": ("pointer prediction on the reflecting line", ("stations", "steps", "policy", "start", "burn-in")),
    "oracle": ("exact success tables by enumeration", ("stations", "light", "kind", "override")),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pointerlab", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="experiment", required=True, metavar="SUBCOMMAND")
    for name, (help_text, flags) in SUBCOMMANDS.items():
        sub = subs.add_parser(name, help=help_text, description=help_text)
        sub.add_argument("--config", type=Path, help="JSON file of config fields")
        for flag in flags:
            dest, kind, text = FLAGS[flag]
            sub.add_argument(f"--{flag}", dest=dest, type=kind, help=text, default=argparse.SUPPRESS)
        sub.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="64-bit seed (default 42)")
        sub.add_argument("--replicas", type=int, default=argparse.SUPPRESS, help="independent replicas (default 1)")
        sub.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="threads running replicas")
        sub.add_argument("--level", type=float, default=argparse.SUPPRESS, help="Wilson interval level")
        sub.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)
        sub.add_argument("--timing", action="store_true", default=argparse.SUPPRESS, help="add wall time to the report")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    values = vars(args).copy()
    experiment = values.pop("experiment")
    path = values.pop("config", None)
    data = {}
    if path is not None:
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}", "config") from None
        if not isinstance(data, dict):
            raise ConfigError("config: the file must hold a JSON object", "config")
    data.update(values)
    data["experiment"] = experiment
    return ExperimentConfig.from_dict(data).resolved()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args)
    except (ConfigError, TypeError) as exc:
        print(f"pointerlab: config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_replicas(config)
    except ConfigError as exc:
        print(f"pointerlab: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"pointerlab: error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(render(report, config.format))
    return 0


if __name__ == "__main__":
    sys.exit(main())
