"""Command-line front end and CSV/SVG artifact emission.

Commands:
    curves        similarity T(theta) sweep per loss spec
    gradients     |dL/dtheta| sweep per loss spec
    transition    closed-form vs bisection transition angle per loss spec
    margin-field  decision-boundary margin over theta_neg per loss spec
    gradcheck     analytic vs finite-difference gradient per loss spec
    simulate      noisy-label toy training run (single loss spec)

Configuration comes from a flat TOML file (``--config``) and/or flags;
flags override file values. File keys: ``families``/``margins``/``scales``
(parallel arrays; or singular ``family``/``margin``/``scale``), ``b``,
``class_count``, ``grid_size``, ``output_dir``, ``emit_svg``, and the
``toy_*`` keys mirroring every ToySpec field. Unknown keys are rejected.

Artifacts land in ``--output-dir``, else the config file's
``output_dir``, else ``$EXPFACE_OUTPUT_DIR``, else ``./expface_out``.
One CSV per loss spec, named ``<command>_<family>_m<margin>.csv``, with
an optional SVG polyline next to it (``--emit-svg``; never for
``transition``, whose table is a single row). Reals are serialized with
17 significant digits so values round-trip exactly; line endings are LF.

Exit codes: 0 success; 2 configuration error; 3 I/O failure; 4 training
divergence; 5 internal invariant breach.
"""

import argparse
import dataclasses
import os
import sys
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .angular_analysis import (
    margin_field,
    sweep_gradient,
    sweep_similarity,
    transition_angle,
    transition_angle_bisect,
)
from .errors import ConfigError, PreconditionError, TrainingDivergedError
from .gradient_engine import TransitionContext, finite_diff_check
from .margin_core import DEFAULT_MARGINS, DEFAULT_SCALES, Family, LossSpec
from .noise_sim import ToySpec, training_run

COMMANDS = ("curves", "gradients", "transition", "margin-field", "gradcheck", "simulate")

#: Families emitted when the config names none, in reference order.
DEFAULT_FAMILIES = (Family.SPHEREFACE, Family.COSFACE, Family.ARCFACE, Family.EXPFACE)

OUTPUT_DIR_ENV = "EXPFACE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "./expface_out"


@dataclass(frozen=True)
class RunConfig:
    """Fully validated description of one CLI invocation."""

    command: str
    losses: tuple
    context: TransitionContext
    grid_size: int
    toy: object
    output_dir: str
    emit_svg: bool

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if int(self.grid_size) < 2:
            raise ConfigError(f"grid_size must be >= 2, got {self.grid_size!r}")
        if self.command == "simulate" and self.toy is None:
            raise ConfigError("simulate requires a toy spec")


@dataclass(frozen=True)
class CsvTable:
    """Header plus rows of real/int/string cells, all of header arity."""

    header: tuple
    rows: tuple

    def __post_init__(self):
        width = len(self.header)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise PreconditionError(
                    f"row {i} has {len(row)} cells, header has {width}"
                )


def _format_cell(value):
    if isinstance(value, str):
        if "," in value or "\n" in value:
            raise PreconditionError(f"cell {value!r} needs quoting, which CSVs here never use")
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def write_csv(path, table):
    """Write the table as comma-separated, LF-terminated text."""
    lines = [",".join(table.header)]
    lines.extend(",".join(_format_cell(cell) for cell in row) for row in table.rows)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("\n".join(lines) + "\n")


def _parse_cell(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path):
    """Parse a CSV written by write_csv back into a CsvTable.

    Cells are parsed as int, then float, then left as strings; the
    17-significant-digit serialization makes the real-valued round trip
    exact.
    """
    with open(path, "r", encoding="utf-8", newline="") as handle:
        lines = handle.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise PreconditionError(f"{path} is empty")
    header = tuple(lines[0].split(","))
    rows = tuple(tuple(_parse_cell(c) for c in line.split(",")) for line in lines[1:])
    return CsvTable(header=header, rows=rows)


def write_svg(path, xs, ys, title):
    """Write a minimal single-polyline SVG 1.1 chart."""
    width, height = 640.0, 480.0
    left, right, top, bottom = 64.0, 16.0, 28.0, 36.0
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0
    px = left + (xs - x_lo) / x_span * (width - left - right)
    py = height - bottom - (ys - y_lo) / y_span * (height - top - bottom)
    points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(px, py))
    label = 'font-family="monospace" font-size="12" fill="#333"'
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="0 0 {width:g} {height:g}">',
        f'<rect width="{width:g}" height="{height:g}" fill="white"/>',
        f'<text x="{left:.2f}" y="16" {label}>{title}</text>',
        f'<line x1="{left:.2f}" y1="{height - bottom:.2f}" x2="{width - right:.2f}" '
        f'y2="{height - bottom:.2f}" stroke="#333" stroke-width="1"/>',
        f'<line x1="{left:.2f}" y1="{top:.2f}" x2="{left:.2f}" '
        f'y2="{height - bottom:.2f}" stroke="#333" stroke-width="1"/>',
        f'<text x="{left:.2f}" y="{height - bottom + 16:.2f}" {label}>{x_lo:.6g}</text>',
        f'<text x="{width - right:.2f}" y="{height - bottom + 16:.2f}" {label} '
        f'text-anchor="end">{x_hi:.6g}</text>',
        f'<text x="{left - 6:.2f}" y="{height - bottom:.2f}" {label} '
        f'text-anchor="end">{y_lo:.6g}</text>',
        f'<text x="{left - 6:.2f}" y="{top + 10:.2f}" {label} '
        f'text-anchor="end">{y_hi:.6g}</text>',
        f'<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{points}"/>',
        "</svg>",
    ]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("\n".join(parts) + "\n")


_TOY_KEYS = (
    "input_dim",
    "embed_dim",
    "class_count",
    "samples_per_class",
    "type1_fraction",
    "type2_pair_count",
    "dispersion",
    "learning_rate",
    "epochs",
    "batch_size",
    "seed",
)

_INT_KEYS = {"class_count", "grid_size"} | {
    f"toy_{k}" for k in _TOY_KEYS if k not in ("type1_fraction", "dispersion", "learning_rate")
}
_REAL_KEYS = {"b", "toy_type1_fraction", "toy_dispersion", "toy_learning_rate"}
_STR_KEYS = {"output_dir"}
_BOOL_KEYS = {"emit_svg"}
_LIST_KEYS = {"families", "margins", "scales"}
_SINGULAR_KEYS = {"family", "margin", "scale"}
_FILE_KEYS = _INT_KEYS | _REAL_KEYS | _STR_KEYS | _BOOL_KEYS | _LIST_KEYS | _SINGULAR_KEYS


def _require(condition, key, value, expected):
    if not condition:
        raise ConfigError(f"config key {key!r} must be {expected}, got {value!r}")


def _validate_file_value(key, value):
    if key in _INT_KEYS:
        _require(isinstance(value, int) and not isinstance(value, bool), key, value, "an integer")
    elif key in _REAL_KEYS or key in ("margin", "scale"):
        _require(isinstance(value, (int, float)) and not isinstance(value, bool), key, value, "a real")
    elif key in _STR_KEYS or key == "family":
        _require(isinstance(value, str), key, value, "a string")
    elif key in _BOOL_KEYS:
        _require(isinstance(value, bool), key, value, "a boolean")
    elif key == "families":
        _require(
            isinstance(value, list) and all(isinstance(v, str) for v in value),
            key, value, "an array of strings",
        )
    elif key in ("margins", "scales"):
        _require(
            isinstance(value, list)
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value),
            key, value, "an array of reals",
        )


def _load_config_file(path):
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    for key, value in data.items():
        if key not in _FILE_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        _validate_file_value(key, value)
    return data


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises ConfigError instead of exiting."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    parser = _Parser(prog="expface", description="Margin-loss curve and simulation artifacts.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", metavar="FILE", help="flat TOML config file")
    parser.add_argument("--family", action="append", metavar="NAME",
                        help="loss family (repeatable; overrides the file's families)")
    parser.add_argument("--margin", action="append", type=float, metavar="M",
                        help="margin, one per --family")
    parser.add_argument("--scale", action="append", type=float, metavar="S",
                        help="scale s, one per --family")
    parser.add_argument("--b", type=float, metavar="ANGLE",
                        help="negative-center angle b of the scalar loss")
    parser.add_argument("--class-count", type=int, metavar="C",
                        help="class count of the scalar loss")
    parser.add_argument("--grid-size", type=int, metavar="N", help="sweep grid size")
    parser.add_argument("--output-dir", metavar="DIR", help="artifact directory")
    parser.add_argument("--emit-svg", action="store_const", const=True,
                        help="also write an SVG chart per CSV")
    for name in _TOY_KEYS:
        kind = float if name in ("type1_fraction", "dispersion", "learning_rate") else int
        parser.add_argument(f"--toy-{name.replace('_', '-')}", type=kind,
                            help=f"toy simulation {name}")
    return parser


def _pick(flag_value, file_values, key, default):
    if flag_value is not None:
        return flag_value
    return file_values.get(key, default)


def _resolve_list(flag_value, file_values, plural, singular):
    if flag_value is not None:
        return list(flag_value)
    if plural in file_values and singular in file_values:
        raise ConfigError(f"give either {singular!r} or {plural!r}, not both")
    if plural in file_values:
        return list(file_values[plural])
    if singular in file_values:
        return [file_values[singular]]
    return None


def _resolve_losses(args, file_values, command):
    families = _resolve_list(args.family, file_values, "families", "family")
    margins = _resolve_list(args.margin, file_values, "margins", "margin")
    scales = _resolve_list(args.scale, file_values, "scales", "scale")
    if families is None:
        if margins is not None:
            raise ConfigError("'margins' given without 'families'")
        if scales is not None:
            raise ConfigError("'scales' given without 'families'")
        if command == "simulate":
            return [LossSpec.default(Family.EXPFACE)]
        return [LossSpec.default(f) for f in DEFAULT_FAMILIES]
    parsed = [Family.parse(name) for name in families]
    if margins is None:
        margins = [DEFAULT_MARGINS[f] for f in parsed]
    if scales is None:
        scales = [DEFAULT_SCALES[f] for f in parsed]
    if len(margins) != len(parsed):
        raise ConfigError(
            f"'margins' length {len(margins)} does not match 'families' length {len(parsed)}"
        )
    if len(scales) != len(parsed):
        raise ConfigError(
            f"'scales' length {len(scales)} does not match 'families' length {len(parsed)}"
        )
    return [LossSpec(f, float(m), float(s)) for f, m, s in zip(parsed, margins, scales)]


def parse_config(argv=None):
    """Parse flags (and an optional TOML file) into a validated RunConfig.

    Raises:
        ConfigError: unknown key/flag, type mismatch, or out-of-range value.
        OSError: unreadable config file.
    """
    args = _build_parser().parse_args(argv)
    file_values = _load_config_file(args.config) if args.config else {}

    losses = _resolve_losses(args, file_values, args.command)
    if args.command == "simulate" and len(losses) != 1:
        raise ConfigError(f"simulate takes exactly one loss spec, got {len(losses)}")

    context = TransitionContext(
        b=float(_pick(args.b, file_values, "b", np.pi / 2)),
        class_count=int(_pick(args.class_count, file_values, "class_count", 10573)),
        scale=64.0,
    )
    grid_size = int(_pick(args.grid_size, file_values, "grid_size", 1001))

    output_dir = _pick(
        args.output_dir,
        file_values,
        "output_dir",
        os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR,
    )
    emit_svg = bool(_pick(args.emit_svg, file_values, "emit_svg", False))

    toy = None
    if args.command == "simulate":
        fields = {}
        for name in _TOY_KEYS:
            value = _pick(getattr(args, f"toy_{name}"), file_values, f"toy_{name}", None)
            if value is not None:
                fields[name] = value
        toy = ToySpec(loss=losses[0], **fields)

    return RunConfig(
        command=args.command,
        losses=tuple(losses),
        context=context,
        grid_size=grid_size,
        toy=toy,
        output_dir=str(output_dir),
        emit_svg=emit_svg,
    )


def _curves_table(spec, ctx, grid_size):
    samples = sweep_similarity(spec, grid_size)
    rows = tuple((float(s.theta), s.value) for s in samples)
    xs = [r[0] for r in rows]
    ys = [r[1] for r in rows]
    return CsvTable(("theta", "value"), rows), xs, ys


def _gradients_table(spec, ctx, grid_size):
    samples = sweep_gradient(spec, ctx, grid_size)
    rows = tuple((float(s.theta), s.value, int(s.flagged)) for s in samples)
    xs = [r[0] for r in rows]
    ys = [r[1] for r in rows]
    return CsvTable(("theta", "value", "substituted"), rows), xs, ys


def _transition_table(spec, ctx, grid_size):
    closed = transition_angle(spec, ctx)
    bisect = transition_angle_bisect(spec, ctx)
    if (closed is None) != (bisect is None):
        raise PreconditionError(
            f"closed form and bisection disagree about the transition angle of "
            f"{spec.family.value}"
        )
    if closed is None:
        tail = ("none", "none", "none")
    else:
        tail = (float(closed), float(bisect), abs(float(closed) - float(bisect)))
    row = (spec.family.value, spec.margin, spec.scale, ctx.b, ctx.class_count) + tail
    header = ("family", "margin", "s", "b", "C",
              "theta_trans_closed", "theta_trans_bisect", "abs_diff")
    return CsvTable(header, (row,)), None, None


def _margin_field_table(spec, ctx, grid_size):
    points = margin_field(spec, grid_size)
    rows = tuple(
        (float(p.theta_neg), float(p.theta_pos_boundary), p.angular_margin) for p in points
    )
    xs = [r[0] for r in rows]
    ys = [r[2] for r in rows]
    return CsvTable(("theta_neg", "theta_pos_boundary", "angular_margin"), rows), xs, ys


def _gradcheck_table(spec, ctx, grid_size):
    report = finite_diff_check(spec, ctx, grid_size)
    analytic = np.asarray(report.analytic)
    numeric = np.asarray(report.numeric)
    abs_err = np.abs(analytic - numeric)
    denom = max(np.abs(analytic).max(), np.abs(numeric).max()) or 1.0
    rows = tuple(
        (float(t), float(a), float(n), float(e), float(e / denom))
        for t, a, n, e in zip(report.grid, analytic, numeric, abs_err)
    )
    xs = [r[0] for r in rows]
    ys = [r[1] for r in rows]
    return CsvTable(("theta", "analytic", "numeric", "abs_err", "rel_err"), rows), xs, ys


_BUILDERS = {
    "curves": _curves_table,
    "gradients": _gradients_table,
    "transition": _transition_table,
    "margin-field": _margin_field_table,
    "gradcheck": _gradcheck_table,
}


def _simulate_table(toy):
    run_record = training_run(toy)
    rows = []
    for traj in run_record.trajectories:
        for epoch, (pos, neg) in enumerate(traj.per_epoch, start=1):
            rows.append((traj.sample_id, traj.noise.value, epoch, float(pos), float(neg)))
    header = ("sample_id", "noise", "epoch", "theta_pos", "theta_neg_mean")
    per_sample = np.array(
        [[float(p) for p, _ in traj.per_epoch] for traj in run_record.trajectories]
    )
    pos_by_epoch = per_sample.mean(axis=0)
    xs = list(range(1, per_sample.shape[1] + 1))
    return CsvTable(header, tuple(rows)), xs, list(pos_by_epoch)


def _artifact_name(command, spec):
    return f"{command}_{spec.family.value}_m{spec.margin:g}"


def _emit(config, spec, table, xs, ys):
    base = os.path.join(config.output_dir, _artifact_name(config.command, spec))
    write_csv(base + ".csv", table)
    print(f"wrote {base}.csv ({len(table.rows)} rows)")
    if config.emit_svg and xs is not None:
        write_svg(base + ".svg", xs, ys, _artifact_name(config.command, spec))
        print(f"wrote {base}.svg")


def run(config):
    """Execute one parsed invocation; returns the process exit code."""
    try:
        os.makedirs(config.output_dir, exist_ok=True)
        if config.command == "simulate":
            table, xs, ys = _simulate_table(config.toy)
            _emit(config, config.toy.loss, table, xs, ys)
        else:
            builder = _BUILDERS[config.command]
            for spec in config.losses:
                ctx = dataclasses.replace(config.context, scale=spec.scale)
                table, xs, ys = builder(spec, ctx, config.grid_size)
                _emit(config, spec, table, xs, ys)
    except ConfigError as exc:
        print(f"expface: {exc}", file=sys.stderr)
        return 2
    except TrainingDivergedError as exc:
        print(f"expface: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"expface: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 — anything else is an internal breach
        print(f"expface: internal error: {exc}", file=sys.stderr)
        return 5
    return 0


def main(argv=None):
    """CLI entry point: parse, run, and map errors to exit codes."""
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"expface: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"expface: {exc}", file=sys.stderr)
        return 3
    return run(config)
