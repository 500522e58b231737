"""Command-line front end.

Subcommands write CSV (header row first, LF line ends, 17 significant
digits).  Configuration comes from a flat ``key=value`` file given with
``--config``; command-line flags override it.

Exit codes: 0 success, 1 verification failure, 2 invalid input or domain
error, 3 quadrature non-convergence.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import math
import operator
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import checks
from .core import Barrier, DomainError, EnergyWindow, PhysicalParams, QuadratureError, tau0
from .quadrature import QuadratureSettings
from .reference import classical_crossing_time, opaque_limits, table1_times
from .solver import (
    BRANCH_GUARD,
    Distribution,
    EmptyPacket,
    WavePacketSpec,
    classical_energy_avg_time,
    density_grid_detail,
    grid_axes,
    tunneling_time,
    tunneling_time_closed,
    tunneling_time_quadrature,
    tunneling_time_series,
)

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NOCONV = 0, 1, 2, 3


class ConfigError(DomainError):
    pass


# --------------------------------------------------------------------------
# number parsing: plain floats plus small expressions such as "3*pi" or "pi/10"

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "e": math.e}


def parse_number(text: str) -> float:
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ConfigError(f"cannot parse number {text!r}")

    try:
        return float(ev(ast.parse(text.strip(), mode="eval")))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse number {text!r}") from exc


def parse_list(text: str) -> list[float]:
    """Comma list, or ``start:stop:count`` for an inclusive linspace."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range must be start:stop:count, got {text!r}")
        start, stop = parse_number(parts[0]), parse_number(parts[1])
        count = int(parse_number(parts[2]))
        if count < 1:
            raise ConfigError("range count must be >= 1")
        return [float(v) for v in np.linspace(start, stop, count)]
    return [parse_number(p) for p in text.split(",") if p.strip()]


def parse_pair(text: str) -> tuple[float, float]:
    sep = ":" if ":" in text else ","
    parts = text.split(sep)
    if len(parts) != 2:
        raise ConfigError(f"expected lo:hi, got {text!r}")
    lo, hi = parse_number(parts[0]), parse_number(parts[1])
    if not lo < hi:
        raise ConfigError(f"range {text!r} must have lo < hi")
    return lo, hi


# --------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class RunConfig:
    mass: float = 1.0
    hbar: float = 1.0
    v0: float = 100.0
    length: float = 1.0
    emax: float = 10.0
    k0l: tuple[float, ...] = (math.pi / 10, 3 * math.pi, 30 * math.pi)
    kgrid: tuple[float, ...] = tuple(float(v) for v in np.linspace(0.05, 2.5, 50))
    xrange: tuple[float, float] = (-1.0, 2.0)
    trange: tuple[float, float] = (0.0, 15.0)
    nx: int = 30
    nt: int = 30
    cplus: float = 1.0
    cminus: float = 0.0
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000
    grid_n: int = 201
    out: str = "-"

    @property
    def params(self) -> PhysicalParams:
        return PhysicalParams(self.mass, self.hbar)

    @property
    def barrier(self) -> Barrier:
        return Barrier(self.v0, self.length)

    @property
    def quadrature(self) -> QuadratureSettings:
        return QuadratureSettings(self.rel_tol, self.abs_tol, self.max_subdivisions)

    def validate(self) -> "RunConfig":
        self.params
        self.barrier
        self.quadrature
        if self.nx < 2 or self.nt < 2:
            raise ConfigError("nx and nt must be >= 2")
        if self.grid_n < 3:
            raise ConfigError("grid_n must be >= 3")
        if any(not v > 0 for v in self.k0l):
            raise ConfigError("k0l values must be positive")
        if any(not v > 0 for v in self.kgrid):
            raise ConfigError("kgrid values must be positive")
        return self

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                sep = ":" if f.name in ("xrange", "trange") else ","
                text = sep.join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                text = repr(v)
            else:
                text = str(v)
            lines.append(f"{f.name}={text}")
        return "\n".join(lines) + "\n"


_CONVERTERS = {
    "mass": parse_number,
    "hbar": parse_number,
    "v0": parse_number,
    "length": parse_number,
    "emax": parse_number,
    "k0l": lambda s: tuple(parse_list(s)),
    "kgrid": lambda s: tuple(parse_list(s)),
    "xrange": parse_pair,
    "trange": parse_pair,
    "nx": lambda s: int(parse_number(s)),
    "nt": lambda s: int(parse_number(s)),
    "cplus": parse_number,
    "cminus": parse_number,
    "rel_tol": parse_number,
    "abs_tol": parse_number,
    "max_subdivisions": lambda s: int(parse_number(s)),
    "grid_n": lambda s: int(parse_number(s)),
    "out": str,
}


def parse_config_text(text: str) -> dict:
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_").lower()
        if key not in _CONVERTERS:
            raise ConfigError(f"config line {n}: unknown key {key!r}")
        values[key] = _CONVERTERS[key](val)
    return values


def load_config(text: str = "", overrides: dict | None = None) -> RunConfig:
    values = parse_config_text(text)
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = _CONVERTERS[key](val) if isinstance(val, str) else val
    return replace(RunConfig(), **values).validate()


# --------------------------------------------------------------------------
# CSV helpers


def fmt(v: float) -> str:
    return f"{v:.16e}"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    v = float(v)
    if not math.isfinite(v):
        raise ValueError("non-finite value reached a CSV data column")
    return fmt(v)


def write_csv(stream, header: list[str], rows: list[list]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])


class _Output:
    """Context manager yielding stdout for ``-`` or a file opened with LF endings."""

    def __init__(self, path: str):
        self.path = path
        self.handle = None

    def __enter__(self):
        if self.path == "-":
            return sys.stdout
        parent = os.path.dirname(self.path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        self.handle = open(self.path, "w", newline="", encoding="utf-8")
        return self.handle

    def __exit__(self, *exc):
        if self.handle is not None:
            self.handle.close()


# --------------------------------------------------------------------------
# subcommands


def cmd_tunnel(cfg: RunConfig) -> int:
    params, barrier, settings = cfg.params, cfg.barrier, cfg.quadrature
    E = cfg.emax
    closed = tunneling_time_closed(params, barrier, E)
    series = tunneling_time_series(params, barrier, E)
    oracle = tunneling_time_quadrature(params, barrier, E, settings, oracle=True)
    avg = classical_energy_avg_time(params, barrier, E)
    t0 = tau0(params, barrier)
    header = [
        "mass", "hbar", "v0", "length", "emax", "tau0",
        "closed_re", "closed_im", "series_re", "series_im", "oracle_re", "oracle_im",
        "classical_avg", "im_closed_over_tau0", "flag",
    ]
    row = [
        params.m, params.hbar, barrier.V0, barrier.L, E, t0,
        closed.real, closed.imag, series.real, series.imag, oracle.real, oracle.imag,
        avg, closed.imag / t0, "ok",
    ]
    with _Output(cfg.out) as fh:
        write_csv(fh, header, [row])
    return EXIT_OK


SWEEP_HEADER = [
    "k_over_k0", "re_T_sts_over_tau0", "im_T_sts_over_tau0",
    "tau_phase", "tau_dwell", "tau_larmor", "tau_bl", "flag",
]


def sweep_rows(params: PhysicalParams, k0L: float, length: float, kgrid, settings: QuadratureSettings) -> list[list]:
    """One row per ``k/k0``; comparison times are blank above the barrier top."""
    barrier = Barrier.from_strength(k0L, params, length)
    t0 = tau0(params, barrier)
    rows = []
    for r in kgrid:
        E = barrier.V0 * r * r
        row: list = [r, None, None, None, None, None, None, "ok"]
        try:
            if abs(E - barrier.V0) <= BRANCH_GUARD * barrier.V0:
                raise DomainError("branch point")
            T = tunneling_time(params, barrier, E, settings)
            if not (math.isfinite(T.real) and math.isfinite(T.imag)):
                raise QuadratureError("non-finite T")
            row[1], row[2] = T.real / t0, T.imag / t0
            if E < barrier.V0:
                fam = table1_times(params, barrier, E)
                row[3:7] = [fam.tau_phase / t0, fam.tau_dwell / t0, fam.tau_larmor / t0, fam.tau_bl / t0]
        except QuadratureError:
            row = [r, None, None, None, None, None, None, "noconv"]
        except DomainError:
            row = [r, None, None, None, None, None, None, "singular"]
        rows.append(row)
    return rows


def sweep_filename(k0L: float) -> str:
    return f"sweep_k0L_{k0L:.6g}.csv"


def cmd_sweep(cfg: RunConfig) -> int:
    params, settings = cfg.params, cfg.quadrature
    outdir = "." if cfg.out == "-" else cfg.out
    for k0L in cfg.k0l:
        rows = sweep_rows(params, k0L, cfg.length, cfg.kgrid, settings)
        path = os.path.join(outdir, sweep_filename(k0L))
        with _Output(path) as fh:
            write_csv(fh, SWEEP_HEADER, rows)
        print(path, file=sys.stderr)
    return EXIT_OK


def _packet(cfg: RunConfig):
    window = EnergyWindow(0.0, cfg.emax)
    if cfg.cplus == 0 and cfg.cminus == 0:
        return EmptyPacket(window)
    return WavePacketSpec(window, Distribution.constant(cfg.cplus), Distribution.constant(cfg.cminus))


def cmd_density(cfg: RunConfig) -> int:
    geom = (cfg.params, cfg.barrier)
    packet = _packet(cfg)
    xs, ts = grid_axes(cfg.xrange, cfg.trange, cfg.nx, cfg.nt)
    rho, err, ok = density_grid_detail(packet, geom, cfg.xrange, cfg.trange, cfg.nx, cfg.nt, cfg.quadrature)
    rows = []
    for i, t in enumerate(ts):
        for j, x in enumerate(xs):
            good = ok[i, j] and math.isfinite(rho[i, j])
            rows.append([x, t, rho[i, j] if good else None, err[i, j] if good else None, "ok" if good else "noconv"])
    with _Output(cfg.out) as fh:
        write_csv(fh, ["x", "t", "rho", "tol", "flag"], rows)
    return EXIT_OK


def cmd_reference(cfg: RunConfig) -> int:
    params, barrier = cfg.params, cfg.barrier
    E = cfg.emax
    fam = table1_times(params, barrier, E)
    lim = opaque_limits(params, barrier, E)
    cross = classical_crossing_time(params, barrier, E)
    header = [
        "energy", "tau_phase", "tau_dwell", "tau_larmor", "tau_bl",
        "tau_complex_re", "tau_complex_im", "tau_stochastic_re", "tau_stochastic_im",
        "limit_tau_phase", "limit_tau_larmor", "classical_re", "classical_im", "flag",
    ]
    row = [
        E, fam.tau_phase, fam.tau_dwell, fam.tau_larmor, fam.tau_bl,
        fam.tau_complex.real, fam.tau_complex.imag, fam.tau_stochastic.real, fam.tau_stochastic.imag,
        lim.tau_phase, lim.tau_larmor, cross.real, cross.imag, "ok",
    ]
    with _Output(cfg.out) as fh:
        write_csv(fh, header, [row])
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    results = checks.run_all(cfg.params, cfg.barrier, cfg.emax, cfg.quadrature, cfg.grid_n)
    buf = io.StringIO()
    for r in results:
        buf.write(r.line() + "\n")
    passed = all(r.passed for r in results)
    buf.write(f"{sum(r.passed for r in results)}/{len(results)} checks passed\n")
    with _Output(cfg.out) as fh:
        fh.write(buf.getvalue())
    return EXIT_OK if passed else EXIT_VERIFY


COMMANDS = {
    "tunnel": cmd_tunnel,
    "sweep": cmd_sweep,
    "density": cmd_density,
    "reference": cmd_reference,
    "verify": cmd_verify,
}

_FLAGS = [
    ("--mass", "mass"), ("--hbar", "hbar"), ("--v0", "v0"), ("--length", "length"),
    ("--emax", "emax"), ("--k0l", "k0l"), ("--kgrid", "kgrid"), ("--xrange", "xrange"),
    ("--trange", "trange"), ("--nx", "nx"), ("--nt", "nt"), ("--cplus", "cplus"),
    ("--cminus", "cminus"), ("--rel-tol", "rel_tol"), ("--abs-tol", "abs_tol"),
    ("--max-subdivisions", "max_subdivisions"), ("--grid-n", "grid_n"), ("--out", "out"),
]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value configuration file")
    common.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")
    for flag, dest in _FLAGS:
        common.add_argument(flag, dest=dest, default=None)

    parser = argparse.ArgumentParser(prog="ststunnel", description="Tunnelling times from time-operator expectation values.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("tunnel", parents=[common], help="closed-form, series, oracle and classical-average times")
    sub.add_parser("sweep", parents=[common], help="T_STS/tau0 and comparison times against k/k0, one CSV per k0L")
    sub.add_parser("density", parents=[common], help="arrival density rho(t|x) on an x-t grid")
    sub.add_parser("reference", parents=[common], help="comparison-table times at energy --emax")
    sub.add_parser("verify", parents=[common], help="fractional-operator and limit-identity checks")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {dest: getattr(args, dest) for _, dest in _FLAGS}
    try:
        text = ""
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        cfg = load_config(text, overrides)
    except (DomainError, OSError, ValueError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.print_config:
        sys.stdout.write(cfg.to_text())
        return EXIT_OK
    try:
        return COMMANDS[args.command](cfg)
    except QuadratureError as exc:
        print(f"error: quadrature did not converge: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
