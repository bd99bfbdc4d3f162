"""
Command-line front end.

    python main.py exact   [--config FILE] [--a 0.4 --Z0 10 ...]
    python main.py solve   --method vpaw --eta 0.1 --M 200
    python main.py sweep   --method paw_trunc --M 512 --output trunc.csv --plot
    python main.py compare --compare-etas 0.1,0.2 --M-grid 50,100,200 --output compare.csv

Settings come from a key=value config file (see .env.example) overridden by
flags. Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""
import argparse
import csv
import logging
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values, load_dotenv
from tabulate import tabulate

from paw1d.assemble import Method, assemble
from paw1d.eig import smallest_generalized
from paw1d.exceptions import ConfigError, DegenerateFit, PawError
from paw1d.model import (ModelParams, eigenfunction_evaluator, jump_residuals, negative_spectrum,
                         positive_spectrum)
from paw1d.pawgen import DEFAULT_COND_LIMIT, PawSetup
from paw1d.quad import DEFAULT_NODES
from paw1d.study import (CSV_COLUMNS, DEFAULT_ETA_GRID, DEFAULT_M_GRID, MODERATE_ETA_WINDOW, SweepRecord,
                         eta_sweep, exact_ground_energy, fit_slope, format_records, m_sweep, method_comparison)


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> Tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _strings(text: str) -> Tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _flag(text: str) -> bool:
    if text.strip().lower() in ("1", "true", "yes", "on"):
        return True
    if text.strip().lower() in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none") else float(text)


CONVERTERS = {
    "a": float, "Z0": float, "Za": float, "method": str, "eta": float, "N": int, "d": int,
    "epsilon": _optional_float, "M": int, "eta_grid": _floats, "M_grid": _ints, "N_grid": _ints,
    "compare_methods": _strings, "compare_etas": _floats, "count": int, "output": str, "dump": str,
    "nodes": int, "rho_profile": str, "cond_limit": float, "plot": _flag,
}


@dataclass
class RunConfig:
    a: float = 0.4
    Z0: float = 10.0
    Za: float = 10.0
    method: str = Method.PAW_PSEUDO.value
    eta: float = 0.1
    N: int = 2
    d: int = 6
    epsilon: Optional[float] = None
    M: int = 512
    eta_grid: Tuple[float, ...] = DEFAULT_ETA_GRID
    M_grid: Tuple[int, ...] = DEFAULT_M_GRID
    N_grid: Tuple[int, ...] = (2,)
    compare_methods: Tuple[str, ...] = (Method.DIRECT.value, Method.PAW_PSEUDO.value, Method.VPAW.value)
    compare_etas: Tuple[float, ...] = (0.1, 0.2)
    count: int = 5
    output: Optional[str] = None
    dump: Optional[str] = None
    nodes: int = DEFAULT_NODES
    rho_profile: str = "bump"
    cond_limit: float = DEFAULT_COND_LIMIT
    plot: bool = False

    @classmethod
    def from_values(cls, values: Dict[str, Optional[str]], base: Optional["RunConfig"] = None) -> "RunConfig":
        """Apply textual key=value settings on top of `base` (defaults when omitted)."""
        updates = {}
        for key, text in values.items():
            if text is None:
                continue
            if key not in CONVERTERS:
                raise ConfigError(f"Unknown configuration key {key!r}")
            try:
                updates[key] = CONVERTERS[key](text)
            except ValueError as e:
                raise ConfigError(f"Invalid value for {key}: {text!r} ({e})")
        return replace(base or cls(), **updates)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        if not os.path.exists(path):
            raise ConfigError(f"Config file does not exist: {path}")
        return cls.from_values(dotenv_values(path))

    @property
    def method_tag(self) -> Method:
        try:
            return Method(self.method)
        except ValueError:
            raise ConfigError(f"method must be one of {', '.join(m.value for m in Method)}, got {self.method!r}")

    def params(self) -> ModelParams:
        return ModelParams(a=self.a, Z0=self.Z0, Za=self.Za)

    def setup(self, eta: Optional[float] = None, N: Optional[int] = None) -> PawSetup:
        eta = self.eta if eta is None else eta
        epsilon = self.epsilon if eta == self.eta else None
        return PawSetup(eta=eta, N=self.N if N is None else N, d=self.d, epsilon=epsilon, nodes=self.nodes,
                        rho_profile=self.rho_profile, cond_limit=self.cond_limit)

    def validate(self, command: str) -> "RunConfig":
        """Check every constraint the command relies on; raises ConfigError naming the first violation."""
        params = self.params()
        if command == "exact":
            if self.count < 1:
                raise ConfigError(f"count must be at least 1, got {self.count}")
            return self
        if command in ("solve", "sweep") and self.M < 1:
            raise ConfigError(f"M must be at least 1, got {self.M}")
        if command == "solve":
            if self.method_tag.needs_setup:
                self.setup().check_against(params)
        elif command == "sweep":
            if self.method_tag is Method.DIRECT:
                self._check_grid("M_grid", self.M_grid)
            else:
                self._check_grid("eta_grid", self.eta_grid)
                self._check_grid("N_grid", self.N_grid)
                for N in self.N_grid:
                    for eta in self.eta_grid:
                        self.setup(eta, N).check_against(params)
        elif command == "compare":
            self._check_grid("M_grid", self.M_grid)
            self._check_grid("compare_etas", self.compare_etas)
            for name in self.compare_methods:
                replace(self, method=name).method_tag
            for eta in self.compare_etas:
                self.setup(eta).check_against(params)
        if command in ("sweep", "compare") and any(M < 1 for M in self.M_grid):
            raise ConfigError(f"M_grid entries must be at least 1, got {self.M_grid}")
        return self

    @staticmethod
    def _check_grid(name: str, grid: Sequence):
        if not grid:
            raise ConfigError(f"{name} must not be empty")


def _fmt(value) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def write_records_csv(records: Sequence[SweepRecord], path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow([_fmt(v) for v in record.as_row()])
    logging.info(f"Wrote {len(records)} records to {path}")
    return path


def read_records_csv(path) -> List[SweepRecord]:
    types = {f.name: f.type for f in fields(SweepRecord)}
    records = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            values = {("eigenvalue" if k == "lambda" else k): v for k, v in row.items()}
            for name, kind in types.items():
                if kind in (float, "float"):
                    values[name] = float(values[name])
                elif kind in (int, "int"):
                    values[name] = int(values[name])
            records.append(SweepRecord(**values))
    return records


def write_gnuplot_script(csv_path, series: Sequence[Tuple[str, str]], x_column: str, title: str) -> Path:
    """
    A gnuplot script drawing |error| against `x_column` on log-log axes.

    `series` holds (gnuplot filter expression, legend) pairs.
    """
    csv_path = Path(csv_path)
    script = csv_path.with_suffix(".gp")
    x = CSV_COLUMNS.index(x_column) + 1
    y = CSV_COLUMNS.index("abs_error") + 1
    plots = [f"'{csv_path.name}' using {x}:(({condition}) ? ${y} : NaN) with linespoints title '{legend}'"
             for condition, legend in series]
    lines = [
        f"# {title}",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set logscale xy",
        f"set xlabel '{'eta' if x_column == 'eta' else 'M'}'",
        "set ylabel '|lambda - E0|'",
        f"set title '{title}'",
        "plot " + ", \\\n     ".join(plots),
    ]
    script.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logging.info(f"Wrote gnuplot script {script}")
    return script


def _column(name: str) -> int:
    return CSV_COLUMNS.index(name) + 1


def cmd_exact(config: RunConfig) -> str:
    params = config.params()
    pairs = negative_spectrum(params) + positive_spectrum(params, config.count)
    rows = []
    for k, pair in enumerate(pairs):
        jumps = jump_residuals(pair)
        rows.append([pair.branch.value, k, pair.omega, pair.energy, pair.residual, jumps.continuity_a,
                     jumps.periodicity, jumps.jump_0, jumps.jump_a])
    headers = ["branch", "k", "omega", "energy", "residual", "continuity_a", "periodicity", "jump_0", "jump_a"]
    report = [f"E0 = {pairs[0].energy:.15g}", f"E1 = {pairs[1].energy:.15g}",
              tabulate(rows, headers=headers, tablefmt="grid", floatfmt=".12g")]

    if params.Z0 == params.Za:
        psi = eigenfunction_evaluator(pairs[0])
        x = np.linspace(0.0, 1.0, 401)
        symmetric = bool(np.allclose(np.abs(psi(x)), np.abs(psi(params.a - x)), atol=1e-8))
        report.append(f"symmetric: |psi0(x)| = |psi0(a-x)|: {symmetric}")

    if config.output:
        with open(config.output, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(headers)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        logging.info(f"Wrote exact spectrum to {config.output}")
    return "\n".join(report)


def cmd_solve(config: RunConfig) -> str:
    params = config.params()
    method = config.method_tag
    setup = config.setup() if method.needs_setup else None
    E0 = exact_ground_energy(params)
    system = assemble(method, params, setup, config.M)
    result = smallest_generalized(system.A, system.B)
    if config.dump:
        system.dump(config.dump)
    if config.output:
        rows = np.column_stack([np.arange(-config.M, config.M + 1), result.vector.real, result.vector.imag])
        np.savetxt(config.output, rows, fmt=["%d", "%.17g", "%.17g"], delimiter=",", header="n,re,im",
                   comments="")
        logging.info(f"Wrote eigenvector coefficients to {config.output}")
    rows = [[method.value, setup.eta if setup else "", config.M, result.eigenvalue, E0,
             result.eigenvalue - E0, result.residual]]
    return tabulate(rows, headers=["Method", "eta", "M", "lambda", "E0", "lambda - E0", "Residual"],
                    tablefmt="grid", floatfmt=".15g")


def _fit_report(records: Sequence[SweepRecord], variable: str, window=None) -> str:
    try:
        fit = fit_slope(records, window=window, variable=variable)
    except DegenerateFit as e:
        return f"slope n/a ({e.message})"
    return f"slope {fit.slope:.4f} (R^2 {fit.r_squared:.4f}) over {variable} in {list(fit.window)}"


def cmd_sweep(config: RunConfig) -> str:
    params = config.params()
    method = config.method_tag
    report = []
    if method is Method.DIRECT:
        records = m_sweep(method, params, None, config.M_grid)
        series = [(f"strcol({_column('method')}) eq '{method.value}'", method.value)]
        report.append(f"{method.value}: {_fit_report(records, 'M')}")
        x_column = "M"
    else:
        records = []
        series = []
        window = MODERATE_ETA_WINDOW if method is Method.PAW_PSEUDO_ODD else None
        for N in config.N_grid:
            template = config.setup(N=N)
            part = eta_sweep(method, params, N, config.d, config.M, config.eta_grid, template=template)
            records += part
            series.append((f"${_column('N')} == {N}", f"{method.value} N={N}"))
            report.append(f"{method.value} N={N}: {_fit_report(part, 'eta', window)}")
        x_column = "eta"
    report.insert(0, format_records(records))
    if config.output:
        write_records_csv(records, config.output)
        if config.plot:
            write_gnuplot_script(config.output, series, x_column,
                                 f"{method.value}: error on the lowest eigenvalue, M={config.M}")
    return "\n".join(report)


def cmd_compare(config: RunConfig) -> str:
    params = config.params()
    methods = [replace(config, method=name).method_tag for name in config.compare_methods]
    records = method_comparison(params, config.setup(), config.compare_etas, methods, config.M_grid)
    series = []
    for method in methods:
        same_method = f"strcol({_column('method')}) eq '{method.value}'"
        if method is Method.DIRECT:
            series.append((same_method, method.value))
            continue
        for eta in config.compare_etas:
            series.append((f"{same_method} && abs(${_column('eta')} - {eta!r}) < 1e-12",
                           f"{method.value} eta={eta:g}"))
    if config.output:
        write_records_csv(records, config.output)
        if config.plot:
            write_gnuplot_script(config.output, series, "M", f"PAW and VPAW, d={config.d}")
    return format_records(records)


COMMANDS = {"exact": cmd_exact, "solve": cmd_solve, "sweep": cmd_sweep, "compare": cmd_compare}
COMMAND_HELP = {
    "exact": "exact eigenvalues of H with root and jump residuals",
    "solve": "one generalized eigenvalue solve",
    "sweep": "error against eta (or M for the direct method)",
    "compare": "M-sweeps of several methods at several eta",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paw1d", description="PAW and VPAW for a 1-D periodic two-site Dirac model")
    parser.add_argument("--log-level", default=None, help="logging level (default: LOG_LEVEL or INFO)")
    commands = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = commands.add_parser(name, help=COMMAND_HELP[name])
        sub.add_argument("--config", default=None, help="key=value configuration file")
        for key in CONVERTERS:
            if key == "plot":
                sub.add_argument("--plot", dest="plot", action="store_const", const="true", default=None,
                                 help="also write a gnuplot script next to the CSV")
                continue
            sub.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    base = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {key: getattr(args, key) for key in CONVERTERS}
    return RunConfig.from_values(overrides, base).validate(args.command)


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    level = (args.log_level or os.getenv("LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO))

    config = None
    try:
        config = load_config(args)
        print(COMMANDS[args.command](config))
    except ConfigError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return e.exit_code
    except PawError as e:
        context = f"method={config.method}, eta={config.eta}" if config else ""
        print(f"error ({type(e).__name__}, {context}): {e.message}", file=sys.stderr)
        return e.exit_code
    return 0
