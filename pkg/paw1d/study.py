import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv
from tabulate import tabulate
from tqdm import tqdm

from paw1d.assemble import Method, assemble
from paw1d.eig import smallest_generalized
from paw1d.exceptions import ConfigError, DegenerateFit, PawError
from paw1d.model import ModelParams, negative_spectrum
from paw1d.pawgen import PawSetup

load_dotenv()
THREADS = int(os.getenv('PAW1D_THREADS', '1'))

DEFAULT_ETA_GRID = (0.2, 0.141, 0.1, 0.0707, 0.05, 0.0354, 0.025)
DEFAULT_M_GRID = (50, 100, 200, 400, 800)
MODERATE_ETA_WINDOW = (0.05, 0.141)
UNDERFLOW = 1e-13

CSV_COLUMNS = ("method", "a", "Z0", "Za", "eta", "N", "d", "M", "lambda", "E0", "error", "abs_error",
               "seconds", "error_code", "residual")


@dataclass
class SweepRecord:
    method: str
    a: float
    Z0: float
    Za: float
    eta: float
    N: int
    d: int
    M: int
    eigenvalue: float
    E0: float
    error: float
    abs_error: float
    seconds: float
    residual: float = math.nan
    error_code: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error_code)

    def sort_key(self):
        return (self.method, -1.0 if math.isnan(self.eta) else self.eta, self.N, self.d, self.M)

    def as_row(self) -> list:
        values = asdict(self)
        values["lambda"] = values.pop("eigenvalue")
        return [values[column] for column in CSV_COLUMNS]


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares line log|error| = slope·log(x) + intercept."""
    slope: float
    intercept: float
    r_squared: float
    window: Tuple[float, ...]
    variable: str = "eta"


@lru_cache(maxsize=None)
def exact_ground_energy(params: ModelParams) -> float:
    return negative_spectrum(params)[0].energy


def solve_point(method: Method, params: ModelParams, setup: Optional[PawSetup], M: int, E0: float) -> SweepRecord:
    """Assemble and solve one system; numerical failures end up in the record's error_code."""
    method = Method(method)
    eta, N, d = (setup.eta, setup.N, setup.d) if setup else (math.nan, 0, 0)
    start = time.perf_counter()
    try:
        system = assemble(method, params, setup, M)
        result = smallest_generalized(system.A, system.B)
    except PawError as e:
        logging.warning(f"{method.value} failed at eta={eta}, M={M}: {type(e).__name__}: {e.message}")
        return SweepRecord(method.value, params.a, params.Z0, params.Za, eta, N, d, M, math.nan, E0,
                           math.nan, math.nan, time.perf_counter() - start, math.nan, type(e).__name__)
    error = result.eigenvalue - E0
    return SweepRecord(method.value, params.a, params.Z0, params.Za, eta, N, d, M, result.eigenvalue, E0,
                       error, abs(error), time.perf_counter() - start, result.residual)


def _run(tasks: List[Tuple], workers: Optional[int], desc: str) -> List[SweepRecord]:
    workers = workers or THREADS
    records = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        futures = [executor.submit(solve_point, *task) for task in tasks]
        for future in tqdm(as_completed(futures), total=len(futures), desc=desc, leave=False):
            records.append(future.result())
    return sorted(records, key=SweepRecord.sort_key)


def eta_sweep(method: Method, params: ModelParams, N: int, d: int, M: int,
              eta_grid: Sequence[float] = DEFAULT_ETA_GRID, template: Optional[PawSetup] = None,
              workers: Optional[int] = None) -> List[SweepRecord]:
    """
    One record per η at fixed M. `template` carries the remaining setup fields
    (nodes, ρ profile, conditioning limit); ε follows η.
    """
    method = Method(method)
    template = template or PawSetup()
    setups = []
    for eta in eta_grid:
        setup = replace(template, eta=float(eta), N=N, d=d, epsilon=None)
        setup.check_against(params)
        setups.append(setup)
    E0 = exact_ground_energy(params)
    logging.info(f"eta sweep {method.value}: {len(setups)} points, N={N}, d={d}, M={M}, E0={E0:.15g}")
    return _run([(method, params, setup, M, E0) for setup in setups], workers, f"{method.value} eta")


def m_sweep(method: Method, params: ModelParams, setup: Optional[PawSetup], M_grid: Sequence[int],
            workers: Optional[int] = None) -> List[SweepRecord]:
    method = Method(method)
    if setup is not None:
        setup.check_against(params)
    elif method.needs_setup:
        raise ConfigError(f"Method {method.value} needs a PAW setup")
    E0 = exact_ground_energy(params)
    logging.info(f"M sweep {method.value}: M in {list(M_grid)}, E0={E0:.15g}")
    return _run([(method, params, setup, int(M), E0) for M in M_grid], workers, f"{method.value} M")


def method_comparison(params: ModelParams, template: PawSetup, etas: Sequence[float], methods: Iterable[Method],
                      M_grid: Sequence[int], workers: Optional[int] = None) -> List[SweepRecord]:
    """M-sweeps of every method at every η; the direct method does not depend on η and runs once."""
    records = []
    for method in map(Method, methods):
        if method is Method.DIRECT:
            records += m_sweep(method, params, None, M_grid, workers)
            continue
        for eta in etas:
            records += m_sweep(method, params, replace(template, eta=float(eta), epsilon=None), M_grid, workers)
    return sorted(records, key=SweepRecord.sort_key)


def default_fit_window(records: Sequence[SweepRecord], variable: str = "eta") -> Tuple[float, float]:
    """All abscissae of the successful records, minus the largest η (pre-asymptotic)."""
    xs = sorted({getattr(r, variable) for r in records if not r.failed})
    if variable == "eta" and len(xs) > 1:
        xs = xs[:-1]
    if not xs:
        raise DegenerateFit("No successful records to fit")
    return xs[0], xs[-1]


def fit_slope(records: Sequence[SweepRecord], window: Optional[Tuple[float, float]] = None,
              variable: str = "eta", noise_factor: float = 10.0) -> SlopeFit:
    """
    Fit log|error| against log η (or log M) on the records inside `window`,
    dropping failed points and points within `noise_factor` eigen-residuals of zero.
    """
    if variable not in ("eta", "M"):
        raise ConfigError(f"variable must be 'eta' or 'M', got {variable!r}")
    lo, hi = window if window is not None else default_fit_window(records, variable)
    selected = [r for r in records
                if not r.failed and lo <= getattr(r, variable) <= hi
                and not (r.abs_error <= noise_factor * r.residual)]
    if len(selected) < 3:
        raise DegenerateFit(f"Need at least 3 points in [{lo}, {hi}] to fit a slope, got {len(selected)}")
    if any(r.abs_error < UNDERFLOW for r in selected):
        raise DegenerateFit(f"Errors below {UNDERFLOW:g} on [{lo}, {hi}]: method exact to machine precision")

    x = np.log([float(getattr(r, variable)) for r in selected])
    y = np.log([r.abs_error for r in selected])
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    window_points = tuple(sorted(float(getattr(r, variable)) for r in selected))
    return SlopeFit(slope=float(slope), intercept=float(intercept), r_squared=r_squared,
                    window=window_points, variable=variable)


def format_records(records: Sequence[SweepRecord]) -> str:
    rows = [[r.method, r.eta, r.N, r.d, r.M, r.eigenvalue, r.error, r.residual, r.error_code] for r in records]
    return tabulate(rows, headers=["Method", "eta", "N", "d", "M", "lambda", "lambda - E0", "Residual", "Error"],
                    tablefmt="grid", floatfmt=".6g")
