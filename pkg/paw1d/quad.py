"""
Deterministic quadrature over subintervals of the unit period.

Every inner product in the package goes through `integrate` (or the node/weight
pair behind it): a fixed-order composite Gauss–Legendre rule applied to each
smooth piece of a `Partition`. Pieces are split at the declared kinks of the
integrand, so piecewise-analytic integrands keep spectral accuracy.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Tuple

import numpy as np

DEFAULT_NODES = 64


@dataclass(frozen=True)
class FunctionEvaluator:
    """A real function exposing value and first derivative at any point.

    Periodic evaluators reduce their argument mod 1 before evaluation, so
    `value_fn` and `derivative_fn` only ever see points of [0, 1). `kinks`
    lists the points (in [0, 1) for periodic functions) where the function or
    its derivative is not smooth.
    """
    value_fn: Callable[[np.ndarray], np.ndarray]
    derivative_fn: Callable[[np.ndarray], np.ndarray]
    kinks: Tuple[float, ...] = ()
    periodic: bool = True
    name: str = ""

    def _reduce(self, x):
        x = np.asarray(x, dtype=float)
        return np.mod(x, 1.0) if self.periodic else x

    def value(self, x):
        return self.value_fn(self._reduce(x))

    def derivative(self, x):
        return self.derivative_fn(self._reduce(x))

    def __call__(self, x):
        return self.value(x)

    def point_value(self, x0: float) -> float:
        """Value at a single point, averaging the one-sided limits at x = 0 mod 1."""
        u = float(self._reduce(x0))
        if self.periodic and u == 0.0:
            left, right = self.value_fn(np.array([1.0, 0.0]))
            return 0.5 * (float(left) + float(right))
        return float(self.value_fn(np.array([u]))[0])


@dataclass(frozen=True)
class Partition:
    """An interval with ordered interior kink points."""
    start: float
    stop: float
    kinks: Tuple[float, ...] = ()

    def __post_init__(self):
        if not self.stop > self.start:
            raise ValueError(f"Empty interval [{self.start}, {self.stop}]")
        inside = sorted({float(k) for k in self.kinks if self.start < k < self.stop})
        object.__setattr__(self, "kinks", tuple(inside))

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([self.start, *self.kinks, self.stop])

    @property
    def pieces(self) -> List[Tuple[float, float]]:
        points = self.breakpoints
        return list(zip(points[:-1], points[1:]))

    def refined(self, max_width: float) -> "Partition":
        """Split every piece into equal panels no wider than `max_width`."""
        points = list(self.kinks)
        for lo, hi in self.pieces:
            count = max(1, math.ceil((hi - lo) / max_width - 1e-9))
            points.extend(np.linspace(lo, hi, count + 1)[1:-1].tolist())
        return Partition(self.start, self.stop, tuple(points))


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre nodes and weights on [-1, 1] (read-only arrays)."""
    if n < 2:
        raise ValueError(f"nodes_per_piece must be at least 2, got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def nodes_and_weights(partition: Partition, nodes_per_piece: int = DEFAULT_NODES) -> Tuple[np.ndarray, np.ndarray]:
    """Composite rule: all nodes and weights of `partition`, piece after piece."""
    t, w = gauss_legendre(nodes_per_piece)
    points = partition.breakpoints
    mid = 0.5 * (points[1:] + points[:-1])
    half = 0.5 * (points[1:] - points[:-1])
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return x, weights


def integrate(f: Callable[[np.ndarray], np.ndarray], partition: Partition,
              nodes_per_piece: int = DEFAULT_NODES):
    """Integrate `f` (vectorized, real or complex) over `partition`."""
    x, w = nodes_and_weights(partition, nodes_per_piece)
    return np.dot(w, f(x))


def oscillation_width(max_frequency: float, nodes_per_piece: int = DEFAULT_NODES) -> float:
    """Widest panel on which `nodes_per_piece` points still resolve exp(2πiKx).

    The phase swept over such a panel is at most `nodes_per_piece` radians.
    """
    if max_frequency <= 0:
        return math.inf
    return nodes_per_piece / (2.0 * math.pi * max_frequency)
