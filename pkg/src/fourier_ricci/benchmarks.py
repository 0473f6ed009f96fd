"""The five benchmark objectives, their domains and known minima, and noisy sampling."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import domain as dm
from .errors import ValidationError
from .samples import SampleSet


class OutOfDomainWarning(UserWarning):
    pass


def _as_points(x, n):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != n:
        raise ValidationError(f"expected {n}-dimensional input, got shape {np.shape(x)}")
    return pts, single


# All forms take an (m, n) array and return shape (m,).

def rosenbrock(x):
    return np.sum(100.0 * (x[:, 1:] - x[:, :-1] ** 2) ** 2 + (1.0 - x[:, :-1]) ** 2, axis=1)


def himmelblau(x):
    a, b = x[:, 0], x[:, 1]
    return (a ** 2 + b - 11.0) ** 2 + (a + b ** 2 - 7.0) ** 2


def booth(x):
    a, b = x[:, 0], x[:, 1]
    return (a + 2.0 * b - 7.0) ** 2 + (2.0 * a + b - 5.0) ** 2


def ackley(x):
    n = x.shape[1]
    r = np.sqrt(np.sum(x ** 2, axis=1) / n)
    c = np.sum(np.cos(2.0 * np.pi * x), axis=1) / n
    return -20.0 * np.exp(-0.2 * r) - np.exp(c) + 20.0 + np.e


def rastrigin(x):
    n = x.shape[1]
    return 10.0 * n + np.sum(x ** 2 - 10.0 * np.cos(2.0 * np.pi * x), axis=1)


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    domain: tuple
    known_optima: tuple
    form: Callable = field(repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "domain", dm.make_domain(self.domain))
        opts = tuple((tuple(float(v) for v in p), float(val)) for p, val in self.known_optima)
        object.__setattr__(self, "known_optima", opts)

    @property
    def dim(self) -> int:
        return len(self.domain)

    def __call__(self, x):
        return eval_benchmark(self, x)

    def form_scalar(self, x) -> float:
        """Noise-free value at a single point, without the domain check."""
        return float(self.form(np.atleast_2d(np.asarray(x, dtype=float)))[0])


_HIMMELBLAU_MINIMA = (
    ((3.0, 2.0), 0.0),
    ((3.5844283403304917, -1.8481265269644036), 0.0),
    ((-2.805118086952745, 3.131312518250573), 0.0),
    ((-3.779310253377747, -3.2831859912861696), 0.0),
)

BENCHMARKS = {
    "rosenbrock": BenchmarkSpec("rosenbrock", ((-2.0, 2.0), (-2.0, 2.0)), (((1.0, 1.0), 0.0),), rosenbrock),
    "himmelblau": BenchmarkSpec("himmelblau", ((-5.0, 5.0), (-5.0, 5.0)), _HIMMELBLAU_MINIMA, himmelblau),
    "booth": BenchmarkSpec("booth", ((-10.0, 10.0), (-10.0, 10.0)), (((1.0, 3.0), 0.0),), booth),
    "ackley": BenchmarkSpec("ackley", ((-5.0, 5.0), (-5.0, 5.0)), (((0.0, 0.0), 0.0),), ackley),
    "rastrigin": BenchmarkSpec("rastrigin", ((-5.12, 5.12), (-5.12, 5.12)), (((0.0, 0.0), 0.0),), rastrigin),
}


def get_benchmark(name: str) -> BenchmarkSpec:
    try:
        return BENCHMARKS[name.lower()]
    except KeyError:
        raise ValidationError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}") from None


def eval_benchmark(spec: BenchmarkSpec, x):
    """Exact analytic value at ``x`` (a point or an (m, n) array of points).

    Points outside the domain are evaluated but trigger ``OutOfDomainWarning``.
    """
    pts, single = _as_points(x, spec.dim)
    if not np.all(dm.contains(spec.domain, pts)):
        warnings.warn(f"{spec.name}: evaluation outside the declared domain", OutOfDomainWarning,
                      stacklevel=2)
    out = spec.form(pts)
    return float(out[0]) if single else out


def true_optimum(spec: BenchmarkSpec, sense: str = "min"):
    if sense != "min":
        raise ValidationError("only minimization optima are tabulated")
    return list(spec.known_optima)


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "none"
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "additive-gaussian"):
            raise ValidationError(f"noise kind must be 'none' or 'additive-gaussian', got {self.kind!r}")
        if not self.sigma >= 0:
            raise ValidationError("noise sigma must be >= 0")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


class NoisyOracle:
    """Black-box access to a benchmark: analytic value plus optional Gaussian noise.

    One oracle owns one noise stream; calls consume it in order.
    """

    def __init__(self, spec: BenchmarkSpec, noise: NoiseModel | None = None):
        self.spec = spec
        self.noise = noise or NoiseModel()
        self._rng = np.random.default_rng(np.random.SeedSequence(int(self.noise.seed), spawn_key=(1,)))
        self.calls = 0

    def __call__(self, x):
        pts, single = _as_points(x, self.spec.dim)
        vals = self.spec.form(pts)
        if self.noise.kind == "additive-gaussian" and self.noise.sigma > 0:
            vals = vals + self._rng.normal(0.0, self.noise.sigma, size=vals.shape)
        self.calls += len(vals)
        return float(vals[0]) if single else vals


def sample_stochastic(spec: BenchmarkSpec, count: int, noise: NoiseModel | None = None) -> SampleSet:
    """``count`` uniform-random locations over the domain with (noisy) values."""
    if int(count) < 1:
        raise ValidationError("count must be >= 1")
    noise = noise or NoiseModel()
    lower, upper = dm.bounds(spec.domain)
    loc_rng = np.random.default_rng(np.random.SeedSequence(int(noise.seed), spawn_key=(0,)))
    pts = lower + (upper - lower) * loc_rng.random((int(count), spec.dim))
    vals = NoisyOracle(spec, noise)(pts)
    return SampleSet.from_points(pts, vals, "stochastic")
