"""Conformal Ricci flow on a 2-D grid and curvature blow-up detection.

The metric is ``g = exp(2 (u + log_scale)) * I`` with ``u = (beta/2) * f``,
where ``f`` is the surrogate oriented so that the sought extremum is its
minimum, shifted to start at 0 and divided by the largest interior
index-unit Laplacian.  ``log_scale = -log(h)`` makes one grid cell unit
length where ``u = 0``, so flow times do not depend on the domain size.

For a conformal surface metric ``Ric = K g`` with ``K = -exp(-2u) lap(u)``,
and ``dg/dt = +-2 Ric`` reduces to ``du/dt = +-K``.  Under the inverse flow
(``+K``) a pit of ``u`` deepens at a rate proportional to ``exp(-2u)``, so
the lowest pit reaches a finite-time singularity first; that pit is the
best value of the objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage, optimize as spo
from skimage.segmentation import watershed

from . import domain as dm
from .errors import UnstableStepError, ValidationError
from .surrogate import FourierSurrogate

SENSES = ("min", "max")


@dataclass(frozen=True)
class FlowConfig:
    dt: float = 1e-3
    iterations: int = 300
    resolution: int = 200
    convergence_threshold: float = 1e-5
    blowup_threshold: float = 1e3
    beta: float = 20.0
    freeze_radius: int = 5
    max_candidates: int = 10
    max_rounds: int = 30
    polish: bool = True
    snapshot_interval: int = 300
    beta_doublings: int = 6

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("dt must be > 0")
        if int(self.iterations) < 1 or int(self.max_rounds) < 1:
            raise ValidationError("iterations and max_rounds must be >= 1")
        if int(self.resolution) < 3:
            raise ValidationError("resolution must be >= 3")
        if self.beta < 0:
            raise ValidationError("beta must be >= 0")
        if not self.blowup_threshold > 0 or self.convergence_threshold < 0:
            raise ValidationError("thresholds must be positive")
        if int(self.freeze_radius) < 0 or int(self.max_candidates) < 1:
            raise ValidationError("freeze_radius must be >= 0 and max_candidates >= 1")
        if int(self.snapshot_interval) < 0 or int(self.beta_doublings) < 0:
            raise ValidationError("snapshot_interval and beta_doublings must be >= 0")


@dataclass(frozen=True, eq=False)
class MetricField:
    u: np.ndarray
    objective: np.ndarray
    domain: tuple
    beta: float
    sense: str
    t: float = 0.0
    log_scale: float = 0.0
    normalization: float = 1.0

    @property
    def shape(self):
        return self.u.shape

    @property
    def spacing(self):
        w = dm.widths(self.domain)
        return tuple(w[d] / (self.u.shape[d] - 1) for d in range(2))

    @property
    def axes(self):
        return dm.grid_axes(self.domain, list(self.u.shape))

    def location(self, index):
        lower = dm.bounds(self.domain)[0]
        h = self.spacing
        return tuple(float(lower[d] + index[d] * h[d]) for d in range(2))


@dataclass(frozen=True, eq=False)
class CurvatureField:
    values: np.ndarray


@dataclass
class Candidate:
    location: tuple
    surrogate_value: float
    true_value: float | None
    blowup_iteration: int
    peak_curvature: float
    grid_index: tuple = ()
    grid_location: tuple = ()
    round: int = 0

    def to_dict(self):
        return {
            "location": [float(v) for v in self.location],
            "surrogate_value": float(self.surrogate_value),
            "true_value": None if self.true_value is None else float(self.true_value),
            "blowup_iteration": int(self.blowup_iteration),
            "peak_curvature": float(self.peak_curvature),
            "grid_index": [int(v) for v in self.grid_index],
            "grid_location": [float(v) for v in self.grid_location],
            "round": int(self.round),
        }


def _second_difference(u, axis, h):
    n = u.shape[axis]
    u = np.moveaxis(u, axis, 0)
    d2 = np.empty_like(u)
    d2[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
    if n >= 4:
        d2[0] = 2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]
        d2[-1] = 2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]
    else:
        d2[0] = d2[1]
        d2[-1] = d2[-2]
    return np.moveaxis(d2, 0, axis) / (h * h)


def grid_laplacian(u, hx, hy):
    """5-point Laplacian; edge rows use second-order one-sided differences."""
    if u.ndim != 2 or min(u.shape) < 3:
        raise ValidationError("curvature needs a grid of at least 3 x 3")
    return _second_difference(u, 0, hx) + _second_difference(u, 1, hy)


def _oriented(values, sense):
    if sense not in SENSES:
        raise ValidationError(f"sense must be one of {SENSES}")
    return values if sense == "min" else -values


def init_metric(s: FourierSurrogate, cfg: FlowConfig, sense="min") -> MetricField:
    if s.dim != 2:
        raise ValidationError("the flow engine supports 2-D surrogates only")
    axes = dm.grid_axes(s.domain, cfg.resolution)
    objective = s.evaluate_grid(axes)
    f = _oriented(objective, sense)
    f = f - f.min()
    lap = grid_laplacian(f, 1.0, 1.0)[1:-1, 1:-1]
    norm = float(np.max(np.abs(lap))) if lap.size else 0.0
    if not norm > 0:
        norm = 1.0
    hx, hy = (axes[0][1] - axes[0][0]), (axes[1][1] - axes[1][0])
    u = 0.5 * cfg.beta * f / norm
    return MetricField(u, objective, s.domain, float(cfg.beta), sense, 0.0,
                       -0.5 * float(np.log(hx * hy)), norm)


def gaussian_curvature(m: MetricField) -> CurvatureField:
    hx, hy = m.spacing
    lap = grid_laplacian(m.u, hx, hy)
    with np.errstate(over="ignore", invalid="ignore"):
        k = -np.exp(-2.0 * (m.u + m.log_scale)) * lap
    if not np.all(np.isfinite(k)):
        raise UnstableStepError("curvature is no longer finite")
    return CurvatureField(k)


def flow_step(m: MetricField, cfg: FlowConfig, direction="inverse", frozen=None,
              frozen_direction=None, curvature: CurvatureField | None = None) -> MetricField:
    """One explicit Euler step ``u += dt * K`` (inverse) or ``u -= dt * K`` (forward).

    Cells in ``frozen`` are left untouched unless ``frozen_direction`` names a
    direction for them.
    """
    signs = {"inverse": 1.0, "forward": -1.0}
    if direction not in signs or (frozen_direction is not None and frozen_direction not in signs):
        raise ValidationError("direction must be 'inverse' or 'forward'")
    k = (curvature or gaussian_curvature(m)).values
    rate = signs[direction] * k
    if frozen is not None:
        frozen = np.asarray(frozen, dtype=bool)
        rate = np.where(frozen, 0.0 if frozen_direction is None else signs[frozen_direction] * k, rate)
    dt_k = cfg.dt * float(np.max(np.abs(rate)))
    if not dt_k < 1.0:
        raise UnstableStepError(f"dt * max|K| = {dt_k:.3g} >= 1; halve dt or stop", dt_k)
    u = m.u + cfg.dt * rate
    if not np.all(np.isfinite(u)):
        raise UnstableStepError("metric left the finite range")
    return replace(m, u=u, t=m.t + cfg.dt)


def _disk(radius):
    r = int(radius)
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    return xx * xx + yy * yy <= r * r


def _stamp(mask, index, radius):
    out = mask.copy()
    r = int(radius)
    i, j = index
    d = _disk(r)
    i0, i1 = max(0, i - r), min(mask.shape[0], i + r + 1)
    j0, j1 = max(0, j - r), min(mask.shape[1], j + r + 1)
    out[i0:i1, j0:j1] |= d[i0 - i + r:i1 - i + r, j0 - j + r:j1 - j + r]
    return out


def detect_singularities(k: CurvatureField, m: MetricField, cfg: FlowConfig, exclude=None,
                         iteration=0):
    """Local maxima of |K| at or above the blow-up threshold, one per freeze radius.

    Returned best-first by peak curvature.  ``exclude`` masks cells that may
    not host a new candidate.
    """
    vals = np.abs(k.values)
    if vals.shape != m.shape:
        raise ValidationError("curvature and metric grids differ in shape")
    if exclude is not None:
        vals = np.where(exclude, 0.0, vals)
    size = 3
    local_max = vals == ndimage.maximum_filter(vals, size=size, mode="nearest")
    not_flat = vals > ndimage.minimum_filter(vals, size=size, mode="nearest")
    peaks = np.argwhere(local_max & not_flat & (vals >= cfg.blowup_threshold))
    order = sorted(range(len(peaks)), key=lambda n: (-vals[tuple(peaks[n])], tuple(peaks[n])))
    kept = []
    r2 = float(cfg.freeze_radius) ** 2
    for n in order:
        idx = peaks[n]
        if any(np.sum((idx - q) ** 2) <= r2 for q in kept):
            continue
        kept.append(idx)
    out = []
    for idx in kept:
        index = (int(idx[0]), int(idx[1]))
        loc = m.location(index)
        out.append(Candidate(loc, float(m.objective[index]), None, int(iteration),
                             float(vals[index]), index, loc))
    return out


@dataclass
class OptimizationResult:
    candidates: list
    status: str
    rounds: int
    steps: int
    curvature_history: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    beta: float = 0.0

    @property
    def best(self):
        return self.candidates[0] if self.candidates else None


def _on_boundary(domain, loc, rel=1e-9):
    lower, upper = dm.bounds(domain)
    x = np.asarray(loc)
    tol = rel * (upper - lower)
    return bool(np.any(x <= lower + tol) or np.any(x >= upper - tol))


def _polish(s: FourierSurrogate, cand: Candidate, m: MetricField, cfg: FlowConfig, sense):
    sign = 1.0 if sense == "min" else -1.0
    h = m.spacing
    lower, upper = dm.bounds(s.domain)
    x0 = np.array(cand.grid_location)
    box = [(max(lower[d], x0[d] - cfg.freeze_radius * h[d]), min(upper[d], x0[d] + cfg.freeze_radius * h[d]))
           for d in range(2)]

    def fun(x):
        return sign * s(x), sign * s.gradient(x)

    res = spo.minimize(fun, x0, jac=True, method="L-BFGS-B", bounds=box)
    x = res.x if np.isfinite(res.fun) and res.fun <= sign * s(x0) else x0
    return tuple(float(v) for v in x)


def optimize(s: FourierSurrogate, cfg: FlowConfig | None = None, sense="min", oracle=None,
             keep_snapshots=False) -> OptimizationResult:
    """Collect blow-up points under the inverse flow and rank them.

    Each round restarts from the initial metric.  Cells within the freeze
    radius of earlier candidates flow forward (regularizing), the rest flow
    inverse, until a new blow-up appears or the round's iterations run out.
    Blow-ups inside the catchment basin of an earlier candidate freeze that
    basin instead of producing duplicates.  Candidates are filtered by the
    sign of the surrogate Laplacian, optionally polished on the surrogate
    within the freeze radius, and ranked by oracle value when an oracle is
    given, else by surrogate value.

    If the first round ends without any blow-up, ``beta`` is doubled (up to
    ``beta_doublings`` times): a larger ``beta`` shortens the blow-up time of
    the lowest pit, so the fixed flow horizon is reached sooner.
    """
    cfg = cfg or FlowConfig()
    for _ in range(int(cfg.beta_doublings)):
        result = _optimize_once(s, cfg, sense, oracle, keep_snapshots)
        if result.candidates or cfg.beta == 0:
            return result
        cfg = replace(cfg, beta=2.0 * cfg.beta)
    return _optimize_once(s, cfg, sense, oracle, keep_snapshots)


def _optimize_once(s, cfg, sense, oracle, keep_snapshots):
    m0 = init_metric(s, cfg, sense)
    basins = watershed(m0.u)
    frozen = np.zeros(m0.shape, dtype=bool)
    claimed = np.zeros(m0.shape, dtype=bool)
    raw = []
    history, snapshots = [], []
    steps = 0
    rounds = 0
    for rnd in range(cfg.max_rounds):
        rounds = rnd + 1
        m = m0
        prev = None
        blew = False
        for it in range(cfg.iterations + 1):
            k = gaussian_curvature(m)
            inten = np.where(frozen, 0.0, np.abs(k.values))
            peak = float(inten.max())
            if rnd == 0:
                history.append(peak)
            if keep_snapshots and cfg.snapshot_interval and it % cfg.snapshot_interval == 0:
                snapshots.append({"round": rnd, "iteration": it, "t": m.t,
                                  "u": m.u.copy(), "curvature": k.values.copy()})
            if peak >= cfg.blowup_threshold:
                blown = inten >= cfg.blowup_threshold
                found = detect_singularities(CurvatureField(np.where(frozen, 0.0, k.values)), m, cfg,
                                             exclude=claimed, iteration=steps + it)
                for c in found:
                    c.round = rnd
                    raw.append(c)
                    frozen = _stamp(frozen, c.grid_index, cfg.freeze_radius)
                    claimed = _stamp(claimed, c.grid_index, 2 * cfg.freeze_radius)
                    claimed |= basins == basins[c.grid_index]
                stray = blown & claimed
                if stray.any():
                    for label in np.unique(basins[stray]):
                        frozen |= basins == label
                frozen |= ndimage.binary_dilation(blown)
                blew = True
                steps += it
                break
            if it == cfg.iterations:
                steps += it
                break
            if prev is not None and float(np.max(np.abs(k.values - prev))) < cfg.convergence_threshold:
                steps += it
                break
            prev = k.values
            m = flow_step(m, cfg, "inverse", frozen, "forward", curvature=k)
        if not blew or len(raw) >= cfg.max_candidates or frozen.all():
            break
    raw = raw[:cfg.max_candidates]

    ranked = []
    for c in raw:
        loc = _polish(s, c, m0, cfg, sense) if cfg.polish else c.grid_location
        lap = s.laplacian(np.array(loc))
        # a constrained optimum on the boundary can have either sign
        interior = bool(dm.contains(s.domain, np.array(loc))[0]) and not _on_boundary(s.domain, loc)
        if interior and ((lap < 0 and sense == "min") or (lap > 0 and sense == "max")):
            continue
        c.location = loc
        c.surrogate_value = s(np.array(loc))
        if oracle is not None:
            c.true_value = float(oracle(np.array(loc)))
        ranked.append(c)
    sign = 1.0 if sense == "min" else -1.0

    def key(c):
        v = c.true_value if c.true_value is not None else c.surrogate_value
        return (sign * v, -c.peak_curvature, c.blowup_iteration, c.grid_index)

    ranked.sort(key=key)
    status = "ok" if ranked else "empty"
    return OptimizationResult(ranked, status, rounds, steps, history, snapshots, float(cfg.beta))
