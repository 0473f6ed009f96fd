"""Corner/midpoint seeding and geodesic-circle sampling around the domain midpoint.

Circles are level sets of the geodesic distance from the midpoint on the
graph of the current surrogate, i.e. under the induced metric
``g = I + kappa^2 grad F grad F^T``.  ``kappa`` rescales the value axis so
that the surrogate's range matches the mean domain width; without it the
metric of a steep objective is dominated by the value axis and the circles
collapse into the flattest valley.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from math import gcd

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from skimage.measure import find_contours

from . import domain as dm
from .benchmarks import BenchmarkSpec, NoiseModel, NoisyOracle
from .errors import DegenerateMetricError, ValidationError
from .samples import SampleSet
from .surrogate import FourierSurrogate, approximation_error, fit_coefficients_ls


@dataclass(frozen=True)
class SamplingConfig:
    order: int = 3
    alpha: float = 0.1
    n_circles: int = 20
    radius_step: float | None = None
    points_per_circle: int = 8
    max_iterations: int = 100
    seed: int = 0
    ridge: float = 1e-8
    period_factor: float = 2.0
    grid_resolution: int = 200
    stencil_radius: int = 5
    value_scaling: str = "range"
    termination: str = "exit"

    def __post_init__(self):
        if int(self.order) < 0:
            raise ValidationError("order must be >= 0")
        if not self.alpha > 0:
            raise ValidationError("alpha must be > 0")
        if int(self.n_circles) < 2:
            raise ValidationError("n_circles must be >= 2")
        if self.radius_step is not None and not self.radius_step > 0:
            raise ValidationError("radius_step must be > 0")
        if int(self.points_per_circle) < 1 or int(self.max_iterations) < 1:
            raise ValidationError("points_per_circle and max_iterations must be positive")
        if self.ridge < 0 or not self.period_factor > 0:
            raise ValidationError("ridge must be >= 0 and period_factor > 0")
        if int(self.grid_resolution) < 4 or int(self.stencil_radius) < 1:
            raise ValidationError("grid_resolution must be >= 4 and stencil_radius >= 1")
        if self.value_scaling not in ("range", "none"):
            raise ValidationError("value_scaling must be 'range' or 'none'")
        if self.termination not in ("exit", "touch"):
            raise ValidationError("termination must be 'exit' or 'touch'")

    def radius_fractions(self):
        return np.arange(1, self.n_circles) / self.n_circles


def corner_samples(domain, oracle) -> SampleSet:
    pts = dm.corners(domain)
    return SampleSet.from_points(pts, oracle(pts), "boundary")


def midpoint_sample(domain, oracle) -> SampleSet:
    p = dm.midpoint(domain)[None, :]
    return SampleSet.from_points(p, oracle(p), "midpoint")


def accept_sample(true_value, surrogate_value, alpha):
    """True when the surrogate misses by more than ``alpha`` (the sample carries information)."""
    if not alpha > 0:
        raise ValidationError("alpha must be > 0")
    return np.abs(np.asarray(true_value) - np.asarray(surrogate_value)) > alpha


def value_scale(s: FourierSurrogate, values=None):
    if values is None:
        rng = np.random.default_rng(0)
        lower, upper = dm.bounds(s.domain)
        values = s(lower + (upper - lower) * rng.random((2048, s.dim)))
    spread = float(np.max(values) - np.min(values))
    if spread <= 0:
        return 1.0
    return float(np.mean(dm.widths(s.domain))) / spread


def stencil(radius):
    """Half of the coprime offsets within ``radius`` (one per +-pair)."""
    offs = []
    for a in range(0, radius + 1):
        for b in range(-radius, radius + 1):
            if (a, b) == (0, 0) or gcd(a, abs(b)) != 1:
                continue
            if a == 0 and b < 0:
                continue
            offs.append((a, b))
    return offs


@dataclass(frozen=True, eq=False)
class DistanceField:
    distances: np.ndarray
    axes: list
    kappa: float
    source: np.ndarray

    def boundary_min(self):
        d = self.distances
        return float(min(d[0].min(), d[-1].min(), d[:, 0].min(), d[:, -1].min()))

    def extent(self):
        return float(self.distances.max())

    def at(self, points):
        interp = RegularGridInterpolator(self.axes, self.distances)
        return interp(np.atleast_2d(points))


def graph_distance_field(values, axes, source, kappa=1.0, stencil_radius=5,
                         source_value=None) -> np.ndarray:
    """Shortest-path distances over a weighted grid graph of a height field.

    Edge weight is the chord length between neighbouring points of the graph
    ``(x, y, kappa * value)``.  The source point may lie between nodes; it is
    attached by chords to every node in the surrounding window of the stencil size.
    """
    hx = axes[0][1] - axes[0][0]
    hy = axes[1][1] - axes[1][0]
    nx, ny = values.shape
    z = kappa * values
    index = np.arange(nx * ny).reshape(nx, ny)
    rows, cols, weights = [], [], []
    for a, b in stencil(stencil_radius):
        i0, i1 = 0, nx - a
        j0, j1 = max(0, -b), ny - max(0, b)
        src = index[i0:i1, j0:j1]
        dst = index[i0 + a:i1 + a, j0 + b:j1 + b]
        dz = z[i0 + a:i1 + a, j0 + b:j1 + b] - z[i0:i1, j0:j1]
        rows.append(src.ravel())
        cols.append(dst.ravel())
        weights.append(np.sqrt((a * hx) ** 2 + (b * hy) ** 2 + dz ** 2).ravel())
    # virtual source node, linked by exact chords to every node within the stencil reach
    virtual = nx * ny
    if source_value is None:
        source_value = RegularGridInterpolator(axes, values)(np.asarray(source)[None, :])[0]
    reach = stencil_radius + 1
    ci = int(np.clip(np.searchsorted(axes[0], source[0]) - 1, 0, nx - 2))
    cj = int(np.clip(np.searchsorted(axes[1], source[1]) - 1, 0, ny - 2))
    ii = np.arange(max(0, ci - reach + 1), min(nx, ci + reach + 1))
    jj = np.arange(max(0, cj - reach + 1), min(ny, cj + reach + 1))
    dx = (axes[0][ii] - source[0])[:, None]
    dy = (axes[1][jj] - source[1])[None, :]
    dz = kappa * (values[np.ix_(ii, jj)] - source_value)
    rows.append(np.full(dz.size, virtual))
    cols.append(index[np.ix_(ii, jj)].ravel())
    weights.append(np.sqrt(dx * dx + dy * dy + dz * dz).ravel())
    n = nx * ny + 1
    graph = coo_matrix((np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))),
                       shape=(n, n)).tocsr()
    dist = dijkstra(graph, directed=False, indices=virtual)
    return dist[:-1].reshape(nx, ny)


def geodesic_distance_field(s: FourierSurrogate, p, resolution=200, stencil_radius=5,
                            value_scaling="range") -> DistanceField:
    if s.dim != 2:
        raise ValidationError("grid geodesic distances are implemented for n = 2")
    p = np.asarray(p, dtype=float)
    if not dm.contains(s.domain, p)[0]:
        raise ValidationError("circle centre must lie inside the domain")
    axes = dm.grid_axes(s.domain, resolution)
    values = s.evaluate_grid(axes)
    kappa = value_scale(s, values) if value_scaling == "range" else 1.0
    dist = graph_distance_field(values, axes, p, kappa, stencil_radius, source_value=s(p))
    return DistanceField(dist, axes, kappa, p)


@dataclass(frozen=True, eq=False)
class CircleResult:
    points: np.ndarray
    radius: float
    crossed: bool
    exited: bool


def _contour_points(field: DistanceField, r, count, offset):
    pieces = find_contours(field.distances, r)
    if not pieces:
        return np.empty((0, 2))
    starts, lengths = [], []
    total = 0.0
    for c in pieces:
        seg = np.sqrt(np.sum(np.diff(c, axis=0) ** 2, axis=1))
        starts.append(total)
        lengths.append(np.concatenate([[0.0], np.cumsum(seg)]))
        total += lengths[-1][-1]
    if total <= 0:
        c = pieces[0][0]
        idx = np.repeat(c[None, :], count, axis=0)
    else:
        targets = (offset + np.arange(count)) / count * total
        idx = np.empty((count, 2))
        for m, t in enumerate(targets):
            k = int(np.searchsorted(starts, t, side="right") - 1)
            local = t - starts[k]
            c, cum = pieces[k], lengths[k]
            idx[m, 0] = np.interp(local, cum, c[:, 0])
            idx[m, 1] = np.interp(local, cum, c[:, 1])
    h = np.array([ax[1] - ax[0] for ax in field.axes])
    lower = np.array([ax[0] for ax in field.axes])
    upper = np.array([ax[-1] for ax in field.axes])
    return np.clip(lower + idx * h, lower, upper)


def _sphere_points(s, p, r, count, rng, value_scaling):
    n = s.dim
    if n == 1:
        dirs = np.array([[-1.0], [1.0]])
    else:
        gen = rng or np.random.default_rng(0)
        dirs = gen.normal(size=(count, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    kappa = value_scale(s) if value_scaling == "range" else 1.0
    slope = dirs @ s.gradient(p)
    pts = p + dirs * (r / np.sqrt(1.0 + (kappa * slope) ** 2))[:, None]
    inside = dm.contains(s.domain, pts)
    return CircleResult(pts[inside], float(r), bool(not inside.all()), bool(not inside.any()))


def geodesic_circle(s: FourierSurrogate, p, r, count, rng=None, resolution=200, stencil_radius=5,
                    value_scaling="range", field: DistanceField | None = None) -> CircleResult:
    """``count`` points at geodesic distance ``r`` from ``p``, spaced evenly by arc length.

    ``crossed`` is set when the level set touches the domain boundary and
    ``exited`` when no part of it remains inside; the returned points are the
    in-domain part only.  ``rng`` supplies a random rotation of the spacing.
    For n != 2 the sphere is approximated from the metric at ``p``.
    """
    if not r > 0:
        raise ValidationError("radius must be > 0")
    if int(count) < 1:
        raise ValidationError("count must be >= 1")
    p = np.asarray(p, dtype=float)
    if p.shape != (s.dim,):
        raise ValidationError("centre dimension does not match the surrogate")
    if s.dim != 2:
        return _sphere_points(s, p, r, int(count), rng, value_scaling)
    if field is None:
        field = geodesic_distance_field(s, p, resolution, stencil_radius, value_scaling)
    crossed = r >= field.boundary_min()
    if r >= field.extent():
        return CircleResult(np.empty((0, 2)), float(r), True, True)
    offset = rng.random() if rng is not None else 0.0
    pts = _contour_points(field, r, int(count), offset)
    return CircleResult(pts, float(r), bool(crossed), len(pts) == 0)


@dataclass(frozen=True, eq=False)
class BuildResult:
    surrogate: FourierSurrogate
    samples: SampleSet
    report: object
    trace: list = field(default_factory=list)
    iterations: int = 0
    stop_reason: str = ""
    evaluations: int = 0


def build_surrogate(spec: BenchmarkSpec, noise: NoiseModel | None = None,
                    cfg: SamplingConfig | None = None, domain=None,
                    error_resolution=200) -> BuildResult:
    """Seed corners and midpoint, then grow geodesic circles and refit on accepted samples.

    ``domain`` overrides the benchmark's box (used for zoomed refinement).
    The error report compares against the noise-free benchmark; it is None
    when that benchmark is constant on the box.
    """
    cfg = cfg or SamplingConfig()
    dom = dm.make_domain(domain if domain is not None else spec.domain)
    if len(dom) != spec.dim:
        raise ValidationError("domain dimension does not match the benchmark")
    oracle = NoisyOracle(spec, noise)
    rng = np.random.default_rng(np.random.SeedSequence(int(cfg.seed), spawn_key=(2,)))

    def fit(samples):
        return fit_coefficients_ls(samples, cfg.order, dom, ridge=cfg.ridge,
                                   period_factor=cfg.period_factor)

    samples = corner_samples(dom, oracle).concat(midpoint_sample(dom, oracle))
    s = fit(samples)
    p = dm.midpoint(dom)
    trace = []
    stop = "max-iterations"
    z = 0
    fractions = cfg.radius_fractions()
    while z < cfg.max_iterations:
        z += 1
        fld = None
        if spec.dim == 2:
            fld = geodesic_distance_field(s, p, cfg.grid_resolution, cfg.stencil_radius, cfg.value_scaling)
        if cfg.radius_step is not None:
            r = z * cfg.radius_step
        elif z <= len(fractions):
            extent = fld.extent() if fld is not None else float(np.linalg.norm(dm.widths(dom))) / 2
            r = fractions[z - 1] * extent
        else:
            stop = "schedule-complete"
            break
        circ = geodesic_circle(s, p, r, cfg.points_per_circle, rng=rng,
                               value_scaling=cfg.value_scaling, field=fld)
        if circ.exited or (cfg.termination == "touch" and circ.crossed):
            stop = "boundary"
            break
        q = circ.points
        fq = oracle(q)
        sq = s(q)
        accepted = accept_sample(fq, sq, cfg.alpha)
        for i in range(len(q)):
            trace.append({"iteration": z, "location": [float(v) for v in q[i]],
                          "true_value": float(fq[i]), "surrogate_value": float(sq[i]),
                          "accepted": bool(accepted[i]), "radius": float(r)})
        if accepted.any():
            new = SampleSet.from_points(q[accepted], fq[accepted], "circle", iteration=z, radius=r)
            samples = samples.concat(new)
            s = fit(samples)
    try:
        report = approximation_error(s, spec.form, resolution=error_resolution, n_samples=samples.count)
    except DegenerateMetricError:
        report = None  # constant truth: R^2 undefined
    return BuildResult(s, samples, report, trace, z, stop, oracle.calls)


def write_trace(path, trace):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in trace:
            fh.write(json.dumps(rec) + "\n")


def with_order(cfg: SamplingConfig, order: int) -> SamplingConfig:
    return replace(cfg, order=int(order))
