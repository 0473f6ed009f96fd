"""A-priori error bound for sampled Fourier surrogates and an empirical decay checker.

The bound splits the surrogate error into three terms,

    e_fourier  = C_F * N_trunc^(-s)             (series truncation)
    e_sampling = C_S * N^(-1/n)                  (finite sampling, gap ~ N^(-1/n))
    e_noise    = C_sigma * sqrt(log(1/delta) / N)

and ``e_total`` is their sum.  ``N_trunc`` defaults to the sample count, so the
bound is a single function of ``N``; pass ``truncation_terms`` to decouple it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from . import domain as dm
from .benchmarks import BenchmarkSpec, NoiseModel, sample_stochastic
from .errors import ValidationError
from .surrogate import approximation_error, fit_coefficients_ls


@dataclass(frozen=True)
class BoundParams:
    C_F: float
    C_S: float
    C_sigma: float
    s: float
    n: int
    delta: float
    L: float | None = None
    Delta: float | None = None

    def __post_init__(self):
        for name in ("C_F", "C_S", "C_sigma", "s"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be a positive finite number, got {v}")
        if int(self.n) < 1:
            raise ValidationError("n must be >= 1")
        if not 0 < self.delta < 1:
            raise ValidationError("delta must lie strictly between 0 and 1")
        if self.L is not None and not self.L > 0:
            raise ValidationError("L must be > 0 when set")
        if self.Delta is not None and not self.Delta >= 0:
            raise ValidationError("Delta must be >= 0 when set")


@dataclass(frozen=True)
class BoundBreakdown:
    e_fourier: float
    e_sampling: float
    e_noise: float
    e_total: float
    N: int
    truncation_terms: int

    def to_dict(self):
        return {"N": self.N, "truncation_terms": self.truncation_terms, "e_fourier": self.e_fourier,
                "e_sampling": self.e_sampling, "e_noise": self.e_noise, "e_total": self.e_total}


def _terms(c_f, c_s, c_sigma, s, n, delta, N, n_trunc):
    e_f = c_f * float(n_trunc) ** (-s)
    e_s = c_s * float(N) ** (-1.0 / n)
    e_n = c_sigma * math.sqrt(math.log(1.0 / delta) / N)
    return float(e_f), float(e_s), float(e_n)


def total_error_bound(params: BoundParams, N: int, truncation_terms: int | None = None) -> BoundBreakdown:
    if int(N) < 1:
        raise ValidationError("N must be >= 1")
    n_trunc = int(N) if truncation_terms is None else int(truncation_terms)
    if n_trunc < 1:
        raise ValidationError("truncation_terms must be >= 1")
    e_f, e_s, e_n = _terms(params.C_F, params.C_S, params.C_sigma, params.s, params.n,
                           params.delta, int(N), n_trunc)
    return BoundBreakdown(e_f, e_s, e_n, e_f + e_s + e_n, int(N), n_trunc)


def gap_sampling_bound(params: BoundParams) -> float:
    """Sampling error bound from the largest gap between neighbouring samples."""
    if params.Delta is None:
        raise ValidationError("gap bound needs Delta (the maximum sample gap)")
    return params.C_S * params.Delta


@dataclass
class DecayResult:
    rows: list
    constants: dict
    dominates: bool
    settings: dict = field(default_factory=dict)

    def series(self, key):
        return np.array([r[key] for r in self.rows], dtype=float)

    def non_increasing(self, key="measured_mae", slack=0.10):
        """Each value is at most ``(1 + slack)`` times every earlier value."""
        v = self.series(key)
        return bool(all(v[i] <= (1 + slack) * v[:i].min() for i in range(1, len(v))))

    def write_csv(self, path):
        cols = ["N", "measured_mae", "measured_max", "bound_e_total", "e_fourier", "e_sampling", "e_noise"]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.rows:
                w.writerow([r["N"]] + [repr(float(r[c])) for c in cols[1:]])


def empirical_decay_check(spec: BenchmarkSpec, sizes, order=3, sigma=0.0, seed=0, s=1.0,
                          delta=0.05, ridge=1e-8, period_factor=2.0, resolution=200,
                          target="measured_max") -> DecayResult:
    """Fit surrogates on uniform random samples of growing size and fit the bound's constants.

    ``C_F`` and ``C_S`` come from a non-negative least-squares fit of the
    noise-free error series; ``C_sigma`` from the distance between the noisy
    and the noise-free fit at the same sample locations.  All three are then
    scaled by one common factor so the bound sits on or above every measured
    ``target`` value.
    Note that for ``n = 2`` the sampling and noise terms share the ``N^(-1/2)``
    rate, which is why they are separated through the noisy/clean difference.
    """
    sizes = [int(v) for v in sizes]
    if len(sizes) < 3:
        raise ValidationError("need at least 3 sample sizes")
    if any(v < 1 for v in sizes) or sorted(set(sizes)) != sizes:
        raise ValidationError("sample sizes must be positive and strictly increasing")
    if target not in ("measured_max", "measured_mae"):
        raise ValidationError("target must be 'measured_max' or 'measured_mae'")
    if not 0 < delta < 1:
        raise ValidationError("delta must lie strictly between 0 and 1")
    n = spec.dim
    rows = []
    for N in sizes:
        clean = sample_stochastic(spec, N, NoiseModel("none", 0.0, seed))
        rec = {"N": N}
        s_clean = fit_coefficients_ls(clean, order, spec.domain, ridge=ridge, period_factor=period_factor)
        rep_clean = approximation_error(s_clean, spec.form, resolution=resolution, n_samples=N)
        rec["clean_mae"], rec["clean_max"] = rep_clean.mae, rep_clean.max_abs_error
        rec["noise_mae"] = rec["noise_max"] = 0.0
        if sigma > 0:
            noisy = sample_stochastic(spec, N, NoiseModel("additive-gaussian", sigma, seed))
            s_noisy = fit_coefficients_ls(noisy, order, spec.domain, ridge=ridge, period_factor=period_factor)
            rep = approximation_error(s_noisy, spec.form, resolution=resolution, n_samples=N)
            # noise-induced part: distance between the noisy and clean fits at the same locations
            axes = dm.grid_axes(spec.domain, resolution)
            shift = np.abs(s_noisy.evaluate_grid(axes) - s_clean.evaluate_grid(axes))
            rec["noise_mae"], rec["noise_max"] = float(shift.mean()), float(shift.max())
        else:
            rep = rep_clean
        rec["measured_mae"], rec["measured_max"] = rep.mae, rep.max_abs_error
        rows.append(rec)

    Ns = np.array(sizes, dtype=float)
    clean_key = target.replace("measured", "clean")
    y_clean = np.array([r[clean_key] for r in rows])
    design = np.column_stack([Ns ** (-s), Ns ** (-1.0 / n)])
    (c_f, c_s), _ = nnls(design, y_clean)
    c_sigma = 0.0
    if sigma > 0:
        extra = np.array([r[target.replace("measured", "noise")] for r in rows])
        noise_col = np.sqrt(math.log(1.0 / delta) / Ns)[:, None]
        (c_sigma,), _ = nnls(noise_col, extra)

    def bound_at(N, cf, cs, csg):
        return _terms(cf, cs, csg, s, n, delta, N, N)

    measured = np.array([r[target] for r in rows])
    base = np.array([sum(bound_at(N, c_f, c_s, c_sigma)) for N in sizes])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(base > 0, measured / base, np.inf)
    scale = max(1.0, float(np.max(ratios))) if np.all(np.isfinite(ratios)) else 1.0
    c_f, c_s, c_sigma = scale * c_f, scale * c_s, scale * c_sigma
    for r in rows:
        e_f, e_s, e_n = bound_at(r["N"], c_f, c_s, c_sigma)
        r.update(e_fourier=e_f, e_sampling=e_s, e_noise=e_n, bound_e_total=e_f + e_s + e_n)
    dominates = all(r["bound_e_total"] >= r["measured_mae"] and r["bound_e_total"] >= r[target]
                    for r in rows)
    constants = {"C_F": float(c_f), "C_S": float(c_s), "C_sigma": float(c_sigma), "scale": scale}
    settings = {"benchmark": spec.name, "order": int(order), "sigma": float(sigma), "seed": int(seed),
                "s": float(s), "delta": float(delta), "target": target,
                "truncation_reading": "single-N (truncation terms = sample count)"}
    return DecayResult(rows, constants, bool(dominates), settings)
