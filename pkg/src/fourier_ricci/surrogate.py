"""Truncated multivariate Fourier series surrogates.

A surrogate of order ``M`` on an ``n``-dimensional box stores one complex
coefficient per multi-index ``k`` in ``{-M..M}^n`` and evaluates

    F(x) = Re sum_k a_k exp(j * sum_d k_d * omega_d * (x_d - lo_d))

Coefficients live in a dense array of shape ``(2M+1,)*n``; entry ``[k + M]``
holds ``a_k``.  ``omega_d = 2*pi / (period_factor * width_d)``; with a period
factor of 1 the box is exactly one period, with the default fitting factor of
2 the series is a Fourier extension and need not be periodic on the box.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import domain as dm
from .errors import DegenerateMetricError, IllConditionedError, ValidationError
from .samples import SampleSet

DEFAULT_RIDGE = 1e-8
DEFAULT_PERIOD_FACTOR = 2.0


def omega_for(domain, period_factor=1.0):
    if not period_factor > 0:
        raise ValidationError("period_factor must be positive")
    return 2.0 * np.pi / (period_factor * dm.widths(domain))


def _mode_product(tensor, mat, axis):
    """Contract ``tensor`` along ``axis`` with the columns of ``mat`` (new axis stays in place)."""
    return np.moveaxis(np.tensordot(mat, tensor, axes=([1], [axis])), 0, axis)


@dataclass(frozen=True, eq=False)
class FourierSurrogate:
    order: int
    domain: tuple
    omega: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        dom = dm.make_domain(self.domain)
        M = int(self.order)
        if M < 0:
            raise ValidationError("order must be non-negative")
        n = len(dom)
        omega = np.asarray(self.omega, dtype=float).reshape(-1)
        if omega.shape != (n,) or np.any(omega <= 0):
            raise ValidationError("omega needs one positive frequency per dimension")
        coef = np.array(self.coefficients, dtype=complex, order="C")
        if coef.shape != (2 * M + 1,) * n:
            raise ValidationError(f"coefficient array must have shape {(2 * M + 1,) * n}, got {coef.shape}")
        omega.flags.writeable = False
        coef.flags.writeable = False
        object.__setattr__(self, "order", M)
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "coefficients", coef)

    @classmethod
    def constant(cls, value, order, domain, period_factor=DEFAULT_PERIOD_FACTOR):
        dom = dm.make_domain(domain)
        coef = np.zeros((2 * order + 1,) * len(dom), dtype=complex)
        coef[(order,) * len(dom)] = value
        return cls(order, dom, omega_for(dom, period_factor), coef)

    @property
    def dim(self) -> int:
        return len(self.domain)

    @property
    def lower(self):
        return dm.bounds(self.domain)[0]

    @property
    def period(self):
        return 2.0 * np.pi / self.omega

    @property
    def n_terms(self) -> int:
        return self.coefficients.size

    @property
    def wavenumbers(self):
        return np.arange(-self.order, self.order + 1)

    def coefficient(self, k):
        return self.coefficients[tuple(int(v) + self.order for v in k)]

    def _check(self, x):
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.dim:
            raise ValidationError(f"expected {self.dim}-dimensional input, got shape {np.shape(x)}")
        return pts, single

    def _phase(self, coords, d):
        kw = self.wavenumbers * self.omega[d]
        return np.exp(1j * np.outer(coords - self.lower[d], kw)), kw

    def _contract_points(self, mats):
        t = np.tensordot(mats[0], self.coefficients, axes=([1], [0]))
        for mat in mats[1:]:
            t = np.einsum("ik,ik...->i...", mat, t)
        return t

    def _point_mats(self, pts, deriv=None):
        mats = []
        for d in range(self.dim):
            p, kw = self._phase(pts[:, d], d)
            if deriv is not None and deriv[d]:
                p = p * (1j * kw) ** deriv[d]
            mats.append(p)
        return mats

    def eval_complex(self, x):
        """Full complex sum; its imaginary part vanishes for Hermitian coefficients."""
        pts, single = self._check(x)
        out = self._contract_points(self._point_mats(pts))
        return out[0] if single else out

    def __call__(self, x):
        pts, single = self._check(x)
        out = np.real(self._contract_points(self._point_mats(pts)))
        return float(out[0]) if single else out

    def gradient(self, x):
        pts, single = self._check(x)
        grads = []
        for d in range(self.dim):
            deriv = [0] * self.dim
            deriv[d] = 1
            grads.append(np.real(self._contract_points(self._point_mats(pts, deriv))))
        g = np.stack(grads, axis=1)
        return g[0] if single else g

    def laplacian(self, x):
        pts, single = self._check(x)
        total = 0.0
        for d in range(self.dim):
            deriv = [0] * self.dim
            deriv[d] = 2
            total = total + np.real(self._contract_points(self._point_mats(pts, deriv)))
        return float(total[0]) if single else total

    def evaluate_grid(self, axes):
        """Values on the tensor grid spanned by ``axes`` (``ij`` indexing)."""
        if len(axes) != self.dim:
            raise ValidationError("need one axis per dimension")
        t = self.coefficients
        for d, ax in enumerate(axes):
            p, _ = self._phase(np.asarray(ax, dtype=float), d)
            t = np.tensordot(t, p, axes=([0], [1]))
        return np.real(t)

    def to_dict(self):
        rows = []
        for idx in itertools.product(range(2 * self.order + 1), repeat=self.dim):
            a = self.coefficients[idx]
            rows.append([[i - self.order for i in idx], float(a.real), float(a.imag)])
        return {
            "order": self.order,
            "domain": [[lo, hi] for lo, hi in self.domain],
            "omega": [float(w) for w in self.omega],
            "coefficients": rows,
        }

    @classmethod
    def from_dict(cls, data):
        order = int(data["order"])
        dom = dm.make_domain(data["domain"])
        coef = np.zeros((2 * order + 1,) * len(dom), dtype=complex)
        for k, re, im in data["coefficients"]:
            coef[tuple(int(v) + order for v in k)] = complex(float(re), float(im))
        return cls(order, dom, np.asarray(data["omega"], dtype=float), coef)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def surrogate_gradient(s: FourierSurrogate, x):
    return s.gradient(x)


def eval_surrogate(s: FourierSurrogate, x):
    return s(x)


def half_indices(order, n):
    """Multi-indices with a positive first nonzero component (one of each +-k pair)."""
    out = []
    for k in itertools.product(range(-order, order + 1), repeat=n):
        nz = [v for v in k if v != 0]
        if nz and nz[0] > 0:
            out.append(k)
    return np.array(out, dtype=int).reshape(-1, n)


def _samples_arrays(samples):
    if isinstance(samples, SampleSet):
        return samples.points, samples.values
    pts, vals = samples
    return np.atleast_2d(np.asarray(pts, dtype=float)), np.asarray(vals, dtype=float).reshape(-1)


def estimate_coefficients_mc(samples, order, domain, period_factor=1.0) -> FourierSurrogate:
    """Sample-average estimator a_k = mean_i f(x_i) exp(-j k.omega x_i').

    Exact for band-limited data on a uniform full-period grid; biased for
    scattered or non-uniform samples.
    """
    pts, vals = _samples_arrays(samples)
    if len(vals) == 0:
        raise ValidationError("cannot estimate coefficients from an empty sample set")
    dom = dm.make_domain(domain)
    if pts.shape[1] != len(dom):
        raise ValidationError("sample dimension does not match the domain")
    omega = omega_for(dom, period_factor)
    lower = dm.bounds(dom)[0]
    ks = np.arange(-order, order + 1)
    t = vals.astype(complex)
    for d in range(len(dom)):
        p = np.exp(-1j * np.outer(pts[:, d] - lower[d], ks * omega[d]))
        t = np.einsum("i...,ik->i...k", t, p)
    coef = t.sum(axis=0) / len(vals)
    coef = 0.5 * (coef + np.conj(coef[(slice(None, None, -1),) * len(dom)]))
    return FourierSurrogate(order, dom, omega, coef)


def _from_real_params(params, halfk, order, n):
    coef = np.zeros((2 * order + 1,) * n, dtype=complex)
    coef[(order,) * n] = params[0]
    h = len(halfk)
    c, s = params[1:1 + h], params[1 + h:]
    for i, k in enumerate(halfk):
        coef[tuple(k + order)] = 0.5 * (c[i] - 1j * s[i])
        coef[tuple(order - k)] = 0.5 * (c[i] + 1j * s[i])
    return coef


def fit_coefficients_ls(samples, order, domain, ridge=DEFAULT_RIDGE,
                        period_factor=DEFAULT_PERIOD_FACTOR) -> FourierSurrogate:
    """Ridge least-squares fit over Hermitian-symmetric coefficient maps.

    Minimizes sum_i (F(x_i) - y_i)^2 + ridge * sum_k |b_k|^2, where b equals
    a with the sample mean removed from the constant term, so constant data is
    reproduced exactly.  A real cos/sin parametrization keeps F real.
    """
    pts, vals = _samples_arrays(samples)
    if len(vals) == 0:
        raise ValidationError("cannot fit an empty sample set")
    if ridge < 0:
        raise ValidationError("ridge must be >= 0")
    dom = dm.make_domain(domain)
    n = len(dom)
    if pts.shape[1] != n:
        raise ValidationError("sample dimension does not match the domain")
    omega = omega_for(dom, period_factor)
    halfk = half_indices(order, n)
    theta = (pts - dm.bounds(dom)[0]) @ (halfk * omega).T
    design = np.hstack([np.ones((len(vals), 1)), np.cos(theta), np.sin(theta)])
    ncols = design.shape[1]
    mean = float(vals.mean())
    vals = vals - mean
    if ridge > 0:
        # |a_0|^2 + sum over +-k pairs of (c^2 + s^2) / 2
        weights = np.full(ncols, 0.5)
        weights[0] = 1.0
        design = np.vstack([design, np.diag(np.sqrt(ridge * weights))])
        vals = np.concatenate([vals, np.zeros(ncols)])
    params, _, rank, _ = np.linalg.lstsq(design, vals, rcond=None)
    if ridge == 0 and rank < ncols:
        raise IllConditionedError(
            f"design matrix has rank {rank} < {ncols} unknowns; raise ridge or add samples")
    params[0] += mean
    return FourierSurrogate(order, dom, omega, _from_real_params(params, halfk, order, n))


def fit_grid_ls(axes, values, order, domain, ridge=DEFAULT_RIDGE,
                period_factor=DEFAULT_PERIOD_FACTOR) -> FourierSurrogate:
    """Same objective as :func:`fit_coefficients_ls` for data on a tensor grid.

    The design matrix factors as a Kronecker product of per-axis Fourier
    matrices, so the ridge solution follows from one small SVD per axis.
    """
    dom = dm.make_domain(domain)
    n = len(dom)
    vals = np.asarray(values, dtype=float)
    if len(axes) != n or vals.shape != tuple(len(a) for a in axes):
        raise ValidationError("values must have one axis per dimension matching the grid axes")
    if ridge < 0:
        raise ValidationError("ridge must be >= 0")
    omega = omega_for(dom, period_factor)
    lower = dm.bounds(dom)[0]
    ks = np.arange(-order, order + 1)
    mean = float(vals.mean())
    t = (vals - mean).astype(complex)
    svals, vmats = [], []
    for d, ax in enumerate(axes):
        e = np.exp(1j * np.outer(np.asarray(ax, dtype=float) - lower[d], ks * omega[d]))
        u, s, vh = np.linalg.svd(e, full_matrices=False)
        t = _mode_product(t, u.conj().T, d)
        svals.append(s)
        vmats.append(vh.conj().T)
    sprod = svals[0]
    for s in svals[1:]:
        sprod = np.multiply.outer(sprod, s)
    if ridge == 0:
        full_rank = all(len(s) == len(ks) for s in svals)
        # numerical rank, with the same cutoff lstsq uses for scattered fits
        cutoff = np.finfo(float).eps * max(vals.size, sprod.size) * sprod.max()
        if not full_rank or sprod.min() <= cutoff:
            raise IllConditionedError("grid cannot resolve every frequency; raise ridge or refine the grid")
    t = t * sprod / (sprod ** 2 + ridge)
    for d, v in enumerate(vmats):
        t = _mode_product(t, v, d)
    coef = 0.5 * (t + np.conj(t[(slice(None, None, -1),) * n]))
    coef[(order,) * n] += mean
    return FourierSurrogate(order, dom, omega, coef)


@dataclass(frozen=True)
class ErrorReport:
    mae: float
    mse: float
    r_squared: float
    max_abs_error: float
    n_samples: int
    resolution: int

    def to_dict(self):
        return {"mae": self.mae, "mse": self.mse, "r_squared": self.r_squared,
                "max_abs_error": self.max_abs_error, "n_samples": self.n_samples,
                "resolution": self.resolution}


def error_metrics(truth_values, approx_values, n_samples=0, resolution=0) -> ErrorReport:
    t = np.asarray(truth_values, dtype=float).ravel()
    a = np.asarray(approx_values, dtype=float).ravel()
    resid = t - a
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot <= 0:
        raise DegenerateMetricError("truth is constant on the grid; R^2 is undefined")
    return ErrorReport(
        mae=float(np.mean(np.abs(resid))),
        mse=float(np.mean(resid ** 2)),
        r_squared=1.0 - float(np.sum(resid ** 2)) / ss_tot,
        max_abs_error=float(np.max(np.abs(resid))),
        n_samples=int(n_samples),
        resolution=int(resolution),
    )


def approximation_error(s: FourierSurrogate, truth: Callable, resolution=200, n_samples=0) -> ErrorReport:
    """MAE, MSE, R^2 and max |f - F| on a uniform inclusive grid over the surrogate's domain."""
    axes = dm.grid_axes(s.domain, resolution)
    approx = s.evaluate_grid(axes)
    exact = np.asarray(truth(dm.grid_points(axes)), dtype=float).reshape(approx.shape)
    return error_metrics(exact, approx, n_samples=n_samples, resolution=resolution)
