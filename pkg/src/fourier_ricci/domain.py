"""Rectangular domains: a sequence of closed intervals ``[(lo, hi), ...]``."""

import itertools
import json

import numpy as np

from .errors import ValidationError


def make_domain(intervals):
    """Validate and normalize to a tuple of ``(float, float)`` pairs."""
    try:
        dom = tuple((float(lo), float(hi)) for lo, hi in intervals)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"domain must be a sequence of [lo, hi] pairs: {exc}") from None
    if not dom:
        raise ValidationError("domain needs at least one interval")
    for d, (lo, hi) in enumerate(dom):
        if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
            raise ValidationError(f"interval {d} is degenerate: [{lo}, {hi}]")
    return dom


def bounds(domain):
    dom = make_domain(domain)
    return np.array([lo for lo, _ in dom]), np.array([hi for _, hi in dom])


def widths(domain):
    lower, upper = bounds(domain)
    return upper - lower


def midpoint(domain):
    lower, upper = bounds(domain)
    return (lower + upper) / 2.0


def corners(domain):
    """All 2^n corner points, first coordinate varying slowest."""
    dom = make_domain(domain)
    return np.array(list(itertools.product(*dom)), dtype=float)


def contains(domain, points, tol=0.0):
    lower, upper = bounds(domain)
    pts = np.atleast_2d(points)
    return np.all((pts >= lower - tol) & (pts <= upper + tol), axis=1)


def grid_axes(domain, resolution):
    """Inclusive uniform axes, one per dimension."""
    lower, upper = bounds(domain)
    res = np.broadcast_to(np.asarray(resolution, dtype=int), lower.shape)
    if np.any(res < 2):
        raise ValidationError("grid resolution must be at least 2 per dimension")
    return [np.linspace(lo, hi, int(r)) for lo, hi, r in zip(lower, upper, res)]


def grid_points(axes):
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def domain_to_json(domain):
    return json.dumps([[lo, hi] for lo, hi in make_domain(domain)])


def domain_from_json(text):
    return make_domain(json.loads(text))
