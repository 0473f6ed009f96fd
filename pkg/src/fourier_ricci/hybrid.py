"""Zoomed refinement: rebuild the surrogate on a smaller box around a candidate and re-optimize."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import domain as dm
from .benchmarks import BenchmarkSpec, NoiseModel
from .errors import ValidationError
from .flow import Candidate, FlowConfig, optimize
from .sampling import SamplingConfig, build_surrogate


def zoom_domain(domain, center, shrink):
    """Box with widths scaled by ``shrink``, centred at ``center`` and shifted to stay inside ``domain``."""
    if not 0 < shrink <= 1:
        raise ValidationError("shrink must be in (0, 1]")
    lower, upper = dm.bounds(domain)
    center = np.asarray(center, dtype=float)
    half = 0.5 * shrink * (upper - lower)
    lo = np.clip(center - half, lower, upper - 2 * half)
    return dm.make_domain(list(zip(lo, lo + 2 * half)))


def refine_hybrid(spec: BenchmarkSpec, best: Candidate, zoom, order: int,
                  sampling_cfg: SamplingConfig | None = None, flowcfg: FlowConfig | None = None,
                  noise: NoiseModel | None = None, sense="min"):
    """Rebuild on ``zoom`` with a raised order and run the flow again.

    Returns ``(surrogate, best candidate or None, ErrorReport)``.
    """
    zoom = dm.make_domain(zoom)
    if best is not None and not dm.contains(zoom, np.asarray(best.location), tol=1e-12)[0]:
        raise ValidationError("zoom domain must contain the candidate being refined")
    sampling_cfg = replace(sampling_cfg or SamplingConfig(), order=int(order))
    built = build_surrogate(spec, noise, sampling_cfg, domain=zoom)
    result = optimize(built.surrogate, flowcfg or FlowConfig(), sense, oracle=spec.form_scalar)
    return built.surrogate, result.best, built.report
