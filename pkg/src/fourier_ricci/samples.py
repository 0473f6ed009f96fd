"""Tagged collections of (point, value) observations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

PROVENANCE_KINDS = ("boundary", "midpoint", "circle", "stochastic", "grid")


@dataclass(frozen=True)
class SampleSet:
    """Observations with provenance.

    ``iterations`` holds the circle index z (0 for seeds and non-circle
    samples) and ``radii`` the circle radius in metric units (NaN when the
    sample did not come from a circle).
    """

    points: np.ndarray
    values: np.ndarray
    kinds: tuple
    iterations: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        values = np.asarray(self.values, dtype=float).reshape(-1)
        n = len(values)
        if points.shape[0] != n:
            raise ValidationError(f"{points.shape[0]} points but {n} values")
        iterations = np.asarray(self.iterations, dtype=int).reshape(-1)
        radii = np.asarray(self.radii, dtype=float).reshape(-1)
        if len(self.kinds) != n or len(iterations) != n or len(radii) != n:
            raise ValidationError("provenance arrays must match the sample count")
        for kind in self.kinds:
            if kind not in PROVENANCE_KINDS:
                raise ValidationError(f"unknown provenance {kind!r}")
        if n > 1 and np.any(np.diff(iterations) < 0):
            raise ValidationError("circle iteration indices must be non-decreasing")
        for name, arr in (("points", points), ("values", values),
                          ("iterations", iterations), ("radii", radii)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "kinds", tuple(self.kinds))

    @classmethod
    def from_points(cls, points, values, kind, iteration=0, radius=float("nan")):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = points.shape[0]
        return cls(points, values, (kind,) * n, np.full(n, iteration), np.full(n, radius))

    @classmethod
    def empty(cls, dim):
        return cls(np.empty((0, dim)), np.empty(0), (), np.empty(0, dtype=int), np.empty(0))

    @property
    def count(self) -> int:
        return len(self.values)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.count

    def concat(self, other: SampleSet) -> SampleSet:
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        return SampleSet(
            np.vstack([self.points, other.points]),
            np.concatenate([self.values, other.values]),
            self.kinds + other.kinds,
            np.concatenate([self.iterations, other.iterations]),
            np.concatenate([self.radii, other.radii]),
        )

    def select(self, mask) -> SampleSet:
        mask = np.asarray(mask, dtype=bool)
        idx = np.flatnonzero(mask)
        return SampleSet(self.points[idx], self.values[idx], tuple(self.kinds[i] for i in idx),
                         self.iterations[idx], self.radii[idx])

    def to_records(self):
        """Plain-Python rows, one per sample, suitable for JSON."""
        rows = []
        for i in range(self.count):
            r = float(self.radii[i])
            rows.append({
                "location": [float(v) for v in self.points[i]],
                "value": float(self.values[i]),
                "provenance": self.kinds[i],
                "iteration": int(self.iterations[i]),
                "radius": None if np.isnan(r) else r,
            })
        return rows
