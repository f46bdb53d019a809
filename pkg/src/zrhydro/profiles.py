"""Piecewise-constant density profiles on a uniform macroscopic grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ProfileError(ValueError):
    pass


@dataclass
class DensityProfile:
    """Values on uniform cells [u_min + j*du, u_min + (j+1)*du)."""

    u_min: float
    du: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.du <= 0:
            raise ProfileError("cell width must be positive")
        if np.any(self.values < 0):
            raise ProfileError("density values must be non-negative")

    @property
    def u_max(self) -> float:
        return self.u_min + self.du * len(self.values)

    @property
    def centers(self) -> np.ndarray:
        return self.u_min + self.du * (np.arange(len(self.values)) + 0.5)

    def __call__(self, u):
        """Evaluate pointwise; zero outside the covered interval."""
        u = np.asarray(u, dtype=float)
        j = np.floor((u - self.u_min) / self.du).astype(np.int64)
        inside = (j >= 0) & (j < len(self.values))
        out = np.zeros(u.shape)
        out[inside] = self.values[j[inside]]
        if out.ndim == 0:
            return float(out)
        return out

    def integral(self) -> float:
        return float(self.values.sum() * self.du)

    def support(self):
        """Smallest interval of cells with nonzero density."""
        nz = np.nonzero(self.values)[0]
        if len(nz) == 0:
            return (0.0, 0.0)
        return (self.u_min + self.du * nz[0],
                self.u_min + self.du * (nz[-1] + 1))

    def resample(self, u_min: float, u_max: float, du: float) -> "DensityProfile":
        """Cell-average this profile onto a new uniform grid."""
        n = int(round((u_max - u_min) / du))
        edges = u_min + du * np.arange(n + 1)
        # antiderivative of the piecewise-constant density
        own_edges = self.u_min + self.du * np.arange(len(self.values) + 1)
        cum = np.concatenate([[0.0], np.cumsum(self.values) * self.du])

        def F(u):
            u = np.clip(u, own_edges[0], own_edges[-1])
            return np.interp(u, own_edges, cum)

        vals = (F(edges[1:]) - F(edges[:-1])) / du
        return DensityProfile(u_min, du, np.maximum(vals, 0.0))

    def l1_distance(self, other, u_lo: float, u_hi: float,
                    exclude=()) -> float:
        """L1 distance on [u_lo, u_hi] minus the excluded intervals.

        ``other`` may be a DensityProfile or a callable of u.
        """
        n = max(int(round((u_hi - u_lo) / min(self.du, 1e-3))), 1000)
        u = np.linspace(u_lo, u_hi, n, endpoint=False) + (u_hi - u_lo) / (2 * n)
        mine = self(u)
        theirs = other(u) if callable(other) else np.asarray(other)
        mask = np.ones(n, dtype=bool)
        for a, b in exclude:
            mask &= ~((u >= a) & (u <= b))
        return float(np.sum(np.abs(mine - theirs)[mask]) * (u_hi - u_lo) / n)

    @classmethod
    def constant(cls, value: float, u_min: float, u_max: float,
                 du: float) -> "DensityProfile":
        n = int(round((u_max - u_min) / du))
        return cls(u_min, du, np.full(n, float(value)))

    @classmethod
    def from_callable(cls, f, u_min: float, u_max: float,
                      du: float) -> "DensityProfile":
        n = int(round((u_max - u_min) / du))
        centers = u_min + du * (np.arange(n) + 0.5)
        return cls(u_min, du, np.asarray([f(u) for u in centers], dtype=float))

    @classmethod
    def from_spec(cls, spec: str, du: float = 0.01) -> "DensityProfile":
        """Parse "a:b:v,a:b:v,..." into a piecewise-constant profile."""
        pieces = []
        for part in spec.split(","):
            try:
                a, b, v = (float(x) for x in part.split(":"))
            except ValueError as e:
                raise ProfileError(f"bad profile piece {part!r}") from e
            if b <= a:
                raise ProfileError(f"empty interval in piece {part!r}")
            pieces.append((a, b, v))
        u_min = min(a for a, _, _ in pieces)
        u_max = max(b for _, b, _ in pieces)
        n = int(round((u_max - u_min) / du))
        vals = np.zeros(n)
        centers = u_min + du * (np.arange(n) + 0.5)
        for a, b, v in pieces:
            vals[(centers >= a) & (centers < b)] = v
        return cls(u_min, du, vals)
