"""Jump-rate functions g for the zero-range dynamics.

A rate function is stored as a finite table g(0..k_max) together with an
affine continuation rule for larger occupations.  Construction validates
g(0) = 0, positivity for k >= 1, the Lipschitz bound and monotonicity
(the attractiveness certificate); non-monotone rates are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class RateError(ValueError):
    """Invalid rate-function specification."""


@dataclass(frozen=True)
class RateFunction:
    """Tabulated jump rate with affine continuation beyond the table.

    ``g(k) = values[k]`` for ``k <= k_max`` and
    ``g(k) = values[k_max] + slope * (k - k_max)`` beyond, with
    ``0 <= slope <= lipschitz_a0``.
    """

    values: tuple
    lipschitz_a0: float
    slope: float = 0.0
    name: str = "table"

    def __post_init__(self):
        v = self.values
        a0 = self.lipschitz_a0
        if len(v) < 2:
            raise RateError("rate table needs at least g(0) and g(1)")
        if v[0] != 0.0:
            raise RateError("g(0) must be 0")
        if any(x <= 0.0 for x in v[1:]):
            raise RateError("g(k) must be positive for k >= 1")
        if a0 <= 0.0:
            raise RateError("Lipschitz constant must be positive")
        if not 0.0 <= self.slope <= a0 + 1e-15:
            raise RateError("continuation slope must lie in [0, a0]")
        diffs = [v[k + 1] - v[k] for k in range(len(v) - 1)]
        if any(d < 0.0 for d in diffs):
            raise RateError("g must be non-decreasing (attractiveness)")
        if any(d > a0 + 1e-12 for d in diffs):
            raise RateError("|g(k+1) - g(k)| exceeds the Lipschitz constant")
        if any(v[k] > a0 * k + 1e-12 for k in range(len(v))):
            raise RateError("g(k) <= a0 * k violated")

    @property
    def k_max(self) -> int:
        return len(self.values) - 1

    def g(self, k: int) -> float:
        if k <= self.k_max:
            return self.values[k]
        return self.values[-1] + self.slope * (k - self.k_max)

    def table(self, upto: int) -> np.ndarray:
        """g(0..upto) as a float array."""
        n = int(upto) + 1
        out = np.empty(n)
        m = min(n, len(self.values))
        out[:m] = self.values[:m]
        if n > m:
            ks = np.arange(m, n)
            out[m:] = self.values[-1] + self.slope * (ks - self.k_max)
        return out

    @property
    def bounded(self) -> bool:
        return self.slope == 0.0

    @property
    def sup_g(self) -> float:
        """sup_k g(k); finite only for bounded continuation."""
        return self.values[-1] if self.bounded else np.inf


def linear_rate(k_max: int = 64) -> RateFunction:
    """g(k) = k."""
    return RateFunction(tuple(float(k) for k in range(k_max + 1)),
                        lipschitz_a0=1.0, slope=1.0, name="linear")


def indicator_rate() -> RateFunction:
    """g(k) = 1{k >= 1}."""
    return RateFunction((0.0, 1.0), lipschitz_a0=1.0, slope=0.0,
                        name="indicator")


def bounded_rate(c: float) -> RateFunction:
    """g(k) = c * 1{k >= 1}."""
    if c <= 0:
        raise RateError("bounded rate constant must be positive")
    return RateFunction((0.0, float(c)), lipschitz_a0=float(c), slope=0.0,
                        name=f"bounded:{c:g}")


def rate_from_spec(spec: str) -> RateFunction:
    """Parse a config-style rate spec.

    Accepts "linear", "indicator", "bounded:c" or "table:v0,v1,..."
    (optionally "table:v0,v1,...;slope=s").
    """
    spec = spec.strip()
    if spec == "linear":
        return linear_rate()
    if spec == "indicator":
        return indicator_rate()
    if spec.startswith("bounded:"):
        return bounded_rate(float(spec.split(":", 1)[1]))
    if spec.startswith("table:"):
        body = spec.split(":", 1)[1]
        slope = 0.0
        if ";" in body:
            body, opt = body.split(";", 1)
            key, val = opt.split("=")
            if key.strip() != "slope":
                raise RateError(f"unknown rate option {key!r}")
            slope = float(val)
        vals = tuple(float(x) for x in body.split(","))
        diffs = [vals[k + 1] - vals[k] for k in range(len(vals) - 1)]
        a0 = max(max(diffs, default=0.0), slope, 1e-12)
        return RateFunction(vals, lipschitz_a0=a0, slope=slope, name=spec)
    raise RateError(f"unknown rate spec {spec!r}")
