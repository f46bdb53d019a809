"""Smooth compactly supported test functions with analytic derivatives.

The basic building block is the polynomial bump b(s) = (1 - s^2)^2 on
|s| < 1 (zero outside), which is C^1 with b'(s) = -4 s (1 - s^2).
Two-dimensional test functions H(t, u) are products of shifted and
scaled bumps; entropy-inequality checkers require the partial
derivatives, so they are supplied analytically rather than by
differencing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def bump(s):
    """(1 - s^2)^2 on |s| < 1, zero outside."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    out = np.where(inside, (1.0 - s * s) ** 2, 0.0)
    return out if out.ndim else float(out)


def bump_prime(s):
    """Derivative of the bump: -4 s (1 - s^2) on |s| < 1."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    out = np.where(inside, -4.0 * s * (1.0 - s * s), 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class TestFunction2D:
    """H(t, u) = bump((t - t0)/wt) * bump((u - u0)/wu), with derivatives."""

    __test__ = False  # not a test case, despite the name

    t_center: float
    t_halfwidth: float
    u_center: float
    u_halfwidth: float
    name: str = "bump"

    @property
    def t_support(self):
        return (self.t_center - self.t_halfwidth,
                self.t_center + self.t_halfwidth)

    @property
    def u_support(self):
        return (self.u_center - self.u_halfwidth,
                self.u_center + self.u_halfwidth)

    def _s(self, t, u):
        return ((np.asarray(t, dtype=float) - self.t_center) / self.t_halfwidth,
                (np.asarray(u, dtype=float) - self.u_center) / self.u_halfwidth)

    def value(self, t, u):
        st, su = self._s(t, u)
        return bump(st) * bump(su)

    def dt(self, t, u):
        st, su = self._s(t, u)
        return bump_prime(st) / self.t_halfwidth * bump(su)

    def du(self, t, u):
        st, su = self._s(t, u)
        return bump(st) * bump_prime(su) / self.u_halfwidth

    def sup_dt(self) -> float:
        # max of |b'| is 8/(3 sqrt 3) at s = 1/sqrt(3); |b| <= 1
        return 8.0 / (3.0 * np.sqrt(3.0)) / self.t_halfwidth

    def sup_du(self) -> float:
        return 8.0 / (3.0 * np.sqrt(3.0)) / self.u_halfwidth


def bump_family(t_window, u_window, n_t: int = 2,
                n_u: int = 3) -> list[TestFunction2D]:
    """A grid of bumps covering (t_window) x (u_window)."""
    t0, t1 = t_window
    u0, u1 = u_window
    wt = (t1 - t0) / (n_t + 1)
    wu = (u1 - u0) / (n_u + 1)
    fam = []
    for i in range(n_t):
        for j in range(n_u):
            tc = t0 + wt * (i + 1)
            uc = u0 + wu * (j + 1)
            fam.append(TestFunction2D(tc, wt, uc, wu,
                                      name=f"bump[{i},{j}]"))
    return fam


def hat(u, center: float, halfwidth: float, height: float = 1.0):
    """Triangular profile: height at the center, linear to 0 at the edges."""
    u = np.asarray(u, dtype=float)
    out = height * np.maximum(0.0, 1.0 - np.abs(u - center) / halfwidth)
    return out if out.ndim else float(out)


def hat_profile_callable(center: float, halfwidth: float,
                         height: float = 1.0):
    """Closure form of the hat, for exact-solution comparisons."""
    def f(u):
        return hat(u, center, halfwidth, height)
    return f
