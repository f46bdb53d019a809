"""Independent machinery for the exactly solvable linear case g(k) = k.

For linear rates the site densities close on themselves: they solve a
linear ODE system, admit a Feynman-Kac representation through a killed
random walk with inverted drift, and converge to an explicit macroscopic
profile with absorption factor alpha-tilde.  These routes never touch
the event engine, so they serve as cross-checks for it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import ModelParams
from .profiles import DensityProfile

#: escape cutoff for the killed walk, in units of sqrt(N) sites left of 0
ESCAPE_SIGMAS = 4.0


@dataclass(frozen=True)
class LinearCaseParams:
    """Model parameters plus the absorption factors of the linear case."""

    params: ModelParams

    @property
    def alpha_tilde(self) -> float:
        """Limiting absorption factor: 1, alpha/(alpha+2p-1) or 0 by beta."""
        pr = self.params
        if pr.alpha == 0.0:
            return 0.0
        if pr.beta > 0:
            return 1.0
        if pr.beta == 0:
            return pr.alpha / (pr.alpha + pr.drift)
        return 0.0

    @property
    def alpha_tilde_N(self) -> float:
        """Pre-limit killing probability alpha N^beta/(alpha N^beta+2p-1)."""
        aNb = self.params.destruction_factor
        return aNb / (aNb + self.params.drift)


def exact_linear_solution(rho0, lin: LinearCaseParams, t: float, u):
    """Macroscopic density (1 - at 1{0 <= u < (2p-1)t}) rho0(u - (2p-1)t)."""
    pr = lin.params
    shift = pr.drift * t
    u = np.asarray(u, dtype=float)
    base = rho0(u - shift)
    factor = 1.0 - lin.alpha_tilde * ((u >= 0) & (u < shift))
    out = factor * base
    return float(out) if out.ndim == 0 else out


@dataclass
class OdeCurve:
    """Solution of the site-density ODE system on a lattice window."""

    x_min: int
    times: np.ndarray
    values: np.ndarray  # [n_times, n_sites]
    killed: float
    leaked: float
    params: ModelParams

    def at_site(self, x: int) -> np.ndarray:
        return self.values[:, x - self.x_min]

    def final(self) -> np.ndarray:
        return self.values[-1]

    def final_profile(self) -> DensityProfile:
        return DensityProfile(self.x_min / self.params.N,
                              1.0 / self.params.N, self.values[-1])


def integrate_density_ode(rho0, params: ModelParams,
                          window: tuple[int, int], t_end: float,
                          times=None, leak_tol: float = 1e-3) -> OdeCurve:
    """Explicit-Euler integration of the linear-case density system.

    d/dt rho_x = N((1-p) rho_{x+1} + p rho_{x-1} - rho_x) away from the
    origin, with the extra destruction term -N alpha N^beta rho_0 at 0.
    The step obeys dt <= 0.5/(N(1+alpha N^beta)), which keeps the update
    a convex combination (non-negativity preserved).  Mass leaving the
    window edges is tracked and capped at ``leak_tol`` of the initial
    mass.
    """
    x_lo, x_hi = window
    xs = np.arange(x_lo, x_hi + 1)
    rho = np.asarray(rho0(xs / params.N), dtype=float).copy()
    N = params.N
    p = params.p
    aNb = params.destruction_factor
    dt_max = 0.5 / (N * (1.0 + aNb))
    n_steps = max(int(math.ceil(t_end / dt_max - 1e-12)), 1)
    dt = t_end / n_steps
    i0 = -x_lo if x_lo <= 0 <= x_hi else -1

    if times is None:
        times = [t_end]
    times = sorted(float(t) for t in times)
    out = np.empty((len(times), len(rho)))
    ti = 0
    killed = 0.0
    leaked = 0.0
    mass0 = rho.sum()
    t = 0.0
    while ti < len(times) and times[ti] <= 0.0:
        out[ti] = rho
        ti += 1
    for n in range(n_steps):
        right = np.empty_like(rho)
        right[:-1] = rho[1:]
        right[-1] = 0.0
        left = np.empty_like(rho)
        left[1:] = rho[:-1]
        left[0] = 0.0
        drho = N * ((1 - p) * right + p * left - rho)
        if i0 >= 0:
            drho[i0] -= N * aNb * rho[i0]
            killed += dt * N * aNb * rho[i0]
        leaked += dt * N * (p * rho[-1] + (1 - p) * rho[0])
        rho = rho + dt * drho
        t = (n + 1) * dt
        if leaked > leak_tol * max(mass0, 1e-12):
            raise RuntimeError(
                f"density leaked past the window edges at t={t:g}")
        while ti < len(times) and times[ti] <= t + 1e-12:
            out[ti] = rho
            ti += 1
    while ti < len(times):
        out[ti] = rho
        ti += 1
    return OdeCurve(x_min=x_lo, times=np.asarray(times), values=out,
                    killed=killed, leaked=leaked, params=params)


def _walk_step(pos: int, at_origin_kill: float, rate_left: float,
               rate_right: float, rng) -> tuple:
    total = rate_left + rate_right + (at_origin_kill if pos == 0 else 0.0)
    wait = rng.exponential(1.0 / total)
    u = rng.random() * total
    if pos == 0 and u < at_origin_kill:
        return wait, None
    if u < (at_origin_kill if pos == 0 else 0.0) + rate_left:
        return wait, pos - 1
    return wait, pos + 1


def dual_rw_estimate(x: int, t: float, params: ModelParams, rho0,
                     replicas: int, rng: np.random.Generator):
    """Monte Carlo Feynman-Kac value of the site density at (x, t).

    Simulates the dual walk (left at rate Np, right at N(1-p), killed at
    alpha N^{1+beta} while at the origin) and averages
    rho0(X_t / N) 1{tau > t}.  Unbiased for the ODE solution.
    """
    N = params.N
    rate_left = N * params.p
    rate_right = N * (1.0 - params.p)
    kill = params.alpha * float(N) ** (1.0 + params.beta)
    vals = np.empty(replicas)
    for r in range(replicas):
        pos = x
        clock = 0.0
        alive = True
        while True:
            wait, nxt = _walk_step(pos, kill, rate_left, rate_right, rng)
            if clock + wait > t:
                break
            clock += wait
            if nxt is None:
                alive = False
                break
            pos = nxt
        vals[r] = rho0(pos / N) if alive else 0.0
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    return est, se


def killing_probability_experiment(params: ModelParams, start_site: int,
                                   replicas: int,
                                   rng: np.random.Generator,
                                   horizon: float | None = None):
    """Empirical probability that the dual walk dies before escaping.

    A walk is declared escaped once it is ESCAPE_SIGMAS * sqrt(N) sites
    left of the origin (the drift points left, so returns from there are
    exponentially unlikely).  Compare the kill fraction against
    alpha_tilde_N.
    """
    N = params.N
    rate_left = N * params.p
    rate_right = N * (1.0 - params.p)
    kill = params.alpha * float(N) ** (1.0 + params.beta)
    cutoff = -int(math.ceil(ESCAPE_SIGMAS * math.sqrt(N)))
    if horizon is None:
        horizon = 40.0 * abs(cutoff) / (N * (2.0 * params.p - 1.0))
    killed = 0
    for r in range(replicas):
        pos = start_site
        clock = 0.0
        while clock < horizon and pos > cutoff:
            wait, nxt = _walk_step(pos, kill, rate_left, rate_right, rng)
            clock += wait
            if nxt is None:
                killed += 1
                break
            pos = nxt
    frac = killed / replicas
    se = math.sqrt(max(frac * (1 - frac), 1e-12) / replicas)
    return frac, se


def correlation_field(occ_matrix: np.ndarray, x_min: int, x: int, y: int):
    """Two-point correlation across replicas, with jackknife SE.

    ``occ_matrix`` holds one replica per row (occupations at a common
    time on a common window starting at ``x_min``).
    """
    R = occ_matrix.shape[0]
    if R < 100:
        raise ValueError("correlation estimation needs >= 100 replicas")
    a = occ_matrix[:, x - x_min].astype(float)
    b = occ_matrix[:, y - x_min].astype(float)
    Sx, Sy = a.sum(), b.sum()
    Sxy = float(a @ b)
    est = (Sxy - Sx * Sy / R) / (R - 1)
    # leave-one-out covariances from the running sums
    loo = ((Sxy - a * b) - (Sx - a) * (Sy - b) / (R - 1)) / (R - 2)
    se = math.sqrt((R - 1) / R * float(((loo - loo.mean()) ** 2).sum()))
    return float(est), se
