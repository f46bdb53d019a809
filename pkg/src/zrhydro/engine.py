"""Exact continuous-time kinetic Monte Carlo for the accelerated dynamics.

The process runs on a finite lattice window.  Per-site event rates are
``N * g(occupation)``, with the origin carrying the extra destruction
factor ``1 + alpha * N**beta``.  Events are drawn with the Gillespie
direct method; site selection uses a binary-indexed sum tree so each
event costs O(log window).  Time is macroscopic: waiting times are
exponential against the total (already accelerated) rate.
"""
from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .profiles import DensityProfile
from .rates import RateFunction
from .rng import UniformBlock

#: audit cadence (conservation + sum-tree consistency), in events
AUDIT_EVERY = 100_000
#: relative tolerance between the running total rate and a full rebuild
RATE_REL_TOL = 1e-9
#: default cap on mass allowed to leave an open window
LEAK_FRACTION = 1e-3


class SimulationError(RuntimeError):
    pass


class LeakageError(SimulationError):
    """Open-boundary exits exceeded the configured fraction of the mass."""


class EventBudgetError(SimulationError):
    """Event budget exhausted before reaching the requested time."""


class RateConsistencyError(SimulationError):
    """Incrementally maintained rates drifted from a from-scratch rebuild."""


@dataclass(frozen=True)
class ModelParams:
    """Asymmetry p, destruction intensity alpha, exponent beta, scaling N."""

    p: float
    alpha: float
    beta: float
    N: int

    def __post_init__(self):
        if not 0.5 < self.p <= 1.0:
            raise ValueError("asymmetry p must lie in (1/2, 1]")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.N < 1:
            raise ValueError("N must be a positive integer")

    @property
    def drift(self) -> float:
        """Macroscopic transport speed (2p - 1)."""
        return 2.0 * self.p - 1.0

    @property
    def destruction_factor(self) -> float:
        """alpha * N**beta, the extra rate factor at the origin."""
        return self.alpha * float(self.N) ** self.beta


@dataclass
class Configuration:
    """Occupation numbers on [x_min, x_max] plus event bookkeeping."""

    x_min: int
    occ: np.ndarray
    closed: bool = False
    destroyed_count: int = 0
    exited_left: int = 0
    exited_right: int = 0

    def __post_init__(self):
        self.occ = np.asarray(self.occ, dtype=np.int64)
        if np.any(self.occ < 0):
            raise ValueError("occupations must be non-negative")

    @property
    def x_max(self) -> int:
        return self.x_min + len(self.occ) - 1

    @property
    def total_mass(self) -> int:
        return int(self.occ.sum())

    def copy(self) -> "Configuration":
        return Configuration(self.x_min, self.occ.copy(), self.closed,
                             self.destroyed_count, self.exited_left,
                             self.exited_right)


@dataclass
class TrajectoryRecord:
    t_end: float
    n_events: int
    wall_time: float
    destroyed_count: int
    exited_left: int
    exited_right: int


class SnapshotObserver:
    """Records (t, occupations) at the configured times."""

    def __init__(self, times):
        self.times = sorted(float(t) for t in times)
        self.snapshots: list[tuple[float, np.ndarray]] = []

    def notify(self, t: float, engine: "EventEngine"):
        self.snapshots.append((t, engine.occupations()))


class CallbackObserver:
    def __init__(self, times, fn):
        self.times = sorted(float(t) for t in times)
        self.fn = fn

    def notify(self, t: float, engine: "EventEngine"):
        self.fn(t, engine)


class SumTree:
    """Binary-indexed tree over non-negative per-site rates."""

    def __init__(self, values):
        self.n = len(values)
        self.tree = [0.0] * (self.n + 1)
        self.rebuild(values)

    def rebuild(self, values):
        t = self.tree
        n = self.n
        for i in range(n + 1):
            t[i] = 0.0
        for i, v in enumerate(values):
            j = i + 1
            while j <= n:
                t[j] += v
                j += j & (-j)

    def update(self, i: int, delta: float):
        t = self.tree
        n = self.n
        j = i + 1
        while j <= n:
            t[j] += delta
            j += j & (-j)

    def total(self) -> float:
        t = self.tree
        n = self.n
        s = 0.0
        j = n
        while j > 0:
            s += t[j]
            j -= j & (-j)
        return s

    def find(self, u: float) -> int:
        """Largest index with prefix sum <= u (rate-proportional pick)."""
        t = self.tree
        pos = 0
        bit = 1 << (self.n.bit_length())
        while bit:
            nxt = pos + bit
            if nxt <= self.n and t[nxt] < u:
                pos = nxt
                u -= t[nxt]
            bit >>= 1
        return min(pos, self.n - 1)


class EventEngine:
    """Gillespie direct-method engine owning one Configuration."""

    def __init__(self, config: Configuration, params: ModelParams,
                 rate: RateFunction, rng: np.random.Generator,
                 leak_fraction: float = LEAK_FRACTION,
                 max_events: int = 500_000_000,
                 instant_kill: bool = False):
        self.config = config
        self.params = params
        self.rate = rate
        self.rng = rng
        self.leak_fraction = leak_fraction
        self.max_events = max_events
        self.instant_kill = instant_kill
        self.time = 0.0
        self.n_events = 0

        self._occ = [int(k) for k in config.occ]
        self._n = len(self._occ)
        x0 = -config.x_min
        self._origin = x0 if 0 <= x0 < self._n else -1
        aNb = params.destruction_factor
        self._d0 = aNb / (1.0 + aNb)
        self._scale = [float(params.N)] * self._n
        if self._origin >= 0 and not instant_kill:
            self._scale[self._origin] = params.N * (1.0 + aNb)
        if instant_kill and self._origin >= 0:
            # origin occupants die immediately in the instant-kill process
            config.destroyed_count += self._occ[self._origin]
            self._occ[self._origin] = 0
        self._gt = list(rate.table(max(self._occ, default=0) + 2))
        self._rates = [self._scale[i] * self._gt[self._occ[i]]
                       for i in range(self._n)]
        self._tree = SumTree(self._rates)
        self._total = math.fsum(self._rates)
        self._initial_total_mass = sum(self._occ) + config.destroyed_count \
            + config.exited_left + config.exited_right
        self._ub = UniformBlock(rng)

    # -- helpers ---------------------------------------------------------

    def occupations(self) -> np.ndarray:
        return np.array(self._occ, dtype=np.int64)

    def _ensure_g(self, k: int):
        while k >= len(self._gt):
            self._gt = list(self.rate.table(2 * len(self._gt)))

    def verify_rates(self, rel_tol: float = RATE_REL_TOL):
        """Recompute all rates from scratch; raise on drift."""
        fresh = [self._scale[i] * self.rate.g(self._occ[i])
                 for i in range(self._n)]
        for i, (a, b) in enumerate(zip(fresh, self._rates)):
            if abs(a - b) > rel_tol * max(1.0, abs(a)):
                raise RateConsistencyError(f"site {i}: {b} != {a}")
        root = math.fsum(fresh)
        if abs(root - self._total) > rel_tol * max(1.0, root):
            raise RateConsistencyError(
                f"running total {self._total} != rebuilt {root}")
        self._rates = fresh
        self._tree.rebuild(fresh)
        self._total = root

    def _audit(self):
        self.verify_rates()
        c = self.config
        if c.closed:
            now = sum(self._occ) + c.destroyed_count
            if now != self._initial_total_mass:
                raise SimulationError(
                    f"closed-window conservation broken: {now} != "
                    f"{self._initial_total_mass}")

    def _sync_config(self):
        self.config.occ = self.occupations()

    # -- main loop -------------------------------------------------------

    def run(self, t_end: float, observers=(), max_events=None) -> TrajectoryRecord:
        if t_end < self.time:
            raise ValueError("t_end before current time")
        wall0 = _time.perf_counter()
        budget = self.max_events if max_events is None else max_events
        events_start = self.n_events

        sched = sorted(
            (tt, k, ob) for k, ob in enumerate(observers)
            for tt in ob.times if self.time - 1e-15 <= tt <= t_end)
        si = 0

        nxt = self._ub.next
        occ = self._occ
        rates = self._rates
        scale = self._scale
        tree = self._tree
        upd = tree.update
        gt = self._gt
        n = self._n
        origin = self._origin
        p = self.params.p
        d0 = self._d0 if not self.instant_kill else 0.0
        closed = self.config.closed
        c = self.config
        log = math.log
        t = self.time
        total = self._total
        leak_cap = (self.leak_fraction *
                    max(self._initial_total_mass, 1)) if not closed else None

        while True:
            if total <= 1e-300:
                t_ev = t_end + 1.0
            else:
                t_ev = t - log(1.0 - nxt()) / total
            cut = t_ev if t_ev < t_end else t_end
            while si < len(sched) and sched[si][0] <= cut:
                self.time = sched[si][0]
                self._total = total
                self._sync_config()
                sched[si][2].notify(sched[si][0], self)
                si += 1
            if t_ev > t_end:
                t = t_end
                break
            t = t_ev

            x = tree.find(nxt() * total)
            nxt()  # channel draw; single-copy engine has one channel
            u = nxt()

            k = occ[x]
            if k <= 0:
                # numerically possible only through float underflow in the
                # tree; rebuild and skip
                self.time = t
                self._total = total
                self.verify_rates()
                total = self._total
                continue

            if x == origin and u < d0:
                occ[x] = k - 1
                c.destroyed_count += 1
                kn = k - 1
                delta = scale[x] * gt[kn] - rates[x]
                rates[x] += delta
                upd(x, delta)
                total += delta
            else:
                if x == origin:
                    go_right = u < d0 + (1.0 - d0) * p
                else:
                    go_right = u < p
                y = x + 1 if go_right else x - 1
                if y < 0 or y >= n:
                    if closed:
                        pass  # reflecting edge: move rejected
                    else:
                        occ[x] = k - 1
                        if y < 0:
                            c.exited_left += 1
                        else:
                            c.exited_right += 1
                        delta = scale[x] * gt[k - 1] - rates[x]
                        rates[x] += delta
                        upd(x, delta)
                        total += delta
                        if (c.exited_left + c.exited_right) > leak_cap:
                            self.time = t
                            self._total = total
                            self._sync_config()
                            raise LeakageError(
                                "open-window exits exceeded "
                                f"{self.leak_fraction:g} of the mass")
                else:
                    occ[x] = k - 1
                    ky = occ[y]
                    if y == origin and self.instant_kill:
                        c.destroyed_count += 1
                    else:
                        occ[y] = ky + 1
                        if ky + 2 >= len(gt):
                            self._ensure_g(ky + 2)
                            gt = self._gt
                        dy = scale[y] * gt[ky + 1] - rates[y]
                        rates[y] += dy
                        upd(y, dy)
                        total += dy
                    dx = scale[x] * gt[k - 1] - rates[x]
                    rates[x] += dx
                    upd(x, dx)
                    total += dx

            self.n_events += 1
            if self.n_events - events_start > budget:
                self.time = t
                self._total = total
                self._sync_config()
                raise EventBudgetError(f"exceeded {budget} events")
            if self.n_events % AUDIT_EVERY == 0:
                self.time = t
                self._total = total
                self._audit()
                rates = self._rates
                total = self._total

        self.time = t
        self._total = total
        self._audit()
        self._sync_config()
        return TrajectoryRecord(
            t_end=t, n_events=self.n_events - events_start,
            wall_time=_time.perf_counter() - wall0,
            destroyed_count=c.destroyed_count,
            exited_left=c.exited_left, exited_right=c.exited_right)


# -- initial conditions and observables ---------------------------------


def choose_window(support, params: ModelParams, t_end: float,
                  margin: float) -> tuple[int, int]:
    """Lattice window covering the initial support plus drift and margin."""
    if margin <= 0:
        raise ValueError("margin must be positive")
    s_min, s_max = support
    N = params.N
    lo = math.floor((s_min - margin) * N)
    hi = math.ceil((s_max + params.drift * t_end + margin) * N)
    return int(lo), int(hi)


def build_initial(rho0: DensityProfile, params: ModelParams,
                  window: tuple[int, int], rng: np.random.Generator,
                  closed: bool = False) -> Configuration:
    """Product-Poisson initial configuration with mean rho0(x/N)."""
    x_min, x_max = window
    if x_max < x_min:
        raise ValueError("empty window")
    xs = np.arange(x_min, x_max + 1)
    means = rho0(xs / params.N)
    occ = rng.poisson(means).astype(np.int64)
    return Configuration(x_min=int(x_min), occ=occ, closed=closed)


def block_average(occ: np.ndarray, ell: int) -> np.ndarray:
    """(2l+1)-site moving average of the occupation field."""
    if ell < 0:
        raise ValueError("block halfwidth must be non-negative")
    if 2 * ell + 1 > len(occ):
        raise ValueError("block wider than the window")
    kernel = np.full(2 * ell + 1, 1.0 / (2 * ell + 1))
    return np.convolve(occ.astype(float), kernel, mode="same")


def empirical_density(config: Configuration, params: ModelParams,
                      ell: int) -> DensityProfile:
    """Block-averaged empirical density on the macroscopic grid (du = 1/N)."""
    vals = block_average(config.occ, ell)
    return DensityProfile(u_min=config.x_min / params.N, du=1.0 / params.N,
                          values=vals)
