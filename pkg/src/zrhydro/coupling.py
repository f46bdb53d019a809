"""Coupled dynamics: second-class particles, two-copy basic coupling and
the labeled coupling for strong destruction, plus the statistics they
support (conversion counts, ordering defects, the microscopic entropy
functional, one-block statistic and Young-measure evaluations).

The two-copy engine consumes randomness in exactly the same pattern as
the single-copy engine (waiting time, site, channel, direction per
event), so with matched seeds and a degenerate second copy it reproduces
the single-engine trajectory byte for byte.
"""
from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass

import numpy as np

from .engine import (AUDIT_EVERY, Configuration, EventBudgetError,
                     LeakageError, ModelParams, SimulationError, SumTree,
                     TrajectoryRecord, block_average)
from .profiles import DensityProfile
from .rates import RateFunction
from .rng import UniformBlock
from .thermo import ThermoTable


@dataclass
class PairConfiguration:
    omega: Configuration
    varpi: Configuration

    def __post_init__(self):
        if (self.omega.x_min != self.varpi.x_min
                or len(self.omega.occ) != len(self.varpi.occ)):
            raise ValueError("coupled copies must share a window")
        if self.omega.closed != self.varpi.closed:
            raise ValueError("coupled copies must share the boundary mode")


def ordering_defect(omega: Configuration, varpi: Configuration,
                    x: int, y: int) -> int:
    """Indicator of an ordering defect between sites x and y."""
    ix, iy = x - omega.x_min, y - omega.x_min
    a1, b1 = omega.occ[ix], varpi.occ[ix]
    a2, b2 = omega.occ[iy], varpi.occ[iy]
    return int((a1 < b1 and a2 > b2) or (a1 > b1 and a2 < b2))


class PairSnapshotObserver:
    """Records (t, omega, varpi) occupation arrays."""

    def __init__(self, times):
        self.times = sorted(float(t) for t in times)
        self.snapshots: list[tuple[float, np.ndarray, np.ndarray]] = []

    def notify(self, t, engine):
        self.snapshots.append(
            (t, engine.occupations_omega(), engine.occupations_varpi()))


class BasicCouplingEngine:
    """Two copies evolving under the coupled generator.

    Shared moves fire at the minimum of the two site rates; each copy
    compensates with a solo channel at the rate difference, and the
    origin destruction splits the same way.  The per-site total is
    therefore scale * max(g(omega_x), g(varpi_x)).
    """

    def __init__(self, pair: PairConfiguration, params: ModelParams,
                 rate: RateFunction, rng: np.random.Generator,
                 leak_fraction: float = 1e-3,
                 max_events: int = 500_000_000,
                 order_guard: bool = False):
        self.pair = pair
        self.params = params
        self.rate = rate
        self.rng = rng
        self.leak_fraction = leak_fraction
        self.max_events = max_events
        self.time = 0.0
        self.n_events = 0
        self.order_violations = 0
        self.order_guard = order_guard

        self._a = [int(k) for k in pair.omega.occ]
        self._b = [int(k) for k in pair.varpi.occ]
        self._n = len(self._a)
        x0 = -pair.omega.x_min
        self._origin = x0 if 0 <= x0 < self._n else -1
        aNb = params.destruction_factor
        self._d0 = aNb / (1.0 + aNb)
        self._scale = [float(params.N)] * self._n
        if self._origin >= 0:
            self._scale[self._origin] = params.N * (1.0 + aNb)
        self._gt = list(rate.table(max(max(self._a, default=0),
                                       max(self._b, default=0)) + 2))
        self._rates = [self._scale[i] * max(self._gt[self._a[i]],
                                            self._gt[self._b[i]])
                       for i in range(self._n)]
        self._tree = SumTree(self._rates)
        self._total = math.fsum(self._rates)
        self._mass0 = (sum(self._a) + pair.omega.destroyed_count
                       + pair.omega.exited_left + pair.omega.exited_right,
                       sum(self._b) + pair.varpi.destroyed_count
                       + pair.varpi.exited_left + pair.varpi.exited_right)
        self._ub = UniformBlock(rng)
        if order_guard and any(a > b for a, b in zip(self._a, self._b)):
            raise ValueError("order guard requires omega <= varpi initially")

    def occupations_omega(self) -> np.ndarray:
        return np.array(self._a, dtype=np.int64)

    def occupations_varpi(self) -> np.ndarray:
        return np.array(self._b, dtype=np.int64)

    def _ensure_g(self, k):
        while k >= len(self._gt):
            self._gt = list(self.rate.table(2 * len(self._gt)))

    def _site_rate(self, i):
        return self._scale[i] * max(self._gt[self._a[i]], self._gt[self._b[i]])

    def verify_rates(self, rel_tol: float = 1e-9):
        fresh = [self._site_rate(i) for i in range(self._n)]
        root = math.fsum(fresh)
        if abs(root - self._total) > rel_tol * max(1.0, root):
            raise SimulationError("coupled sum-tree drifted")
        self._rates = fresh
        self._tree.rebuild(fresh)
        self._total = root

    def _sync(self):
        self.pair.omega.occ = self.occupations_omega()
        self.pair.varpi.occ = self.occupations_varpi()

    def run(self, t_end: float, observers=(), max_events=None) -> TrajectoryRecord:
        wall0 = _time.perf_counter()
        budget = self.max_events if max_events is None else max_events
        ev0 = self.n_events
        sched = sorted(
            (tt, k, ob) for k, ob in enumerate(observers)
            for tt in ob.times if self.time - 1e-15 <= tt <= t_end)
        si = 0

        nxt = self._ub.next
        a, b = self._a, self._b
        rates = self._rates
        scale = self._scale
        tree = self._tree
        upd = tree.update
        gt = self._gt
        n = self._n
        origin = self._origin
        p = self.params.p
        d0 = self._d0
        closed = self.pair.omega.closed
        ca, cb = self.pair.omega, self.pair.varpi
        guard = self.order_guard
        log = math.log
        t = self.time
        total = self._total
        leak_cap = self.leak_fraction * max(self._mass0[0] + self._mass0[1], 1)

        while True:
            if total <= 1e-300:
                t_ev = t_end + 1.0
            else:
                t_ev = t - log(1.0 - nxt()) / total
            cut = t_ev if t_ev < t_end else t_end
            while si < len(sched) and sched[si][0] <= cut:
                self.time = sched[si][0]
                self._total = total
                self._sync()
                sched[si][2].notify(sched[si][0], self)
                si += 1
            if t_ev > t_end:
                t = t_end
                break
            t = t_ev

            x = tree.find(nxt() * total)
            uch = nxt()
            u = nxt()

            ka, kb = a[x], b[x]
            ga, gb = gt[ka], gt[kb]
            mx = ga if ga > gb else gb
            if mx <= 0.0:
                self.time = t
                self._total = total
                self.verify_rates()
                rates = self._rates
                total = self._total
                continue
            mn = ga if ga < gb else gb
            r = uch * mx
            move_a = r < ga if r >= mn else True
            move_b = True if r < mn else r >= ga

            if x == origin and u < d0:
                if move_a:
                    a[x] = ka - 1
                    ca.destroyed_count += 1
                if move_b:
                    b[x] = kb - 1
                    cb.destroyed_count += 1
            else:
                if x == origin:
                    go_right = u < d0 + (1.0 - d0) * p
                else:
                    go_right = u < p
                y = x + 1 if go_right else x - 1
                if y < 0 or y >= n:
                    if not closed:
                        if move_a:
                            a[x] = ka - 1
                            if y < 0:
                                ca.exited_left += 1
                            else:
                                ca.exited_right += 1
                        if move_b:
                            b[x] = kb - 1
                            if y < 0:
                                cb.exited_left += 1
                            else:
                                cb.exited_right += 1
                        exits = (ca.exited_left + ca.exited_right
                                 + cb.exited_left + cb.exited_right)
                        if exits > leak_cap:
                            self.time = t
                            self._total = total
                            self._sync()
                            raise LeakageError("coupled window leakage")
                else:
                    if move_a:
                        a[x] = ka - 1
                        a[y] += 1
                    if move_b:
                        b[x] = kb - 1
                        b[y] += 1
                    top = max(a[y], b[y]) + 2
                    if top >= len(gt):
                        self._ensure_g(top)
                        gt = self._gt
                    dy = scale[y] * max(gt[a[y]], gt[b[y]]) - rates[y]
                    rates[y] += dy
                    upd(y, dy)
                    total += dy
                    if guard and (a[y] > b[y]):
                        self.order_violations += 1
                dx = scale[x] * max(gt[a[x]], gt[b[x]]) - rates[x]
                rates[x] += dx
                upd(x, dx)
                total += dx
                if guard and (a[x] > b[x]):
                    self.order_violations += 1
                self.n_events += 1
                if self.n_events - ev0 > budget:
                    self.time = t
                    self._total = total
                    self._sync()
                    raise EventBudgetError("coupled event budget exhausted")
                if self.n_events % AUDIT_EVERY == 0:
                    self.time = t
                    self._total = total
                    self.verify_rates()
                    rates = self._rates
                    total = self._total
                continue

            # destruction path rate updates
            dx = scale[x] * max(gt[a[x]], gt[b[x]]) - rates[x]
            rates[x] += dx
            upd(x, dx)
            total += dx
            if guard and (a[x] > b[x]):
                self.order_violations += 1
            self.n_events += 1
            if self.n_events - ev0 > budget:
                self.time = t
                self._total = total
                self._sync()
                raise EventBudgetError("coupled event budget exhausted")
            if self.n_events % AUDIT_EVERY == 0:
                self.time = t
                self._total = total
                self.verify_rates()
                rates = self._rates
                total = self._total

        self.time = t
        self._total = total
        self.verify_rates()
        self._sync()
        return TrajectoryRecord(
            t_end=t, n_events=self.n_events - ev0,
            wall_time=_time.perf_counter() - wall0,
            destroyed_count=ca.destroyed_count,
            exited_left=ca.exited_left, exited_right=ca.exited_right)


def run_basic_coupling(pair: PairConfiguration, params: ModelParams,
                       rate: RateFunction, t_end: float,
                       rng: np.random.Generator, observers=(),
                       **kwargs) -> BasicCouplingEngine:
    """Run the two-copy coupled dynamics; returns the engine for stats."""
    eng = BasicCouplingEngine(pair, params, rate, rng, **kwargs)
    eng.run(t_end, observers=observers)
    return eng


# -- second-class particles ---------------------------------------------


@dataclass
class SecondClassState:
    omega: Configuration
    zeta: Configuration
    conversions: int

    @property
    def k_t(self) -> int:
        """Current number of second-class particles."""
        return int(self.zeta.occ.sum())


def second_class_left_mass(state: SecondClassState, N: int) -> float:
    """N^{-1} * sum of second-class particles at sites <= 0."""
    xs = np.arange(state.zeta.x_min, state.zeta.x_min + len(state.zeta.occ))
    return float(state.zeta.occ[xs <= 0].sum()) / N


class SecondClassEngine:
    """(omega, zeta) process: destruction replaced by conversion.

    omega-particles jump at N g(omega_x); zeta-particles at
    N (g(omega_x + zeta_x) - g(omega_x)); at the origin an omega-particle
    converts to a zeta-particle at rate alpha N^{1+beta} g(omega_0).
    The sum omega + zeta is a plain zero-range trajectory.
    """

    def __init__(self, initial: Configuration, params: ModelParams,
                 rate: RateFunction, rng: np.random.Generator,
                 leak_fraction: float = 1e-3,
                 max_events: int = 500_000_000):
        self.params = params
        self.rate = rate
        self.time = 0.0
        self.n_events = 0
        self.conversions = 0
        self.leak_fraction = leak_fraction
        self.max_events = max_events

        self._w = [int(k) for k in initial.occ]
        self._z = [0] * len(self._w)
        self._n = len(self._w)
        self._x_min = initial.x_min
        self._closed = initial.closed
        x0 = -initial.x_min
        self._origin = x0 if 0 <= x0 < self._n else -1
        self._conv_rate = params.alpha * float(params.N) ** (1.0 + params.beta)
        self._N = float(params.N)
        self._gt = list(rate.table(max(self._w, default=0) + 2))
        self._rates = [self._site_rate_raw(i) for i in range(self._n)]
        self._tree = SumTree(self._rates)
        self._total = math.fsum(self._rates)
        self._mass0 = sum(self._w)
        self._exited = 0
        self._ub = UniformBlock(rng)

    def _ensure_g(self, k):
        while k >= len(self._gt):
            self._gt = list(self.rate.table(2 * len(self._gt)))

    def _site_rate_raw(self, i):
        tot = self._w[i] + self._z[i]
        self._ensure_g(tot + 1)
        r = self._N * self._gt[tot]
        if i == self._origin:
            r += self._conv_rate * self._gt[self._w[i]]
        return r

    def state(self) -> SecondClassState:
        return SecondClassState(
            omega=Configuration(self._x_min, np.array(self._w, dtype=np.int64),
                                self._closed),
            zeta=Configuration(self._x_min, np.array(self._z, dtype=np.int64),
                               self._closed),
            conversions=self.conversions)

    def verify_rates(self, rel_tol: float = 1e-9):
        fresh = [self._site_rate_raw(i) for i in range(self._n)]
        root = math.fsum(fresh)
        if abs(root - self._total) > rel_tol * max(1.0, root):
            raise SimulationError("second-class sum-tree drifted")
        self._rates = fresh
        self._tree.rebuild(fresh)
        self._total = root

    def run(self, t_end: float, observers=(), max_events=None):
        wall0 = _time.perf_counter()
        budget = self.max_events if max_events is None else max_events
        ev0 = self.n_events
        sched = sorted(
            (tt, k, ob) for k, ob in enumerate(observers)
            for tt in ob.times if self.time - 1e-15 <= tt <= t_end)
        si = 0

        nxt = self._ub.next
        w, z = self._w, self._z
        rates = self._rates
        tree = self._tree
        upd = tree.update
        gt = self._gt
        n = self._n
        origin = self._origin
        p = self.params.p
        N = self._N
        conv = self._conv_rate
        closed = self._closed
        log = math.log
        t = self.time
        total = self._total
        leak_cap = self.leak_fraction * max(self._mass0, 1)

        def site_rate(i):
            tot = w[i] + z[i]
            r = N * gt[tot]
            if i == origin:
                r += conv * gt[w[i]]
            return r

        while True:
            if total <= 1e-300:
                t_ev = t_end + 1.0
            else:
                t_ev = t - log(1.0 - nxt()) / total
            cut = t_ev if t_ev < t_end else t_end
            while si < len(sched) and sched[si][0] <= cut:
                self.time = sched[si][0]
                self._total = total
                sched[si][2].notify(sched[si][0], self)
                si += 1
            if t_ev > t_end:
                t = t_end
                break
            t = t_ev

            x = tree.find(nxt() * total)
            uch = nxt()
            u = nxt()

            kw, kz = w[x], z[x]
            tot_occ = kw + kz
            if tot_occ + 2 >= len(gt):
                self._ensure_g(tot_occ + 2)
                gt = self._gt
            gw = gt[kw]
            gwz = gt[tot_occ]
            if gwz < gw:
                raise SimulationError("rate monotonicity violated (H1)")
            site_total = N * gwz + (conv * gw if x == origin else 0.0)
            if site_total <= 0.0:
                self.time = t
                self._total = total
                self.verify_rates()
                rates = self._rates
                total = self._total
                continue
            r = uch * site_total
            moved = None
            if x == origin and r < conv * gw:
                # conversion: omega-particle becomes a second-class particle
                w[x] = kw - 1
                z[x] = kz + 1
                self.conversions += 1
            else:
                if x == origin:
                    r -= conv * gw
                if r < N * gw:
                    moved = "w"
                else:
                    moved = "z"
                y = x + 1 if u < p else x - 1
                if y < 0 or y >= n:
                    if not closed:
                        if moved == "w":
                            w[x] = kw - 1
                        else:
                            z[x] = kz - 1
                        self._exited += 1
                        if self._exited > leak_cap:
                            self.time = t
                            self._total = total
                            raise LeakageError("second-class window leakage")
                else:
                    if moved == "w":
                        w[x] = kw - 1
                        w[y] += 1
                    else:
                        z[x] = kz - 1
                        z[y] += 1
                    if w[y] + z[y] + 2 >= len(gt):
                        self._ensure_g(w[y] + z[y] + 2)
                        gt = self._gt
                    dy = site_rate(y) - rates[y]
                    rates[y] += dy
                    upd(y, dy)
                    total += dy
            dx = site_rate(x) - rates[x]
            rates[x] += dx
            upd(x, dx)
            total += dx

            self.n_events += 1
            if self.n_events - ev0 > budget:
                self.time = t
                self._total = total
                raise EventBudgetError("second-class event budget exhausted")
            if self.n_events % AUDIT_EVERY == 0:
                self.time = t
                self._total = total
                self.verify_rates()
                if closed:
                    if sum(w) + sum(z) != self._mass0:
                        raise SimulationError(
                            "pair-process mass conservation broken")
                rates = self._rates
                total = self._total

        self.time = t
        self._total = total
        self.verify_rates()
        if closed and sum(w) + sum(z) != self._mass0:
            raise SimulationError("pair-process mass conservation broken")
        return TrajectoryRecord(
            t_end=t, n_events=self.n_events - ev0,
            wall_time=_time.perf_counter() - wall0,
            destroyed_count=self.conversions,
            exited_left=0, exited_right=self._exited)


def run_second_class(initial: Configuration, params: ModelParams,
                     rate: RateFunction, t_end: float,
                     rng: np.random.Generator, observers=(),
                     **kwargs) -> SecondClassState:
    eng = SecondClassEngine(initial, params, rate, rng, **kwargs)
    eng.run(t_end, observers=observers)
    return eng.state()


# -- labeled coupling for strong destruction ----------------------------


class LabeledCouplingEngine:
    """Coupled (eta, omega): instant-kill process vs the beta = 1/2 process.

    eta <= omega pointwise; coupled pairs move together at N g(eta_x),
    uncoupled omega-particles at N (g(omega_x) - g(eta_x)).  The origin
    carries the combined channel at rate (N + alpha N^{3/2}) g(omega_0)
    with the three-way jump/jump/die split.  eta-particles reaching the
    origin die instantly.
    """

    def __init__(self, initial: Configuration, params: ModelParams,
                 rate: RateFunction, rng: np.random.Generator,
                 leak_fraction: float = 1e-3,
                 max_events: int = 500_000_000):
        self.params = params
        self.rate = rate
        self.time = 0.0
        self.n_events = 0
        N = float(params.N)
        self._N = N
        self._sqrtN = math.sqrt(N)
        self._kill_p = (params.alpha * self._sqrtN
                        / (1.0 + params.alpha * self._sqrtN))
        self._origin_scale = N * (1.0 + params.alpha * self._sqrtN)

        self._eta = [int(k) for k in initial.occ]
        self._omega = [int(k) for k in initial.occ]
        self._n = len(self._eta)
        self._x_min = initial.x_min
        self._closed = initial.closed
        x0 = -initial.x_min
        self._origin = x0 if 0 <= x0 < self._n else -1
        if self._origin >= 0:
            # eta-particles at the origin die at time zero
            self._eta[self._origin] = 0
        self._gt = list(rate.table(max(self._omega, default=0) + 2))
        self._rates = [self._site_rate_raw(i) for i in range(self._n)]
        self._tree = SumTree(self._rates)
        self._total = math.fsum(self._rates)
        self._mass0 = sum(self._omega)
        self._exited = 0
        self.leak_fraction = leak_fraction
        self.max_events = max_events
        self._ub = UniformBlock(rng)

    def _ensure_g(self, k):
        while k >= len(self._gt):
            self._gt = list(self.rate.table(2 * len(self._gt)))

    def _site_rate_raw(self, i):
        self._ensure_g(self._omega[i] + 1)
        if i == self._origin:
            return self._origin_scale * self._gt[self._omega[i]]
        return self._N * self._gt[self._omega[i]]

    def discrepancy(self) -> int:
        """Surviving uncoupled omega-particles: sum |eta - omega|."""
        return sum(o - e for o, e in zip(self._omega, self._eta))

    def verify_rates(self, rel_tol: float = 1e-9):
        fresh = [self._site_rate_raw(i) for i in range(self._n)]
        root = math.fsum(fresh)
        if abs(root - self._total) > rel_tol * max(1.0, root):
            raise SimulationError("labeled sum-tree drifted")
        self._rates = fresh
        self._tree.rebuild(fresh)
        self._total = root

    def run(self, t_end: float, max_events=None):
        budget = self.max_events if max_events is None else max_events
        ev0 = self.n_events
        nxt = self._ub.next
        eta, omg = self._eta, self._omega
        rates = self._rates
        tree = self._tree
        upd = tree.update
        gt = self._gt
        n = self._n
        origin = self._origin
        p = self.params.p
        N = self._N
        kill_p = self._kill_p
        closed = self._closed
        log = math.log
        t = self.time
        total = self._total
        leak_cap = self.leak_fraction * max(self._mass0, 1)

        while t < t_end:
            if total <= 1e-300:
                t = t_end
                break
            t_ev = t - log(1.0 - nxt()) / total
            if t_ev > t_end:
                t = t_end
                break
            t = t_ev

            x = tree.find(nxt() * total)
            uch = nxt()
            u = nxt()

            ko, ke = omg[x], eta[x]
            go = gt[ko]
            if go <= 0.0:
                self.time = t
                self._total = total
                self.verify_rates()
                rates = self._rates
                total = self._total
                continue

            if x == origin:
                # three-way split for an uncoupled particle at the origin
                if u < kill_p:
                    omg[x] = ko - 1
                else:
                    rest = (u - kill_p) / (1.0 - kill_p)
                    y = x + 1 if rest < p else x - 1
                    if y < 0 or y >= n:
                        if not closed:
                            omg[x] = ko - 1
                            self._exited += 1
                    else:
                        omg[x] = ko - 1
                        omg[y] += 1
                        if omg[y] + 2 >= len(gt):
                            self._ensure_g(omg[y] + 2)
                            gt = self._gt
                        dy = self._site_rate_raw(y) - rates[y]
                        rates[y] += dy
                        upd(y, dy)
                        total += dy
            else:
                coupled = uch * go < gt[ke]
                y = x + 1 if u < p else x - 1
                if y < 0 or y >= n:
                    if not closed:
                        omg[x] = ko - 1
                        if coupled:
                            eta[x] = ke - 1
                        self._exited += 1
                        if self._exited > leak_cap:
                            self.time = t
                            self._total = total
                            raise LeakageError("labeled window leakage")
                else:
                    omg[x] = ko - 1
                    omg[y] += 1
                    if coupled:
                        eta[x] = ke - 1
                        if y != origin:
                            eta[y] += 1
                        # arriving at the origin kills the eta-particle
                    if omg[y] + 2 >= len(gt):
                        self._ensure_g(omg[y] + 2)
                        gt = self._gt
                    dy = self._site_rate_raw(y) - rates[y]
                    rates[y] += dy
                    upd(y, dy)
                    total += dy
            dx = self._site_rate_raw(x) - rates[x]
            rates[x] += dx
            upd(x, dx)
            total += dx

            self.n_events += 1
            if self.n_events - ev0 > budget:
                self.time = t
                self._total = total
                raise EventBudgetError("labeled event budget exhausted")
            if self.n_events % AUDIT_EVERY == 0:
                self.time = t
                self._total = total
                self.verify_rates()
                rates = self._rates
                total = self._total

        self.time = t
        self._total = total
        self.verify_rates()
        return self.discrepancy()


def run_labeled_coupling(initial: Configuration, params: ModelParams,
                         rate: RateFunction, t_end: float,
                         rng: np.random.Generator, **kwargs) -> int:
    """Run the labeled dynamics; returns the surviving discrepancy count."""
    if params.beta < 1.0:
        raise ValueError("labeled coupling targets the beta >= 1 regime")
    eng = LabeledCouplingEngine(initial, params, rate, rng, **kwargs)
    return eng.run(t_end)


# -- statistics ----------------------------------------------------------


def micro_entropy_functional(snapshots, x_min: int, H, ell: int,
                             thermo: ThermoTable,
                             params: ModelParams) -> float:
    """Discretized microscopic entropy functional along a pair trajectory.

    ``snapshots`` is a list of (t, omega_occ, varpi_occ) on the common
    window starting at lattice site ``x_min``.  ``H`` is a smooth test
    function exposing ``dt(t, u)`` and ``du(t, u)``; if it also exposes
    a ``u_support`` interval, that interval must lie inside the window.
    Per-snapshot lattice sums

        N^{-1} sum_x { dtH |w^l_x - v^l_x|
                       + (2p-1) duH |Phi(w^l_x) - Phi(v^l_x)| }

    are combined with the trapezoid rule in time.
    """
    if len(snapshots) < 2:
        return 0.0
    N = params.N
    drift = params.drift
    n = len(snapshots[0][1])
    us = (np.arange(n) + x_min) / N
    sup = getattr(H, "u_support", None)
    if sup is not None and (sup[0] < us[0] or sup[1] > us[-1]):
        raise ValueError("test-function support exceeds the lattice window")
    rho_cap = thermo.covered_rho_max
    times = []
    vals = []
    for t, occ_a, occ_b in snapshots:
        a = block_average(occ_a, ell)
        b = block_average(occ_b, ell)
        pa = thermo.phi_of(np.minimum(a, rho_cap))
        pb = thermo.phi_of(np.minimum(b, rho_cap))
        s = (np.sum(H.dt(t, us) * np.abs(a - b))
             + drift * np.sum(H.du(t, us) * np.abs(pa - pb))) / N
        times.append(t)
        vals.append(s)
    return float(np.trapezoid(vals, times))


def one_block_statistic(config: Configuration, ell: int,
                        thermo: ThermoTable,
                        params: ModelParams) -> DensityProfile:
    """Per-site |block average of g - Phi(block average of occupations)|."""
    if ell < 1:
        raise ValueError("block halfwidth must be >= 1")
    occ = config.occ
    gvals = thermo.rate.table(int(occ.max(initial=0)) + 1)[occ]
    kernel = np.full(2 * ell + 1, 1.0 / (2 * ell + 1))
    g_block = np.convolve(gvals, kernel, mode="same")
    occ_block = block_average(occ, ell)
    v = np.abs(g_block - thermo.phi_of(np.minimum(occ_block,
                                                  thermo.covered_rho_max)))
    return DensityProfile(u_min=config.x_min / params.N, du=1.0 / params.N,
                          values=v)


def young_measure_eval(config: Configuration, params: ModelParams,
                       ell: int, G) -> float:
    """N^{-1} sum_{x > ell} G(x/N, block average at x)."""
    if ell < 1:
        raise ValueError("block halfwidth must be >= 1")
    occ_block = block_average(config.occ, ell)
    xs = np.arange(config.x_min, config.x_min + len(config.occ))
    mask = xs > ell
    total = 0.0
    for x, lam in zip(xs[mask], occ_block[mask]):
        total += G(x / params.N, lam)
    return total / params.N
