"""Experiment orchestration: replica runs, comparison metrics, suites.

An ExperimentSpec bundles everything needed to reproduce a comparison
between the particle system and a macroscopic target (finite-volume
solution or linear-case closed form).  Outputs are deterministic given
the seed: CSV rows in fixed order with 12 significant digits and a JSON
sidecar carrying the full spec.  Suites are plain text files of
key=value blocks separated by blank lines; ZRH_THREADS caps worker
processes for replica-parallel runs.
"""
from __future__ import annotations

import json
import math
import os
import time as _time
from dataclasses import asdict, dataclass, field

import numpy as np

from .engine import (ModelParams, SnapshotObserver, build_initial,
                     choose_window, empirical_density)
from .oracle import LinearCaseParams, exact_linear_solution
from .pde import compose_theorem_solution
from .profiles import DensityProfile
from .rates import rate_from_spec
from .rng import replica_stream
from .thermo import ThermoTable

#: default half-width of the exclusion zones around the singular lines
SINGULAR_DELTA = 0.05


def worker_count() -> int:
    """Parallelism cap from ZRH_THREADS (default 1, serial)."""
    try:
        return max(int(os.environ.get("ZRH_THREADS", "1")), 1)
    except ValueError:
        return 1


@dataclass
class ExperimentSpec:
    name: str
    rate: str = "linear"
    p: float = 0.75
    alpha: float = 1.0
    beta: float = 0.0
    N: tuple = (100,)
    rho0: str = "-1:0:1"
    times: tuple = (0.8,)
    ell: int = 10
    replicas: int = 10
    seed: int = 0
    du: float = 0.01
    target: str = "oracle"  # pde | oracle | none
    tolerance: float = 0.1
    interval: tuple = (-2.0, 2.0)
    exclude_singular: bool = True
    delta: float = SINGULAR_DELTA
    margin: float = 0.5
    closed: bool = False

    def __post_init__(self):
        if self.target not in ("pde", "oracle", "none"):
            raise ValueError(f"unknown comparison target {self.target!r}")
        if self.target == "oracle" and self.rate != "linear":
            raise ValueError("the closed-form target needs the linear rate")
        # validate the pieces parse before any run starts
        rate_from_spec(self.rate)
        DensityProfile.from_spec(self.rho0, du=self.du)

    def model_params(self, N: int) -> ModelParams:
        return ModelParams(p=self.p, alpha=self.alpha, beta=self.beta, N=N)

    def exclusions(self, t: float):
        if not self.exclude_singular:
            return ()
        s = (2 * self.p - 1) * t
        return ((-self.delta, self.delta), (s - self.delta, s + self.delta))


@dataclass
class ComparisonEntry:
    N: int
    t: float
    distance: float
    se: float
    tolerance: float
    wall_time: float

    @property
    def passed(self) -> bool:
        return self.distance <= self.tolerance


@dataclass
class ComparisonReport:
    spec: ExperimentSpec
    entries: list = field(default_factory=list)
    mean_profiles: dict = field(default_factory=dict)  # (N, t) -> profile

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def summary_lines(self):
        lines = []
        for e in self.entries:
            lines.append(
                f"{self.spec.name}  N={e.N:<5d} t={e.t:<6g} "
                f"L1={e.distance:.6f} (se {e.se:.6f}, tol {e.tolerance:g}) "
                f"{'PASS' if e.passed else 'FAIL'}")
        return lines


def _run_replica(args):
    """One replica: returns (replica_index, [(t, DensityProfile), ...])."""
    spec, N, rep = args
    params = spec.model_params(N)
    rho0 = DensityProfile.from_spec(spec.rho0, du=spec.du)
    t_max = max(spec.times)
    window = choose_window(rho0.support(), params, t_max, spec.margin)
    rng = replica_stream(spec.seed, rep)
    cfg = build_initial(rho0, params, window, rng, closed=spec.closed)
    from .engine import EventEngine
    eng = EventEngine(cfg, params, rate_from_spec(spec.rate), rng)
    obs = SnapshotObserver(spec.times)
    eng.run(t_max, observers=[obs])
    out = []
    for t, occ in obs.snapshots:
        c = cfg.copy()
        c.occ = occ
        out.append((t, empirical_density(c, params, spec.ell)))
    return rep, out


def run_replicas(spec: ExperimentSpec, N: int):
    """All replicas for one N; results ordered by replica index."""
    jobs = [(spec, N, rep) for rep in range(spec.replicas)]
    workers = worker_count()
    if workers > 1 and len(jobs) > 1:
        import multiprocessing as mp
        with mp.get_context("spawn").Pool(workers) as pool:
            results = pool.map(_run_replica, jobs)
    else:
        results = [_run_replica(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    return [profiles for _, profiles in results]


def _target_callable(spec: ExperimentSpec, params: ModelParams, t: float,
                     pde_solution):
    if spec.target == "oracle":
        rho0 = DensityProfile.from_spec(spec.rho0, du=spec.du)
        lin = LinearCaseParams(params)
        return lambda u: exact_linear_solution(rho0, lin, t, u)
    if spec.target == "pde":
        return pde_solution.at_time(t)
    return None


def compare(spec: ExperimentSpec) -> ComparisonReport:
    """Run the experiment and measure L1 distances to the target.

    The metric lives on ``spec.interval`` minus delta-neighborhoods of
    the singular lines u = 0 and u = (2p-1)t when exclusion is on.
    A report is produced even when entries fail.
    """
    report = ComparisonReport(spec=spec)
    for N in spec.N:
        params = spec.model_params(N)
        wall0 = _time.perf_counter()
        replica_profiles = run_replicas(spec, N)
        pde_solution = None
        if spec.target == "pde":
            rho0 = DensityProfile.from_spec(spec.rho0, du=spec.du)
            thermo = ThermoTable(rate_from_spec(spec.rate),
                                 rho_max=max(4.0, 2 * rho0.values.max()))
            pde_solution = compose_theorem_solution(
                spec.beta, rho0, params, thermo, max(spec.times), du=spec.du)
        for ti, t in enumerate(spec.times):
            profs = [pr[ti][1] for pr in replica_profiles]
            mean_vals = np.mean([p.values for p in profs], axis=0)
            mean_prof = DensityProfile(profs[0].u_min, profs[0].du, mean_vals)
            report.mean_profiles[(N, t)] = mean_prof
            target = _target_callable(spec, params, t, pde_solution)
            u_lo, u_hi = spec.interval
            excl = spec.exclusions(t)
            if target is None:
                dist, se = 0.0, 0.0
            else:
                dist = mean_prof.l1_distance(target, u_lo, u_hi,
                                             exclude=excl)
                per = [p.l1_distance(target, u_lo, u_hi, exclude=excl)
                       for p in profs]
                se = (float(np.std(per, ddof=1))
                      / math.sqrt(len(per))) if len(per) > 1 else 0.0
            report.entries.append(ComparisonEntry(
                N=N, t=t, distance=dist, se=se, tolerance=spec.tolerance,
                wall_time=_time.perf_counter() - wall0))
    return report


# -- output formats ------------------------------------------------------


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def write_density_csv(path, report: ComparisonReport):
    """CSV of (N, t, u, density) for the replica-averaged profiles."""
    with open(path, "w") as f:
        f.write("N,t,u,density\n")
        for (N, t), prof in sorted(report.mean_profiles.items()):
            for u, v in zip(prof.centers, prof.values):
                f.write(f"{N},{_fmt(t)},{_fmt(u)},{_fmt(v)}\n")


def write_report_json(path, report: ComparisonReport):
    doc = {
        "spec": asdict(report.spec),
        "entries": [
            {"N": e.N, "t": e.t, "distance": e.distance, "se": e.se,
             "tolerance": e.tolerance, "passed": e.passed,
             "wall_time_s": round(e.wall_time, 3)}
            for e in report.entries],
        "passed": report.passed,
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True, default=list)
        f.write("\n")


# -- suite files ---------------------------------------------------------


class SuiteParseError(ValueError):
    pass


_FIELD_TYPES = {
    "p": float, "alpha": float, "beta": float, "ell": int,
    "replicas": int, "seed": int, "du": float, "tolerance": float,
    "delta": float, "margin": float, "closed": bool,
    "exclude_singular": bool,
}


def _parse_value(key, raw, lineno):
    raw = raw.strip()
    if key in ("N",):
        try:
            return tuple(int(x) for x in raw.split(","))
        except ValueError:
            raise SuiteParseError(f"line {lineno}: bad integer list {raw!r}")
    if key in ("times", "interval"):
        try:
            return tuple(float(x) for x in raw.split(","))
        except ValueError:
            raise SuiteParseError(f"line {lineno}: bad number list {raw!r}")
    typ = _FIELD_TYPES.get(key, str)
    if typ is bool:
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        raise SuiteParseError(f"line {lineno}: bad boolean {raw!r}")
    try:
        return typ(raw)
    except ValueError:
        raise SuiteParseError(f"line {lineno}: bad {typ.__name__} {raw!r}")


def parse_suite(path) -> list[ExperimentSpec]:
    """Key=value blocks separated by blank lines; '#' starts a comment."""
    blocks = []
    current = {}
    start_line = None
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                if current:
                    blocks.append((start_line, current))
                    current = {}
                continue
            if "=" not in line:
                raise SuiteParseError(f"line {lineno}: expected key=value, "
                                      f"got {line!r}")
            key, raw = line.split("=", 1)
            key = key.strip()
            if not current:
                start_line = lineno
            current[key] = _parse_value(key, raw, lineno)
    if current:
        blocks.append((start_line, current))
    specs = []
    for start, block in blocks:
        if "name" not in block:
            raise SuiteParseError(f"line {start}: experiment without a name")
        try:
            specs.append(ExperimentSpec(**block))
        except (TypeError, ValueError) as e:
            raise SuiteParseError(f"line {start}: {e}")
    return specs


def run_suite(path, out_dir=None) -> int:
    """Run every experiment in the suite; exit code 0 iff all pass."""
    specs = parse_suite(path)
    all_passed = True
    lines = []
    for spec in specs:
        report = compare(spec)
        lines.extend(report.summary_lines())
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            base = os.path.join(out_dir, spec.name)
            write_density_csv(base + ".csv", report)
            write_report_json(base + ".json", report)
        if not report.passed:
            all_passed = False
    print("\n".join(lines) if lines else "empty suite")
    return 0 if all_passed else 1
