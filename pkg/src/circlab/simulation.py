"""Seeded Euler-Maruyama simulation of circle diffusions on the lifted line.

Paths are generated independently from counter-based streams (see
``circlab.rng``), so every result is a pure function of (model, config,
path index) and batches are identical for any worker count.
"""

from __future__ import annotations

import functools
import hashlib
import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from . import rng as streams
from .analytics import _profiles, affinity, psi_function, stationary_density
from .cycles import CycleEventLog
from .model import model_hash

UNTIL_FIRST_CYCLE = "until-first-cycle"
TABLE_SIZE = 2**14
WORKERS_ENV = "CIRCLAB_WORKERS"
_FIRST_BLOCK = 4096
_MAX_BLOCK = 2**16


class SimulationError(RuntimeError):
    pass


class BatchError(SimulationError):
    """Per-path failures of a batch, keyed by path index."""

    def __init__(self, failures):
        self.failures = dict(failures)
        detail = "; ".join(f"path {i}: {e}" for i, e in sorted(self.failures.items())[:5])
        super().__init__(f"{len(self.failures)} path(s) failed: {detail}")


@dataclass(frozen=True)
class SimulationConfig:
    """Discretisation, horizon and seeding of a Monte Carlo run.

    ``horizon`` is a positive time or ``"until-first-cycle"``. With
    ``censoring_time=None`` first-passage runs are capped at
    ``200 / min(1, sigma_min**2)``.
    """

    step_size: float = 1e-4
    horizon: float | str = UNTIL_FIRST_CYCLE
    n_paths: int = 1
    master_seed: int = 0
    start_point: float = 0.0
    censoring_time: float | None = None
    stationary_start: bool = False
    bridge_correction: bool = False

    def __post_init__(self):
        if not 0 < self.step_size < 1:
            raise ValueError("step_size must lie in (0, 1)")
        if self.horizon != UNTIL_FIRST_CYCLE:
            h = float(self.horizon)
            if h < 0 or not np.isfinite(h):
                raise ValueError("horizon must be a non-negative finite time")
            if h / self.step_size >= 2**63:
                raise ValueError("horizon / step_size overflows a 64-bit step count")
            object.__setattr__(self, "horizon", h)
        if int(self.n_paths) < 1:
            raise ValueError("n_paths must be positive")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.censoring_time is not None and self.censoring_time <= 0:
            raise ValueError("censoring_time must be positive")

    @property
    def first_cycle(self):
        return self.horizon == UNTIL_FIRST_CYCLE

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, spec):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(spec) - known
        if unknown:
            raise ValueError(f"unknown simulation keys: {sorted(unknown)}")
        return cls(**spec)


def config_hash(config):
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True, eq=False)
class PathRecord:
    times: np.ndarray
    positions: np.ndarray
    seed: tuple
    model_hash: str

    @property
    def start_point(self):
        return float(self.positions[0])

    @property
    def horizon(self):
        return float(self.times[-1])


class FirstCycle(NamedTuple):
    T: float
    sign: int


class Censored(NamedTuple):
    censoring_time: float


@dataclass(frozen=True, eq=False)
class CycleRun:
    """Streaming summary of one path: its cycle log and end points.

    ``entropy_integral`` is the midpoint sum of ``F'(X) o dX`` (nan unless
    requested), so ``entropy_integral / horizon`` is the empirical entropy
    production rate.
    """

    path_index: int
    log: CycleEventLog
    start: float
    end: float
    entropy_integral: float = float("nan")


@dataclass(frozen=True, eq=False)
class _Tables:
    b: np.ndarray
    s: np.ndarray
    sigma_min: float
    fprime: np.ndarray = field(default=None)
    cdf_grid: np.ndarray = field(default=None)
    cdf: np.ndarray = field(default=None)


def _table(coeff):
    if coeff.is_constant:
        return np.array([float(coeff(0.0))])
    grid = np.arange(TABLE_SIZE + 1) / TABLE_SIZE
    vals = coeff(grid)
    vals[-1] = vals[0]
    return np.ascontiguousarray(vals)


@functools.lru_cache(maxsize=32)
def _tables(model):
    grid = np.arange(TABLE_SIZE + 1) / TABLE_SIZE
    sigma_min = float(np.min(model.sigma(grid)))
    return _Tables(_table(model.drift), _table(model.diffusion), sigma_min)


def entropy_integrand(model):
    """Vectorised ``F'(x) = 2 b/a - (log a rho)'``, computed as ``-2 c / (a rho)``."""
    psi = psi_function(model)
    c = stationary_density(model, 257).flux_constant
    return lambda x: -2.0 * c / psi(x)


def entropy_antiderivative(model):
    """``F(x) = int_0^x 2b/a - log(a rho)(x) + log(a rho)(0)`` on the whole line."""
    prof = _profiles(model)
    psi = psi_function(model)
    log_psi0 = float(np.log(psi(0.0)))
    return lambda x: -prof.potential(np.asarray(x, dtype=float)) - np.log(psi(x)) + log_psi0


@functools.lru_cache(maxsize=32)
def _stationary_tables(model):
    base = _tables(model)
    grid = np.arange(TABLE_SIZE + 1) / TABLE_SIZE
    fprime = entropy_integrand(model)(grid)
    fprime[-1] = fprime[0]
    if np.allclose(fprime, fprime[0], rtol=0, atol=1e-13):
        fprime = np.array([fprime[0]])
    sol = stationary_density(model, TABLE_SIZE + 1)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (sol.density[1:] + sol.density[:-1]) * np.diff(sol.grid))])
    cdf /= cdf[-1]
    return replace(base, fprime=np.ascontiguousarray(fprime), cdf_grid=sol.grid, cdf=cdf)


def default_censoring_time(model):
    return 200.0 / min(1.0, _tables(model).sigma_min ** 2)


def _start_point(model, config, path_index):
    if not config.stationary_start:
        return float(config.start_point)
    tabs = _stationary_tables(model)
    u = streams.stream(config.master_seed, path_index, streams.START).random()
    return float(np.interp(u, tabs.cdf, tabs.cdf_grid))


class _Runner:
    """Drives ``_kernels.advance`` over growing blocks of one path's stream."""

    def __init__(self, model, config, path_index, record=False, entropy=False, stop_after_event=False,
                 max_time=None, min_stop_time=0.0):
        if not 0 <= path_index < 2**64:
            raise ValueError("path_index out of range")
        self.config = config
        self.path_index = path_index
        tabs = _stationary_tables(model) if (entropy or config.stationary_start) else _tables(model)
        self.b_tab, self.s_tab = tabs.b, tabs.s
        self.f_tab = tabs.fprime if entropy else np.zeros(0)
        self.dt = config.step_size
        self.x0 = _start_point(model, config, path_index)
        self.stop_after_event = stop_after_event
        if max_time is None:
            max_time = float(config.horizon)
        self.max_time = max_time
        self.n_full = int(np.floor(max_time / self.dt + 1e-9))
        rem = max_time - self.n_full * self.dt
        if rem < 1e-9 * self.dt:
            rem = 0.0
        self.remainder = rem
        self.min_stop_step = int(np.ceil(min_stop_time / self.dt - 1e-9)) if min_stop_time > 0 else 0
        self.z_stream = streams.stream(config.master_seed, path_index, streams.INCREMENTS)
        self.u_stream = streams.stream(config.master_seed, path_index, streams.BRIDGE) if config.bridge_correction else None
        self.istate = np.zeros(3, dtype=np.int64)
        self.fstate = np.array([self.x0, self.x0, 0.0])
        self.ev_t = np.empty(64)
        self.ev_s = np.empty(64, dtype=np.int8)
        self.record = record
        self.rec = np.empty(_FIRST_BLOCK + 1) if record else np.zeros(0)
        if record:
            self.rec[0] = self.x0

    def _draw(self, n):
        z = self.z_stream.standard_normal(n)
        u = self.u_stream.random(n) if self.u_stream is not None else np.zeros(0)
        return z, u

    def _grow_rec(self, need):
        if self.record and self.rec.size < need:
            new = np.empty(max(need, 2 * self.rec.size))
            new[: self.rec.size] = self.rec
            self.rec = new

    def _call(self, z, u, dt, t_origin, k_origin, max_step):
        while True:
            code = K.advance(
                z, u, self.istate, self.fstate, dt, t_origin, k_origin, max_step,
                self.stop_after_event, self.min_stop_step,
                self.b_tab, self.s_tab, self.f_tab, self.ev_t, self.ev_s, self.rec,
            )
            if code == K.BUFFER_FULL:
                self.ev_t = np.concatenate([self.ev_t, np.empty(self.ev_t.size)])
                self.ev_s = np.concatenate([self.ev_s, np.empty(self.ev_s.size, dtype=np.int8)])
                continue
            if code == K.NONFINITE:
                raise SimulationError(f"non-finite state at step {int(self.istate[K.STEP])}")
            return code

    def run(self):
        """Run to the horizon or the first event; returns True if stopped by an event."""
        block = _FIRST_BLOCK
        while int(self.istate[K.STEP]) < self.n_full:
            n = min(block, self.n_full - int(self.istate[K.STEP]))
            self._grow_rec(int(self.istate[K.STEP]) + n + 2)
            z, u = self._draw(n)
            self.istate[K.ZPOS] = 0
            code = self._call(z, u, self.dt, 0.0, 0, self.n_full)
            if code == K.STOPPED:
                return True
            block = min(2 * block, _MAX_BLOCK)
        if self.remainder > 0:
            self._grow_rec(self.n_full + 3)
            z, u = self._draw(1)
            self.istate[K.ZPOS] = 0
            code = self._call(z, u, self.remainder, self.n_full * self.dt, self.n_full, self.n_full + 1)
            if code == K.STOPPED:
                return True
        return False

    @property
    def n_steps(self):
        return int(self.istate[K.STEP])

    def events(self):
        n = int(self.istate[K.NEVENTS])
        return self.ev_t[:n].copy(), self.ev_s[:n].copy()

    def times(self):
        k = self.n_steps
        t = np.arange(k + 1) * self.dt
        if k > self.n_full:
            t[-1] = self.max_time
        return t

    def positions(self):
        return self.rec[: self.n_steps + 1].copy()


def _censor_time(model, config):
    return config.censoring_time if config.censoring_time is not None else default_censoring_time(model)


def simulate_path(model, config, path_index, min_time=0.0):
    """Record one Euler-Maruyama trajectory.

    With a numeric horizon the path covers ``[0, horizon]`` on the uniform grid
    (last step shortened to land on the horizon). With ``"until-first-cycle"``
    it stops at the first step completing a cycle, but not before
    ``min_time``, or at the censoring time.
    """
    if path_index >= config.n_paths:
        raise ValueError(f"path_index {path_index} >= n_paths {config.n_paths}")
    if config.first_cycle:
        r = _Runner(model, config, path_index, record=True, stop_after_event=True,
                    max_time=max(_censor_time(model, config), min_time), min_stop_time=min_time)
    else:
        r = _Runner(model, config, path_index, record=True)
    r.run()
    return PathRecord(r.times(), r.positions(), (int(config.master_seed), int(path_index)), model_hash(model))


def simulate_first_cycle(model, config, path_index):
    """Return ``FirstCycle(T, sign)`` or ``Censored`` for one path."""
    if path_index >= config.n_paths:
        raise ValueError(f"path_index {path_index} >= n_paths {config.n_paths}")
    cens = _censor_time(model, config)
    r = _Runner(model, config, path_index, stop_after_event=True, max_time=cens)
    if not r.run():
        return Censored(cens)
    t, s = r.events()
    return FirstCycle(float(t[0]), int(s[0]))


def simulate_cycles(model, config, path_index, entropy=False):
    """Stream one path to the horizon, keeping only its cycle log and end points."""
    if config.first_cycle:
        raise ValueError("simulate_cycles needs a numeric horizon")
    if path_index >= config.n_paths:
        raise ValueError(f"path_index {path_index} >= n_paths {config.n_paths}")
    r = _Runner(model, config, path_index, entropy=entropy)
    r.run()
    t, s = r.events()
    log = CycleEventLog(t, s, float(config.horizon), r.x0)
    integral = float(r.fstate[K.STRAT]) if entropy else float("nan")
    return CycleRun(path_index, log, r.x0, float(r.fstate[K.X]), integral)


def worker_count(workers=None):
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


_KINDS = {
    "path": simulate_path,
    "first_cycle": simulate_first_cycle,
    "cycles": simulate_cycles,
}


def ordered_map(fn, indices, workers=None):
    """Apply ``fn`` to each index, returning results in index order.

    Exceptions are collected per index and raised together as ``BatchError``.
    """
    indices = list(indices)

    def one(i):
        try:
            return fn(i), None
        except Exception as exc:  # collected per path
            return None, exc

    n_workers = worker_count(workers)
    if n_workers == 1 or len(indices) < 2:
        out = [one(i) for i in indices]
    else:
        chunk = max(1, len(indices) // (4 * n_workers))
        with ThreadPoolExecutor(n_workers) as pool:
            out = list(pool.map(one, indices, chunksize=chunk))
    failures = {i: e for i, (_, e) in zip(indices, out) if e is not None}
    if failures:
        raise BatchError(failures)
    return [r for r, _ in out]


def simulate_batch(model, config, kind="path", workers=None, indices=None, **kwargs):
    """Run ``config.n_paths`` paths and return results ordered by path index.

    ``kind`` is ``"path"`` (``PathRecord``), ``"first_cycle"`` (``FirstCycle`` or
    ``Censored``) or ``"cycles"`` (``CycleRun``). Failures are collected and
    raised together as ``BatchError``.
    """
    func = _KINDS[kind]
    if indices is None:
        indices = range(config.n_paths)
    return ordered_map(lambda i: func(model, config, i, **kwargs), indices, workers)


def first_cycle_arrays(results):
    """Split first-cycle results into ``(T, sign, n_censored)`` arrays."""
    done = [r for r in results if isinstance(r, FirstCycle)]
    T = np.array([r.T for r in done])
    sign = np.array([r.sign for r in done], dtype=np.int8)
    return T, sign, len(results) - len(done)


def convergence_study(model, config, statistic, factors=(1, 2, 4), kind="first_cycle", **kwargs):
    """Evaluate ``statistic(results)`` at step sizes dt, dt/2, dt/4, ...

    Returns a list of ``(step_size, value)`` pairs.
    """
    out = []
    for f in factors:
        cfg = replace(config, step_size=config.step_size / f)
        out.append((cfg.step_size, statistic(simulate_batch(model, cfg, kind=kind, **kwargs))))
    return out


_MAGIC = b"CIRCPATH"


def dump_paths(paths, config, path):
    """Binary dump: magic, JSON header (model hash, config), then per path
    ``uint64 n`` followed by ``n`` float64 times and ``n`` float64 positions."""
    header = json.dumps(
        {"model_hash": paths[0].model_hash if paths else "", "config": config.to_dict(), "n_paths": len(paths)},
        sort_keys=True,
    ).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for p in paths:
            fh.write(struct.pack("<Q", p.times.size))
            fh.write(np.ascontiguousarray(p.times, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(p.positions, dtype="<f8").tobytes())


def load_paths(path):
    """Inverse of ``dump_paths``: returns ``(header, [(times, positions), ...])``."""
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError("not a path dump")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen))
        out = []
        for _ in range(header["n_paths"]):
            (n,) = struct.unpack("<Q", fh.read(8))
            t = np.frombuffer(fh.read(8 * n), dtype="<f8")
            x = np.frombuffer(fh.read(8 * n), dtype="<f8")
            out.append((t, x))
    return header, out


def write_paths_csv(paths, path):
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path_id", "t", "x"])
        for pid, p in enumerate(paths):
            for t, x in zip(p.times, p.positions):
                writer.writerow([pid, repr(float(t)), repr(float(x))])
