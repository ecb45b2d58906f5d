"""Deterministic (RK4) and stochastic (Gillespie direct method) simulation.

Kinetic laws are used verbatim as ODE rates and as SSA propensities; amounts
are individual counts.  Laws are compiled once into a small Python function
over a species vector ``x`` and a parameter vector ``p``.

Random numbers: replicate ``r`` of a run seeded with ``seed`` draws from
``numpy.random.PCG64(SeedSequence(seed, spawn_key=(r,)))``, the same stream
``SeedSequence(seed).spawn`` hands out.  Waiting times use inverse-transform
sampling, ``tau = -log(u) / a0`` with ``u`` in (0, 1].
"""

from __future__ import annotations

import bisect
import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence, TextIO, Union

import numpy as np

from .analysis import errors, validate
from .errors import (
    EpinarrError, NonIntegerInitialAmount, NumericalBlowup, ValidationFailed,
)
from .expr import Add, Div, Expr, Mul, Number, Pow, Sub, Symbol, eval_expr
from .model import (
    Model, SymbolKind, bare_species_map, derive_reactions, parameter_env,
    resolve_symbol, stoichiometry_matrix,
)

BLOWUP_LIMIT = 1e300


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    dt: float = 0.01
    output_every: Optional[float] = None
    replicates: int = 1
    seed: int = 0

    def __post_init__(self):
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError("t_end must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.output_every is not None and not 0 < self.output_every <= self.t_end:
            raise ValueError("output_every must lie in (0, t_end]")
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ValueError("replicates must be a positive integer")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def sample_times(self, every: float) -> list[float]:
        n = int(math.floor(self.t_end / every + 1e-9))
        times = [k * every for k in range(n + 1)]
        if times[-1] >= self.t_end - 1e-9 * self.t_end:
            times[-1] = self.t_end
        else:
            times.append(self.t_end)
        return times


class Trajectory:
    """Species amounts sampled over time; ``amounts[i]`` belongs to ``times[i]``."""

    def __init__(self, species_order: Sequence[str], times, amounts):
        self.species_order = tuple(species_order)
        self.times = np.asarray(times, dtype=float)
        self.amounts = np.asarray(amounts, dtype=float).reshape(len(self.times),
                                                               len(self.species_order))

    @property
    def rows(self) -> list[tuple[float, list[float]]]:
        return [(float(t), a.tolist()) for t, a in zip(self.times, self.amounts)]

    def column(self, species: str) -> np.ndarray:
        return self.amounts[:, self.species_order.index(species)]

    def final(self, species: str) -> float:
        return float(self.column(species)[-1])

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (self.species_order == other.species_order
                and np.array_equal(self.times, other.times)
                and np.array_equal(self.amounts, other.amounts))

    def __repr__(self):
        return (f"Trajectory({len(self.species_order)} species, {len(self.times)} rows, "
                f"t_end={self.times[-1] if len(self.times) else None})")


def mean_trajectory(trajectories: Sequence[Trajectory]) -> Trajectory:
    first = trajectories[0]
    stacked = np.stack([t.amounts for t in trajectories])
    return Trajectory(first.species_order, first.times, stacked.mean(axis=0))


# --- compilation -------------------------------------------------------------

class _System:
    """Kinetic laws compiled against fixed species and parameter slots."""

    def __init__(self, model: Model):
        self.model = model
        self.reactions = derive_reactions(model)
        self.species = model.species_ids
        self.x_index = {g: i for i, g in enumerate(self.species)}
        params = parameter_env(model)
        self.param_names = list(params)
        self.loc_names = [l.name for l in model.locations]
        self.p_index = {n: i for i, n in enumerate(self.param_names)}
        for n in self.loc_names:
            self.p_index.setdefault(f"@{n}", len(self.p_index))
        self.p0 = [params[n] for n in self.param_names] + [0.0] * len(self.loc_names)
        self.refresh_sizes(self.p0)
        self._bare = bare_species_map(model)
        body = ", ".join(self._code(r.kinetic_law) for r in self.reactions)
        namespace = {"_pow": math.pow}
        exec(compile(f"def rates(x, p):\n    return [{body}]\n", "<kinetic laws>", "exec"),
             namespace)
        self.rates = namespace["rates"]
        self.stoich = stoichiometry_matrix(model)
        self.needs = [[(self.x_index[g], k) for g, k in r.reactants if g in self.x_index]
                      for r in self.reactions]
        self.changes = [[(i, self.stoich[i, j]) for i in range(len(self.species))
                         if self.stoich[i, j] != 0] for j in range(len(self.reactions))]

    def _code(self, expr: Expr) -> str:
        if isinstance(expr, Number):
            return f"({expr.value!r})"
        if isinstance(expr, Symbol):
            kind, name = resolve_symbol(self.model, expr.name, self._bare)
            if kind is SymbolKind.SPECIES:
                return f"x[{self.x_index[name]}]"
            if kind is SymbolKind.PARAMETER:
                return f"p[{self.p_index[name]}]"
            return f"p[{self.p_index['@' + name]}]"
        a, b = self._code(expr.left), self._code(expr.right)
        if isinstance(expr, Pow):
            return f"_pow({a}, {b})"
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(expr)]
        return f"({a} {op} {b})"

    def refresh_sizes(self, p: list) -> None:
        env = {n: p[self.p_index[n]] for n in reversed(self.param_names)}
        for loc in reversed(self.model.locations):
            p[self.p_index["@" + loc.name]] = eval_expr(loc.size, env)

    def env(self, x, p) -> dict:
        env = {}
        for loc in self.loc_names:
            env[loc] = p[self.p_index["@" + loc]]
        for n in self.param_names:
            env[n] = p[self.p_index[n]]
        for name, gid in self._bare.items():
            env[name] = x[self.x_index[gid]]
        for g, i in self.x_index.items():
            env[g] = x[i]
        return env

    def apply_event(self, event, x, p, t: float, integral: bool = False) -> None:
        env = self.env(x, p)
        try:
            values = [(target, eval_expr(v, env)) for target, v in event.assignments]
        except EpinarrError as exc:
            raise NumericalBlowup(t, f"event {event.name}: {exc}") from None
        for target, value in values:
            if target in self.x_index:
                if integral and (value < 0 or not float(value).is_integer()):
                    raise NonIntegerInitialAmount(target, value)
                x[self.x_index[target]] = int(value) if integral else value
            else:
                p[self.p_index[target]] = value
        self.refresh_sizes(p)


def _check(model: Model) -> None:
    problems = errors(validate(model))
    if problems:
        raise ValidationFailed(problems)


def _pending_events(model: Model, t_end: float) -> list:
    return sorted((e for e in model.events if e.trigger_time <= t_end),
                  key=lambda e: e.trigger_time)


# --- ODE ---------------------------------------------------------------------

def simulate_ode(model: Model, cfg: SimConfig) -> Trajectory:
    """Integrate dx/dt = S f(x) with classic fixed-step RK4.

    Integration stops exactly at every sample time and event time; within
    each stretch the step is ``dt``, shortened evenly to land on the
    stretch end.
    """
    _check(model)
    sysm = _System(model)
    every = cfg.output_every if cfg.output_every is not None else cfg.dt
    if cfg.dt > every:
        raise ValueError("dt must not exceed output_every")
    grid = cfg.sample_times(every)
    events = _pending_events(model, cfg.t_end)
    S = sysm.stoich
    p = list(sysm.p0)
    x = np.array([s.amount for s in model.system_equation], dtype=float)
    out = np.empty((len(grid), len(x)))

    def f(state):
        try:
            return S @ np.array(sysm.rates(state.tolist(), p), dtype=float)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise NumericalBlowup(t, f"rate evaluation failed: {exc}") from None

    t = 0.0
    k = 0
    ei = 0
    while True:
        while ei < len(events) and events[ei].trigger_time <= t:
            sysm.apply_event(events[ei], x, p, t)
            ei += 1
        while k < len(grid) and grid[k] <= t:
            out[k] = x
            k += 1
        if k == len(grid):
            break
        stop = grid[k]
        if ei < len(events):
            stop = min(stop, events[ei].trigger_time)
        n = max(1, math.ceil((stop - t) / cfg.dt - 1e-9))
        h = (stop - t) / n
        start = t
        for i in range(n):
            if not S.size:
                break
            k1 = f(x)
            k2 = f(x + 0.5 * h * k1)
            k3 = f(x + 0.5 * h * k2)
            k4 = f(x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t = start + (i + 1) * h
            if not np.all(np.isfinite(x)) or np.any(np.abs(x) > BLOWUP_LIMIT):
                raise NumericalBlowup(t, "species amount overflowed or became NaN")
        t = stop
    return Trajectory(sysm.species, grid, out)


# --- SSA ---------------------------------------------------------------------

def child_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(int(seed), spawn_key=(int(replicate),))))


class _Uniforms:
    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self.rng = rng
        self.block = block
        self.buf: list[float] = []

    def __call__(self) -> float:
        if not self.buf:
            self.buf = self.rng.random(self.block).tolist()
            self.buf.reverse()
        return self.buf.pop()


def _ssa_run(sysm: _System, model: Model, cfg: SimConfig, grid: list, rng) -> Trajectory:
    x = [int(s.amount) for s in model.system_equation]
    p = list(sysm.p0)
    events = _pending_events(model, cfg.t_end)
    out = np.empty((len(grid), len(x)))
    uniform = _Uniforms(rng)
    rates, needs, changes = sysm.rates, sysm.needs, sysm.changes
    t = 0.0
    k = 0
    ei = 0

    def fill(upto: float, inclusive: bool):
        nonlocal k
        end = (bisect.bisect_right if inclusive else bisect.bisect_left)(grid, upto)
        if end > k:
            out[k:end] = x
            k = end

    while True:
        while ei < len(events) and events[ei].trigger_time <= t:
            sysm.apply_event(events[ei], x, p, t, integral=True)
            ei += 1
        next_event = events[ei].trigger_time if ei < len(events) else math.inf
        try:
            a = rates(x, p)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise NumericalBlowup(t, f"propensity evaluation failed: {exc}") from None
        a0 = 0.0
        for j, aj in enumerate(a):
            if aj != aj or aj == math.inf:
                raise NumericalBlowup(t, f"propensity of {sysm.reactions[j].id} is {aj}")
            if aj < 0 or any(x[i] < kk for i, kk in needs[j]):
                a[j] = 0.0
            else:
                a0 += aj
        t_next = t - math.log(1.0 - uniform()) / a0 if a0 > 0 else math.inf
        if next_event <= cfg.t_end and t_next > next_event:
            fill(next_event, inclusive=False)
            t = next_event
            continue
        if t_next > cfg.t_end:
            fill(cfg.t_end, inclusive=True)
            break
        fill(t_next, inclusive=False)
        target = uniform() * a0
        acc = 0.0
        chosen = len(a) - 1
        for j, aj in enumerate(a):
            acc += aj
            if target < acc and aj > 0:
                chosen = j
                break
        while a[chosen] == 0:
            chosen -= 1
        for i, delta in changes[chosen]:
            x[i] += int(delta)
        t = t_next
    return Trajectory(sysm.species, grid, out)


def simulate_ssa(model: Model, cfg: SimConfig) -> list[Trajectory]:
    """Gillespie direct-method runs, one trajectory per replicate, in
    replicate order."""
    _check(model)
    for s in model.system_equation:
        if not s.amount.is_integer():
            raise NonIntegerInitialAmount(s.global_id, s.amount)
    sysm = _System(model)
    every = cfg.output_every if cfg.output_every is not None else cfg.t_end / 1000
    grid = cfg.sample_times(every)
    return [_ssa_run(sysm, model, cfg, grid, child_rng(cfg.seed, r))
            for r in range(cfg.replicates)]


# --- CSV ---------------------------------------------------------------------

def trajectory_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", *traj.species_order])
    for t, row in zip(traj.times.tolist(), traj.amounts.tolist()):
        w.writerow([repr(float(t)), *(repr(float(v)) for v in row)])
    return buf.getvalue()


def write_trajectory_csv(traj: Trajectory, destination: Union[str, os.PathLike, TextIO]) -> None:
    """Write ``time,<species...>`` rows; numbers use Python's shortest repr."""
    text = trajectory_csv(traj)
    if hasattr(destination, "write"):
        destination.write(text)
        return
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
