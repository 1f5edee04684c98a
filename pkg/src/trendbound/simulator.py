"""Monte Carlo exposure-agent diffusion and an exact enumerator for tiny graphs.

One run works in generations. Every node exposed during the previous step
(the seeds at step 0) spawns k agents, k ~ Poisson(beta) or round(beta). Each
agent hops once to a uniformly chosen neighbor, exposes it and expires.
After ``horizon`` steps every exposed non-seed node adopts independently with
probability 1 - exp(-(s_v + sum of w[v,u] over its distinct exposing friends)).
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import EnumerationLimitError, InputError, InvalidParameterError
from .graphmodel import Network
from .rng import RunStreams, derive_seed
from .trendmodel import AdoptionParams, ExposureRecord

POISSON = "poisson"
DETERMINISTIC = "deterministic"
AT_HORIZON = "horizon"
PER_STEP = "per-step"


@dataclass(frozen=True)
class SimConfig:
    horizon: int
    runs: int = 1000
    master_seed: int = 0
    beta_model: str = POISSON
    epsilon_grid: tuple[float, ...] = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
    adoption_time: str = AT_HORIZON
    workers: int = 1

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidParameterError("horizon must be >= 1")
        if self.runs < 1:
            raise InvalidParameterError("runs must be >= 1")
        if self.beta_model not in (POISSON, DETERMINISTIC):
            raise InvalidParameterError(f"unknown beta model {self.beta_model!r}")
        if self.adoption_time not in (AT_HORIZON, PER_STEP):
            raise InvalidParameterError(f"unknown adoption time {self.adoption_time!r}")
        object.__setattr__(self, "epsilon_grid", tuple(float(e) for e in self.epsilon_grid))
        if not self.epsilon_grid or any(not 0 < e <= 1 for e in self.epsilon_grid):
            raise InvalidParameterError("epsilon grid values must lie in (0, 1]")


@dataclass
class RunOutcome:
    exposure: ExposureRecord
    adopters: frozenset[int]
    agent_count_trace: list[int]
    events: list[tuple[int, int, int]] = field(default_factory=list)  # (step, source, target)


class CurvePoint(NamedTuple):
    epsilon: float
    p_hat: float
    ci_low: float
    ci_high: float
    runs: int


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if trials <= 0:
        raise InvalidParameterError("trials must be positive")
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


def _check_seeds(net: Network, seed_set: Iterable[int]) -> np.ndarray:
    seeds = np.unique(np.asarray(list(seed_set), dtype=np.int64))
    if seeds.size == 0:
        raise InputError("seed set must be non-empty")
    if seeds[0] < 0 or seeds[-1] >= net.n:
        raise InputError("seed node outside the network")
    return seeds


def _spawn_counts(beta, beta_model, size, rng):
    if beta_model == POISSON:
        return rng.poisson(beta, size)
    return int(math.floor(beta + 0.5))


def _simulate(net, seeds, is_seed, s, beta, beta_model, horizon, adoption_time, rng, record):
    """One run. Returns (adopter count, details or None)."""
    indptr, indices, rev, degrees = net.indptr, net.indices, net.rev, net.degrees
    frontier = seeds
    hits = []
    trace = []
    events = []
    adopted = None
    if adoption_time == PER_STEP:
        adopted = np.zeros(net.n, dtype=bool)
        seen = np.zeros(len(indices), dtype=bool)
        potential = np.zeros(net.n)
    for step in range(1, horizon + 1):
        if frontier.size == 0:
            trace.append(0)
            continue
        k = _spawn_counts(beta, beta_model, frontier.size, rng)
        src = np.repeat(frontier, k)
        trace.append(int(src.size))
        deg = degrees[src]
        live = deg > 0
        if not live.all():
            src, deg = src[live], deg[live]
        if src.size == 0:
            frontier = src
            continue
        slot = indptr[src] + (rng.random(src.size) * deg).astype(np.int64)
        dst = indices[slot]
        back = rev[slot]
        hits.append(back)
        if record:
            events.extend((step, int(a), int(b)) for a, b in zip(src, dst))
        frontier = np.unique(dst) if dst.size > 1 else dst
        if adopted is not None:
            new = back[~seen[back]]
            new = np.unique(new)
            seen[new] = True
            np.add.at(potential, net.slot_owner[new], net.slot_weight[new])
            cand = frontier[~is_seed[frontier] & ~adopted[frontier]]
            if cand.size:
                prob = -np.expm1(-(s[cand] + potential[cand]))
                adopted[cand[rng.random(cand.size) < prob]] = True

    if hits:
        all_hits = np.concatenate(hits) if len(hits) > 1 else hits[0]
        distinct = np.unique(all_hits)
    else:
        all_hits = distinct = np.empty(0, dtype=np.int64)
    owner = net.slot_owner[distinct]
    exposed = np.unique(owner)
    cand = exposed[~is_seed[exposed]]
    if adopted is not None:
        new_adopters = np.flatnonzero(adopted)
    else:
        potential = np.bincount(owner, weights=net.slot_weight[distinct], minlength=net.n)
        prob = -np.expm1(-(s[cand] + potential[cand]))
        new_adopters = cand[rng.random(cand.size) < prob]
    count = seeds.size + new_adopters.size
    if not record:
        return count, None

    friends: dict[int, set[int]] = defaultdict(set)
    for slot_id in distinct:
        friends[int(net.slot_owner[slot_id])].add(int(net.indices[slot_id]))
    counts = np.bincount(net.slot_owner[all_hits], minlength=net.n)
    exposure = ExposureRecord(dict(friends), {int(v): int(counts[v]) for v in np.flatnonzero(counts)})
    adopters = frozenset(int(v) for v in seeds) | frozenset(int(v) for v in new_adopters)
    return count, RunOutcome(exposure, adopters, trace, events)


def _prepare(net, seed_set, params):
    seeds = _check_seeds(net, seed_set)
    if params.s.shape != (net.n,):
        raise InputError("susceptibility array does not match the network size")
    is_seed = np.zeros(net.n, dtype=bool)
    is_seed[seeds] = True
    return seeds, is_seed


def run(net: Network, seed_set: Iterable[int], params: AdoptionParams, config: SimConfig,
        run_index: int = 0) -> RunOutcome:
    """Single run, reproducible from ``(config.master_seed, run_index)``."""
    seeds, is_seed = _prepare(net, seed_set, params)
    rng = RunStreams(config.master_seed).for_run(run_index)
    _, outcome = _simulate(net, seeds, is_seed, params.s, params.beta, config.beta_model,
                           config.horizon, config.adoption_time, rng, record=True)
    return outcome


def _count_block(net, seeds, is_seed, params, config, start, stop):
    streams = RunStreams(config.master_seed)
    out = np.empty(stop - start, dtype=np.int64)
    for i in range(start, stop):
        out[i - start], _ = _simulate(net, seeds, is_seed, params.s, params.beta, config.beta_model,
                                      config.horizon, config.adoption_time, streams.for_run(i), False)
    return out


def adopter_counts(net: Network, seed_set: Iterable[int], params: AdoptionParams,
                   config: SimConfig) -> np.ndarray:
    """Final advocate count of every run, indexed by run number."""
    seeds, is_seed = _prepare(net, seed_set, params)
    if config.workers <= 1:
        return _count_block(net, seeds, is_seed, params, config, 0, config.runs)
    chunk = max(1, math.ceil(config.runs / (4 * config.workers)))
    bounds = [(a, min(a + chunk, config.runs)) for a in range(0, config.runs, chunk)]
    with ProcessPoolExecutor(config.workers) as pool:
        parts = pool.map(_count_block, *zip(*[(net, seeds, is_seed, params, config, a, b) for a, b in bounds]))
        return np.concatenate(list(parts))


def reaches(count: int | np.ndarray, epsilon: float, n: int):
    """count >= epsilon*n, tolerant to epsilon given as a rounded k/n."""
    return np.asarray(count) >= epsilon * n - 1e-9


def monte_carlo(net: Network, seed_set: Iterable[int], params: AdoptionParams,
                config: SimConfig) -> list[CurvePoint]:
    counts = adopter_counts(net, seed_set, params, config)
    curve = []
    for eps in config.epsilon_grid:
        hits = int(reaches(counts, eps, net.n).sum())
        lo, hi = wilson_interval(hits, config.runs)
        curve.append(CurvePoint(eps, hits / config.runs, lo, hi, config.runs))
    return curve


def sample_seeds(n: int, fraction: float, seed: int) -> list[int]:
    """Uniform sample without replacement of max(1, round(fraction*n)) nodes."""
    if not 0 < fraction <= 1:
        raise InvalidParameterError("seed fraction must be in (0, 1]")
    k = max(1, int(math.floor(fraction * n + 0.5)))
    rng = np.random.default_rng(derive_seed(seed, "seed_set"))
    return sorted(int(v) for v in rng.choice(n, size=k, replace=False))


# ---------------------------------------------------------------------------
# exact enumeration

def exact_small(net: Network, seed_set: Iterable[int], params: AdoptionParams, horizon: int,
                epsilon_grid: Sequence[float] | None = None, max_paths: int = 10_000) -> dict[float, float]:
    """Exact P_Trend(epsilon) with deterministic spawning, by enumerating agent walks.

    Limited to n <= 8, horizon <= 3 and at most ``max_paths`` walk outcomes in total.
    """
    if net.n > 8 or horizon > 3 or horizon < 1:
        raise EnumerationLimitError("exact enumeration needs n <= 8 and 1 <= horizon <= 3")
    seeds = _check_seeds(net, seed_set)
    seed_set = frozenset(int(v) for v in seeds)
    k = int(math.floor(params.beta + 0.5))
    if epsilon_grid is None:
        epsilon_grid = [i / net.n for i in range(1, net.n + 1)]

    # state: (frontier, frozenset of distinct exposure slots) -> probability
    states = {(tuple(sorted(seed_set)), frozenset()): 1.0}
    paths = 0
    for _ in range(horizon):
        nxt: dict = defaultdict(float)
        for (frontier, slots), prob in states.items():
            agents = [v for v in frontier for _ in range(k) if net.degrees[v] > 0]
            if not agents:
                nxt[((), slots)] += prob
                continue
            choices = [range(net.indptr[v], net.indptr[v + 1]) for v in agents]
            weight = prob / math.prod(int(net.degrees[v]) for v in agents)
            n_out = math.prod(len(c) for c in choices)
            paths += n_out
            if paths > max_paths:
                raise EnumerationLimitError(f"more than {max_paths} walk outcomes")
            for picks in itertools.product(*choices):
                dst = tuple(sorted({int(net.indices[p]) for p in picks}))
                new_slots = slots | {int(net.rev[p]) for p in picks}
                nxt[(dst, new_slots)] += weight
        states = nxt

    size_dist = np.zeros(net.n + 1)
    for (_, slots), prob in states.items():
        potential = defaultdict(float)
        for sl in slots:
            potential[int(net.slot_owner[sl])] += float(net.slot_weight[sl])
        dist = np.zeros(net.n + 1)
        dist[len(seed_set)] = 1.0
        for v in sorted(potential):
            if v in seed_set:
                continue
            q = -math.expm1(-(params.s[v] + potential[v]))
            dist = dist * (1 - q) + np.concatenate([[0.0], dist[:-1]]) * q
        size_dist += prob * dist
    return {float(e): float(size_dist[reaches(np.arange(net.n + 1), e, net.n)].sum()) for e in epsilon_grid}


# ---------------------------------------------------------------------------
# bound validation

class CompareRow(NamedTuple):
    epsilon: float
    bound: float
    p_hat: float
    ci_high: float
    violation: bool


def compare(bound_rows, empirical: Sequence[CurvePoint], delta_t: int | None = None,
            tol: float = 1e-12) -> tuple[list[CompareRow], float]:
    """Match bound rows to the empirical curve by epsilon; flag bound > ci_high.

    ``bound_rows`` are sweep rows (or (epsilon, bound) pairs). With several
    horizons present, ``delta_t`` picks one.
    """
    pairs = []
    for r in bound_rows:
        if hasattr(r, "delta_t"):
            if delta_t is not None and r.delta_t != delta_t:
                continue
            pairs.append((r.epsilon, r.bound))
        else:
            pairs.append((float(r[0]), float(r[1])))
    bound_eps = sorted(e for e, _ in pairs)
    emp_eps = sorted(p.epsilon for p in empirical)
    if len(bound_eps) != len(emp_eps) or any(abs(a - b) > 1e-9 for a, b in zip(bound_eps, emp_eps)):
        raise InputError("bound and empirical epsilon grids do not match")
    bound_by_eps = dict(sorted(pairs))
    rows = []
    for p in sorted(empirical, key=lambda q: q.epsilon):
        b = next(v for e, v in bound_by_eps.items() if abs(e - p.epsilon) <= 1e-9)
        rows.append(CompareRow(p.epsilon, b, p.p_hat, p.ci_high, b > p.ci_high + tol))
    frac = sum(r.violation for r in rows) / len(rows)
    return rows, frac
