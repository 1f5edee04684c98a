"""Calibration of diffusion and adoption parameters from cascade event logs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InputError, InvalidParameterError
from .graphmodel import Network
from .trendmodel import AdoptionParams, adoption_factor, influence_factor

EXPOSURE = "exposure"
ADOPTION = "adoption"


class Event(NamedTuple):
    time: int
    kind: str
    subject: int
    source: int | None = None


@dataclass
class EventLog:
    """Events of a single cascade, in time order."""
    events: list[Event] = field(default_factory=list)

    def __post_init__(self):
        self.events = [Event(int(e[0]), e[1], int(e[2]), None if e[3] is None else int(e[3]))
                       for e in self.events]
        adopted = set()
        last = None
        for e in self.events:
            if e.kind not in (EXPOSURE, ADOPTION):
                raise InputError(f"unknown event kind {e.kind!r}")
            if last is not None and e.time < last:
                raise InputError("event times must be non-decreasing")
            last = e.time
            if e.kind == EXPOSURE and e.source is None:
                raise InputError("exposure events need a source")
            if e.kind == ADOPTION:
                if e.subject in adopted:
                    raise InputError(f"node {e.subject} adopts twice")
                adopted.add(e.subject)

    def __len__(self):
        return len(self.events)

    def exposures(self):
        return [e for e in self.events if e.kind == EXPOSURE]

    @property
    def adopters(self) -> set[int]:
        return {e.subject for e in self.events if e.kind == ADOPTION}

    @property
    def seeds(self) -> set[int]:
        """Adopters whose adoption comes before any exposure of theirs."""
        exposed, seeds = set(), set()
        for e in self.events:
            if e.kind == EXPOSURE:
                exposed.add(e.subject)
            elif e.subject not in exposed:
                seeds.add(e.subject)
        return seeds

    def validate(self, net: Network) -> None:
        for e in self.events:
            if not 0 <= e.subject < net.n or (e.source is not None and not 0 <= e.source < net.n):
                raise InputError(f"event {e} references a node outside the network")
            if e.kind == EXPOSURE and not net.has_edge(e.subject, e.source):
                raise InputError(f"exposure {e.source} -> {e.subject} is not along an edge")


def _as_logs(logs) -> list[EventLog]:
    return [logs] if isinstance(logs, EventLog) else list(logs)


def event_log_from_run(outcome, seeds: Iterable[int], horizon: int) -> EventLog:
    """Turn a recorded simulator run into a log: seeds adopt at 0, others at the horizon."""
    seeds = sorted(set(int(v) for v in seeds))
    events = [Event(0, ADOPTION, v) for v in seeds]
    events += [Event(t, EXPOSURE, dst, src) for t, src, dst in sorted(outcome.events)]
    events += [Event(horizon, ADOPTION, v) for v in sorted(outcome.adopters - set(seeds))]
    events.sort(key=lambda e: e.time)
    return EventLog(events)


def estimate_beta(logs: EventLog | Sequence[EventLog]) -> float:
    """Distinct (time, source, target) exposures per participating user (seeds included)."""
    logs = _as_logs(logs)
    if not logs or all(len(lg) == 0 for lg in logs):
        raise InputError("empty event log")
    onward = participants = 0
    for lg in logs:
        exp = lg.exposures()
        onward += len({(e.time, e.source, e.subject) for e in exp})
        users = {e.subject for e in exp} | {e.source for e in exp} | lg.adopters
        participants += len(users)
    return onward / participants if participants else 0.0


class Observation(NamedTuple):
    node: int
    friends: tuple[int, ...]
    adopted: bool


def observations_from_logs(net: Network, logs: EventLog | Sequence[EventLog]) -> list[Observation]:
    """One observation per exposed non-seed node per cascade."""
    obs = []
    for lg in _as_logs(logs):
        lg.validate(net)
        seeds = lg.seeds
        adopters = lg.adopters
        friends: dict[int, set[int]] = {}
        for e in lg.exposures():
            friends.setdefault(e.subject, set()).add(e.source)
        for v in sorted(friends):
            if v not in seeds:
                obs.append(Observation(v, tuple(sorted(friends[v])), v in adopters))
    return obs


@dataclass
class FitResult:
    s: np.ndarray
    w: dict[tuple[int, int], float]
    beta_hat: float
    log_likelihood: float
    iterations: int
    converged: bool
    w_observations: dict[tuple[int, int], int] = field(default_factory=dict)
    s_observations: dict[int, int] = field(default_factory=dict)

    def network(self, net: Network) -> Network:
        return net.with_weights(self.w)

    def params(self) -> AdoptionParams:
        return AdoptionParams(self.s, self.beta_hat)


def _objective(theta, A, adopt, reg):
    z = A @ theta
    za = z[adopt]
    if np.any(za <= 0):
        return -math.inf
    return float(np.log(-np.expm1(-za)).sum() - z[~adopt].sum() - reg * theta @ theta)


def _objective_change(theta, d, z, A, adopt, reg):
    """f(theta + d) - f(theta), summed term by term so it stays accurate when tiny."""
    dz = A @ d
    za, dza = z[adopt], dz[adopt]
    if np.any(za + dza <= 0):
        return -math.inf
    ratio = np.exp(-za) * -np.expm1(-dza) / -np.expm1(-za)
    return float(np.log1p(ratio).sum() - dz[~adopt].sum() - reg * (2 * theta @ d + d @ d))


def _gradient(z, A, adopt, reg, theta):
    g = np.full(z.shape, -1.0)
    g[adopt] = 1.0 / np.expm1(z[adopt])
    return A.T @ g - 2 * reg * theta


def fit_observations(net: Network, observations: Sequence[Observation], reg: float = 1e-3,
                     tol: float = 1e-6, max_iter: int = 10_000, cap: float = 10.0,
                     beta_hat: float = 0.0) -> FitResult:
    """Penalised MLE of (s, w) under P(adopt) = 1 - exp(-(s_v + sum_u w[v,u])).

    Projected gradient ascent on the box [0, cap] with Barzilai-Borwein trial
    steps and Armijo backtracking, so the objective never decreases. Only
    nodes and directed edges that occur in some observation are free.
    """
    if reg < 0:
        raise InvalidParameterError("reg must be >= 0")
    s_index: dict[int, int] = {}
    w_index: dict[tuple[int, int], int] = {}
    rows, cols = [], []
    s_count: dict[int, int] = {}
    w_count: dict[tuple[int, int], int] = {}
    for i, ob in enumerate(observations):
        if not 0 <= ob.node < net.n:
            raise InputError(f"node {ob.node} outside the network")
        s_index.setdefault(ob.node, len(s_index))
        s_count[ob.node] = s_count.get(ob.node, 0) + 1
        rows.append(i)
        cols.append(("s", s_index[ob.node]))
        for u in set(ob.friends):
            if not net.has_edge(ob.node, u):
                raise InputError(f"{u} is not a neighbor of {ob.node}")
            key = (ob.node, int(u))
            w_index.setdefault(key, len(w_index))
            w_count[key] = w_count.get(key, 0) + 1
            rows.append(i)
            cols.append(("w", w_index[key]))
    ns = len(s_index)
    col_ids = [c if kind == "s" else ns + c for kind, c in cols]
    dim = ns + len(w_index)
    A = sp.csr_matrix((np.ones(len(rows)), (rows, col_ids)), shape=(len(observations), dim))
    adopt = np.array([ob.adopted for ob in observations], dtype=bool)

    theta = np.full(dim, 0.1)
    f = _objective(theta, A, adopt, reg)
    z = A @ theta
    g = _gradient(z, A, adopt, reg, theta)
    step = 1.0
    converged = False
    it = 0
    prev = None
    for it in range(1, max_iter + 1):
        pg = np.clip(theta + g, 0.0, cap) - theta
        if np.linalg.norm(pg) <= tol:
            converged = True
            it -= 1
            break
        if prev is not None:
            ds, dg = theta - prev[0], g - prev[1]
            curv = -float(ds @ dg)
            step = float(ds @ ds) / curv if curv > 0 else 1.0
            step = min(max(step, 1e-10), 1e10)
        while True:
            d = np.clip(theta + step * g, 0.0, cap) - theta
            gain = _objective_change(theta, d, z, A, adopt, reg)
            if gain >= 1e-4 * float(g @ d):
                break
            step *= 0.5
            if step < 1e-30:
                d, gain = np.zeros_like(theta), 0.0
                break
        if not d.any():
            break
        prev = (theta, g)
        theta, f = theta + d, f + gain
        z = A @ theta
        g = _gradient(z, A, adopt, reg, theta)
    else:
        pg = np.clip(theta + g, 0.0, cap) - theta
        converged = bool(np.linalg.norm(pg) <= tol)

    f = _objective(theta, A, adopt, reg)
    s = np.zeros(net.n)
    for v, j in s_index.items():
        s[v] = theta[j]
    w = {key: float(theta[ns + j]) for key, j in w_index.items()}
    return FitResult(s, w, beta_hat, f, it, converged, w_count, s_count)


def fit_adoption_params(net: Network, logs: EventLog | Sequence[EventLog], reg: float = 1e-3,
                        tol: float = 1e-6, max_iter: int = 10_000, cap: float = 10.0) -> FitResult:
    logs = _as_logs(logs)
    obs = observations_from_logs(net, logs)
    beta_hat = estimate_beta(logs) if any(len(lg) for lg in logs) else 0.0
    return fit_observations(net, obs, reg, tol, max_iter, cap, beta_hat)


def factors_from_fit(net: Network, fit: FitResult) -> tuple[float, float]:
    """(xi_G, xi_N) of the fitted parameters."""
    s = np.zeros(net.n)
    s[:len(fit.s)] = fit.s[:net.n]
    params = AdoptionParams(s, fit.beta_hat)
    return adoption_factor(net, params), influence_factor(fit.network(net))


def empirical_sigma_minus(logs: EventLog | Sequence[EventLog], net: Network, horizon: int) -> float:
    """Mean per-step fraction of not-yet-exposed nodes that get exposed.

    Seeds count as already exposed. Steps with an empty susceptible pool are skipped.
    """
    if horizon < 1:
        raise InvalidParameterError("horizon must be >= 1")
    rates = []
    for lg in _as_logs(logs):
        reached = set(lg.seeds)
        first: dict[int, int] = {}
        for e in lg.exposures():
            if e.subject not in first:
                first[e.subject] = e.time
        for t in range(1, horizon + 1):
            pool = net.n - len(reached)
            if pool <= 0:
                continue
            new = {v for v, ft in first.items() if ft == t and v not in reached}
            rates.append(len(new) / pool)
            reached |= new
    return float(np.mean(rates)) if rates else 0.0
