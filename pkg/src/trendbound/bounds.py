"""Analytic lower bounds on the probability that a trend reaches a target penetration.

All products of probabilities are carried as logarithms; values are only
exponentiated (and clamped to [0, 1]) when a result is reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import log_ndtr

from .errors import ChernoffValidityError, InvalidParameterError, NoValidRhoError
from .graphmodel import DegreeDistribution, degree_ratio_prob_bound

TIGHTEST = "tightest"
PAPER_LITERAL = "paper-literal"

PDelta = Callable[[float], float]


# ---------------------------------------------------------------------------
# normal distribution

def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def log_normal_sf(z):
    """log(1 - Phi(z)), accurate deep into both tails."""
    return log_ndtr(-np.asarray(z, dtype=float))


# ---------------------------------------------------------------------------
# low temporal resistance

class SigmaResult(NamedTuple):
    sigma: float
    delta_star: float


def analytic_p_delta(dist: DegreeDistribution) -> PDelta:
    return lambda delta: min(1.0, degree_ratio_prob_bound(dist, delta))


def delta_grid(delta_grid_max: float, points_per_octave: int = 16) -> np.ndarray:
    if not delta_grid_max >= 1:
        raise InvalidParameterError(f"delta_grid_max must be >= 1, got {delta_grid_max}")
    if delta_grid_max == 1:
        return np.array([1.0])
    num = max(2, int(math.ceil(math.log2(delta_grid_max) * points_per_octave)) + 1)
    return np.geomspace(1.0, delta_grid_max, num)


def sigma_minus(beta: float, delta_t: int, seed_fraction: float,
                dist: DegreeDistribution | None = None,
                delta_grid_max: float = 64.0,
                p_delta: PDelta | None = None,
                conservative: bool = False,
                points_per_octave: int = 16) -> SigmaResult:
    """max over delta in [1, delta_grid_max] of 1 - exp(-delta * x) * (1 - P_delta),
    with x = beta**delta_t * seed_fraction.

    ``p_delta`` defaults to the analytic degree-ratio bound of ``dist`` clamped
    to [0, 1]. ``conservative`` replaces ``delta * x`` by ``x / delta``.
    """
    if beta < 0:
        raise InvalidParameterError("beta must be >= 0")
    if delta_t < 1:
        raise InvalidParameterError("delta_t must be >= 1")
    if not 0 < seed_fraction <= 1:
        raise InvalidParameterError("seed_fraction must be in (0, 1]")
    if p_delta is None:
        if dist is None:
            raise InvalidParameterError("either dist or p_delta is required")
        p_delta = analytic_p_delta(dist)

    deltas = delta_grid(delta_grid_max, points_per_octave)
    pd = np.clip([p_delta(float(d)) for d in deltas], 0.0, 1.0)
    if beta == 0:
        survive = np.ones_like(deltas)
    else:
        log_x = delta_t * math.log(beta) + math.log(seed_fraction)
        log_a = log_x + (-np.log(deltas) if conservative else np.log(deltas))
        # exp(-a) underflows to 0 long before a itself overflows
        survive = np.where(log_a > 700, 0.0, np.exp(-np.exp(np.minimum(log_a, 700))))
    values = np.clip(1.0 - survive * (1.0 - pd), 0.0, 1.0)
    i = int(np.argmax(values))
    return SigmaResult(float(values[i]), float(deltas[i]))


# ---------------------------------------------------------------------------
# Chernoff term and normal tail

def _log_p_tilde(rho, horizon_sigma: float):
    rho = np.asarray(rho, dtype=float)
    return -(horizon_sigma / 2 - rho + rho * rho / (2 * horizon_sigma))


def p_tilde_minus(rho: float, delta_t: float, sigma: float) -> float:
    """exp(-(delta_t*sigma/2 - rho + rho^2 / (2*delta_t*sigma))), for 0 <= rho < delta_t*sigma."""
    if not sigma > 0:
        raise ChernoffValidityError("sigma must be > 0")
    m = delta_t * sigma
    if not 0 <= rho < m:
        raise ChernoffValidityError(f"rho={rho} must lie in [0, delta_t*sigma={m})")
    return float(np.exp(_log_p_tilde(rho, m)))


def _log_rho_trend_lower(n: int, epsilon: float, p_tilde):
    """Vectorised log of 1 - Phi(sqrt(n) (eps - P) / sqrt(P (1 - P))) with limit handling at P in {0, 1}."""
    p = np.asarray(p_tilde, dtype=float)
    out = np.empty_like(p)
    edge = (p <= 0) | (p >= 1)
    out[edge] = np.where(epsilon <= p[edge], 0.0, -np.inf)
    inner = p[~edge]
    z = math.sqrt(n) * (epsilon - inner) / np.sqrt(inner * (1 - inner))
    out[~edge] = log_normal_sf(z)
    return out


def rho_trend_lower(n: int, epsilon: float, p_tilde: float) -> float:
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    if not 0 < epsilon <= 1:
        raise InvalidParameterError("epsilon must be in (0, 1]")
    return float(np.exp(_log_rho_trend_lower(n, epsilon, np.array([p_tilde]))[0]))


# ---------------------------------------------------------------------------
# first factors

def log_local_factor(p_local, eps_n: float):
    """log(P_Local ** (eps*n)); P_Local may be an array."""
    p = np.asarray(p_local, dtype=float)
    if np.any((p < 0) | (p >= 1)):
        raise InvalidParameterError("P_Local must lie in [0, 1)")
    with np.errstate(divide="ignore"):
        return eps_n * np.log(p)


def log_factor_theorem2(xi_g: float, xi_n: float, rho, eps_n: float):
    """log of exp(-eps*n * xi_G * xi_N**rho)."""
    rho = np.asarray(rho, dtype=float)
    if xi_n == 0:
        powered = np.where(rho == 0, 1.0, 0.0)
    else:
        powered = np.exp(rho * math.log(xi_n))
    return -eps_n * xi_g * powered


def theorem1_value(n: int, epsilon: float, p_local: float, p_tilde: float) -> float:
    """P_Local**(eps*n) * (1 - Phi(...)) at a fixed P-tilde."""
    log_v = log_local_factor(p_local, epsilon * n) + _log_rho_trend_lower(n, epsilon, np.array([p_tilde]))[0]
    return float(min(1.0, math.exp(log_v))) if log_v > -np.inf else 0.0


def theorem2_value(n: int, epsilon: float, xi_g: float, xi_n: float, rho: float, p_tilde: float) -> float:
    log_v = log_factor_theorem2(xi_g, xi_n, rho, epsilon * n) + _log_rho_trend_lower(n, epsilon, np.array([p_tilde]))[0]
    return float(min(1.0, math.exp(log_v))) if log_v > -np.inf else 0.0


# ---------------------------------------------------------------------------
# rho search

@dataclass(frozen=True)
class RhoSearch:
    """How rho is chosen.

    ``step=None`` uses ``delta_t*sigma / rel_steps``; ``integer=True`` scans
    rho = 1, 2, ... below ``delta_t*sigma``.
    """
    mode: str = TIGHTEST
    step: float | None = None
    rel_steps: int = 1000
    integer: bool = False
    delta_grid_max: float = 64.0

    def __post_init__(self):
        if self.mode not in (TIGHTEST, PAPER_LITERAL):
            raise InvalidParameterError(f"unknown rho mode {self.mode!r}")
        if self.step is not None and not self.step > 0:
            raise InvalidParameterError("rho step must be > 0")
        if self.rel_steps < 2:
            raise InvalidParameterError("rel_steps must be >= 2")
        if not self.delta_grid_max >= 1:
            raise InvalidParameterError("delta_grid_max must be >= 1")


def rho_grid(delta_t: float, sigma: float, search: RhoSearch) -> np.ndarray:
    """Grid points in the open interval (0, delta_t*sigma)."""
    m = delta_t * sigma
    if not m > 0:
        raise NoValidRhoError(f"delta_t*sigma = {m} leaves no room for rho")
    if search.integer:
        grid = np.arange(1, math.ceil(m), dtype=float)
    else:
        step = search.step if search.step is not None else m / search.rel_steps
        grid = step * np.arange(1, math.ceil(m / step) + 1, dtype=float)
    grid = grid[grid < m]
    if grid.size == 0:
        raise NoValidRhoError(f"no rho grid point below delta_t*sigma = {m}")
    return grid


def optimize_rho(objective: Callable, delta_t: float, sigma: float,
                 search: RhoSearch = RhoSearch()) -> tuple[float, float]:
    """Grid-optimise ``objective(rho)`` over (0, delta_t*sigma).

    ``tightest`` takes the maximum, ``paper-literal`` the minimum; ties go to
    the smaller rho. The objective may be vectorised; a scalar-only callable
    is evaluated point by point.
    """
    grid = rho_grid(delta_t, sigma, search)
    try:
        vals = np.asarray(objective(grid), dtype=float)
        if vals.shape != grid.shape:
            raise ValueError
    except (TypeError, ValueError):
        vals = np.array([float(objective(r)) for r in grid])
    i = _select(vals, search.mode)
    return float(grid[i]), float(vals[i])


def _select(vals: np.ndarray, mode: str) -> int:
    clean = np.where(np.isnan(vals), -np.inf if mode == TIGHTEST else np.inf, vals)
    return int(np.argmax(clean) if mode == TIGHTEST else np.argmin(clean))


# ---------------------------------------------------------------------------
# full bounds

@dataclass(frozen=True)
class BoundInputs:
    """Parameters of one bound evaluation.

    ``p_local`` (theorem 1) is a number in [0, 1) or a vectorised callable of
    rho. ``xi_g``/``xi_n`` feed theorem 2. ``p_delta`` overrides the analytic
    degree-ratio bound inside sigma-minus.
    """
    n: int
    epsilon: float
    delta_t: int
    beta: float
    seed_fraction: float = 0.05
    dist: DegreeDistribution | None = None
    p_local: float | Callable | None = None
    xi_g: float | None = None
    xi_n: float | None = None
    rho_search: RhoSearch = field(default_factory=RhoSearch)
    p_delta: PDelta | None = None
    conservative: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameterError("n must be >= 1")
        if not 0 < self.seed_fraction <= 1:
            raise InvalidParameterError("seed_fraction must be in (0, 1]")
        if not 0 < self.epsilon <= 1:
            raise InvalidParameterError("epsilon must be in (0, 1]")
        if self.delta_t < 1 or int(self.delta_t) != self.delta_t:
            raise InvalidParameterError("delta_t must be a positive integer")
        if self.beta < 0:
            raise InvalidParameterError("beta must be >= 0")
        if self.dist is None and self.p_delta is None:
            raise InvalidParameterError("a degree distribution or a P_delta source is required")
        for name in ("xi_g", "xi_n"):
            v = getattr(self, name)
            if v is not None and not 0 <= v <= 1:
                raise InvalidParameterError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class BoundResult:
    value: float
    log_value: float
    sigma_minus: float
    p_tilde: float
    rho: float
    delta_star: float
    valid: bool
    diagnostics: tuple[str, ...] = ()


class _Prepared:
    """Everything about a bound that does not depend on epsilon."""

    def __init__(self, inputs: BoundInputs, theorem: int):
        if theorem == 1 and inputs.p_local is None:
            raise InvalidParameterError("theorem 1 needs p_local")
        if theorem == 2 and (inputs.xi_g is None or inputs.xi_n is None):
            raise InvalidParameterError("theorem 2 needs xi_g and xi_n")
        if theorem not in (1, 2):
            raise InvalidParameterError(f"theorem must be 1 or 2, got {theorem}")
        self.inputs = inputs
        self.theorem = theorem
        search = inputs.rho_search
        self.sigma, self.delta_star = sigma_minus(
            inputs.beta, inputs.delta_t, inputs.seed_fraction, inputs.dist,
            search.delta_grid_max, inputs.p_delta, inputs.conservative)
        self.notes = [f"delta searched on [1, {search.delta_grid_max:g}]"]
        if inputs.conservative:
            self.notes.append("conservative exposure exponent x/delta")
        try:
            self.grid = rho_grid(inputs.delta_t, self.sigma, search)
        except NoValidRhoError as exc:
            self.grid = None
            self.notes.append(str(exc))
            return
        self.log_pt = _log_p_tilde(self.grid, inputs.delta_t * self.sigma)
        self.p_tilde = np.exp(self.log_pt)
        if theorem == 1:
            p = inputs.p_local
            p_arr = np.asarray(p(self.grid) if callable(p) else np.full(self.grid.shape, p), dtype=float)
            self.log_p_local = log_local_factor(p_arr, 1.0)

    def evaluate(self, epsilon: float) -> BoundResult:
        inputs = self.inputs
        if not 0 < epsilon <= 1:
            raise InvalidParameterError("epsilon must be in (0, 1]")
        if self.grid is None:
            return BoundResult(0.0, -math.inf, self.sigma, math.nan, math.nan,
                               self.delta_star, False, tuple(self.notes))
        eps_n = epsilon * inputs.n
        if self.theorem == 1:
            first = eps_n * self.log_p_local
        else:
            first = log_factor_theorem2(inputs.xi_g, inputs.xi_n, self.grid, eps_n)
        total = first + _log_rho_trend_lower(inputs.n, epsilon, self.p_tilde)
        i = _select(total, inputs.rho_search.mode)
        notes = list(self.notes)
        log_v = float(total[i])
        value = math.exp(log_v) if log_v > -math.inf else 0.0
        if value > 1.0:
            notes.append("clamped to 1")
            value = 1.0
        return BoundResult(value, log_v, self.sigma, float(self.p_tilde[i]), float(self.grid[i]),
                           self.delta_star, True, tuple(notes))


def theorem1_bound(inputs: BoundInputs) -> BoundResult:
    """P_Local**(eps*n) * (1 - Phi(sqrt(n) (eps - P~) / sqrt(P~ (1 - P~)))) at the selected rho."""
    return _Prepared(inputs, 1).evaluate(inputs.epsilon)


def theorem2_bound(inputs: BoundInputs) -> BoundResult:
    """exp(-eps*n * xi_G * xi_N**rho) * (1 - Phi(...)), rho shared by both factors."""
    return _Prepared(inputs, 2).evaluate(inputs.epsilon)


# ---------------------------------------------------------------------------
# sweeps

class SweepRow(NamedTuple):
    delta_t: int
    epsilon: float
    bound: float
    rho: float
    sigma_minus: float
    p_tilde: float
    valid: bool


def sweep(template: BoundInputs, epsilon_grid: Sequence[float], delta_t_list: Sequence[int],
          theorem: int = 2) -> list[SweepRow]:
    """Bound for every (delta_t, epsilon) cell, ordered by delta_t then epsilon.

    Invalid cells are reported with ``valid=False`` and a zero bound.
    """
    if not len(epsilon_grid) or not len(delta_t_list):
        raise InvalidParameterError("epsilon grid and delta_t list must be non-empty")
    rows = []
    for dt in sorted(delta_t_list):
        prepared = _Prepared(replace(template, delta_t=int(dt)), theorem)
        for eps in sorted(epsilon_grid):
            r = prepared.evaluate(float(eps))
            rows.append(SweepRow(int(dt), float(eps), r.value, r.rho, r.sigma_minus, r.p_tilde, r.valid))
    return rows


def horizon_ordering(rows: Sequence[SweepRow]) -> list[tuple[float, bool]]:
    """Per epsilon: do bounds never decrease as the horizon grows?"""
    by_eps: dict[float, list[tuple[int, float]]] = {}
    for r in rows:
        by_eps.setdefault(r.epsilon, []).append((r.delta_t, r.bound))
    out = []
    for eps in sorted(by_eps):
        vals = [b for _, b in sorted(by_eps[eps])]
        out.append((eps, all(b2 >= b1 for b1, b2 in zip(vals, vals[1:]))))
    return out
