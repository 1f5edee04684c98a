"""Scale-free networks: representation, generation and degree-ratio statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ContractViolationError, DivergenceError, InvalidParameterError
from .rng import derive_seed


def normalization_constant(gamma: float, d_min: float = 1) -> float:
    """Constant c making c * d**-gamma a density on [d_min, inf)."""
    if not gamma > 1:
        raise InvalidParameterError(f"gamma must be > 1, got {gamma}")
    if not d_min >= 1:
        raise InvalidParameterError(f"d_min must be >= 1, got {d_min}")
    return (gamma - 1) * d_min ** (gamma - 1)


@dataclass(frozen=True)
class DegreeDistribution:
    gamma: float
    c: float | None = None
    d_min: int = 1
    d_max: int | None = None

    def __post_init__(self):
        if not self.gamma > 1:
            raise InvalidParameterError(f"gamma must be > 1, got {self.gamma}")
        if self.d_min < 1:
            raise InvalidParameterError(f"d_min must be >= 1, got {self.d_min}")
        if self.d_max is not None and self.d_max < self.d_min:
            raise InvalidParameterError(f"d_max ({self.d_max}) must be >= d_min ({self.d_min})")
        if self.c is None:
            object.__setattr__(self, "c", normalization_constant(self.gamma, self.d_min))
        elif not self.c > 0:
            raise InvalidParameterError(f"c must be > 0, got {self.c}")


class Network:
    """Immutable undirected graph with directed social weights.

    Adjacency is kept in CSR form. Slot ``k`` in ``indices[indptr[v]:indptr[v+1]]``
    is the directed pair ``(v, indices[k])``; ``slot_weight[k]`` is ``w_{v,u}`` and
    ``rev[k]`` is the slot of the reverse pair ``(u, v)``.
    """

    def __init__(self, n: int, edges: Iterable[Sequence[int]] = (),
                 weights: Mapping[tuple[int, int], float] | None = None):
        if n < 1:
            raise InvalidParameterError(f"n must be >= 1, got {n}")
        self.n = int(n)
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ContractViolationError("edge endpoint outside 0..n-1")
        if np.any(e[:, 0] == e[:, 1]):
            raise ContractViolationError("self-loops are not allowed")
        e = np.sort(e, axis=1)
        order = np.lexsort((e[:, 1], e[:, 0]))
        e = e[order]
        if len(e) > 1 and np.any(np.all(e[1:] == e[:-1], axis=1)):
            raise ContractViolationError("duplicate undirected edge")
        self.edges = e

        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        self.degrees = np.bincount(src, minlength=n).astype(np.int64)
        self.indptr = np.concatenate([[0], np.cumsum(self.degrees)]).astype(np.int64)
        self.indices = dst
        self.slot_owner = src
        # reverse slot: position of (dst, src) among the sorted (src, dst) keys
        keys = src * n + dst
        self.rev = np.searchsorted(keys, dst * n + src).astype(np.int64)
        self._keys = keys

        self.slot_weight = np.zeros(len(dst), dtype=float)
        if weights:
            for (v, u), w in weights.items():
                if w < 0 or not math.isfinite(w):
                    raise InvalidParameterError(f"weight w[{v},{u}] must be finite and >= 0, got {w}")
                self.slot_weight[self.slot(v, u)] = float(w)

        for arr in (self.edges, self.degrees, self.indptr, self.indices,
                    self.slot_owner, self.rev, self.slot_weight, self._keys):
            arr.flags.writeable = False

    def slot(self, v: int, u: int) -> int:
        k = int(np.searchsorted(self._keys, v * self.n + u))
        if k >= len(self._keys) or self._keys[k] != v * self.n + u:
            raise ContractViolationError(f"({v}, {u}) is not an edge")
        return k

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, v: int, u: int) -> bool:
        k = int(np.searchsorted(self._keys, v * self.n + u))
        return k < len(self._keys) and self._keys[k] == v * self.n + u

    def weight(self, v: int, u: int) -> float:
        return float(self.slot_weight[self.slot(v, u)])

    @property
    def weights(self) -> dict[tuple[int, int], float]:
        return {(int(v), int(u)): float(w)
                for v, u, w in zip(self.slot_owner, self.indices, self.slot_weight)}

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def with_weights(self, weights: Mapping[tuple[int, int], float] | np.ndarray) -> "Network":
        """Same topology, new weights (a mapping, or an array aligned with the CSR slots)."""
        if isinstance(weights, np.ndarray):
            if weights.shape != self.slot_weight.shape:
                raise ContractViolationError("slot weight array has the wrong shape")
            weights = {(int(v), int(u)): float(w)
                       for v, u, w in zip(self.slot_owner, self.indices, weights) if w}
        return Network(self.n, self.edges, weights)

    def __eq__(self, other):
        return (isinstance(other, Network) and self.n == other.n
                and np.array_equal(self.edges, other.edges)
                and np.array_equal(self.slot_weight, other.slot_weight))

    def __repr__(self):
        return f"Network(n={self.n}, edges={self.num_edges})"


def _sample_degrees(n, dist, cap, rng):
    u = rng.random(n)
    g1 = dist.gamma - 1
    tail = (cap / dist.d_min) ** (-g1)
    x = dist.d_min * (1.0 - u * (1.0 - tail)) ** (-1.0 / g1)
    d = np.floor(x + 0.5).astype(np.int64)
    return np.clip(d, dist.d_min, cap)


def generate_scale_free(n: int, dist: DegreeDistribution, seed: int, max_retries: int = 16) -> Network:
    """Configuration-model network with power-law degrees.

    Degrees come from inverse-CDF sampling of the power law truncated to
    ``[d_min, min(d_max, n-1)]`` and rounded to the nearest integer. Stubs are
    paired after a shuffle; self-loops and repeated pairs are dropped, so some
    nodes may end up with lower degree (or isolated).
    """
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    if n == 1:
        return Network(1, [])
    cap = n - 1 if dist.d_max is None else min(dist.d_max, n - 1)
    rng = np.random.default_rng(derive_seed(seed, "generate_scale_free"))
    for _ in range(max_retries):
        if cap < dist.d_min:
            continue
        deg = _sample_degrees(n, dist, cap, rng)
        if deg.sum() % 2:
            room = np.flatnonzero(deg < cap)
            if room.size == 0:
                continue
            deg[room[rng.integers(room.size)]] += 1
        stubs = np.repeat(np.arange(n, dtype=np.int64), deg)
        rng.shuffle(stubs)
        a, b = stubs[0::2], stubs[1::2]
        keep = a != b
        pairs = np.sort(np.stack([a[keep], b[keep]], axis=1), axis=1)
        pairs = np.unique(pairs, axis=0)
        return Network(n, pairs)
    raise InvalidParameterError(
        f"no feasible degree sequence for n={n}, d_min={dist.d_min}, cap={cap} after {max_retries} attempts")


def fit_gamma_mle(degrees: Sequence[float], d_min: float = 1, min_count: int = 10) -> float:
    """Continuous power-law MLE: 1 + m / sum(ln(d / d_min)) over degrees >= d_min."""
    x = np.asarray(degrees, dtype=float)
    x = x[x >= d_min]
    if len(x) < min_count:
        raise InvalidParameterError(f"need at least {min_count} degrees >= d_min, got {len(x)}")
    log_sum = float(np.log(x / d_min).sum())
    if log_sum <= 0:
        raise DivergenceError("all degrees equal d_min; the exponent estimate diverges")
    return 1.0 + len(x) / log_sum


def degree_ratio_prob_bound(dist: DegreeDistribution, delta: float) -> float:
    """Analytic bound c^2 * delta^(1-gamma) / (2 gamma^2 - 3 gamma + 1); may exceed 1."""
    if not delta >= 1:
        raise InvalidParameterError(f"delta must be >= 1, got {delta}")
    g = dist.gamma
    denom = 2 * g * g - 3 * g + 1
    if denom == 0:
        raise InvalidParameterError("2*gamma^2 - 3*gamma + 1 vanishes")
    return dist.c ** 2 * delta ** (1 - g) / denom


class ProbEstimate(NamedTuple):
    p: float
    se: float


def degree_ratio_prob_empirical(net: Network, delta: float, samples: int, seed: int) -> ProbEstimate:
    """Monte Carlo estimate of Prob[deg(u) > delta * deg(v)] over ordered pairs u != v."""
    if not delta >= 1:
        raise InvalidParameterError(f"delta must be >= 1, got {delta}")
    if net.n < 2:
        raise InvalidParameterError("need at least two nodes")
    if samples < 1:
        raise InvalidParameterError("samples must be >= 1")
    rng = np.random.default_rng(derive_seed(seed, "degree_ratio_pairs"))
    u = rng.integers(net.n, size=samples)
    v = rng.integers(net.n - 1, size=samples)
    v += v >= u
    hits = net.degrees[u] > delta * net.degrees[v]
    p = float(hits.mean())
    return ProbEstimate(p, math.sqrt(p * (1 - p) / samples))


def degree_ratio_prob_exact(degrees: np.ndarray | Network, delta: float) -> float:
    """Exhaustive fraction of ordered pairs u != v with deg(u) > delta * deg(v)."""
    if isinstance(degrees, Network):
        degrees = degrees.degrees
    d = np.sort(np.asarray(degrees, dtype=float))
    n = len(d)
    if n < 2:
        raise InvalidParameterError("need at least two nodes")
    # a node never beats itself since delta >= 1
    greater = n - np.searchsorted(d, delta * d, side="right")
    return float(greater.sum()) / (n * (n - 1))


def degree_table(net: Network) -> list[tuple[int, int]]:
    return [(v, int(d)) for v, d in enumerate(net.degrees)]
