"""Trend state, the local adoption model and the network-level adoption/influence factors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ContractViolationError, InputError, InvalidParameterError
from .graphmodel import Network


@dataclass(frozen=True)
class TrendState:
    advocates: frozenset[int]
    t: int = 0

    def __post_init__(self):
        object.__setattr__(self, "advocates", frozenset(int(v) for v in self.advocates))
        if self.t < 0:
            raise InvalidParameterError("t must be >= 0")

    def check(self, net: Network) -> None:
        bad = [v for v in self.advocates if not 0 <= v < net.n]
        if bad:
            raise InputError(f"advocates outside the network: {sorted(bad)[:5]}")


@dataclass
class AdoptionParams:
    """Per-node susceptibilities and the diffusion factor.

    Social weights live on the Network; ``s`` is an array indexed by node id.
    """
    s: np.ndarray
    beta: float = 1.0

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        if np.any(self.s < 0) or not np.all(np.isfinite(self.s)):
            raise InvalidParameterError("susceptibilities must be finite and >= 0")
        if not self.beta >= 0:
            raise InvalidParameterError(f"beta must be >= 0, got {self.beta}")

    @classmethod
    def from_mapping(cls, n: int, s: Mapping[int, float], beta: float = 1.0) -> "AdoptionParams":
        arr = np.zeros(n)
        for v, val in s.items():
            if not 0 <= int(v) < n:
                raise InputError(f"node {v} outside 0..{n - 1}")
            arr[int(v)] = val
        return cls(arr, beta)


@dataclass
class ExposureRecord:
    exposing_friends: dict[int, set[int]] = field(default_factory=dict)
    exposure_count: dict[int, int] = field(default_factory=dict)

    @property
    def exposed(self) -> set[int]:
        return {v for v, c in self.exposure_count.items() if c > 0}


def network_potential(v: int, exposing: Iterable[int], net: Network) -> float:
    """Sum of w[v, u] over the distinct friends u exposing v."""
    total = 0.0
    for u in set(exposing):
        if not net.has_edge(v, u):
            raise ContractViolationError(f"{u} is not a neighbor of {v}")
        total += net.weight(v, u)
    return total


def local_adopt_prob(s_v: float, p: float) -> float:
    if s_v < 0 or p < 0:
        raise InvalidParameterError("susceptibility and potential must be >= 0")
    return -math.expm1(-(s_v + p))


def _mean_weight_out(net: Network) -> np.ndarray:
    """(1/|N_v|) * sum_u w[v,u]; zero for isolated nodes."""
    total = np.bincount(net.slot_owner, weights=net.slot_weight, minlength=net.n)
    deg = net.degrees
    return np.divide(total, deg, out=np.zeros(net.n), where=deg > 0)


def expected_local_adopt(net: Network, params: AdoptionParams, rho) -> float | np.ndarray:
    """Mean over nodes of 1 - exp(-(s_v + rho/|N_v| * sum_u w[v,u])).

    ``rho`` may be a scalar or an array; an array returns one value per entry.
    """
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0):
        raise InvalidParameterError("rho must be >= 0")
    mw = _mean_weight_out(net)
    z = params.s[:, None] + mw[:, None] * r.reshape(1, -1)
    out = (-np.expm1(-z)).mean(axis=0)
    return float(out[0]) if r.ndim == 0 else out


def adoption_factor(net: Network, params: AdoptionParams) -> float:
    return math.exp(-float(params.s.sum()) / net.n)


def influence_factor(net: Network, params: AdoptionParams | None = None) -> float:
    """exp(-(1/n) * sum over edges (v,u) of w[u,v]/|N_v| + w[v,u]/|N_u|).

    Summing both terms over all undirected edges is the same as summing
    w[x,y]/|N_y| over every directed slot (x, y).
    """
    deg = net.degrees
    if np.any((net.slot_weight > 0) & (deg[net.indices] == 0)):
        raise ContractViolationError("weighted edge incident to a degree-0 node")
    total = float((net.slot_weight / deg[net.indices]).sum()) if len(net.indices) else 0.0
    return math.exp(-total / net.n)
