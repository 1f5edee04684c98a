import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trendbound.errors import ContractViolationError, InputError, InvalidParameterError
from trendbound.graphmodel import DegreeDistribution, Network, generate_scale_free
from trendbound.trendmodel import (AdoptionParams, ExposureRecord, TrendState, adoption_factor,
                                   expected_local_adopt, influence_factor, local_adopt_prob,
                                   network_potential)

from conftest import LN2, flat_params, ring


def test_trend_state_checks_membership():
    TrendState({0, 2}, 1).check(ring(3))
    with pytest.raises(InputError):
        TrendState({5}).check(ring(3))
    with pytest.raises(InvalidParameterError):
        TrendState({0}, -1)


def test_params_validation():
    with pytest.raises(InvalidParameterError):
        AdoptionParams(np.array([-0.1]))
    with pytest.raises(InvalidParameterError):
        AdoptionParams(np.zeros(2), beta=-1)
    p = AdoptionParams.from_mapping(3, {1: 0.4}, beta=2)
    assert p.s.tolist() == [0.0, 0.4, 0.0] and p.beta == 2
    with pytest.raises(InputError):
        AdoptionParams.from_mapping(3, {3: 0.1})


def test_exposure_record_exposed_set():
    rec = ExposureRecord({1: {0}}, {1: 2, 2: 0})
    assert rec.exposed == {1}


def test_network_potential():
    net = Network(3, [(0, 1), (0, 2)], {(0, 1): 0.2, (0, 2): 0.3})
    assert network_potential(0, set(), net) == 0
    assert network_potential(0, {1, 2}, net) == pytest.approx(0.5)
    assert network_potential(0, [1, 1, 2], net) == pytest.approx(0.5)
    assert network_potential(1, {0}, net) == 0
    with pytest.raises(ContractViolationError):
        network_potential(1, {2}, net)


def test_local_adopt_prob_examples():
    assert local_adopt_prob(0, 0) == 0
    assert local_adopt_prob(LN2, 0) == pytest.approx(0.5)
    assert abs(local_adopt_prob(50, 50) - 1) <= 1e-9
    with pytest.raises(InvalidParameterError):
        local_adopt_prob(-1, 0)


@given(st.floats(0, 30), st.floats(0, 30), st.floats(1e-3, 5))
def test_local_adopt_prob_monotone_and_bounded(s, p, bump):
    v = local_adopt_prob(s, p)
    assert 0 <= v <= 1
    if s + p < 30:  # beyond this 1 - e^-z rounds to 1.0 in double precision
        assert v < 1
    if s + p + bump < 20:
        assert local_adopt_prob(s + bump, p) > v
        assert local_adopt_prob(s, p + bump) > v


def test_expected_local_adopt_examples():
    net = ring(6)
    assert expected_local_adopt(net, flat_params(6), 3.0) == 0
    assert expected_local_adopt(Network(1), flat_params(1, LN2), 2.0) == pytest.approx(0.5)
    edge = Network(2, [(0, 1)], {(0, 1): LN2, (1, 0): LN2})
    assert expected_local_adopt(edge, flat_params(2), 1.0) == pytest.approx(0.5)


def test_expected_local_adopt_isolated_nodes_use_s_only():
    net = Network(3, [(0, 1)], {(0, 1): 1.0, (1, 0): 1.0})
    params = AdoptionParams(np.array([0.0, 0.0, LN2]))
    expected = (2 * -math.expm1(-2.0) + 0.5) / 3
    assert expected_local_adopt(net, params, 2.0) == pytest.approx(expected)


def test_expected_local_adopt_vectorised():
    net = generate_scale_free(200, DegreeDistribution(2.5), 1).with_weights({})
    rng = np.random.default_rng(0)
    net = net.with_weights(rng.uniform(0, 0.3, len(net.slot_weight)))
    params = AdoptionParams(rng.uniform(0, 0.5, 200))
    rhos = np.linspace(0, 10, 21)
    vec = expected_local_adopt(net, params, rhos)
    assert vec == pytest.approx([expected_local_adopt(net, params, r) for r in rhos])
    assert np.all(np.diff(vec) >= 0)


def test_expected_local_adopt_full_exposure_identity():
    # regular graph: rho = |N_v| for every v
    net = ring(7)
    rng = np.random.default_rng(2)
    net = net.with_weights(rng.uniform(0, 1, len(net.slot_weight)))
    params = AdoptionParams(rng.uniform(0, 1, 7))
    direct = np.mean([local_adopt_prob(params.s[v], sum(net.weight(v, int(u)) for u in net.neighbors(v)))
                      for v in range(7)])
    assert expected_local_adopt(net, params, 2.0) == pytest.approx(direct)


def test_adoption_factor_examples():
    assert adoption_factor(ring(4), flat_params(4)) == 1.0
    assert adoption_factor(ring(4), flat_params(4, LN2)) == pytest.approx(0.5)
    assert adoption_factor(Network(2, [(0, 1)]), AdoptionParams(np.array([0, 2 * LN2]))) == pytest.approx(0.5)


def test_influence_factor_examples():
    assert influence_factor(ring(5)) == 1.0
    edge = Network(2, [(0, 1)], {(0, 1): LN2, (1, 0): LN2})
    assert influence_factor(edge) == pytest.approx(0.5)
    tri = Network(3, [(0, 1), (1, 2), (0, 2)], {(a, b): 0.3 for a in range(3) for b in range(3) if a != b})
    assert influence_factor(tri) == pytest.approx(math.exp(-0.3))


def test_influence_factor_matches_edge_sum():
    net = generate_scale_free(300, DegreeDistribution(2.2), 8)
    rng = np.random.default_rng(1)
    net = net.with_weights(rng.uniform(0, 0.3, len(net.slot_weight)))
    deg = net.degrees
    total = sum(net.weight(u, v) / deg[v] + net.weight(v, u) / deg[u] for v, u in net.edges.tolist())
    assert influence_factor(net) == pytest.approx(math.exp(-total / net.n))


@given(st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 5)), min_size=1, max_size=20))
def test_factors_in_unit_interval(s):
    n = len(s)
    xi = adoption_factor(Network(n), AdoptionParams(np.array(s)))
    assert 0 < xi <= 1
    assert (xi == 1) == (sum(s) == 0)
