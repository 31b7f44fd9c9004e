import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from christoffel_dr import (
    BasisSpec,
    OutcomeDistribution,
    QuadratureRule,
    accumulate_moments,
    factorize,
    gauss_rule,
    gram_from_moments,
    normalize,
    rule_mean,
    ygram_from_moments,
)
from christoffel_dr.quadrature import eigvec_weights
from conftest import FAMILIES, canonical, matched_sample


def rule_for(spec, pts, weights=None):
    m = accumulate_moments(spec, pts, weights)
    g = gram_from_moments(spec, m)
    return gauss_rule(g, ygram_from_moments(spec, m), factorize(g))


def test_three_point_rule():
    r = rule_for(canonical("chebyshev", 2), [-1.0, 0.0, 1.0])
    np.testing.assert_allclose(r.nodes, [-np.sqrt(2 / 3), np.sqrt(2 / 3)], atol=1e-14)
    np.testing.assert_allclose(r.weights, [1.5, 1.5], atol=1e-14)
    assert r.total_mass == pytest.approx(3.0, abs=1e-14)
    assert rule_mean(normalize(r)) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("family", FAMILIES)
def test_single_node_is_weighted_mean(family):
    pts = np.array([0.3, 1.1, 2.0])
    w = np.array([1.0, 2.0, 0.5])
    r = rule_for(BasisSpec.fit(family, 1, pts), pts, w)
    assert r.nodes[0] == pytest.approx(w @ pts / w.sum(), rel=1e-13)
    assert r.weights[0] == pytest.approx(3.5, rel=1e-13)


@pytest.mark.parametrize("family", FAMILIES)
def test_d_atom_measure_is_its_own_rule(family, rng):
    pts = np.sort(matched_sample(family, rng, 3))
    w = rng.uniform(0.5, 2, 3)
    r = rule_for(BasisSpec.fit(family, 3, pts), pts, w)
    np.testing.assert_allclose(r.nodes, pts, rtol=1e-8, atol=1e-8)
    np.testing.assert_allclose(r.weights, w, rtol=1e-8)


def test_normalize_examples():
    spec = canonical("chebyshev", 2)
    def dist(w):
        w = np.asarray(w, dtype=float)
        return normalize(QuadratureRule(spec, np.arange(len(w), dtype=float), w, np.eye(len(w))))
    d = dist([1.5, 1.5])
    np.testing.assert_allclose(d.probabilities, [0.5, 0.5])
    assert d.total_mass == 3.0
    np.testing.assert_allclose(dist([3.0]).probabilities, [1.0])
    np.testing.assert_allclose(dist([1.0, 3.0]).probabilities, [0.25, 0.75])


def test_rule_mean_symmetric():
    assert rule_mean(OutcomeDistribution(np.array([-2.0, 2.0]), np.array([0.5, 0.5]), 1.0)) == 0.0


def test_rule_mean_matches_weighted_mean(rng):
    pts = rng.uniform(-1, 1, 100)
    w = rng.uniform(0, 1, 100)
    r = rule_for(BasisSpec.fit("chebyshev", 6, pts), pts, w)
    assert rule_mean(normalize(r)) == pytest.approx(w @ pts / w.sum(), rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FAMILIES), st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_gauss_rule_invariants(family, d, seed):
    r = np.random.default_rng(seed)
    n = int(r.integers(5 * d, 500))
    pts = matched_sample(family, r, n)
    w = r.uniform(0.1, 2.0, n)
    spec = BasisSpec.fit(family, d, pts)
    rule = rule_for(spec, pts, w)

    # ascending, positive, inside the support hull
    assert np.all(np.diff(rule.nodes) > 0)
    assert np.all(rule.weights > 0)
    span = pts.max() - pts.min()
    assert rule.nodes.min() >= pts.min() - 1e-9 * span and rule.nodes.max() <= pts.max() + 1e-9 * span
    # mass and weight consistency
    assert rule.total_mass == pytest.approx(w.sum(), rel=1e-8)
    np.testing.assert_allclose(eigvec_weights(rule), rule.weights, rtol=1e-8)
    # exactness on canonical powers up to 2d - 1
    u, un = spec.map.forward(pts), spec.map.forward(rule.nodes)
    for p in range(2 * d):
        scale = w @ np.abs(u) ** p
        assert abs(rule.weights @ un**p - w @ u**p) <= 1e-8 * scale
    # probabilities
    dist = normalize(rule)
    assert abs(dist.probabilities.sum() - 1) < 1e-12
    assert np.all((dist.probabilities > 0) & (dist.probabilities <= 1))


def test_eigvec_sign_convention(rng):
    pts = rng.uniform(-1, 1, 80)
    rule = rule_for(BasisSpec.fit("legendre", 5, pts), pts)
    assert np.all(np.asarray(rule.eigvecs[0], dtype=float) >= 0)


def test_size_mismatch_rejected(rng):
    pts = rng.uniform(-1, 1, 40)
    spec = BasisSpec.fit("chebyshev", 3, pts)
    m = accumulate_moments(spec, pts)
    g = gram_from_moments(spec, m)
    with pytest.raises(ValueError):
        gauss_rule(g, np.eye(2), factorize(g))
