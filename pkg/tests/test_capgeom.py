import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from isacfbl.capgeom import (
    PowerMismatchError,
    RejectionBudgetExceeded,
    angle_to_bias,
    bias_region_probability,
    bias_to_angle,
    cap_area_ratio,
    cap_bias,
    cap_spec,
    maximal_bias,
    real_cap_fraction_mc,
    sample_cap,
    sample_sphere,
)
from isacfbl.specfun import DomainError


def unit_sphere_gaussian(rng, n, N):
    """Independent sampler: 2N real normals per point, normalized."""
    re = rng.normal(size=(n, N))
    im = rng.normal(size=(n, N))
    z = re + 1j * im
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_unitary(rng, N):
    A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def brute_force_bias(X, power):
    return max(abs(1 - np.vdot(u, v) / power) for u, v in itertools.product(X, X))


# -- maximal_bias


def test_singleton_has_zero_bias(rng):
    x = sample_sphere(7, 70.0, rng)
    assert maximal_bias([x], 70.0) == pytest.approx(0.0, abs=1e-14)


def test_antipodal_pair_has_bias_two(rng):
    x = sample_sphere(7, 70.0, rng)
    assert maximal_bias([x, -x], 70.0) == pytest.approx(2.0, abs=1e-14)


def test_maximal_bias_matches_brute_force(rng):
    X = sample_sphere(3, 30.0, rng, size=4)
    assert maximal_bias(X, 30.0) == pytest.approx(brute_force_bias(X, 30.0), abs=1e-14)


def test_maximal_bias_permutation_and_unitary_invariant(rng):
    N, P = 6, 60.0
    X = sample_sphere(N, P, rng, size=9)
    base = maximal_bias(X, P)
    assert maximal_bias(X[rng.permutation(9)], P) == pytest.approx(base, abs=1e-12)
    U = random_unitary(rng, N)
    assert abs(maximal_bias(X @ U.T, P) - base) < 1e-9


def test_maximal_bias_rejects_off_sphere_codeword(rng):
    X = sample_sphere(4, 40.0, rng, size=3)
    X[1] *= 1.01
    with pytest.raises(PowerMismatchError):
        maximal_bias(X, 40.0)


# -- bias <-> angle


@pytest.mark.parametrize(
    "delta, phi", [(0.0, 0.0), (2.0, math.pi), (math.sqrt(2.0), math.pi / 2)]
)
def test_bias_to_angle_examples(delta, phi):
    assert bias_to_angle(delta) == pytest.approx(phi, abs=1e-7)


def test_bias_to_angle_domain():
    with pytest.raises(DomainError):
        bias_to_angle(2.0001)
    with pytest.raises(DomainError):
        bias_to_angle(-0.1)


@settings(max_examples=300)
@given(st.floats(0.0, 2.0))
def test_chord_relation(delta):
    assert 2.0 * math.sin(bias_to_angle(delta) / 2.0) == pytest.approx(delta, abs=1e-12)
    assert angle_to_bias(bias_to_angle(delta)) == pytest.approx(delta, abs=1e-12)


# -- cap_area_ratio


@pytest.mark.parametrize("N", [1, 2, 20, 500])
def test_cap_ratio_endpoints(N):
    assert cap_area_ratio(0.0, N) == 0.0
    assert cap_area_ratio(math.pi, N) == 0.5


def test_cap_ratio_one_complex_dimension_closed_form():
    # S^1: arc of half-angle phi/2 covers (phi/2)/pi of the circle
    for phi in (0.3, 1.0, 2.5):
        assert cap_area_ratio(phi, 1) == pytest.approx(phi / (2 * math.pi), rel=1e-12)


def test_cap_ratio_real_s3_monte_carlo():
    rng = np.random.default_rng(99)
    n = 1_000_000
    w = unit_sphere_gaussian(rng, n, 2)
    hits = np.count_nonzero(w[:, 0].real >= math.cos(math.pi / 4))
    frac = hits / n
    gamma = cap_area_ratio(math.pi / 2, 2)
    se = math.sqrt(gamma * (1 - gamma) / n)
    assert abs(frac - gamma) <= 3 * se


def test_cap_ratio_monotone():
    phis = np.linspace(0.0, math.pi, 41)
    for N in (1, 3, 10, 60):
        vals = [cap_area_ratio(p, N) for p in phis]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
    for phi in (0.4, 1.5, 3.0):
        vals = [cap_area_ratio(phi, N) for N in range(1, 80)]
        assert all(b <= a + 1e-16 for a, b in zip(vals, vals[1:]))


def test_cap_spec_conventions():
    spec = cap_spec(math.sqrt(2.0), 5)
    assert spec.phi == pytest.approx(math.pi / 2)
    assert 0.0 < spec.gamma < 0.5
    assert cap_spec(2.0, 5).gamma == 0.5
    free = cap_spec(2.0, 5, unconstrained=True)
    assert free.gamma == 1.0 and free.phi == math.pi


def test_real_cap_fraction_mc_helper():
    rng = np.random.default_rng(3)
    frac, se = real_cap_fraction_mc(5, math.pi / 3, 200_000, rng)
    gamma = cap_area_ratio(math.pi / 3, 5)
    assert abs(frac - gamma) <= 3 * math.sqrt(gamma * (1 - gamma) / 200_000)
    assert se > 0


# -- sampling


def test_sample_sphere_on_sphere(rng):
    X = sample_sphere(13, 130.0, rng, size=1000)
    assert np.allclose(np.sum(np.abs(X) ** 2, axis=1), 130.0, rtol=1e-12, atol=0)
    x = sample_sphere(13, 130.0, rng)
    assert x.shape == (13,)
    assert np.sum(np.abs(x) ** 2) == pytest.approx(130.0, rel=1e-12)


def test_sample_sphere_mean_is_zero(rng):
    n = 100_000
    X = sample_sphere(4, 4.0, rng, size=n)
    # coordinates of a unit-power-per-symbol sphere point have variance 1
    bound = 4 / math.sqrt(n)
    assert np.all(np.abs(X.mean(axis=0).real) < bound)
    assert np.all(np.abs(X.mean(axis=0).imag) < bound)


def test_sample_sphere_bias_statistic_matches_independent_sampler():
    N, n = 20, 100_000
    rng_a = np.random.default_rng(11)
    rng_b = np.random.default_rng(12)
    U = sample_sphere(N, 1.0, rng_a, size=n)
    V = sample_sphere(N, 1.0, rng_a, size=n)
    bias_a = np.abs(1 - np.sum(U.conj() * V, axis=1))
    U2 = unit_sphere_gaussian(rng_b, n, N)
    V2 = unit_sphere_gaussian(rng_b, n, N)
    bias_b = np.abs(1 - np.sum(U2.conj() * V2, axis=1))
    se = math.sqrt(bias_a.var() / n + bias_b.var() / n)
    assert abs(bias_a.mean() - bias_b.mean()) < 4 * se


def test_sample_cap_predicate_holds(rng):
    N, P = 5, 50.0
    c = sample_sphere(N, P, rng)
    pts = np.array([sample_cap(c, 0.8, N, P, rng) for _ in range(10_000)])
    assert np.all(cap_bias(c, pts, P) <= 0.4)
    assert np.allclose(np.sum(np.abs(pts) ** 2, axis=1), P, rtol=1e-12)


def test_sample_cap_shrinking_cap_converges_to_center(rng):
    N, P = 8, 80.0
    c = sample_sphere(N, P, rng)
    for delta in (0.1, 1e-3, 1e-6):
        x = sample_cap(c, delta, N, P, rng)
        assert cap_bias(c, x, P) <= delta / 2
        assert np.linalg.norm(x - c) / math.sqrt(P) <= math.sqrt(delta) + 1e-12


def test_shell_and_sphere_proposals_agree(rng):
    N, P, delta = 5, 5.0, 1.2
    c = sample_sphere(N, P, rng)
    a = np.array([sample_cap(c, delta, N, P, rng) for _ in range(3000)])
    b = np.array([sample_cap(c, delta, N, P, rng, proposal="sphere") for _ in range(3000)])
    za = a @ c.conj() / P
    zb = b @ c.conj() / P
    assert stats.ks_2samp(np.abs(za), np.abs(zb)).pvalue > 1e-3
    assert stats.ks_2samp(np.angle(za), np.angle(zb)).pvalue > 1e-3
    # orthogonal part must be isotropic: its mean vanishes
    ortho = a - np.outer(za, c)
    assert np.all(np.abs(ortho.mean(axis=0)) < 5 / math.sqrt(3000))


@pytest.mark.parametrize("N, delta", [(1, 1.0), (2, 2.0), (5, 2.0), (5, 0.8), (20, 1.49)])
def test_sphere_acceptance_rate_matches_quadrature(N, delta):
    rng = np.random.default_rng(N * 100 + int(10 * delta))
    n = 1_000_000 if N <= 5 else 200_000
    W = sample_sphere(N, 1.0, rng, size=n)
    frac = np.mean(np.abs(1 - W[:, 0]) <= delta / 2)
    p = bias_region_probability(delta, N)
    assert abs(frac - p) <= 3 * math.sqrt(p * (1 - p) / n) + 1e-12


def test_bias_region_one_dimension_closed_form():
    for delta in (0.5, 1.0, 2.0):
        t = delta / 2
        assert bias_region_probability(delta, 1) == pytest.approx(2 * math.asin(t / 2) / math.pi)


def test_sample_cap_budget_exceeded(rng):
    N, P = 30, 30.0
    c = sample_sphere(N, P, rng)
    with pytest.raises(RejectionBudgetExceeded) as info:
        sample_cap(c, 0.05, N, P, rng, max_attempts=500, proposal="sphere")
    assert info.value.attempts == 500


def test_sample_cap_reports_attempts(rng):
    c = sample_sphere(3, 3.0, rng)
    x, attempts = sample_cap(c, 1.0, 3, 3.0, rng, return_attempts=True)
    assert attempts >= 1 and x.shape == (3,)


def test_sample_cap_domain(rng):
    c = sample_sphere(3, 3.0, rng)
    with pytest.raises(DomainError):
        sample_cap(c, 0.0, 3, 3.0, rng)
    with pytest.raises(DomainError):
        sample_cap(c, 2.5, 3, 3.0, rng)
    with pytest.raises(PowerMismatchError):
        sample_cap(2 * c, 1.0, 3, 3.0, rng)
