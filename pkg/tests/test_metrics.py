import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qit import linalg as la, metrics as m
from qit.errors import NonHermitian

seeds = st.integers(0, 2**31 - 1)
Z = np.diag([1.0, -1.0])


def test_schatten_examples(rng):
    for p in (0.5, 1, 2, 3.5):
        assert abs(m.schatten_norm(np.eye(3), p) - 3 ** (1 / p)) < 1e-12
    assert m.schatten_norm(np.array([[0, 1], [1, 0]]), np.inf) == pytest.approx(1.0)
    M = la.random_density(4, rng=rng) * 0.3
    assert abs(m.schatten_norm(M, 1) - np.trace(M).real) < 1e-14


def test_dual_norm_plus():
    w = la.random_density(3, rng=np.random.default_rng(0)) * 0.4
    assert abs(m.dual_norm_plus(w) - 0.4) < 1e-14
    assert m.dual_norm_plus(np.diag([1.0, -1.0])) == pytest.approx(1.0)
    assert m.dual_norm_plus(np.zeros((2, 2))) == 0.0
    with pytest.raises(NonHermitian):
        m.dual_norm_plus(np.array([[0, 1], [0, 0]]))


def test_trace_distance_examples(rng):
    r = la.random_density(3, rng=rng)
    assert m.trace_distance(r, r) == 0.0
    assert m.trace_distance(np.eye(2) / 2, np.diag([1.0, 0])) == pytest.approx(0.5)
    assert m.trace_distance(r, 0.7 * r) == pytest.approx(0.3)


def test_trace_distance_uses_hat_extension(rng):
    a, b = 0.6 * la.random_density(3, rng=rng), 0.9 * la.random_density(3, rng=rng)
    hat_value = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(m.hat(a) - m.hat(b))))
    assert abs(m.trace_distance(a, b) - hat_value) < 1e-14


def test_fidelity_examples(rng):
    u, v = la.random_pure_vector(3, rng), la.random_pure_vector(3, rng)
    assert abs(m.fidelity(np.outer(u, u.conj()), np.outer(v, v.conj())) - abs(np.vdot(u, v)) ** 2) < 1e-12
    r = la.random_density(3, rng=rng)
    assert abs(m.fidelity(r, r) - 1) < 1e-12
    p, q = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    assert abs(m.fidelity(np.diag(p), np.diag(q)) - np.sum(np.sqrt(p * q)) ** 2) < 1e-14


def test_generalized_fidelity_two_paths(rng):
    a, b = 0.5 * la.random_density(3, rng=rng), 0.8 * la.random_density(3, rng=rng)
    assert abs(m.gen_fidelity(a, b, check=True) - m.fidelity(m.hat(a), m.hat(b))) < 1e-10


def test_purified_distance_examples(rng):
    r = la.random_density(3, rng=rng)
    assert m.purified_distance(r, r) == 0.0
    assert m.purified_distance(np.eye(2) / 2, np.diag([1.0, 0])) == pytest.approx(1 / np.sqrt(2))


def test_fuchs_van_de_graaf_on_random_pairs(rng):
    for _ in range(100):
        d = int(rng.integers(2, 5))
        a = rng.uniform(0.3, 1) * la.random_density(d, rng=rng)
        b = rng.uniform(0.3, 1) * la.random_density(d, rng=rng)
        lo, hi = m.fvdg_bounds(m.trace_distance(a, b))
        P = m.purified_distance(a, b)
        assert lo - 1e-12 <= P <= hi + 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d=st.integers(2, 4))
def test_metric_axioms(seed, d):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.uniform(0.2, 1) * la.random_density(d, rng=rng) for _ in range(3))
    for dist in (m.trace_distance, m.purified_distance):
        assert dist(a, b) == dist(b, a)
        assert dist(a, c) <= dist(a, b) + dist(b, c) + 1e-10
        assert 0 <= dist(a, b) <= 1 + 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d_in=st.integers(2, 3), d_out=st.integers(2, 4))
def test_distances_contract_under_trace_non_increasing_maps(seed, d_in, d_out):
    rng = np.random.default_rng(seed)
    K = la.random_kraus(d_in, d_out, 2, rng)
    shrink = rng.uniform(0.5, 1.0)
    E = lambda X: shrink * sum(k @ X @ k.conj().T for k in K)
    a = rng.uniform(0.3, 1) * la.random_density(d_in, rng=rng)
    b = rng.uniform(0.3, 1) * la.random_density(d_in, rng=rng)
    assert m.trace_distance(E(a), E(b)) <= m.trace_distance(a, b) + 1e-9
    assert m.purified_distance(E(a), E(b)) <= m.purified_distance(a, b) + 1e-9


def test_uhlmann_purification_attains_fidelity(rng):
    for d in (2, 3, 4):
        r, t = la.random_density(d, rng=rng), la.random_density(d, rng=rng)
        omega = la.max_entangled_vector(d)
        psi = np.kron(la.sqrtm_psd(r), np.eye(d)) @ omega
        # optimal unitary on the purifying system from the polar part of sqrt(t) sqrt(r)
        W, _, Vh = np.linalg.svd(la.sqrtm_psd(t) @ la.sqrtm_psd(r))
        U = (W @ Vh).conj().T.T
        phi = np.kron(la.sqrtm_psd(t), U.conj().T) @ omega
        overlap = abs(np.vdot(psi, phi)) ** 2
        assert abs(overlap - m.fidelity(r, t)) < 1e-9
        assert np.allclose(la.partial_trace(np.outer(phi, phi.conj()), (d, d), [0]), t, atol=1e-12)


def test_pinching_fidelity_exchange_for_pure_states(rng):
    H = np.diag([1.0, 1.0, 2.0])
    for _ in range(20):
        r, t = la.random_pure(3, rng), la.random_pure(3, rng)
        assert abs(m.fidelity(la.pinch(H, r), t) - m.fidelity(r, la.pinch(H, t))) < 1e-10


def test_pinching_fidelity_exchange_fails_for_mixed_states():
    # both sides are bounded by F(P(rho), P(tau)) but need not agree
    rng = np.random.default_rng(1)
    r, t = la.random_density(2, rng=rng), la.random_density(2, rng=rng)
    left, right = m.fidelity(la.pinch(Z, r), t), m.fidelity(r, la.pinch(Z, t))
    both = m.fidelity(la.pinch(Z, r), la.pinch(Z, t))
    assert abs(left - right) > 1e-2
    assert max(left, right) <= both + 1e-12


def _schatten_q(B, q):
    w = np.linalg.eigvalsh(B)
    return float(np.sum(w**q) ** (1 / q))


def test_hoelder_and_reverse_hoelder(rng):
    for _ in range(50):
        d = int(rng.integers(2, 5))
        L, K = la.ginibre(d, d, rng), la.ginibre(d, d, rng)
        p = rng.uniform(1.1, 4)
        q = p / (p - 1)
        assert abs(np.trace(L @ K)) <= m.schatten_norm(L, p) * m.schatten_norm(K, q) + 1e-10
        A, B = la.random_density(d, rng=rng), la.random_density(d, rng=rng)
        p = rng.uniform(0.1, 0.9)
        q = p / (p - 1)
        assert np.trace(A @ B).real >= m.schatten_norm(A, p) * _schatten_q(B, q) - 1e-10


def test_variational_norm_optimizer(rng):
    M = la.random_density(4, rng=rng)
    for p in (1.5, 2.0, 3.0):
        q = p / (p - 1)
        norm = m.schatten_norm(M, p)
        N = la.mpow(M, p - 1) / norm ** (p - 1)
        assert abs(m.schatten_norm(N, q) - 1) < 1e-12
        assert abs(np.trace(M @ N).real - norm) < 1e-12
