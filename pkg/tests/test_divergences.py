import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qit import divergences as dv, linalg as la, metrics
from qit.errors import QitError, TooLarge

RHO_FIG = np.array([[5, 5, 2], [5, 5, 2], [2, 2, 2]]) / 12
SIGMA_FIG = np.diag([5.0, 2.0, 1.0]) / 8
QUANTUM = ("minimal", "petz", "maximal")
seeds = st.integers(0, 2**31 - 1)


def test_divergence_of_state_with_itself_vanishes(rng):
    r = la.random_density(3, rng=rng)
    for fam in QUANTUM:
        for a in (0.0, 0.3, 0.5, 0.99995, 1.0, 1.5, 2.0, 4.0):
            if fam == "minimal" and a == 0:
                continue
            assert abs(dv.renyi_divergence(r, r, a, fam).value) < 1e-9
    assert abs(dv.dmax(r, r)) < 1e-9
    assert abs(dv.umegaki(r, r)) < 1e-12


def test_half_order_is_log_fidelity(rng):
    for _ in range(10):
        r, s = la.random_density(3, rng=rng), la.random_density(3, rng=rng)
        assert abs(dv.sandwiched(r, s, 0.5) + np.log2(metrics.fidelity(r, s))) < 1e-10


def test_three_level_ordering_up_to_two():
    for a in [0.1 * k for k in range(1, 21) if k != 10]:
        m, p, x = (dv.renyi_divergence(RHO_FIG, SIGMA_FIG, a, f).value for f in QUANTUM)
        assert m <= p + 1e-9 and p <= x + 1e-9


def test_maximal_matches_trace_formula():
    # independent evaluation of tr(sigma^1/2 (sigma^-1/2 rho sigma^-1/2)^a sigma^1/2)
    S = np.sqrt(np.diag(SIGMA_FIG))
    T = RHO_FIG / np.outer(S, S)
    w, V = np.linalg.eigh(T)
    for a in (0.5, 1.5, 2.5, 3.0):
        Q = np.trace(np.diag(S) @ V @ np.diag(np.clip(w, 0, None) ** a) @ V.T @ np.diag(S))
        assert abs(dv.maximal(RHO_FIG, SIGMA_FIG, a) - np.log2(Q) / (a - 1)) < 1e-12


def test_classical_max_divergence():
    assert dv.classical_renyi([0.5, 0.5], [0.75, 0.25], np.inf) == pytest.approx(1.0)
    assert dv.renyi_divergence(np.diag([0.5, 0.5]), np.diag([0.75, 0.25]), np.inf, "max").value == pytest.approx(1.0)


def test_support_conditions():
    r, s = np.diag([0.5, 0.5, 0]), np.diag([1.0, 0, 0])
    for fam in QUANTUM:
        res = dv.renyi_divergence(r, s, 1.5, fam)
        assert res.value == np.inf and res.support_condition == "infinite"
        assert np.isfinite(dv.renyi_divergence(r, s, 0.5, fam).value)
        assert dv.renyi_divergence(r, s, 0.5, fam).support_condition == "alpha_lt1_not_perp"
    orth = np.diag([0, 0, 1.0])
    for fam in QUANTUM:
        assert dv.renyi_divergence(orth, s, 0.5, fam).value == np.inf
    assert dv.umegaki(r, s) == np.inf
    assert dv.dmax(r, s) == np.inf


def test_q_functional_consistency(rng):
    r, s = 0.7 * la.random_density(3, rng=rng), la.random_density(3, rng=rng)
    for fam in QUANTUM:
        for a in (0.4, 0.8, 1.5, 3.0):
            res = dv.renyi_divergence(r, s, a, fam, base="e")
            assert abs(res.value - (np.log(res.q_functional) - np.log(0.7)) / (a - 1)) < 1e-10


def test_order_flags():
    assert dv.RenyiOrder(0.5, "minimal").dpi_valid
    assert not dv.RenyiOrder(0.4, "minimal").dpi_valid
    assert dv.RenyiOrder(2.0, "petz").dpi_valid
    assert not dv.RenyiOrder(2.1, "petz").dpi_valid
    with pytest.raises(QitError):
        dv.RenyiOrder(1.0, "bogus")


def test_variance_examples():
    r = la.random_density(3, rng=np.random.default_rng(0))
    assert abs(dv.divergence_variance(r, r)) < 1e-12
    p, q = np.array([0.5, 0.5]), np.array([0.75, 0.25])
    lr = np.log2(p / q)
    oracle = np.sum(p * lr**2) - np.sum(p * lr) ** 2
    assert abs(dv.divergence_variance(np.diag(p), np.diag(q)) - oracle) < 1e-12
    assert abs(dv.classical_variance(p, q) - oracle) < 1e-12


def test_tangent_slope_at_one():
    r, s = np.full((2, 2), 0.5), np.diag([0.01, 0.99])
    h = 1e-3
    slope = (dv.sandwiched(r, s, 1 + h) - dv.sandwiched(r, s, 1 - h)) / (2 * h)
    V = dv.divergence_variance(r, s, base="e")
    assert abs(slope - V / (2 * np.log(2))) < 1e-4


def test_guard_band_is_continuous(rng):
    r, s = la.random_density(3, rng=rng), la.random_density(3, rng=rng)
    for fam in QUANTUM:
        D = lambda a: dv.renyi_divergence(r, s, a, fam).value
        slope = (D(1 + 1e-3) - D(1 - 1e-3)) / 2e-3
        jump = D(1 + 1.1e-4) - D(1 + 0.9e-4)
        assert abs(jump - 0.2e-4 * slope) < 1e-8


def test_petz_taylor_control():
    # K fitted once on alpha in [0.8, 1.2] (0.294) and pinned with headroom
    K = 0.3
    r = np.full((2, 2), 0.5) * 0.9 + np.eye(2) * 0.05
    s = np.diag([0.3, 0.7])
    D, V = dv.umegaki(r, s), dv.divergence_variance(r, s, base="e")
    for a in np.linspace(0.8, 1.2, 41):
        assert abs(dv.petz(r, s, a) - D - (a - 1) * V / (2 * np.log(2))) <= K * (a - 1) ** 2 + 1e-12


def test_nussbaum_szkola_commuting_pair(rng):
    U = la.haar_unitary(3, rng)
    lam, mu = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    P, Q = dv.nussbaum_szkola(U @ np.diag(lam) @ U.conj().T, U @ np.diag(mu) @ U.conj().T)
    # eigenbases coincide up to ordering, so the support is a permutation
    support = P > 1e-12
    assert np.all(support.sum(axis=0) == 1) and np.all(support.sum(axis=1) == 1)
    assert np.all((Q > 1e-12) == support)
    np.testing.assert_allclose(np.sort(P.sum(axis=1)), np.sort(lam), atol=1e-12)
    np.testing.assert_allclose(np.sort(Q.sum(axis=0)), np.sort(mu), atol=1e-12)


def test_nussbaum_szkola_qubit_and_support(rng):
    r, s = la.random_density(2, rng=rng), la.random_density(2, rng=rng)
    P, Q = dv.nussbaum_szkola(r, s)
    assert abs(P.sum() - 1) < 1e-12 and abs(Q.sum() - 1) < 1e-12
    for a in (0.3, 0.7, 1.0, 1.5, 2.0):
        assert abs(dv.petz(r, s, a) - dv.classical_renyi(P.ravel(), Q.ravel(), a)) < 1e-9
    P, Q = dv.nussbaum_szkola(np.diag([0.5, 0.5]), np.diag([1.0, 0.0]))
    assert np.any((P > 0) & (Q == 0))


def _sorted_pairs(P, Q):
    pairs = np.round(np.stack([P.ravel(), Q.ravel()], axis=1), 12)
    return pairs[np.lexsort(pairs.T[::-1])]


def test_nussbaum_szkola_tensor_products(rng):
    r, s, t, w = (la.random_density(2, rng=rng) for _ in range(4))
    P, Q = dv.nussbaum_szkola(np.kron(r, t), np.kron(s, w))
    P1, Q1 = dv.nussbaum_szkola(r, s)
    P2, Q2 = dv.nussbaum_szkola(t, w)
    Pp = np.einsum("ab,cd->acbd", P1, P2)
    Qp = np.einsum("ab,cd->acbd", Q1, Q2)
    np.testing.assert_allclose(_sorted_pairs(P, Q), _sorted_pairs(Pp, Qp), atol=1e-11)


def test_pinched_commuting_equals_classical(rng):
    p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    for n in (1, 2, 3):
        for a in (0.5, 2.0):
            expected = dv.classical_renyi(p, q, a)
            assert abs(dv.pinched_divergence(np.diag(p), np.diag(q), a, n) - expected) < 1e-10


def test_pinched_max_divergence_bounds(rng):
    r, s = la.random_density(3, rng=rng), la.random_density(3, rng=rng)
    pinched = dv.pinched_divergence(r, s, np.inf)
    full = dv.dmax(r, s)
    assert pinched <= full + 1e-10
    assert full <= pinched + np.log2(dv.spec_count(s)) + 1e-10


def test_pinched_approaches_sandwiched_from_below():
    rng = np.random.default_rng(7)
    r, s = la.random_density(2, rng=rng), la.random_density(2, rng=rng)
    target = dv.sandwiched(r, s, 2.0)
    prev = -np.inf
    for n in (1, 2, 4, 8):
        val = dv.pinched_divergence(r, s, 2.0, n)
        assert val >= prev - 1e-10
        assert val <= target + 1e-10
        assert target - val <= 2 * np.log2(dv.spec_count(s, n)) / n + 1e-10
        prev = val
    with pytest.raises(TooLarge):
        dv.pinched_divergence(r, s, 2.0, 13)


@settings(max_examples=25, deadline=None)
@given(seed=seeds, d=st.integers(2, 4))
def test_monotone_in_order_and_minimal_below_petz(seed, d):
    rng = np.random.default_rng(seed)
    r, s = la.random_density(d, rng=rng), la.random_density(d, rng=rng)
    grid = [0.3, 0.5, 0.7, 0.9, 1.0, 1.2, 1.5, 2.0, 3.0]
    for fam in QUANTUM:
        vals = [dv.renyi_divergence(r, s, a, fam).value for a in grid]
        assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    for a in grid:
        assert dv.sandwiched(r, s, a) <= dv.petz(r, s, a) + 1e-9
    assert dv.sandwiched(r, s, 50.0) <= dv.dmax(r, s) + 1e-9


@settings(max_examples=25, deadline=None)
@given(seed=seeds, alpha=st.sampled_from([0.5, 0.8, 1.0, 1.7, 2.0, 4.0]))
def test_data_processing_random_channels(seed, alpha):
    rng = np.random.default_rng(seed)
    r, s = la.random_density(3, rng=rng), la.random_density(3, rng=rng)
    ch = la.sample("cptp", (3, 2), seed=seed, env=2)
    assert dv.sandwiched(ch(r), ch(s), alpha) <= dv.sandwiched(r, s, alpha) + 1e-8
    if alpha <= 2:
        assert dv.petz(ch(r), ch(s), alpha) <= dv.petz(r, s, alpha) + 1e-8
        assert dv.maximal(ch(r), ch(s), alpha) <= dv.maximal(r, s, alpha) + 1e-8


@settings(max_examples=20, deadline=None)
@given(seed=seeds, alpha=st.sampled_from([0.3, 0.6, 1.0, 1.5, 2.5]))
def test_additivity_and_normalization(seed, alpha):
    rng = np.random.default_rng(seed)
    r, s, t, w = (la.random_density(2, rng=rng) for _ in range(4))
    a, b = rng.uniform(0.2, 1.0), rng.uniform(0.2, 3.0)
    for fam in QUANTUM:
        D = lambda x, y: dv.renyi_divergence(x, y, alpha, fam).value
        assert abs(D(np.kron(r, t), np.kron(s, w)) - D(r, s) - D(t, w)) < 1e-9
        assert abs(D(a * r, b * s) - D(r, s) - np.log2(a) + np.log2(b)) < 1e-9


@settings(max_examples=20, deadline=None)
@given(seed=seeds, alpha=st.sampled_from([0.5, 0.75, 1.0, 2.0, 5.0]))
def test_dominance(seed, alpha):
    rng = np.random.default_rng(seed)
    r, s = la.random_density(3, rng=rng), la.random_density(3, rng=rng)
    bigger = s + 0.5 * la.random_density(3, rng=rng)
    assert dv.sandwiched(r, s, alpha) >= dv.sandwiched(r, bigger, alpha) - 1e-9


def test_lieb_ando_joint_concavity_and_convexity(rng):
    def f(A, B, K, a):
        return np.trace(la.mpow(A, a) @ K @ la.mpow(B, 1 - a) @ K.conj().T).real

    for _ in range(30):
        K = la.ginibre(3, 3, rng)
        A1, A2, B1, B2 = (la.random_density(3, rng=rng) for _ in range(4))
        t = rng.uniform()
        A, B = t * A1 + (1 - t) * A2, t * B1 + (1 - t) * B2
        a = rng.uniform(0.05, 0.95)
        assert f(A, B, K, a) >= t * f(A1, B1, K, a) + (1 - t) * f(A2, B2, K, a) - 1e-9
        a = rng.uniform(1.05, 1.95)
        assert f(A, B, K, a) <= t * f(A1, B1, K, a) + (1 - t) * f(A2, B2, K, a) + 1e-9


def test_relative_entropy_joint_convexity(rng):
    for _ in range(30):
        r1, r2, s1, s2 = (la.random_density(3, rng=rng) for _ in range(4))
        t = rng.uniform()
        mixed = dv.umegaki(t * r1 + (1 - t) * r2, t * s1 + (1 - t) * s2)
        assert mixed <= t * dv.umegaki(r1, s1) + (1 - t) * dv.umegaki(r2, s2) + 1e-10


def test_petz_order_zero_limit():
    r, s = np.diag([0.6, 0.4, 0.0]), np.diag([0.2, 0.3, 0.5])
    assert abs(dv.petz(r, s, 0.0) + np.log2(0.5)) < 1e-12
